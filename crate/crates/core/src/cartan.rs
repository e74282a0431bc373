//! Vector fields as left-acting derivations, the fields `Q` and `E` on a ΠT
//! chart, and the Lie and inner lifts.

use std::fmt;

use crate::chart::{Chart, ChartKind, Parity, Role};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::poly::Var;

/// `V = Σ_a V^a ∂_a`, homogeneous of parity `parity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VField {
    chart: Chart,
    coeffs: Vec<Expr>,
    parity: Parity,
}

impl VField {
    /// Checks `parity(V^a) = parity(V) + parity(z^a)` for every nonzero component.
    pub fn new(chart: &Chart, coeffs: Vec<Expr>, parity: Parity) -> Result<VField> {
        if coeffs.len() != chart.n_generators() {
            return Err(Error::InvalidArgument(format!(
                "vector field needs {} components, got {}",
                chart.n_generators(),
                coeffs.len()
            )));
        }
        let mut cs = Vec::with_capacity(coeffs.len());
        for (a, c) in coeffs.into_iter().enumerate() {
            let c = c.embed(chart)?;
            if !c.is_zero() {
                let want = parity + chart.gen_parity(a as u16);
                match c.parity() {
                    Some(p) if p == want => {}
                    Some(_) => {
                        return Err(Error::ParityMismatch(format!(
                            "component along `{}` must be {want}",
                            chart.generator(a as u16).name
                        )))
                    }
                    None => {
                        return Err(Error::MixedParity(format!(
                            "component along `{}`",
                            chart.generator(a as u16).name
                        )))
                    }
                }
            }
            cs.push(c);
        }
        Ok(VField {
            chart: chart.clone(),
            coeffs: cs,
            parity,
        })
    }

    /// Infers the parity from the first nonzero component (even if none).
    pub fn infer(chart: &Chart, coeffs: Vec<Expr>) -> Result<VField> {
        let mut parity = Parity::Even;
        for (a, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let p = c
                .parity()
                .ok_or_else(|| Error::MixedParity("vector field component".into()))?;
            parity = p + chart.gen_parity(a as u16);
            break;
        }
        VField::new(chart, coeffs, parity)
    }

    /// Builds a field from `(generator, coefficient)` pairs; others are zero.
    pub fn from_pairs(chart: &Chart, pairs: &[(u16, Expr)]) -> Result<VField> {
        let mut coeffs = vec![Expr::zero(chart); chart.n_generators()];
        for (a, c) in pairs {
            let slot = coeffs
                .get_mut(*a as usize)
                .ok_or_else(|| Error::InvalidArgument("generator index".into()))?;
            *slot = &*slot + c;
        }
        VField::infer(chart, coeffs)
    }

    pub fn zero(chart: &Chart, parity: Parity) -> VField {
        VField {
            chart: chart.clone(),
            coeffs: vec![Expr::zero(chart); chart.n_generators()],
            parity,
        }
    }

    /// The coordinate field `∂_a`.
    pub fn partial(chart: &Chart, a: u16) -> VField {
        let mut v = VField::zero(chart, chart.gen_parity(a));
        v.coeffs[a as usize] = Expr::one(chart);
        v
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// `V(z^a)`.
    pub fn coeff(&self, a: u16) -> &Expr {
        &self.coeffs[a as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    /// Moves the field to a chart extending its own; new components are zero.
    pub fn embed(&self, chart: &Chart) -> Result<VField> {
        if !chart.extends(&self.chart) {
            return Err(Error::ChartMismatch);
        }
        let mut coeffs = Vec::with_capacity(chart.n_generators());
        for c in &self.coeffs {
            coeffs.push(c.embed(chart)?);
        }
        coeffs.resize(chart.n_generators(), Expr::zero(chart));
        Ok(VField {
            chart: chart.clone(),
            coeffs,
            parity: self.parity,
        })
    }

    /// `Σ_a V^a ∂_a f`.
    pub fn apply(&self, f: &Expr) -> Result<Expr> {
        let chart = self.chart.join(f.chart())?;
        let f = f.embed(&chart)?;
        let mut out = Expr::zero(&chart);
        for (a, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() || !f.contains_gen(a as u16) {
                continue;
            }
            out = out.try_add(&c.try_mul(&f.left_deriv(a as u16))?)?;
        }
        Ok(out)
    }

    fn aligned(&self, o: &VField) -> Result<(VField, VField)> {
        let chart = self.chart.join(&o.chart)?;
        Ok((self.embed(&chart)?, o.embed(&chart)?))
    }

    /// `[V, W] = V∘W − (−1)^{VW} W∘V`, with `[V,W](z^a) = V(W^a) ∓ W(V^a)`.
    pub fn commutator(&self, o: &VField) -> Result<VField> {
        let (v, w) = self.aligned(o)?;
        let neg = v.parity.sign_with(w.parity);
        let mut coeffs = Vec::with_capacity(v.coeffs.len());
        for a in 0..v.coeffs.len() {
            let vw = v.apply(&w.coeffs[a])?;
            let wv = w.apply(&v.coeffs[a])?;
            coeffs.push(if neg { &vw + &wv } else { &vw - &wv });
        }
        VField::new(&v.chart, coeffs, v.parity + w.parity)
    }

    pub fn try_add(&self, o: &VField) -> Result<VField> {
        let (v, w) = self.aligned(o)?;
        if v.parity != w.parity && !v.is_zero() && !w.is_zero() {
            return Err(Error::MixedParity("sum of vector fields".into()));
        }
        let parity = if v.is_zero() { w.parity } else { v.parity };
        let coeffs = v.coeffs.iter().zip(&w.coeffs).map(|(a, b)| a + b).collect();
        Ok(VField {
            chart: v.chart,
            coeffs,
            parity,
        })
    }

    pub fn try_sub(&self, o: &VField) -> Result<VField> {
        self.try_add(&o.neg())
    }

    pub fn neg(&self) -> VField {
        VField {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            parity: self.parity,
        }
    }

    /// `f·V`, with `f` homogeneous.
    pub fn mul_left(&self, f: &Expr) -> Result<VField> {
        let pf = f.homogeneous("scalar factor of a vector field")?;
        let chart = self.chart.join(f.chart())?;
        let v = self.embed(&chart)?;
        let mut coeffs = Vec::with_capacity(v.coeffs.len());
        for c in &v.coeffs {
            coeffs.push(f.try_mul(c)?);
        }
        Ok(VField {
            chart,
            coeffs,
            parity: v.parity + pf,
        })
    }

    /// Drops generators outside `chart` (their components must vanish).
    pub fn restrict(&self, chart: &Chart) -> Result<VField> {
        let n = chart.n_generators();
        if self.coeffs[n.min(self.coeffs.len())..]
            .iter()
            .any(|c| !c.is_zero())
        {
            return Err(Error::InvalidArgument(
                "field has components outside the chart".into(),
            ));
        }
        let coeffs = self.coeffs[..n]
            .iter()
            .map(|c| c.restrict(chart))
            .collect::<Result<_>>()?;
        Ok(VField {
            chart: chart.clone(),
            coeffs,
            parity: self.parity,
        })
    }
}

impl fmt::Display for VField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(a, c)| format!("{}: {c}", self.chart.generator(a as u16).name))
            .collect();
        write!(f, "field[{}]", parts.join(", "))
    }
}

fn require_pit(chart: &Chart) -> Result<()> {
    if chart.kind() == ChartKind::Pit {
        Ok(())
    } else {
        Err(Error::NotPit)
    }
}

fn fibers(chart: &Chart) -> impl Iterator<Item = (u16, u16)> + '_ {
    chart
        .generators()
        .iter()
        .enumerate()
        .filter_map(|(j, g)| match g.role {
            Role::Fiber(b) => Some((b, j as u16)),
            _ => None,
        })
}

/// `Q = ψ^i ∂_{x^i} + y^α ∂_{ξ^α}`.
pub fn de_rham(chart: &Chart) -> Result<VField> {
    require_pit(chart)?;
    let mut v = VField::zero(chart, Parity::Odd);
    for (b, j) in fibers(chart) {
        v.coeffs[b as usize] = Expr::generator(chart, j);
    }
    Ok(v)
}

/// `E = ψ^i ∂_{ψ^i} + y^α ∂_{y^α}`.
pub fn euler(chart: &Chart) -> Result<VField> {
    require_pit(chart)?;
    let mut v = VField::zero(chart, Parity::Even);
    for (_, j) in fibers(chart) {
        v.coeffs[j as usize] = Expr::generator(chart, j);
    }
    Ok(v)
}

/// Fiber degree `k` with `E(f) = k·f`; `None` if `f` is not homogeneous.
pub fn degree_of(f: &Expr) -> Option<i64> {
    let chart = f.chart();
    let mut fiber_mask = 0u64;
    let mut even_fibers = Vec::new();
    for (b, j) in fibers(chart) {
        let _ = b;
        if chart.gen_parity(j).is_odd() {
            fiber_mask |= 1u64 << j;
        } else {
            even_fibers.push(Var::Gen(j));
        }
    }
    let deg = |p: &crate::poly::Poly| -> Option<i64> {
        let mut d = None;
        for (m, _) in p.terms() {
            let k = (m.odd_mask() & fiber_mask).count_ones() as i64
                + even_fibers
                    .iter()
                    .map(|v| m.exponent(v) as i64)
                    .sum::<i64>();
            match d {
                None => d = Some(k),
                Some(d0) if d0 != k => return None,
                _ => {}
            }
        }
        Some(d.unwrap_or(0))
    };
    if f.is_zero() {
        return Some(0);
    }
    Some(deg(f.num())? - deg(f.den())?)
}

fn base_pit(v: &VField) -> Result<Chart> {
    if v.chart.kind() != ChartKind::Base {
        return Err(Error::InvalidArgument(
            "lifts take a field on a base chart".into(),
        ));
    }
    v.chart.pit()
}

/// `V↑ = V(z^b)∂_b + (−1)^V Q(V(z^b)) ∂_{dz^b}`.
pub fn lift_lie(v: &VField) -> Result<VField> {
    let pit = base_pit(v)?;
    let q = de_rham(&pit)?;
    let mut out = VField::zero(&pit, v.parity);
    for b in 0..v.chart.n_generators() as u16 {
        let c = v.coeff(b).embed(&pit)?;
        let fib = pit.fiber_of(b).expect("ΠT chart has a fiber per generator");
        let qc = q.apply(&c)?;
        out.coeffs[fib as usize] = if v.parity.is_odd() { -qc } else { qc };
        out.coeffs[b as usize] = c;
    }
    Ok(out)
}

/// `V↓ = V(z^b) ∂_{dz^b}`, of parity `V + 1`.
pub fn lift_inner(v: &VField) -> Result<VField> {
    let pit = base_pit(v)?;
    let mut out = VField::zero(&pit, v.parity.flip());
    for b in 0..v.chart.n_generators() as u16 {
        let fib = pit.fiber_of(b).expect("ΠT chart has a fiber per generator");
        out.coeffs[fib as usize] = v.coeff(b).embed(&pit)?;
    }
    Ok(out)
}
