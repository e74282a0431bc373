//! Even and odd symplectic structures on ΠTM, Hamiltonian vector fields,
//! graded Poisson (Buttin) brackets and superflows.

use std::fmt;

use crate::cartan::{de_rham, degree_of, lift_inner, lift_lie, VField};
use crate::chart::{Chart, ChartKind, Parity, Symbol};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::poly::Var;
use crate::scalar::Scalar;

/// A verified symplectic form with constant fiber coefficients.
#[derive(Clone, Debug)]
pub struct SympStructure {
    base: Chart,
    pit: Chart,
    omega: Expr,
    kind: Parity,
    coeffs: Vec<Vec<Scalar>>,
    // inverse of the linear system for ζ of parity 0 and 1
    solve: [Vec<Vec<Scalar>>; 2],
}

/// Outcome of [`verify_symplectic`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SympReport {
    pub parity: bool,
    pub closed: bool,
    pub degree_two: bool,
    pub dimension: bool,
    pub nondegenerate: bool,
    /// Set when the fiber coefficient matrix is not constant.
    pub unsupported: Option<String>,
    pub witnesses: Vec<String>,
}

impl SympReport {
    pub fn passed(&self) -> bool {
        self.parity
            && self.closed
            && self.degree_two
            && self.dimension
            && self.nondegenerate
            && self.unsupported.is_none()
    }
}

impl fmt::Display for SympReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "pass" } else { "fail" };
        write!(
            f,
            "parity {}, closed {}, degree 2 {}, dimension {}, nondegenerate {}",
            yn(self.parity),
            yn(self.closed),
            yn(self.degree_two),
            yn(self.dimension),
            yn(self.nondegenerate)
        )?;
        if let Some(u) = &self.unsupported {
            write!(f, "; unsupported: {u}")?;
        }
        for w in &self.witnesses {
            write!(f, "; {w}")?;
        }
        Ok(())
    }
}

/// `K[b][a] = ∂_{φ_a} ∂_{φ_b} Ω`, or a description of the first non-constant entry.
fn fiber_matrix(omega: &Expr) -> std::result::Result<Vec<Vec<Scalar>>, String> {
    let pit = omega.chart();
    let n = pit.base_len();
    let mut k = vec![vec![Scalar::zero(); n]; n];
    for b in 0..n as u16 {
        let db = omega.left_deriv(pit.fiber_of(b).unwrap());
        for a in 0..n as u16 {
            let e = db.left_deriv(pit.fiber_of(a).unwrap());
            match e.as_constant() {
                Some(c) => k[b as usize][a as usize] = c,
                None => {
                    return Err(format!(
                        "coefficient of {}·{} is `{e}`",
                        pit.generator(pit.fiber_of(a).unwrap()).name,
                        pit.generator(pit.fiber_of(b).unwrap()).name
                    ))
                }
            }
        }
    }
    Ok(k)
}

/// Gauss–Jordan inverse over ℚ(i).
pub(crate) fn invert_scalars(m: &[Vec<Scalar>]) -> Option<Vec<Vec<Scalar>>> {
    let n = m.len();
    let mut a: Vec<Vec<Scalar>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    Scalar::one()
                } else {
                    Scalar::zero()
                }
            }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = a[col][col].inv()?;
        for v in a[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..2 * n {
                    let d = &f * &a[col][c];
                    a[r][c] -= &d;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn rank(m: &[Vec<Scalar>]) -> usize {
    let mut a = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].inv().unwrap();
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = &a[i][c] * &inv;
                for j in 0..cols {
                    let d = &f * &a[r][j];
                    a[i][j] -= &d;
                }
            }
        }
        r += 1;
    }
    r
}

/// Checks parity, closedness, fiber degree, dimension and non-degeneracy of `Ω`.
pub fn verify_symplectic(omega: &Expr, kind: Parity) -> Result<SympReport> {
    let pit = omega.chart();
    if pit.kind() != ChartKind::Pit {
        return Err(Error::NotPit);
    }
    let mut w = Vec::new();
    let parity = omega.parity() == Some(kind) || omega.is_zero() && kind == Parity::Even;
    if !parity {
        w.push(format!("parity of Ω is not {kind}"));
    }
    let q_omega = de_rham(pit)?.apply(omega)?;
    let closed = q_omega.is_zero();
    if !closed {
        w.push(format!("Q(Ω) = {q_omega}"));
    }
    let degree_two = degree_of(omega) == Some(2);
    if !degree_two {
        w.push("Ω is not of fiber degree 2".into());
    }
    let (ne, no) = (pit.base_even_count(), pit.base_odd_count());
    let dimension = match kind {
        Parity::Even => ne % 2 == 0,
        Parity::Odd => ne == no,
    };
    if !dimension {
        w.push(format!(
            "dimension {ne}|{no} does not admit a {kind} structure"
        ));
    }
    let (nondegenerate, unsupported) = match fiber_matrix(omega) {
        Ok(k) => {
            let r = rank(&k);
            if r < k.len() {
                w.push(format!("coefficient matrix has rank {r} < {}", k.len()));
            }
            (r == k.len(), None)
        }
        Err(e) => (false, Some(format!("non-constant fiber coefficients: {e}"))),
    };
    Ok(SympReport {
        parity,
        closed,
        degree_two,
        dimension,
        nondegenerate,
        unsupported,
        witnesses: w,
    })
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }
}

impl SympStructure {
    pub fn new(omega: &Expr, kind: Parity) -> Result<SympStructure> {
        let report = verify_symplectic(omega, kind)?;
        if let Some(u) = report.unsupported {
            return Err(Error::Unsupported(u));
        }
        if !report.passed() {
            return Err(Error::InvalidArgument(format!(
                "not a symplectic form: {report}"
            )));
        }
        let pit = omega.chart().clone();
        let coeffs = fiber_matrix(omega).map_err(Error::Unsupported)?;
        let n = coeffs.len();
        let mut solve: [Vec<Vec<Scalar>>; 2] = [Vec::new(), Vec::new()];
        for zp in 0..2u32 {
            let mut m = vec![vec![Scalar::zero(); n]; n];
            for a in 0..n {
                let pa = pit.gen_parity(pit.fiber_of(a as u16).unwrap()).bit();
                for b in 0..n {
                    let pb = pit.gen_parity(b as u16).bit();
                    let k = &coeffs[b][a];
                    m[a][b] = if (zp + pb) * pa % 2 == 1 {
                        -k
                    } else {
                        k.clone()
                    };
                }
            }
            solve[zp as usize] = invert_scalars(&m)
                .ok_or_else(|| Error::Internal("singular Hamiltonian system".into()))?;
        }
        let base = pit.base_chart();
        Ok(SympStructure {
            base,
            pit,
            omega: omega.clone(),
            kind,
            coeffs,
            solve,
        })
    }

    /// `Ω = ψ^i π_i − ½ g_α (y^α)²` on `(x…, p…; ξ…)`.
    pub fn canonical_even(m: usize, n: usize, signature: &[i64]) -> Result<SympStructure> {
        let mut even = indexed("x", m);
        even.extend(indexed("p", m));
        let base = Chart::new(&even, &indexed("xi", n), &[])?;
        SympStructure::canonical_even_on(&base, signature)
    }

    /// Canonical even form on a base whose even generators are `x…` then `p…`
    /// and whose odd generators carry the diagonal metric `signature`.
    pub fn canonical_even_on(base: &Chart, signature: &[i64]) -> Result<SympStructure> {
        let (ne, no) = (base.base_even_count(), base.base_odd_count());
        if base.kind() != ChartKind::Base || ne % 2 != 0 {
            return Err(Error::InvalidArgument(
                "canonical even form needs a 2m|n base".into(),
            ));
        }
        if signature.len() != no || signature.iter().any(|s| s.abs() != 1) {
            return Err(Error::InvalidArgument(format!(
                "signature must be {no} entries of ±1"
            )));
        }
        let pit = base.pit()?;
        let evens: Vec<u16> = (0..base.n_generators() as u16)
            .filter(|&i| !base.gen_parity(i).is_odd())
            .collect();
        let odds: Vec<u16> = (0..base.n_generators() as u16)
            .filter(|&i| base.gen_parity(i).is_odd())
            .collect();
        let fib = |i: u16| Expr::generator(&pit, pit.fiber_of(i).unwrap());
        let m = ne / 2;
        let mut omega = Expr::zero(&pit);
        for i in 0..m {
            omega = &omega + &(&fib(evens[i]) * &fib(evens[m + i]));
        }
        for (a, s) in odds.iter().zip(signature) {
            omega = &omega - &(&fib(*a).pow(2) * &Expr::ratio(&pit, *s, 2));
        }
        SympStructure::new(&omega, Parity::Even)
    }

    /// `Ω = Σ ψ^i y^i` on `(x…; ξ…)`.
    pub fn canonical_odd(m: usize) -> Result<SympStructure> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "odd canonical form needs m ≥ 1".into(),
            ));
        }
        let base = Chart::new(&indexed("x", m), &indexed("xi", m), &[])?;
        SympStructure::canonical_odd_on(&base)
    }

    /// Canonical odd form pairing the i-th even with the i-th odd generator.
    pub fn canonical_odd_on(base: &Chart) -> Result<SympStructure> {
        let pit = base.pit()?;
        let evens: Vec<u16> = (0..base.n_generators() as u16)
            .filter(|&i| !base.gen_parity(i).is_odd())
            .collect();
        let odds: Vec<u16> = (0..base.n_generators() as u16)
            .filter(|&i| base.gen_parity(i).is_odd())
            .collect();
        if evens.len() != odds.len() || evens.is_empty() {
            return Err(Error::InvalidArgument(
                "canonical odd form needs an m|m base".into(),
            ));
        }
        let fib = |i: u16| Expr::generator(&pit, pit.fiber_of(i).unwrap());
        let mut omega = Expr::zero(&pit);
        for (x, xi) in evens.iter().zip(&odds) {
            omega = &omega + &(&fib(*x) * &fib(*xi));
        }
        SympStructure::new(&omega, Parity::Odd)
    }

    pub fn base(&self) -> &Chart {
        &self.base
    }

    pub fn pit(&self) -> &Chart {
        &self.pit
    }

    pub fn omega(&self) -> &Expr {
        &self.omega
    }

    pub fn kind(&self) -> Parity {
        self.kind
    }

    /// Constant coefficients `∂_{φ_a}∂_{φ_b}Ω`, indexed `[b][a]`.
    pub fn coefficients(&self) -> &[Vec<Scalar>] {
        &self.coeffs
    }

    fn base_chart_for(&self, f: &Expr) -> Result<Chart> {
        let c = self.base.join(f.chart())?;
        if c.kind() != ChartKind::Base {
            return Err(Error::InvalidArgument(
                "observables live on the base chart".into(),
            ));
        }
        Ok(c)
    }
}

/// `ζ_f` with `ζ_f↓Ω = −(−1)^f Q(f)`.
pub fn hamiltonian_vf(f: &Expr, s: &SympStructure) -> Result<VField> {
    let fp = f.homogeneous("Hamiltonian")?;
    let chart = s.base_chart_for(f)?;
    let f = f.embed(&chart)?;
    let zp = fp + s.kind;
    let n = s.coeffs.len();
    let rhs: Vec<Expr> = (0..n as u16)
        .map(|a| {
            let d = f.left_deriv(a);
            if fp.is_odd() {
                d
            } else {
                -d
            }
        })
        .collect();
    let inv = &s.solve[zp.bit() as usize];
    let mut coeffs = vec![Expr::zero(&chart); chart.n_generators()];
    for (b, c) in coeffs.iter_mut().enumerate().take(n) {
        let mut acc = Expr::zero(&chart);
        for (a, r) in rhs.iter().enumerate() {
            if !inv[b][a].is_zero() && !r.is_zero() {
                acc = &acc + &r.scale(&inv[b][a]);
            }
        }
        *c = acc;
    }
    VField::new(&chart, coeffs, zp)
}

/// `{f, g} = (−1)^{Ω+1} ζ_f(g)`.
pub fn poisson(f: &Expr, g: &Expr, s: &SympStructure) -> Result<Expr> {
    let z = hamiltonian_vf(f, s)?;
    let r = z.apply(g)?;
    Ok(if s.kind.is_odd() { r } else { -r })
}

/// Truncated superflow of an observable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowSeries {
    pub expr: Expr,
    pub order: u32,
    /// Parameter index of `t` in the chart of `expr`.
    pub t: u16,
    /// Generator index of `ε` in the chart of `expr`.
    pub eps: u16,
}

/// Extends a base chart by the odd generator `eps` and parameter `t`.
pub fn flow_chart(base: &Chart) -> Result<Chart> {
    base.with_generators(&[("eps", Parity::Odd)])?
        .with_params(&["t"])
}

/// `e^X f` truncated to combined degree `order` in `tvars`, where
/// `X = −τ ζ_H` for even `ζ_H` and `X = −η ζ_H − (τ/2) ζ_{{H,H}}` otherwise.
pub fn flow_with(
    f: &Expr,
    h: &Expr,
    s: &SympStructure,
    time: &Expr,
    eps: &Expr,
    order: u32,
    tvars: &[Var],
) -> Result<Expr> {
    let hp = h.homogeneous("Hamiltonian")?;
    f.homogeneous("observable")?;
    if time.parity() == Some(Parity::Odd) || eps.parity() == Some(Parity::Even) && !eps.is_zero() {
        return Err(Error::ParityMismatch(
            "flow parameters must be (even, odd)".into(),
        ));
    }
    let zh = hamiltonian_vf(h, s)?;
    let odd = (hp + s.kind).is_odd();
    let zk = if odd {
        Some(hamiltonian_vf(&poisson(h, h, s)?, s)?)
    } else {
        None
    };
    let half_t = time.try_mul(&Expr::ratio(time.chart(), 1, 2))?;
    let step = |g: &Expr| -> Result<Expr> {
        let a = eps.try_mul(&zh.apply(g)?)?;
        let a = if odd { a } else { time.try_mul(&zh.apply(g)?)? };
        let mut r = -a;
        if let Some(zk) = &zk {
            r = r.try_sub(&half_t.try_mul(&zk.apply(g)?)?)?;
        }
        Ok(r.truncate_total(tvars, order))
    };
    let mut acc = f.clone();
    let mut term = f.clone();
    for k in 1..=order + 1 {
        term = step(&term)?;
        if term.is_zero() {
            break;
        }
        term = term.try_mul(&Expr::ratio(term.chart(), 1, k as i64))?;
        acc = acc.try_add(&term)?;
    }
    Ok(acc.truncate_total(tvars, order))
}

/// Pull-back of `f` along the superflow of `H`, to order `order` in `t`.
pub fn evolve(f: &Expr, h: &Expr, s: &SympStructure, order: u32) -> Result<FlowSeries> {
    let chart = flow_chart(&s.base_chart_for(f)?.join(&s.base_chart_for(h)?)?)?;
    let eps = chart.gen_index("eps")?;
    let t = match chart.lookup("t") {
        Some(Symbol::Param(p)) => p,
        _ => return Err(Error::Internal("flow parameter missing".into())),
    };
    let expr = flow_with(
        &f.embed(&chart)?,
        &h.embed(&chart)?,
        s,
        &Expr::param(&chart, t),
        &Expr::generator(&chart, eps),
        order,
        &[Var::Param(t)],
    )?;
    Ok(FlowSeries {
        expr,
        order,
        t,
        eps,
    })
}

/// Both sides of Hamilton's equation at the origin of the flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HamiltonResidual {
    /// `{H, f}(−1)^Ω`.
    pub bracket: Expr,
    /// `∂_t f|₀`, or `(∂_ε + ε∂_t) f|₀` for odd flows.
    pub derivative: Expr,
}

impl HamiltonResidual {
    pub fn residual(&self) -> Result<Expr> {
        self.bracket.try_sub(&self.derivative)
    }
}

pub fn hamilton_residual(f: &Expr, h: &Expr, s: &SympStructure) -> Result<HamiltonResidual> {
    let series = evolve(f, h, s, 2)?;
    hamilton_residual_with(&series, f, h, s)
}

/// As [`hamilton_residual`] against a caller-supplied series.
pub fn hamilton_residual_with(
    series: &FlowSeries,
    f: &Expr,
    h: &Expr,
    s: &SympStructure,
) -> Result<HamiltonResidual> {
    let hp = h.homogeneous("Hamiltonian")?;
    let b = poisson(h, f, s)?;
    let bracket = if s.kind.is_odd() { -b } else { b };
    let e = &series.expr;
    let tv = Var::Param(series.t);
    let d = if (hp + s.kind).is_odd() {
        e.left_deriv(series.eps).coeff_of(&tv, 0)
    } else {
        e.coeff_of(&tv, 1)
    };
    let d = d.substitute(&[(Symbol::Gen(series.eps), Expr::zero(e.chart()))])?;
    let derivative = d.restrict(bracket.chart())?;
    Ok(HamiltonResidual {
        bracket,
        derivative,
    })
}

/// Group law of ℝ^{1|1}: `(t,ε)·(t′,ε′) = (t + t′ + εε′, ε + ε′)`.
pub fn r11_compose(a: (&Expr, &Expr), b: (&Expr, &Expr)) -> Result<(Expr, Expr)> {
    for (e, p) in [
        (a.0, Parity::Even),
        (b.0, Parity::Even),
        (a.1, Parity::Odd),
        (b.1, Parity::Odd),
    ] {
        if !e.is_zero() && e.parity() != Some(p) {
            return Err(Error::ParityMismatch(format!("`{e}` should be {p}")));
        }
    }
    let t = a.0.try_add(b.0)?.try_add(&a.1.try_mul(b.1)?)?;
    Ok((t, a.1.try_add(b.1)?))
}

/// Verdict of [`cartan_symmetry`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanVerdict {
    /// `V↑Ω`.
    pub lie_omega: Expr,
    /// `V↑H = V(H)`.
    pub lie_h: Expr,
    /// `V↓Ω + (−1)^F Q(F)` for the supplied `F`.
    pub exact_witness: Option<Expr>,
    /// `{H, F}` for the supplied `F`.
    pub conserved_witness: Option<Expr>,
}

impl CartanVerdict {
    pub fn is_cartan(&self) -> bool {
        self.lie_omega.is_zero() && self.lie_h.is_zero()
    }

    pub fn is_exact(&self) -> bool {
        self.is_cartan() && self.exact_witness.as_ref().is_some_and(Expr::is_zero)
    }

    pub fn is_conserved(&self) -> bool {
        self.conserved_witness.as_ref().is_some_and(Expr::is_zero)
    }
}

impl fmt::Display for CartanVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "exact cartan symmetry")?;
            if self.is_conserved() {
                write!(f, ", F conserved")?;
            }
            Ok(())
        } else if self.is_cartan() {
            write!(f, "cartan symmetry")
        } else {
            write!(
                f,
                "not a symmetry: V↑Ω = {}, V↑H = {}",
                self.lie_omega, self.lie_h
            )
        }
    }
}

pub fn cartan_symmetry(
    v: &VField,
    s: &SympStructure,
    h: &Expr,
    candidate: Option<&Expr>,
) -> Result<CartanVerdict> {
    let chart = s.base.join(v.chart())?;
    let v = v.embed(&chart)?;
    let pit = chart.pit()?;
    let omega = s.omega.embed(&pit)?;
    let lie_omega = lift_lie(&v)?.apply(&omega)?;
    let lie_h = v.apply(h)?;
    let (exact_witness, conserved_witness) = match candidate {
        Some(f) => {
            let fp = f.homogeneous("candidate")?;
            let q = de_rham(&pit)?.apply(&f.embed(&pit)?)?;
            let down = lift_inner(&v)?.apply(&omega)?;
            let w = if fp.is_odd() {
                down.try_sub(&q)?
            } else {
                down.try_add(&q)?
            };
            (Some(w), Some(poisson(h, f, s)?))
        }
        None => (None, None),
    };
    Ok(CartanVerdict {
        lie_omega,
        lie_h,
        exact_witness,
        conserved_witness,
    })
}
