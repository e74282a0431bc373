//! Skew `(1,k)` tensor fields as `Q`-invariant vector fields on the odd
//! tangent bundle of an ordinary manifold, and their Frölicher–Nijenhuis bracket.

use crate::cartan::{de_rham, degree_of, VField};
use crate::chart::{Chart, ChartKind, Parity};
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Components `A^i(x, ψ)` of fiber degree `k` on the ΠT chart of a purely
/// even base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor1k {
    base: Chart,
    pit: Chart,
    k: u32,
    comps: Vec<Expr>,
}

impl Tensor1k {
    pub fn new(base: &Chart, k: u32, comps: Vec<Expr>) -> Result<Tensor1k> {
        if base.kind() != ChartKind::Base || base.base_odd_count() > 0 {
            return Err(Error::InvalidArgument(
                "tensor fields need a purely even base".into(),
            ));
        }
        if comps.len() != base.n_generators() {
            return Err(Error::InvalidArgument(format!(
                "expected {} components, got {}",
                base.n_generators(),
                comps.len()
            )));
        }
        let pit = base.pit()?;
        let mut cs = Vec::with_capacity(comps.len());
        for c in comps {
            let c = c.embed(&pit)?;
            if !c.is_zero() && degree_of(&c) != Some(k as i64) {
                return Err(Error::InvalidArgument(format!(
                    "component `{c}` is not of form degree {k}"
                )));
            }
            cs.push(c);
        }
        Ok(Tensor1k {
            base: base.clone(),
            pit,
            k,
            comps: cs,
        })
    }

    /// The identity tensor `A^i = ψ^i`.
    pub fn identity(base: &Chart) -> Result<Tensor1k> {
        let pit = base.pit()?;
        let comps = (0..base.n_generators() as u16)
            .map(|i| Expr::generator(&pit, pit.fiber_of(i).unwrap()))
            .collect();
        Tensor1k::new(base, 1, comps)
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn pit(&self) -> &Chart {
        &self.pit
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn base(&self) -> &Chart {
        &self.base
    }
}

/// `V_A = A^i ∂_{x^i} + (−1)^k Q(A^i) ∂_{ψ^i}`.
pub fn tensor_field(a: &Tensor1k) -> Result<VField> {
    let q = de_rham(&a.pit)?;
    let mut coeffs = vec![Expr::zero(&a.pit); a.pit.n_generators()];
    for i in 0..a.comps.len() {
        let fib = a.pit.fiber_of(i as u16).unwrap() as usize;
        let qa = q.apply(&a.comps[i])?;
        coeffs[fib] = if a.k % 2 == 1 { -qa } else { qa };
        coeffs[i] = a.comps[i].clone();
    }
    VField::new(&a.pit, coeffs, Parity::from_bit(a.k))
}

/// `v_A = A^i ∂_{ψ^i}`.
pub fn tensor_potential(a: &Tensor1k) -> Result<VField> {
    let mut coeffs = vec![Expr::zero(&a.pit); a.pit.n_generators()];
    for i in 0..a.comps.len() {
        coeffs[a.pit.fiber_of(i as u16).unwrap() as usize] = a.comps[i].clone();
    }
    VField::new(&a.pit, coeffs, Parity::from_bit(a.k + 1))
}

/// `{A, B}` defined by `[V_A, V_B] = V_{{A,B}}`.
pub fn fn_bracket(a: &Tensor1k, b: &Tensor1k) -> Result<Tensor1k> {
    if a.pit != b.pit {
        return Err(Error::ChartMismatch);
    }
    let w = tensor_field(a)?.commutator(&tensor_field(b)?)?;
    let q = de_rham(&a.pit)?;
    if !w.commutator(&q)?.is_zero() {
        return Err(Error::Internal("bracket field is not Q-invariant".into()));
    }
    let comps: Vec<Expr> = (0..a.comps.len() as u16)
        .map(|i| w.coeff(i).clone())
        .collect();
    let c = Tensor1k::new(&a.base, a.k + b.k, comps)
        .map_err(|e| Error::Internal(format!("bracket components: {e}")))?;
    if tensor_field(&c)? != w {
        return Err(Error::Internal(
            "bracket field is not of the form V_C".into(),
        ));
    }
    Ok(c)
}
