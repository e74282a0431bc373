//! Berezin integration, supermetrics and the Hodge star on ordinary bases.

use crate::chart::{Chart, ChartKind, Parity, Symbol};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// `∫dθ_1…dθ_k f`, the last listed variable innermost, with `∫dθ (a + bθ) = b`.
pub fn berezin_integral(f: &Expr, gens: &[u16]) -> Result<Expr> {
    let chart = f.chart();
    for g in gens {
        if *g as usize >= chart.n_generators() {
            return Err(Error::InvalidArgument(format!(
                "generator #{g} is not in the chart"
            )));
        }
        if !chart.gen_parity(*g).is_odd() {
            return Err(Error::ParityMismatch(format!(
                "`{}` is not odd",
                chart.generator(*g).name
            )));
        }
    }
    let mut out = f.clone();
    for g in gens.iter().rev() {
        out = out.left_deriv(*g);
    }
    Ok(out)
}

/// Superdeterminant `det(A − B D⁻¹ C)·det(D)⁻¹` of the block matrix `[[A, B], [C, D]]`
/// with even blocks `A`, `D` and odd blocks `B`, `C`.
pub fn berezinian(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Result<Expr> {
    if d.rows() == 0 {
        return a.det();
    }
    let dinv = d.inverse()?;
    let schur = if b.cols() == 0 || a.rows() == 0 {
        a.clone()
    } else {
        a.try_sub(&b.try_mul(&dinv)?.try_mul(c)?)?
    };
    let num = schur.det()?;
    let dd = d.det()?;
    num.try_mul(&dd.inverse()?)
}

/// Quadratic supermetric on the tangent chart of a base chart.
#[derive(Clone, Debug)]
pub struct Metric {
    tangent: Chart,
    g: Matrix,
    gamma_zs: Matrix,
    gamma_sz: Matrix,
    h: Matrix,
}

impl Metric {
    /// Blocks: `g` (even × even, symmetric, even entries), `Γ_{iβ}`, `Γ_{αj}`
    /// (odd entries), `h` (odd × odd, skew, even entries), on the base chart.
    pub fn new(
        tangent: &Chart,
        g: Matrix,
        gamma_zs: Matrix,
        gamma_sz: Matrix,
        h: Matrix,
    ) -> Result<Metric> {
        if tangent.kind() != ChartKind::Tangent {
            return Err(Error::InvalidArgument(
                "metrics live on a tangent chart".into(),
            ));
        }
        let (m, n) = (tangent.base_even_count(), tangent.base_odd_count());
        let shape = |x: &Matrix, r: usize, c: usize, what: &str| {
            if (x.rows(), x.cols()) == (r, c) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "block {what} must be {r}x{c}"
                )))
            }
        };
        shape(&g, m, m, "g")?;
        shape(&gamma_zs, m, n, "Γ_{iβ}")?;
        shape(&gamma_sz, n, m, "Γ_{αj}")?;
        shape(&h, n, n, "h")?;
        let parity_ok = |x: &Matrix, p: Parity| {
            x.entries()
                .iter()
                .all(|e| e.is_zero() || e.parity() == Some(p))
        };
        if !parity_ok(&g, Parity::Even) || !parity_ok(&h, Parity::Even) {
            return Err(Error::ParityMismatch("g and h entries must be even".into()));
        }
        if !parity_ok(&gamma_zs, Parity::Odd) || !parity_ok(&gamma_sz, Parity::Odd) {
            return Err(Error::ParityMismatch("Γ entries must be odd".into()));
        }
        if g != g.transpose() {
            return Err(Error::InvalidArgument("g must be symmetric".into()));
        }
        if h != h.transpose().neg() {
            return Err(Error::InvalidArgument("h must be skew-symmetric".into()));
        }
        let emb = |x: Matrix| x.embed(tangent);
        Ok(Metric {
            tangent: tangent.clone(),
            g: emb(g)?,
            gamma_zs: emb(gamma_zs)?,
            gamma_sz: emb(gamma_sz)?,
            h: emb(h)?,
        })
    }

    /// Metric on a purely even base: only `g`.
    pub fn riemannian(base: &Chart, g: Matrix) -> Result<Metric> {
        let t = base.tangent()?;
        let n = base.base_odd_count();
        let m = base.base_even_count();
        Metric::new(
            &t,
            g,
            Matrix::zeros(base, m, n),
            Matrix::zeros(base, n, m),
            Matrix::zeros(base, n, n),
        )
    }

    /// Diagonal constant metric with integer entries.
    pub fn diagonal(base: &Chart, diag: &[i64]) -> Result<Metric> {
        let n = diag.len();
        let mut g = Matrix::zeros(base, n, n);
        for (i, d) in diag.iter().enumerate() {
            g.set(i, i, Expr::int(base, *d));
        }
        Metric::riemannian(base, g)
    }

    pub fn tangent(&self) -> &Chart {
        &self.tangent
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    /// `G = z g z + z Γ σ + σ Γ z + σ h σ` on the tangent chart.
    pub fn quadratic(&self) -> Expr {
        let t = &self.tangent;
        let base = t.base_len();
        let (mut zs, mut ss) = (Vec::new(), Vec::new());
        for b in 0..base as u16 {
            let fib = Expr::generator(t, t.fiber_of(b).expect("tangent fiber"));
            if t.gen_parity(b).is_odd() {
                ss.push(fib);
            } else {
                zs.push(fib);
            }
        }
        let mut out = Expr::zero(t);
        let mut block = |l: &[Expr], m: &Matrix, r: &[Expr]| {
            for (i, li) in l.iter().enumerate() {
                for (j, rj) in r.iter().enumerate() {
                    let e = m.get(i, j);
                    if !e.is_zero() {
                        out = &out + &(&(li * e) * rj);
                    }
                }
            }
        };
        block(&zs, &self.g, &zs);
        block(&zs, &self.gamma_zs, &ss);
        block(&ss, &self.gamma_sz, &zs);
        block(&ss, &self.h, &ss);
        out
    }

    /// `Ber G`.
    pub fn berezinian(&self) -> Result<Expr> {
        berezinian(&self.g, &self.gamma_zs, &self.gamma_sz, &self.h)
    }

    pub fn is_regular(&self) -> bool {
        self.berezinian().is_ok_and(|b| !b.is_zero())
    }
}

/// Hodge star on the ΠT chart of a purely even base with constant `g`,
/// `det g = ±r²`: Grassmann–Fourier transform against `exp(−i⟨ψ′|ψ⟩)` with
/// `⟨ψ′|ψ⟩ = ψ′ g (−ψ)`, divided by `√det g`.
pub fn hodge_star(f: &Expr, metric: &Metric) -> Result<Expr> {
    let t = metric.tangent();
    if t.base_odd_count() > 0 {
        return Err(Error::Unsupported(
            "Hodge star with odd base coordinates".into(),
        ));
    }
    let m = t.base_len();
    let mut g = vec![vec![Scalar::zero(); m]; m];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot =
                metric.g().get(i, j).as_constant().ok_or_else(|| {
                    Error::Unsupported("Hodge star needs a constant metric".into())
                })?;
        }
    }
    let det = metric
        .g()
        .det()?
        .as_constant()
        .expect("constant determinant");
    let root = if let Some(r) = det.rational_sqrt() {
        r
    } else if let Some(r) = (-&det).rational_sqrt() {
        &r * &Scalar::i()
    } else {
        return Err(Error::Unsupported(format!(
            "det g = {det} is not ± a rational square"
        )));
    };
    if root.is_zero() {
        return Err(Error::NotInvertible("degenerate metric".into()));
    }
    let pit = f.chart().clone();
    if pit.kind() != ChartKind::Pit {
        return Err(Error::NotPit);
    }
    let psi: Vec<u16> = (0..m as u16)
        .map(|b| pit.fiber_of(b).expect("ΠT fiber"))
        .collect();
    let names: Vec<String> = psi
        .iter()
        .map(|j| format!("{}'", pit.generator(*j).name))
        .collect();
    let extra: Vec<(&str, Parity)> = names.iter().map(|n| (n.as_str(), Parity::Odd)).collect();
    let big = pit.with_generators(&extra)?;
    let primed: Vec<u16> = (0..m).map(|k| (pit.n_generators() + k) as u16).collect();

    // X = −i⟨ψ′|ψ⟩ = i ψ′^a g_ab ψ^b
    let mut x = Expr::zero(&big);
    for a in 0..m {
        for b in 0..m {
            if g[a][b].is_zero() {
                continue;
            }
            let term = &Expr::generator(&big, primed[a]) * &Expr::generator(&big, psi[b]);
            x = &x + &term.scale(&(&g[a][b] * &Scalar::i()));
        }
    }
    let mut exp = Expr::one(&big);
    let mut term = Expr::one(&big);
    for k in 1..=m as i64 {
        term = (&term * &x).scale(&Scalar::ratio(1, k));
        if term.is_zero() {
            break;
        }
        exp = &exp + &term;
    }
    let map: Vec<(Symbol, Expr)> = psi
        .iter()
        .zip(&primed)
        .map(|(p, q)| (Symbol::Gen(*p), Expr::generator(&big, *q)))
        .collect();
    let fp = f.embed(&big)?.substitute(&map)?;
    let integrand = &fp * &exp;
    let out = berezin_integral(&integrand, &primed)?;
    let out = out.scale(&root.inv().expect("nonzero root"));
    out.restrict(&pit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_conventions() {
        let c = Chart::new(&["x"], &["xi1", "xi2"], &["a", "b"]).unwrap();
        let v = |n: &str| c.var(n).unwrap();
        let f = &v("a") + &(&v("b") * &v("xi1"));
        assert_eq!(berezin_integral(&f, &[1]).unwrap(), v("b"));
        let top = &v("xi2") * &v("xi1");
        assert_eq!(berezin_integral(&top, &[1, 2]).unwrap(), Expr::one(&c));
        assert!(berezin_integral(&v("x"), &[1]).unwrap().is_zero());
        assert!(berezin_integral(&v("x"), &[0]).is_err());
    }

    #[test]
    fn berezinian_examples() {
        let c = Chart::new(&["x", "y"], &[], &[]).unwrap();
        let m = Metric::diagonal(&c, &[1, 1]).unwrap();
        assert_eq!(m.berezinian().unwrap(), Expr::one(&c));
        let m = Metric::diagonal(&c, &[2, 3]).unwrap();
        assert_eq!(m.berezinian().unwrap(), Expr::int(&c, 6));
        let m = Metric::diagonal(&c, &[1, 0]).unwrap();
        assert!(m.berezinian().unwrap().is_zero());
        assert!(!m.is_regular());
        let ns = Matrix::from_ints(&c, &[&[1, 2], &[0, 1]]);
        assert!(Metric::riemannian(&c, ns).is_err());
        assert!(
            Metric::diagonal(&Chart::new(&["x", "y", "z"], &[], &[]).unwrap(), &[1, 1, 1]).is_ok()
        );
        assert!(Metric::diagonal(&c, &[1, -1]).is_ok());
    }

    #[test]
    fn super_metric_berezinian() {
        let base = Chart::new(&["x"], &["s1", "s2"], &["a"]).unwrap();
        let t = base.tangent().unwrap();
        let a = base.var("a").unwrap();
        let g = Matrix::from_rows(&base, vec![vec![a.clone()]]).unwrap();
        let zero_zs = Matrix::zeros(&base, 1, 2);
        let zero_sz = Matrix::zeros(&base, 2, 1);
        let h = Matrix::from_ints(&base, &[&[0, 1], &[-1, 0]]);
        let m = Metric::new(&t, g, zero_zs, zero_sz, h).unwrap();
        assert_eq!(m.berezinian().unwrap(), a.embed(&t).unwrap());
        let q = m.quadratic();
        assert_eq!(q.parity(), Some(Parity::Even));
    }

    #[test]
    fn hodge_examples() {
        let r1 = Chart::new(&["x"], &[], &[]).unwrap();
        let pit = r1.pit().unwrap();
        let m = Metric::diagonal(&r1, &[1]).unwrap();
        let one = Expr::one(&pit);
        let psi = pit.var("dx").unwrap();
        assert_eq!(hodge_star(&one, &m).unwrap(), &psi * &Expr::i(&pit));

        let r2 = Chart::new(&["x1", "x2"], &[], &[]).unwrap();
        let pit = r2.pit().unwrap();
        let m = Metric::diagonal(&r2, &[1, 1]).unwrap();
        let top = &pit.var("dx1").unwrap() * &pit.var("dx2").unwrap();
        let s1 = hodge_star(&Expr::one(&pit), &m).unwrap();
        assert_eq!(s1, -&top);
        let s2 = hodge_star(&top, &m).unwrap();
        assert_eq!(s2, -Expr::one(&pit));
    }
}
