//! Flat deformation quantization: the Moyal–Clifford star product, Clifford
//! matrix representations, the SUSY and Pauli models, and the odd star product.

use std::fmt;

use num_rational::BigRational;

use crate::chart::{Chart, ChartBuilder, ChartKind, Parity, Symbol};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::matrix::Matrix;
use crate::poly::Var;
use crate::scalar::Scalar;
use crate::symplectic::{cartan_symmetry, hamiltonian_vf, poisson, CartanVerdict, SympStructure};

/// Adds `hbar` and the radicals `sigma² = ħ/2`, `tau² = iħ/2`,
/// `rho² = 1/(2ħ)` and `taup² = 1/(iħ)`.
pub fn quantum_params(b: ChartBuilder) -> ChartBuilder {
    b.param("hbar")
        .radical("sigma", |c| Ok(c.var("hbar")? / 2))
        .radical("tau", |c| Ok(&(&Expr::i(c) * &c.var("hbar")?) / 2))
        .radical("rho", |c| Expr::one(c).divide(&(&c.var("hbar")? * 2)))
        .radical("taup", |c| {
            Expr::one(c).divide(&(&Expr::i(c) * &c.var("hbar")?))
        })
}

fn param_expr(chart: &Chart, name: &str, purpose: &str) -> Result<Expr> {
    match chart.lookup(name) {
        Some(Symbol::Param(p)) => Ok(Expr::param(chart, p)),
        _ => Err(Error::InvalidArgument(format!(
            "{purpose} needs the parameter `{name}` to be declared"
        ))),
    }
}

/// `{f,h}_⋆− = f⋆h − h⋆f` or `{f,h}_⋆+ = f⋆h + h⋆f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bracket {
    Commutator,
    Anticommutator,
}

/// Flat phase space `(x…, p…; ξ…)` with constant odd metric `g^{αβ}` and `ħ`.
#[derive(Clone, Debug)]
pub struct StarAlgebra {
    chart: Chart,
    xs: Vec<u16>,
    ps: Vec<u16>,
    xis: Vec<u16>,
    g: Vec<Vec<Scalar>>,
    hbar: u16,
}

impl StarAlgebra {
    /// The first half of the even generators are positions, the second half
    /// momenta; `g` pairs the odd generators.
    pub fn new(chart: &Chart, g: Vec<Vec<Scalar>>) -> Result<StarAlgebra> {
        if chart.kind() != ChartKind::Base {
            return Err(Error::InvalidArgument(
                "star algebras live on a base chart".into(),
            ));
        }
        let n_gen = chart.n_generators() as u16;
        let evens: Vec<u16> = (0..n_gen)
            .filter(|&i| !chart.gen_parity(i).is_odd())
            .collect();
        let xis: Vec<u16> = (0..n_gen)
            .filter(|&i| chart.gen_parity(i).is_odd())
            .collect();
        if !evens.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "phase space needs pairs (x, p)".into(),
            ));
        }
        let n = xis.len();
        if g.len() != n || g.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!("metric must be {n}×{n}")));
        }
        if (0..n).any(|a| (0..n).any(|b| g[a][b] != g[b][a])) {
            return Err(Error::InvalidArgument("metric must be symmetric".into()));
        }
        if crate::symplectic::invert_scalars(&g).is_none() {
            return Err(Error::NotInvertible("metric is singular".into()));
        }
        let hbar = match chart.lookup("hbar") {
            Some(Symbol::Param(p)) if !chart.params()[p as usize].has_rewrite() => p,
            _ => {
                return Err(Error::InvalidArgument(
                    "star algebra needs the parameter `hbar`".into(),
                ))
            }
        };
        let m = evens.len() / 2;
        Ok(StarAlgebra {
            chart: chart.clone(),
            xs: evens[..m].to_vec(),
            ps: evens[m..].to_vec(),
            xis,
            g,
            hbar,
        })
    }

    pub fn diagonal(chart: &Chart, signature: &[i64]) -> Result<StarAlgebra> {
        let n = signature.len();
        let g = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        if a == b {
                            Scalar::from(signature[a])
                        } else {
                            Scalar::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        StarAlgebra::new(chart, g)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn hbar(&self) -> Expr {
        Expr::param(&self.chart, self.hbar)
    }

    pub fn metric(&self) -> &[Vec<Scalar>] {
        &self.g
    }

    /// Generator indices of positions, momenta and odd coordinates.
    pub fn layout(&self) -> (&[u16], &[u16], &[u16]) {
        (&self.xs, &self.ps, &self.xis)
    }
}

/// The exact Moyal–Clifford product `f ⋆ h = f exp((iħ/2) Π) h`.
pub fn moyal_star(f: &Expr, h: &Expr, a: &StarAlgebra) -> Result<Expr> {
    f.homogeneous("left star factor")?;
    let chart = a.chart.join(f.chart())?.join(h.chart())?;
    if chart.kind() != ChartKind::Base {
        return Err(Error::InvalidArgument(
            "star factors live on the base chart".into(),
        ));
    }
    for e in [f, h] {
        if a.ps.iter().any(|p| e.den().contains_var(&Var::Gen(*p))) {
            return Err(Error::Unsupported(format!(
                "`{e}` is not polynomial in the momenta"
            )));
        }
    }
    let all: Vec<u16> = a.xs.iter().chain(&a.ps).chain(&a.xis).copied().collect();
    let primed: Vec<(String, Parity)> = all
        .iter()
        .map(|&i| (format!("{}'", chart.generator(i).name), chart.gen_parity(i)))
        .collect();
    let primed_gens: Vec<(&str, Parity)> = primed.iter().map(|(n, p)| (n.as_str(), *p)).collect();
    let dbl = chart.with_generators(&primed_gens)?;
    let off = chart.n_generators() as u16;
    let prime_of = |i: u16| off + all.iter().position(|&j| j == i).unwrap() as u16;
    let to_primed: Vec<(Symbol, Expr)> = all
        .iter()
        .map(|&i| (Symbol::Gen(i), Expr::generator(&dbl, prime_of(i))))
        .collect();
    let from_primed: Vec<(Symbol, Expr)> = all
        .iter()
        .map(|&i| (Symbol::Gen(prime_of(i)), Expr::generator(&dbl, i)))
        .collect();

    let pi = |e: &Expr| -> Expr {
        let mut out = Expr::zero(&dbl);
        for (x, p) in a.xs.iter().zip(&a.ps) {
            let t = e.left_deriv(prime_of(*x)).left_deriv(*p);
            let u = e.left_deriv(prime_of(*p)).left_deriv(*x);
            out = &(&out + &t) - &u;
        }
        for (al, &xa) in a.xis.iter().enumerate() {
            for (be, &xb) in a.xis.iter().enumerate() {
                let g = &a.g[al][be];
                if !g.is_zero() {
                    let t = e.left_deriv(prime_of(xb)).left_deriv(xa);
                    out = &out - &t.scale(g);
                }
            }
        }
        out
    };

    let half = &(&Expr::i(&dbl) * &Expr::param(&dbl, a.hbar)) / 2;
    let mut term = f
        .embed(&dbl)?
        .try_mul(&h.embed(&dbl)?.substitute(&to_primed)?)?;
    let mut acc = term.clone();
    let mut r = 1i64;
    loop {
        term = &(&half * &pi(&term)) / r;
        if term.is_zero() {
            break;
        }
        acc = &acc + &term;
        r += 1;
    }
    acc.substitute(&from_primed)?.restrict(&chart)
}

pub fn star_bracket(f: &Expr, h: &Expr, a: &StarAlgebra, kind: Bracket) -> Result<Expr> {
    let fh = moyal_star(f, h, a)?;
    let hf = moyal_star(h, f, a)?;
    match kind {
        Bracket::Commutator => fh.try_sub(&hf),
        Bracket::Anticommutator => fh.try_add(&hf),
    }
}

/// Matrix-valued symbols multiplied entrywise by `⋆`.
pub fn moyal_matrix(x: &Matrix, y: &Matrix, a: &StarAlgebra) -> Result<Matrix> {
    if x.cols() != y.rows() {
        return Err(Error::InvalidArgument(
            "matrix shapes do not compose".into(),
        ));
    }
    let chart = x.chart().join(y.chart())?;
    let mut out = Matrix::zeros(&chart, x.rows(), y.cols());
    for i in 0..x.rows() {
        for j in 0..y.cols() {
            let mut acc = Expr::zero(&chart);
            for k in 0..x.cols() {
                let (u, v) = (x.get(i, k), y.get(k, j));
                if !u.is_zero() && !v.is_zero() {
                    acc = acc.try_add(&moyal_star(u, v, a)?)?;
                }
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

fn constant_matrix(chart: &Chart, rows: &[&[(i64, i64)]]) -> Matrix {
    let rows = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&(re, im)| {
                    Expr::constant(
                        chart,
                        Scalar::new(
                            BigRational::from_integer(re.into()),
                            BigRational::from_integer(im.into()),
                        ),
                    )
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(chart, rows).expect("rectangular constant rows")
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = Matrix::zeros(a.chart(), ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out.set(i * rb + k, j * cb + l, a.get(i, j) * b.get(k, l));
                }
            }
        }
    }
    out
}

/// The Pauli matrices `σ¹, σ², σ³`.
pub fn pauli_matrices(chart: &Chart) -> [Matrix; 3] {
    [
        constant_matrix(chart, &[&[(0, 0), (1, 0)], &[(1, 0), (0, 0)]]),
        constant_matrix(chart, &[&[(0, 0), (0, -1)], &[(0, 1), (0, 0)]]),
        constant_matrix(chart, &[&[(1, 0), (0, 0)], &[(0, 0), (-1, 0)]]),
    ]
}

/// Euclidean Clifford generators `γ_a γ_b + γ_b γ_a = 2δ_ab` of size `2^⌊n/2⌋`.
pub fn gamma_matrices(chart: &Chart, n: usize) -> Vec<Matrix> {
    let [x, y, z] = pauli_matrices(chart);
    let id = Matrix::identity(chart, 2);
    let k = n / 2;
    let chain = |left: usize, mid: &Matrix| -> Matrix {
        let mut m = Matrix::identity(chart, 1);
        for _ in 0..left {
            m = kron(&m, &z);
        }
        m = kron(&m, mid);
        for _ in left + 1..k {
            m = kron(&m, &id);
        }
        m
    };
    let mut out = Vec::with_capacity(n);
    for j in 0..k {
        out.push(chain(j, &x));
        out.push(chain(j, &y));
    }
    if n % 2 == 1 {
        let mut m = Matrix::identity(chart, 1);
        for _ in 0..k {
            m = kron(&m, &z);
        }
        out.push(m);
    }
    out
}

/// Matrices with `ξ̂^α ξ̂^β + ξ̂^β ξ̂^α = iħ g^{αβ}·Id` for diagonal `g = signature`.
pub fn clifford_rep(chart: &Chart, signature: &[i64]) -> Result<Vec<Matrix>> {
    if signature.iter().any(|s| s.abs() != 1) {
        return Err(Error::InvalidArgument(
            "signature entries must be ±1".into(),
        ));
    }
    let n = signature.len();
    let (pref, base) = if n == 2 {
        let m1 = constant_matrix(chart, &[&[(0, 0), (0, 1)], &[(1, 0), (0, 0)]]);
        let m2 = constant_matrix(chart, &[&[(0, 0), (1, 0)], &[(0, 1), (0, 0)]]);
        (
            param_expr(chart, "sigma", "the n = 2 representation")?,
            vec![m1, m2],
        )
    } else {
        (
            param_expr(chart, "tau", "the Clifford representation")?,
            gamma_matrices(chart, n),
        )
    };
    let i = Expr::i(chart);
    base.iter()
        .zip(signature)
        .map(|(m, s)| {
            let c = if *s < 0 { &pref * &i } else { pref.clone() };
            m.scale_left(&c)
        })
        .collect()
}

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    if n == 0 {
        return vec![(Vec::new(), false)];
    }
    let mut out = Vec::new();
    for (p, neg) in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            let flips = (p.len() - pos) % 2 == 1;
            out.push((q, neg ^ flips));
        }
    }
    out
}

/// Weyl map on the odd variables: ordered `ξ` monomials become antisymmetrized
/// matrix products.
pub fn fermionic_weyl(f: &Expr, xis: &[u16], reps: &[Matrix]) -> Result<Matrix> {
    if xis.len() != reps.len() || reps.is_empty() {
        return Err(Error::InvalidArgument(
            "one matrix per odd generator is needed".into(),
        ));
    }
    let chart = f.chart().join(reps[0].chart())?;
    let d = reps[0].rows();
    let reps = reps
        .iter()
        .map(|r| r.embed(&chart))
        .collect::<Result<Vec<_>>>()?;
    let f = f.embed(&chart)?;
    let mut out = Matrix::zeros(&chart, d, d);
    for (mask, even) in f.num().split_by_odd() {
        let coeff = Expr::from_parts(&chart, even, f.den().clone())?;
        let mut idx = Vec::new();
        for b in 0..64u16 {
            if mask & (1u64 << b) != 0 {
                let k = xis.iter().position(|&x| x == b).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "odd generator `{}` has no matrix",
                        chart.generator(b).name
                    ))
                })?;
                idx.push(k);
            }
        }
        let perms = permutations(idx.len());
        let mut sym = Matrix::zeros(&chart, d, d);
        for (p, neg) in &perms {
            let mut prod = Matrix::identity(&chart, d);
            for &k in p {
                prod = prod.try_mul(&reps[idx[k]])?;
            }
            sym = if *neg {
                sym.try_sub(&prod)?
            } else {
                sym.try_add(&prod)?
            };
        }
        let scale = Expr::ratio(&chart, 1, perms.len() as i64);
        out = out.try_add(&sym.scale_left(&coeff.try_mul(&scale)?)?)?;
    }
    Ok(out)
}

/// Bosonic and fermionic ladder operators of the `m = 1, n = 2` algebra.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub b: Expr,
    pub b_dag: Expr,
    pub f: Matrix,
    pub f_dag: Matrix,
}

pub fn ladder_ops(a: &StarAlgebra) -> Result<Ladder> {
    if a.xs.len() != 1 || a.xis.len() != 2 {
        return Err(Error::InvalidArgument(
            "ladder operators need m = 1, n = 2".into(),
        ));
    }
    let c = &a.chart;
    let rho = param_expr(c, "rho", "ladder operators")?;
    let i = Expr::i(c);
    let (x, p) = (Expr::generator(c, a.xs[0]), Expr::generator(c, a.ps[0]));
    let b = &rho * &(&x - &(&i * &p));
    let b_dag = &rho * &(&x + &(&i * &p));
    let sig: Vec<i64> = (0..2)
        .map(|k| if a.g[k][k].is_negative_real() { -1 } else { 1 })
        .collect();
    let r = clifford_rep(c, &sig)?;
    let f = r[0].try_sub(&r[1].scale_left(&i)?)?.scale_left(&rho)?;
    let f_dag = r[1].try_sub(&r[0].scale_left(&i)?)?.scale_left(&rho)?;
    Ok(Ladder { b, b_dag, f, f_dag })
}

/// Sign choice `±` of the SUSY and Witten Hamiltonians.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> i64 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        })
    }
}

/// `(x, p; xi1, xi2)` with the quantum parameters and the formal function `V1(x)`.
pub fn susy_chart() -> Result<Chart> {
    quantum_params(Chart::builder().even(["x", "p"]).odd(["xi1", "xi2"]))
        .function("V1", ["x"])
        .build()
}

/// Classical SUSY mechanics: `H± = ½(p² + V₁²) ± V₁′ξ²ξ¹`, `q₁± = pξ¹ ∓ V₁ξ²`
/// and `q₂± = pξ² ± V₁ξ¹`.
#[derive(Clone, Debug)]
pub struct SusyModel {
    pub structure: SympStructure,
    pub branch: Branch,
    pub h: Expr,
    pub q1: Expr,
    pub q2: Expr,
}

/// Formal function `name` of the chart, optionally differentiated once in argument `wrt`.
fn formal(chart: &Chart, name: &str, wrt: Option<usize>) -> Result<Expr> {
    let Some(Symbol::Func(fi)) = chart.lookup(name) else {
        return Err(Error::UnknownSymbol(name.to_string()));
    };
    let args = chart.functions()[fi as usize].args.clone();
    let mut dv = vec![0; args.len()];
    if let Some(k) = wrt {
        dv[k] += 1;
    }
    Expr::function(chart, fi, dv, args)
}

pub fn susy_model(chart: &Chart, branch: Branch) -> Result<SusyModel> {
    let s = SympStructure::canonical_even_on(chart, &[1, 1])?;
    let v = |n: &str| chart.var(n);
    let (p, xi1, xi2) = (v("p")?, v("xi1")?, v("xi2")?);
    let v1 = formal(chart, "V1", None)?;
    let dv1 = formal(chart, "V1", Some(0))?;
    let sg = branch.sign();
    let h = &(&(&p * &p) + &(&v1 * &v1)) / 2 + &(&(&dv1 * &xi2) * &xi1) * sg;
    let q1 = &(&p * &xi1) - &(&(&v1 * &xi2) * sg);
    let q2 = &(&p * &xi2) + &(&(&v1 * &xi1) * sg);
    Ok(SusyModel {
        structure: s,
        branch,
        h,
        q1,
        q2,
    })
}

impl SusyModel {
    pub fn chart(&self) -> &Chart {
        self.structure.base()
    }

    pub fn charges(&self) -> [&Expr; 2] {
        [&self.q1, &self.q2]
    }

    /// Replaces the formal potential by a concrete expression in `x`.
    pub fn specialize(&self, v1: &Expr) -> Result<SusyModel> {
        let Some(Symbol::Func(fi)) = self.chart().lookup("V1") else {
            return Err(Error::UnknownSymbol("V1".into()));
        };
        let sub = |e: &Expr| e.substitute_function(fi, v1);
        Ok(SusyModel {
            structure: self.structure.clone(),
            branch: self.branch,
            h: sub(&self.h)?,
            q1: sub(&self.q1)?,
            q2: sub(&self.q2)?,
        })
    }
}

/// `½(p² + V₁² ± ħ V₁′ σ₃)` as a 2×2 symbol.
pub fn witten_hamiltonian(chart: &Chart, branch: Branch) -> Result<Matrix> {
    let p = chart.var("p")?;
    let hbar = param_expr(chart, "hbar", "the Witten Hamiltonian")?;
    let v1 = formal(chart, "V1", None)?;
    let dv1 = formal(chart, "V1", Some(0))?;
    let kin = &(&(&p * &p) + &(&v1 * &v1)) / 2;
    let spin = &(&(&hbar * &dv1) / 2) * branch.sign();
    let z = Expr::zero(chart);
    Matrix::from_rows(
        chart,
        vec![vec![&kin + &spin, z.clone()], vec![z, &kin - &spin]],
    )
}

/// Both sides of `[Q̂_i, Q̂_j]₊ = 2δ_ij Ĥ` at the symbol level.
#[derive(Clone, Debug)]
pub struct QuantumSusyReport {
    pub i: usize,
    pub j: usize,
    pub lhs: Matrix,
    pub rhs: Matrix,
}

impl QuantumSusyReport {
    pub fn passed(&self) -> bool {
        self.lhs == self.rhs
    }
}

impl fmt::Display for QuantumSusyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "holds" } else { "fails" };
        write!(f, "[Q{}, Q{}]+ = {} {verdict}", self.i, self.j, self.lhs)
    }
}

/// Quantum charges `Q̂_i = (iħ)^{-1/2} W(q_i)` with `W` the fermionic Weyl map.
pub fn quantum_charges(model: &SusyModel) -> Result<[Matrix; 2]> {
    let c = model.chart();
    let reps = clifford_rep(c, &[1, 1])?;
    let xis = [c.gen_index("xi1")?, c.gen_index("xi2")?];
    let taup = param_expr(c, "taup", "quantum charges")?;
    let w = |q: &Expr| fermionic_weyl(q, &xis, &reps)?.scale_left(&taup);
    Ok([w(&model.q1)?, w(&model.q2)?])
}

pub fn quantum_susy_check(model: &SusyModel, i: usize, j: usize) -> Result<QuantumSusyReport> {
    if !(1..=2).contains(&i) || !(1..=2).contains(&j) {
        return Err(Error::InvalidArgument("charge index must be 1 or 2".into()));
    }
    let c = model.chart();
    let a = StarAlgebra::diagonal(c, &[1, 1])?;
    let q = quantum_charges(model)?;
    let (qi, qj) = (&q[i - 1], &q[j - 1]);
    let lhs = moyal_matrix(qi, qj, &a)?.try_add(&moyal_matrix(qj, qi, &a)?)?;
    let reps = clifford_rep(c, &[1, 1])?;
    let xis = [c.gen_index("xi1")?, c.gen_index("xi2")?];
    let hhat = fermionic_weyl(&model.h, &xis, &reps)?;
    let rhs = if i == j {
        hhat.scale_left(&Expr::int(c, 2))?
    } else {
        Matrix::zeros(c, 2, 2)
    };
    Ok(QuantumSusyReport { i, j, lhs, rhs })
}

/// `(x1..x3, p1..p3; xi1..xi3)` with parameters `q`, `m`, `g`, the radical
/// `r² = 1/m`, the quantum parameters and formal `A1..A3`, `phi` of `x`.
pub fn pauli_chart() -> Result<Chart> {
    let xs = ["x1", "x2", "x3"];
    let b = Chart::builder()
        .even(xs)
        .even(["p1", "p2", "p3"])
        .odd(["xi1", "xi2", "xi3"])
        .param("q")
        .param("m")
        .param("g")
        .radical("r", |c| Expr::one(c).divide(&c.var("m")?));
    quantum_params(b)
        .function("A1", xs)
        .function("A2", xs)
        .function("A3", xs)
        .function("phi", xs)
        .build()
}

/// Spin-½ particle in an electromagnetic field.
#[derive(Clone, Debug)]
pub struct PauliModel {
    pub structure: SympStructure,
    pub h: Expr,
    pub q: Expr,
}

pub fn pauli_model(chart: &Chart) -> Result<PauliModel> {
    let s = SympStructure::canonical_even_on(chart, &[1, 1, 1])?;
    let v = |n: &str| chart.var(n);
    let (q, m, g, r) = (v("q")?, v("m")?, v("g")?, v("r")?);
    let a_name = ["A1", "A2", "A3"];
    let pi: Vec<Expr> = (0..3)
        .map(|mu| Ok(&v(&format!("p{}", mu + 1))? + &(&q * &formal(chart, a_name[mu], None)?)))
        .collect::<Result<_>>()?;
    let xi: Vec<Expr> = (1..=3)
        .map(|k| v(&format!("xi{k}")))
        .collect::<Result<_>>()?;
    let pi2 = pi.iter().fold(Expr::zero(chart), |acc, e| &acc + &(e * e));
    let two_m = &m * 2;
    let mut h = pi2.divide(&two_m)? + &q * &formal(chart, "phi", None)?;
    let spin = (&g * &q).divide(&two_m)?;
    for al in 0..3 {
        for be in 0..3 {
            if al != be {
                let da = formal(chart, a_name[be], Some(al))?;
                h = &h + &(&(&(&spin * &da) * &xi[al]) * &xi[be]);
            }
        }
    }
    // B^μ = ε^{μαβ} ∂_α A_β
    let curl = |mu: usize| -> Result<Expr> {
        let (a, b) = ((mu + 1) % 3, (mu + 2) % 3);
        Ok(&formal(chart, a_name[b], Some(a))? - &formal(chart, a_name[a], Some(b))?)
    };
    let triple = &(&xi[0] * &xi[1]) * &xi[2];
    let corr = (&q * &(&g - &Expr::int(chart, 2))).divide(&(&pi2 * 2))?;
    let mut qq = Expr::zero(chart);
    for mu in 0..3 {
        let inner = &xi[mu] + &(&(&corr * &curl(mu)?) * &triple);
        qq = &qq + &(&pi[mu] * &inner);
    }
    let qq = &r * &qq;
    Ok(PauliModel {
        structure: s,
        h,
        q: qq,
    })
}

/// Outcome of the Pauli `{Q, Q} = 2H` and symmetry checks.
#[derive(Clone, Debug)]
pub struct PauliReport {
    /// `{Q,Q} − 2H` for the general Landé factor in a magnetostatic field.
    pub general_residual: Expr,
    /// The same residual at `g = 2`.
    pub dirac_residual: Expr,
    /// Symmetry verdict for `ζ_Q` at `g = 2`.
    pub symmetry: CartanVerdict,
}

impl fmt::Display for PauliReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{{Q,Q}} - 2H at g = 2: {}", self.dirac_residual)?;
        writeln!(f, "zeta_Q at g = 2: {}", self.symmetry)?;
        write!(f, "{{Q,Q}} - 2H for general g: {}", self.general_residual)
    }
}

pub fn pauli_report(model: &PauliModel) -> Result<PauliReport> {
    let c = model.structure.base().clone();
    let Some(Symbol::Func(phi)) = c.lookup("phi") else {
        return Err(Error::UnknownSymbol("phi".into()));
    };
    let zero = Expr::zero(&c);
    let h = model.h.substitute_function(phi, &zero)?;
    let q = &model.q;
    let s = &model.structure;
    let general_residual = poisson(q, q, s)?.try_sub(&(&h * 2))?;
    let Some(Symbol::Param(g)) = c.lookup("g") else {
        return Err(Error::UnknownSymbol("g".into()));
    };
    let at2 = [(Symbol::Param(g), Expr::int(&c, 2))];
    let dirac_residual = general_residual.substitute(&at2)?;
    let q2 = q.substitute(&at2)?;
    let h2 = h.substitute(&at2)?;
    let symmetry = cartan_symmetry(&hamiltonian_vf(&q2, s)?, s, &h2, Some(&q2))?;
    Ok(PauliReport {
        general_residual,
        dirac_residual,
        symmetry,
    })
}

/// `f ⋆ g = fg + {f, κg}` on a canonical odd structure, `κ` an odd generator.
pub fn odd_star(f: &Expr, g: &Expr, kappa: u16, s: &SympStructure) -> Result<Expr> {
    let chart = f.chart().join(g.chart())?;
    if (kappa as usize) < s.base().n_generators()
        || kappa as usize >= chart.n_generators()
        || !chart.gen_parity(kappa).is_odd()
    {
        return Err(Error::InvalidArgument(
            "κ must be an extra odd generator".into(),
        ));
    }
    if !s.kind().is_odd() {
        return Err(Error::InvalidArgument(
            "odd star needs an odd structure".into(),
        ));
    }
    let kg = Expr::generator(&chart, kappa).try_mul(g)?;
    f.try_mul(g)?.try_add(&poisson(f, &kg, s)?)
}

/// Schouten bracket of multivector fields written as functions on ΠT*M.
pub fn schouten_bracket(p1: &Expr, p2: &Expr, s: &SympStructure) -> Result<Expr> {
    if !s.kind().is_odd() {
        return Err(Error::InvalidArgument(
            "Schouten bracket needs an odd structure".into(),
        ));
    }
    poisson(p1, p2, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn algebra(m: usize, sig: &[i64]) -> StarAlgebra {
        let xs: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
        let ps: Vec<String> = (1..=m).map(|i| format!("p{i}")).collect();
        let xis: Vec<String> = (1..=sig.len()).map(|i| format!("xi{i}")).collect();
        let c = quantum_params(Chart::builder().even(&xs).even(&ps).odd(&xis))
            .build()
            .unwrap();
        StarAlgebra::diagonal(&c, sig).unwrap()
    }

    #[test]
    fn canonical_relations() {
        let a = algebra(1, &[1, -1]);
        let c = a.chart();
        let v = |n: &str| c.var(n).unwrap();
        let ih = &Expr::i(c) * &a.hbar();
        let pair = star_bracket(&v("p1"), &v("x1"), &a, Bracket::Commutator).unwrap();
        assert_eq!(pair, ih);
        let xx = star_bracket(&v("x1"), &v("x1"), &a, Bracket::Commutator).unwrap();
        assert!(xx.is_zero());
        let s11 = star_bracket(&v("xi1"), &v("xi1"), &a, Bracket::Anticommutator).unwrap();
        assert_eq!(s11, ih);
        let s22 = star_bracket(&v("xi2"), &v("xi2"), &a, Bracket::Anticommutator).unwrap();
        assert_eq!(s22, -&ih);
        let s12 = star_bracket(&v("xi1"), &v("xi2"), &a, Bracket::Anticommutator).unwrap();
        assert!(s12.is_zero());
        let f = &(&(&v("p1") * &v("xi1")) * &v("xi2")) + &v("x1");
        assert_eq!(moyal_star(&f, &Expr::one(c), &a).unwrap(), f);
    }

    #[test]
    fn rejects_momentum_denominator() {
        let a = algebra(1, &[]);
        let c = a.chart();
        let f = Expr::one(c).divide(&c.var("p1").unwrap()).unwrap();
        assert!(moyal_star(&f, &c.var("x1").unwrap(), &a).is_err());
    }

    #[test]
    fn clifford_anticommutators() {
        for n in 1..=4usize {
            for mask in 0..(1u32 << n) {
                let sig: Vec<i64> = (0..n)
                    .map(|k| if mask >> k & 1 == 1 { -1 } else { 1 })
                    .collect();
                let a = algebra(1, &sig);
                let c = a.chart();
                let reps = clifford_rep(c, &sig).unwrap();
                let d = 1usize << (n / 2);
                let ih = &Expr::i(c) * &a.hbar();
                for al in 0..n {
                    assert_eq!(reps[al].rows(), d);
                    for be in 0..n {
                        let ab = reps[al].try_mul(&reps[be]).unwrap();
                        let ba = reps[be].try_mul(&reps[al]).unwrap();
                        let lhs = ab.try_add(&ba).unwrap();
                        let g = if al == be {
                            Expr::int(c, sig[al])
                        } else {
                            Expr::zero(c)
                        };
                        let rhs = Matrix::identity(c, d).scale_left(&(&ih * &g)).unwrap();
                        assert_eq!(lhs, rhs, "n={n} sig={sig:?} ({al},{be})");
                    }
                }
            }
        }
    }

    #[test]
    fn three_dimensional_rep_is_pauli() {
        let a = algebra(1, &[1, 1, 1]);
        let c = a.chart();
        let reps = clifford_rep(c, &[1, 1, 1]).unwrap();
        let tau = c.var("tau").unwrap();
        for (r, s) in reps.iter().zip(pauli_matrices(c)) {
            assert_eq!(r, &s.scale_left(&tau).unwrap());
        }
    }

    #[test]
    fn weyl_and_witten() {
        let c = susy_chart().unwrap();
        let reps = clifford_rep(&c, &[1, 1]).unwrap();
        let xis = [c.gen_index("xi1").unwrap(), c.gen_index("xi2").unwrap()];
        let v = |n: &str| c.var(n).unwrap();
        let hb = v("hbar");
        let s3 = pauli_matrices(&c)[2].clone();
        let w = fermionic_weyl(&(&v("xi2") * &v("xi1")), &xis, &reps).unwrap();
        assert_eq!(w, s3.scale_left(&(&hb / 2)).unwrap());
        assert_eq!(
            fermionic_weyl(&Expr::one(&c), &xis, &reps).unwrap(),
            Matrix::identity(&c, 2)
        );
        assert_eq!(fermionic_weyl(&v("xi1"), &xis, &reps).unwrap(), reps[0]);
        for br in [Branch::Plus, Branch::Minus] {
            let m = susy_model(&c, br).unwrap();
            let wh = witten_hamiltonian(&c, br).unwrap();
            assert_eq!(fermionic_weyl(&m.h, &xis, &reps).unwrap(), wh);
        }
    }

    #[test]
    fn ladder_relations() {
        let c = susy_chart().unwrap();
        let a = StarAlgebra::diagonal(&c, &[1, 1]).unwrap();
        let l = ladder_ops(&a).unwrap();
        let bb = star_bracket(&l.b, &l.b_dag, &a, Bracket::Commutator).unwrap();
        assert_eq!(bb, Expr::one(&c));
        let ff =
            l.f.try_mul(&l.f_dag)
                .unwrap()
                .try_add(&l.f_dag.try_mul(&l.f).unwrap())
                .unwrap();
        assert_eq!(ff, Matrix::identity(&c, 2));
        assert!(l.f.try_mul(&l.f).unwrap().is_zero());
    }

    #[test]
    fn classical_susy() {
        let c = susy_chart().unwrap();
        for br in [Branch::Plus, Branch::Minus] {
            let m = susy_model(&c, br).unwrap();
            let s = &m.structure;
            assert!(poisson(&m.h, &m.q1, s).unwrap().is_zero());
            assert!(poisson(&m.h, &m.q2, s).unwrap().is_zero());
            assert!(poisson(&m.q1, &m.q2, s).unwrap().is_zero());
            assert_eq!(poisson(&m.q1, &m.q1, s).unwrap(), &m.h * 2);
            assert_eq!(poisson(&m.q2, &m.q2, s).unwrap(), &m.h * 2);
        }
        let m = susy_model(&c, Branch::Plus).unwrap();
        let zq = hamiltonian_vf(&m.q1, &m.structure).unwrap();
        let v = cartan_symmetry(&zq, &m.structure, &m.h, Some(&m.q1)).unwrap();
        assert!(v.is_exact() && v.is_conserved());
    }

    #[test]
    fn second_charge_sign() {
        let c = susy_chart().unwrap();
        let m = susy_model(&c, Branch::Plus).unwrap();
        let v = |n: &str| c.var(n).unwrap();
        let same_sign = &(&v("p") * &v("xi2")) - &(&v("V1") * &v("xi1"));
        let r = poisson(&m.h, &same_sign, &m.structure).unwrap();
        let dv = formal(&c, "V1", Some(0)).unwrap();
        let expect = &(&(&(&v("p") * &dv) * &v("xi1")) + &(&(&v("V1") * &dv) * &v("xi2"))) * -2;
        assert_eq!(r, expect);
    }

    #[test]
    fn quantum_susy() {
        let c = susy_chart().unwrap();
        for br in [Branch::Plus, Branch::Minus] {
            let m = susy_model(&c, br).unwrap();
            for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                let r = quantum_susy_check(&m, i, j).unwrap();
                assert!(r.passed(), "{br} {i}{j}: {} vs {}", r.lhs, r.rhs);
            }
            let osc = m.specialize(&c.var("x").unwrap()).unwrap();
            assert!(quantum_susy_check(&osc, 1, 1).unwrap().passed());
        }
    }

    #[test]
    fn pauli_identities() {
        let c = pauli_chart().unwrap();
        let m = pauli_model(&c).unwrap();
        let r = pauli_report(&m).unwrap();
        assert!(r.dirac_residual.is_zero(), "{}", r.dirac_residual);
        assert!(r.symmetry.is_exact(), "{}", r.symmetry);
    }

    #[test]
    fn free_pauli_charge() {
        let c = pauli_chart().unwrap();
        let m = pauli_model(&c).unwrap();
        let v = |n: &str| c.var(n).unwrap();
        let Some(Symbol::Param(q)) = c.lookup("q") else {
            panic!()
        };
        let free = [(Symbol::Param(q), Expr::zero(&c))];
        let qf = m.q.substitute(&free).unwrap();
        let expect = (1..=3).fold(Expr::zero(&c), |acc, k| {
            &acc + &(&v(&format!("p{k}")) * &v(&format!("xi{k}")))
        });
        assert_eq!(qf, &v("r") * &expect);
        let p2 = (1..=3).fold(Expr::zero(&c), |acc, k| &acc + &v(&format!("p{k}")).pow(2));
        let qq = poisson(&qf, &qf, &m.structure).unwrap();
        assert_eq!(qq, p2.divide(&v("m")).unwrap());
    }

    #[test]
    fn odd_star_examples() {
        let s = SympStructure::canonical_odd(1).unwrap();
        let c = s.base().with_generators(&[("kappa", Parity::Odd)]).unwrap();
        let k = c.gen_index("kappa").unwrap();
        let v = |n: &str| c.var(n).unwrap();
        let r = odd_star(&v("xi"), &v("x"), k, &s).unwrap();
        assert_eq!(r, &(&v("xi") * &v("x")) + &v("kappa"));
        assert_eq!(odd_star(&v("x"), &v("x"), k, &s).unwrap(), v("x").pow(2));
    }

    #[test]
    fn schouten_examples() {
        let s = SympStructure::canonical_odd(2).unwrap();
        let c = s.base();
        let v = |n: &str| c.var(n).unwrap();
        assert!(schouten_bracket(&v("x1"), &v("x2"), &s).unwrap().is_zero());
        let p = &(&v("xi1") * &v("xi2")) * 3;
        assert!(schouten_bracket(&p, &p, &s).unwrap().is_zero());
    }
}
