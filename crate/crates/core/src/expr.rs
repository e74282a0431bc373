//! Canonical graded expressions: a super-polynomial numerator over a common
//! even denominator, with parameter rewrites always applied.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::Zero;

use crate::chart::{Chart, Parity, Symbol};
use crate::error::{Error, Result};
use crate::poly::{self, FuncInst, Mono, Poly, Var};
use crate::scalar::Scalar;

/// An element of the graded-commutative algebra of a chart.
///
/// `num` may contain odd generators; `den` is odd-free, coprime to the
/// odd-components of `num`, free of radical parameters and monic.
#[derive(Clone)]
pub struct Expr {
    chart: Chart,
    num: Poly,
    den: Poly,
}

impl PartialEq for Expr {
    fn eq(&self, o: &Self) -> bool {
        (self.chart.extends(&o.chart) || o.chart.extends(&self.chart))
            && self.num == o.num
            && self.den == o.den
    }
}

impl Eq for Expr {}

/// Rewrites `p^k → p^(k mod 2)·target^(k/2)` for every radical parameter.
/// Returns the rewritten numerator and the denominator it picked up.
fn apply_rewrites(chart: &Chart, p: &Poly) -> (Poly, Poly) {
    let mut num = p.clone();
    let mut den = Poly::one();
    for (i, param) in chart.params().iter().enumerate() {
        let Some(rw) = &param.rewrite else { continue };
        let v = Var::Param(i as u16);
        let kmax = num
            .terms()
            .map(|(m, _)| m.exponent(&v) / 2)
            .max()
            .unwrap_or(0);
        if kmax == 0 {
            continue;
        }
        let tn: Vec<Poly> = (0..=kmax).map(|j| rw.num.pow(j)).collect();
        let td: Vec<Poly> = (0..=kmax).map(|j| rw.den.pow(j)).collect();
        let mut out = Poly::zero();
        for (m, c) in num.terms() {
            let e = m.exponent(&v);
            let j = e / 2;
            let t = Poly::term(m.with_exponent(&v, e % 2), c.clone());
            let t = if j == 0 { t } else { t.mul(&tn[j as usize]) };
            let t = if kmax == j {
                t
            } else {
                t.mul(&td[(kmax - j) as usize])
            };
            out = out.add(&t);
        }
        num = out;
        if !rw.den.is_one() {
            den = den.mul(&td[kmax as usize]);
        }
    }
    (num, den)
}

fn needs_rewrite(chart: &Chart, p: &Poly) -> bool {
    chart.has_rewrites()
        && p.terms().any(|(m, _)| {
            m.even_part()
                .iter()
                .any(|(v, e)| *e >= 2 && matches!(v, Var::Param(i) if chart.rewrite(*i).is_some()))
        })
}

/// Splits a polynomial linear in `v` as `a + b·v`.
fn split_linear(p: &Poly, v: &Var) -> (Poly, Poly) {
    let mut a = Poly::zero();
    let mut b = Poly::zero();
    for (m, c) in p.terms() {
        match m.exponent(v) {
            0 => a.add_term(m.clone(), c.clone()),
            _ => b.add_term(m.with_exponent(v, 0), c.clone()),
        }
    }
    (a, b)
}

impl Expr {
    pub(crate) fn from_parts(chart: &Chart, num: Poly, den: Poly) -> Result<Expr> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if den.has_odd() {
            return Err(Error::InvalidDenominator("contains odd generators".into()));
        }
        let (mut num, mut den) = (num, den);
        if den.is_one() {
            if needs_rewrite(chart, &num) {
                let (n, d) = apply_rewrites(chart, &num);
                num = n;
                den = d;
            } else {
                return Ok(Expr {
                    chart: chart.clone(),
                    num,
                    den,
                });
            }
        } else if chart.has_rewrites() {
            let (n1, d1) = apply_rewrites(chart, &num);
            let (n2, d2) = apply_rewrites(chart, &den);
            num = n1.mul(&d2);
            den = n2.mul(&d1);
        }
        // rationalize radicals out of the denominator
        for (i, param) in chart.params().iter().enumerate() {
            let Some(rw) = &param.rewrite else { continue };
            let v = Var::Param(i as u16);
            if !den.contains_var(&v) {
                continue;
            }
            let (a, b) = split_linear(&den, &v);
            let sigma = Poly::term(Mono::var(v.clone(), 1), Scalar::one());
            let conj = a.sub(&b.mul(&sigma));
            let (n, d) = apply_rewrites(chart, &num.mul(&conj).mul(&rw.den));
            num = n;
            den = a.mul(&a).mul(&rw.den).sub(&b.mul(&b).mul(&rw.num)).mul(&d);
            if den.is_zero() {
                return Err(Error::NotInvertible(
                    "radical denominator is a zero divisor".into(),
                ));
            }
        }
        Ok(Expr::reduce(chart, num, den))
    }

    fn reduce(chart: &Chart, num: Poly, den: Poly) -> Expr {
        if num.is_zero() {
            return Expr::zero(chart);
        }
        if let Some(c) = den.as_constant() {
            let inv = c.inv().expect("nonzero denominator");
            return Expr {
                chart: chart.clone(),
                num: num.scale(&inv),
                den: Poly::one(),
            };
        }
        let mut g = den.clone();
        for c in num.split_by_odd().values() {
            g = poly::gcd(&g, c);
            if g.as_constant().is_some() {
                break;
            }
        }
        let (mut num, mut den) = (num, den);
        if g.as_constant().is_none() {
            num = num
                .split_by_odd()
                .into_iter()
                .map(|(mask, c)| {
                    let q = poly::div_exact(&c, &g).expect("gcd divides coefficient");
                    q.mul_mono(
                        &Mono {
                            even: Vec::new(),
                            odd: mask,
                        },
                        &Scalar::one(),
                    )
                })
                .fold(Poly::zero(), |acc, p| acc.add(&p));
            den = poly::div_exact(&den, &g).expect("gcd divides denominator");
        }
        if let Some(c) = den.as_constant() {
            let inv = c.inv().unwrap();
            return Expr {
                chart: chart.clone(),
                num: num.scale(&inv),
                den: Poly::one(),
            };
        }
        let lc = den.lex_leading_coeff().unwrap().inv().unwrap();
        Expr {
            chart: chart.clone(),
            num: num.scale(&lc),
            den: den.scale(&lc),
        }
    }

    /// Polynomial expression; parameter rewrites are applied.
    pub fn from_poly(chart: &Chart, num: Poly) -> Expr {
        Expr::from_parts(chart, num, Poly::one()).expect("polynomial with unit denominator")
    }

    pub fn zero(chart: &Chart) -> Expr {
        Expr {
            chart: chart.clone(),
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one(chart: &Chart) -> Expr {
        Expr::constant(chart, Scalar::one())
    }

    pub fn constant(chart: &Chart, c: Scalar) -> Expr {
        Expr {
            chart: chart.clone(),
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn int(chart: &Chart, v: i64) -> Expr {
        Expr::constant(chart, Scalar::from(v))
    }

    pub fn ratio(chart: &Chart, n: i64, d: i64) -> Expr {
        Expr::constant(chart, Scalar::ratio(n, d))
    }

    /// The imaginary unit.
    pub fn i(chart: &Chart) -> Expr {
        Expr::constant(chart, Scalar::i())
    }

    /// Generator `z^idx`.
    pub fn generator(chart: &Chart, idx: u16) -> Expr {
        assert!(
            (idx as usize) < chart.n_generators(),
            "generator index out of range"
        );
        let m = match chart.gen_parity(idx) {
            Parity::Odd => Mono::odd_gen(idx),
            Parity::Even => Mono::var(Var::Gen(idx), 1),
        };
        Expr {
            chart: chart.clone(),
            num: Poly::term(m, Scalar::one()),
            den: Poly::one(),
        }
    }

    pub fn param(chart: &Chart, idx: u16) -> Expr {
        assert!(
            (idx as usize) < chart.params().len(),
            "parameter index out of range"
        );
        Expr::from_poly(
            chart,
            Poly::term(Mono::var(Var::Param(idx), 1), Scalar::one()),
        )
    }

    /// Formal function instance `D[deriv] f(args)`.
    pub fn function(chart: &Chart, func: u16, deriv: Vec<u32>, args: Vec<u16>) -> Result<Expr> {
        let decl = chart
            .functions()
            .get(func as usize)
            .ok_or_else(|| Error::UnknownSymbol(format!("function #{func}")))?;
        if args.len() != decl.args.len() || deriv.len() != args.len() {
            return Err(Error::InvalidArgument(format!(
                "`{}` takes {} argument(s)",
                decl.name,
                decl.args.len()
            )));
        }
        for a in &args {
            if *a as usize >= chart.n_generators() || chart.gen_parity(*a).is_odd() {
                return Err(Error::ParityMismatch(format!(
                    "arguments of `{}` must be even generators",
                    decl.name
                )));
            }
        }
        let inst = Var::Func(Arc::new(FuncInst { func, deriv, args }));
        Ok(Expr::from_poly(
            chart,
            Poly::term(Mono::var(inst, 1), Scalar::one()),
        ))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// The value if this is a constant.
    pub fn as_constant(&self) -> Option<Scalar> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    /// Terms of the numerator in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Scalar)> {
        self.num.terms()
    }

    /// `None` for mixed parity; zero is even.
    pub fn parity(&self) -> Option<Parity> {
        let mut it = self.num.terms().map(|(m, _)| Parity::from_bit(m.odd_len()));
        match it.next() {
            None => Some(Parity::Even),
            Some(p) => it.all(|q| q == p).then_some(p),
        }
    }

    /// Homogeneous parity or an error naming `what`.
    pub fn homogeneous(&self, what: &str) -> Result<Parity> {
        self.parity()
            .ok_or_else(|| Error::MixedParity(what.to_string()))
    }

    /// Whether generator `idx` (or parameter, function) occurs.
    pub fn contains(&self, v: &Var) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    pub fn contains_gen(&self, idx: u16) -> bool {
        match self.chart.gen_parity(idx) {
            Parity::Odd => self.num.odd_support() & (1u64 << idx) != 0,
            Parity::Even => {
                let v = Var::Gen(idx);
                let uses = |p: &Poly| {
                    p.terms().any(|(m, _)| {
                        m.even_part().iter().any(|(w, _)| match w {
                            Var::Func(fi) => fi.args.contains(&idx),
                            _ => *w == v,
                        })
                    })
                };
                uses(&self.num) || uses(&self.den)
            }
        }
    }

    pub fn scale(&self, s: &Scalar) -> Expr {
        if s.is_zero() {
            return Expr::zero(&self.chart);
        }
        Expr {
            chart: self.chart.clone(),
            num: self.num.scale(s),
            den: self.den.clone(),
        }
    }

    /// Re-homes this expression on a chart extending its own.
    pub fn embed(&self, chart: &Chart) -> Result<Expr> {
        if !chart.extends(&self.chart) {
            return Err(Error::ChartMismatch);
        }
        Ok(Expr {
            chart: chart.clone(),
            num: self.num.clone(),
            den: self.den.clone(),
        })
    }

    /// Moves to a prefix chart; fails if a dropped symbol occurs.
    pub fn restrict(&self, chart: &Chart) -> Result<Expr> {
        if !self.chart.extends(chart) {
            return Err(Error::ChartMismatch);
        }
        let ng = chart.n_generators() as u16;
        let np = chart.params().len() as u16;
        let nf = chart.functions().len() as u16;
        let ok_var = |v: &Var| match v {
            Var::Gen(i) => *i < ng,
            Var::Param(i) => *i < np,
            Var::Func(fi) => fi.func < nf && fi.args.iter().all(|a| *a < ng),
        };
        for p in [&self.num, &self.den] {
            for (m, _) in p.terms() {
                if m.odd_mask() >> ng != 0 || !m.even_part().iter().all(|(v, _)| ok_var(v)) {
                    return Err(Error::InvalidArgument(
                        "expression uses symbols outside the target chart".into(),
                    ));
                }
            }
        }
        Ok(Expr {
            chart: chart.clone(),
            num: self.num.clone(),
            den: self.den.clone(),
        })
    }

    fn aligned(&self, o: &Expr) -> Result<(Chart, Expr, Expr)> {
        if self.chart.same_instance(&o.chart) {
            return Ok((self.chart.clone(), self.clone(), o.clone()));
        }
        let c = self.chart.join(&o.chart)?;
        Ok((c.clone(), self.embed(&c)?, o.embed(&c)?))
    }

    pub fn try_add(&self, o: &Expr) -> Result<Expr> {
        let (c, a, b) = self.aligned(o)?;
        if a.den == b.den {
            return if a.den.is_one() {
                Ok(Expr {
                    chart: c,
                    num: a.num.add(&b.num),
                    den: a.den,
                })
            } else {
                Ok(Expr::reduce(&c, a.num.add(&b.num), a.den))
            };
        }
        let g = poly::gcd(&a.den, &b.den);
        let ca = poly::div_exact(&b.den, &g).unwrap();
        let cb = poly::div_exact(&a.den, &g).unwrap();
        let num = a.num.mul(&ca).add(&b.num.mul(&cb));
        Ok(Expr::reduce(&c, num, a.den.mul(&ca)))
    }

    pub fn try_sub(&self, o: &Expr) -> Result<Expr> {
        self.try_add(&-o)
    }

    pub fn try_mul(&self, o: &Expr) -> Result<Expr> {
        let (c, a, b) = self.aligned(o)?;
        let num = a.num.mul(&b.num);
        if a.den.is_one() && b.den.is_one() {
            return Expr::from_parts(&c, num, Poly::one());
        }
        Expr::from_parts(&c, num, a.den.mul(&b.den))
    }

    pub fn pow(&self, e: u32) -> Expr {
        let mut acc = Expr::one(&self.chart);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Multiplicative inverse of an even expression with invertible body.
    pub fn inverse(&self) -> Result<Expr> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.parity() != Some(Parity::Even) {
            return Err(Error::NotInvertible("odd or mixed expression".into()));
        }
        let mut body = Poly::zero();
        let mut soul = Poly::zero();
        for (m, c) in self.num.terms() {
            if m.odd_mask() == 0 {
                body.add_term(m.clone(), c.clone());
            } else {
                soul.add_term(m.clone(), c.clone());
            }
        }
        if body.is_zero() {
            return Err(Error::NotInvertible("nilpotent expression".into()));
        }
        let den = Expr::from_parts(&self.chart, self.den.clone(), Poly::one())?;
        let binv = Expr::from_parts(&self.chart, Poly::one(), body)?;
        if soul.is_zero() {
            return Ok(&den * &binv);
        }
        let s = -(&Expr::from_poly(&self.chart, soul) * &binv);
        let mut series = Expr::one(&self.chart);
        let mut term = Expr::one(&self.chart);
        loop {
            term = &term * &s;
            if term.is_zero() {
                break;
            }
            series = &series + &term;
        }
        Ok(&(&den * &binv) * &series)
    }

    /// Division by an even, nonzero, odd-free expression.
    pub fn divide(&self, d: &Expr) -> Result<Expr> {
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if d.num.has_odd() {
            return Err(Error::InvalidDenominator(
                "denominator contains odd generators".into(),
            ));
        }
        self.try_mul(&d.inverse()?)
    }

    /// Keeps only terms with `v`-degree at most `max` in the numerator.
    pub fn truncate(&self, v: &Var, max: u32) -> Expr {
        let mut num = Poly::zero();
        for (m, c) in self.num.terms() {
            if m.exponent(v) <= max {
                num.add_term(m.clone(), c.clone());
            }
        }
        Expr::reduce(&self.chart, num, self.den.clone())
    }

    /// Keeps only terms whose combined degree in `vars` is at most `max`.
    pub fn truncate_total(&self, vars: &[Var], max: u32) -> Expr {
        let mut num = Poly::zero();
        for (m, c) in self.num.terms() {
            if vars.iter().map(|v| m.exponent(v)).sum::<u32>() <= max {
                num.add_term(m.clone(), c.clone());
            }
        }
        Expr::reduce(&self.chart, num, self.den.clone())
    }

    /// The numerator coefficient of `v^k` (as an expression over the same denominator).
    pub fn coeff_of(&self, v: &Var, k: u32) -> Expr {
        let mut num = Poly::zero();
        for (m, c) in self.num.terms() {
            if m.exponent(v) == k {
                num.add_term(m.with_exponent(v, 0), c.clone());
            }
        }
        Expr::reduce(&self.chart, num, self.den.clone())
    }

    /// Left derivative with respect to a generator or parameter.
    pub fn deriv(&self, s: Symbol) -> Result<Expr> {
        match s {
            Symbol::Gen(i) if (i as usize) < self.chart.n_generators() => Ok(self.left_deriv(i)),
            Symbol::Param(i) if (i as usize) < self.chart.params().len() => {
                Ok(self.even_deriv(&Var::Param(i)))
            }
            _ => Err(Error::InvalidArgument(
                "derivative by a non-generator".into(),
            )),
        }
    }

    /// Left derivative `∂/∂z^idx`.
    pub fn left_deriv(&self, idx: u16) -> Expr {
        match self.chart.gen_parity(idx) {
            Parity::Odd => {
                let bit = 1u64 << idx;
                let below = bit - 1;
                let mut num = Poly::zero();
                for (m, c) in self.num.terms() {
                    if m.odd_mask() & bit == 0 {
                        continue;
                    }
                    let neg = (m.odd_mask() & below).count_ones() % 2 == 1;
                    let mm = Mono {
                        even: m.even_part().to_vec(),
                        odd: m.odd_mask() & !bit,
                    };
                    num.add_term(mm, if neg { -c } else { c.clone() });
                }
                Expr {
                    chart: self.chart.clone(),
                    num,
                    den: self.den.clone(),
                }
                .renormalized()
            }
            Parity::Even => self.even_deriv(&Var::Gen(idx)),
        }
    }

    fn renormalized(self) -> Expr {
        if self.den.is_one() {
            self
        } else {
            Expr::reduce(&self.chart, self.num, self.den)
        }
    }

    fn even_deriv(&self, v: &Var) -> Expr {
        let dn = d_poly(&self.chart, &self.num, v);
        if self.den.is_one() {
            return dn;
        }
        let dd = d_poly(&self.chart, &self.den, v);
        let inv = Expr::from_parts(&self.chart, Poly::one(), self.den.clone()).unwrap();
        let n = Expr::from_poly(&self.chart, self.num.clone());
        &(&dn * &inv) - &(&(&n * &dd) * &(&inv * &inv))
    }

    /// Simultaneous substitution of generators and plain parameters.
    pub fn substitute(&self, map: &[(Symbol, Expr)]) -> Result<Expr> {
        let mut chart = self.chart.clone();
        for (_, e) in map {
            chart = chart.join(e.chart())?;
        }
        let mut gens: BTreeMap<u16, Expr> = BTreeMap::new();
        let mut params: BTreeMap<u16, Expr> = BTreeMap::new();
        for (s, e) in map {
            let e = e.embed(&chart)?;
            match *s {
                Symbol::Gen(i) if (i as usize) < self.chart.n_generators() => {
                    let p = self.chart.gen_parity(i);
                    if !e.is_zero() && e.parity() != Some(p) {
                        return Err(Error::ParityMismatch(format!(
                            "image of `{}` must be {p}",
                            self.chart.generator(i).name
                        )));
                    }
                    gens.insert(i, e);
                }
                Symbol::Param(i) if (i as usize) < self.chart.params().len() => {
                    if self.chart.params()[i as usize].has_rewrite() {
                        return Err(Error::Unsupported(format!(
                            "substituting radical parameter `{}`",
                            self.chart.params()[i as usize].name
                        )));
                    }
                    if !e.is_zero() && e.parity() != Some(Parity::Even) {
                        return Err(Error::ParityMismatch(
                            "parameter images must be even".into(),
                        ));
                    }
                    params.insert(i, e);
                }
                _ => return Err(Error::InvalidArgument("substitution key".into())),
            }
        }
        let renames: BTreeMap<u16, u16> = gens
            .iter()
            .filter_map(|(k, e)| single_generator(e).map(|g| (*k, g)))
            .collect();
        let mut cache: BTreeMap<Var, Vec<Expr>> = BTreeMap::new();
        let num = self.subst_poly(&self.num, &chart, &gens, &params, &renames, &mut cache)?;
        if self.den.is_one() {
            return Ok(num);
        }
        let den = self.subst_poly(&self.den, &chart, &gens, &params, &renames, &mut cache)?;
        num.try_mul(&den.inverse()?)
    }

    fn subst_poly(
        &self,
        p: &Poly,
        chart: &Chart,
        gens: &BTreeMap<u16, Expr>,
        params: &BTreeMap<u16, Expr>,
        renames: &BTreeMap<u16, u16>,
        cache: &mut BTreeMap<Var, Vec<Expr>>,
    ) -> Result<Expr> {
        let mut out = Expr::zero(chart);
        for (m, c) in p.terms() {
            let mut t = Expr::constant(chart, c.clone());
            for (v, e) in m.even_part() {
                let img = match v {
                    Var::Gen(i) => gens.get(i).cloned(),
                    Var::Param(i) => params.get(i).cloned(),
                    Var::Func(fi) => {
                        if fi.args.iter().any(|a| gens.contains_key(a)) {
                            let mut args = Vec::with_capacity(fi.args.len());
                            for a in &fi.args {
                                match (gens.contains_key(a), renames.get(a)) {
                                    (false, _) => args.push(*a),
                                    (true, Some(g)) => args.push(*g),
                                    (true, None) => {
                                        return Err(Error::Unsupported(
                                            "substituting a non-generator into a formal function argument"
                                                .into(),
                                        ))
                                    }
                                }
                            }
                            Some(Expr::function(chart, fi.func, fi.deriv.clone(), args)?)
                        } else {
                            None
                        }
                    }
                };
                let base = img.unwrap_or_else(|| {
                    Expr::from_poly(chart, Poly::term(Mono::var(v.clone(), 1), Scalar::one()))
                });
                let pows = cache
                    .entry(v.clone())
                    .or_insert_with(|| vec![Expr::one(chart)]);
                while pows.len() <= *e as usize {
                    let next = pows.last().unwrap() * &base;
                    pows.push(next);
                }
                t = &t * &pows[*e as usize];
            }
            for j in m.odd_indices() {
                let img = gens
                    .get(&j)
                    .cloned()
                    .unwrap_or_else(|| Expr::generator(chart, j));
                t = &t * &img;
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Replaces the formal function `func` by `value`, an expression in the
    /// function's declared arguments; derivatives of the function become
    /// derivatives of `value`.
    pub fn substitute_function(&self, func: u16, value: &Expr) -> Result<Expr> {
        let decl = self
            .chart
            .functions()
            .get(func as usize)
            .ok_or_else(|| Error::UnknownSymbol(format!("function #{func}")))?
            .clone();
        let chart = self.chart.join(value.chart())?;
        let value = value.embed(&chart)?;
        let mut images: BTreeMap<Var, Expr> = BTreeMap::new();
        for p in [&self.num, &self.den] {
            for v in p.vars() {
                let Var::Func(fi) = &v else { continue };
                if fi.func != func || images.contains_key(&v) {
                    continue;
                }
                let mut e = value.clone();
                for (k, d) in fi.deriv.iter().enumerate() {
                    for _ in 0..*d {
                        e = e.left_deriv(decl.args[k]);
                    }
                }
                if fi.args != decl.args {
                    let map: Vec<(Symbol, Expr)> = decl
                        .args
                        .iter()
                        .zip(&fi.args)
                        .map(|(a, b)| (Symbol::Gen(*a), Expr::generator(&chart, *b)))
                        .collect();
                    e = e.substitute(&map)?;
                }
                images.insert(v.clone(), e);
            }
        }
        let sub = |p: &Poly| -> Expr {
            let mut out = Expr::zero(&chart);
            for (m, c) in p.terms() {
                let mut t = Expr::from_poly(&chart, Poly::term(m.odd_only(), c.clone()));
                for (v, e) in m.even_part() {
                    let base = images.get(v).cloned().unwrap_or_else(|| {
                        Expr::from_poly(&chart, Poly::term(Mono::var(v.clone(), 1), Scalar::one()))
                    });
                    t = &t * &base.pow(*e);
                }
                out = &out + &t;
            }
            out
        };
        let num = sub(&self.num);
        if self.den.is_one() {
            return Ok(num);
        }
        num.try_mul(&sub(&self.den).inverse()?)
    }
}

/// The generator index if `e` is exactly one even generator.
fn single_generator(e: &Expr) -> Option<u16> {
    if !e.den.is_one() || e.num.len() != 1 {
        return None;
    }
    let (m, c) = e.num.terms().next()?;
    match (m.even_part(), m.odd_mask(), c.is_one()) {
        ([(Var::Gen(g), 1)], 0, true) => Some(*g),
        _ => None,
    }
}

/// `∂P/∂v` for a commuting variable, including the chain rule through formal
/// functions and radical parameters.
fn d_poly(chart: &Chart, p: &Poly, v: &Var) -> Expr {
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        for (w, e) in m.even_part() {
            if w == v {
                out.add_term(m.with_exponent(w, e - 1), c * &Scalar::from(*e as i64));
            } else if let (Var::Func(fi), Var::Gen(x)) = (w, v) {
                let lowered = m.with_exponent(w, e - 1);
                for (k, a) in fi.args.iter().enumerate() {
                    if a != x {
                        continue;
                    }
                    let mut inst = (**fi).clone();
                    inst.deriv[k] += 1;
                    let nv = Var::Func(Arc::new(inst));
                    let mm = lowered.with_exponent(&nv, lowered.exponent(&nv) + 1);
                    out.add_term(mm, c * &Scalar::from(*e as i64));
                }
            }
        }
    }
    let mut res = Expr::from_poly(chart, out);
    for (i, param) in chart.params().iter().enumerate() {
        let Some(rw) = &param.rewrite else { continue };
        if !rw.num.contains_var(v) && !rw.den.contains_var(v) {
            continue;
        }
        let s = Var::Param(i as u16);
        let dp = p.partial_plain(&s);
        if dp.is_zero() {
            continue;
        }
        // dσ/dv = σ·T'/(2T)
        let t = Expr::from_parts(chart, rw.num.clone(), rw.den.clone()).unwrap();
        let dt = t.even_deriv(v);
        let sigma = Expr::param(chart, i as u16);
        let ds = (&sigma * &dt)
            .divide(&(&t * 2))
            .expect("radical target is invertible");
        res = &res + &(&Expr::from_poly(chart, dp) * &ds);
    }
    res
}

impl Chart {
    /// The expression for a named generator, parameter or formal function
    /// (applied to its declared arguments).
    pub fn var(&self, name: &str) -> Result<Expr> {
        match self.lookup(name) {
            Some(Symbol::Gen(i)) => Ok(Expr::generator(self, i)),
            Some(Symbol::Param(i)) => Ok(Expr::param(self, i)),
            Some(Symbol::Func(i)) => {
                let args = self.functions()[i as usize].args.clone();
                Expr::function(self, i, vec![0; args.len()], args)
            }
            None => Err(Error::UnknownSymbol(name.to_string())),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                self.$f(o).expect("incompatible charts")
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                (&self).$f(&o).expect("incompatible charts")
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr {
                (&self).$f(o).expect("incompatible charts")
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                self.$f(&o).expect("incompatible charts")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            chart: self.chart.clone(),
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl Mul<i64> for &Expr {
    type Output = Expr;
    fn mul(self, k: i64) -> Expr {
        self.scale(&Scalar::from(k))
    }
}

impl Mul<i64> for Expr {
    type Output = Expr;
    fn mul(self, k: i64) -> Expr {
        self.scale(&Scalar::from(k))
    }
}

impl Div<i64> for &Expr {
    type Output = Expr;
    fn div(self, k: i64) -> Expr {
        self.scale(&Scalar::ratio(1, k))
    }
}

impl Div<i64> for Expr {
    type Output = Expr;
    fn div(self, k: i64) -> Expr {
        self.scale(&Scalar::ratio(1, k))
    }
}

fn coeff_text(c: &Scalar) -> String {
    if !c.is_real() && !c.re().is_zero() {
        format!("({c})")
    } else {
        c.to_string()
    }
}

fn is_negative(c: &Scalar) -> bool {
    if c.is_real() {
        c.is_negative_real()
    } else {
        c.re().is_zero() && Scalar::from(c.im().clone()).is_negative_real()
    }
}

/// Renders a polynomial in canonical term order.
pub(crate) fn poly_text(chart: &Chart, p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (m, c)) in p.terms().enumerate() {
        let (neg, c) = if k > 0 && is_negative(c) {
            (true, -c)
        } else {
            (false, c.clone())
        };
        if k > 0 {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&coeff_text(&c));
        for f in mono_factors(chart, m) {
            out.push('*');
            out.push_str(&f);
        }
    }
    out
}

/// Factors of a monomial: even part in variable order, then odd generators.
pub fn mono_factors(chart: &Chart, m: &Mono) -> Vec<String> {
    let mut fs: Vec<String> = m
        .even_part()
        .iter()
        .map(|(v, e)| {
            let name = chart.var_name(v);
            if *e == 1 {
                name
            } else {
                format!("{name}^{e}")
            }
        })
        .collect();
    fs.extend(m.odd_indices().map(|j| chart.generator(j).name.clone()));
    fs
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            f.write_str(&poly_text(&self.chart, &self.num))
        } else {
            write!(
                f,
                "({})/({})",
                poly_text(&self.chart, &self.num),
                poly_text(&self.chart, &self.den)
            )
        }
    }
}
