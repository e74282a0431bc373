//! Sparse super-polynomials: commuting variables with exponents plus a set of
//! anticommuting generators kept in increasing chart order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::scalar::Scalar;

/// A commuting variable of a chart.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Even generator, by chart position.
    Gen(u16),
    /// Even parameter, by declaration position.
    Param(u16),
    /// An instance of a formal function (with derivative multi-index).
    Func(Arc<FuncInst>),
}

/// `D[deriv] f(args)`: formal function `func` applied to even generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncInst {
    pub func: u16,
    pub deriv: Vec<u32>,
    pub args: Vec<u16>,
}

/// Monomial: exponent list over commuting variables (sorted, exponents > 0)
/// and a bitmask of odd generators indexed by chart position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Mono {
    pub(crate) even: Vec<(Var, u32)>,
    pub(crate) odd: u64,
}

impl Mono {
    pub fn one() -> Self {
        Mono::default()
    }

    pub fn var(v: Var, e: u32) -> Self {
        if e == 0 {
            return Mono::one();
        }
        Mono {
            even: vec![(v, e)],
            odd: 0,
        }
    }

    pub fn odd_gen(idx: u16) -> Self {
        Mono {
            even: Vec::new(),
            odd: 1u64 << idx,
        }
    }

    pub fn even_part(&self) -> &[(Var, u32)] {
        &self.even
    }

    pub fn odd_mask(&self) -> u64 {
        self.odd
    }

    /// Odd generator indices in increasing order.
    pub fn odd_indices(&self) -> impl Iterator<Item = u16> + '_ {
        let mut m = self.odd;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros();
                m &= m - 1;
                Some(i as u16)
            }
        })
    }

    pub fn odd_len(&self) -> u32 {
        self.odd.count_ones()
    }

    pub fn degree(&self) -> u32 {
        self.even.iter().map(|(_, e)| e).sum::<u32>() + self.odd_len()
    }

    pub fn is_one(&self) -> bool {
        self.even.is_empty() && self.odd == 0
    }

    pub fn exponent(&self, v: &Var) -> u32 {
        self.even
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|i| self.even[i].1)
            .unwrap_or(0)
    }

    pub fn without_odd(&self) -> Mono {
        Mono {
            even: self.even.clone(),
            odd: 0,
        }
    }

    pub fn odd_only(&self) -> Mono {
        Mono {
            even: Vec::new(),
            odd: self.odd,
        }
    }

    /// Sets the exponent of `v` (0 removes it).
    pub fn with_exponent(&self, v: &Var, e: u32) -> Mono {
        let mut even = self.even.clone();
        match even.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) if e == 0 => {
                even.remove(i);
            }
            Ok(i) => even[i].1 = e,
            Err(i) if e > 0 => even.insert(i, (v.clone(), e)),
            Err(_) => {}
        }
        Mono {
            even,
            odd: self.odd,
        }
    }

    /// Product with the Koszul sign from reordering the odd factors;
    /// `None` when an odd generator repeats.
    pub fn mul(&self, o: &Mono) -> Option<(Mono, bool)> {
        if self.odd & o.odd != 0 {
            return None;
        }
        let mut inversions = 0u32;
        let mut m = o.odd;
        while m != 0 {
            let y = m.trailing_zeros();
            m &= m - 1;
            let above = if y >= 63 {
                0
            } else {
                self.odd & !((2u64 << y) - 1)
            };
            inversions += above.count_ones();
        }
        let even = merge_even(&self.even, &o.even);
        Some((
            Mono {
                even,
                odd: self.odd | o.odd,
            },
            inversions % 2 == 1,
        ))
    }

    /// Divides out the even part of `o` if it divides `self`.
    pub fn div_even(&self, o: &Mono) -> Option<Mono> {
        let mut out = self.clone();
        for (v, e) in &o.even {
            let have = out.exponent(v);
            if have < *e {
                return None;
            }
            out = out.with_exponent(v, have - e);
        }
        Some(out)
    }
}

fn merge_even(a: &[(Var, u32)], b: &[(Var, u32)]) -> Vec<(Var, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Higher total degree first, then lexicographic on the even part, then odd set.
impl Ord for Mono {
    fn cmp(&self, o: &Self) -> Ordering {
        o.degree()
            .cmp(&self.degree())
            .then_with(|| even_lex(&self.even, &o.even))
            .then_with(|| self.odd.reverse_bits().cmp(&o.odd.reverse_bits()))
    }
}

/// Lexicographic with larger exponents of earlier variables first.
fn even_lex(a: &[(Var, u32)], b: &[(Var, u32)]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = if x.0 == y.0 {
            y.1.cmp(&x.1)
        } else {
            x.0.cmp(&y.0)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    b.len().cmp(&a.len())
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Sparse polynomial with Gaussian-rational coefficients; no zero entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    pub(crate) terms: BTreeMap<Mono, Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Scalar) -> Self {
        Poly::term(Mono::one(), c)
    }

    pub fn one() -> Self {
        Poly::constant(Scalar::one())
    }

    pub fn term(m: Mono, c: Scalar) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Scalar)> {
        self.terms.iter()
    }

    /// The value if this is a constant polynomial.
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn has_odd(&self) -> bool {
        self.terms.keys().any(|m| m.odd != 0)
    }

    pub fn add_term(&mut self, m: Mono, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                if let Some((m, neg)) = ma.mul(mb) {
                    let c = ca * cb;
                    out.add_term(m, if neg { -c } else { c });
                }
            }
        }
        out
    }

    pub fn mul_mono(&self, m: &Mono, s: &Scalar) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            if let Some((mm, neg)) = m.mul(ma) {
                let c = s * ca;
                out.add_term(mm, if neg { -c } else { c });
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// All commuting variables occurring, sorted.
    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self
            .terms
            .keys()
            .flat_map(|m| m.even.iter().map(|(v, _)| v.clone()))
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    pub fn odd_support(&self) -> u64 {
        self.terms.keys().fold(0, |acc, m| acc | m.odd)
    }

    /// Groups terms by their odd part: `Σ_S c_S(even) θ_S`.
    pub fn split_by_odd(&self) -> BTreeMap<u64, Poly> {
        let mut out: BTreeMap<u64, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.odd)
                .or_default()
                .add_term(m.without_odd(), c.clone());
        }
        out
    }

    /// Partial derivative with respect to a commuting variable that is treated
    /// as independent of everything else (no chain rule).
    pub fn partial_plain(&self, v: &Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e > 0 {
                out.add_term(m.with_exponent(v, e - 1), c * &Scalar::from(e as i64));
            }
        }
        out
    }

    /// Maps every term through `f`, summing the images.
    pub fn map_terms(&self, mut f: impl FnMut(&Mono, &Scalar) -> Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (mm, cc) in f(m, c).terms {
                out.add_term(mm, cc);
            }
        }
        out
    }

    /// Leading coefficient in the lexicographic order used by [`gcd`].
    pub fn lex_leading_coeff(&self) -> Option<Scalar> {
        let vars = self.vars();
        let dense = Dense::from_poly(self, &vars);
        dense.terms.iter().next_back().map(|(_, c)| c.clone())
    }
}

/// Dense-exponent view of a commutative polynomial over a fixed variable list,
/// ordered lexicographically (first variable most significant).
#[derive(Clone, Debug, PartialEq)]
struct Dense {
    n: usize,
    terms: BTreeMap<Vec<u32>, Scalar>,
}

impl Dense {
    fn zero(n: usize) -> Self {
        Dense {
            n,
            terms: BTreeMap::new(),
        }
    }

    fn constant(n: usize, c: Scalar) -> Self {
        let mut d = Dense::zero(n);
        d.add(vec![0; n], c);
        d
    }

    fn from_poly(p: &Poly, vars: &[Var]) -> Self {
        let mut d = Dense::zero(vars.len());
        for (m, c) in &p.terms {
            debug_assert_eq!(m.odd, 0);
            let mut e = vec![0u32; vars.len()];
            for (v, k) in &m.even {
                let i = vars
                    .binary_search(v)
                    .expect("variable list covers polynomial");
                e[i] = *k;
            }
            d.add(e, c.clone());
        }
        d
    }

    fn to_poly(&self, vars: &[Var]) -> Poly {
        let mut p = Poly::zero();
        for (e, c) in &self.terms {
            let even = vars
                .iter()
                .zip(e)
                .filter(|(_, k)| **k > 0)
                .map(|(v, k)| (v.clone(), *k))
                .collect();
            p.add_term(Mono { even, odd: 0 }, c.clone());
        }
        p
    }

    fn add(&mut self, e: Vec<u32>, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn is_constant(&self) -> bool {
        self.terms.len() <= 1 && self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    fn leading(&self) -> Option<(&Vec<u32>, &Scalar)> {
        self.terms.iter().next_back()
    }

    fn sub(&self, o: &Dense) -> Dense {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add(e.clone(), -c);
        }
        out
    }

    fn mul(&self, o: &Dense) -> Dense {
        let mut out = Dense::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add(e, ca * cb);
            }
        }
        out
    }

    fn mul_term(&self, e: &[u32], c: &Scalar) -> Dense {
        let mut out = Dense::zero(self.n);
        for (ea, ca) in &self.terms {
            let ee = ea.iter().zip(e).map(|(a, b)| a + b).collect();
            out.add(ee, ca * c);
        }
        out
    }

    fn pow(&self, e: u32) -> Dense {
        let mut out = Dense::constant(self.n, Scalar::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    fn scale(&self, c: &Scalar) -> Dense {
        self.mul_term(&vec![0; self.n], c)
    }

    fn monic(&self) -> Dense {
        match self.leading() {
            Some((_, c)) => self.scale(&c.inv().unwrap()),
            None => self.clone(),
        }
    }

    fn degree_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|e| e[k]).max().unwrap_or(0)
    }

    /// Coefficient of `x_k^d`, as a polynomial with `x_k` removed.
    fn coeff_in(&self, k: usize, d: u32) -> Dense {
        let mut out = Dense::zero(self.n);
        for (e, c) in &self.terms {
            if e[k] == d {
                let mut ee = e.clone();
                ee[k] = 0;
                out.add(ee, c.clone());
            }
        }
        out
    }

    fn coeffs_in(&self, k: usize) -> Vec<Dense> {
        let mut groups: BTreeMap<u32, Dense> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut ee = e.clone();
            ee[k] = 0;
            groups
                .entry(e[k])
                .or_insert_with(|| Dense::zero(self.n))
                .add(ee, c.clone());
        }
        groups.into_values().collect()
    }

    /// Exact division; `None` if `d` does not divide `self`.
    fn div_exact(&self, d: &Dense) -> Option<Dense> {
        let (ld, lc) = d.leading()?;
        let (ld, lc_inv) = (ld.clone(), lc.inv().unwrap());
        let mut r = self.clone();
        let mut q = Dense::zero(self.n);
        while let Some((lr, cr)) = r.leading() {
            if lr.iter().zip(&ld).any(|(a, b)| a < b) {
                return None;
            }
            let e: Vec<u32> = lr.iter().zip(&ld).map(|(a, b)| a - b).collect();
            let c = cr * &lc_inv;
            r = r.sub(&d.mul_term(&e, &c));
            q.add(e, c);
        }
        Some(q)
    }

    /// Pseudo-remainder in `x_k`: `lc(b)^(deg a - deg b + 1) a mod b`.
    fn prem(&self, b: &Dense, k: usize) -> Dense {
        let db = b.degree_in(k);
        let lcb = b.coeff_in(k, db);
        let mut steps = (self.degree_in(k) + 1).saturating_sub(db);
        let mut r = self.clone();
        while !r.is_zero() {
            let dr = r.degree_in(k);
            if dr < db {
                break;
            }
            let lcr = r.coeff_in(k, dr);
            let mut shift = vec![0; self.n];
            shift[k] = dr - db;
            r = lcb
                .mul(&r)
                .sub(&lcr.mul(b).mul_term(&shift, &Scalar::one()));
            steps -= 1;
        }
        lcb.pow(steps).mul(&r)
    }

    fn content(&self, k: usize) -> Dense {
        let mut g: Option<Dense> = None;
        for c in self.coeffs_in(k) {
            g = Some(match g {
                None => c.monic(),
                Some(g) => gcd_from(&g, &c, k + 1),
            });
            if g.as_ref().is_some_and(|g| g.is_constant()) {
                break;
            }
        }
        g.unwrap_or_else(|| Dense::zero(self.n))
    }

    fn primitive(&self, k: usize) -> Dense {
        let c = self.content(k);
        self.div_exact(&c).expect("content divides polynomial")
    }
}

/// gcd of polynomials not involving variables `< k`; result is monic.
fn gcd_from(a: &Dense, b: &Dense, k: usize) -> Dense {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Dense::constant(a.n, Scalar::one());
    }
    let n = a.n;
    let mut k = k;
    while k < n && a.degree_in(k) == 0 && b.degree_in(k) == 0 {
        k += 1;
    }
    if k == n {
        return Dense::constant(n, Scalar::one());
    }
    if a.degree_in(k) == 0 {
        return gcd_from(a, &b.content(k), k + 1);
    }
    if b.degree_in(k) == 0 {
        return gcd_from(&a.content(k), b, k + 1);
    }
    let ca = a.content(k);
    let cb = b.content(k);
    let c = gcd_from(&ca, &cb, k + 1);
    let mut p = a.div_exact(&ca).unwrap();
    let mut q = b.div_exact(&cb).unwrap();
    if p.degree_in(k) < q.degree_in(k) {
        std::mem::swap(&mut p, &mut q);
    }
    let one = Dense::constant(n, Scalar::one());
    let univariate = (k + 1..n).all(|j| p.degree_in(j) == 0 && q.degree_in(j) == 0);
    let (mut sg, mut sh) = (one.clone(), one.clone());
    let g = loop {
        let delta = p.degree_in(k) - q.degree_in(k);
        let r = p.prem(&q, k);
        if r.is_zero() {
            break q.primitive(k);
        }
        if r.degree_in(k) == 0 {
            break one;
        }
        if univariate {
            p = q;
            q = r.monic();
            continue;
        }
        // Subresultant remainder sequence.
        let lc = q.coeff_in(k, q.degree_in(k));
        p = q;
        q = r
            .div_exact(&sg.mul(&sh.pow(delta)))
            .expect("subresultant division is exact");
        sh = match delta {
            0 => sh,
            _ => lc
                .pow(delta)
                .div_exact(&sh.pow(delta - 1))
                .expect("subresultant division is exact"),
        };
        sg = lc;
    };
    c.mul(&g).monic()
}

/// Monic gcd of commutative polynomials (no odd generators) over ℚ(i).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return monic(b);
    }
    if b.is_zero() {
        return monic(a);
    }
    let (ma, a1) = split_monomial_content(a);
    let (mb, b1) = split_monomial_content(b);
    let mg = Mono {
        even: ma
            .even
            .iter()
            .filter_map(|(v, k)| {
                let j = mb.exponent(v);
                (j > 0).then(|| (v.clone(), (*k).min(j)))
            })
            .collect(),
        odd: 0,
    };
    let g = gcd_sparse(&a1, &b1);
    g.mul_mono(&mg, &Scalar::one())
}

fn monic(p: &Poly) -> Poly {
    let mut vars = p.vars();
    vars.sort();
    Dense::from_poly(p, &vars).monic().to_poly(&vars)
}

/// `p = m · q` with `m` the largest monomial dividing every term.
fn split_monomial_content(p: &Poly) -> (Mono, Poly) {
    let mut it = p.terms.iter();
    let Some((first, _)) = it.next() else {
        return (Mono::one(), p.clone());
    };
    let mut m: Vec<(Var, u32)> = first.even.clone();
    for (t, _) in it {
        m.retain_mut(|(v, k)| {
            let j = t.exponent(v);
            *k = (*k).min(j);
            j > 0
        });
        if m.is_empty() {
            return (Mono::one(), p.clone());
        }
    }
    let m = Mono { even: m, odd: 0 };
    let q = p.map_terms(|t, c| Poly::term(t.div_even(&m).unwrap(), c.clone()));
    (m, q)
}

/// Coefficients of `p` as a polynomial in `v`.
fn coeffs_in_var(p: &Poly, v: &Var) -> Vec<Poly> {
    let mut groups: BTreeMap<u32, Poly> = BTreeMap::new();
    for (m, c) in &p.terms {
        let k = m.exponent(v);
        groups
            .entry(k)
            .or_insert_with(Poly::zero)
            .add_term(m.with_exponent(v, 0), c.clone());
    }
    let mut out: Vec<Poly> = groups.into_values().collect();
    out.sort_by_key(Poly::len);
    out
}

fn gcd_sparse(a: &Poly, b: &Poly) -> Poly {
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    let va = a.vars();
    let vb = b.vars();
    if let Some(v) = va.iter().find(|v| !vb.contains(v)) {
        return gcd_against_coeffs(b, a, v);
    }
    if let Some(v) = vb.iter().find(|v| !va.contains(v)) {
        return gcd_against_coeffs(a, b, v);
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if div_exact(large, small).is_some() {
        return monic(small);
    }
    let mut vars = va;
    vars.sort();
    let (da, db) = (Dense::from_poly(a, &vars), Dense::from_poly(b, &vars));
    gcd_from(&da, &db, 0).to_poly(&vars)
}

/// gcd of `g` with `p`, where `v` occurs in `p` but not in `g`.
fn gcd_against_coeffs(g: &Poly, p: &Poly, v: &Var) -> Poly {
    let mut g = g.clone();
    for c in coeffs_in_var(p, v) {
        g = gcd(&g, &c);
        if g.as_constant().is_some() {
            return Poly::one();
        }
    }
    g
}

/// Exact quotient of commutative polynomials, if `d` divides `p`.
pub fn div_exact(p: &Poly, d: &Poly) -> Option<Poly> {
    let mut vars = p.vars();
    vars.extend(d.vars());
    vars.sort();
    vars.dedup();
    let q = Dense::from_poly(p, &vars).div_exact(&Dense::from_poly(d, &vars))?;
    Some(q.to_poly(&vars))
}
