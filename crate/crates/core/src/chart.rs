//! Coordinate charts: ordered, named generators with parities, even
//! parameters (optionally with a quadratic rewrite), and formal functions.

use std::fmt;
use std::ops::Add;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::poly::{Poly, Var};

/// ℤ₂-grading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_bit(b: u32) -> Parity {
        if b.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn bit(self) -> u32 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn flip(self) -> Parity {
        self + Parity::Odd
    }

    /// `(-1)^(self·other)` as a boolean "negate".
    pub fn sign_with(self, other: Parity) -> bool {
        self.is_odd() && other.is_odd()
    }
}

impl Add for Parity {
    type Output = Parity;
    fn add(self, o: Parity) -> Parity {
        Parity::from_bit(self.bit() + o.bit())
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Coordinate,
    /// Fiber coordinate over the base generator with this index.
    Fiber(u16),
    /// Appended after an extension (flow parameters and similar).
    Auxiliary,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub name: String,
    pub parity: Parity,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Rewrite {
    pub(crate) num: Poly,
    pub(crate) den: Poly,
}

/// Even parameter; with a rewrite `p² → target` it stands for a square root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Parameter {
    pub name: String,
    pub(crate) rewrite: Option<Rewrite>,
}

impl Parameter {
    pub fn has_rewrite(&self) -> bool {
        self.rewrite.is_some()
    }
}

/// Formal (transcendental) function of even generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Function {
    pub name: String,
    pub args: Vec<u16>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChartKind {
    Base,
    /// Odd tangent bundle: fibers of flipped parity.
    Pit,
    /// Tangent bundle: fibers of equal parity.
    Tangent,
}

/// A named symbol of a chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Gen(u16),
    Param(u16),
    Func(u16),
}

#[derive(Debug)]
struct ChartData {
    gens: Vec<Generator>,
    params: Vec<Parameter>,
    funcs: Vec<Function>,
    kind: ChartKind,
    base_len: usize,
    pit: OnceLock<Chart>,
    tangent: OnceLock<Chart>,
}

impl PartialEq for ChartData {
    fn eq(&self, o: &Self) -> bool {
        self.gens == o.gens
            && self.params == o.params
            && self.funcs == o.funcs
            && self.kind == o.kind
            && self.base_len == o.base_len
    }
}

/// Shared, immutable chart description.
#[derive(Clone, Debug)]
pub struct Chart(Arc<ChartData>);

impl PartialEq for Chart {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.0, &o.0) || *self.0 == *o.0
    }
}

impl Eq for Chart {}

type RewriteFn = Box<dyn Fn(&Chart) -> Result<Expr>>;

/// Collects declarations; [`ChartBuilder::build`] validates them.
#[derive(Default)]
pub struct ChartBuilder {
    gens: Vec<(String, Parity)>,
    params: Vec<(String, Option<RewriteFn>)>,
    funcs: Vec<(String, Vec<String>)>,
}

impl ChartBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn even<S: AsRef<str>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.gens.extend(
            names
                .into_iter()
                .map(|n| (n.as_ref().to_string(), Parity::Even)),
        );
        self
    }

    pub fn odd<S: AsRef<str>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.gens.extend(
            names
                .into_iter()
                .map(|n| (n.as_ref().to_string(), Parity::Odd)),
        );
        self
    }

    pub fn param(mut self, name: &str) -> Self {
        self.params.push((name.to_string(), None));
        self
    }

    /// Parameter `name` with the rewrite `name² → target(chart)`.
    pub fn radical(
        mut self,
        name: &str,
        target: impl Fn(&Chart) -> Result<Expr> + 'static,
    ) -> Self {
        self.params.push((name.to_string(), Some(Box::new(target))));
        self
    }

    pub fn function<S: AsRef<str>>(
        mut self,
        name: &str,
        args: impl IntoIterator<Item = S>,
    ) -> Self {
        self.funcs.push((
            name.to_string(),
            args.into_iter().map(|a| a.as_ref().to_string()).collect(),
        ));
        self
    }

    pub fn build(self) -> Result<Chart> {
        let mut seen = std::collections::HashSet::new();
        let names = self
            .gens
            .iter()
            .map(|(n, _)| n)
            .chain(self.params.iter().map(|(n, _)| n))
            .chain(self.funcs.iter().map(|(n, _)| n));
        for n in names {
            if !seen.insert(n.clone()) {
                return Err(Error::DuplicateName(n.clone()));
            }
        }
        if self.gens.len() > 64 {
            return Err(Error::TooManyGenerators(self.gens.len()));
        }
        let gens: Vec<Generator> = self
            .gens
            .iter()
            .map(|(name, parity)| Generator {
                name: name.clone(),
                parity: *parity,
                role: Role::Coordinate,
            })
            .collect();
        let mut funcs = Vec::new();
        for (name, args) in &self.funcs {
            let mut idx = Vec::new();
            for a in args {
                let i = gens
                    .iter()
                    .position(|g| &g.name == a)
                    .ok_or_else(|| Error::UnknownSymbol(a.clone()))?;
                if gens[i].parity.is_odd() {
                    return Err(Error::ParityMismatch(format!(
                        "argument `{a}` of formal function `{name}` must be even"
                    )));
                }
                idx.push(i as u16);
            }
            funcs.push(Function {
                name: name.clone(),
                args: idx,
            });
        }
        let params: Vec<Parameter> = self
            .params
            .iter()
            .map(|(n, _)| Parameter {
                name: n.clone(),
                rewrite: None,
            })
            .collect();
        let base_len = gens.len();
        let bare = Chart::from_parts(gens, params, funcs, ChartKind::Base, base_len);
        let mut data = ChartData::clone_parts(&bare.0);
        for (i, (name, target)) in self.params.iter().enumerate() {
            let Some(target) = target else { continue };
            let e = target(&bare)?;
            if e.parity() != Some(Parity::Even) || e.num().has_odd() {
                return Err(Error::OddRewrite(name.clone()));
            }
            for (j, (_, t)) in self.params.iter().enumerate() {
                let v = Var::Param(j as u16);
                if t.is_some() && (e.num().contains_var(&v) || e.den().contains_var(&v)) {
                    return Err(Error::NestedRewrite(name.clone()));
                }
            }
            data.params[i].rewrite = Some(Rewrite {
                num: e.num().clone(),
                den: e.den().clone(),
            });
        }
        Ok(Chart(Arc::new(data)))
    }
}

impl ChartData {
    fn clone_parts(d: &ChartData) -> ChartData {
        ChartData {
            gens: d.gens.clone(),
            params: d.params.clone(),
            funcs: d.funcs.clone(),
            kind: d.kind,
            base_len: d.base_len,
            pit: OnceLock::new(),
            tangent: OnceLock::new(),
        }
    }
}

impl Chart {
    pub fn builder() -> ChartBuilder {
        ChartBuilder::new()
    }

    /// Base chart with the given even and odd generators and plain parameters.
    pub fn new<S: AsRef<str>>(even: &[S], odd: &[S], params: &[S]) -> Result<Chart> {
        let mut b = ChartBuilder::new().even(even.iter()).odd(odd.iter());
        for p in params {
            b = b.param(p.as_ref());
        }
        b.build()
    }

    fn from_parts(
        gens: Vec<Generator>,
        params: Vec<Parameter>,
        funcs: Vec<Function>,
        kind: ChartKind,
        base_len: usize,
    ) -> Chart {
        Chart(Arc::new(ChartData {
            gens,
            params,
            funcs,
            kind,
            base_len,
            pit: OnceLock::new(),
            tangent: OnceLock::new(),
        }))
    }

    pub(crate) fn same_instance(&self, o: &Chart) -> bool {
        Arc::ptr_eq(&self.0, &o.0)
    }

    pub fn kind(&self) -> ChartKind {
        self.0.kind
    }

    pub fn generators(&self) -> &[Generator] {
        &self.0.gens
    }

    pub fn generator(&self, i: u16) -> &Generator {
        &self.0.gens[i as usize]
    }

    pub fn params(&self) -> &[Parameter] {
        &self.0.params
    }

    pub fn functions(&self) -> &[Function] {
        &self.0.funcs
    }

    pub fn n_generators(&self) -> usize {
        self.0.gens.len()
    }

    /// Number of base coordinates (all generators for a base chart).
    pub fn base_len(&self) -> usize {
        self.0.base_len
    }

    pub fn gen_parity(&self, i: u16) -> Parity {
        self.0.gens[i as usize].parity
    }

    pub fn base_even_count(&self) -> usize {
        self.0.gens[..self.0.base_len]
            .iter()
            .filter(|g| !g.parity.is_odd())
            .count()
    }

    pub fn base_odd_count(&self) -> usize {
        self.0.base_len - self.base_even_count()
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        if let Some(i) = self.0.gens.iter().position(|g| g.name == name) {
            return Some(Symbol::Gen(i as u16));
        }
        if let Some(i) = self.0.params.iter().position(|p| p.name == name) {
            return Some(Symbol::Param(i as u16));
        }
        self.0
            .funcs
            .iter()
            .position(|f| f.name == name)
            .map(|i| Symbol::Func(i as u16))
    }

    pub fn gen_index(&self, name: &str) -> Result<u16> {
        match self.lookup(name) {
            Some(Symbol::Gen(i)) => Ok(i),
            _ => Err(Error::UnknownSymbol(name.to_string())),
        }
    }

    pub(crate) fn rewrite(&self, p: u16) -> Option<&Rewrite> {
        self.0.params[p as usize].rewrite.as_ref()
    }

    pub(crate) fn has_rewrites(&self) -> bool {
        self.0.params.iter().any(|p| p.rewrite.is_some())
    }

    /// Fiber generator over base generator `i`, on an extended chart.
    pub fn fiber_of(&self, i: u16) -> Option<u16> {
        self.0
            .gens
            .iter()
            .position(|g| g.role == Role::Fiber(i))
            .map(|j| j as u16)
    }

    /// `self` contains `other` as a prefix: same generators, parameters and
    /// functions up to the length of `other`.
    pub fn extends(&self, other: &Chart) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        let (a, b) = (&*self.0, &*other.0);
        a.gens.len() >= b.gens.len()
            && a.params.len() >= b.params.len()
            && a.funcs.len() >= b.funcs.len()
            && a.gens[..b.gens.len()] == b.gens[..]
            && a.params[..b.params.len()] == b.params[..]
            && a.funcs[..b.funcs.len()] == b.funcs[..]
    }

    /// The larger of two compatible charts.
    pub fn join(&self, other: &Chart) -> Result<Chart> {
        if self.extends(other) {
            Ok(self.clone())
        } else if other.extends(self) {
            Ok(other.clone())
        } else {
            Err(Error::ChartMismatch)
        }
    }

    fn extension(&self, kind: ChartKind, prefix: &str) -> Result<Chart> {
        if self.0.kind != ChartKind::Base {
            return Err(Error::AlreadyExtended);
        }
        let mut gens = self.0.gens.clone();
        for (i, g) in self.0.gens.iter().enumerate() {
            let name = format!("{prefix}{}", g.name);
            if self.lookup(&name).is_some() {
                return Err(Error::DuplicateName(name));
            }
            let parity = match kind {
                ChartKind::Pit => g.parity.flip(),
                _ => g.parity,
            };
            gens.push(Generator {
                name,
                parity,
                role: Role::Fiber(i as u16),
            });
        }
        if gens.len() > 64 {
            return Err(Error::TooManyGenerators(gens.len()));
        }
        Ok(Chart::from_parts(
            gens,
            self.0.params.clone(),
            self.0.funcs.clone(),
            kind,
            self.0.base_len,
        ))
    }

    /// The base chart underneath an extension (the chart itself for a base).
    pub fn base_chart(&self) -> Chart {
        if self.0.kind == ChartKind::Base {
            return self.clone();
        }
        Chart::from_parts(
            self.0.gens[..self.0.base_len].to_vec(),
            self.0.params.clone(),
            self.0.funcs.clone(),
            ChartKind::Base,
            self.0.base_len,
        )
    }

    /// ΠT-extension: fiber `d<name>` of flipped parity for every generator.
    pub fn pit(&self) -> Result<Chart> {
        if let Some(c) = self.0.pit.get() {
            return Ok(c.clone());
        }
        let c = self.extension(ChartKind::Pit, "d")?;
        Ok(self.0.pit.get_or_init(|| c).clone())
    }

    /// T-extension: fiber `v<name>` of equal parity for every generator.
    pub fn tangent(&self) -> Result<Chart> {
        if let Some(c) = self.0.tangent.get() {
            return Ok(c.clone());
        }
        let c = self.extension(ChartKind::Tangent, "v")?;
        Ok(self.0.tangent.get_or_init(|| c).clone())
    }

    /// Appends generators. On a base chart they become ordinary coordinates;
    /// on an extension they are auxiliary.
    pub fn with_generators(&self, extra: &[(&str, Parity)]) -> Result<Chart> {
        let mut data = ChartData::clone_parts(&self.0);
        let role = if self.0.kind == ChartKind::Base {
            Role::Coordinate
        } else {
            Role::Auxiliary
        };
        for (name, parity) in extra {
            if data.gens.iter().any(|g| g.name == *name)
                || data.params.iter().any(|p| p.name == *name)
                || data.funcs.iter().any(|f| f.name == *name)
            {
                return Err(Error::DuplicateName(name.to_string()));
            }
            data.gens.push(Generator {
                name: name.to_string(),
                parity: *parity,
                role,
            });
        }
        if data.gens.len() > 64 {
            return Err(Error::TooManyGenerators(data.gens.len()));
        }
        if self.0.kind == ChartKind::Base {
            data.base_len = data.gens.len();
        }
        Ok(Chart(Arc::new(data)))
    }

    /// Appends plain even parameters.
    pub fn with_params(&self, names: &[&str]) -> Result<Chart> {
        let mut data = ChartData::clone_parts(&self.0);
        for name in names {
            if self.lookup(name).is_some() || data.params.iter().any(|p| p.name == *name) {
                return Err(Error::DuplicateName(name.to_string()));
            }
            data.params.push(Parameter {
                name: name.to_string(),
                rewrite: None,
            });
        }
        Ok(Chart(Arc::new(data)))
    }

    /// Display name of a commuting variable.
    pub fn var_name(&self, v: &Var) -> String {
        match v {
            Var::Gen(i) => self.0.gens[*i as usize].name.clone(),
            Var::Param(i) => self.0.params[*i as usize].name.clone(),
            Var::Func(fi) => {
                let f = &self.0.funcs[fi.func as usize];
                let args: Vec<&str> = fi
                    .args
                    .iter()
                    .map(|a| self.0.gens[*a as usize].name.as_str())
                    .collect();
                if fi.args.len() == 1 {
                    format!(
                        "{}{}({})",
                        f.name,
                        "'".repeat(fi.deriv[0] as usize),
                        args[0]
                    )
                } else if fi.deriv.iter().all(|&d| d == 0) {
                    format!("{}({})", f.name, args.join(","))
                } else {
                    let d: Vec<String> = fi.deriv.iter().map(|d| d.to_string()).collect();
                    format!("D[{}]{}({})", d.join(","), f.name, args.join(","))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_examples() {
        let c = Chart::new(&["x", "p"], &["xi1", "xi2"], &["hbar"]).unwrap();
        assert_eq!(c.base_even_count(), 2);
        assert_eq!(c.base_odd_count(), 2);
        assert_eq!(c.lookup("hbar"), Some(Symbol::Param(0)));

        let c = Chart::builder()
            .even(["x"])
            .param("hbar")
            .radical("sigma", |c| Ok(c.var("hbar")? / 2))
            .function("V1", ["x"])
            .build()
            .unwrap();
        assert!(c.params()[1].has_rewrite());
        assert_eq!(c.lookup("V1"), Some(Symbol::Func(0)));

        assert_eq!(
            Chart::new(&["x", "x"], &[], &[]).unwrap_err(),
            Error::DuplicateName("x".into())
        );
    }

    #[test]
    fn odd_rewrite_target_rejected() {
        let err = Chart::builder()
            .odd(["xi"])
            .radical("s", |c| c.var("xi"))
            .build()
            .unwrap_err();
        assert_eq!(err, Error::OddRewrite("s".into()));
    }

    #[test]
    fn pit_extension_layout() {
        let m = Chart::new(&["x"], &[], &[]).unwrap();
        let tm = m.pit().unwrap();
        assert_eq!(tm.generator(1).name, "dx");
        assert_eq!(tm.gen_parity(1), Parity::Odd);

        let m = Chart::new(&[], &["xi"], &[]).unwrap();
        let tm = m.pit().unwrap();
        assert_eq!(tm.gen_parity(1), Parity::Even);

        let m = Chart::new(&["x"], &["xi"], &[]).unwrap();
        let tm = m.pit().unwrap();
        let names: Vec<_> = tm.generators().iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["x", "xi", "dx", "dxi"]);
        assert_eq!(tm.fiber_of(1), Some(3));
        assert!(tm.extends(&m));
        assert_eq!(tm.pit().unwrap_err(), Error::AlreadyExtended);
    }

    #[test]
    fn tangent_extension_layout() {
        let m = Chart::new(&["x"], &["xi"], &[]).unwrap();
        let t = m.tangent().unwrap();
        assert_eq!(t.gen_parity(2), Parity::Even);
        assert_eq!(t.gen_parity(3), Parity::Odd);
        assert_eq!(t.tangent().unwrap_err(), Error::AlreadyExtended);
    }
}
