//! Sequential execution of parsed scripts.

use std::collections::HashMap;

use superforms::quantize::fermionic_weyl;
use superforms::{
    berezin_integral, clifford_rep, de_rham, degree_of, euler, evolve, fn_bracket, hamiltonian_vf,
    hodge_star, lift_inner, lift_lie, moyal_star, odd_star, poisson, quantum_params, Chart,
    ChartBuilder, Expr, Matrix, Metric, Parity, Scalar, StarAlgebra, Symbol, SympStructure,
    Tensor1k, VField,
};

use crate::suites::{self, SuiteReport};
use crate::syntax::{Ast, BinOp, FuncDecl, Pos, Script, ScriptError, Stmt};

/// Knobs shared by scripts and suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    /// Truncation order of flows.
    pub order: u32,
    /// Seed of the property-suite sampler.
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options { order: 8, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Expr(Expr),
    Field(VField),
    Tensor(Tensor1k),
    Matrix(Matrix),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Expr(_) => "expression",
            Value::Field(_) => "vector field",
            Value::Tensor(_) => "tensor",
            Value::Matrix(_) => "matrix",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Record {
    Print {
        line: usize,
        source: String,
        value: Value,
    },
    Check {
        line: usize,
        report: SuiteReport,
    },
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub error: Option<ScriptError>,
}

impl Outcome {
    /// No error and every check passed.
    pub fn success(&self) -> bool {
        self.error.is_none()
            && self.records.iter().all(|r| match r {
                Record::Check { report, .. } => report.passed(),
                Record::Print { .. } => true,
            })
    }
}

#[derive(Default)]
struct Decls {
    even: Vec<String>,
    odd: Vec<String>,
    params: Vec<String>,
    radicals: Vec<(String, Ast)>,
    quantum: bool,
    funcs: Vec<FuncDecl>,
    symplectic: Option<Option<Vec<i64>>>,
}

struct World {
    charts: Vec<Chart>,
    structure: Option<SympStructure>,
    star: Option<StarAlgebra>,
    signature: Vec<i64>,
    kappa: Option<(Chart, u16)>,
}

impl World {
    fn base(&self) -> &Chart {
        &self.charts[0]
    }
}

fn err(pos: Pos, e: impl std::fmt::Display) -> ScriptError {
    ScriptError::new(pos, e.to_string())
}

/// Resolves names and arithmetic against a chart family; shared by scripts and
/// radical declarations.
fn lookup(charts: &[Chart], name: &str, pos: Pos) -> Result<Expr, ScriptError> {
    if name == "i" {
        return Ok(Expr::i(&charts[0]));
    }
    for c in charts {
        match c.lookup(name) {
            Some(Symbol::Gen(_)) | Some(Symbol::Param(_)) => {
                return c.var(name).map_err(|e| err(pos, e));
            }
            _ => {}
        }
    }
    Err(ScriptError::new(
        pos,
        format!("unknown identifier `{name}`"),
    ))
}

fn formal(
    c: &Chart,
    name: &str,
    deriv: &[u32],
    args: &[String],
    pos: Pos,
) -> Result<Expr, ScriptError> {
    let Some(Symbol::Func(f)) = c.lookup(name) else {
        return Err(ScriptError::new(
            pos,
            format!("unknown formal function `{name}`"),
        ));
    };
    let idx = args
        .iter()
        .map(|a| c.gen_index(a).map_err(|e| err(pos, e)))
        .collect::<Result<Vec<_>, _>>()?;
    Expr::function(c, f, deriv.to_vec(), idx).map_err(|e| err(pos, e))
}

fn pos_of(a: &Ast) -> Option<Pos> {
    match a {
        Ast::Name(_, p) | Ast::Func { pos: p, .. } | Ast::Call { pos: p, .. } => Some(*p),
        Ast::Neg(x) | Ast::Pow(x, _) => pos_of(x),
        Ast::Bin(_, l, r) => pos_of(l).or_else(|| pos_of(r)),
        Ast::Int(_) => None,
    }
}

/// Evaluates a call-free expression on a single chart.
fn plain(c: &Chart, a: &Ast, at: Pos) -> Result<Expr, ScriptError> {
    let here = pos_of(a).unwrap_or(at);
    Ok(match a {
        Ast::Int(n) => Expr::constant(c, Scalar::from(n.clone())),
        Ast::Name(n, p) => lookup(std::slice::from_ref(c), n, *p)?,
        Ast::Func {
            name,
            deriv,
            args,
            pos,
        } => formal(c, name, deriv, args, *pos)?,
        Ast::Call { pos, .. } => return Err(ScriptError::new(*pos, "calls are not allowed here")),
        Ast::Neg(x) => -plain(c, x, at)?,
        Ast::Pow(x, e) => plain(c, x, at)?.pow(*e),
        Ast::Bin(op, l, r) => {
            let (l, r) = (plain(c, l, at)?, plain(c, r, at)?);
            arith(*op, &l, &r).map_err(|e| err(here, e))?
        }
    })
}

fn arith(op: BinOp, l: &Expr, r: &Expr) -> superforms::Result<Expr> {
    match op {
        BinOp::Add => l.try_add(r),
        BinOp::Sub => l.try_sub(r),
        BinOp::Mul => l.try_mul(r),
        BinOp::Div => l.divide(r),
    }
}

/// Reads back an expression printed on `chart`.
pub fn eval_on(chart: &Chart, a: &Ast) -> Result<Expr, ScriptError> {
    plain(chart, a, Pos { line: 1, col: 1 })
}

fn build_world(d: &Decls, pos: Pos) -> Result<World, ScriptError> {
    let mut b = ChartBuilder::new().even(&d.even).odd(&d.odd);
    for p in &d.params {
        b = b.param(p);
    }
    if d.quantum {
        b = quantum_params(b);
    }
    for (name, target) in &d.radicals {
        let target = target.clone();
        b = b.radical(name, move |c| {
            plain(c, &target, pos).map_err(|e| superforms::Error::InvalidArgument(e.message))
        });
    }
    for f in &d.funcs {
        b = b.function(&f.name, &f.args);
    }
    let base = b.build().map_err(|e| err(pos, e))?;
    let pit = base.pit().map_err(|e| err(pos, e))?;
    let tangent = base.tangent().map_err(|e| err(pos, e))?;
    let flow = superforms::symplectic::flow_chart(&base).map_err(|e| err(pos, e))?;
    let mut w = World {
        charts: vec![base.clone(), pit, tangent, flow],
        structure: None,
        star: None,
        signature: Vec::new(),
        kappa: None,
    };
    match &d.symplectic {
        None => {}
        Some(None) => {
            let s = SympStructure::canonical_odd_on(&base).map_err(|e| err(pos, e))?;
            let kc = base
                .with_generators(&[("kappa", Parity::Odd)])
                .map_err(|e| err(pos, e))?;
            let k = kc.gen_index("kappa").expect("just added");
            w.charts.push(kc.clone());
            w.kappa = Some((kc, k));
            w.structure = Some(s);
        }
        Some(Some(sig)) => {
            let sig = if sig.is_empty() {
                vec![1; d.odd.len()]
            } else {
                sig.clone()
            };
            let s = SympStructure::canonical_even_on(&base, &sig).map_err(|e| err(pos, e))?;
            if d.quantum {
                w.star = Some(StarAlgebra::diagonal(&base, &sig).map_err(|e| err(pos, e))?);
            }
            w.signature = sig;
            w.structure = Some(s);
        }
    }
    Ok(w)
}

struct Runner<'o> {
    opts: &'o Options,
    decls: Decls,
    world: Option<World>,
    env: HashMap<String, Value>,
}

impl Runner<'_> {
    fn world(&mut self, pos: Pos) -> Result<&World, ScriptError> {
        if self.world.is_none() {
            self.world = Some(build_world(&self.decls, pos)?);
        }
        Ok(self.world.as_ref().unwrap())
    }

    fn declaring(&self, pos: Pos) -> Result<(), ScriptError> {
        if self.world.is_some() {
            return Err(ScriptError::new(
                pos,
                "declarations must precede the first computation",
            ));
        }
        Ok(())
    }

    fn exec(&mut self, stmt: &Stmt, pos: Pos, out: &mut Vec<Record>) -> Result<(), ScriptError> {
        match stmt {
            Stmt::Chart { even, odd, .. } => {
                self.decls.even = even.clone();
                self.decls.odd = odd.clone();
            }
            Stmt::Param(ps) => {
                self.declaring(pos)?;
                self.decls.params.extend(ps.iter().cloned());
            }
            Stmt::Radical { name, target } => {
                self.declaring(pos)?;
                self.decls.radicals.push((name.clone(), target.clone()));
            }
            Stmt::Quantum => {
                self.declaring(pos)?;
                self.decls.quantum = true;
            }
            Stmt::Func(fs) => {
                self.declaring(pos)?;
                self.decls.funcs.extend(fs.iter().cloned());
            }
            Stmt::Symplectic(s) => {
                self.declaring(pos)?;
                if self.decls.symplectic.is_some() {
                    return Err(ScriptError::new(
                        pos,
                        "symplectic structure already declared",
                    ));
                }
                self.decls.symplectic = Some(s.clone());
            }
            Stmt::Let { name, value } => {
                self.world(pos)?;
                let v = self.eval(value, pos)?;
                self.env.insert(name.clone(), v);
            }
            Stmt::Print { value, source } => {
                self.world(pos)?;
                let v = self.eval(value, pos)?;
                out.push(Record::Print {
                    line: pos.line,
                    source: source.clone(),
                    value: v,
                });
            }
            Stmt::Check(name) => {
                let report = suites::run_suite(name, self.opts).map_err(|e| err(pos, e))?;
                out.push(Record::Check {
                    line: pos.line,
                    report,
                });
            }
        }
        Ok(())
    }

    fn w(&self) -> &World {
        self.world.as_ref().expect("world built before evaluation")
    }

    fn expr(&self, a: &Ast, at: Pos) -> Result<Expr, ScriptError> {
        let here = pos_of(a).unwrap_or(at);
        match self.eval(a, at)? {
            Value::Expr(e) => Ok(e),
            v => Err(ScriptError::new(
                here,
                format!("expected an expression, found a {}", v.kind()),
            )),
        }
    }

    fn field(&self, a: &Ast, at: Pos) -> Result<VField, ScriptError> {
        let here = pos_of(a).unwrap_or(at);
        match self.eval(a, at)? {
            Value::Field(v) => Ok(v),
            v => Err(ScriptError::new(
                here,
                format!("expected a vector field, found a {}", v.kind()),
            )),
        }
    }

    fn tensor(&self, a: &Ast, at: Pos) -> Result<Tensor1k, ScriptError> {
        let here = pos_of(a).unwrap_or(at);
        match self.eval(a, at)? {
            Value::Tensor(v) => Ok(v),
            v => Err(ScriptError::new(
                here,
                format!("expected a tensor, found a {}", v.kind()),
            )),
        }
    }

    fn on_pit(&self, e: &Expr, pos: Pos) -> Result<Expr, ScriptError> {
        e.embed(&self.w().charts[1]).map_err(|e| err(pos, e))
    }

    fn structure(&self, pos: Pos) -> Result<&SympStructure, ScriptError> {
        self.w()
            .structure
            .as_ref()
            .ok_or_else(|| ScriptError::new(pos, "no symplectic structure declared"))
    }

    fn eval(&self, a: &Ast, at: Pos) -> Result<Value, ScriptError> {
        let here = pos_of(a).unwrap_or(at);
        let w = self.w();
        Ok(Value::Expr(match a {
            Ast::Int(n) => Expr::constant(w.base(), Scalar::from(n.clone())),
            Ast::Name(n, p) => {
                if let Some(v) = self.env.get(n) {
                    return Ok(v.clone());
                }
                lookup(&w.charts, n, *p)?
            }
            Ast::Func {
                name,
                deriv,
                args,
                pos,
            } => formal(w.base(), name, deriv, args, *pos)?,
            Ast::Neg(x) => match self.eval(x, at)? {
                Value::Expr(e) => -e,
                Value::Field(v) => return Ok(Value::Field(v.neg())),
                Value::Matrix(m) => return Ok(Value::Matrix(m.neg())),
                v => {
                    return Err(ScriptError::new(
                        here,
                        format!("cannot negate a {}", v.kind()),
                    ))
                }
            },
            Ast::Pow(x, e) => self.expr(x, at)?.pow(*e),
            Ast::Bin(op, l, r) => {
                let (l, r) = (self.eval(l, at)?, self.eval(r, at)?);
                return self.binary(*op, l, r, here);
            }
            Ast::Call {
                name,
                args,
                extra,
                pos,
            } => return self.call(name, args, extra, *pos),
        }))
    }

    fn binary(&self, op: BinOp, l: Value, r: Value, pos: Pos) -> Result<Value, ScriptError> {
        let e = |x: superforms::Error| err(pos, x);
        Ok(match (op, l, r) {
            (op, Value::Expr(l), Value::Expr(r)) => Value::Expr(arith(op, &l, &r).map_err(e)?),
            (BinOp::Add, Value::Field(l), Value::Field(r)) => {
                Value::Field(l.try_add(&r).map_err(e)?)
            }
            (BinOp::Sub, Value::Field(l), Value::Field(r)) => {
                Value::Field(l.try_sub(&r).map_err(e)?)
            }
            (BinOp::Mul, Value::Expr(l), Value::Field(r)) => {
                Value::Field(r.mul_left(&l).map_err(e)?)
            }
            (BinOp::Add, Value::Matrix(l), Value::Matrix(r)) => {
                Value::Matrix(l.try_add(&r).map_err(e)?)
            }
            (BinOp::Sub, Value::Matrix(l), Value::Matrix(r)) => {
                Value::Matrix(l.try_sub(&r).map_err(e)?)
            }
            (BinOp::Mul, Value::Matrix(l), Value::Matrix(r)) => {
                Value::Matrix(l.try_mul(&r).map_err(e)?)
            }
            (BinOp::Mul, Value::Expr(l), Value::Matrix(r)) => {
                Value::Matrix(r.scale_left(&l).map_err(e)?)
            }
            (_, l, r) => {
                return Err(ScriptError::new(
                    pos,
                    format!("unsupported operands: {} and {}", l.kind(), r.kind()),
                ))
            }
        })
    }

    fn arity(
        name: &str,
        args: &[Ast],
        extra: &[Ast],
        n: usize,
        m: Option<usize>,
        pos: Pos,
    ) -> Result<(), ScriptError> {
        let ok = args.len() == n && m.map_or(extra.is_empty(), |m| extra.len() <= m);
        if ok {
            Ok(())
        } else {
            Err(ScriptError::new(
                pos,
                format!("wrong number of arguments to `{name}`"),
            ))
        }
    }

    fn call(
        &self,
        name: &str,
        args: &[Ast],
        extra: &[Ast],
        pos: Pos,
    ) -> Result<Value, ScriptError> {
        let w = self.w();
        let e = |x: superforms::Error| err(pos, x);
        let one = |n| Self::arity(name, args, extra, n, None, pos);
        let v = match name {
            "d" | "E" => {
                one(1)?;
                let f = self.on_pit(&self.expr(&args[0], pos)?, pos)?;
                let op = if name == "d" {
                    de_rham(&w.charts[1])
                } else {
                    euler(&w.charts[1])
                };
                Value::Expr(op.map_err(e)?.apply(&f).map_err(e)?)
            }
            "field" => {
                let coeffs = args
                    .iter()
                    .map(|a| self.expr(a, pos)?.embed(w.base()).map_err(e))
                    .collect::<Result<Vec<_>, _>>()?;
                if coeffs.len() != w.base().n_generators() || !extra.is_empty() {
                    return Err(ScriptError::new(
                        pos,
                        "`field` takes one coefficient per generator",
                    ));
                }
                Value::Field(VField::infer(w.base(), coeffs).map_err(e)?)
            }
            "ham" => {
                one(1)?;
                let f = self.expr(&args[0], pos)?;
                Value::Field(hamiltonian_vf(&f, self.structure(pos)?).map_err(e)?)
            }
            "lie" | "inner" => {
                one(2)?;
                let v = self.field(&args[0], pos)?;
                let f = self.on_pit(&self.expr(&args[1], pos)?, pos)?;
                let l = if name == "lie" {
                    lift_lie(&v)
                } else {
                    lift_inner(&v)
                };
                Value::Expr(l.map_err(e)?.apply(&f).map_err(e)?)
            }
            "bracket" => {
                one(2)?;
                let (v, u) = (self.field(&args[0], pos)?, self.field(&args[1], pos)?);
                Value::Field(v.commutator(&u).map_err(e)?)
            }
            "berezin" => {
                if args.len() != 1 || extra.is_empty() {
                    return Err(ScriptError::new(pos, "usage: berezin(f; theta, ...)"));
                }
                let f = self.expr(&args[0], pos)?;
                let gens = extra
                    .iter()
                    .map(|a| match a {
                        Ast::Name(n, p) => f.chart().gen_index(n).map_err(|x| err(*p, x)),
                        _ => Err(ScriptError::new(pos, "integration variables must be names")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Value::Expr(berezin_integral(&f, &gens).map_err(e)?)
            }
            "hodge" => {
                if args.len() != 1 || extra.is_empty() {
                    return Err(ScriptError::new(pos, "usage: hodge(f; g1, ..., gm)"));
                }
                let f = self.on_pit(&self.expr(&args[0], pos)?, pos)?;
                let diag = extra
                    .iter()
                    .map(|a| {
                        self.expr(a, pos)?
                            .as_constant()
                            .and_then(|s| integer(&s))
                            .ok_or_else(|| ScriptError::new(pos, "metric entries must be integers"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let m = Metric::diagonal(w.base(), &diag).map_err(e)?;
                Value::Expr(hodge_star(&f, &m).map_err(e)?)
            }
            "poisson" => {
                one(2)?;
                let (f, g) = (self.expr(&args[0], pos)?, self.expr(&args[1], pos)?);
                Value::Expr(poisson(&f, &g, self.structure(pos)?).map_err(e)?)
            }
            "star" => {
                one(2)?;
                let a = w.star.as_ref().ok_or_else(|| {
                    ScriptError::new(
                        pos,
                        "star needs `quantum;` and an even symplectic structure",
                    )
                })?;
                let (f, g) = (self.expr(&args[0], pos)?, self.expr(&args[1], pos)?);
                Value::Expr(moyal_star(&f, &g, a).map_err(e)?)
            }
            "oddstar" => {
                one(2)?;
                let (kc, k) = w.kappa.as_ref().ok_or_else(|| {
                    ScriptError::new(pos, "oddstar needs an odd symplectic structure")
                })?;
                let f = self.expr(&args[0], pos)?.embed(kc).map_err(e)?;
                let g = self.expr(&args[1], pos)?.embed(kc).map_err(e)?;
                Value::Expr(odd_star(&f, &g, *k, self.structure(pos)?).map_err(e)?)
            }
            "evolve" => {
                Self::arity(name, args, extra, 1, Some(2), pos)?;
                if extra.is_empty() {
                    return Err(ScriptError::new(pos, "usage: evolve(f; H[, order])"));
                }
                let f = self.expr(&args[0], pos)?;
                let h = self.expr(&extra[0], pos)?;
                let order = match extra.get(1) {
                    None => self.opts.order,
                    Some(o) => self
                        .expr(o, pos)?
                        .as_constant()
                        .and_then(|s| integer(&s))
                        .and_then(|n| u32::try_from(n).ok())
                        .ok_or_else(|| ScriptError::new(pos, "order must be a natural number"))?,
                };
                Value::Expr(evolve(&f, &h, self.structure(pos)?, order).map_err(e)?.expr)
            }
            "tensor" => {
                let comps = args
                    .iter()
                    .map(|a| self.on_pit(&self.expr(a, pos)?, pos))
                    .collect::<Result<Vec<_>, _>>()?;
                if !extra.is_empty() {
                    return Err(ScriptError::new(pos, "usage: tensor(A1, ..., Am)"));
                }
                let k = comps
                    .iter()
                    .find(|c| !c.is_zero())
                    .and_then(degree_of)
                    .unwrap_or(0);
                let k =
                    u32::try_from(k).map_err(|_| ScriptError::new(pos, "negative form degree"))?;
                Value::Tensor(Tensor1k::new(w.base(), k, comps).map_err(e)?)
            }
            "fn" => {
                one(2)?;
                let (a, b) = (self.tensor(&args[0], pos)?, self.tensor(&args[1], pos)?);
                Value::Tensor(fn_bracket(&a, &b).map_err(e)?)
            }
            "weyl" => {
                one(1)?;
                let a = w.star.as_ref().ok_or_else(|| {
                    ScriptError::new(
                        pos,
                        "weyl needs `quantum;` and an even symplectic structure",
                    )
                })?;
                let f = self.expr(&args[0], pos)?;
                let reps = clifford_rep(w.base(), &w.signature).map_err(e)?;
                let (_, _, xis) = a.layout();
                Value::Matrix(fermionic_weyl(&f, xis, &reps).map_err(e)?)
            }
            _ => return Err(ScriptError::new(pos, format!("unknown operation `{name}`"))),
        };
        Ok(v)
    }
}

fn integer(s: &Scalar) -> Option<i64> {
    if !s.is_real() || !s.re().is_integer() {
        return None;
    }
    i64::try_from(s.re().to_integer()).ok()
}

/// Executes statements in order, stopping at the first error.
pub fn run(script: &Script, opts: &Options) -> Outcome {
    let mut r = Runner {
        opts,
        decls: Decls::default(),
        world: None,
        env: HashMap::new(),
    };
    let mut out = Outcome::default();
    for s in &script.statements {
        if let Err(e) = r.exec(&s.stmt, s.pos, &mut out.records) {
            out.error = Some(e);
            break;
        }
    }
    out
}
