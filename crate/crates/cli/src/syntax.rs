//! Lexer and LL(1) parser for the script language.
//!
//! ```text
//! statement := chart | param | radical | quantum | func | symplectic
//!            | let | print | check
//! chart     := "chart" NAME { "even" names | "odd" names } ";"
//! param     := "param" names ";"
//! radical   := "radical" NAME "^" "2" "=" expr ";"
//! quantum   := "quantum" ";"
//! func      := "func" NAME "(" names ")" { "," NAME "(" names ")" } ";"
//! symplectic:= "symplectic" ( "even" [ "[" ints "]" ] | "odd" ) ";"
//! let       := "let" NAME "=" expr ";"
//! print     := "print" expr ";"
//! check     := "check" NAME { "-" NAME } ";"
//! expr      := term { ("+" | "-") term }
//! term      := unary { ("*" | "/") unary }
//! unary     := "-" unary | power
//! power     := atom [ "^" INT ]
//! atom      := INT | NAME | NAME "'"* "(" names ")" | "D" "[" ints "]" NAME "(" names ")"
//!            | BUILTIN "(" [ expr { "," expr } ] [ ";" expr { "," expr } ] ")" | "(" expr ")"
//! ```

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;

/// 1-based line and column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptError {
    pub pos: Pos,
    pub message: String,
    /// Token kinds that would have been accepted, when known.
    pub expected: Vec<String>,
}

impl ScriptError {
    pub fn new(pos: Pos, message: impl Into<String>) -> ScriptError {
        ScriptError {
            pos,
            message: message.into(),
            expected: Vec::new(),
        }
    }
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ScriptError {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Name(String),
    Int(String),
    Sym(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "`{n}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: Pos,
    start: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ScriptError> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut it = text.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        let pos = Pos { line, col };
        if c == '\n' {
            it.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            it.next();
            col += 1;
        } else if c == '#' {
            while let Some(&(_, c)) = it.peek() {
                if c == '\n' {
                    break;
                }
                it.next();
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut end = i;
            while let Some(&(j, c)) = it.peek() {
                if !(c.is_ascii_alphanumeric() || c == '_') {
                    break;
                }
                end = j + c.len_utf8();
                it.next();
                col += 1;
            }
            out.push(Token {
                tok: Tok::Name(text[i..end].to_string()),
                pos,
                start: i,
                end,
            });
        } else if c.is_ascii_digit() {
            let mut end = i;
            while let Some(&(j, c)) = it.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                end = j + 1;
                it.next();
                col += 1;
            }
            out.push(Token {
                tok: Tok::Int(text[i..end].to_string()),
                pos,
                start: i,
                end,
            });
        } else if "+-*/^()[],;='".contains(c) {
            it.next();
            col += 1;
            out.push(Token {
                tok: Tok::Sym(c),
                pos,
                start: i,
                end: i + 1,
            });
        } else {
            return Err(ScriptError::new(pos, format!("unexpected character `{c}`")));
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
        start: text.len(),
        end: text.len(),
    });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ast {
    Int(BigInt),
    Name(String, Pos),
    /// `V1''(x)` or `D[2,0]A1(x1,x2)`.
    Func {
        name: String,
        deriv: Vec<u32>,
        args: Vec<String>,
        pos: Pos,
    },
    Call {
        name: String,
        args: Vec<Ast>,
        extra: Vec<Ast>,
        pos: Pos,
    },
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDecl {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Chart {
        name: String,
        even: Vec<String>,
        odd: Vec<String>,
    },
    Param(Vec<String>),
    Radical {
        name: String,
        target: Ast,
    },
    Quantum,
    Func(Vec<FuncDecl>),
    /// `None` for the odd structure, else the odd-metric signature.
    Symplectic(Option<Vec<i64>>),
    Let {
        name: String,
        value: Ast,
    },
    Print {
        value: Ast,
        source: String,
    },
    Check(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub pos: Pos,
    pub stmt: Stmt,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Script {
    pub statements: Vec<Statement>,
}

/// Built-in operations; each is called with parentheses.
pub const BUILTINS: &[&str] = &[
    "d", "E", "lie", "inner", "bracket", "field", "ham", "berezin", "hodge", "poisson", "star",
    "oddstar", "evolve", "fn", "tensor", "weyl",
];

/// Identifiers introduced by the engine itself.
pub const RESERVED: &[&str] = &["i", "eps", "t", "kappa"];

const QUANTUM: &[&str] = &["hbar", "sigma", "tau", "rho", "taup"];

const KEYWORDS: &[&str] = &[
    "chart",
    "param",
    "radical",
    "quantum",
    "func",
    "symplectic",
    "let",
    "print",
    "check",
];

#[derive(Default)]
struct Scope {
    gens: Vec<String>,
    names: BTreeSet<String>,
    funcs: Vec<FuncDecl>,
    has_chart: bool,
}

impl Scope {
    fn knows(&self, n: &str) -> bool {
        RESERVED.contains(&n) || self.names.contains(n)
    }
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<Token>,
    at: usize,
    scope: Scope,
}

type PResult<T> = Result<T, ScriptError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ScriptError {
            pos: self.pos(),
            message: format!("unexpected {}", self.peek()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == k)
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.is_sym(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{c}`")])
        }
    }

    fn name(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Name(n) => {
                let p = self.pos();
                self.bump();
                Ok((n, p))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn int(&mut self) -> PResult<BigInt> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n.parse().expect("digits"))
            }
            _ => self.fail(&["integer"]),
        }
    }

    fn small(&mut self) -> PResult<u32> {
        let p = self.pos();
        let n = self.int()?;
        u32::try_from(n).map_err(|_| ScriptError::new(p, "integer too large"))
    }

    fn signed(&mut self) -> PResult<i64> {
        let neg = self.is_sym('-');
        if neg {
            self.bump();
        }
        let p = self.pos();
        let n = i64::try_from(self.int()?).map_err(|_| ScriptError::new(p, "integer too large"))?;
        Ok(if neg { -n } else { n })
    }

    fn declare(&mut self, n: &str, p: Pos) -> PResult<()> {
        if KEYWORDS.contains(&n) || BUILTINS.contains(&n) || RESERVED.contains(&n) || n == "D" {
            return Err(ScriptError::new(p, format!("`{n}` is reserved")));
        }
        if !self.scope.names.insert(n.to_string()) {
            return Err(ScriptError::new(p, format!("redeclaration of `{n}`")));
        }
        Ok(())
    }

    fn names(&mut self) -> PResult<Vec<(String, Pos)>> {
        let mut out = vec![self.name()?];
        while self.is_sym(',') {
            self.bump();
            out.push(self.name()?);
        }
        Ok(out)
    }

    fn need_chart(&self, p: Pos) -> PResult<()> {
        if self.scope.has_chart {
            Ok(())
        } else {
            Err(ScriptError::new(p, "no chart declared"))
        }
    }

    fn statement(&mut self) -> PResult<Statement> {
        let pos = self.pos();
        let kw = match self.peek() {
            Tok::Name(n) if KEYWORDS.contains(&n.as_str()) => n.clone(),
            _ => return self.fail(KEYWORDS),
        };
        self.bump();
        let stmt = match kw.as_str() {
            "chart" => {
                if self.scope.has_chart {
                    return Err(ScriptError::new(pos, "only one chart may be declared"));
                }
                let (name, np) = self.name()?;
                self.declare(&name, np)?;
                let (mut even, mut odd) = (Vec::new(), Vec::new());
                loop {
                    let target = if self.is_kw("even") {
                        &mut even
                    } else if self.is_kw("odd") {
                        &mut odd
                    } else {
                        break;
                    };
                    self.bump();
                    let ns = self.names()?;
                    for (n, p) in ns {
                        target.push(n.clone());
                        self.declare(&n, p)?;
                    }
                }
                if even.is_empty() && odd.is_empty() {
                    return self.fail(&["`even`", "`odd`"]);
                }
                self.scope.has_chart = true;
                self.scope.gens = even.iter().chain(&odd).cloned().collect();
                let gens = self.scope.gens.clone();
                for g in &gens {
                    for pre in ["d", "v"] {
                        self.scope.names.insert(format!("{pre}{g}"));
                    }
                }
                Stmt::Chart { name, even, odd }
            }
            "param" => {
                self.need_chart(pos)?;
                let ns = self.names()?;
                for (n, p) in &ns {
                    self.declare(n, *p)?;
                }
                Stmt::Param(ns.into_iter().map(|(n, _)| n).collect())
            }
            "radical" => {
                self.need_chart(pos)?;
                let (name, np) = self.name()?;
                self.expect_sym('^')?;
                let p = self.pos();
                if self.small()? != 2 {
                    return Err(ScriptError::new(p, "a radical is declared by its square"));
                }
                self.expect_sym('=')?;
                let target = self.expr()?;
                self.declare(&name, np)?;
                Stmt::Radical { name, target }
            }
            "quantum" => {
                self.need_chart(pos)?;
                for q in QUANTUM {
                    self.declare(q, pos)?;
                }
                Stmt::Quantum
            }
            "func" => {
                self.need_chart(pos)?;
                let mut decls = Vec::new();
                loop {
                    let (name, np) = self.name()?;
                    self.expect_sym('(')?;
                    let args = self.names()?;
                    self.expect_sym(')')?;
                    for (a, p) in &args {
                        if !self.scope.gens.contains(a) {
                            return Err(ScriptError::new(*p, format!("unknown identifier `{a}`")));
                        }
                    }
                    self.declare(&name, np)?;
                    let d = FuncDecl {
                        name,
                        args: args.into_iter().map(|(a, _)| a).collect(),
                    };
                    self.scope.funcs.push(d.clone());
                    decls.push(d);
                    if !self.is_sym(',') {
                        break;
                    }
                    self.bump();
                }
                Stmt::Func(decls)
            }
            "symplectic" => {
                self.need_chart(pos)?;
                if self.is_kw("odd") {
                    self.bump();
                    Stmt::Symplectic(None)
                } else if self.is_kw("even") {
                    self.bump();
                    let mut sig = Vec::new();
                    if self.is_sym('[') {
                        self.bump();
                        if !self.is_sym(']') {
                            sig.push(self.signed()?);
                            while self.is_sym(',') {
                                self.bump();
                                sig.push(self.signed()?);
                            }
                        }
                        self.expect_sym(']')?;
                    }
                    Stmt::Symplectic(Some(sig))
                } else {
                    return self.fail(&["`even`", "`odd`"]);
                }
            }
            "let" => {
                self.need_chart(pos)?;
                let (name, np) = self.name()?;
                self.expect_sym('=')?;
                let value = self.expr()?;
                self.declare(&name, np)?;
                Stmt::Let { name, value }
            }
            "print" => {
                self.need_chart(pos)?;
                let start = self.toks[self.at].start;
                let value = self.expr()?;
                let end = self.toks[self.at.saturating_sub(1)].end;
                Stmt::Print {
                    value,
                    source: self.text[start..end].to_string(),
                }
            }
            "check" => {
                let (mut name, _) = self.name()?;
                while self.is_sym('-') {
                    self.bump();
                    name.push('-');
                    name.push_str(&self.name()?.0);
                }
                Stmt::Check(name)
            }
            _ => unreachable!(),
        };
        self.expect_sym(';')?;
        Ok(Statement { pos, stmt })
    }

    fn expr(&mut self) -> PResult<Ast> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_sym('+') {
                BinOp::Add
            } else if self.is_sym('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> PResult<Ast> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.is_sym('*') {
                BinOp::Mul
            } else if self.is_sym('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> PResult<Ast> {
        if self.is_sym('-') {
            self.bump();
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.is_sym('^') {
            self.bump();
            return Ok(Ast::Pow(Box::new(base), self.small()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Ast> {
        const START: &[&str] = &["integer", "identifier", "`(`", "`-`"];
        match self.peek().clone() {
            Tok::Int(_) => Ok(Ast::Int(self.int()?)),
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Name(n) if n == "D" && *self.peek2() == Tok::Sym('[') => {
                let pos = self.pos();
                self.bump();
                self.bump();
                let mut deriv = vec![self.small()?];
                while self.is_sym(',') {
                    self.bump();
                    deriv.push(self.small()?);
                }
                self.expect_sym(']')?;
                let (name, _) = self.name()?;
                self.application(name, deriv, pos)
            }
            Tok::Name(n) => {
                let pos = self.pos();
                self.bump();
                if BUILTINS.contains(&n.as_str()) && self.is_sym('(') {
                    return self.call(n, pos);
                }
                if self.is_sym('\'') || self.is_sym('(') {
                    let mut primes = 0;
                    while self.is_sym('\'') {
                        self.bump();
                        primes += 1;
                    }
                    return self.application(n, vec![primes], pos);
                }
                if !self.scope.knows(&n) {
                    return Err(ScriptError::new(pos, format!("unknown identifier `{n}`")));
                }
                if self.scope.funcs.iter().any(|f| f.name == n) {
                    return Err(ScriptError::new(
                        pos,
                        format!("formal function `{n}` needs arguments"),
                    ));
                }
                Ok(Ast::Name(n, pos))
            }
            _ => self.fail(START),
        }
    }

    fn application(&mut self, name: String, mut deriv: Vec<u32>, pos: Pos) -> PResult<Ast> {
        let decl = self
            .scope
            .funcs
            .iter()
            .find(|f| f.name == name)
            .cloned()
            .ok_or_else(|| ScriptError::new(pos, format!("unknown formal function `{name}`")))?;
        self.expect_sym('(')?;
        let args = self.names()?;
        self.expect_sym(')')?;
        let args: Vec<String> = args.into_iter().map(|(a, _)| a).collect();
        if args != decl.args {
            return Err(ScriptError::new(
                pos,
                format!(
                    "`{name}` is declared with arguments ({})",
                    decl.args.join(",")
                ),
            ));
        }
        if deriv.len() == 1 && args.len() > 1 {
            if deriv[0] > 0 {
                return Err(ScriptError::new(
                    pos,
                    "use D[..] for derivatives in several variables",
                ));
            }
            deriv = vec![0; args.len()];
        }
        if deriv.len() != args.len() {
            return Err(ScriptError::new(
                pos,
                "derivative multi-index has the wrong length",
            ));
        }
        Ok(Ast::Func {
            name,
            deriv,
            args,
            pos,
        })
    }

    fn call(&mut self, name: String, pos: Pos) -> PResult<Ast> {
        self.expect_sym('(')?;
        let mut args = Vec::new();
        let mut extra = Vec::new();
        if !self.is_sym(')') && !self.is_sym(';') {
            args.push(self.expr()?);
            while self.is_sym(',') {
                self.bump();
                args.push(self.expr()?);
            }
        }
        if self.is_sym(';') {
            self.bump();
            extra.push(self.expr()?);
            while self.is_sym(',') {
                self.bump();
                extra.push(self.expr()?);
            }
        }
        if !self.is_sym(')') {
            return self.fail(&["`,`", "`;`", "`)`"]);
        }
        self.bump();
        Ok(Ast::Call {
            name,
            args,
            extra,
            pos,
        })
    }
}

/// Parses a whole script, resolving every identifier against earlier declarations.
pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let toks = lex(text)?;
    let mut p = Parser {
        text,
        toks,
        at: 0,
        scope: Scope::default(),
    };
    let mut statements = Vec::new();
    while *p.peek() != Tok::Eof {
        statements.push(p.statement()?);
    }
    Ok(Script { statements })
}

/// Parses a standalone expression over the given generators, parameters and
/// formal functions (used to read emitted text back).
pub fn parse_expr(text: &str, names: &[String], funcs: &[FuncDecl]) -> Result<Ast, ScriptError> {
    let toks = lex(text)?;
    let mut scope = Scope {
        has_chart: true,
        funcs: funcs.to_vec(),
        ..Scope::default()
    };
    scope.names.extend(names.iter().cloned());
    scope.names.extend(funcs.iter().map(|f| f.name.clone()));
    let mut p = Parser {
        text,
        toks,
        at: 0,
        scope,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.fail(&["operator", "end of input"]);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_and_binding() {
        let s = parse_script(
            "chart M even x,p odd xi1,xi2;\nfunc V1(x);\nlet H = (p^2 + V1(x)^2)/2 + V1'(x)*xi2*xi1;",
        )
        .unwrap();
        assert_eq!(
            s.statements[0].stmt,
            Stmt::Chart {
                name: "M".into(),
                even: vec!["x".into(), "p".into()],
                odd: vec!["xi1".into(), "xi2".into()]
            }
        );
        assert!(matches!(&s.statements[2].stmt, Stmt::Let { name, .. } if name == "H"));
        assert_eq!(s.statements[2].pos, Pos { line: 3, col: 1 });
    }

    #[test]
    fn errors_carry_position() {
        let e = parse_script("chart M even x odd xi1,xi2;\nlet f = xi1 +").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 14 });
        assert!(e.message.contains("end of input"));
        assert!(e.expected.contains(&"identifier".to_string()));

        let e = parse_script("chart M even x;\nlet x = 1;").unwrap_err();
        assert!(e.message.contains("redeclaration"));
        let e = parse_script("chart M even x;\nprint y;").unwrap_err();
        assert!(e.message.contains("unknown identifier `y`"));
        assert_eq!(e.pos, Pos { line: 2, col: 7 });
        let e = parse_script("chart M even x;\nprint x $ 2;").unwrap_err();
        assert!(e.message.contains("unexpected character"));
    }

    #[test]
    fn derivative_syntax() {
        let s =
            parse_script("chart M even x1,x2;\nfunc A(x1,x2);\nprint D[2,0]A(x1,x2) + A(x1,x2);")
                .unwrap();
        let Stmt::Print { value, source } = &s.statements[2].stmt else {
            panic!()
        };
        assert_eq!(source, "D[2,0]A(x1,x2) + A(x1,x2)");
        let Ast::Bin(_, l, _) = value else { panic!() };
        assert!(matches!(&**l, Ast::Func { deriv, .. } if deriv == &vec![2, 0]));
        assert!(parse_script("chart M even x1,x2;\nfunc A(x1,x2);\nprint A'(x1,x2);").is_err());
        assert!(parse_script("chart M even x1,x2;\nfunc A(x1,x2);\nprint A(x2,x1);").is_err());
    }

    #[test]
    fn check_names_with_dashes() {
        let s = parse_script("check cartan-table;").unwrap();
        assert_eq!(s.statements[0].stmt, Stmt::Check("cartan-table".into()));
    }
}
