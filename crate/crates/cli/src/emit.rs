//! Deterministic text and newline-delimited JSON output.

use serde::Serialize;
use superforms::expr::mono_factors;
use superforms::{Expr, Matrix, Poly, Tensor1k, VField};

use crate::run::{Record, Value};
use crate::suites::SuiteReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct TermJson {
    pub coeff: String,
    pub monomial: Vec<String>,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct ExprJson {
    pub terms: Vec<TermJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<Vec<TermJson>>,
}

#[derive(Serialize)]
struct ComponentJson {
    generator: String,
    coeff: ExprJson,
}

#[derive(Serialize)]
struct FieldJson {
    parity: String,
    components: Vec<ComponentJson>,
}

#[derive(Serialize)]
struct TensorJson {
    degree: u32,
    components: Vec<ComponentJson>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ValueJson {
    Expr(ExprJson),
    Field { field: FieldJson },
    Tensor { tensor: TensorJson },
    Matrix { matrix: Vec<Vec<ExprJson>> },
}

#[derive(Serialize)]
struct PrintJson<'a> {
    line: usize,
    expr: &'a str,
    value: ValueJson,
}

#[derive(Serialize)]
struct ItemJson<'a> {
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

#[derive(Serialize)]
struct CheckJson<'a> {
    line: usize,
    check: &'a str,
    passed: bool,
    items: Vec<ItemJson<'a>>,
}

fn terms(e: &Expr, p: &Poly) -> Vec<TermJson> {
    p.terms()
        .map(|(m, c)| TermJson {
            coeff: c.to_string(),
            monomial: mono_factors(e.chart(), m),
        })
        .collect()
}

pub fn expr_json(e: &Expr) -> ExprJson {
    ExprJson {
        terms: terms(e, e.num()),
        denominator: (!e.den().is_one()).then(|| terms(e, e.den())),
    }
}

fn components(chart: &superforms::Chart, cs: &[Expr]) -> Vec<ComponentJson> {
    cs.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(a, c)| ComponentJson {
            generator: chart.generator(a as u16).name.clone(),
            coeff: expr_json(c),
        })
        .collect()
}

fn field_json(v: &VField) -> FieldJson {
    FieldJson {
        parity: v.parity().to_string(),
        components: components(v.chart(), v.coeffs()),
    }
}

fn tensor_json(t: &Tensor1k) -> TensorJson {
    TensorJson {
        degree: t.degree(),
        components: components(t.base(), t.components()),
    }
}

fn matrix_json(m: &Matrix) -> Vec<Vec<ExprJson>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| expr_json(m.get(i, j))).collect())
        .collect()
}

fn value_json(v: &Value) -> ValueJson {
    match v {
        Value::Expr(e) => ValueJson::Expr(expr_json(e)),
        Value::Field(f) => ValueJson::Field {
            field: field_json(f),
        },
        Value::Tensor(t) => ValueJson::Tensor {
            tensor: tensor_json(t),
        },
        Value::Matrix(m) => ValueJson::Matrix {
            matrix: matrix_json(m),
        },
    }
}

pub fn tensor_text(t: &Tensor1k) -> String {
    let parts: Vec<String> = t
        .components()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(a, c)| format!("{}: {c}", t.base().generator(a as u16).name))
        .collect();
    format!("tensor{}[{}]", t.degree(), parts.join(", "))
}

pub fn value_text(v: &Value) -> String {
    match v {
        Value::Expr(e) => e.to_string(),
        Value::Field(f) => f.to_string(),
        Value::Tensor(t) => tensor_text(t),
        Value::Matrix(m) => m.to_string(),
    }
}

fn verdict(p: bool) -> &'static str {
    if p {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn report_text(r: &SuiteReport) -> String {
    let mut out = format!("check {}: {}\n", r.name, verdict(r.passed()));
    for it in &r.items {
        out.push_str(&format!("  {} {}", verdict(it.passed), it.name));
        if !it.detail.is_empty() {
            out.push_str(&format!(": {}", it.detail));
        }
        out.push('\n');
    }
    out
}

fn report_json(line: usize, r: &SuiteReport) -> String {
    let rec = CheckJson {
        line,
        check: &r.name,
        passed: r.passed(),
        items: r
            .items
            .iter()
            .map(|i| ItemJson {
                name: &i.name,
                passed: i.passed,
                detail: &i.detail,
            })
            .collect(),
    };
    serde_json::to_string(&rec).expect("serializable")
}

/// One record: a single line of text or JSON (text check reports span several lines).
pub fn emit(r: &Record, format: Format) -> String {
    match (r, format) {
        (Record::Print { value, .. }, Format::Text) => format!("{}\n", value_text(value)),
        (
            Record::Print {
                line,
                source,
                value,
            },
            Format::Json,
        ) => {
            let rec = PrintJson {
                line: *line,
                expr: source,
                value: value_json(value),
            };
            format!("{}\n", serde_json::to_string(&rec).expect("serializable"))
        }
        (Record::Check { report, .. }, Format::Text) => report_text(report),
        (Record::Check { line, report }, Format::Json) => {
            format!("{}\n", report_json(*line, report))
        }
    }
}

pub fn emit_all(records: &[Record], format: Format) -> String {
    records.iter().map(|r| emit(r, format)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use superforms::Chart;

    #[test]
    fn expression_forms() {
        let c = Chart::new(&["x"], &["xi1", "xi2"], &[] as &[&str]).unwrap();
        let v = |n: &str| c.var(n).unwrap();
        let e = -(&v("xi1") * &v("xi2"));
        assert_eq!(e.to_string(), "-1*xi1*xi2");
        let h = &v("x").pow(2) / 2;
        assert_eq!(h.to_string(), "1/2*x^2");
        assert_eq!(
            serde_json::to_string(&expr_json(&h)).unwrap(),
            r#"{"terms":[{"coeff":"1/2","monomial":["x^2"]}]}"#
        );
        let g = (&v("x") * &Expr::i(&c)) + Expr::ratio(&c, 1, 3);
        assert_eq!(g.to_string(), "1*i*x + 1/3");
        let q = Expr::one(&c).divide(&v("x")).unwrap();
        assert_eq!(
            serde_json::to_string(&expr_json(&q)).unwrap(),
            r#"{"terms":[{"coeff":"1","monomial":[]}],"denominator":[{"coeff":"1","monomial":["x"]}]}"#
        );
    }
}
