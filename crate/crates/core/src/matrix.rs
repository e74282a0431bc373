//! Dense matrices with expression entries.

use std::fmt;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Row-major matrix over the algebra of one chart. Products keep the order
/// of entries, so odd entries are handled with their signs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    chart: Chart,
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl Matrix {
    pub fn zeros(chart: &Chart, rows: usize, cols: usize) -> Matrix {
        Matrix {
            chart: chart.clone(),
            rows,
            cols,
            data: vec![Expr::zero(chart); rows * cols],
        }
    }

    pub fn identity(chart: &Chart, n: usize) -> Matrix {
        let mut m = Matrix::zeros(chart, n, n);
        for i in 0..n {
            m.data[i * n + i] = Expr::one(chart);
        }
        m
    }

    pub fn from_rows(chart: &Chart, rows: Vec<Vec<Expr>>) -> Result<Matrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            for e in row {
                data.push(e.embed(chart)?);
            }
        }
        Ok(Matrix {
            chart: chart.clone(),
            rows: r,
            cols: c,
            data,
        })
    }

    /// Constant matrix from integers.
    pub fn from_ints(chart: &Chart, rows: &[&[i64]]) -> Matrix {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|v| Expr::int(chart, *v)).collect())
            .collect();
        Matrix::from_rows(chart, rows).expect("rectangular integer rows")
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn entries(&self) -> &[Expr] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Expr::is_zero)
    }

    pub fn embed(&self, chart: &Chart) -> Result<Matrix> {
        let data = self
            .data
            .iter()
            .map(|e| e.embed(chart))
            .collect::<Result<_>>()?;
        Ok(Matrix {
            chart: chart.clone(),
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Result<Expr>) -> Result<Matrix> {
        let data: Vec<Expr> = self.data.iter().map(f).collect::<Result<_>>()?;
        let chart = data
            .first()
            .map_or(self.chart.clone(), |e| e.chart().clone());
        let data = data
            .iter()
            .map(|e| e.embed(&chart))
            .collect::<Result<_>>()?;
        Ok(Matrix {
            chart,
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    fn aligned(&self, o: &Matrix) -> Result<(Matrix, Matrix)> {
        let chart = self.chart.join(&o.chart)?;
        Ok((self.embed(&chart)?, o.embed(&chart)?))
    }

    pub fn try_add(&self, o: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return Err(Error::InvalidArgument("matrix shapes differ".into()));
        }
        let (a, b) = self.aligned(o)?;
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
        Ok(Matrix { data, ..a })
    }

    pub fn try_sub(&self, o: &Matrix) -> Result<Matrix> {
        self.try_add(&o.neg())
    }

    pub fn neg(&self) -> Matrix {
        Matrix {
            data: self.data.iter().map(|e| -e).collect(),
            ..self.clone()
        }
    }

    pub fn try_mul(&self, o: &Matrix) -> Result<Matrix> {
        if self.cols != o.rows {
            return Err(Error::InvalidArgument(
                "matrix shapes do not compose".into(),
            ));
        }
        let (a, b) = self.aligned(o)?;
        let mut out = Matrix::zeros(&a.chart, a.rows, b.cols);
        for i in 0..a.rows {
            for j in 0..b.cols {
                let mut acc = Expr::zero(&a.chart);
                for k in 0..a.cols {
                    let (x, y) = (a.get(i, k), b.get(k, j));
                    if !x.is_zero() && !y.is_zero() {
                        acc = &acc + &(x * y);
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// `f·M`, multiplying every entry from the left.
    pub fn scale_left(&self, f: &Expr) -> Result<Matrix> {
        self.map(|e| f.try_mul(e))
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(&self.chart, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    fn minor(&self, row: usize, col: usize) -> Matrix {
        let n = self.rows;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != row) {
            for j in (0..n).filter(|&j| j != col) {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix {
            chart: self.chart.clone(),
            rows: n - 1,
            cols: n - 1,
            data,
        }
    }

    /// Determinant by cofactor expansion (entries must commute).
    pub fn det(&self) -> Result<Expr> {
        if !self.is_square() {
            return Err(Error::InvalidArgument(
                "determinant of a non-square matrix".into(),
            ));
        }
        if self
            .data
            .iter()
            .any(|e| e.parity() != Some(crate::chart::Parity::Even))
        {
            return Err(Error::ParityMismatch(
                "determinant needs even entries".into(),
            ));
        }
        Ok(self.det_unchecked())
    }

    fn det_unchecked(&self) -> Expr {
        match self.rows {
            0 => Expr::one(&self.chart),
            1 => self.data[0].clone(),
            2 => &(self.get(0, 0) * self.get(1, 1)) - &(self.get(0, 1) * self.get(1, 0)),
            n => {
                let mut acc = Expr::zero(&self.chart);
                for j in 0..n {
                    let a = self.get(0, j);
                    if a.is_zero() {
                        continue;
                    }
                    let t = a * &self.minor(0, j).det_unchecked();
                    acc = if j % 2 == 0 { &acc + &t } else { &acc - &t };
                }
                acc
            }
        }
    }

    /// Inverse of an even matrix via the adjugate.
    pub fn inverse(&self) -> Result<Matrix> {
        let det = self.det()?;
        let inv = det
            .inverse()
            .map_err(|_| Error::NotInvertible("matrix determinant is not invertible".into()))?;
        let n = self.rows;
        let mut out = Matrix::zeros(&self.chart, n, n);
        for i in 0..n {
            for j in 0..n {
                let c = self.minor(j, i).det_unchecked();
                let c = if (i + j) % 2 == 0 { c } else { -c };
                out.set(i, j, &c * &inv);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|i| {
                let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
                format!("[{}]", row.join(", "))
            })
            .collect();
        write!(f, "matrix[{}]", rows.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_and_inverse() {
        let c = Chart::new(&["x"], &[], &[]).unwrap();
        let m = Matrix::from_ints(&c, &[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        assert_eq!(m.det().unwrap(), Expr::int(&c, 18));
        let inv = m.inverse().unwrap();
        assert_eq!(m.try_mul(&inv).unwrap(), Matrix::identity(&c, 3));
        let x = c.var("x").unwrap();
        let s = Matrix::from_rows(
            &c,
            vec![vec![x.clone(), Expr::one(&c)], vec![Expr::zero(&c), x]],
        )
        .unwrap();
        let si = s.inverse().unwrap();
        assert_eq!(si.try_mul(&s).unwrap(), Matrix::identity(&c, 2));
    }
}
