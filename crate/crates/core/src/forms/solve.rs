//! Exact symbolic linear algebra: dense expression matrices and
//! Gaussian elimination with domain-aware pivot selection.
//!
//! Pivots prefer entries that are single monomials in group parameters
//! and `u`: those are provably nonzero on the domain (`u != 0`,
//! `a1*a3*a6*a10*a15 != 0`), so elimination never branches on an
//! expression that could vanish.

use crate::error::{Error, Result};
use crate::expr::{Expr, JetCoord, Symbol};

use super::OneForm;

/// Dense matrix of expressions, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl ExprMatrix {
    pub fn zero(rows: usize, cols: usize) -> ExprMatrix {
        ExprMatrix {
            rows,
            cols,
            data: vec![Expr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> ExprMatrix {
        let mut m = ExprMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Expr::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> ExprMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        ExprMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Expr {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Expr) {
        self.data[r * self.cols + c] = value;
    }

    pub fn mul(&self, other: &ExprMatrix) -> ExprMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = ExprMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j).add(&a.mul(b));
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    /// Determinant by fraction-full elimination (exact division by the
    /// chosen pivots; sign tracked through row swaps).
    pub fn det(&self) -> Result<Expr> {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let n = m.rows;
        let mut det = Expr::one();
        for col in 0..n {
            let pivot_row = match best_pivot(&m, col, col) {
                Some(r) => r,
                None => return Ok(Expr::zero()),
            };
            if pivot_row != col {
                for c in 0..n {
                    let a = m.get(col, c).clone();
                    let b = m.get(pivot_row, c).clone();
                    m.set(col, c, b);
                    m.set(pivot_row, c, a);
                }
                det = det.neg();
            }
            let pivot = m.get(col, col).clone();
            det = det.mul(&pivot);
            for r in col + 1..n {
                let factor = m.get(r, col).div(&pivot)?;
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let val = m.get(r, c).sub(&m.get(col, c).mul(&factor));
                    m.set(r, c, val);
                }
            }
        }
        Ok(det)
    }

    /// Exact inverse; fails with `SingularSystem` when the matrix is
    /// singular.
    pub fn inverse(&self) -> Result<ExprMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let unit_rows: Vec<Vec<Expr>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Expr::one() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        // Row-valued right-hand sides solve A X = I in one elimination;
        // the c-th solution entry is row c of the inverse.
        let solution = solve_linear(self, &unit_rows)?;
        let mut out = ExprMatrix::zero(n, n);
        for (i, row) in solution.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out.set(i, j, v.clone());
            }
        }
        Ok(out)
    }
}

/// Right-hand sides usable in the shared elimination: expressions,
/// expression rows, and one-forms.
pub trait LinearRhs: Clone {
    fn sub_scaled(&self, other: &Self, factor: &Expr) -> Self;
    fn div(&self, by: &Expr) -> Result<Self>;
    fn is_zero(&self) -> bool;
}

impl LinearRhs for Expr {
    fn sub_scaled(&self, other: &Self, factor: &Expr) -> Self {
        self.sub(&other.mul(factor))
    }

    fn div(&self, by: &Expr) -> Result<Self> {
        Expr::div(self, by)
    }

    fn is_zero(&self) -> bool {
        Expr::is_zero(self)
    }
}

impl LinearRhs for Vec<Expr> {
    fn sub_scaled(&self, other: &Self, factor: &Expr) -> Self {
        self.iter()
            .zip(other)
            .map(|(a, b)| a.sub(&b.mul(factor)))
            .collect()
    }

    fn div(&self, by: &Expr) -> Result<Self> {
        self.iter().map(|a| a.div(by)).collect()
    }

    fn is_zero(&self) -> bool {
        self.iter().all(Expr::is_zero)
    }
}

impl LinearRhs for OneForm {
    fn sub_scaled(&self, other: &Self, factor: &Expr) -> Self {
        self.sub(&other.scale(factor))
            .expect("elimination operands share a context")
    }

    fn div(&self, by: &Expr) -> Result<Self> {
        self.scale_div(by)
    }

    fn is_zero(&self) -> bool {
        OneForm::is_zero(self)
    }
}

/// Pivot quality: `0` for monomial ratios over group parameters and
/// `u` (nonzero on the domain), `1` for other monomial ratios, `2` for
/// general nonzero expressions.
fn pivot_class(e: &Expr) -> Option<u8> {
    if e.is_zero() {
        return None;
    }
    match e.as_monomial_ratio() {
        Some((n, d)) => {
            let domain_safe = n
                .factors
                .keys()
                .chain(d.factors.keys())
                .all(|s| s.is_group() || *s == Symbol::jet(JetCoord::U));
            Some(if domain_safe { 0 } else { 1 })
        }
        None => Some(2),
    }
}

fn best_pivot(m: &ExprMatrix, col: usize, from_row: usize) -> Option<usize> {
    let mut best: Option<(u8, usize)> = None;
    for r in from_row..m.rows() {
        if let Some(class) = pivot_class(m.get(r, col)) {
            match best {
                Some((c, _)) if c <= class => {}
                _ => best = Some((class, r)),
            }
            if class == 0 {
                break;
            }
        }
    }
    best.map(|(_, r)| r)
}

/// Solves the square system `A x = b` exactly. The result satisfies
/// `A x - b = 0` componentwise; under `debug_assertions` that identity
/// is recomputed and checked on every call.
pub fn solve_linear<R: LinearRhs>(a: &ExprMatrix, b: &[R]) -> Result<Vec<R>> {
    assert_eq!(a.rows(), a.cols(), "solve_linear needs a square system");
    assert_eq!(a.rows(), b.len());
    let n = a.rows();
    let mut m = a.clone();
    let mut rhs: Vec<R> = b.to_vec();

    // Forward elimination with row swaps.
    for col in 0..n {
        let pivot_row = best_pivot(&m, col, col).ok_or_else(|| Error::SingularSystem {
            stage: col,
            detail: format!("no nonzero pivot in column {col}"),
        })?;
        if pivot_row != col {
            for c in 0..n {
                let x = m.get(col, c).clone();
                let y = m.get(pivot_row, c).clone();
                m.set(col, c, y);
                m.set(pivot_row, c, x);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m.get(col, col).clone();
        for r in col + 1..n {
            let factor = m.get(r, col).div(&pivot)?;
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let val = m.get(r, c).sub(&m.get(col, c).mul(&factor));
                m.set(r, c, val);
            }
            rhs[r] = rhs[r].sub_scaled(&rhs[col], &factor);
        }
    }

    // Back substitution.
    let mut solution: Vec<Option<R>> = vec![None; n];
    for col in (0..n).rev() {
        let mut acc = rhs[col].clone();
        for c in col + 1..n {
            let coeff = m.get(col, c);
            if coeff.is_zero() {
                continue;
            }
            acc = acc.sub_scaled(solution[c].as_ref().unwrap(), coeff);
        }
        solution[col] = Some(acc.div(m.get(col, col))?);
    }
    let solution: Vec<R> = solution.into_iter().map(Option::unwrap).collect();

    #[cfg(debug_assertions)]
    verify_solution(a, b, &solution);

    Ok(solution)
}

#[cfg(debug_assertions)]
fn verify_solution<R: LinearRhs>(a: &ExprMatrix, b: &[R], x: &[R]) {
    for r in 0..a.rows() {
        // b_r - sum_c A[r][c] x_c must vanish identically.
        let mut residual = b[r].clone();
        for c in 0..a.cols() {
            residual = residual.sub_scaled(&x[c], a.get(r, c));
        }
        assert!(
            residual.is_zero(),
            "solve_linear produced a non-solution in row {r}"
        );
    }
}
