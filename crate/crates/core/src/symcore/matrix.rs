//! Matrices of rational functions and their generic rank.

use alloc::vec::Vec;

use super::expr::Expr;
use super::ratfun::RatFun;
use super::SymError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RatFun>,
}

/// Result of fraction-free elimination.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub rank: usize,
    /// Column of each pivot, in elimination order.
    pub pivot_columns: Vec<usize>,
    /// Pivot values: the ratios of successive leading principal minors of the
    /// pivot submatrix. Their zeros and poles bound the generic locus.
    pub pivots: Vec<RatFun>,
}

impl ExprMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<RatFun>) -> Result<Self, SymError> {
        if rows * cols != entries.len() {
            return Err(SymError::Ragged);
        }
        Ok(ExprMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<RatFun>>) -> Result<Self, SymError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(SymError::Ragged);
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Builds from expressions, canonicalizing every entry.
    pub fn from_exprs(rows: &[Vec<Expr>]) -> Result<Self, SymError> {
        let converted = rows
            .iter()
            .map(|row| row.iter().map(Expr::to_ratfun).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(converted)
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n * n)
            .map(|k| if k / n == k % n { RatFun::one() } else { RatFun::zero() })
            .collect();
        ExprMatrix { rows: n, cols: n, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RatFun {
        &self.entries[i * self.cols + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> Expr {
        Expr::from(self.get(i, j))
    }

    pub fn row(&self, i: usize) -> &[RatFun] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Principal submatrix on `indices`.
    pub fn principal(&self, indices: &[usize]) -> ExprMatrix {
        let entries = indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        ExprMatrix { rows: indices.len(), cols: indices.len(), entries }
    }

    /// Bareiss elimination. Columns are scanned left to right; within a
    /// column the lowest-index remaining row with a nonzero entry pivots.
    pub fn echelon(&self) -> Echelon {
        let mut m: Vec<Vec<RatFun>> = (0..self.rows).map(|i| self.row(i).to_vec()).collect();
        let mut rank = 0;
        let mut prev = RatFun::one();
        let mut pivot_columns = Vec::new();
        let mut pivots = Vec::new();
        for col in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| !m[r][col].zero_test().is_zero()) else {
                continue;
            };
            m.swap(rank, p);
            let pivot = m[rank][col].clone();
            for r in rank + 1..self.rows {
                let factor = m[r][col].clone();
                for c in col..self.cols {
                    let v = pivot.mul(&m[r][c]).sub(&factor.mul(&m[rank][c]));
                    m[r][c] = v.div(&prev).expect("previous pivot is nonzero");
                }
            }
            pivots.push(pivot.div(&prev).expect("previous pivot is nonzero"));
            prev = pivot;
            pivot_columns.push(col);
            rank += 1;
        }
        Echelon { rank, pivot_columns, pivots }
    }

    pub fn rank(&self) -> usize {
        self.echelon().rank
    }
}

/// Generic symbolic rank.
pub fn matrix_rank(m: &ExprMatrix) -> usize {
    m.rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse::parse_expr;
    use crate::symcore::symbol::SymbolTable;
    use alloc::vec;

    fn q(n: i64) -> RatFun {
        RatFun::integer(n)
    }

    #[test]
    fn small_ranks() {
        assert_eq!(matrix_rank(&ExprMatrix::identity(2)), 2);
        let m = ExprMatrix::from_rows(vec![vec![q(1), q(-1)], vec![q(-1), q(1)]]).unwrap();
        assert_eq!(matrix_rank(&m), 1);
        let t = SymbolTable::for_model(&["N", "a"], &[]).unwrap();
        let e = parse_expr("-6*a/N", &t).unwrap().to_ratfun().unwrap();
        let frw = ExprMatrix::from_rows(vec![vec![q(0), q(0)], vec![q(0), e.clone()]]).unwrap();
        let ech = frw.echelon();
        assert_eq!(ech.rank, 1);
        assert_eq!(ech.pivot_columns, vec![1]);
        assert_eq!(ech.pivots, vec![e]);
    }

    #[test]
    fn symbolic_cancellation_detected() {
        let t = SymbolTable::for_model(&["x", "y"], &[]).unwrap();
        let r = |s: &str| parse_expr(s, &t).unwrap().to_ratfun().unwrap();
        let m = ExprMatrix::from_rows(vec![vec![r("x"), r("y")], vec![r("x^2"), r("x*y")]]).unwrap();
        assert_eq!(m.rank(), 1);
        assert!(ExprMatrix::from_rows(vec![vec![q(1)], vec![q(1), q(2)]]).is_err());
    }
}
