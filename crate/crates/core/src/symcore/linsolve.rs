//! Linear systems with rational-function coefficients.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::poly::Atom;
use super::ratfun::RatFun;
use super::symbol::Symbol;
use super::SymError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinearSolution {
    Unique(BTreeMap<Symbol, RatFun>),
    /// The coefficient matrix is singular. `solved` expresses the pivot
    /// unknowns in terms of the others; `free` lists the unknowns left
    /// undetermined; `equations` are the indices of the dependent rows.
    Indeterminate { solved: BTreeMap<Symbol, RatFun>, free: Vec<Symbol>, equations: Vec<usize> },
}

/// Splits `e` into coefficients of `unknowns` and a remainder, failing if
/// `e` is not affine in them.
fn affine_parts(e: &RatFun, index: usize, unknowns: &[Symbol]) -> Result<(Vec<RatFun>, RatFun), SymError> {
    let den = RatFun::from_poly(e.denom().clone());
    let mut rest = e.numer().clone();
    let mut coeffs = Vec::with_capacity(unknowns.len());
    for u in unknowns {
        let nonlinear = || SymError::Nonlinear { equation: index, unknown: u.name().to_string() };
        if e.denom().contains_symbol(u) {
            return Err(nonlinear());
        }
        let atom = Atom::Sym(u.clone());
        if rest.degree_in(&atom) > 1 || rest.atoms().iter().any(|a| a.is_func() && a.contains_symbol(u)) {
            return Err(nonlinear());
        }
        let c = rest.coefficient_in(&atom, 1);
        rest = rest.coefficient_in(&atom, 0);
        if unknowns.iter().any(|v| c.contains_symbol(v)) {
            return Err(nonlinear());
        }
        coeffs.push(RatFun::from_poly(c).div(&den)?);
    }
    Ok((coeffs, RatFun::from_poly(rest).div(&den)?))
}

/// Gauss-Jordan elimination over rational functions. Each equation is
/// understood as `= 0`.
pub fn solve_linear_system(equations: &[RatFun], unknowns: &[Symbol]) -> Result<LinearSolution, SymError> {
    let n = unknowns.len();
    // rows: [coefficients..., -constant], original index
    let mut rows: Vec<(Vec<RatFun>, usize)> = Vec::with_capacity(equations.len());
    for (i, e) in equations.iter().enumerate() {
        let (mut coeffs, c) = affine_parts(e, i, unknowns)?;
        coeffs.push(c.neg());
        rows.push((coeffs, i));
    }
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&k| !rows[k].0[col].zero_test().is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r].0[col].recip()?;
        for v in rows[r].0.iter_mut() {
            *v = v.mul(&inv);
        }
        let pivot_row = rows[r].0.clone();
        for (k, (row, _)) in rows.iter_mut().enumerate() {
            if k == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v = v.sub(&f.mul(pv));
            }
        }
        pivots.push((r, col));
        r += 1;
    }
    let mut dependent = Vec::new();
    for (row, orig) in &rows[r..] {
        if !row[n].zero_test().is_zero() {
            return Err(SymError::Inconsistent(*orig));
        }
        dependent.push(*orig);
    }
    let mut solved = BTreeMap::new();
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free: Vec<Symbol> =
        (0..n).filter(|c| !pivot_cols.contains(c)).map(|c| unknowns[c].clone()).collect();
    for &(row, col) in &pivots {
        let mut value = rows[row].0[n].clone();
        for f in &free {
            let fc = unknowns.iter().position(|u| u == f).expect("free unknown listed");
            let k = &rows[row].0[fc];
            if !k.is_zero() {
                value = value.sub(&k.mul(&RatFun::symbol(f)));
            }
        }
        solved.insert(unknowns[col].clone(), value);
    }
    if free.is_empty() {
        Ok(LinearSolution::Unique(solved))
    } else {
        dependent.sort_unstable();
        Ok(LinearSolution::Indeterminate { solved, free, equations: dependent })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse::parse_expr;
    use crate::symcore::symbol::SymbolTable;
    use alloc::vec;

    fn rf(s: &str, t: &SymbolTable) -> RatFun {
        parse_expr(s, t).unwrap().to_ratfun().unwrap()
    }

    #[test]
    fn frw_velocity() {
        let t = SymbolTable::for_model(&["N", "a"], &[]).unwrap();
        let da = t.lookup("da").unwrap().clone();
        let sol = solve_linear_system(&[rf("p_a + 6*a*da/N", &t)], core::slice::from_ref(&da)).unwrap();
        let LinearSolution::Unique(m) = sol else { panic!() };
        assert_eq!(m[&da], rf("-N*p_a/(6*a)", &t));
    }

    #[test]
    fn inconsistent_and_nonlinear() {
        let t = SymbolTable::for_model(&["x"], &[]).unwrap();
        let dx = t.lookup("dx").unwrap().clone();
        let eqs = [rf("p_x - dx", &t), rf("p_x - dx - 1", &t)];
        assert_eq!(solve_linear_system(&eqs, core::slice::from_ref(&dx)), Err(SymError::Inconsistent(1)));
        assert!(matches!(
            solve_linear_system(&[rf("dx^2 - p_x", &t)], core::slice::from_ref(&dx)),
            Err(SymError::Nonlinear { equation: 0, .. })
        ));
        assert!(matches!(
            solve_linear_system(&[rf("1/dx - p_x", &t)], &[dx]),
            Err(SymError::Nonlinear { .. })
        ));
    }

    #[test]
    fn underdetermined_reports_free_unknowns() {
        let t = SymbolTable::for_model(&["x", "y"], &[]).unwrap();
        let dx = t.lookup("dx").unwrap().clone();
        let dy = t.lookup("dy").unwrap().clone();
        let sol = solve_linear_system(&[rf("dx + dy - p_x", &t)], &[dx.clone(), dy.clone()]).unwrap();
        let LinearSolution::Indeterminate { solved, free, .. } = sol else { panic!() };
        assert_eq!(free, vec![dy]);
        assert_eq!(solved[&dx], rf("p_x - dy", &t));
    }
}
