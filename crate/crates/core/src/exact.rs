//! Exact recovery for small `n` by linear programming.
//!
//! Given the exact Chow vector of an LTF, the bounded functions with that
//! Chow vector form a single point, the LTF itself, so a feasibility LP
//! over the `2^n` table entries recovers the truth table. A second LP finds
//! separating weights for a Boolean table.

use thiserror::Error;

use crate::chow::{chow_of_table, ChowVector};
use crate::func::{FuncError, Ltf, TruthTable};
use crate::lp::{LpError, LpProblem};
use crate::rng::coord;

/// Default largest `n` for the exact LPs.
pub const DEFAULT_LP_CAP: usize = 10;

/// Distance to `±1` below which an LP entry is snapped.
pub const SNAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("n = {n} exceeds the LP cap {cap}")]
    ExceedsCap { n: usize, cap: usize },
    #[error("no bounded function has this Chow vector")]
    Infeasible,
    #[error("LP solution is not Boolean (entry {max_deviation:.3e} away from ±1)")]
    NonIntegral { max_deviation: f64 },
    #[error("table is not linearly separable")]
    NotSeparable,
    #[error("table must be Boolean")]
    NotBoolean,
    #[error("recovered weights do not reproduce the table")]
    Numerical,
    #[error(transparent)]
    Lp(LpError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

fn check_cap(n: usize, cap: usize) -> Result<(), ExactError> {
    if n > cap {
        Err(ExactError::ExceedsCap { n, cap })
    } else {
        Ok(())
    }
}

/// Recovers the truth table with the given exact Chow vector.
pub fn solve_exact_chow(alpha: &ChowVector) -> Result<TruthTable, ExactError> {
    solve_exact_chow_with(alpha, DEFAULT_LP_CAP)
}

pub fn solve_exact_chow_with(alpha: &ChowVector, lp_cap: usize) -> Result<TruthTable, ExactError> {
    let n = alpha.n();
    check_cap(n, lp_cap)?;
    let size = 1usize << n;
    // Σ_x g(x)·x_i = 2^n·α_i, with x_0 ≡ 1
    let rows: Vec<Vec<f64>> = (0..=n)
        .map(|i| {
            (0..size as u64)
                .map(|idx| if i == 0 { 1.0 } else { coord(idx, n, i) as f64 })
                .collect()
        })
        .collect();
    let rhs = alpha.values().iter().map(|a| a * size as f64).collect();
    let lp = LpProblem::feasibility(rows, rhs, vec![-1.0; size], vec![1.0; size]);
    let sol = match lp.solve() {
        Ok(s) => s,
        Err(LpError::Infeasible) => return Err(ExactError::Infeasible),
        Err(e) => return Err(ExactError::Lp(e)),
    };
    let max_deviation = sol
        .x
        .iter()
        .map(|v| (v.abs() - 1.0).abs())
        .fold(0.0, f64::max);
    if max_deviation > SNAP_TOL {
        return Err(ExactError::NonIntegral { max_deviation });
    }
    let values = sol
        .x
        .iter()
        .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    Ok(TruthTable::new(n, values)?)
}

/// Finds `(w, θ)` with `f(x)·(w·x - θ) >= 1` on every point.
///
/// Solved through the dual `max Σ y_x` s.t. `Σ y_x f(x)(x, -1) = 0`,
/// `y >= 0`: it is unbounded exactly when no separator exists, and at the
/// optimum the negated simplex multipliers are a separator.
pub fn recover_weights(table: &TruthTable) -> Result<Ltf, ExactError> {
    recover_weights_with(table, DEFAULT_LP_CAP)
}

pub fn recover_weights_with(table: &TruthTable, lp_cap: usize) -> Result<Ltf, ExactError> {
    let n = table.n();
    check_cap(n, lp_cap)?;
    if !table.is_boolean() {
        return Err(ExactError::NotBoolean);
    }
    let size = 1usize << n;
    let fv = table.values();
    let rows: Vec<Vec<f64>> = (0..=n)
        .map(|i| {
            (0..size)
                .map(|idx| {
                    let xi = if i < n {
                        coord(idx as u64, n, i + 1) as f64
                    } else {
                        -1.0
                    };
                    fv[idx] * xi
                })
                .collect()
        })
        .collect();
    let lp = LpProblem {
        rows,
        rhs: vec![0.0; n + 1],
        lower: vec![0.0; size],
        upper: vec![f64::INFINITY; size],
        cost: vec![-1.0; size],
    };
    let sol = match lp.solve() {
        Ok(s) => s,
        Err(LpError::Unbounded) => return Err(ExactError::NotSeparable),
        Err(e) => return Err(ExactError::Lp(e)),
    };
    let z: Vec<f64> = sol.duals.iter().map(|p| -p).collect();
    let ltf = Ltf::new(z[..n].to_vec(), z[n])?;
    if ltf.tabulate()? != *table {
        return Err(ExactError::Numerical);
    }
    Ok(ltf)
}

/// Checks that the LP recovers `f` from its own Chow vector.
pub fn verify_chow_uniqueness(f: &Ltf) -> Result<bool, ExactError> {
    check_cap(f.n(), DEFAULT_LP_CAP)?;
    let table = f.tabulate()?;
    let recovered = solve_exact_chow(&chow_of_table(&table))?;
    Ok(recovered == table)
}
