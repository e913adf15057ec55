//! Dense bounded-variable primal simplex.
//!
//! Solves `min c·x` subject to `A x = b` and `l <= x <= u` (upper bounds
//! may be infinite, lower bounds must be finite). Two phases with one
//! artificial per row; pivots follow Bland's rule so degenerate problems
//! terminate and every run takes the same path.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("objective is unbounded")]
    Unbounded,
    #[error("iteration limit reached")]
    IterationLimit,
}

/// `min cost·x` s.t. `rows·x = rhs`, `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Simplex multipliers `π` of the equality rows (`c_B B⁻¹`).
    pub duals: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LpProblem {
    /// Feasibility problem (zero cost) with box bounds.
    pub fn feasibility(
        rows: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Self {
        let cost = vec![0.0; lower.len()];
        Self {
            rows,
            rhs,
            lower,
            upper,
            cost,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let nv = self.num_vars();
        if self.lower.len() != nv || self.upper.len() != nv {
            return Err(LpError::Malformed("bound vectors differ in length".into()));
        }
        if self.rows.len() != self.rhs.len() {
            return Err(LpError::Malformed(
                "row count differs from rhs length".into(),
            ));
        }
        if self.rows.iter().any(|r| r.len() != nv) {
            return Err(LpError::Malformed(
                "row length differs from variable count".into(),
            ));
        }
        let finite = |v: &f64| v.is_finite();
        if !self.rows.iter().flatten().all(finite)
            || !self.rhs.iter().all(finite)
            || !self.cost.iter().all(finite)
            || !self.lower.iter().all(finite)
        {
            return Err(LpError::Malformed("coefficients must be finite".into()));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(l, u)| l.is_nan() || u.is_nan() || u < l)
        {
            return Err(LpError::Malformed("empty variable range".into()));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.check()?;
        Tableau::new(self).run()
    }
}

struct Tableau {
    m: usize,
    nv: usize,
    /// `B⁻¹ [A | I]`, row major, `m × (nv + m)`.
    t: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    /// Shifted ranges `u - l`; artificials are `[0, ∞)`.
    range: Vec<f64>,
    x_basic: Vec<f64>,
    row_sign: Vec<f64>,
    lower: Vec<f64>,
    cost: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
}

enum Step {
    Optimal,
    Moved,
}

impl Tableau {
    fn new(p: &LpProblem) -> Self {
        let m = p.rows.len();
        let nv = p.num_vars();
        let width = nv + m;
        let mut t = vec![0.0; m * width];
        let mut x_basic = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for (i, row) in p.rows.iter().enumerate() {
            let shifted = p.rhs[i] - row.iter().zip(&p.lower).map(|(a, l)| a * l).sum::<f64>();
            let s = if shifted < 0.0 { -1.0 } else { 1.0 };
            for (j, a) in row.iter().enumerate() {
                t[i * width + j] = s * a;
            }
            t[i * width + nv + i] = 1.0;
            x_basic.push(s * shifted);
            row_sign.push(s);
        }
        let mut range: Vec<f64> = p.lower.iter().zip(&p.upper).map(|(l, u)| u - l).collect();
        range.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut is_basic = vec![false; width];
        is_basic[nv..].iter_mut().for_each(|b| *b = true);
        Self {
            m,
            nv,
            t,
            basis: (nv..width).collect(),
            is_basic,
            at_upper: vec![false; width],
            range,
            x_basic,
            row_sign,
            lower: p.lower.clone(),
            cost: p.cost.clone(),
            pivots: 0,
            max_pivots: 100 * width + 1000,
        }
    }

    fn width(&self) -> usize {
        self.nv + self.m
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width() + j]
    }

    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let w = self.width();
        let mut d = c.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != 0.0 {
                let row = &self.t[i * w..(i + 1) * w];
                for (dj, &tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    /// One Bland step over columns `0..limit`.
    fn step(&mut self, c: &[f64], limit: usize) -> Result<Step, LpError> {
        let d = self.reduced_costs(c);
        let entering = (0..limit).find(|&j| {
            !self.is_basic[j]
                && ((!self.at_upper[j] && d[j] < -COST_TOL)
                    || (self.at_upper[j] && d[j] > COST_TOL))
        });
        let Some(j) = entering else {
            return Ok(Step::Optimal);
        };
        let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

        let mut best: Option<(f64, usize, bool)> = None;
        for i in 0..self.m {
            let a = dir * self.at(i, j);
            let (limit_i, to_upper) = if a > PIVOT_TOL {
                (self.x_basic[i].max(0.0) / a, false)
            } else if a < -PIVOT_TOL && self.range[self.basis[i]].is_finite() {
                (
                    (self.range[self.basis[i]] - self.x_basic[i]).max(0.0) / -a,
                    true,
                )
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((lim, r, _)) => {
                    limit_i < lim || (limit_i == lim && self.basis[i] < self.basis[r])
                }
            };
            if better {
                best = Some((limit_i, i, to_upper));
            }
        }

        let own = self.range[j];
        match best {
            None if own.is_infinite() => Err(LpError::Unbounded),
            Some((lim, _, _)) if own <= lim => {
                self.flip(j, dir, own);
                Ok(Step::Moved)
            }
            None => {
                self.flip(j, dir, own);
                Ok(Step::Moved)
            }
            Some((lim, r, to_upper)) => {
                self.pivot(r, j, dir, lim, to_upper);
                Ok(Step::Moved)
            }
        }
    }

    fn flip(&mut self, j: usize, dir: f64, amount: f64) {
        for i in 0..self.m {
            let tij = self.at(i, j);
            self.x_basic[i] -= dir * amount * tij;
        }
        self.at_upper[j] = !self.at_upper[j];
        self.pivots += 1;
    }

    fn pivot(&mut self, r: usize, j: usize, dir: f64, theta: f64, leave_upper: bool) {
        let w = self.width();
        for i in 0..self.m {
            let tij = self.at(i, j);
            self.x_basic[i] -= dir * theta * tij;
        }
        let start = if self.at_upper[j] { self.range[j] } else { 0.0 };
        let leaving = self.basis[r];
        self.x_basic[r] = start + dir * theta;

        let piv = self.at(r, j);
        for k in 0..w {
            self.t[r * w + k] /= piv;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.at(i, j);
            if factor != 0.0 {
                for k in 0..w {
                    let v = self.t[r * w + k];
                    self.t[i * w + k] -= factor * v;
                }
            }
        }
        self.basis[r] = j;
        self.is_basic[j] = true;
        self.at_upper[j] = false;
        self.is_basic[leaving] = false;
        self.at_upper[leaving] = leave_upper;
        self.pivots += 1;
    }

    fn optimize(&mut self, c: &[f64], limit: usize) -> Result<(), LpError> {
        loop {
            if self.pivots > self.max_pivots {
                return Err(LpError::IterationLimit);
            }
            if let Step::Optimal = self.step(c, limit)? {
                return Ok(());
            }
        }
    }

    fn run(mut self) -> Result<LpSolution, LpError> {
        let (nv, w) = (self.nv, self.width());
        let mut phase1 = vec![0.0; w];
        phase1[nv..].iter_mut().for_each(|c| *c = 1.0);
        self.optimize(&phase1, w)?;
        let scale = 1.0 + self.x_basic.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.x_basic)
            .filter(|(&b, _)| b >= nv)
            .map(|(_, v)| v.abs())
            .sum();
        if infeasibility > FEAS_TOL * scale {
            return Err(LpError::Infeasible);
        }

        // Move zero-level artificials out of the basis where a real column allows.
        for r in 0..self.m {
            if self.basis[r] < nv {
                continue;
            }
            let col = (0..nv).find(|&j| !self.is_basic[j] && self.at(r, j).abs() > PIVOT_TOL);
            if let Some(j) = col {
                let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
                self.pivot(r, j, dir, 0.0, false);
            }
        }

        let mut phase2 = vec![0.0; w];
        phase2[..nv].copy_from_slice(&self.cost);
        self.optimize(&phase2, nv)?;

        let mut x: Vec<f64> = (0..nv)
            .map(|j| if self.at_upper[j] { self.range[j] } else { 0.0 })
            .collect();
        for (&b, &v) in self.basis.iter().zip(&self.x_basic) {
            if b < nv {
                x[b] = v;
            }
        }
        for (xj, l) in x.iter_mut().zip(&self.lower) {
            *xj += l;
        }
        let duals = (0..self.m)
            .map(|i| {
                let s: f64 = self
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(k, &b)| phase2[b] * self.at(k, nv + i))
                    .sum();
                s * self.row_sign[i]
            })
            .collect();
        let objective = x.iter().zip(&self.cost).map(|(a, c)| a * c).sum();
        Ok(LpSolution {
            x,
            duals,
            objective,
            pivots: self.pivots,
        })
    }
}
