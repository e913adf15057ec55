//! Boosting-style reconstruction of a linear bounded function from a
//! target Chow vector.
//!
//! Starting from `g'_0 ≡ 0`, each round measures the Chow vector of the
//! current hypothesis `g_t = P_1(g'_t)`, snaps every coordinate onto the
//! grid `α_i + (ε/(2√(n+1)))·Z`, and stops once the snapped residual has
//! norm at most `4ε`. Otherwise half the residual is added to the affine
//! form. Grid offsets are kept as integers, so the hypothesis is always
//! `P_1(κ·(v_0 + Σ v_i x_i))` with `κ = ε/(4√(n+1))` and integer `v`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chow::{chow_estimate, chow_sums_in_place, ChowError, ChowVector, EstimatorConfig};
use crate::func::{affine_integer_table, enumeration_cap, project_p1, FuncError, Lbf, TruthTable};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChowMode {
    /// Chow vectors of the hypothesis by enumeration (falls back to
    /// estimation above the enumeration cap).
    Exact,
    /// Fresh Monte Carlo estimate every round.
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructParams {
    pub eps: f64,
    pub delta: f64,
    pub mode: ChowMode,
    pub max_iters: Option<u64>,
    pub seed: u64,
}

impl ReconstructParams {
    pub fn exact(eps: f64) -> Self {
        Self {
            eps,
            delta: 0.1,
            mode: ChowMode::Exact,
            max_iters: None,
            seed: 0,
        }
    }

    /// `⌈1/(2ε²)⌉`, unless overridden.
    pub fn iteration_cap(&self) -> u64 {
        self.max_iters.unwrap_or_else(|| default_cap(self.eps))
    }

    fn validate(&self) -> Result<(), ReconstructError> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(ReconstructError::InvalidParams(
                "eps must be positive".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ReconstructError::InvalidParams(
                "delta must lie in (0, 1)".into(),
            ));
        }
        if self.max_iters == Some(0) {
            return Err(ReconstructError::InvalidParams(
                "max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `⌈1/(2ε²)⌉`, ignoring floating noise below `1e-9`.
pub fn default_cap(eps: f64) -> u64 {
    (1.0 / (2.0 * eps * eps) - 1e-9).ceil().max(1.0) as u64
}

/// `κ = ε/(4√(n+1))`.
pub fn weight_unit(eps: f64, n: usize) -> f64 {
    eps / (4.0 * ((n + 1) as f64).sqrt())
}

/// Grid spacing `ε/(2√(n+1))` for snapped Chow estimates.
pub fn grid_unit(eps: f64, n: usize) -> f64 {
    eps / (2.0 * ((n + 1) as f64).sqrt())
}

/// Integer `m` minimising `|β - (α - m·u)|`, ties towards the larger `m`.
pub fn grid_steps(alpha: f64, beta: f64, u: f64) -> i64 {
    ((alpha - beta) / u + 0.5).floor() as i64
}

/// The grid value `α - m·u` closest to `β`.
pub fn round_to_grid(alpha: f64, beta: f64, u: f64) -> f64 {
    alpha - grid_steps(alpha, beta, u) as f64 * u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Rho,
    Cap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: u64,
    pub rho: f64,
    pub g_tilde: ChowVector,
    /// `E(t)`, when a target table was supplied in exact mode.
    pub potential: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructTrace {
    pub records: Vec<IterationRecord>,
    pub kappa: f64,
    pub v: Vec<i64>,
    /// Number of updates applied to the affine form.
    pub iterations: u64,
    pub stop_reason: StopReason,
}

/// On-disk form of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceJson {
    pub iterations: u64,
    pub stop_reason: StopReason,
    pub rho_history: Vec<f64>,
    pub kappa: f64,
    pub v: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential_history: Option<Vec<f64>>,
}

impl ReconstructTrace {
    pub fn rho_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rho).collect()
    }

    pub fn potential_history(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.potential).collect()
    }

    pub fn to_json(&self) -> TraceJson {
        TraceJson {
            iterations: self.iterations,
            stop_reason: self.stop_reason,
            rho_history: self.rho_history(),
            kappa: self.kappa,
            v: self.v.clone(),
            potential_history: self.potential_history(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub lbf: Lbf,
    pub trace: ReconstructTrace,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no stop after {} iterations", .0.trace.iterations)]
    CapExceeded(Box<Reconstruction>),
    #[error("non-finite or overflowing value at iteration {0}")]
    NonFinite(u64),
    #[error(transparent)]
    Chow(#[from] ChowError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

/// `E[(f - g)(f - 2g' + g)]` where `g = P_1(g')`.
pub fn potential(f: &TruthTable, g_prime: &[f64]) -> Result<f64, FuncError> {
    if g_prime.len() != f.values().len() {
        return Err(FuncError::DimensionMismatch {
            expected: f.values().len(),
            got: g_prime.len(),
        });
    }
    let total: f64 = f
        .values()
        .iter()
        .zip(g_prime)
        .map(|(&fx, &gp)| {
            let g = project_p1(gp);
            (fx - g) * (fx - 2.0 * gp + g)
        })
        .sum();
    Ok(total / f.values().len() as f64)
}

/// Potential of an LBF hypothesis against `f`.
pub fn lbf_potential(f: &TruthTable, g: &Lbf) -> Result<f64, FuncError> {
    if f.n() != g.n() {
        return Err(FuncError::DimensionMismatch {
            expected: f.n(),
            got: g.n(),
        });
    }
    let g_prime: Vec<f64> = g
        .integer_form_table()?
        .into_iter()
        .map(|l| g.kappa() * l as f64)
        .collect();
    potential(f, &g_prime)
}

/// Per-round Chow measurement of the current hypothesis.
struct Measurer<'a> {
    n: usize,
    enumerate: bool,
    target: Option<&'a TruthTable>,
    buf: Vec<f64>,
    sums: Vec<f64>,
}

impl Measurer<'_> {
    fn measure(
        &mut self,
        g: &Lbf,
        t: u64,
        params: &ReconstructParams,
        cap: u64,
    ) -> Result<(Vec<f64>, Option<f64>), ReconstructError> {
        let n = self.n;
        if !self.enumerate {
            let cfg = EstimatorConfig::new(
                weight_unit(params.eps, n),
                params.delta / cap as f64,
                derive_seed(params.seed, t),
            );
            let beta = chow_estimate(&g.clone().into(), n, &cfg)?;
            return Ok((beta.values().to_vec(), None));
        }
        let forms = affine_integer_table(g.v());
        let kappa = g.kappa();
        self.buf.clear();
        self.buf
            .extend(forms.iter().map(|&l| project_p1(kappa * l as f64)));
        let pot = match self.target {
            Some(f) => {
                let g_prime: Vec<f64> = forms.iter().map(|&l| kappa * l as f64).collect();
                Some(potential(f, &g_prime)?)
            }
            None => None,
        };
        chow_sums_in_place(&mut self.buf, n, &mut self.sums);
        let scale = 1.0 / (1u64 << n) as f64;
        Ok((self.sums.iter().map(|s| s * scale).collect(), pot))
    }
}

/// Reconstructs an LBF whose Chow vector is close to `alpha`.
///
/// `target`, when given in exact mode, is used only to record the
/// potential `E(t)` in the trace. If no stop happens within the iteration
/// cap the partial result is returned inside
/// [`ReconstructError::CapExceeded`].
pub fn chow_reconstruct(
    alpha: &ChowVector,
    params: &ReconstructParams,
    target: Option<&TruthTable>,
) -> Result<Reconstruction, ReconstructError> {
    params.validate()?;
    let n = alpha.n();
    if let Some(f) = target {
        if f.n() != n {
            return Err(FuncError::DimensionMismatch {
                expected: n,
                got: f.n(),
            }
            .into());
        }
    }
    let enumerate = params.mode == ChowMode::Exact && n <= enumeration_cap();
    let cap = params.iteration_cap();
    let kappa = weight_unit(params.eps, n);
    let u = grid_unit(params.eps, n);
    let stop_at = 4.0 * params.eps;

    let mut g = Lbf::zero(n, kappa);
    let mut measurer = Measurer {
        n,
        enumerate,
        target: if enumerate { target } else { None },
        buf: Vec::new(),
        sums: vec![0.0; n + 1],
    };
    let mut records = Vec::new();
    let mut steps = vec![0i64; n + 1];
    let mut t = 0u64;
    loop {
        let (beta, pot) = measurer.measure(&g, t, params, cap)?;
        let mut sq = 0.0f64;
        for ((m, &a), &b) in steps.iter_mut().zip(alpha.values()).zip(&beta) {
            *m = grid_steps(a, b, u);
            sq += (*m as f64) * (*m as f64);
        }
        let rho = u * sq.sqrt();
        if !rho.is_finite() {
            return Err(ReconstructError::NonFinite(t));
        }
        let g_tilde = alpha
            .values()
            .iter()
            .zip(&steps)
            .map(|(&a, &m)| a - m as f64 * u)
            .collect();
        records.push(IterationRecord {
            t,
            rho,
            g_tilde: ChowVector::new(g_tilde)?,
            potential: pot,
        });
        let stop = if rho <= stop_at {
            Some(StopReason::Rho)
        } else if t == cap {
            Some(StopReason::Cap)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            let trace = ReconstructTrace {
                records,
                kappa,
                v: g.v().to_vec(),
                iterations: t,
                stop_reason,
            };
            let out = Reconstruction { lbf: g, trace };
            return match stop_reason {
                StopReason::Rho => Ok(out),
                StopReason::Cap => Err(ReconstructError::CapExceeded(Box::new(out))),
            };
        }
        // (α_i - g̃_i)/2 = m_i·u/2 = m_i·κ
        for (vi, &m) in g.v_mut().iter_mut().zip(&steps) {
            *vi = vi.checked_add(m).ok_or(ReconstructError::NonFinite(t))?;
        }
        t += 1;
    }
}
