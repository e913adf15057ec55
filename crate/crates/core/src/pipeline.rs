//! Instance generation and end-to-end runs with JSON reports.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chow::{
    chow_distance, chow_estimate, chow_of_table, dist_l1, ChowError, ChowVector, EstimatorConfig,
};
use crate::exact::ExactError;
use crate::func::{enumeration_cap, lbf_to_ltf, FuncError, Lbf, Ltf};
use crate::learners::LearnError;
use crate::lp::LpError;
use crate::reconstruct::{
    chow_reconstruct, ChowMode, ReconstructError, ReconstructParams, ReconstructTrace,
};
use crate::rng::{derive_seed, stream};
use crate::structural::StructuralError;

/// Failure probability used when a pipeline estimates Chow vectors.
pub const PIPELINE_DELTA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error(transparent)]
    Chow(#[from] ChowError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Structural(#[from] StructuralError),
}

impl PipelineError {
    /// Process exit code: 2 for bad input, 3 for algorithmic failure.
    pub fn exit_code(&self) -> i32 {
        use PipelineError as P;
        match self {
            P::Reconstruct(ReconstructError::CapExceeded(_) | ReconstructError::NonFinite(_))
            | P::Learn(LearnError::Reconstruct(
                ReconstructError::CapExceeded(_) | ReconstructError::NonFinite(_),
            ))
            | P::Exact(
                ExactError::Infeasible
                | ExactError::NonIntegral { .. }
                | ExactError::NotSeparable
                | ExactError::Numerical
                | ExactError::Lp(LpError::IterationLimit | LpError::Unbounded | LpError::Infeasible),
            ) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "model")]
pub enum WeightModel {
    /// i.i.d. standard normal weights.
    Gaussian,
    /// Positive integer weights summing to exactly `w`.
    Integer { w: u64 },
}

/// Random LTF with threshold 0, deterministic in `seed`.
///
/// The integer model starts from all-ones weights (majority) and hands out
/// the remaining `W - n` units one at a time to uniform coordinates.
pub fn random_ltf(n: usize, model: WeightModel, seed: u64) -> Result<Ltf, PipelineError> {
    if n == 0 {
        return Err(PipelineError::InvalidParams("n must be at least 1".into()));
    }
    let mut rng = stream(seed, 0);
    let weights = match model {
        WeightModel::Gaussian => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
        WeightModel::Integer { w } => {
            if w < n as u64 {
                return Err(PipelineError::InvalidParams(format!(
                    "integer model needs W >= n (W = {w}, n = {n})"
                )));
            }
            let mut weights = vec![1.0; n];
            for _ in n as u64..w {
                weights[rng.gen_range(0..n)] += 1.0;
            }
            weights
        }
    };
    Ok(Ltf::new(weights, 0.0)?)
}

/// Summary metrics; compared byte for byte across reruns.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dchow_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_norm: Option<f64>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub params: serde_json::Value,
    pub seed: u64,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

impl RunReport {
    pub fn new(command: &str, params: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.into(),
            params,
            seed,
            timings: BTreeMap::new(),
            outputs: Vec::new(),
            summary: Summary::default(),
            result: None,
        }
    }

    /// Runs `f`, recording its wall-clock time under `phase`.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings
            .insert(phase.into(), start.elapsed().as_secs_f64());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub ltf: Ltf,
    pub lbf: Lbf,
    pub alpha: ChowVector,
    pub trace: ReconstructTrace,
    pub report: RunReport,
}

/// Chow vector of `f` (exact or estimated), reconstruction, and rounding
/// to an integer-weight LTF.
pub fn approx_weights(
    f: &Ltf,
    eps: f64,
    mode: ChowMode,
    seed: u64,
) -> Result<Approximation, PipelineError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(PipelineError::InvalidParams("eps must be positive".into()));
    }
    let n = f.n();
    if mode == ChowMode::Exact && n > enumeration_cap() {
        return Err(FuncError::ExceedsCap {
            n,
            cap: enumeration_cap(),
        }
        .into());
    }
    let mut report = RunReport::new(
        "approx",
        serde_json::json!({ "n": n, "eps": eps, "mode": mode }),
        seed,
    );
    let exact_table = if n <= enumeration_cap() {
        Some(f.tabulate()?)
    } else {
        None
    };
    let alpha = report.time("chow", || -> Result<ChowVector, PipelineError> {
        Ok(match (mode, &exact_table) {
            (ChowMode::Exact, Some(t)) => chow_of_table(t),
            _ => {
                let cfg = EstimatorConfig::new(
                    eps / ((n + 1) as f64).sqrt(),
                    PIPELINE_DELTA / 2.0,
                    derive_seed(seed, 0),
                );
                chow_estimate(&f.clone().into(), n, &cfg)?
            }
        })
    })?;
    let params = ReconstructParams {
        eps,
        delta: PIPELINE_DELTA / 2.0,
        mode,
        max_iters: None,
        seed: derive_seed(seed, 1),
    };
    let rec = report.time("reconstruct", || {
        chow_reconstruct(&alpha, &params, exact_table.as_ref())
    })?;
    let conv = lbf_to_ltf(&rec.lbf);

    let s = &mut report.summary;
    s.iterations = Some(rec.trace.iterations);
    s.v_norm = Some(norm_i64(rec.lbf.v()));
    s.extra.insert(
        "weight_sq_sum".into(),
        rec.lbf.v()[1..]
            .iter()
            .map(|&v| (v as f64) * (v as f64))
            .sum(),
    );
    s.extra.insert("kappa".into(), rec.lbf.kappa());
    if conv.degenerate {
        s.extra.insert("degenerate".into(), 1.0);
    }
    if let Some(t) = &exact_table {
        let chi_f = chow_of_table(t);
        let g = rec.lbf.tabulate()?;
        let star = conv.ltf.tabulate()?;
        s.dchow_final = Some(chow_distance(&chi_f, &chow_of_table(&g))?);
        s.dist_final = Some(dist_l1(t, &star)?);
        s.extra.insert("dist_lbf".into(), dist_l1(t, &g)?);
    }
    Ok(Approximation {
        ltf: conv.ltf,
        lbf: rec.lbf,
        alpha,
        trace: rec.trace,
        report,
    })
}

pub fn norm_i64(v: &[i64]) -> f64 {
    v.iter()
        .map(|&x| (x as f64) * (x as f64))
        .sum::<f64>()
        .sqrt()
}

/// Flip percentages cycled through by [`probe_pairs`].
pub const PROBE_FLIPS: [u32; 3] = [1, 5, 20];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub pair: usize,
    pub n: usize,
    pub flip_percent: u32,
    pub dchow: f64,
    pub dist: f64,
    /// `dchow <= 2·sqrt(dist) + 1e-9`.
    pub envelope_ok: bool,
}

/// `(dchow, dist)` for random pairs: a Gaussian LTF `f` and a copy of `f`
/// with a fixed share of its table negated.
pub fn probe_pairs(pairs: usize, n: usize, seed: u64) -> Result<Vec<ProbeRow>, PipelineError> {
    if n == 0 || n > enumeration_cap() {
        return Err(PipelineError::InvalidParams(format!(
            "probe needs 1 <= n <= {}",
            enumeration_cap()
        )));
    }
    (0..pairs)
        .map(|k| {
            let pair_seed = derive_seed(seed, k as u64);
            let f = random_ltf(n, WeightModel::Gaussian, pair_seed)?;
            let t = f.tabulate()?;
            let pct = PROBE_FLIPS[k % PROBE_FLIPS.len()];
            let size = 1usize << n;
            let count = ((size as f64 * pct as f64 / 100.0).round() as usize).clamp(1, size);
            let flips = sample(&mut stream(pair_seed, 1), size, count).into_vec();
            let g = t.with_flips(&flips);
            let (dchow, dist) = crate::structural::dchow_vs_dist_probe(&f, &g)?;
            Ok(ProbeRow {
                pair: k,
                n,
                flip_percent: pct,
                dchow,
                dist,
                envelope_ok: dchow <= 2.0 * dist.sqrt() + 1e-9,
            })
        })
        .collect()
}
