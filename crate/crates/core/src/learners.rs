//! Learning halfspaces from Chow estimates.
//!
//! [`learn_rfa`] sees one chosen coordinate of each example plus its label
//! ([`RfaOracle`]); [`learn_agnostic`] sees full uniform examples whose
//! labels may be corrupted ([`ExampleOracle`]). Both feed the estimated
//! Chow vector to [`chow_reconstruct`] and take the sign of the result.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::chow::{chow_distance, chow_of_table, hoeffding_count, ChowError, ChowVector};
use crate::func::{enumeration_cap, lbf_to_ltf, tabulate, FuncError, FunctionSource, Lbf, Ltf};
use crate::reconstruct::{
    chow_reconstruct, ChowMode, ReconstructError, ReconstructParams, ReconstructTrace, TraceJson,
};
use crate::rng::{coord, derive_seed, stream, CubeSampler};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("index {i} out of range 1..={n}")]
    IndexOutOfRange { i: usize, n: usize },
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Chow(#[from] ChowError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

/// Hidden target answering `(x_i, f(x))` for a fresh uniform `x`.
pub struct RfaOracle {
    target: FunctionSource,
    table: Option<Vec<f64>>,
    sampler: CubeSampler<ChaCha8Rng>,
    point: Vec<i8>,
    queries: u64,
}

impl RfaOracle {
    pub fn new(target: FunctionSource, seed: u64) -> Result<Self, LearnError> {
        if !target.is_exact() {
            return Err(LearnError::InvalidParams(
                "RFA targets must be exact".into(),
            ));
        }
        let n = target.n();
        let table = if n <= enumeration_cap() {
            Some(tabulate(&target)?.values().to_vec())
        } else {
            None
        };
        Ok(Self {
            table,
            sampler: CubeSampler::new(stream(seed, 0), n),
            point: vec![0; n],
            target,
            queries: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    /// Number of queries answered so far.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Coordinate `i` (1-based) of a fresh uniform point and its label.
    #[inline]
    pub fn query(&mut self, i: usize) -> Result<(i8, f64), LearnError> {
        let n = self.n();
        if i == 0 || i > n {
            return Err(LearnError::IndexOutOfRange { i, n });
        }
        self.queries += 1;
        match &self.table {
            Some(t) => {
                let idx = self.sampler.next_index();
                Ok((coord(idx, n, i), t[idx as usize]))
            }
            None => {
                self.sampler.next_point(&mut self.point);
                let y = self.target.eval(&self.point)?;
                Ok((self.point[i - 1], y))
            }
        }
    }
}

/// Uniform labeled examples with independent label flips at rate `noise`.
pub struct ExampleOracle {
    target: FunctionSource,
    noise: f64,
    sampler: CubeSampler<ChaCha8Rng>,
    examples: u64,
}

impl ExampleOracle {
    pub fn new(target: FunctionSource, noise: f64, seed: u64) -> Result<Self, LearnError> {
        if !(0.0..0.5).contains(&noise) {
            return Err(LearnError::InvalidParams(
                "label noise must lie in [0, 0.5)".into(),
            ));
        }
        if !target.is_exact() {
            return Err(LearnError::InvalidParams(
                "example targets must be exact".into(),
            ));
        }
        let n = target.n();
        Ok(Self {
            target,
            noise,
            sampler: CubeSampler::new(stream(seed, 0), n),
            examples: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    pub fn examples(&self) -> u64 {
        self.examples
    }

    /// Writes a fresh uniform point into `x` and returns its label.
    pub fn draw(&mut self, x: &mut [i8]) -> f64 {
        self.sampler.next_point(x);
        self.examples += 1;
        let y = self
            .target
            .eval(x)
            .expect("dimension fixed at construction");
        if self.noise > 0.0 && self.sampler.rng_mut().gen_bool(self.noise) {
            -y
        } else {
            y
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub hypothesis: Ltf,
    pub lbf: Lbf,
    /// Set when the reconstruction ended at `v = 0`.
    pub degenerate: bool,
    /// Target accuracy `Δ` of the estimated Chow vector.
    pub chow_accuracy_used: f64,
    pub samples_consumed: u64,
    pub alpha: ChowVector,
    /// `‖α - χ_g‖` for the LBF, when `n` allows enumeration.
    pub dchow_alpha_lbf: Option<f64>,
    /// `‖α - χ_h‖` for the LTF hypothesis, when `n` allows enumeration.
    pub dchow_alpha_hypothesis: Option<f64>,
    pub trace: ReconstructTrace,
}

#[derive(Serialize)]
struct LearnResultJson<'a> {
    hypothesis: &'a Ltf,
    lbf: &'a Lbf,
    degenerate: bool,
    chow_accuracy_used: f64,
    samples_consumed: u64,
    alpha: &'a ChowVector,
    dchow_alpha_lbf: Option<f64>,
    dchow_alpha_hypothesis: Option<f64>,
    trace: TraceJson,
}

impl LearnResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(LearnResultJson {
            hypothesis: &self.hypothesis,
            lbf: &self.lbf,
            degenerate: self.degenerate,
            chow_accuracy_used: self.chow_accuracy_used,
            samples_consumed: self.samples_consumed,
            alpha: &self.alpha,
            dchow_alpha_lbf: self.dchow_alpha_lbf,
            dchow_alpha_hypothesis: self.dchow_alpha_hypothesis,
            trace: self.trace.to_json(),
        })
        .expect("plain data serializes")
    }
}

fn check_params(accuracy: f64, delta: f64) -> Result<(), LearnError> {
    if !(accuracy.is_finite() && accuracy > 0.0) {
        return Err(LearnError::InvalidParams(
            "accuracy must be positive".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LearnError::InvalidParams("delta must lie in (0, 1)".into()));
    }
    Ok(())
}

/// Queries per coordinate so the full Chow vector is `Δ`-accurate:
/// `⌈(2(n+1)/Δ²)·ln(2(n+1)/δ)⌉`.
pub fn rfa_queries_per_index(n: usize, accuracy: f64, delta: f64) -> u64 {
    let k = (n + 1) as f64;
    hoeffding_count(accuracy / k.sqrt(), delta / k)
}

fn finish(
    alpha: ChowVector,
    accuracy: f64,
    delta: f64,
    seed: u64,
    samples_consumed: u64,
) -> Result<LearnResult, LearnError> {
    let n = alpha.n();
    let params = ReconstructParams {
        eps: accuracy,
        delta,
        mode: ChowMode::Exact,
        max_iters: None,
        seed: derive_seed(seed, 1),
    };
    let rec = chow_reconstruct(&alpha, &params, None)?;
    let conv = lbf_to_ltf(&rec.lbf);
    let (dchow_alpha_lbf, dchow_alpha_hypothesis) = if n <= enumeration_cap() {
        let g = chow_of_table(&rec.lbf.tabulate()?);
        let h = chow_of_table(&conv.ltf.tabulate()?);
        (
            Some(chow_distance(&alpha, &g)?),
            Some(chow_distance(&alpha, &h)?),
        )
    } else {
        (None, None)
    };
    Ok(LearnResult {
        hypothesis: conv.ltf,
        lbf: rec.lbf,
        degenerate: conv.degenerate,
        chow_accuracy_used: accuracy,
        samples_consumed,
        alpha,
        dchow_alpha_lbf,
        dchow_alpha_hypothesis,
        trace: rec.trace,
    })
}

/// Learns from one-coordinate queries.
///
/// Every index gets the same number of queries; `f̂(0)` is the mean label
/// of the index-1 queries.
pub fn learn_rfa(
    oracle: &mut RfaOracle,
    n: usize,
    accuracy: f64,
    delta: f64,
    seed: u64,
) -> Result<LearnResult, LearnError> {
    check_params(accuracy, delta)?;
    if oracle.n() != n {
        return Err(FuncError::DimensionMismatch {
            expected: oracle.n(),
            got: n,
        }
        .into());
    }
    let m = rfa_queries_per_index(n, accuracy, delta);
    let start = oracle.queries();
    let mut values = vec![0.0f64; n + 1];
    for i in 1..=n {
        let mut corr = 0.0;
        let mut labels = 0.0;
        for _ in 0..m {
            let (xi, y) = oracle.query(i)?;
            corr += y * xi as f64;
            labels += y;
        }
        values[i] = corr / m as f64;
        if i == 1 {
            values[0] = labels / m as f64;
        }
    }
    let used = oracle.queries() - start;
    finish(ChowVector::new(values)?, accuracy, delta, seed, used)
}

/// Learns from full (possibly noisy) examples.
///
/// Chow coefficients share `⌈(2(n+1)/Δ²)·ln(2(n+1)/δ)⌉` examples, so
/// `‖α - χ‖ <= Δ` with probability `1 - δ`. `accuracy` defaults to `eps`.
pub fn learn_agnostic(
    oracle: &mut ExampleOracle,
    n: usize,
    eps: f64,
    delta: f64,
    accuracy: Option<f64>,
    seed: u64,
) -> Result<LearnResult, LearnError> {
    let accuracy = accuracy.unwrap_or(eps);
    check_params(eps, delta)?;
    check_params(accuracy, delta)?;
    if oracle.n() != n {
        return Err(FuncError::DimensionMismatch {
            expected: oracle.n(),
            got: n,
        }
        .into());
    }
    let m = rfa_queries_per_index(n, accuracy, delta);
    let start = oracle.examples();
    let mut sums = vec![0.0f64; n + 1];
    let mut x = vec![0i8; n];
    for _ in 0..m {
        let y = oracle.draw(&mut x);
        sums[0] += y;
        for (s, &xi) in sums[1..].iter_mut().zip(&x) {
            *s += y * xi as f64;
        }
    }
    let alpha = ChowVector::new(sums.iter().map(|s| s / m as f64).collect())?;
    let used = oracle.examples() - start;
    finish(alpha, accuracy, delta, seed, used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chow::dist_l1;

    #[test]
    fn rfa_query_examples() {
        let one: FunctionSource = crate::func::TruthTable::new(3, vec![1.0; 8])
            .unwrap()
            .into();
        let mut o = RfaOracle::new(one, 1).unwrap();
        for _ in 0..100 {
            assert_eq!(o.query(2).unwrap().1, 1.0);
        }
        let mut o = RfaOracle::new(Ltf::dictator(3, 1).into(), 2).unwrap();
        for _ in 0..100 {
            let (b, y) = o.query(1).unwrap();
            assert_eq!(b as f64, y);
        }
        assert_eq!(o.queries(), 100);
        assert_eq!(
            o.query(4).unwrap_err(),
            LearnError::IndexOutOfRange { i: 4, n: 3 }
        );
        assert_eq!(
            o.query(0).unwrap_err(),
            LearnError::IndexOutOfRange { i: 0, n: 3 }
        );
    }

    #[test]
    fn rfa_majority_correlation() {
        let mut o = RfaOracle::new(Ltf::majority(3).into(), 3).unwrap();
        let m = 100_000;
        let s: f64 = (0..m)
            .map(|_| {
                let (b, y) = o.query(1).unwrap();
                b as f64 * y
            })
            .sum();
        assert!((s / m as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn rfa_learns_dictator() {
        let target = Ltf::dictator(5, 1);
        let table = target.tabulate().unwrap();
        let mut exact = 0;
        for seed in 0..20 {
            let mut o = RfaOracle::new(target.clone().into(), seed).unwrap();
            let r = learn_rfa(&mut o, 5, 0.05, 0.1, seed).unwrap();
            assert_eq!(r.samples_consumed, 5 * rfa_queries_per_index(5, 0.05, 0.1));
            assert_eq!(r.samples_consumed, o.queries());
            if r.hypothesis.tabulate().unwrap() == table {
                exact += 1;
            }
        }
        assert!(exact >= 18, "{exact}");
    }

    #[test]
    fn zero_accuracy_is_rejected() {
        let mut o = RfaOracle::new(Ltf::dictator(2, 1).into(), 0).unwrap();
        assert!(matches!(
            learn_rfa(&mut o, 2, 0.0, 0.1, 0),
            Err(LearnError::InvalidParams(_))
        ));
    }

    #[test]
    fn half_noise_is_rejected() {
        assert!(matches!(
            ExampleOracle::new(Ltf::majority(3).into(), 0.5, 0),
            Err(LearnError::InvalidParams(_))
        ));
    }

    #[test]
    fn agnostic_realizable_case() {
        let f = Ltf::new(vec![2.0, 1.0, 1.0, 1.0], 0.5).unwrap();
        for seed in 0..5 {
            let mut o = ExampleOracle::new(f.clone().into(), 0.0, seed).unwrap();
            let r = learn_agnostic(&mut o, 4, 0.1, 0.1, Some(0.1), seed).unwrap();
            assert!(r.dchow_alpha_lbf.unwrap() <= 6.0 * 0.1);
            assert_eq!(r.samples_consumed, o.examples());
        }
    }

    #[test]
    fn agnostic_noisy_majority() {
        let maj = Ltf::majority(3);
        for seed in 0..5 {
            let mut o = ExampleOracle::new(maj.clone().into(), 0.05, seed).unwrap();
            let r = learn_agnostic(&mut o, 3, 0.1, 0.1, Some(0.1), seed).unwrap();
            assert!(r.dchow_alpha_lbf.unwrap() <= 0.6);
            let d = dist_l1(&maj.tabulate().unwrap(), &r.hypothesis.tabulate().unwrap()).unwrap();
            assert!(d.is_finite());
        }
    }

    #[test]
    fn noisy_labels_shrink_chow_vector() {
        let maj = Ltf::majority(3);
        let mut o = ExampleOracle::new(maj.into(), 0.1, 8).unwrap();
        let r = learn_agnostic(&mut o, 3, 0.02, 0.1, None, 8).unwrap();
        let want = [0.0, 0.4, 0.4, 0.4];
        let err: f64 = r
            .alpha
            .values()
            .iter()
            .zip(want)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 0.02, "{:?}", r.alpha);
    }
}
