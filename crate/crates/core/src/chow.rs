//! Chow parameters (degree 0 and 1 Fourier coefficients) and the distance
//! measures between functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::func::{tabulate, FuncError, FunctionSource, TruthTable};
use crate::rng::{stream, unpack, CubeSampler};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChowError {
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
}

/// `(f̂(0), f̂(1), ..., f̂(n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChowRepr", into = "ChowRepr")]
pub struct ChowVector {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChowRepr {
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<ChowRepr> for ChowVector {
    type Error = ChowError;

    fn try_from(r: ChowRepr) -> Result<Self, Self::Error> {
        if r.values.len() != r.n + 1 {
            return Err(ChowError::DimensionMismatch(r.n + 1, r.values.len()));
        }
        ChowVector::new(r.values)
    }
}

impl From<ChowVector> for ChowRepr {
    fn from(c: ChowVector) -> Self {
        ChowRepr {
            n: c.n(),
            values: c.values,
        }
    }
}

impl ChowVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ChowError> {
        if values.len() < 2 {
            return Err(ChowError::InvalidConfig(
                "a Chow vector needs n >= 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ChowError::InvalidConfig(
                "Chow entries must be finite".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Unnormalised Chow sums of a table, computed in place in `O(2^n)`.
///
/// The last coordinate is the lowest index bit, so `Σ f(x)·x_n` is the sum
/// of odd minus even entries; adjacent pairs are then merged and the next
/// coordinate read off the same way. `buf` is consumed.
pub(crate) fn chow_sums_in_place(buf: &mut [f64], n: usize, out: &mut [f64]) {
    debug_assert_eq!(buf.len(), 1 << n);
    debug_assert_eq!(out.len(), n + 1);
    let mut len = buf.len();
    for i in (1..=n).rev() {
        let half = len / 2;
        let mut diff = 0.0;
        for j in 0..half {
            let (lo, hi) = (buf[2 * j], buf[2 * j + 1]);
            diff += hi - lo;
            buf[j] = lo + hi;
        }
        out[i] = diff;
        len = half;
    }
    out[0] = buf[0];
}

/// Chow vector of a table.
pub fn chow_of_table(t: &TruthTable) -> ChowVector {
    let n = t.n();
    let mut buf = t.values().to_vec();
    let mut out = vec![0.0; n + 1];
    chow_sums_in_place(&mut buf, n, &mut out);
    let scale = 1.0 / (1u64 << n) as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    ChowVector { values: out }
}

/// Exact Chow vector of an exact-mode source by enumeration.
pub fn chow_exact(f: &FunctionSource) -> Result<ChowVector, ChowError> {
    Ok(chow_of_table(&tabulate(f)?))
}

/// Settings for Monte Carlo estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Per-coefficient accuracy `t`.
    pub accuracy: f64,
    /// Failure probability `δ`.
    pub delta: f64,
    pub seed: u64,
    pub batch_size: u64,
    /// Fixed sample count overriding the Hoeffding formula.
    #[serde(default)]
    pub samples: Option<u64>,
}

impl EstimatorConfig {
    pub const DEFAULT_BATCH: u64 = 1 << 16;

    pub fn new(accuracy: f64, delta: f64, seed: u64) -> Self {
        Self {
            accuracy,
            delta,
            seed,
            batch_size: Self::DEFAULT_BATCH,
            samples: None,
        }
    }

    pub fn with_samples(mut self, m: u64) -> Self {
        self.samples = Some(m);
        self
    }

    pub fn validate(&self) -> Result<(), ChowError> {
        if !(self.accuracy.is_finite() && self.accuracy > 0.0) {
            return Err(ChowError::InvalidConfig("accuracy must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ChowError::InvalidConfig("delta must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 || self.samples == Some(0) {
            return Err(ChowError::InvalidConfig(
                "batch size and samples must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `⌈(2/t²)·ln(2(n+1)/δ)⌉`: Hoeffding for `n+1` means of `[-1,1]`
    /// variables, union bounded.
    pub fn chow_sample_count(&self, n: usize) -> u64 {
        self.samples
            .unwrap_or_else(|| hoeffding_count(self.accuracy, self.delta / (n + 1) as f64))
    }

    /// `⌈(2/t²)·ln(2/δ)⌉` for one mean of a `[0,2]` variable.
    pub fn dist_sample_count(&self) -> u64 {
        self.samples
            .unwrap_or_else(|| hoeffding_count(self.accuracy, self.delta))
    }
}

/// Samples making one range-2 empirical mean `t`-accurate w.p. `1-δ`.
pub fn hoeffding_count(t: f64, delta: f64) -> u64 {
    ((2.0 / (t * t)) * (2.0 / delta).ln()).ceil() as u64
}

/// Runs `m` uniform samples in seeded batches, calling `visit(x, label)`.
fn for_each_sample(
    f: &FunctionSource,
    n: usize,
    m: u64,
    cfg: &EstimatorConfig,
    mut visit: impl FnMut(&[i8], f64),
) -> Result<(), ChowError> {
    let mut x = vec![0i8; n];
    let batches = m.div_ceil(cfg.batch_size);
    for b in 0..batches {
        let count = cfg.batch_size.min(m - b * cfg.batch_size);
        let mut sampler = CubeSampler::new(stream(cfg.seed, b), n);
        for _ in 0..count {
            if n <= 64 {
                let idx = sampler.next_index();
                unpack(idx, n, &mut x);
                let y = match f.eval_index(idx) {
                    Ok(y) => y,
                    Err(_) => f.label(&x, sampler.rng_mut()),
                };
                visit(&x, y);
            } else {
                sampler.next_point(&mut x);
                let y = f.label(&x, sampler.rng_mut());
                visit(&x, y);
            }
        }
    }
    Ok(())
}

/// Empirical Chow vector from one shared set of uniform samples.
///
/// Estimates are not clipped to `[-1, 1]`.
pub fn chow_estimate(
    f: &FunctionSource,
    n: usize,
    cfg: &EstimatorConfig,
) -> Result<ChowVector, ChowError> {
    cfg.validate()?;
    if f.n() != n {
        return Err(ChowError::DimensionMismatch(f.n(), n));
    }
    let m = cfg.chow_sample_count(n);
    let mut sums = vec![0.0f64; n + 1];
    for_each_sample(f, n, m, cfg, |x, y| {
        sums[0] += y;
        for (s, &xi) in sums[1..].iter_mut().zip(x) {
            *s += y * xi as f64;
        }
    })?;
    let inv = 1.0 / m as f64;
    Ok(ChowVector {
        values: sums.into_iter().map(|s| s * inv).collect(),
    })
}

/// Euclidean distance between Chow vectors.
pub fn chow_distance(a: &ChowVector, b: &ChowVector) -> Result<f64, ChowError> {
    if a.n() != b.n() {
        return Err(ChowError::DimensionMismatch(a.n(), b.n()));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `E|f - g|` by enumeration.
pub fn dist_l1(f: &TruthTable, g: &TruthTable) -> Result<f64, ChowError> {
    if f.n() != g.n() {
        return Err(ChowError::DimensionMismatch(f.n(), g.n()));
    }
    let total: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(total / (1u64 << f.n()) as f64)
}

/// Empirical `E|f - g|` over shared uniform samples.
pub fn dist_estimate(
    f: &FunctionSource,
    g: &FunctionSource,
    n: usize,
    cfg: &EstimatorConfig,
) -> Result<f64, ChowError> {
    cfg.validate()?;
    for src in [f, g] {
        if src.n() != n {
            return Err(ChowError::DimensionMismatch(src.n(), n));
        }
    }
    let m = cfg.dist_sample_count();
    let mut x = vec![0i8; n];
    let mut total = 0.0;
    let batches = m.div_ceil(cfg.batch_size);
    for b in 0..batches {
        let count = cfg.batch_size.min(m - b * cfg.batch_size);
        let mut sampler = CubeSampler::new(stream(cfg.seed, b), n);
        for _ in 0..count {
            if n <= 64 {
                let idx = sampler.next_index();
                unpack(idx, n, &mut x);
            } else {
                sampler.next_point(&mut x);
            }
            let rng = sampler.rng_mut();
            let a = f.label(&x, rng);
            let c = g.label(&x, rng);
            total += (a - c).abs();
        }
    }
    Ok(total / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{Ltf, NoisyOracle};
    use crate::rng::unpack;
    use proptest::prelude::*;

    /// Brute-force oracle: `2^-n Σ_x f(x)·x_i`.
    fn brute_chow(t: &TruthTable) -> Vec<f64> {
        let n = t.n();
        let mut out = vec![0.0; n + 1];
        let mut x = vec![0i8; n];
        for idx in 0..1u64 << n {
            unpack(idx, n, &mut x);
            let y = t.values()[idx as usize];
            out[0] += y;
            for i in 0..n {
                out[i + 1] += y * x[i] as f64;
            }
        }
        out.iter().map(|v| v / (1u64 << n) as f64).collect()
    }

    fn table(f: Ltf) -> TruthTable {
        f.tabulate().unwrap()
    }

    #[test]
    fn exact_examples() {
        let c = chow_exact(&Ltf::dictator(2, 1).into()).unwrap();
        assert_eq!(c.values(), &[0.0, 1.0, 0.0]);
        let one = TruthTable::new(3, vec![1.0; 8]).unwrap();
        assert_eq!(chow_of_table(&one).values(), &[1.0, 0.0, 0.0, 0.0]);
        let maj = table(Ltf::majority(3));
        assert_eq!(brute_chow(&maj), vec![0.0, 0.5, 0.5, 0.5]);
        assert_eq!(chow_of_table(&maj).values(), &[0.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn sample_count_formula() {
        let cfg = EstimatorConfig::new(0.1, 0.1, 0);
        assert_eq!(cfg.chow_sample_count(10), 1079);
    }

    #[test]
    fn constant_estimate_is_exact() {
        let one: FunctionSource = TruthTable::new(4, vec![1.0; 16]).unwrap().into();
        for seed in 0..5 {
            let cfg = EstimatorConfig::new(0.2, 0.1, seed);
            assert_eq!(chow_estimate(&one, 4, &cfg).unwrap().values()[0], 1.0);
        }
    }

    #[test]
    fn dictator_estimates_are_accurate() {
        let f: FunctionSource = Ltf::dictator(10, 1).into();
        let exact = chow_exact(&f).unwrap();
        let mut good = 0;
        for seed in 0..50 {
            let cfg = EstimatorConfig::new(0.05, 0.05, seed);
            let est = chow_estimate(&f, 10, &cfg).unwrap();
            let err = est
                .values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if err <= 0.05 {
                good += 1;
            }
        }
        assert!(good >= 47, "{good}");
    }

    #[test]
    fn estimates_are_reproducible_and_batch_sensitive_only_by_seed() {
        let f: FunctionSource = Ltf::majority(5).into();
        let mut cfg = EstimatorConfig::new(0.05, 0.1, 9);
        cfg.batch_size = 1000;
        let a = chow_estimate(&f, 5, &cfg).unwrap();
        let b = chow_estimate(&f, 5, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 10;
        assert_ne!(a, chow_estimate(&f, 5, &cfg).unwrap());
    }

    #[test]
    fn noisy_oracle_scales_chow_vector() {
        let o = NoisyOracle::new(Ltf::majority(3).into(), 0.1).unwrap();
        let cfg = EstimatorConfig::new(0.1, 0.1, 3).with_samples(400_000);
        let est = chow_estimate(&FunctionSource::Oracle(o), 3, &cfg).unwrap();
        for (e, want) in est.values().iter().zip([0.0, 0.4, 0.4, 0.4]) {
            assert!((e - want).abs() < 0.01, "{e} vs {want}");
        }
    }

    #[test]
    fn distance_examples() {
        let a = ChowVector::new(vec![0.0, 1.0, 0.0]).unwrap();
        let b = ChowVector::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(chow_distance(&a, &a).unwrap(), 0.0);
        assert!((chow_distance(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let maj = chow_of_table(&table(Ltf::majority(3)));
        let one = ChowVector::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((chow_distance(&maj, &one).unwrap() - 1.75f64.sqrt()).abs() < 1e-12);
        let c = ChowVector::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            chow_distance(&a, &c),
            Err(ChowError::DimensionMismatch(2, 1))
        ));
    }

    #[test]
    fn dist_examples() {
        let maj = table(Ltf::majority(3));
        let x1 = table(Ltf::dictator(3, 1));
        assert_eq!(dist_l1(&maj, &maj).unwrap(), 0.0);
        assert_eq!(dist_l1(&maj, &maj.negated()).unwrap(), 2.0);
        assert_eq!(dist_l1(&maj, &x1).unwrap(), 0.5);
    }

    #[test]
    fn dist_estimate_examples() {
        let maj: FunctionSource = Ltf::majority(3).into();
        let neg: FunctionSource = table(Ltf::majority(3)).negated().into();
        let x1: FunctionSource = Ltf::dictator(3, 1).into();
        let cfg = EstimatorConfig::new(0.05, 0.1, 1);
        assert_eq!(dist_estimate(&maj, &maj, 3, &cfg).unwrap(), 0.0);
        assert_eq!(dist_estimate(&maj, &neg, 3, &cfg).unwrap(), 2.0);
        let mut close = 0;
        for seed in 0..20 {
            let cfg = EstimatorConfig::new(0.02, 0.1, seed).with_samples(100_000);
            if (dist_estimate(&maj, &x1, 3, &cfg).unwrap() - 0.5).abs() <= 0.02 {
                close += 1;
            }
        }
        assert!(close >= 19);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let f: FunctionSource = Ltf::majority(3).into();
        for cfg in [
            EstimatorConfig::new(0.0, 0.1, 0),
            EstimatorConfig::new(0.1, 1.0, 0),
            EstimatorConfig::new(0.1, 0.1, 0).with_samples(0),
        ] {
            assert!(matches!(
                chow_estimate(&f, 3, &cfg),
                Err(ChowError::InvalidConfig(_))
            ));
        }
    }

    proptest! {
        #[test]
        fn fast_chow_matches_definition(bits in proptest::collection::vec(any::<bool>(), 1..=512)) {
            let n = (usize::BITS - 1 - bits.len().leading_zeros()) as usize;
            prop_assume!(n >= 1);
            let vals: Vec<f64> = bits[..1 << n].iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
            let t = TruthTable::new(n, vals).unwrap();
            let c = chow_of_table(&t);
            prop_assert_eq!(c.values(), &brute_chow(&t)[..]);
            for v in c.values() {
                prop_assert!(v.abs() <= 1.0);
                let scaled = v * (1u64 << n) as f64;
                prop_assert_eq!(scaled.rem_euclid(2.0), 0.0);
            }
        }

        #[test]
        fn chow_distance_within_fact_envelope(
            a in proptest::collection::vec(any::<bool>(), 64),
            b in proptest::collection::vec(any::<bool>(), 64),
        ) {
            let to = |v: &[bool]| TruthTable::new(6, v.iter().map(|&x| if x { 1.0 } else { -1.0 }).collect()).unwrap();
            let (f, g) = (to(&a), to(&b));
            let d = chow_distance(&chow_of_table(&f), &chow_of_table(&g)).unwrap();
            prop_assert!(d <= 2.0 * dist_l1(&f, &g).unwrap().sqrt() + 1e-9);
        }
    }
}
