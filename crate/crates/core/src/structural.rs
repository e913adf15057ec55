//! Regularity, critical index, tail decay and anti-concentration checks
//! for weight vectors.

use serde::Serialize;
use thiserror::Error;

use crate::chow::{chow_distance, chow_of_table, dist_l1, ChowError};
use crate::func::{FuncError, Ltf, TruthTable};
use crate::rng::stream;
use rand::RngCore;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructuralError {
    #[error("weight vector is all zeros")]
    ZeroVector,
    #[error("weights must be finite")]
    NonFinite,
    #[error("tau must be positive")]
    BadTau,
    #[error("vector is not {tau}-regular")]
    NotRegular { tau: f64 },
    #[error("interval must be finite with a <= b")]
    BadInterval,
    #[error("need at least one sample")]
    NoSamples,
    #[error(transparent)]
    Chow(#[from] ChowError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

fn check_weights(w: &[f64]) -> Result<(), StructuralError> {
    if w.iter().any(|x| !x.is_finite()) {
        return Err(StructuralError::NonFinite);
    }
    if w.iter().all(|&x| x == 0.0) {
        return Err(StructuralError::ZeroVector);
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<(), StructuralError> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(StructuralError::BadTau)
    }
}

/// Relative slack on the inclusive `<=` boundary, so cases that tie in exact
/// arithmetic (equal weights with `τ = 1/√n`) are not lost to rounding.
const BOUNDARY_REL: f64 = 1e-12;

#[inline]
fn within(x: f64, limit: f64) -> bool {
    x <= limit * (1.0 + BOUNDARY_REL)
}

fn norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `max_i |w_i| <= τ·‖w‖`.
pub fn is_tau_regular(w: &[f64], tau: f64) -> Result<bool, StructuralError> {
    check_weights(w)?;
    check_tau(tau)?;
    let max = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(within(max, tau * norm(w)))
}

/// Nonzero weights sorted by decreasing magnitude with suffix norms.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedWeights {
    /// Sorted nonzero weights.
    pub w: Vec<f64>,
    /// Original (0-based) position of each sorted weight.
    pub index: Vec<usize>,
    /// `sigma[k] = sqrt(Σ_{j >= k} w_j²)`, 0-based.
    pub sigma: Vec<f64>,
    /// Original positions of removed zero weights.
    pub zeros: Vec<usize>,
}

impl SortedWeights {
    pub fn new(w: &[f64]) -> Result<Self, StructuralError> {
        check_weights(w)?;
        let mut order: Vec<usize> = (0..w.len()).filter(|&i| w[i] != 0.0).collect();
        let zeros = (0..w.len()).filter(|&i| w[i] == 0.0).collect();
        // stable: ties keep ascending original index
        order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()));
        let sorted: Vec<f64> = order.iter().map(|&i| w[i]).collect();
        let mut sigma = vec![0.0; sorted.len()];
        let mut acc = 0.0;
        for k in (0..sorted.len()).rev() {
            acc += sorted[k] * sorted[k];
            sigma[k] = acc.sqrt();
        }
        Ok(Self {
            w: sorted,
            index: order,
            sigma,
            zeros,
        })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriticalIndex {
    /// 1-based position in the sorted order.
    At(usize),
    Infinite,
}

fn critical_of(s: &SortedWeights, tau: f64) -> CriticalIndex {
    s.w.iter()
        .zip(&s.sigma)
        .position(|(wi, si)| within(wi.abs(), tau * si))
        .map_or(CriticalIndex::Infinite, |k| CriticalIndex::At(k + 1))
}

/// Smallest sorted position `i` with `|w_i| <= τ·σ_i`.
pub fn critical_index(w: &[f64], tau: f64) -> Result<CriticalIndex, StructuralError> {
    check_tau(tau)?;
    Ok(critical_of(&SortedWeights::new(w)?, tau))
}

/// Checks `σ_a < (1 - τ²)^((a-1)/2)·σ_1` for `1 < a <= min(c, n)`.
pub fn check_small_tail(w: &[f64], tau: f64) -> Result<bool, StructuralError> {
    check_tau(tau)?;
    let s = SortedWeights::new(w)?;
    let last = match critical_of(&s, tau) {
        CriticalIndex::At(c) => c.min(s.len()),
        CriticalIndex::Infinite => s.len(),
    };
    let shrink = 1.0 - tau * tau;
    Ok((2..=last).all(|a| s.sigma[a - 1] < shrink.powf((a - 1) as f64 / 2.0) * s.sigma[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AntiConcentration {
    pub empirical_prob: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Empirical `Pr[w·x ∈ (a, b]]` against `|b - a|/‖w‖ + 2τ`.
///
/// The pass flag allows `3·sqrt(ln(2/0.01)/(2m))` of sampling slack.
pub fn anticoncentration_check(
    w: &[f64],
    tau: f64,
    interval: (f64, f64),
    samples: u64,
    seed: u64,
) -> Result<AntiConcentration, StructuralError> {
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(StructuralError::BadInterval);
    }
    if samples == 0 {
        return Err(StructuralError::NoSamples);
    }
    if !is_tau_regular(w, tau)? {
        return Err(StructuralError::NotRegular { tau });
    }
    let mut rng = stream(seed, 0);
    let mut hits = 0u64;
    for _ in 0..samples {
        let mut dot = 0.0;
        for chunk in w.chunks(64) {
            let bits = rng.next_u64();
            for (k, &wi) in chunk.iter().enumerate() {
                dot += if (bits >> k) & 1 == 1 { wi } else { -wi };
            }
        }
        if dot > a && dot <= b {
            hits += 1;
        }
    }
    let empirical_prob = hits as f64 / samples as f64;
    let bound = (b - a).abs() / norm(w) + 2.0 * tau;
    let slack = 3.0 * ((2.0f64 / 0.01).ln() / (2.0 * samples as f64)).sqrt();
    Ok(AntiConcentration {
        empirical_prob,
        bound,
        slack,
        pass: empirical_prob <= bound + slack,
    })
}

/// Exact `(dchow(f, g), dist(f, g))`.
pub fn dchow_vs_dist_probe(f: &Ltf, g: &TruthTable) -> Result<(f64, f64), StructuralError> {
    let tf = f.tabulate()?;
    let dchow = chow_distance(&chow_of_table(&tf), &chow_of_table(g))?;
    Ok((dchow, dist_l1(&tf, g)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regularity_examples() {
        let h = 1.0 / 2f64.sqrt();
        assert!(is_tau_regular(&[h, h], 0.8).unwrap());
        assert!(!is_tau_regular(&[1.0, 0.0, 0.0], 0.5).unwrap());
        assert!(is_tau_regular(&[3.0, 4.0], 0.8).unwrap());
        assert_eq!(
            is_tau_regular(&[0.0, 0.0], 0.5),
            Err(StructuralError::ZeroVector)
        );
    }

    #[test]
    fn critical_index_examples() {
        assert_eq!(
            critical_index(&[1.0; 4], 0.6).unwrap(),
            CriticalIndex::At(1)
        );
        assert_eq!(
            critical_index(&[8.0, 4.0, 2.0, 1.0], 0.5).unwrap(),
            CriticalIndex::Infinite
        );
        for n in 1..10 {
            let tau = 1.0 / (n as f64).sqrt();
            assert_eq!(
                critical_index(&vec![2.5; n], tau).unwrap(),
                CriticalIndex::At(1)
            );
        }
        assert_eq!(
            critical_index(&[0.0; 3], 0.5),
            Err(StructuralError::ZeroVector)
        );
    }

    #[test]
    fn zeros_are_removed_and_ties_keep_order() {
        let s = SortedWeights::new(&[0.0, -2.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.w, vec![-2.0, 2.0, 1.0]);
        assert_eq!(s.index, vec![1, 3, 2]);
        assert_eq!(s.zeros, vec![0, 4]);
        assert_eq!(s.sigma[0], 3.0);
    }

    #[test]
    fn small_tail_examples() {
        assert!(check_small_tail(&[8.0, 4.0, 2.0, 1.0], 0.5).unwrap());
        // σ_2 = √21 ≈ 4.583 < √0.75·√85 ≈ 7.984
        let s = SortedWeights::new(&[8.0, 4.0, 2.0, 1.0]).unwrap();
        assert!((s.sigma[1] - 21f64.sqrt()).abs() < 1e-12);
        assert!(check_small_tail(&[1.0, 1.0], 0.9).unwrap());
    }

    #[test]
    fn anticoncentration_examples() {
        let n = 100;
        let w = vec![1.0 / (n as f64).sqrt(); n];
        let r = anticoncentration_check(&w, 0.1, (-0.1, 0.1), 100_000, 4).unwrap();
        assert!((r.bound - 0.4).abs() < 1e-12);
        // Pr[w·x ∈ (-0.1, 0.1]] = Pr[Σx = 0] = C(100,50)/2^100 ≈ 0.0796
        assert!((r.empirical_prob - 0.0796).abs() < 0.005, "{r:?}");
        assert!(r.pass);
        let r = anticoncentration_check(&w, 0.1, (0.3, 0.3), 1000, 4).unwrap();
        assert_eq!(r.empirical_prob, 0.0);
        assert!(r.pass);
        assert_eq!(
            anticoncentration_check(&w, 0.1, (f64::NEG_INFINITY, 0.0), 10, 0),
            Err(StructuralError::BadInterval)
        );
        assert!(matches!(
            anticoncentration_check(&[1.0, 0.1], 0.1, (0.0, 1.0), 10, 0),
            Err(StructuralError::NotRegular { .. })
        ));
    }

    #[test]
    fn probe_examples() {
        let f = Ltf::majority(5);
        let t = f.tabulate().unwrap();
        assert_eq!(dchow_vs_dist_probe(&f, &t).unwrap(), (0.0, 0.0));
        let (dc, d) = dchow_vs_dist_probe(&f, &t.negated()).unwrap();
        assert!((dc - 2.0 * chow_of_table(&t).norm()).abs() < 1e-12);
        assert_eq!(d, 2.0);
    }

    proptest! {
        #[test]
        fn critical_index_is_scale_invariant(
            w in proptest::collection::vec(-10.0f64..10.0, 1..40),
            lambda in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3],
            tau in 0.05f64..0.9,
        ) {
            prop_assume!(w.iter().any(|&x| x != 0.0));
            let scaled: Vec<f64> = w.iter().map(|x| x * lambda).collect();
            prop_assert_eq!(critical_index(&w, tau).unwrap(), critical_index(&scaled, tau).unwrap());
        }

        #[test]
        fn tail_from_critical_index_is_regular(
            w in proptest::collection::vec(-10.0f64..10.0, 1..40),
            tau in 0.05f64..0.9,
        ) {
            prop_assume!(w.iter().any(|&x| x != 0.0));
            let s = SortedWeights::new(&w).unwrap();
            if let CriticalIndex::At(c) = critical_index(&w, tau).unwrap() {
                prop_assert!(is_tau_regular(&s.w[c - 1..], tau).unwrap());
            }
            prop_assert!(check_small_tail(&w, tau).unwrap());
        }
    }
}
