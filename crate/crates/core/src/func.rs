//! Linear threshold functions, linear bounded functions and truth tables.
//!
//! Points of `{-1,1}^n` are `±1` slices with coordinate 1 first. Truth
//! tables store `2^n` values in lexicographic order with coordinate 1 as
//! the most significant bit and bit 1 meaning `+1`.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::coord;

/// Default largest dimension for exact enumeration.
pub const DEFAULT_CAP: usize = 20;

/// Environment variable overriding [`DEFAULT_CAP`].
pub const CAP_ENV: &str = "CHOWLAB_CAP";

/// Enumeration cap, read once from `CHOWLAB_CAP` (default 20).
pub fn enumeration_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(CAP_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .filter(|&c: &usize| (1..=30).contains(&c))
            .unwrap_or(DEFAULT_CAP)
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuncError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("n = {n} exceeds the enumeration cap {cap}")]
    ExceedsCap { n: usize, cap: usize },
    #[error("sampling oracles cannot be evaluated pointwise")]
    OracleMode,
    #[error("point entries must be -1 or +1")]
    InvalidPoint,
    #[error("invalid function: {0}")]
    Invalid(String),
}

/// `P_1`: the projection of a real onto `[-1, 1]`.
#[inline]
pub fn project_p1(a: f64) -> f64 {
    if a.abs() <= 1.0 {
        a
    } else if a > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `sign` with the convention `sign(0) = +1`.
#[inline]
pub fn sign(a: f64) -> f64 {
    if a >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn check_point(x: &[i8], n: usize) -> Result<(), FuncError> {
    if x.len() != n {
        return Err(FuncError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if x.iter().any(|&xi| xi != 1 && xi != -1) {
        return Err(FuncError::InvalidPoint);
    }
    Ok(())
}

/// Linear threshold function `sign(w·x - θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LtfRepr", into = "LtfRepr")]
pub struct Ltf {
    weights: Vec<f64>,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LtfRepr {
    n: usize,
    weights: Vec<f64>,
    theta: f64,
}

impl TryFrom<LtfRepr> for Ltf {
    type Error = FuncError;

    fn try_from(r: LtfRepr) -> Result<Self, Self::Error> {
        if r.weights.len() != r.n {
            return Err(FuncError::DimensionMismatch {
                expected: r.n,
                got: r.weights.len(),
            });
        }
        Ltf::new(r.weights, r.theta)
    }
}

impl From<Ltf> for LtfRepr {
    fn from(f: Ltf) -> Self {
        LtfRepr {
            n: f.weights.len(),
            weights: f.weights,
            theta: f.theta,
        }
    }
}

impl Ltf {
    pub fn new(weights: Vec<f64>, theta: f64) -> Result<Self, FuncError> {
        if weights.is_empty() {
            return Err(FuncError::Invalid("an LTF needs n >= 1".into()));
        }
        if !theta.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(FuncError::Invalid(
                "weights and threshold must be finite".into(),
            ));
        }
        Ok(Self { weights, theta })
    }

    /// Majority of `n` variables, `sign(x_1 + ... + x_n)`.
    pub fn majority(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
            theta: 0.0,
        }
    }

    /// Dictator `x_i` (1-based) in dimension `n`.
    pub fn dictator(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i - 1] = 1.0;
        Self {
            weights,
            theta: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `sign(w·x - θ)`, with the dot product summed from coordinate 1.
    pub fn eval(&self, x: &[i8]) -> Result<f64, FuncError> {
        check_point(x, self.n())?;
        let dot = self
            .weights
            .iter()
            .zip(x)
            .fold(0.0, |acc, (w, &xi)| acc + w * xi as f64);
        Ok(sign(dot - self.theta))
    }

    fn eval_index(&self, idx: u64) -> f64 {
        let n = self.n();
        let dot = self
            .weights
            .iter()
            .enumerate()
            .fold(0.0, |acc, (k, w)| acc + w * coord(idx, n, k + 1) as f64);
        sign(dot - self.theta)
    }

    /// Values over the whole cube. Partial sums follow the same order as
    /// [`Ltf::eval`], so both agree bit for bit.
    pub fn tabulate(&self) -> Result<TruthTable, FuncError> {
        let n = self.n();
        check_cap(n)?;
        let mut sums = vec![0.0f64];
        for &w in &self.weights {
            sums = sums.iter().flat_map(|&s| [s - w, s + w]).collect();
        }
        let values = sums.into_iter().map(|s| sign(s - self.theta)).collect();
        Ok(TruthTable { n, values })
    }
}

/// Linear bounded function `P_1(κ·(v_0 + Σ v_i x_i))` with integer `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LbfRepr", into = "LbfRepr")]
pub struct Lbf {
    kappa: f64,
    v: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LbfRepr {
    n: usize,
    kappa: f64,
    v: Vec<i64>,
}

impl TryFrom<LbfRepr> for Lbf {
    type Error = FuncError;

    fn try_from(r: LbfRepr) -> Result<Self, Self::Error> {
        if r.v.len() != r.n + 1 {
            return Err(FuncError::DimensionMismatch {
                expected: r.n + 1,
                got: r.v.len(),
            });
        }
        Lbf::new(r.kappa, r.v)
    }
}

impl From<Lbf> for LbfRepr {
    fn from(g: Lbf) -> Self {
        LbfRepr {
            n: g.n(),
            kappa: g.kappa,
            v: g.v,
        }
    }
}

impl Lbf {
    /// `v` has length `n + 1`; `v[0]` is the constant term.
    pub fn new(kappa: f64, v: Vec<i64>) -> Result<Self, FuncError> {
        if v.len() < 2 {
            return Err(FuncError::Invalid("an LBF needs n >= 1".into()));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(FuncError::Invalid(
                "kappa must be positive and finite".into(),
            ));
        }
        Ok(Self { kappa, v })
    }

    pub fn zero(n: usize, kappa: f64) -> Self {
        Self {
            kappa,
            v: vec![0; n + 1],
        }
    }

    pub fn n(&self) -> usize {
        self.v.len() - 1
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn v(&self) -> &[i64] {
        &self.v
    }

    pub(crate) fn v_mut(&mut self) -> &mut [i64] {
        &mut self.v
    }

    /// Integer affine form `v_0 + Σ v_i x_i`.
    pub fn integer_form(&self, x: &[i8]) -> Result<i64, FuncError> {
        check_point(x, self.n())?;
        Ok(self.v[0]
            + self.v[1..]
                .iter()
                .zip(x)
                .map(|(&vi, &xi)| vi * xi as i64)
                .sum::<i64>())
    }

    /// Unclipped form `κ·(v_0 + Σ v_i x_i)`.
    pub fn linear_form(&self, x: &[i8]) -> Result<f64, FuncError> {
        Ok(self.kappa * self.integer_form(x)? as f64)
    }

    pub fn eval(&self, x: &[i8]) -> Result<f64, FuncError> {
        Ok(project_p1(self.linear_form(x)?))
    }

    fn eval_index(&self, idx: u64) -> f64 {
        let n = self.n();
        let form = self.v[0]
            + self.v[1..]
                .iter()
                .enumerate()
                .map(|(k, &vi)| vi * coord(idx, n, k + 1) as i64)
                .sum::<i64>();
        project_p1(self.kappa * form as f64)
    }

    /// `v_0 + Σ v_i x_i` at every point of the cube, in table order.
    pub fn integer_form_table(&self) -> Result<Vec<i64>, FuncError> {
        check_cap(self.n())?;
        Ok(affine_integer_table(&self.v))
    }

    pub fn tabulate(&self) -> Result<TruthTable, FuncError> {
        let values = self
            .integer_form_table()?
            .into_iter()
            .map(|l| project_p1(self.kappa * l as f64))
            .collect();
        Ok(TruthTable {
            n: self.n(),
            values,
        })
    }
}

/// `c[0] + Σ c[i] x_i` over the cube in table order, built by doubling.
pub(crate) fn affine_integer_table(c: &[i64]) -> Vec<i64> {
    let n = c.len() - 1;
    let mut out = Vec::with_capacity(1 << n);
    out.push(c[0]);
    for &ci in &c[1..] {
        let len = out.len();
        out.resize(2 * len, 0);
        for j in (0..len).rev() {
            let s = out[j];
            out[2 * j] = s - ci;
            out[2 * j + 1] = s + ci;
        }
    }
    out
}

pub(crate) fn check_cap(n: usize) -> Result<(), FuncError> {
    let cap = enumeration_cap();
    if n > cap {
        Err(FuncError::ExceedsCap { n, cap })
    } else {
        Ok(())
    }
}

/// Dense table of a `[-1,1]`-valued function on `{-1,1}^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct TruthTable {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRepr {
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<TableRepr> for TruthTable {
    type Error = FuncError;

    fn try_from(r: TableRepr) -> Result<Self, Self::Error> {
        TruthTable::new(r.n, r.values)
    }
}

impl From<TruthTable> for TableRepr {
    fn from(t: TruthTable) -> Self {
        TableRepr {
            n: t.n,
            values: t.values,
        }
    }
}

impl TruthTable {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, FuncError> {
        if n == 0 {
            return Err(FuncError::Invalid("a table needs n >= 1".into()));
        }
        check_cap(n)?;
        if values.len() != 1 << n {
            return Err(FuncError::DimensionMismatch {
                expected: 1 << n,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && v.abs() <= 1.0)) {
            return Err(FuncError::Invalid(
                "table entries must lie in [-1, 1]".into(),
            ));
        }
        Ok(Self { n, values })
    }

    /// Table of `f` over the cube.
    pub fn from_fn(n: usize, mut f: impl FnMut(&[i8]) -> f64) -> Result<Self, FuncError> {
        check_cap(n)?;
        let mut x = vec![0i8; n];
        let values = (0..1u64 << n)
            .map(|idx| {
                crate::rng::unpack(idx, n, &mut x);
                f(&x)
            })
            .collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_boolean(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    /// Position of `x` in the table.
    pub fn index_of(x: &[i8]) -> u64 {
        x.iter().fold(0u64, |acc, &xi| (acc << 1) | (xi > 0) as u64)
    }

    pub fn eval(&self, x: &[i8]) -> Result<f64, FuncError> {
        check_point(x, self.n)?;
        Ok(self.values[Self::index_of(x) as usize])
    }

    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Copy with the entries at `indices` negated.
    pub fn with_flips(&self, indices: &[usize]) -> Self {
        let mut values = self.values.clone();
        for &i in indices {
            values[i] = -values[i];
        }
        Self { n: self.n, values }
    }
}

/// Labeled-example oracle: uniform `x` with the target's value, negated
/// independently with probability `noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyOracle {
    target: Box<FunctionSource>,
    noise: f64,
}

impl NoisyOracle {
    pub fn new(target: FunctionSource, noise: f64) -> Result<Self, FuncError> {
        if !(0.0..0.5).contains(&noise) {
            return Err(FuncError::Invalid(
                "label noise must lie in [0, 0.5)".into(),
            ));
        }
        if matches!(target, FunctionSource::Oracle(_)) {
            return Err(FuncError::Invalid("oracle targets must be exact".into()));
        }
        Ok(Self {
            target: Box::new(target),
            noise,
        })
    }

    pub fn target(&self) -> &FunctionSource {
        &self.target
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }
}

/// Any function the estimators can query.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSource {
    Table(TruthTable),
    Ltf(Ltf),
    Lbf(Lbf),
    Oracle(NoisyOracle),
}

impl From<TruthTable> for FunctionSource {
    fn from(t: TruthTable) -> Self {
        FunctionSource::Table(t)
    }
}

impl From<Ltf> for FunctionSource {
    fn from(f: Ltf) -> Self {
        FunctionSource::Ltf(f)
    }
}

impl From<Lbf> for FunctionSource {
    fn from(g: Lbf) -> Self {
        FunctionSource::Lbf(g)
    }
}

impl FunctionSource {
    pub fn n(&self) -> usize {
        match self {
            FunctionSource::Table(t) => t.n(),
            FunctionSource::Ltf(f) => f.n(),
            FunctionSource::Lbf(g) => g.n(),
            FunctionSource::Oracle(o) => o.target.n(),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, FunctionSource::Oracle(_))
    }

    /// Exact value at `x`; fails for oracle sources.
    pub fn eval(&self, x: &[i8]) -> Result<f64, FuncError> {
        match self {
            FunctionSource::Table(t) => t.eval(x),
            FunctionSource::Ltf(f) => f.eval(x),
            FunctionSource::Lbf(g) => g.eval(x),
            FunctionSource::Oracle(_) => Err(FuncError::OracleMode),
        }
    }

    /// Label of a uniformly drawn `x`. Exact sources answer with their
    /// value; oracles may flip it using `rng`.
    pub fn label<R: Rng + ?Sized>(&self, x: &[i8], rng: &mut R) -> f64 {
        match self {
            FunctionSource::Table(t) => t.values[TruthTable::index_of(x) as usize],
            FunctionSource::Ltf(f) => f.eval(x).expect("dimension checked by caller"),
            FunctionSource::Lbf(g) => g.eval(x).expect("dimension checked by caller"),
            FunctionSource::Oracle(o) => {
                let y = o.target.label(x, rng);
                if o.noise > 0.0 && rng.gen_bool(o.noise) {
                    -y
                } else {
                    y
                }
            }
        }
    }

    /// Exact value at the point with table index `idx` (`n <= 64`).
    pub(crate) fn eval_index(&self, idx: u64) -> Result<f64, FuncError> {
        match self {
            FunctionSource::Table(t) => Ok(t.values[idx as usize]),
            FunctionSource::Ltf(f) => Ok(f.eval_index(idx)),
            FunctionSource::Lbf(g) => Ok(g.eval_index(idx)),
            FunctionSource::Oracle(_) => Err(FuncError::OracleMode),
        }
    }
}

/// Tabulates an exact source over the cube.
pub fn tabulate(f: &FunctionSource) -> Result<TruthTable, FuncError> {
    match f {
        FunctionSource::Table(t) => Ok(t.clone()),
        FunctionSource::Ltf(f) => f.tabulate(),
        FunctionSource::Lbf(g) => g.tabulate(),
        FunctionSource::Oracle(_) => Err(FuncError::OracleMode),
    }
}

/// Result of turning an LBF into an LTF.
#[derive(Debug, Clone, PartialEq)]
pub struct LtfConversion {
    pub ltf: Ltf,
    /// Set when `v` was all zeros; the result is then the constant `+1`.
    pub degenerate: bool,
}

/// `sign(v_0 + Σ v_i x_i)` for an LBF `P_1(κ·(v_0 + Σ v_i x_i))`.
///
/// The LTF keeps the integer weights `v_1..v_n` and threshold `-v_0`. This
/// is the same function as scaling by `κ` but ties are decided exactly.
pub fn lbf_to_ltf(g: &Lbf) -> LtfConversion {
    let weights = g.v[1..].iter().map(|&vi| vi as f64).collect();
    LtfConversion {
        ltf: Ltf {
            weights,
            theta: -(g.v[0] as f64),
        },
        degenerate: g.v.iter().all(|&vi| vi == 0),
    }
}
