//! Coefficient sequences and their transition operators.
//!
//! A [`System`] evaluates `𝒜(m,n) = A(m-1)···A(n)` (with `𝒜(n,n) = I`) on
//! the index triangle `0 <= n <= m <= horizon`. Scalar systems are evaluated
//! in closed form or from prefix sums of `ln|A(k)|`. Matrix systems never
//! form long raw products: every state vector is renormalized after each
//! step and the scale is accumulated in the log domain.
//!
//! The quantifier "for all x" is replaced by a [`TestVectorSet`]. For the
//! two-norm on invertible ranges the sup over x is computed exactly from the
//! smallest singular value instead.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::ExampleId;
use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;

/// Relative singular-value cutoff below which a step counts as singular.
const SINGULAR_RATIO: f64 = 1e-14;

pub const DEFAULT_SAMPLE_COUNT: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    One,
    #[default]
    Two,
    Inf,
}

impl Norm {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::One => v.iter().map(|x| x.abs()).sum(),
            Norm::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Inf => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::One => "one",
            Norm::Two => "two",
            Norm::Inf => "inf",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(Norm::One),
            "two" | "2" => Ok(Norm::Two),
            "inf" => Ok(Norm::Inf),
            other => Err(Error::Parse(format!("unknown norm {other:?}"))),
        }
    }
}

fn default_sample_count() -> usize {
    DEFAULT_SAMPLE_COUNT
}

/// Serializable description of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    ScalarFormula {
        formula: String,
        #[serde(with = "crate::decimal::map", default)]
        params: BTreeMap<String, f64>,
        horizon: usize,
    },
    /// `log_steps[k] = ln|A(k)|`; `-inf` encodes a zero step.
    ScalarTable {
        #[serde(with = "crate::decimal::vec")]
        log_steps: Vec<f64>,
        horizon: usize,
    },
    /// Row-major square matrices, one per step.
    MatrixTable {
        dimension: usize,
        matrices: Vec<Vec<f64>>,
        #[serde(default)]
        norm: Norm,
        #[serde(default = "default_sample_count")]
        sample_count: usize,
        #[serde(default)]
        seed: u64,
        horizon: usize,
    },
}

impl SystemSpec {
    pub fn horizon(&self) -> usize {
        match self {
            SystemSpec::ScalarFormula { horizon, .. }
            | SystemSpec::ScalarTable { horizon, .. }
            | SystemSpec::MatrixTable { horizon, .. } => *horizon,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            SystemSpec::MatrixTable { dimension, .. } => *dimension,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let horizon = self.horizon();
        if horizon == 0 {
            return Err(Error::InvalidSystem("horizon must be at least 1".into()));
        }
        match self {
            SystemSpec::ScalarFormula { formula, params, .. } => {
                ExampleId::from_parts(formula, params)?;
            }
            SystemSpec::ScalarTable { log_steps, .. } => {
                if log_steps.len() < horizon {
                    return Err(Error::TableTooShort {
                        len: log_steps.len(),
                        needed: horizon,
                    });
                }
                if let Some(k) = log_steps[..horizon]
                    .iter()
                    .position(|v| v.is_nan() || *v == f64::INFINITY)
                {
                    return Err(Error::InvalidSystem(format!(
                        "log step {k} must be finite or -inf"
                    )));
                }
            }
            SystemSpec::MatrixTable {
                dimension,
                matrices,
                ..
            } => {
                if *dimension == 0 {
                    return Err(Error::InvalidSystem("dimension must be positive".into()));
                }
                if matrices.len() < horizon {
                    return Err(Error::TableTooShort {
                        len: matrices.len(),
                        needed: horizon,
                    });
                }
                for (step, entries) in matrices.iter().enumerate() {
                    if entries.len() != dimension * dimension {
                        let rows = entries.len() / dimension.max(&1);
                        return Err(Error::DimensionMismatch {
                            step,
                            rows,
                            cols: if rows == 0 { 0 } else { entries.len() / rows },
                            dimension: *dimension,
                        });
                    }
                    if entries.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidSystem(format!(
                            "matrix {step} has a non-finite entry"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Unit vectors standing in for "all x": the canonical basis followed by
/// seeded Gaussian directions normalized in the system norm.
#[derive(Clone, Debug)]
pub struct TestVectorSet {
    vectors: Vec<DVector<f64>>,
    canonical: usize,
}

impl TestVectorSet {
    pub fn scalar() -> Self {
        TestVectorSet {
            vectors: vec![DVector::from_element(1, 1.0)],
            canonical: 1,
        }
    }

    pub fn generate(dimension: usize, norm: Norm, samples: usize, seed: u64) -> Self {
        let mut vectors: Vec<DVector<f64>> = (0..dimension)
            .map(|i| DVector::from_fn(dimension, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while vectors.len() < dimension + samples {
            let v = DVector::from_fn(dimension, |_, _| StandardNormal.sample(&mut rng));
            let len = norm.of(v.as_slice());
            if len > 1e-8 {
                vectors.push(v / len);
            }
        }
        TestVectorSet {
            vectors,
            canonical: dimension,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn canonical_count(&self) -> usize {
        self.canonical
    }

    pub fn get(&self, id: usize) -> Option<&DVector<f64>> {
        self.vectors.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.vectors.iter()
    }
}

/// Sup over x of `‖𝒜(n,p)x‖ / ‖𝒜(m,p)x‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gain {
    pub value: LogMagnitude,
    /// False when the value is a maximum over sampled test vectors only.
    pub exact: bool,
    /// Test vector attaining a sampled maximum.
    pub vector: Option<usize>,
}

impl Gain {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// Infimum of `‖Tx‖` over unit x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conorm {
    pub value: LogMagnitude,
    pub exact: bool,
}

/// `inf_{‖x‖=1} ‖Tx‖`: the smallest singular value for the two-norm,
/// otherwise a minimum over `vectors` (an upper estimate of the infimum).
pub fn conorm(operator: &DMatrix<f64>, norm: Norm, vectors: &TestVectorSet) -> Conorm {
    assert!(operator.is_square(), "conorm needs a square operator");
    if norm == Norm::Two {
        return Conorm {
            value: LogMagnitude::from_value(smallest_singular_value(operator)),
            exact: true,
        };
    }
    let value = vectors
        .iter()
        .map(|x| LogMagnitude::from_value(norm.of((operator * x).as_slice()) / norm.of(x.as_slice())))
        .min()
        .unwrap_or(LogMagnitude::INFINITY);
    Conorm {
        value,
        exact: false,
    }
}

fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Scalar evaluation data.
#[derive(Debug)]
enum ScalarKind {
    Formula(ExampleId),
    Table {
        /// `prefix[k] = Σ_{j<k} ln|A(j)|` over nonzero steps.
        prefix: Vec<f64>,
        /// `zeros[k]` = number of zero steps among `A(0..k)`.
        zeros: Vec<usize>,
    },
}

#[derive(Debug)]
struct MatrixKind {
    norm: Norm,
    steps: Vec<DMatrix<f64>>,
    /// `first_exact[m]`: smallest p with every step in `[p, m)` invertible.
    first_exact: Vec<usize>,
    /// `[p * V + v][n - p] = ln ‖𝒜(n,p) x_v‖`.
    trajectories: OnceLock<Vec<Vec<f64>>>,
    /// `[tri(m, n)] = ln σ_min(𝒜(m,n))`.
    log_conorms: OnceLock<Vec<f64>>,
}

#[derive(Debug)]
enum Kind {
    Scalar(ScalarKind),
    Matrix(MatrixKind),
}

/// An immutable evaluator for one system.
#[derive(Debug)]
pub struct System {
    spec: SystemSpec,
    horizon: usize,
    vectors: TestVectorSet,
    kind: Kind,
    /// Scalar only: smallest p with `𝒜(n,p) != 0`, per n.
    first_active: Vec<usize>,
}

fn tri(m: usize, n: usize) -> usize {
    m * (m + 1) / 2 + n
}

/// Builds an evaluator from a validated spec.
pub fn build_system(spec: SystemSpec) -> Result<System> {
    System::new(spec)
}

impl System {
    pub fn new(spec: SystemSpec) -> Result<Self> {
        spec.validate()?;
        let horizon = spec.horizon();
        let (kind, vectors, first_active) = match &spec {
            SystemSpec::ScalarFormula {
                formula, params, ..
            } => {
                let id = ExampleId::from_parts(formula, params)?;
                (
                    Kind::Scalar(ScalarKind::Formula(id)),
                    TestVectorSet::scalar(),
                    vec![0; horizon + 1],
                )
            }
            SystemSpec::ScalarTable { log_steps, .. } => {
                let mut prefix = Vec::with_capacity(horizon + 1);
                let mut zeros = Vec::with_capacity(horizon + 1);
                let mut first_active = Vec::with_capacity(horizon + 1);
                let (mut acc, mut comp, mut z, mut active) = (0.0f64, 0.0f64, 0usize, 0usize);
                for k in 0..=horizon {
                    prefix.push(acc + comp);
                    zeros.push(z);
                    first_active.push(active);
                    if k == horizon {
                        break;
                    }
                    let step = log_steps[k];
                    if step == f64::NEG_INFINITY {
                        z += 1;
                        active = k + 1;
                    } else {
                        // Neumaier summation keeps long prefix differences tight
                        let t = acc + step;
                        if acc.abs() >= step.abs() {
                            comp += (acc - t) + step;
                        } else {
                            comp += (step - t) + acc;
                        }
                        acc = t;
                    }
                }
                (
                    Kind::Scalar(ScalarKind::Table { prefix, zeros }),
                    TestVectorSet::scalar(),
                    first_active,
                )
            }
            SystemSpec::MatrixTable {
                dimension,
                matrices,
                norm,
                sample_count,
                seed,
                ..
            } => {
                let d = *dimension;
                let steps: Vec<DMatrix<f64>> = matrices[..horizon]
                    .iter()
                    .map(|e| DMatrix::from_row_slice(d, d, e))
                    .collect();
                let mut first_exact = Vec::with_capacity(horizon + 1);
                let mut start = 0;
                for m in 0..=horizon {
                    first_exact.push(start);
                    if m < horizon {
                        let sv = singular_values(&steps[m]);
                        let hi = sv.iter().copied().fold(0.0, f64::max);
                        let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
                        if !(hi > 0.0 && lo > SINGULAR_RATIO * hi) {
                            start = m + 1;
                        }
                    }
                }
                (
                    Kind::Matrix(MatrixKind {
                        norm: *norm,
                        steps,
                        first_exact,
                        trajectories: OnceLock::new(),
                        log_conorms: OnceLock::new(),
                    }),
                    TestVectorSet::generate(d, *norm, *sample_count, *seed),
                    Vec::new(),
                )
            }
        };
        Ok(System {
            spec,
            horizon,
            vectors,
            kind,
            first_active,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.kind, Kind::Scalar(_))
    }

    pub fn norm(&self) -> Norm {
        match &self.kind {
            Kind::Matrix(mk) => mk.norm,
            Kind::Scalar(_) => Norm::Two,
        }
    }

    pub fn vectors(&self) -> &TestVectorSet {
        &self.vectors
    }

    pub fn vector_count(&self) -> usize {
        self.vectors.len()
    }

    /// Whether pair gains at index m are computed by the exact two-norm route
    /// for this p.
    fn exact_from(&self, m: usize, p: usize) -> bool {
        match &self.kind {
            Kind::Matrix(mk) => mk.norm == Norm::Two && p >= mk.first_exact[m],
            Kind::Scalar(_) => true,
        }
    }

    pub fn check_window(&self, window: usize) -> Result<()> {
        if window > self.horizon {
            return Err(Error::WindowBeyondHorizon {
                window,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    fn check_pair(&self, m: usize, n: usize) -> Result<()> {
        if n > m || m > self.horizon {
            return Err(Error::IndexOutOfWindow {
                m,
                n,
                window: self.horizon,
            });
        }
        Ok(())
    }

    /// `ln|𝒜(m,n)|` for scalar systems.
    fn scalar_log(&self, sk: &ScalarKind, m: usize, n: usize) -> f64 {
        match sk {
            ScalarKind::Formula(id) => id.log_transition(m, n),
            ScalarKind::Table { prefix, zeros } => {
                if zeros[m] > zeros[n] {
                    f64::NEG_INFINITY
                } else if m == n {
                    0.0
                } else {
                    prefix[m] - prefix[n]
                }
            }
        }
    }

    /// `ln|A(k)|` (scalar) or `None` for matrix systems.
    pub fn scalar_step_log(&self, k: usize) -> Option<f64> {
        match &self.kind {
            Kind::Scalar(ScalarKind::Formula(id)) => Some(id.log_step(k)),
            Kind::Scalar(ScalarKind::Table { .. }) => match &self.spec {
                SystemSpec::ScalarTable { log_steps, .. } => log_steps.get(k).copied(),
                _ => None,
            },
            Kind::Matrix(_) => None,
        }
    }

    /// The step matrix `A(k)` (1×1 for scalar systems, magnitude only).
    pub fn step_matrix(&self, k: usize) -> Option<DMatrix<f64>> {
        match &self.kind {
            Kind::Matrix(mk) => mk.steps.get(k).cloned(),
            Kind::Scalar(_) => self
                .scalar_step_log(k)
                .map(|l| DMatrix::from_element(1, 1, l.exp())),
        }
    }

    fn trajectories<'a>(&'a self, mk: &'a MatrixKind) -> &'a Vec<Vec<f64>> {
        mk.trajectories.get_or_init(|| {
            let nv = self.vectors.len();
            (0..(self.horizon + 1) * nv)
                .into_par_iter()
                .map(|idx| {
                    let (p, v) = (idx / nv, idx % nv);
                    let x = &self.vectors.vectors[v];
                    let mut out = Vec::with_capacity(self.horizon - p + 1);
                    let mut state = x.clone();
                    let mut log_scale = mk.norm.of(x.as_slice()).ln();
                    state /= log_scale.exp();
                    out.push(log_scale);
                    for k in p..self.horizon {
                        if log_scale == f64::NEG_INFINITY {
                            out.push(log_scale);
                            continue;
                        }
                        state = &mk.steps[k] * &state;
                        let s = mk.norm.of(state.as_slice());
                        if s == 0.0 {
                            log_scale = f64::NEG_INFINITY;
                        } else {
                            log_scale += s.ln();
                            state /= s;
                        }
                        out.push(log_scale);
                    }
                    out
                })
                .collect()
        })
    }

    fn log_conorms<'a>(&'a self, mk: &'a MatrixKind) -> &'a Vec<f64> {
        mk.log_conorms.get_or_init(|| {
            let h = self.horizon;
            let d = self.dimension();
            let columns: Vec<Vec<f64>> = (0..=h)
                .into_par_iter()
                .map(|n| {
                    let mut out = Vec::with_capacity(h - n + 1);
                    let mut prod = DMatrix::<f64>::identity(d, d);
                    let mut log_scale = 0.0;
                    out.push(0.0);
                    for m in n + 1..=h {
                        if log_scale == f64::NEG_INFINITY {
                            out.push(f64::NEG_INFINITY);
                            continue;
                        }
                        prod = &mk.steps[m - 1] * &prod;
                        let s = max_abs(&prod);
                        if s == 0.0 {
                            log_scale = f64::NEG_INFINITY;
                            out.push(f64::NEG_INFINITY);
                            continue;
                        }
                        prod /= s;
                        log_scale += s.ln();
                        out.push(smallest_singular_value(&prod).ln() + log_scale);
                    }
                    out
                })
                .collect();
            let mut flat = vec![0.0; tri(h, h) + 1];
            for (n, col) in columns.iter().enumerate() {
                for (offset, v) in col.iter().enumerate() {
                    flat[tri(n + offset, n)] = *v;
                }
            }
            flat
        })
    }

    /// `‖𝒜(n,p)x‖` for test vector `vector`.
    pub fn state_norm(&self, n: usize, p: usize, vector: usize) -> Result<LogMagnitude> {
        self.check_pair(n, p)?;
        if vector >= self.vectors.len() {
            return Err(Error::UnknownVector(vector));
        }
        Ok(LogMagnitude::from_log(self.log_state(n, p, vector)))
    }

    fn log_state(&self, n: usize, p: usize, vector: usize) -> f64 {
        match &self.kind {
            Kind::Scalar(sk) => self.scalar_log(sk, n, p),
            Kind::Matrix(mk) => {
                self.trajectories(mk)[p * self.vectors.len() + vector][n - p]
            }
        }
    }

    /// `‖𝒜(m,n)x_v‖` for `m = n..=window`, indexed by `m - n`.
    pub fn trajectory(&self, n: usize, vector: usize, window: usize) -> Vec<LogMagnitude> {
        assert!(n <= window && window <= self.horizon);
        match &self.kind {
            Kind::Scalar(sk) => (n..=window)
                .map(|m| LogMagnitude::from_log(self.scalar_log(sk, m, n)))
                .collect(),
            Kind::Matrix(mk) => self.trajectories(mk)[n * self.vectors.len() + vector]
                [..=window - n]
                .iter()
                .map(|&l| LogMagnitude::from_log(l))
                .collect(),
        }
    }

    /// Applies `𝒜(m,n)` to `x` with per-step renormalization.
    ///
    /// Returns the unit-norm direction of `𝒜(m,n)x` and `ln ‖𝒜(m,n)x‖`.
    pub fn propagate(&self, m: usize, n: usize, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        self.check_pair(m, n)?;
        let norm = self.norm();
        let len = norm.of(x.as_slice());
        if len == 0.0 {
            return Ok((x.clone(), f64::NEG_INFINITY));
        }
        let mut state = x / len;
        let mut log_scale = len.ln();
        for k in n..m {
            let step = self.step_matrix(k).expect("step within horizon");
            state = &step * &state;
            let s = norm.of(state.as_slice());
            if s == 0.0 {
                return Ok((state, f64::NEG_INFINITY));
            }
            state /= s;
            log_scale += s.ln();
        }
        Ok((state, log_scale))
    }

    /// `‖𝒜(n,p)x‖ / ‖𝒜(m,p)x‖` for one test vector.
    fn sampled_gain(&self, m: usize, n: usize, p: usize, vector: usize) -> LogMagnitude {
        let num = LogMagnitude::from_log(self.log_state(n, p, vector));
        let den = LogMagnitude::from_log(self.log_state(m, p, vector));
        num / den
    }

    fn exact_matrix_gain(&self, mk: &MatrixKind, m: usize, n: usize) -> LogMagnitude {
        LogMagnitude::from_log(self.log_conorms(mk)[tri(m, n)]).recip()
    }

    /// `sup_x ‖𝒜(n,p)x‖ / ‖𝒜(m,p)x‖` for `p <= n <= m`.
    pub fn pair_gain(&self, m: usize, n: usize, p: usize) -> Result<Gain> {
        self.check_pair(m, n)?;
        self.check_pair(n, p)?;
        Ok(match &self.kind {
            Kind::Scalar(sk) => {
                let value = if self.scalar_log(sk, n, p) == f64::NEG_INFINITY {
                    LogMagnitude::ZERO
                } else {
                    LogMagnitude::from_log(self.scalar_log(sk, m, n)).recip()
                };
                Gain {
                    value,
                    exact: true,
                    vector: Some(0),
                }
            }
            Kind::Matrix(mk) => {
                if m == n {
                    Gain {
                        value: LogMagnitude::ONE,
                        exact: true,
                        vector: None,
                    }
                } else if self.exact_from(m, p) {
                    Gain {
                        value: self.exact_matrix_gain(mk, m, n),
                        exact: true,
                        vector: None,
                    }
                } else {
                    let (vector, value) = (0..self.vectors.len())
                        .map(|v| (v, self.sampled_gain(m, n, p, v)))
                        .fold((0, LogMagnitude::ZERO), |best, cur| {
                            if cur.1 > best.1 {
                                cur
                            } else {
                                best
                            }
                        });
                    Gain {
                        value,
                        exact: false,
                        vector: Some(vector),
                    }
                }
            }
        })
    }

    /// Enumerates the gain checks at `(m, n)` in `(p, vector)` order, with
    /// p-independent ranges collapsed onto their smallest p.
    ///
    /// The visitor receives `(p, vector, gain, exact)`. Returns the number of
    /// checks emitted.
    pub(crate) fn visit_gains<F>(&self, m: usize, n: usize, mut visit: F) -> u64
    where
        F: FnMut(usize, Option<usize>, LogMagnitude, bool),
    {
        match &self.kind {
            Kind::Scalar(sk) => {
                // the ratio 𝒜(n,p)/𝒜(m,p) = 1/𝒜(m,n) whenever 𝒜(n,p) != 0
                let p = self.first_active[n];
                let gain = LogMagnitude::from_log(self.scalar_log(sk, m, n)).recip();
                visit(p, Some(0), gain, true);
                1
            }
            Kind::Matrix(mk) => {
                let exact_start = if mk.norm == Norm::Two {
                    mk.first_exact[m]
                } else {
                    usize::MAX
                };
                let mut count = 0;
                for p in 0..exact_start.min(n + 1) {
                    for v in 0..self.vectors.len() {
                        visit(p, Some(v), self.sampled_gain(m, n, p, v), false);
                        count += 1;
                    }
                }
                if exact_start <= n {
                    let gain = if m == n {
                        LogMagnitude::ONE
                    } else {
                        self.exact_matrix_gain(mk, m, n)
                    };
                    visit(exact_start, None, gain, true);
                    count += 1;
                }
                count
            }
        }
    }

    /// Human-readable notes describing how gains were obtained.
    pub(crate) fn gain_notes(&self) -> Vec<String> {
        match &self.kind {
            Kind::Scalar(_) => vec![
                "scalar system: gains are exact and p-independent; triples collapsed to (m,n) pairs"
                    .to_string(),
            ],
            Kind::Matrix(mk) => {
                let mut notes = Vec::new();
                if mk.norm == Norm::Two {
                    notes.push(
                        "two-norm gains on invertible ranges are exact (smallest singular value)"
                            .to_string(),
                    );
                }
                if mk.norm != Norm::Two || mk.first_exact.iter().any(|&p| p > 0) {
                    notes.push(format!(
                        "remaining matrix gains are sampled lower bounds over {} test vectors",
                        self.vectors.len()
                    ));
                }
                notes
            }
        }
    }

    /// True when every gain this system reports is an exact supremum.
    pub fn gains_exact(&self) -> bool {
        match &self.kind {
            Kind::Scalar(_) => true,
            Kind::Matrix(mk) => mk.norm == Norm::Two && mk.first_exact.iter().all(|&p| p == 0),
        }
    }

    /// `inf_x ‖𝒜(m,n)x‖` over unit x.
    pub fn transition_conorm(&self, m: usize, n: usize) -> Result<Conorm> {
        self.check_pair(m, n)?;
        Ok(match &self.kind {
            Kind::Scalar(sk) => Conorm {
                value: LogMagnitude::from_log(self.scalar_log(sk, m, n)),
                exact: true,
            },
            Kind::Matrix(mk) if mk.norm == Norm::Two => Conorm {
                value: LogMagnitude::from_log(self.log_conorms(mk)[tri(m, n)]),
                exact: true,
            },
            Kind::Matrix(_) => {
                let value = (0..self.vectors.len())
                    .map(|v| LogMagnitude::from_log(self.log_state(m, n, v)))
                    .min()
                    .unwrap_or(LogMagnitude::INFINITY);
                Conorm {
                    value,
                    exact: false,
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_example, ExampleId};
    use proptest::prelude::*;

    fn example(id: ExampleId, horizon: usize) -> System {
        System::new(make_example(id, horizon).unwrap()).unwrap()
    }

    fn matrix_system(mats: Vec<Vec<f64>>, d: usize, norm: Norm, horizon: usize) -> System {
        System::new(SystemSpec::MatrixTable {
            dimension: d,
            matrices: mats,
            norm,
            sample_count: 8,
            seed: 11,
            horizon,
        })
        .unwrap()
    }

    #[test]
    fn constant_system_is_geometric() {
        let s = example(ExampleId::Constant { c: 2.0 }, 20);
        for (m, n) in [(0, 0), (5, 2), (20, 0)] {
            let v = s.state_norm(m, n, 0).unwrap();
            assert!((v.ln() - (m - n) as f64 * 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn example28_state_norm() {
        let s = example(ExampleId::Example28, 40);
        let v = s.state_norm(4, 1, 0).unwrap();
        assert!((v.value() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn example25_state_norm() {
        let s = example(ExampleId::Example25 { b: 2.0, c: 1.0 }, 10);
        assert!((s.state_norm(4, 2, 0).unwrap().value() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn short_matrix_table_is_rejected() {
        let mats = vec![vec![1.0, 0.0, 0.0, 1.0]; 5];
        let err = System::new(SystemSpec::MatrixTable {
            dimension: 2,
            matrices: mats,
            norm: Norm::Two,
            sample_count: 4,
            seed: 0,
            horizon: 10,
        })
        .unwrap_err();
        assert!(matches!(err, Error::TableTooShort { len: 5, needed: 10 }));
    }

    #[test]
    fn wrong_matrix_shape_is_rejected() {
        let err = System::new(SystemSpec::MatrixTable {
            dimension: 2,
            matrices: vec![vec![1.0, 0.0, 0.0]],
            norm: Norm::Two,
            sample_count: 4,
            seed: 0,
            horizon: 1,
        })
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn unknown_formula_is_rejected() {
        let err = System::new(SystemSpec::ScalarFormula {
            formula: "example99".into(),
            params: BTreeMap::new(),
            horizon: 5,
        })
        .unwrap_err();
        assert!(matches!(err, Error::UnknownFormula(_)));
    }

    #[test]
    fn out_of_window_index_is_an_error() {
        let s = example(ExampleId::Identity, 5);
        assert!(matches!(s.state_norm(6, 0, 0), Err(Error::IndexOutOfWindow { .. })));
        assert!(matches!(s.state_norm(1, 2, 0), Err(Error::IndexOutOfWindow { .. })));
        assert!(matches!(s.state_norm(1, 0, 3), Err(Error::UnknownVector(3))));
    }

    #[test]
    fn pair_gain_examples() {
        let s = example(ExampleId::Constant { c: 2.0 }, 10);
        let g = s.pair_gain(5, 3, 0).unwrap();
        assert!((g.value.value() - 0.25).abs() < 1e-12);
        assert_eq!(s.pair_gain(4, 4, 1).unwrap().value, LogMagnitude::ONE);

        let s = example(ExampleId::Example29, 10);
        let g = s.pair_gain(3, 1, 0).unwrap();
        assert!((g.value.ln() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_pair_gain_independent_of_p() {
        let s = example(ExampleId::Example25 { b: 3.0, c: 1.5 }, 12);
        for m in 0..=12 {
            for n in 0..=m {
                let g0 = s.pair_gain(m, n, 0).unwrap().value;
                for p in 1..=n {
                    assert_eq!(s.pair_gain(m, n, p).unwrap().value, g0);
                }
            }
        }
    }

    #[test]
    fn zero_steps_in_scalar_tables() {
        let spec = SystemSpec::ScalarTable {
            log_steps: vec![0.5, f64::NEG_INFINITY, 0.25, 0.1],
            horizon: 4,
        };
        let s = System::new(spec).unwrap();
        assert!(s.state_norm(3, 0, 0).unwrap().is_zero());
        assert!((s.state_norm(4, 2, 0).unwrap().ln() - 0.35).abs() < 1e-15);
        // 𝒜(2,0)x = 0, so the numerator vanishes
        assert!(s.pair_gain(3, 2, 0).unwrap().value.is_zero());
        // the denominator vanishes while the numerator does not
        assert!(s.pair_gain(2, 1, 1).unwrap().value.is_infinite());
    }

    #[test]
    fn conorm_examples() {
        let vs = TestVectorSet::generate(2, Norm::One, 8, 1);
        let id = DMatrix::<f64>::identity(2, 2);
        for norm in [Norm::One, Norm::Two, Norm::Inf] {
            let vs = TestVectorSet::generate(2, norm, 8, 1);
            assert!(conorm(&id, norm, &vs).value.ln().abs() < 1e-12);
        }
        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let c = conorm(&diag, Norm::Two, &vs);
        assert!(c.exact);
        assert!((c.value.value() - 0.5).abs() < 1e-12);
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(conorm(&sing, Norm::Two, &vs).value.value() < 1e-12);
        assert!(!conorm(&diag, Norm::One, &vs).exact);
    }

    #[test]
    fn test_vectors_are_unit_and_deterministic() {
        for norm in [Norm::One, Norm::Two, Norm::Inf] {
            let a = TestVectorSet::generate(4, norm, 20, 42);
            let b = TestVectorSet::generate(4, norm, 20, 42);
            assert_eq!(a.len(), 24);
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x, y);
                assert!((norm.of(x.as_slice()) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_at_diagonal_for_matrices() {
        let mats = vec![vec![2.0, 1.0, 0.0, 0.5]; 6];
        let s = matrix_system(mats, 2, Norm::Inf, 6);
        for n in 0..=6 {
            for v in 0..s.vector_count() {
                assert!(s.state_norm(n, n, v).unwrap().ln().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_matrix_gain_matches_inverse_norm() {
        let mats = vec![
            vec![2.0, 1.0, 0.0, 0.5],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![0.3, -1.0, 2.0, 1.0],
        ];
        let s = matrix_system(mats.clone(), 2, Norm::Two, 3);
        let a0 = DMatrix::from_row_slice(2, 2, &mats[0]);
        let a1 = DMatrix::from_row_slice(2, 2, &mats[1]);
        let a2 = DMatrix::from_row_slice(2, 2, &mats[2]);
        // gain(3,1,0) = ‖𝒜(1,0)𝒜(3,0)^{-1}‖ = ‖(A2 A1)^{-1}‖
        let inv = (&a2 * &a1).try_inverse().unwrap();
        let expected = inv.clone().svd(false, false).singular_values.max();
        let g = s.pair_gain(3, 1, 0).unwrap();
        assert!(g.exact);
        assert!((g.value.value() - expected).abs() < 1e-10 * expected);
        // sampled gains never exceed the exact sup
        for v in 0..s.vector_count() {
            assert!(s.sampled_gain(3, 1, 0, v) <= LogMagnitude::from_value(expected * (1.0 + 1e-10)));
        }
        let _ = a0;
    }

    #[test]
    fn singular_step_falls_back_to_sampling() {
        let mats = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0, 2.0],
            vec![2.0, 0.0, 0.0, 2.0],
        ];
        let s = matrix_system(mats, 2, Norm::Two, 3);
        assert!(!s.pair_gain(2, 1, 0).unwrap().exact);
        assert!(s.pair_gain(2, 1, 1).unwrap().exact);
        assert!(!s.gains_exact());
        let mut seen = Vec::new();
        s.visit_gains(3, 1, |p, v, _, exact| seen.push((p, v, exact)));
        assert!(seen.iter().take(s.vector_count()).all(|&(p, _, e)| p == 0 && !e));
        assert_eq!(*seen.last().unwrap(), (1, None, true));
    }

    fn random_matrices(seed: u64, d: usize, count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (0..d * d).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn matrix_cocycle(seed in 0u64..1000, norm_id in 0usize..3) {
            let norm = [Norm::One, Norm::Two, Norm::Inf][norm_id];
            let h = 12;
            let s = matrix_system(random_matrices(seed, 3, h), 3, norm, h);
            for p in 0..=h {
                for n in p..=h {
                    for m in n..=h {
                        for v in 0..s.vector_count() {
                            let direct = s.state_norm(m, p, v).unwrap().ln();
                            let x = s.vectors().get(v).unwrap().clone();
                            let (mid, mid_log) = s.propagate(n, p, &x).unwrap();
                            let (_, tail_log) = s.propagate(m, n, &mid).unwrap();
                            let chained = mid_log + tail_log;
                            prop_assert!((direct - chained).abs() <= 1e-9 * (1.0 + direct.abs()));
                        }
                    }
                }
            }
        }

        #[test]
        fn scalar_cocycle(steps in proptest::collection::vec(-1.0f64..1.0, 30)) {
            let s = System::new(SystemSpec::ScalarTable { log_steps: steps, horizon: 30 }).unwrap();
            for p in 0..=30 {
                for n in p..=30 {
                    for m in n..=30 {
                        let direct = s.state_norm(m, p, 0).unwrap().ln();
                        let chained = s.state_norm(m, n, 0).unwrap().ln() + s.state_norm(n, p, 0).unwrap().ln();
                        prop_assert!((direct - chained).abs() <= 1e-12 * (1.0 + direct.abs()));
                    }
                }
            }
        }

        #[test]
        fn gain_is_scale_invariant(seed in 0u64..1000, scale in 0.01f64..100.0) {
            let h = 6;
            let mats = random_matrices(seed, 2, h);
            let s = matrix_system(mats, 2, Norm::One, h);
            for m in 0..=h {
                for n in 0..=m {
                    for p in 0..=n {
                        for v in 0..s.vector_count() {
                            let x = s.vectors().get(v).unwrap();
                            let scaled = x * scale;
                            let (_, num) = s.propagate(n, p, &scaled).unwrap();
                            let (_, den) = s.propagate(m, p, &scaled).unwrap();
                            let (_, num1) = s.propagate(n, p, x).unwrap();
                            let (_, den1) = s.propagate(m, p, x).unwrap();
                            prop_assert!(((num - den) - (num1 - den1)).abs() < 1e-12 * (1.0 + (num1 - den1).abs()));
                        }
                    }
                }
            }
        }
    }
}
