//! Per-view Gram matrices, cross kernels, and simplex-weighted combinations.
//!
//! Two kernel families are supported: linear `⟨x, y⟩` and Gaussian
//! `exp(−‖x − y‖² / (2 b²))`. An RBF spec without a bandwidth resolves to the
//! median pairwise distance of the view it is applied to.
//!
//! Every entry is produced by the same scalar routine regardless of which
//! builder asks for it, so `cross_kernel(x, x, s) == gram_matrix(x, s)`
//! bitwise, and rows may be filled in parallel without affecting results.

use std::cell::Cell;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("feature dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("rbf bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("median heuristic needs at least two distinct points")]
    DegenerateBandwidth,

    #[error("matrix shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("expected {expected} weights, found {found}")]
    WeightCount { expected: usize, found: usize },

    #[error("weights are not on the probability simplex: {0}")]
    NotSimplex(String),
}

pub type Result<T> = std::result::Result<T, KernelError>;

/// Kernel family for one view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// Gaussian kernel. `None` selects the median heuristic at build time.
    Rbf {
        bandwidth: Option<f64>,
    },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Rbf { bandwidth: None }
    }
}

impl KernelSpec {
    pub fn rbf(bandwidth: f64) -> Self {
        KernelSpec::Rbf {
            bandwidth: Some(bandwidth),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { bandwidth: Some(b) } if !(b.is_finite() && b > 0.0) => {
                Err(KernelError::InvalidBandwidth(b))
            }
            _ => Ok(()),
        }
    }

    /// Fix any data-dependent parameter against `features`.
    ///
    /// The result is what gets stored in a trained model so prediction uses
    /// the exact bandwidth seen during training.
    pub fn resolve(&self, features: ArrayView2<f64>) -> Result<KernelSpec> {
        self.validate()?;
        match *self {
            KernelSpec::Rbf { bandwidth: None } => {
                check_finite(features)?;
                Ok(KernelSpec::rbf(median_pairwise_distance(features)?))
            }
            other => Ok(other),
        }
    }

    fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match *self {
            KernelSpec::Linear => dot(a, b),
            KernelSpec::Rbf { bandwidth } => {
                let bw = bandwidth.expect("rbf bandwidth resolved before evaluation");
                (-squared_distance(a, b) / (2.0 * bw * bw)).exp()
            }
        }
    }
}

/// Symmetric positive semi-definite Gram matrix of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Array2<f64>,
    psd_tolerance: f64,
}

impl GramMatrix {
    pub const DEFAULT_PSD_TOLERANCE: f64 = 1e-8;

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn psd_tolerance(&self) -> f64 {
        self.psd_tolerance
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(KernelError::NotSimplex("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(KernelError::NotSimplex(format!(
                "entry {w} is negative or non-finite"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(KernelError::NotSimplex(format!("entries sum to {sum}")));
        }
        Ok(SimplexWeights(weights))
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "simplex needs at least one coordinate");
        SimplexWeights(vec![1.0 / len as f64; len])
    }

    pub fn one_hot(len: usize, index: usize) -> Self {
        assert!(index < len);
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        SimplexWeights(w)
    }

    /// Wrap a vector already known to be nonnegative with sum ≈ 1, dividing
    /// out the residual rounding.
    pub(crate) fn from_normalized(mut weights: Vec<f64>) -> Self {
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        SimplexWeights(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn squared_norm(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum()
    }
}

impl TryFrom<Vec<f64>> for SimplexWeights {
    type Error = KernelError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexWeights::new(v)
    }
}

impl From<SimplexWeights> for Vec<f64> {
    fn from(w: SimplexWeights) -> Self {
        w.0
    }
}

thread_local! {
    static GRAM_BUILDS: Cell<usize> = const { Cell::new(0) };
}

/// Number of [`gram_matrix`] calls made on the current thread.
#[doc(hidden)]
pub fn gram_builds_on_this_thread() -> usize {
    GRAM_BUILDS.with(Cell::get)
}

pub fn gram_matrix(features: ArrayView2<f64>, spec: &KernelSpec) -> Result<GramMatrix> {
    GRAM_BUILDS.with(|c| c.set(c.get() + 1));
    let spec = spec.resolve(features)?;
    check_finite(features)?;
    Ok(GramMatrix {
        values: kernel_block(features, features, &spec),
        psd_tolerance: GramMatrix::DEFAULT_PSD_TOLERANCE,
    })
}

/// Kernel values between query rows and training rows, shape `m × n`.
pub fn cross_kernel(
    train: ArrayView2<f64>,
    query: ArrayView2<f64>,
    spec: &KernelSpec,
) -> Result<Array2<f64>> {
    if train.ncols() != query.ncols() {
        return Err(KernelError::DimensionMismatch {
            expected: train.ncols(),
            found: query.ncols(),
        });
    }
    let spec = spec.resolve(train)?;
    check_finite(train)?;
    check_finite(query)?;
    Ok(kernel_block(train, query, &spec))
}

/// Entrywise `Σ_k w_k parts[k]`.
pub fn combine_matrices(parts: &[&Array2<f64>], weights: &SimplexWeights) -> Result<Array2<f64>> {
    if parts.len() != weights.len() {
        return Err(KernelError::WeightCount {
            expected: parts.len(),
            found: weights.len(),
        });
    }
    let shape = parts[0].dim();
    let mut out = Array2::<f64>::zeros(shape);
    for (part, &w) in parts.iter().zip(weights.as_slice()) {
        if part.dim() != shape {
            return Err(KernelError::ShapeMismatch {
                expected: shape,
                found: part.dim(),
            });
        }
        out.scaled_add(w, part);
    }
    Ok(out)
}

/// Median of all pairwise Euclidean distances between rows.
pub fn median_pairwise_distance(features: ArrayView2<f64>) -> Result<f64> {
    let n = features.nrows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(squared_distance(features.row(i), features.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return Err(KernelError::DegenerateBandwidth);
    }
    let mid = d.len() / 2;
    let (_, median, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    let median = *median;
    if median > 0.0 {
        Ok(median)
    } else {
        Err(KernelError::DegenerateBandwidth)
    }
}

fn kernel_block(train: ArrayView2<f64>, query: ArrayView2<f64>, spec: &KernelSpec) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((query.nrows(), train.nrows()));
    Zip::from(out.axis_iter_mut(Axis(0)))
        .and(query.axis_iter(Axis(0)))
        .par_for_each(|mut row, q| {
            for (slot, t) in row.iter_mut().zip(train.axis_iter(Axis(0))) {
                *slot = spec.eval(q, t);
            }
        });
    out
}

pub(crate) fn check_finite(features: ArrayView2<f64>) -> Result<()> {
    for ((row, col), v) in features.indexed_iter() {
        if !v.is_finite() {
            return Err(KernelError::NonFinite { row, col });
        }
    }
    Ok(())
}

// Fixed left-to-right accumulation keeps k(a, b) == k(b, a) bitwise and
// independent of memory layout.
fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub(crate) fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| {
        let d = x - y;
        acc + d * d
    })
}
