//! Method family, binary and one-vs-rest training, prediction and model files.
//!
//! A [`MethodSpec`] picks a regularizer (none, Laplacian, Hessian) and a view
//! mode (one view, all views concatenated into one feature vector, or true
//! multiview with learned kernel and regularizer weights). The nine methods
//! compared in the evaluation protocol are available as presets:
//!
//! | preset | regularizer | views |
//! |--------|-------------|-------|
//! | `VisF` / `LapVF` / `HesVF` | none / laplacian / hessian | view 0 |
//! | `TagF` / `LapTag` / `HesTag` | none / laplacian / hessian | view 1 |
//! | `mCLR` | none | concatenated |
//! | `mLLR` / `mHLR` | laplacian / hessian | multiview |

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{DatasetError, MultiviewDataset};
use crate::kernels::{
    combine_matrices, cross_kernel, gram_matrix, KernelError, KernelSpec, SimplexWeights,
};
use crate::manifold::{graph_laplacian, hessian_energy_matrix, EdgeWeighting, ManifoldError};
use crate::optimize::{
    alternate, sigmoid, Hyperparams, OptimizeError, ProblemInstance, Termination,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_MAGIC: &str = "mhlr-model";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error(transparent)]
    Manifold(#[from] ManifoldError),

    #[error(transparent)]
    Optimize(#[from] OptimizeError),

    #[error("class {class} has labeled examples but no other class does")]
    OneClass { class: u32 },

    #[error("class {class} has no labeled examples")]
    MissingClass { class: u32 },

    #[error("need at least two labeled classes, found {0}")]
    TooFewClasses(usize),

    #[error("view index {index} out of range for {views} views")]
    ViewIndex { index: usize, views: usize },

    #[error("{0} kernel specs given for {1} views")]
    KernelCount(usize, usize),

    #[error("query view {view} has {found} columns, model expects {expected}")]
    DimensionMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },

    #[error("query has {found} views, model expects {expected}")]
    ViewCount { expected: usize, found: usize },

    #[error("unknown method preset {0:?}")]
    UnknownPreset(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("model format version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    None,
    Laplacian,
    Hessian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewMode {
    Single(usize),
    Concatenated,
    Multiview,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldParams {
    pub k_hessian: usize,
    pub k_laplacian: usize,
    pub intrinsic_dim: usize,
    pub weighting: EdgeWeighting,
}

impl Default for ManifoldParams {
    fn default() -> Self {
        ManifoldParams {
            k_hessian: 15,
            k_laplacian: 10,
            intrinsic_dim: 2,
            weighting: EdgeWeighting::Heat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub regularizer: Regularizer,
    pub view_mode: ViewMode,
    /// One spec per view, or a single spec shared by all views. Concatenated
    /// mode uses the first.
    pub kernels: Vec<KernelSpec>,
    pub manifold: ManifoldParams,
    pub hyper: Hyperparams,
}

impl Default for MethodSpec {
    fn default() -> Self {
        MethodSpec {
            regularizer: Regularizer::Hessian,
            view_mode: ViewMode::Multiview,
            kernels: vec![KernelSpec::default()],
            manifold: ManifoldParams::default(),
            hyper: Hyperparams::default(),
        }
    }
}

impl MethodSpec {
    pub const PRESETS: [&'static str; 9] = [
        "VisF", "LapVF", "HesVF", "TagF", "LapTag", "HesTag", "mCLR", "mLLR", "mHLR",
    ];

    /// Preset by name, keeping kernels, manifold parameters and
    /// hyperparameters from `base`.
    pub fn preset(name: &str, base: &MethodSpec) -> Result<MethodSpec> {
        let (regularizer, view_mode) = match name {
            "VisF" => (Regularizer::None, ViewMode::Single(0)),
            "LapVF" => (Regularizer::Laplacian, ViewMode::Single(0)),
            "HesVF" => (Regularizer::Hessian, ViewMode::Single(0)),
            "TagF" => (Regularizer::None, ViewMode::Single(1)),
            "LapTag" => (Regularizer::Laplacian, ViewMode::Single(1)),
            "HesTag" => (Regularizer::Hessian, ViewMode::Single(1)),
            "mCLR" => (Regularizer::None, ViewMode::Concatenated),
            "mLLR" => (Regularizer::Laplacian, ViewMode::Multiview),
            "mHLR" => (Regularizer::Hessian, ViewMode::Multiview),
            other => return Err(ModelError::UnknownPreset(other.to_string())),
        };
        Ok(MethodSpec {
            regularizer,
            view_mode,
            ..base.clone()
        })
    }

    /// Preset name when the spec matches one, otherwise a descriptive label.
    pub fn label(&self) -> String {
        let reg = match self.regularizer {
            Regularizer::None => 0,
            Regularizer::Laplacian => 1,
            Regularizer::Hessian => 2,
        };
        match self.view_mode {
            ViewMode::Single(v @ (0 | 1)) => Self::PRESETS[3 * v + reg].to_string(),
            ViewMode::Concatenated if reg == 0 => "mCLR".into(),
            ViewMode::Multiview if reg == 1 => "mLLR".into(),
            ViewMode::Multiview if reg == 2 => "mHLR".into(),
            mode => {
                let reg = ["none", "laplacian", "hessian"][reg];
                match mode {
                    ViewMode::Single(v) => format!("{reg}-view{v}"),
                    ViewMode::Concatenated => format!("{reg}-concatenated"),
                    ViewMode::Multiview => format!("{reg}-multiview"),
                }
            }
        }
    }

    fn kernel_for(&self, view: usize) -> KernelSpec {
        match self.kernels.len() {
            1 => self.kernels[0],
            _ => self.kernels[view],
        }
    }

    /// Effective feature matrices for this method, one per kernel.
    fn select_views(&self, views: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
        let v = views.len();
        if self.kernels.is_empty() || (self.kernels.len() != 1 && self.kernels.len() != v) {
            return Err(ModelError::KernelCount(self.kernels.len(), v));
        }
        Ok(match self.view_mode {
            ViewMode::Single(k) if k >= v => {
                return Err(ModelError::ViewIndex { index: k, views: v })
            }
            ViewMode::Single(k) => vec![views[k].clone()],
            ViewMode::Concatenated => {
                let parts: Vec<ArrayView2<f64>> = views.iter().map(|v| v.view()).collect();
                vec![concatenate(Axis(1), &parts).expect("views share a row count")]
            }
            ViewMode::Multiview => views.to_vec(),
        })
    }

    fn selected_kernels(&self) -> impl Fn(usize) -> KernelSpec + '_ {
        move |effective| match self.view_mode {
            ViewMode::Single(k) => self.kernel_for(k),
            ViewMode::Concatenated => self.kernels[0],
            ViewMode::Multiview => self.kernel_for(effective),
        }
    }

    fn effective_hyper(&self) -> Hyperparams {
        match self.regularizer {
            Regularizer::None => Hyperparams {
                gamma_i: 0.0,
                ..self.hyper
            },
            _ => self.hyper,
        }
    }
}

/// Gram and regularizer matrices for one dataset under one method.
///
/// Built once and shared by every binary problem of a one-vs-rest model.
#[derive(Debug, Clone)]
pub struct TrainingMatrices {
    pub features: Vec<Array2<f64>>,
    pub kernels: Vec<KernelSpec>,
    pub grams: Vec<Array2<f64>>,
    pub regularizers: Vec<Array2<f64>>,
}

impl TrainingMatrices {
    pub fn build(dataset: &MultiviewDataset, method: &MethodSpec) -> Result<Self> {
        method.hyper.validate()?;
        let features = method.select_views(dataset.views())?;
        let kernel_of = method.selected_kernels();
        let mut kernels = Vec::with_capacity(features.len());
        let mut grams = Vec::with_capacity(features.len());
        for (k, x) in features.iter().enumerate() {
            let spec = kernel_of(k).resolve(x.view())?;
            grams.push(gram_matrix(x.view(), &spec)?.into_inner());
            kernels.push(spec);
        }
        let n = dataset.n();
        let mp = method.manifold;
        let regularizers = features
            .iter()
            .map(|x| -> Result<Array2<f64>> {
                Ok(match method.regularizer {
                    Regularizer::None => Array2::zeros((n, n)),
                    Regularizer::Laplacian => {
                        graph_laplacian(x.view(), mp.k_laplacian, mp.weighting)?.values
                    }
                    Regularizer::Hessian => {
                        hessian_energy_matrix(x.view(), mp.k_hessian, mp.intrinsic_dim)?.values
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainingMatrices {
            features,
            kernels,
            grams,
            regularizers,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub alpha: Array1<f64>,
    pub theta: SimplexWeights,
    pub beta: SimplexWeights,
    pub method: MethodSpec,
    /// Kernel specs with data-dependent parameters fixed at training time.
    pub kernels: Vec<KernelSpec>,
    /// Training features per effective view: the anchors of the expansion.
    pub train_features: Vec<Array2<f64>>,
    pub positive_class: u32,
    pub objective_trace: Vec<f64>,
    pub termination: Termination,
}

impl BinaryModel {
    /// `f(x) = Σ_i α_i Σ_k θ_k K^k(x_i, x)` for every query row.
    ///
    /// `query` holds the raw dataset views; the model applies its own view
    /// selection.
    pub fn decision_values(&self, query: &[Array2<f64>]) -> Result<Array1<f64>> {
        let selected = self.select_query(query)?;
        let cross = selected
            .iter()
            .zip(&self.train_features)
            .zip(&self.kernels)
            .map(|((q, t), spec)| cross_kernel(t.view(), q.view(), spec))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let parts: Vec<&Array2<f64>> = cross.iter().collect();
        Ok(combine_matrices(&parts, &self.theta)?.dot(&self.alpha))
    }

    /// `σ(f(x))`, kept strictly inside (0, 1).
    pub fn predict_proba(&self, query: &[Array2<f64>]) -> Result<Array1<f64>> {
        Ok(self.decision_values(query)?.mapv(probability))
    }

    fn select_query(&self, query: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
        let selected = self.method.select_views(query)?;
        if selected.len() != self.train_features.len() {
            return Err(ModelError::ViewCount {
                expected: self.train_features.len(),
                found: selected.len(),
            });
        }
        for (view, (q, t)) in selected.iter().zip(&self.train_features).enumerate() {
            if q.ncols() != t.ncols() {
                return Err(ModelError::DimensionMismatch {
                    view,
                    expected: t.ncols(),
                    found: q.ncols(),
                });
            }
        }
        Ok(selected)
    }
}

pub(crate) fn probability(f: f64) -> f64 {
    const UPPER: f64 = 1.0 - f64::EPSILON / 2.0;
    sigmoid(f).clamp(f64::MIN_POSITIVE, UPPER)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    pub classes: Vec<u32>,
    pub binaries: Vec<BinaryModel>,
    /// Share of training points that were labeled.
    pub labeled_fraction: f64,
}

impl MulticlassModel {
    /// `m × C` matrix of per-class probabilities, columns in `classes` order.
    pub fn predict_proba(&self, query: &[Array2<f64>]) -> Result<Array2<f64>> {
        let columns = self
            .binaries
            .iter()
            .map(|b| b.predict_proba(query))
            .collect::<Result<Vec<_>>>()?;
        let m = columns.first().map_or(0, Array1::len);
        Ok(Array2::from_shape_fn((m, columns.len()), |(i, c)| {
            columns[c][i]
        }))
    }

    /// Highest-probability class per row; ties go to the earlier class.
    pub fn predict(&self, query: &[Array2<f64>]) -> Result<Vec<u32>> {
        let p = self.predict_proba(query)?;
        Ok(p.rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

pub fn train_binary(
    dataset: &MultiviewDataset,
    positive_class: u32,
    method: &MethodSpec,
) -> Result<BinaryModel> {
    check_two_sided(dataset, positive_class)?;
    let matrices = TrainingMatrices::build(dataset, method)?;
    train_binary_with(&matrices, dataset, positive_class, method)
}

/// Binary training against prebuilt matrices.
pub fn train_binary_with(
    matrices: &TrainingMatrices,
    dataset: &MultiviewDataset,
    positive_class: u32,
    method: &MethodSpec,
) -> Result<BinaryModel> {
    check_two_sided(dataset, positive_class)?;
    let labeled = dataset.labeled_indices();
    let targets = labeled
        .iter()
        .map(|&i| {
            if dataset.labels()[i] == positive_class {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let problem = ProblemInstance::new(
        &matrices.grams,
        &matrices.regularizers,
        labeled,
        targets,
        method.effective_hyper(),
    )?;
    let state = alternate(&problem, None)?;
    Ok(BinaryModel {
        alpha: state.alpha,
        theta: state.theta,
        beta: state.beta,
        method: method.clone(),
        kernels: matrices.kernels.clone(),
        train_features: matrices.features.clone(),
        positive_class,
        objective_trace: state.objective_trace,
        termination: state.termination,
    })
}

fn check_two_sided(dataset: &MultiviewDataset, positive_class: u32) -> Result<()> {
    let classes = dataset.labeled_classes();
    if !classes.contains(&positive_class) {
        return Err(ModelError::MissingClass {
            class: positive_class,
        });
    }
    if classes.len() < 2 {
        return Err(ModelError::OneClass {
            class: positive_class,
        });
    }
    Ok(())
}

/// One binary model per class (that class against the rest), sharing one set
/// of Gram and regularizer matrices.
pub fn train_one_vs_rest(
    dataset: &MultiviewDataset,
    method: &MethodSpec,
) -> Result<MulticlassModel> {
    let labeled = dataset.labeled_classes();
    if let Some(&class) = dataset.classes().iter().find(|c| !labeled.contains(c)) {
        return Err(ModelError::MissingClass { class });
    }
    if labeled.len() < 2 {
        return Err(ModelError::TooFewClasses(labeled.len()));
    }
    let matrices = TrainingMatrices::build(dataset, method)?;
    let binaries = labeled
        .par_iter()
        .map(|&c| train_binary_with(&matrices, dataset, c, method))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassModel {
        classes: labeled,
        binaries,
        labeled_fraction: dataset.n_labeled() as f64 / dataset.n() as f64,
    })
}

/// Write `model` as a versioned, checksummed file.
///
/// The first line is `mhlr-model <version> <sha256 of payload> <payload
/// bytes>`; the JSON payload follows.
pub fn save_model<T: Serialize>(model: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let payload = serde_json::to_vec(model).map_err(|e| ModelError::Corrupt(e.to_string()))?;
    let digest = hex::encode(Sha256::digest(&payload));
    let mut bytes = format!(
        "{MODEL_MAGIC} {MODEL_FORMAT_VERSION} {digest} {}\n",
        payload.len()
    )
    .into_bytes();
    bytes.extend_from_slice(&payload);
    fs::write(path, bytes).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| ModelError::Corrupt("missing header".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| ModelError::Corrupt("header is not text".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    let [magic, version, digest, len] = fields[..] else {
        return Err(ModelError::Corrupt(format!("malformed header {header:?}")));
    };
    if magic != MODEL_MAGIC {
        return Err(ModelError::Corrupt(format!(
            "not a model file (magic {magic:?})"
        )));
    }
    let version: u32 = version
        .parse()
        .map_err(|_| ModelError::Corrupt(format!("bad version field {version:?}")))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(ModelError::Version {
            expected: MODEL_FORMAT_VERSION,
            found: version,
        });
    }
    let len: usize = len
        .parse()
        .map_err(|_| ModelError::Corrupt(format!("bad length field {len:?}")))?;
    let payload = &bytes[newline + 1..];
    if payload.len() != len {
        return Err(ModelError::Corrupt(format!(
            "payload is {} bytes, header says {len}",
            payload.len()
        )));
    }
    if hex::encode(Sha256::digest(payload)) != digest {
        return Err(ModelError::Corrupt("checksum mismatch".into()));
    }
    serde_json::from_slice(payload).map_err(|e| ModelError::Corrupt(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_two_moons_multiview;

    fn quick_method() -> MethodSpec {
        MethodSpec {
            hyper: Hyperparams {
                outer_max_iter: 5,
                ..Hyperparams::default()
            },
            manifold: ManifoldParams {
                k_hessian: 8,
                k_laplacian: 5,
                ..ManifoldParams::default()
            },
            ..MethodSpec::default()
        }
    }

    #[test]
    fn preset_labels_round_trip() {
        let base = MethodSpec::default();
        for name in MethodSpec::PRESETS {
            assert_eq!(MethodSpec::preset(name, &base).unwrap().label(), name);
        }
        assert!(MethodSpec::preset("nope", &base).is_err());
        let odd = MethodSpec {
            view_mode: ViewMode::Single(2),
            ..base.clone()
        };
        assert_eq!(odd.label(), "hessian-view2");
    }

    #[test]
    fn probability_is_strictly_inside_unit_interval() {
        for f in [-1e4, -50.0, 0.0, 50.0, 1e4] {
            let p = probability(f);
            assert!(p > 0.0 && p < 1.0);
        }
        assert_eq!(probability(0.0), 0.5);
        assert!(probability(1.0) < probability(2.0));
    }

    #[test]
    fn training_rejects_bad_labels() {
        let d = generate_two_moons_multiview(20, 0.1, 1).unwrap();
        let only_zero: Vec<bool> = d.labels().iter().map(|&l| l == 0).collect();
        let d0 = d.with_mask(only_zero).unwrap();
        assert!(matches!(
            train_binary(&d0, 0, &quick_method()),
            Err(ModelError::OneClass { .. })
        ));
        assert!(matches!(
            train_one_vs_rest(&d0, &quick_method()),
            Err(ModelError::MissingClass { class: 1 })
        ));
        assert!(matches!(
            train_binary(&d0, 1, &quick_method()),
            Err(ModelError::MissingClass { class: 1 })
        ));
    }

    #[test]
    fn view_selection_errors() {
        let d = generate_two_moons_multiview(20, 0.1, 1).unwrap();
        let m = MethodSpec {
            view_mode: ViewMode::Single(3),
            ..quick_method()
        };
        assert!(matches!(
            train_binary(&d, 0, &m),
            Err(ModelError::ViewIndex { index: 3, views: 2 })
        ));
        let m = MethodSpec {
            kernels: vec![KernelSpec::Linear; 3],
            ..quick_method()
        };
        assert!(matches!(
            train_binary(&d, 0, &m),
            Err(ModelError::KernelCount(3, 2))
        ));
    }

    #[test]
    fn decision_values_on_training_set_equal_k_alpha() {
        let d = generate_two_moons_multiview(30, 0.1, 2)
            .unwrap()
            .mask_labeled_fraction(0.3, 1)
            .unwrap();
        let method = quick_method();
        let mats = TrainingMatrices::build(&d, &method).unwrap();
        let model = train_binary_with(&mats, &d, 1, &method).unwrap();
        let parts: Vec<&Array2<f64>> = mats.grams.iter().collect();
        let k = combine_matrices(&parts, &model.theta).unwrap();
        assert_eq!(
            model.decision_values(d.views()).unwrap(),
            k.dot(&model.alpha)
        );

        let bad = vec![d.views()[0].clone(), Array2::zeros((3, 4))];
        assert!(matches!(
            model.decision_values(&bad),
            Err(ModelError::DimensionMismatch {
                view: 1,
                expected: 5,
                found: 4
            })
        ));
    }
}
