//! Multiview datasets: validation, CSV/JSON loading, synthetic generators and
//! stratified label masking.
//!
//! A dataset keeps the ground-truth label of every example, labeled or not.
//! Training code only reads labels where `labeled_mask` is set; the remaining
//! labels exist for transductive evaluation.
//!
//! On disk a dataset is a JSON manifest pointing at headerless CSV files:
//!
//! ```json
//! { "views": ["view_0.csv", "view_1.csv"], "labels": "labels.csv",
//!   "mask": "mask.csv", "class_names": ["a", "b"] }
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("invalid manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("row count mismatch: {what} has {found} rows, expected {expected}")]
    RowCountMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in view {view}, row {row}, column {col}")]
    NonFinite { view: usize, row: usize, col: usize },

    #[error("class {class} receives no labeled example at this fraction")]
    EmptyClass { class: u32 },

    #[error("invalid dataset: {0}")]
    Invalid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiviewDataset {
    views: Vec<Array2<f64>>,
    labels: Vec<u32>,
    labeled_mask: Vec<bool>,
    class_names: Option<Vec<String>>,
}

impl MultiviewDataset {
    pub fn new(
        views: Vec<Array2<f64>>,
        labels: Vec<u32>,
        labeled_mask: Vec<bool>,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(DatasetError::Invalid(
                "at least one view is required".into(),
            ));
        }
        let n = views[0].nrows();
        if n == 0 {
            return Err(DatasetError::Invalid("dataset has no rows".into()));
        }
        for (k, v) in views.iter().enumerate() {
            if v.nrows() != n {
                return Err(DatasetError::RowCountMismatch {
                    what: format!("view {k}"),
                    expected: n,
                    found: v.nrows(),
                });
            }
            if v.ncols() == 0 {
                return Err(DatasetError::Invalid(format!("view {k} has no columns")));
            }
            if let Some(((row, col), _)) = v.indexed_iter().find(|(_, x)| !x.is_finite()) {
                return Err(DatasetError::NonFinite { view: k, row, col });
            }
        }
        if labels.len() != n {
            return Err(DatasetError::RowCountMismatch {
                what: "labels".into(),
                expected: n,
                found: labels.len(),
            });
        }
        if labeled_mask.len() != n {
            return Err(DatasetError::RowCountMismatch {
                what: "mask".into(),
                expected: n,
                found: labeled_mask.len(),
            });
        }
        if !labeled_mask.iter().any(|&m| m) {
            return Err(DatasetError::Invalid("no labeled examples".into()));
        }
        Ok(MultiviewDataset {
            views,
            labels,
            labeled_mask,
            class_names,
        })
    }

    /// Dataset with every example labeled.
    pub fn fully_labeled(views: Vec<Array2<f64>>, labels: Vec<u32>) -> Result<Self> {
        let n = labels.len();
        Self::new(views, labels, vec![true; n], None)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn view(&self, k: usize) -> ArrayView2<'_, f64> {
        self.views[k].view()
    }

    pub fn views(&self) -> &[Array2<f64>] {
        &self.views
    }

    /// Ground-truth labels for all examples, including unlabeled ones.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn labeled_mask(&self) -> &[bool] {
        &self.labeled_mask
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled_mask.iter().filter(|&&m| m).count()
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labeled_mask[i]).collect()
    }

    /// Distinct classes over all examples, ascending.
    pub fn classes(&self) -> Vec<u32> {
        self.labels
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Distinct classes among labeled examples, ascending.
    pub fn labeled_classes(&self) -> Vec<u32> {
        self.labeled_indices()
            .into_iter()
            .map(|i| self.labels[i])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn with_mask(&self, labeled_mask: Vec<bool>) -> Result<Self> {
        Self::new(
            self.views.clone(),
            self.labels.clone(),
            labeled_mask,
            self.class_names.clone(),
        )
    }

    /// Copy whose mask labels `round(fraction · n)` examples, stratified so
    /// that every class present keeps at least one labeled example.
    pub fn mask_labeled_fraction(&self, fraction: f64, seed: u64) -> Result<Self> {
        let mask = stratified_mask(&self.labels, fraction, seed)?;
        self.with_mask(mask)
    }
}

fn stratified_mask(labels: &[u32], fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DatasetError::InvalidParameter(format!(
            "labeled fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let n = labels.len();
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        members.entry(c).or_default().push(i);
    }
    let total = (fraction * n as f64).round() as usize;
    let quotas: Vec<f64> = members
        .values()
        .map(|m| total as f64 * m.len() as f64 / n as f64)
        .collect();
    if total < members.len() {
        // The class with the smallest share is the first to go empty.
        let (idx, _) = quotas
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one class");
        let class = *members.keys().nth(idx).expect("index in range");
        return Err(DatasetError::EmptyClass { class });
    }

    let sizes: Vec<usize> = members.values().map(Vec::len).collect();
    let mut alloc: Vec<usize> = quotas
        .iter()
        .zip(&sizes)
        .map(|(q, &s)| (q.floor() as usize).clamp(1, s))
        .collect();
    // Largest-remainder adjustment until the total is exact.
    loop {
        let current: usize = alloc.iter().sum();
        if current == total {
            break;
        }
        let pick = if current < total {
            (0..alloc.len())
                .filter(|&c| alloc[c] < sizes[c])
                .max_by(|&a, &b| {
                    (quotas[a] - alloc[a] as f64)
                        .total_cmp(&(quotas[b] - alloc[b] as f64))
                        .then(b.cmp(&a))
                })
        } else {
            (0..alloc.len()).filter(|&c| alloc[c] > 1).max_by(|&a, &b| {
                (alloc[a] as f64 - quotas[a])
                    .total_cmp(&(alloc[b] as f64 - quotas[b]))
                    .then(b.cmp(&a))
            })
        };
        let c = pick.expect("total lies between class count and n");
        if current < total {
            alloc[c] += 1;
        } else {
            alloc[c] -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    for (idx, take) in members.into_values().zip(alloc) {
        let mut idx = idx;
        idx.shuffle(&mut rng);
        for &i in &idx[..take] {
            mask[i] = true;
        }
    }
    Ok(mask)
}

/// On-disk description of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub views: Vec<PathBuf>,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<MultiviewDataset> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|source| DatasetError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| DatasetError::Manifest {
            path: manifest_path.to_path_buf(),
            message: e.to_string(),
        })?;
    if manifest.views.is_empty() {
        return Err(DatasetError::Manifest {
            path: manifest_path.to_path_buf(),
            message: "`views` must list at least one file".into(),
        });
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };

    let mut views = Vec::with_capacity(manifest.views.len());
    for (k, p) in manifest.views.iter().enumerate() {
        let path = resolve(p);
        let rows = read_csv_rows(&path)?;
        let m = rows_to_matrix(&path, rows)?;
        if let Some(first) = views.first().map(|v: &Array2<f64>| v.nrows()) {
            if m.nrows() != first {
                return Err(DatasetError::RowCountMismatch {
                    what: format!("view {k} ({})", path.display()),
                    expected: first,
                    found: m.nrows(),
                });
            }
        }
        if let Some(((row, col), _)) = m.indexed_iter().find(|(_, x)| !x.is_finite()) {
            return Err(DatasetError::NonFinite { view: k, row, col });
        }
        views.push(m);
    }

    let labels_path = resolve(&manifest.labels);
    let labels: Vec<u32> = read_scalar_column(&labels_path)?;
    let n = labels.len();
    let mask = match &manifest.mask {
        Some(p) => {
            let path = resolve(p);
            let raw: Vec<u8> = read_scalar_column(&path)?;
            raw.into_iter()
                .enumerate()
                .map(|(i, v)| match v {
                    0 => Ok(false),
                    1 => Ok(true),
                    other => Err(DatasetError::Parse {
                        path: path.clone(),
                        line: i + 1,
                        message: format!("mask entries must be 0 or 1, got {other}"),
                    }),
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => vec![true; n],
    };
    MultiviewDataset::new(views, labels, mask, manifest.class_names)
}

/// Write `dataset` as CSV files plus `manifest.json` into `dir`, returning the
/// manifest path.
pub fn write_dataset(dataset: &MultiviewDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut view_files = Vec::new();
    for (k, v) in dataset.views().iter().enumerate() {
        let name = PathBuf::from(format!("view_{k}.csv"));
        let mut out = String::new();
        for row in v.rows() {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        let path = dir.join(&name);
        fs::write(&path, out).map_err(io_err(&path))?;
        view_files.push(name);
    }
    let labels: String = dataset.labels().iter().map(|l| format!("{l}\n")).collect();
    let path = dir.join("labels.csv");
    fs::write(&path, labels).map_err(io_err(&path))?;
    let mask: String = dataset
        .labeled_mask()
        .iter()
        .map(|&m| if m { "1\n" } else { "0\n" })
        .collect();
    let path = dir.join("mask.csv");
    fs::write(&path, mask).map_err(io_err(&path))?;

    let manifest = DatasetManifest {
        views: view_files,
        labels: "labels.csv".into(),
        mask: Some("mask.csv".into()),
        class_names: dataset.class_names().map(<[String]>::to_vec),
        metadata: BTreeMap::new(),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(path)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let record = record.map_err(|e| DatasetError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let row = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>().map_err(|e| DatasetError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("{cell:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn rows_to_matrix(path: &Path, rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return Err(DatasetError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "empty feature file".into(),
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((n, d), flat).expect("csv reader enforces equal row lengths"))
}

fn read_scalar_column<T: std::str::FromStr>(path: &Path) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let mut out = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let parse_err = |message: String| DatasetError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        if record.len() != 1 {
            return Err(parse_err(format!(
                "expected one value, found {}",
                record.len()
            )));
        }
        out.push(
            record[0]
                .parse::<T>()
                .map_err(|e| parse_err(format!("{:?}: {e}", &record[0])))?,
        );
    }
    Ok(out)
}

/// Two interleaving half circles seen through two views.
///
/// View 0 is the 2-D moon coordinate plus Gaussian noise. View 1 is the
/// degree-≤2 monomial lift `(x, y, x², xy, y²)` of the noise-free coordinate
/// plus independent Gaussian noise. Labels are 0 and 1, `n / 2` each, in a
/// seed-dependent order.
pub fn generate_two_moons_multiview(n: usize, noise: f64, seed: u64) -> Result<MultiviewDataset> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(DatasetError::InvalidParameter(format!(
            "two-moons needs an even n >= 4, got {n}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(DatasetError::InvalidParameter(format!(
            "noise must be finite and nonnegative, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut clean = Vec::with_capacity(n);
    for i in 0..n {
        let t = rng.random_range(0.0..std::f64::consts::PI);
        if i < half {
            clean.push(([t.cos(), t.sin()], 0u32));
        } else {
            clean.push(([1.0 - t.cos(), 0.5 - t.sin()], 1u32));
        }
    }
    clean.shuffle(&mut rng);

    let mut gauss = || -> f64 { noise * rng.sample::<f64, _>(StandardNormal) };
    let coords = Array2::from_shape_fn((n, 2), |(i, j)| clean[i].0[j] + gauss());
    let lifted = Array2::from_shape_fn((n, 5), |(i, j)| {
        let [x, y] = clean[i].0;
        let base = match j {
            0 => x,
            1 => y,
            2 => x * x,
            3 => x * y,
            _ => y * y,
        };
        base + gauss()
    });
    let labels = clean.iter().map(|(_, c)| *c).collect();
    MultiviewDataset::new(
        vec![coords, lifted],
        labels,
        vec![true; n],
        Some(vec!["upper".into(), "lower".into()]),
    )
}

/// Points on a random 2-D affine plane inside a higher-dimensional space.
#[derive(Debug, Clone)]
pub struct PlanarEmbedding {
    /// Single-view dataset; label is 1 where the first latent coordinate is
    /// nonnegative.
    pub dataset: MultiviewDataset,
    /// `n × 2` coordinates within the plane.
    pub latent: Array2<f64>,
    pub origin: Array1<f64>,
    /// `ambient_dim × 2`, orthonormal columns.
    pub basis: Array2<f64>,
}

pub fn generate_planar_embedding(
    n: usize,
    ambient_dim: usize,
    seed: u64,
) -> Result<PlanarEmbedding> {
    if ambient_dim < 3 {
        return Err(DatasetError::InvalidParameter(format!(
            "ambient dimension must be at least 3, got {ambient_dim}"
        )));
    }
    if n == 0 {
        return Err(DatasetError::InvalidParameter("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = Array1::from_shape_fn(ambient_dim, |_| rng.sample::<f64, _>(StandardNormal));
    let mut basis = Array2::<f64>::zeros((ambient_dim, 2));
    for c in 0..2 {
        loop {
            let mut v =
                Array1::from_shape_fn(ambient_dim, |_| rng.sample::<f64, _>(StandardNormal));
            for prev in 0..c {
                let p = basis.column(prev).to_owned();
                let proj = p.dot(&v);
                v.scaled_add(-proj, &p);
            }
            let norm = v.dot(&v).sqrt();
            if norm > 1e-6 {
                basis.column_mut(c).assign(&(v / norm));
                break;
            }
        }
    }
    let latent = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
    let points = latent.dot(&basis.t()) + &origin;
    let labels = latent
        .column(0)
        .iter()
        .map(|&u| u32::from(u >= 0.0))
        .collect();
    let dataset = MultiviewDataset::fully_labeled(vec![points], labels)?;
    Ok(PlanarEmbedding {
        dataset,
        latent,
        origin,
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rank;
    use ndarray::{array, Axis};

    #[test]
    fn invariants_enforced() {
        let v = array![[1.0], [2.0]];
        assert!(MultiviewDataset::new(vec![], vec![], vec![], None).is_err());
        assert!(matches!(
            MultiviewDataset::new(
                vec![v.clone(), array![[1.0]]],
                vec![0, 1],
                vec![true; 2],
                None
            ),
            Err(DatasetError::RowCountMismatch { .. })
        ));
        assert!(matches!(
            MultiviewDataset::new(vec![v.clone()], vec![0, 1], vec![false; 2], None),
            Err(DatasetError::Invalid(_))
        ));
        assert!(matches!(
            MultiviewDataset::new(
                vec![array![[1.0], [f64::INFINITY]]],
                vec![0, 1],
                vec![true; 2],
                None
            ),
            Err(DatasetError::NonFinite {
                view: 0,
                row: 1,
                col: 0
            })
        ));
    }

    #[test]
    fn full_fraction_labels_everything() {
        let d = generate_two_moons_multiview(20, 0.1, 1).unwrap();
        let half = d.with_mask((0..20).map(|i| i % 2 == 0).collect()).unwrap();
        let m = half.mask_labeled_fraction(1.0, 3).unwrap();
        assert!(m.labeled_mask().iter().all(|&x| x));
    }

    #[test]
    fn stratified_ten_percent() {
        let labels: Vec<u32> = (0..100).map(|i| (i % 2) as u32).collect();
        let d = MultiviewDataset::fully_labeled(vec![Array2::zeros((100, 1))], labels).unwrap();
        let m = d.mask_labeled_fraction(0.1, 7).unwrap();
        assert_eq!(m.n_labeled(), 10);
        let pos = m
            .labeled_indices()
            .iter()
            .filter(|&&i| d.labels()[i] == 1)
            .count();
        assert_eq!(pos, 5);
        let again = d.mask_labeled_fraction(0.1, 7).unwrap();
        assert_eq!(m.labeled_mask(), again.labeled_mask());
        let other = d.mask_labeled_fraction(0.1, 8).unwrap();
        assert_ne!(m.labeled_mask(), other.labeled_mask());
    }

    #[test]
    fn stratified_keeps_rare_classes() {
        // 18 of class 0, 1 of class 1, 1 of class 2; 10% gives 2 total < 3 classes.
        let mut labels = vec![0u32; 18];
        labels.extend([1, 2]);
        let d = MultiviewDataset::fully_labeled(vec![Array2::zeros((20, 1))], labels).unwrap();
        assert!(matches!(
            d.mask_labeled_fraction(0.1, 0),
            Err(DatasetError::EmptyClass { .. })
        ));
        let m = d.mask_labeled_fraction(0.2, 0).unwrap();
        assert_eq!(m.n_labeled(), 4);
        assert_eq!(m.labeled_classes(), vec![0, 1, 2]);
        assert!(d.mask_labeled_fraction(0.0, 0).is_err());
        assert!(d.mask_labeled_fraction(1.5, 0).is_err());
    }

    #[test]
    fn two_moons_contract() {
        let d = generate_two_moons_multiview(200, 0.1, 3).unwrap();
        assert_eq!(d.n_views(), 2);
        assert_eq!(d.view(0).ncols(), 2);
        assert_eq!(d.view(1).ncols(), 5);
        assert_eq!(d.labels().iter().filter(|&&l| l == 0).count(), 100);
        assert_eq!(d, generate_two_moons_multiview(200, 0.1, 3).unwrap());
        assert_ne!(d, generate_two_moons_multiview(200, 0.1, 4).unwrap());
        assert!(generate_two_moons_multiview(201, 0.1, 3).is_err());
        assert!(generate_two_moons_multiview(2, 0.1, 3).is_err());
    }

    #[test]
    fn noiseless_moons_are_separated() {
        // Every point of one moon is at least 0.3 away from every point of the other.
        let d = generate_two_moons_multiview(200, 0.0, 5).unwrap();
        let x = d.view(0);
        let mut min_gap = f64::INFINITY;
        for i in 0..200 {
            for j in 0..200 {
                if d.labels()[i] != d.labels()[j] {
                    let diff = &x.row(i) - &x.row(j);
                    min_gap = min_gap.min(diff.dot(&diff).sqrt());
                }
            }
        }
        assert!(min_gap > 0.3, "gap {min_gap}");
    }

    #[test]
    fn planar_embedding_lies_on_plane() {
        let p = generate_planar_embedding(100, 5, 11).unwrap();
        let x = p.dataset.view(0);
        let centered = &x - &p.origin;
        let projected = centered.dot(&p.basis).dot(&p.basis.t());
        let residual = (&centered - &projected)
            .mapv(f64::abs)
            .fold(0.0f64, |a, &b| a.max(b));
        assert!(residual <= 1e-12, "residual {residual}");
        let mean = x.mean_axis(Axis(0)).unwrap();
        assert_eq!(rank((&x - &mean).view(), 1e-10), 2);
        assert_eq!(
            p.dataset,
            generate_planar_embedding(100, 5, 11).unwrap().dataset
        );
        assert!(generate_planar_embedding(10, 2, 0).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate_two_moons_multiview(20, 0.2, 9)
            .unwrap()
            .mask_labeled_fraction(0.5, 1)
            .unwrap();
        let manifest = write_dataset(&d, dir.path()).unwrap();
        assert_eq!(load_dataset(&manifest).unwrap(), d);
    }
}
