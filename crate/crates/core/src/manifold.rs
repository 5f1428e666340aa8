//! Manifold regularizers built from k-nearest-neighbor structure.
//!
//! Two builders share one output type:
//!
//! - [`graph_laplacian`]: `L = D − W` over the OR-symmetrized kNN graph.
//!   `fᵀLf = ½ Σ w_ij (f_i − f_j)²`, so only constants are free on a
//!   connected graph.
//! - [`hessian_energy_matrix`]: a sum of local Hessian estimators. For each
//!   point the neighborhood (the point plus its `k` neighbors) is mapped to
//!   local PCA tangent coordinates, a quadratic design `[1 | U | u_a u_b]` is
//!   orthonormalized, and the trailing quadratic columns form the local
//!   estimator `H_i`. `B = Σ H_iᵀ H_i` leaves every function that is affine
//!   in the tangent coordinates unpenalized.

use std::io::{self, Write};

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::squared_distance;
use crate::linalg::right_singular_pairs;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("neighborhood size k={k} out of range for n={n} points (need 1 <= k <= n-1)")]
    NeighborCount { k: usize, n: usize },

    #[error("k={k} too small for a quadratic fit in dimension {dim}: need k >= {required}")]
    TooFewNeighbors {
        k: usize,
        dim: usize,
        required: usize,
    },

    #[error("intrinsic dimension {dim} invalid for a {rows} x {cols} neighborhood")]
    IntrinsicDim {
        dim: usize,
        rows: usize,
        cols: usize,
    },

    #[error("degenerate neighborhood around point {point}: {reason}")]
    DegenerateNeighborhood { point: usize, reason: String },

    #[error("all neighbor distances are zero; heat kernel width undefined")]
    DegenerateGeometry,

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
}

pub type Result<T> = std::result::Result<T, ManifoldError>;

/// Exact k nearest neighbors of every point, self excluded.
///
/// Each list is ordered by ascending distance with ties broken by ascending
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub neighbors: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.neighbors.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    Laplacian,
    Hessian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeWeighting {
    Binary,
    #[default]
    Heat,
}

/// Symmetric PSD matrix penalizing roughness along the data manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerMatrix {
    pub values: Array2<f64>,
    pub kind: RegularizerKind,
    pub neighborhood_size: usize,
    pub intrinsic_dim: Option<usize>,
}

impl RegularizerMatrix {
    /// `fᵀ M f`.
    pub fn energy(&self, f: &ndarray::Array1<f64>) -> f64 {
        f.dot(&self.values.dot(f))
    }

    /// Nonzero entries as `row col value` lines.
    pub fn write_coordinate_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for ((i, j), &v) in self.values.indexed_iter() {
            if v != 0.0 {
                writeln!(out, "{i} {j} {v}")?;
            }
        }
        Ok(())
    }
}

pub fn knn_graph(features: ArrayView2<f64>, k: usize) -> Result<NeighborGraph> {
    let n = features.nrows();
    if k == 0 || k >= n {
        return Err(ManifoldError::NeighborCount { k, n });
    }
    check_finite(features)?;
    let (neighbors, distances): (Vec<_>, Vec<_>) = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = features.row(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(xi, features.row(j)), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter()
                .map(|(d2, j)| (j, d2.sqrt()))
                .unzip::<_, _, Vec<_>, Vec<_>>()
        })
        .unzip();
    Ok(NeighborGraph {
        neighbors,
        distances,
    })
}

/// Unnormalized Laplacian `D − W` of the OR-symmetrized kNN graph.
///
/// Heat weights use `exp(−‖x_i − x_j‖² / (2σ²))` with σ the mean kNN
/// distance over the whole graph.
pub fn graph_laplacian(
    features: ArrayView2<f64>,
    k: usize,
    weighting: EdgeWeighting,
) -> Result<RegularizerMatrix> {
    let graph = knn_graph(features, k)?;
    let n = graph.len();
    let sigma = match weighting {
        EdgeWeighting::Binary => None,
        EdgeWeighting::Heat => {
            let total: f64 = graph.distances.iter().flatten().sum();
            let mean = total / (n * k) as f64;
            if mean <= 0.0 {
                return Err(ManifoldError::DegenerateGeometry);
            }
            Some(mean)
        }
    };
    let mut w = Array2::<f64>::zeros((n, n));
    for (i, (nbrs, dists)) in graph.neighbors.iter().zip(&graph.distances).enumerate() {
        for (&j, &d) in nbrs.iter().zip(dists) {
            let weight = match sigma {
                None => 1.0,
                Some(s) => (-d * d / (2.0 * s * s)).exp(),
            };
            w[[i, j]] = weight;
            w[[j, i]] = weight;
        }
    }
    let mut l = -w;
    for i in 0..n {
        let degree: f64 = -l.row(i).sum();
        l[[i, i]] = degree;
    }
    Ok(RegularizerMatrix {
        values: l,
        kind: RegularizerKind::Laplacian,
        neighborhood_size: k,
        intrinsic_dim: None,
    })
}

/// Coordinates of a neighborhood on its top `intrinsic_dim` principal
/// directions, shape `rows × intrinsic_dim`.
pub fn local_tangent_coordinates(
    neighborhood: ArrayView2<f64>,
    intrinsic_dim: usize,
) -> Result<Array2<f64>> {
    let (rows, cols) = neighborhood.dim();
    if intrinsic_dim == 0 || intrinsic_dim > rows.min(cols) {
        return Err(ManifoldError::IntrinsicDim {
            dim: intrinsic_dim,
            rows,
            cols,
        });
    }
    let mean = neighborhood
        .mean_axis(Axis(0))
        .expect("nonempty neighborhood");
    let centered = &neighborhood - &mean;
    let (singular, directions) = right_singular_pairs(centered.view());
    let top = singular[0];
    let cutoff = singular.get(intrinsic_dim - 1).copied().unwrap_or(0.0);
    if top == 0.0 || cutoff <= 1e-10 * top {
        return Err(ManifoldError::DegenerateNeighborhood {
            point: 0,
            reason: format!("rank below intrinsic dimension {intrinsic_dim}"),
        });
    }
    Ok(centered.dot(&directions.slice(s![.., ..intrinsic_dim])))
}

/// Number of distinct second-order monomials in `d` variables.
pub fn quadratic_terms(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Local Hessian estimator `H_i` (shape `d(d+1)/2 × m`) for a neighborhood
/// given in tangent coordinates (shape `m × d`).
///
/// Rows of the result are the orthonormalized quadratic columns of
/// `[1 | U | u_a u_b]`, so `H_i g = 0` for any `g` affine in `U`.
pub fn local_hessian_estimator(tangent: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (m, d) = tangent.dim();
    let r = quadratic_terms(d);
    let width = 1 + d + r;
    if m < width {
        return Err(ManifoldError::DegenerateNeighborhood {
            point: 0,
            reason: format!("{m} points cannot determine {width} fit coefficients"),
        });
    }
    let mut design = Array2::<f64>::zeros((m, width));
    design.column_mut(0).fill(1.0);
    design.slice_mut(s![.., 1..=d]).assign(&tangent);
    let mut col = 1 + d;
    for a in 0..d {
        for b in a..d {
            let prod = &tangent.column(a) * &tangent.column(b);
            design.column_mut(col).assign(&prod);
            col += 1;
        }
    }

    // Modified Gram-Schmidt with one re-orthogonalization pass.
    for j in 0..width {
        let original = design.column(j).dot(&design.column(j)).sqrt();
        for _pass in 0..2 {
            for q in 0..j {
                let proj = design.column(q).dot(&design.column(j));
                let qcol = design.column(q).to_owned();
                design.column_mut(j).scaled_add(-proj, &qcol);
            }
        }
        let norm = design.column(j).dot(&design.column(j)).sqrt();
        if original == 0.0 || norm < 1e-10 * original {
            return Err(ManifoldError::DegenerateNeighborhood {
                point: 0,
                reason: format!("fit column {j} is linearly dependent on earlier columns"),
            });
        }
        design.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(design.slice(s![.., (1 + d)..]).t().to_owned())
}

/// Hessian energy matrix `B = Σ_i H_iᵀ H_i` over all kNN neighborhoods.
pub fn hessian_energy_matrix(
    features: ArrayView2<f64>,
    k: usize,
    intrinsic_dim: usize,
) -> Result<RegularizerMatrix> {
    let required = 1 + intrinsic_dim + quadratic_terms(intrinsic_dim);
    if k < required {
        return Err(ManifoldError::TooFewNeighbors {
            k,
            dim: intrinsic_dim,
            required,
        });
    }
    let graph = knn_graph(features, k)?;
    let n = graph.len();

    let blocks: Vec<Result<(Vec<usize>, Array2<f64>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut idx = Vec::with_capacity(k + 1);
            idx.push(i);
            idx.extend_from_slice(&graph.neighbors[i]);
            let local = features.select(Axis(0), &idx);
            let with_point = |e: ManifoldError| match e {
                ManifoldError::DegenerateNeighborhood { reason, .. } => {
                    ManifoldError::DegenerateNeighborhood { point: i, reason }
                }
                other => other,
            };
            let tangent =
                local_tangent_coordinates(local.view(), intrinsic_dim).map_err(with_point)?;
            let h = local_hessian_estimator(tangent.view()).map_err(with_point)?;
            Ok((idx, gram_of_columns(h.view())))
        })
        .collect();

    // Accumulate in point order so the result does not depend on scheduling.
    let mut b = Array2::<f64>::zeros((n, n));
    for block in blocks {
        let (idx, g) = block?;
        for (a, &ia) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate() {
                b[[ia, ic]] += g[[a, c]];
            }
        }
    }
    Ok(RegularizerMatrix {
        values: b,
        kind: RegularizerKind::Hessian,
        neighborhood_size: k,
        intrinsic_dim: Some(intrinsic_dim),
    })
}

/// `HᵀH`, filled so that the result is exactly symmetric.
fn gram_of_columns(h: ArrayView2<f64>) -> Array2<f64> {
    let m = h.ncols();
    let mut g = Array2::<f64>::zeros((m, m));
    for a in 0..m {
        for c in a..m {
            let v = h
                .column(a)
                .iter()
                .zip(h.column(c).iter())
                .fold(0.0, |acc, (x, y)| acc + x * y);
            g[[a, c]] = v;
            g[[c, a]] = v;
        }
    }
    g
}

fn check_finite(features: ArrayView2<f64>) -> Result<()> {
    for ((row, col), v) in features.indexed_iter() {
        if !v.is_finite() {
            return Err(ManifoldError::NonFinite { row, col });
        }
    }
    Ok(())
}
