//! # mhlr
//!
//! Semi-supervised multiview classification with Hessian-regularized kernel
//! logistic regression.
//!
//! Each example is described by `V` views. Every view gets its own Gram
//! matrix `K^k` and its own manifold regularizer `H^j` (a Hessian energy
//! matrix, or a graph Laplacian for the ablation). The learned function is a
//! representer expansion over all labeled *and* unlabeled training points,
//!
//! ```text
//! f(x) = Σ_i α_i Σ_k θ_k K^k(x_i^k, x^k)
//! ```
//!
//! and `α`, the kernel weights `θ` and the regularizer weights `β` are fitted
//! by alternating block minimization of
//!
//! ```text
//! J = mean logistic loss over labeled points
//!   + γ_K αᵀKα + γ_I αᵀKHKα + γ_θ‖θ‖² + γ_β‖β‖²
//! K = Σ θ_k K^k,  H = Σ β_j H^j,  θ, β on the probability simplex
//! ```
//!
//! ## Modules
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`dataset`] | Multiview containers, CSV/JSON loading, synthetic generators, label masking |
//! | [`kernels`] | Gram and cross-kernel matrices, simplex-weighted combination |
//! | [`manifold`] | kNN graphs, graph Laplacians, Hessian energy matrices |
//! | [`optimize`] | Objective, gradients, block solvers and the alternating driver |
//! | [`model`] | Method family, binary and one-vs-rest training, prediction, persistence |
//! | [`eval`] | Average precision, mAP, and the labeled-fraction sweep |
//! | [`linalg`] | Small dense decompositions shared by the builders and tests |

pub mod dataset;
pub mod eval;
pub mod kernels;
pub mod linalg;
pub mod manifold;
pub mod model;
pub mod optimize;

pub use dataset::{DatasetError, MultiviewDataset};
pub use eval::{EvalError, EvalReport};
pub use kernels::{KernelError, KernelSpec, SimplexWeights};
pub use manifold::{ManifoldError, RegularizerMatrix};
pub use model::{BinaryModel, MethodSpec, ModelError, MulticlassModel};
pub use optimize::{Hyperparams, OptimizeError, ProblemInstance, SolverState};
