//! Alternating minimization of the multiview objective over `α`, `θ`, `β`.
//!
//! With `K = Σ θ_k K^k`, `H = Σ β_j H^j` and labeled rows `L`,
//!
//! ```text
//! J(α, θ, β) = (1/l) Σ_{i∈L} [log(1 + e^{z_i}) − y_i z_i],   z = Kα
//!            + γ_K αᵀKα + γ_I (Kα)ᵀH(Kα) + γ_θ‖θ‖² + γ_β‖β‖²
//! ```
//!
//! with `y_i ∈ {0, 1}`. Blocks are updated in the order α (nonlinear
//! conjugate gradient), θ (projected gradient), β (closed form), and every
//! block update is monotone, so the outer objective trace never increases.
//!
//! No `n × n` product beyond the weighted sums `K` and `H` is ever formed:
//! the Hessian term only enters through matrix-vector products `H (Kα)`.

mod alpha;
mod simplex;
mod theta;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{combine_matrices, SimplexWeights};

pub use alpha::{solve_alpha, AlphaSolution};
pub use simplex::project_simplex;
pub use theta::solve_theta;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid hyperparameter: {0}")]
    Hyper(String),

    #[error("invalid labels: {0}")]
    Labels(String),

    #[error("weights are not on the simplex: {0}")]
    NotSimplex(String),

    #[error("{block} line search made no progress after {iterations} iterations")]
    Stall {
        block: &'static str,
        iterations: usize,
        /// Last accepted iterate of the stalled block.
        iterate: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, OptimizeError>;

/// Regularization weights and solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// RKHS norm weight, `> 0`.
    pub gamma_k: f64,
    /// Manifold term weight, `≥ 0`.
    pub gamma_i: f64,
    pub gamma_theta: f64,
    pub gamma_beta: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma_k: 1e-7,
            gamma_i: 1e-5,
            gamma_theta: 0.1,
            gamma_beta: 0.1,
            cg_tol: 1e-7,
            cg_max_iter: 500,
            outer_tol: 1e-5,
            outer_max_iter: 100,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(OptimizeError::Hyper(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("gamma_k", self.gamma_k)?;
        positive("gamma_theta", self.gamma_theta)?;
        positive("gamma_beta", self.gamma_beta)?;
        positive("cg_tol", self.cg_tol)?;
        positive("outer_tol", self.outer_tol)?;
        if !(self.gamma_i.is_finite() && self.gamma_i >= 0.0) {
            return Err(OptimizeError::Hyper(format!(
                "gamma_i must be nonnegative, got {}",
                self.gamma_i
            )));
        }
        if self.cg_max_iter == 0 || self.outer_max_iter == 0 {
            return Err(OptimizeError::Hyper(
                "iteration caps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Matrices, labels and weights defining one binary problem.
///
/// Borrowing the matrices lets one-vs-rest training share them across
/// classes.
#[derive(Debug, Clone)]
pub struct ProblemInstance<'a> {
    grams: &'a [Array2<f64>],
    regularizers: &'a [Array2<f64>],
    labeled: Vec<usize>,
    targets: Vec<f64>,
    hyper: Hyperparams,
}

impl<'a> ProblemInstance<'a> {
    /// `labeled[i]` indexes the training point whose target is `targets[i]`,
    /// which must be 0 or 1.
    pub fn new(
        grams: &'a [Array2<f64>],
        regularizers: &'a [Array2<f64>],
        labeled: Vec<usize>,
        targets: Vec<f64>,
        hyper: Hyperparams,
    ) -> Result<Self> {
        hyper.validate()?;
        if grams.is_empty() || regularizers.is_empty() {
            return Err(OptimizeError::Shape(
                "need at least one kernel and one regularizer".into(),
            ));
        }
        let n = grams[0].nrows();
        for (what, m) in grams
            .iter()
            .map(|m| ("kernel", m))
            .chain(regularizers.iter().map(|m| ("regularizer", m)))
        {
            if m.dim() != (n, n) {
                return Err(OptimizeError::Shape(format!(
                    "{what} matrix is {:?}, expected ({n}, {n})",
                    m.dim()
                )));
            }
        }
        if labeled.is_empty() {
            return Err(OptimizeError::Labels("no labeled examples".into()));
        }
        if labeled.len() != targets.len() {
            return Err(OptimizeError::Labels(format!(
                "{} labeled indices but {} targets",
                labeled.len(),
                targets.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &labeled {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(OptimizeError::Labels(format!(
                    "labeled index {i} is out of range or repeated"
                )));
            }
        }
        if let Some(t) = targets.iter().find(|&&t| t != 0.0 && t != 1.0) {
            return Err(OptimizeError::Labels(format!(
                "targets must be 0 or 1, got {t}"
            )));
        }
        Ok(ProblemInstance {
            grams,
            regularizers,
            labeled,
            targets,
            hyper,
        })
    }

    pub fn n(&self) -> usize {
        self.grams[0].nrows()
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.len()
    }

    pub fn n_kernels(&self) -> usize {
        self.grams.len()
    }

    pub fn n_regularizers(&self) -> usize {
        self.regularizers.len()
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn grams(&self) -> &[Array2<f64>] {
        self.grams
    }

    pub fn regularizers(&self) -> &[Array2<f64>] {
        self.regularizers
    }

    pub fn combined_kernel(&self, theta: &SimplexWeights) -> Result<Array2<f64>> {
        let parts: Vec<&Array2<f64>> = self.grams.iter().collect();
        combine_matrices(&parts, theta).map_err(|e| OptimizeError::Shape(e.to_string()))
    }

    pub fn combined_regularizer(&self, beta: &SimplexWeights) -> Result<Array2<f64>> {
        let parts: Vec<&Array2<f64>> = self.regularizers.iter().collect();
        combine_matrices(&parts, beta).map_err(|e| OptimizeError::Shape(e.to_string()))
    }

    fn check(
        &self,
        alpha: &Array1<f64>,
        theta: &SimplexWeights,
        beta: &SimplexWeights,
    ) -> Result<()> {
        if alpha.len() != self.n() {
            return Err(OptimizeError::Shape(format!(
                "alpha has length {}, expected {}",
                alpha.len(),
                self.n()
            )));
        }
        if theta.len() != self.n_kernels() {
            return Err(OptimizeError::NotSimplex(format!(
                "theta has {} entries for {} kernels",
                theta.len(),
                self.n_kernels()
            )));
        }
        if beta.len() != self.n_regularizers() {
            return Err(OptimizeError::NotSimplex(format!(
                "beta has {} entries for {} regularizers",
                beta.len(),
                self.n_regularizers()
            )));
        }
        Ok(())
    }

    /// Mean logistic loss over labeled points for scores `z` (length n).
    pub(crate) fn loss(&self, z: &Array1<f64>) -> f64 {
        let sum: f64 = self
            .labeled
            .iter()
            .zip(&self.targets)
            .map(|(&i, &y)| softplus(z[i]) - y * z[i])
            .sum();
        sum / self.labeled.len() as f64
    }

    /// `(σ(z_i) − y_i) / l` on labeled rows, zero elsewhere.
    pub(crate) fn loss_residual(&self, z: &Array1<f64>) -> Array1<f64> {
        let l = self.labeled.len() as f64;
        let mut r = Array1::zeros(self.n());
        for (&i, &y) in self.labeled.iter().zip(&self.targets) {
            r[i] = (sigmoid(z[i]) - y) / l;
        }
        r
    }

    fn weight_penalty(&self, theta: &SimplexWeights, beta: &SimplexWeights) -> f64 {
        self.hyper.gamma_theta * theta.squared_norm() + self.hyper.gamma_beta * beta.squared_norm()
    }
}

/// Full objective `J(α, θ, β)`.
pub fn objective(
    problem: &ProblemInstance,
    alpha: &Array1<f64>,
    theta: &SimplexWeights,
    beta: &SimplexWeights,
) -> Result<f64> {
    problem.check(alpha, theta, beta)?;
    let k = problem.combined_kernel(theta)?;
    let h = problem.combined_regularizer(beta)?;
    let ka = k.dot(alpha);
    let hka = h.dot(&ka);
    let hp = problem.hyper;
    Ok(problem.loss(&ka)
        + hp.gamma_k * alpha.dot(&ka)
        + hp.gamma_i * ka.dot(&hka)
        + problem.weight_penalty(theta, beta))
}

/// `∇_α J = K (r + 2γ_K α + 2γ_I H K α)` with `r` the loss residual; uses
/// the symmetry of `K` and `H`.
pub fn gradient_alpha(
    problem: &ProblemInstance,
    alpha: &Array1<f64>,
    theta: &SimplexWeights,
    beta: &SimplexWeights,
) -> Result<Array1<f64>> {
    problem.check(alpha, theta, beta)?;
    let k = problem.combined_kernel(theta)?;
    let h = problem.combined_regularizer(beta)?;
    let ka = k.dot(alpha);
    let hka = h.dot(&ka);
    let hp = problem.hyper;
    let mut inner = problem.loss_residual(&ka);
    inner.scaled_add(2.0 * hp.gamma_k, alpha);
    inner.scaled_add(2.0 * hp.gamma_i, &hka);
    Ok(k.dot(&inner))
}

/// Partial derivatives of `J` in each `θ_k`, treating `θ` as unconstrained.
pub fn gradient_theta(
    problem: &ProblemInstance,
    alpha: &Array1<f64>,
    theta: &SimplexWeights,
    beta: &SimplexWeights,
) -> Result<Array1<f64>> {
    problem.check(alpha, theta, beta)?;
    let k = problem.combined_kernel(theta)?;
    let h = problem.combined_regularizer(beta)?;
    let ka = k.dot(alpha);
    let hka = h.dot(&ka);
    let r = problem.loss_residual(&ka);
    let hp = problem.hyper;
    Ok(problem
        .grams
        .iter()
        .zip(theta.as_slice())
        .map(|(gram, &w)| {
            let a = gram.dot(alpha);
            r.dot(&a)
                + hp.gamma_k * alpha.dot(&a)
                + 2.0 * hp.gamma_i * hka.dot(&a)
                + 2.0 * hp.gamma_theta * w
        })
        .collect())
}

/// Minimizer of `γ_I Σ β_j c_j + γ_β ‖β‖²` over the simplex.
pub fn beta_closed_form(costs: &[f64], gamma_i: f64, gamma_beta: f64) -> SimplexWeights {
    let scaled: Vec<f64> = costs
        .iter()
        .map(|&c| -gamma_i * c / (2.0 * gamma_beta))
        .collect();
    project_simplex(&scaled)
}

/// β block: closed form with `c_j = (Kα)ᵀ H^j (Kα)`.
pub fn solve_beta(
    problem: &ProblemInstance,
    alpha: &Array1<f64>,
    theta: &SimplexWeights,
) -> Result<SimplexWeights> {
    let beta0 = SimplexWeights::uniform(problem.n_regularizers());
    problem.check(alpha, theta, &beta0)?;
    let ka = problem.combined_kernel(theta)?.dot(alpha);
    let costs: Vec<f64> = problem
        .regularizers
        .iter()
        .map(|h| ka.dot(&h.dot(&ka)))
        .collect();
    let hp = problem.hyper;
    Ok(beta_closed_form(&costs, hp.gamma_i, hp.gamma_beta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    /// Relative outer change fell below `outer_tol`, or θ and β stopped moving.
    Converged,
    MaxIterations,
    Stalled {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub alpha: Array1<f64>,
    pub theta: SimplexWeights,
    pub beta: SimplexWeights,
    /// Objective at the start and after every outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
}

/// Starting point for [`alternate`].
#[derive(Debug, Clone)]
pub struct InitialPoint {
    pub alpha: Array1<f64>,
    pub theta: SimplexWeights,
    pub beta: SimplexWeights,
}

impl InitialPoint {
    /// `α = 0`, uniform `θ` and `β`.
    pub fn default_for(problem: &ProblemInstance) -> Self {
        InitialPoint {
            alpha: Array1::zeros(problem.n()),
            theta: SimplexWeights::uniform(problem.n_kernels()),
            beta: SimplexWeights::uniform(problem.n_regularizers()),
        }
    }
}

/// Cycle α → θ → β until the relative objective change drops below
/// `outer_tol`, θ and β reach a fixed point, or `outer_max_iter` runs out.
///
/// A block stall ends the loop early; the state at that point is returned
/// with `converged = false`.
pub fn alternate(problem: &ProblemInstance, init: Option<InitialPoint>) -> Result<SolverState> {
    let InitialPoint {
        mut alpha,
        mut theta,
        mut beta,
    } = init.unwrap_or_else(|| InitialPoint::default_for(problem));
    let hp = problem.hyper;
    let mut current = objective(problem, &alpha, &theta, &beta)?;
    let mut trace = vec![current];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    for it in 1..=hp.outer_max_iter {
        let (theta_prev, beta_prev) = (theta.clone(), beta.clone());
        let step = (|| -> Result<()> {
            alpha = solve_alpha(problem, &theta, &beta, &alpha)?.alpha;
            theta = solve_theta(problem, &alpha, &beta, &theta)?;
            beta = solve_beta(problem, &alpha, &theta)?;
            Ok(())
        })();
        if let Err(e) = step {
            match e {
                OptimizeError::Stall {
                    block, ref iterate, ..
                } => {
                    let candidate = Array1::from(iterate.clone());
                    if block == "alpha" && objective(problem, &candidate, &theta, &beta)? <= current
                    {
                        alpha = candidate;
                    }
                    let value = objective(problem, &alpha, &theta, &beta)?;
                    trace.push(value);
                    iterations = it;
                    termination = Termination::Stalled {
                        message: e.to_string(),
                    };
                    break;
                }
                other => return Err(other),
            }
        }
        let value = objective(problem, &alpha, &theta, &beta)?;
        trace.push(value);
        iterations = it;
        let relative = (current - value).abs() / current.abs().max(f64::MIN_POSITIVE);
        current = value;
        if relative < hp.outer_tol || (theta == theta_prev && beta == beta_prev) {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(SolverState {
        alpha,
        theta,
        beta,
        objective_trace: trace,
        iterations,
        converged: termination == Termination::Converged,
        termination,
    })
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
