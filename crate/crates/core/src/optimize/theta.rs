//! θ block: projected gradient descent on the simplex.
//!
//! With α fixed every θ-dependent quantity is linear or quadratic in θ once
//! the per-view products `a_k = K^k α` are known:
//!
//! ```text
//! z_L = Σ_k θ_k a_k[L],  αᵀKα = Σ_k θ_k αᵀa_k,  (Kα)ᵀH(Kα) = θᵀQθ,  Q_jk = a_jᵀ H a_k
//! ```
//!
//! so the subproblem is solved in `V` dimensions after `2V` matrix-vector
//! products.

use ndarray::{Array1, Array2};

use super::{project_simplex, OptimizeError, ProblemInstance, Result};
use crate::kernels::SimplexWeights;

const ARMIJO_C1: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

struct Reduced<'p, 'a> {
    problem: &'p ProblemInstance<'a>,
    /// `l × V`: labeled rows of each `a_k`.
    scores: Array2<f64>,
    /// `αᵀ a_k`
    rkhs: Array1<f64>,
    q: Array2<f64>,
    beta_penalty: f64,
}

impl Reduced<'_, '_> {
    fn new<'p, 'a>(
        problem: &'p ProblemInstance<'a>,
        alpha: &Array1<f64>,
        beta: &SimplexWeights,
    ) -> Result<Reduced<'p, 'a>> {
        let h = problem.combined_regularizer(beta)?;
        let a: Vec<Array1<f64>> = problem.grams().iter().map(|g| g.dot(alpha)).collect();
        let ha: Vec<Array1<f64>> = a.iter().map(|ak| h.dot(ak)).collect();
        let v = a.len();
        let mut q = Array2::zeros((v, v));
        for j in 0..v {
            for k in j..v {
                let val = 0.5 * (a[j].dot(&ha[k]) + a[k].dot(&ha[j]));
                q[[j, k]] = val;
                q[[k, j]] = val;
            }
        }
        let labeled = problem.labeled();
        let scores = Array2::from_shape_fn((labeled.len(), v), |(r, k)| a[k][labeled[r]]);
        let rkhs = a.iter().map(|ak| alpha.dot(ak)).collect();
        Ok(Reduced {
            problem,
            scores,
            rkhs,
            q,
            beta_penalty: problem.hyper().gamma_beta * beta.squared_norm(),
        })
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let hp = self.problem.hyper();
        let th = Array1::from(theta.to_vec());
        let z = self.scores.dot(&th);
        let l = z.len() as f64;
        let loss: f64 = z
            .iter()
            .zip(self.problem.targets())
            .map(|(&zi, &y)| super::softplus(zi) - y * zi)
            .sum::<f64>()
            / l;
        loss + hp.gamma_k * self.rkhs.dot(&th)
            + hp.gamma_i * th.dot(&self.q.dot(&th))
            + hp.gamma_theta * th.dot(&th)
            + self.beta_penalty
    }

    fn gradient(&self, theta: &[f64]) -> Array1<f64> {
        let hp = self.problem.hyper();
        let th = Array1::from(theta.to_vec());
        let z = self.scores.dot(&th);
        let l = z.len() as f64;
        let r: Array1<f64> = z
            .iter()
            .zip(self.problem.targets())
            .map(|(&zi, &y)| (super::sigmoid(zi) - y) / l)
            .collect();
        self.scores.t().dot(&r)
            + &self.rkhs * hp.gamma_k
            + self.q.dot(&th) * (2.0 * hp.gamma_i)
            + &th * (2.0 * hp.gamma_theta)
    }
}

/// Minimize `J(α, ·, β)` over the simplex starting from `theta_init`.
///
/// Each iteration tries `P(θ − t∇)` for `t = 1, ½, ¼, …` and accepts the
/// first point satisfying the projected Armijo condition. The returned
/// weights never have a larger objective than `theta_init`.
pub fn solve_theta(
    problem: &ProblemInstance,
    alpha: &Array1<f64>,
    beta: &SimplexWeights,
    theta_init: &SimplexWeights,
) -> Result<SimplexWeights> {
    if theta_init.len() != problem.n_kernels() {
        return Err(OptimizeError::NotSimplex(format!(
            "theta has {} entries for {} kernels",
            theta_init.len(),
            problem.n_kernels()
        )));
    }
    if alpha.len() != problem.n() {
        return Err(OptimizeError::Shape(format!(
            "alpha has length {}, expected {}",
            alpha.len(),
            problem.n()
        )));
    }
    if problem.n_kernels() == 1 {
        return Ok(theta_init.clone());
    }
    let hp = *problem.hyper();
    let reduced = Reduced::new(problem, alpha, beta)?;
    let mut theta = theta_init.clone();
    let mut value = reduced.value(theta.as_slice());

    for iteration in 0..hp.cg_max_iter {
        let grad = reduced.gradient(theta.as_slice());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = theta
                .as_slice()
                .iter()
                .zip(grad.iter())
                .map(|(w, g)| w - t * g)
                .collect();
            let candidate = project_simplex(&trial);
            let step: f64 = candidate
                .as_slice()
                .iter()
                .zip(theta.as_slice())
                .zip(grad.iter())
                .map(|((c, w), g)| g * (c - w))
                .sum();
            if candidate == theta {
                break;
            }
            let cand_value = reduced.value(candidate.as_slice());
            if cand_value <= value + ARMIJO_C1 * step && cand_value <= value {
                accepted = Some((candidate, cand_value));
                break;
            }
            t *= SHRINK;
        }
        let Some((next, next_value)) = accepted else {
            // No descent available: stationary unless a unit projected step
            // still moves θ noticeably.
            let probe: Vec<f64> = theta
                .as_slice()
                .iter()
                .zip(grad.iter())
                .map(|(w, g)| w - g)
                .collect();
            let moved: f64 = project_simplex(&probe)
                .as_slice()
                .iter()
                .zip(theta.as_slice())
                .map(|(a, b)| (a - b).abs())
                .sum();
            if moved > 1e-6 {
                return Err(OptimizeError::Stall {
                    block: "theta",
                    iterations: iteration,
                    iterate: theta.as_slice().to_vec(),
                });
            }
            break;
        };
        let change = value - next_value;
        theta = next;
        value = next_value;
        if change.abs() < hp.cg_tol {
            break;
        }
    }
    Ok(theta)
}
