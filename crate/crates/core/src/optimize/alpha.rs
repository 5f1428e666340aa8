//! α block: Fletcher–Reeves nonlinear conjugate gradient with Armijo
//! backtracking.
//!
//! Along a search direction `d` the objective is a logistic term in
//! `Kα + t Kd` plus a quadratic in `t`, so each CG iteration costs three
//! matrix-vector products (`Kd`, `H Kd`, and one `K` product for the new
//! gradient) and line-search trials are `O(l)`. Backtracking starts from the
//! one-dimensional Newton step along the search direction.

use ndarray::{Array1, Array2};

use super::{objective, sigmoid, OptimizeError, ProblemInstance, Result};
use crate::kernels::SimplexWeights;

const ARMIJO_C1: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const REFRESH_EVERY: usize = 50;
const POWELL_RESTART: f64 = 0.2;
/// Below this gradient norm a failed line search is taken as convergence at
/// working precision rather than a stall.
const ROUNDOFF_GRADIENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSolution {
    pub alpha: Array1<f64>,
    pub iterations: usize,
    /// Objective before the first step and after every accepted step.
    pub trace: Vec<f64>,
}

struct Block<'p, 'a> {
    problem: &'p ProblemInstance<'a>,
    k: Array2<f64>,
    h: Array2<f64>,
    constant: f64,
}

/// Iterate with cached `Kα` and `HKα`.
struct Point {
    alpha: Array1<f64>,
    ka: Array1<f64>,
    hka: Array1<f64>,
    value: f64,
}

impl Block<'_, '_> {
    fn point(&self, alpha: Array1<f64>) -> Point {
        let ka = self.k.dot(&alpha);
        let hka = self.h.dot(&ka);
        let value = self.value(&alpha, &ka, &hka);
        Point {
            alpha,
            ka,
            hka,
            value,
        }
    }

    fn value(&self, alpha: &Array1<f64>, ka: &Array1<f64>, hka: &Array1<f64>) -> f64 {
        let hp = self.problem.hyper();
        self.problem.loss(ka)
            + hp.gamma_k * alpha.dot(ka)
            + hp.gamma_i * ka.dot(hka)
            + self.constant
    }

    fn gradient(&self, p: &Point) -> Array1<f64> {
        let hp = self.problem.hyper();
        let mut inner = self.problem.loss_residual(&p.ka);
        inner.scaled_add(2.0 * hp.gamma_k, &p.alpha);
        inner.scaled_add(2.0 * hp.gamma_i, &p.hka);
        self.k.dot(&inner)
    }
}

/// Values along `α + t d` from scalars precomputed once per direction.
struct Ray {
    kd: Array1<f64>,
    hkd: Array1<f64>,
    /// αᵀKα, 2 dᵀKα, dᵀKd
    rkhs: [f64; 3],
    /// (Kα)ᵀH(Kα), 2 (Kd)ᵀH(Kα), (Kd)ᵀH(Kd)
    manifold: [f64; 3],
}

impl Ray {
    fn new(block: &Block, p: &Point, d: &Array1<f64>) -> Self {
        let kd = block.k.dot(d);
        let hkd = block.h.dot(&kd);
        Ray {
            rkhs: [p.alpha.dot(&p.ka), 2.0 * d.dot(&p.ka), d.dot(&kd)],
            manifold: [p.ka.dot(&p.hka), 2.0 * kd.dot(&p.hka), kd.dot(&hkd)],
            kd,
            hkd,
        }
    }

    fn value(&self, block: &Block, base_ka: &Array1<f64>, t: f64) -> f64 {
        let hp = block.problem.hyper();
        let z = {
            let mut z = base_ka.clone();
            z.scaled_add(t, &self.kd);
            z
        };
        let quad = |c: &[f64; 3]| c[0] + t * c[1] + t * t * c[2];
        block.problem.loss(&z)
            + hp.gamma_k * quad(&self.rkhs)
            + hp.gamma_i * quad(&self.manifold)
            + block.constant
    }

    /// Second derivative of the objective along the ray at `t = 0`.
    fn curvature(&self, block: &Block, base_ka: &Array1<f64>) -> f64 {
        let hp = block.problem.hyper();
        let labeled = block.problem.labeled();
        let logistic: f64 = labeled
            .iter()
            .map(|&i| {
                let s = sigmoid(base_ka[i]);
                s * (1.0 - s) * self.kd[i] * self.kd[i]
            })
            .sum::<f64>()
            / labeled.len() as f64;
        logistic + 2.0 * hp.gamma_k * self.rkhs[2] + 2.0 * hp.gamma_i * self.manifold[2]
    }
}

/// Minimize `J(·, θ, β)` starting from `alpha_init`.
///
/// Stops when an accepted step changes the objective by less than `cg_tol`,
/// when the gradient norm is below `cg_tol`, or after `cg_max_iter` steps.
/// The returned iterate never has a larger objective than `alpha_init`.
pub fn solve_alpha(
    problem: &ProblemInstance,
    theta: &SimplexWeights,
    beta: &SimplexWeights,
    alpha_init: &Array1<f64>,
) -> Result<AlphaSolution> {
    let hp = *problem.hyper();
    let initial_value = objective(problem, alpha_init, theta, beta)?;
    let block = Block {
        problem,
        k: problem.combined_kernel(theta)?,
        h: problem.combined_regularizer(beta)?,
        constant: problem.weight_penalty(theta, beta),
    };

    let mut p = block.point(alpha_init.clone());
    let mut trace = vec![p.value];
    let mut g = block.gradient(&p);
    let mut g_norm2 = g.dot(&g);
    let mut d = -&g;
    let mut iterations = 0;

    while iterations < hp.cg_max_iter && g_norm2.sqrt() >= hp.cg_tol {
        let mut slope = g.dot(&d);
        if slope >= 0.0 || iterations % problem.n().max(1) == 0 && iterations > 0 {
            d = -&g;
            slope = -g_norm2;
        }
        let mut accepted = line_search(&block, &p, &d, slope);
        if accepted.is_none() && slope != -g_norm2 {
            d = -&g;
            slope = -g_norm2;
            accepted = line_search(&block, &p, &d, slope);
        }
        let Some((t, ray, value)) = accepted else {
            if g_norm2.sqrt() <= ROUNDOFF_GRADIENT {
                break;
            }
            return Err(OptimizeError::Stall {
                block: "alpha",
                iterations,
                iterate: p.alpha.to_vec(),
            });
        };

        iterations += 1;
        let previous = p.value;
        p.alpha.scaled_add(t, &d);
        if iterations % REFRESH_EVERY == 0 {
            p = block.point(p.alpha);
        } else {
            p.ka.scaled_add(t, &ray.kd);
            p.hka.scaled_add(t, &ray.hkd);
            p.value = value;
        }
        trace.push(p.value);

        let g_new = block.gradient(&p);
        let g_new_norm2 = g_new.dot(&g_new);
        // Powell restart: fall back to steepest descent once successive
        // gradients stop being close to orthogonal.
        if g_new.dot(&g).abs() >= POWELL_RESTART * g_new_norm2 {
            d = -&g_new;
        } else {
            let fr = g_new_norm2 / g_norm2;
            d = &d * fr - &g_new;
        }
        g = g_new;
        g_norm2 = g_new_norm2;

        if (previous - p.value).abs() < hp.cg_tol {
            break;
        }
    }

    // Cached products drift by rounding; never hand back a worse point.
    let final_point = block.point(p.alpha);
    if final_point.value > initial_value && iterations > 0 {
        return Ok(AlphaSolution {
            alpha: alpha_init.clone(),
            iterations,
            trace,
        });
    }
    Ok(AlphaSolution {
        alpha: final_point.alpha,
        iterations,
        trace,
    })
}

fn line_search(block: &Block, p: &Point, d: &Array1<f64>, slope: f64) -> Option<(f64, Ray, f64)> {
    let ray = Ray::new(block, p, d);
    // Start from the one-dimensional Newton step.
    let curvature = ray.curvature(block, &p.ka);
    let mut t = if curvature > 0.0 && curvature.is_finite() {
        -slope / curvature
    } else {
        1.0
    };
    if !(t.is_finite() && t > 0.0) {
        t = 1.0;
    }
    for _ in 0..MAX_BACKTRACKS {
        let value = ray.value(block, &p.ka, t);
        if value <= p.value + ARMIJO_C1 * t * slope && value < p.value {
            return Some((t, ray, value));
        }
        t *= SHRINK;
    }
    None
}
