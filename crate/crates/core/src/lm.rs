//! Levenberg-Marquardt solver for small dense problems with many residuals.
//!
//! Problems hand back the normal equations `J^T J` and `J^T r` directly, so
//! a million-residual fit never materializes its Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Cost is `0.5 * sum(r^2)`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: f64,
    pub jtj: DMatrix<f64>,
    pub jtr: DVector<f64>,
}

pub trait LeastSquaresProblem {
    fn num_params(&self) -> usize;

    /// Cost only.
    fn cost(&self, params: &[f64]) -> f64;

    /// Cost plus normal equations at `params`.
    fn evaluate(&self, params: &[f64]) -> Evaluation;

    /// Projects parameters back onto the feasible set.
    fn project(&self, _params: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop when `|step| <= step_tol * (|p| + step_tol)`.
    pub step_tol: f64,
    /// Stop when an accepted step lowers the cost by less than `cost_tol * cost`.
    pub cost_tol: f64,
    pub initial_damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tol: 1e-8,
            cost_tol: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    StepTolerance,
    CostTolerance,
    ZeroResidual,
    /// Damping grew until no step lowered the cost: a stationary point.
    Stationary,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub params: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub termination: Termination,
}

const MAX_DAMPING: f64 = 1e32;

pub fn solve<P: LeastSquaresProblem>(problem: &P, initial: &[f64], options: &SolverOptions) -> Result<Solution> {
    let n = problem.num_params();
    assert_eq!(initial.len(), n);
    let mut params = initial.to_vec();
    problem.project(&mut params);
    let mut eval = problem.evaluate(&params);
    if !eval.cost.is_finite() {
        return Err(Error::NonConvergence {
            iterations: 0,
            cost: eval.cost,
        });
    }
    let max_diag = (0..n).map(|i| eval.jtj[(i, i)]).fold(0.0, f64::max);
    let mut damping = options.initial_damping * max_diag.max(f64::MIN_POSITIVE);
    let mut nu = 2.0;

    for iteration in 1..=options.max_iterations {
        if eval.cost == 0.0 {
            return Ok(Solution {
                params,
                cost: 0.0,
                iterations: iteration - 1,
                termination: Termination::ZeroResidual,
            });
        }
        // Marquardt scaling with a floor so flat directions still get damped.
        let floor = 1e-12 * (0..n).map(|i| eval.jtj[(i, i)]).fold(0.0, f64::max);
        let scale = DVector::from_fn(n, |i, _| eval.jtj[(i, i)].max(floor).max(f64::MIN_POSITIVE));

        loop {
            let mut lhs = eval.jtj.clone();
            for i in 0..n {
                lhs[(i, i)] += damping * scale[i];
            }
            let step = lhs
                .clone()
                .cholesky()
                .map(|c| c.solve(&(-&eval.jtr)))
                .or_else(|| lhs.lu().solve(&(-&eval.jtr)));
            let step = match step {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => {
                    damping *= nu;
                    nu *= 2.0;
                    if damping > MAX_DAMPING {
                        return Ok(stationary(params, eval.cost, iteration));
                    }
                    continue;
                }
            };

            let mut candidate: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            problem.project(&mut candidate);
            let new_cost = problem.cost(&candidate);

            if new_cost.is_finite() && new_cost < eval.cost {
                let actual_step: f64 = candidate
                    .iter()
                    .zip(&params)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let norm: f64 = params.iter().map(|p| p * p).sum::<f64>().sqrt();
                // gain ratio against the linearized model
                let predicted = 0.5 * step.dot(&(step.component_mul(&scale) * damping - &eval.jtr));
                let rho = if predicted > 0.0 {
                    (eval.cost - new_cost) / predicted
                } else {
                    0.0
                };
                let reduction = eval.cost - new_cost;
                let old_cost = eval.cost;
                params = candidate;
                eval = problem.evaluate(&params);
                damping *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;

                if actual_step <= options.step_tol * (norm + options.step_tol) {
                    return Ok(done(params, eval.cost, iteration, Termination::StepTolerance));
                }
                if reduction <= options.cost_tol * old_cost {
                    return Ok(done(params, eval.cost, iteration, Termination::CostTolerance));
                }
                break;
            }

            damping *= nu;
            nu *= 2.0;
            if damping > MAX_DAMPING {
                return Ok(stationary(params, eval.cost, iteration));
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: options.max_iterations,
        cost: eval.cost,
    })
}

fn done(params: Vec<f64>, cost: f64, iterations: usize, termination: Termination) -> Solution {
    Solution {
        params,
        cost,
        iterations,
        termination,
    }
}

fn stationary(params: Vec<f64>, cost: f64, iterations: usize) -> Solution {
    done(params, cost, iterations, Termination::Stationary)
}
