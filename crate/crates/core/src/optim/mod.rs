//! Two-phase optimization: a fixed Adam budget, then L-BFGS with a
//! Hager-Zhang line search until convergence.

mod adam;
mod lbfgs;
mod line_search;

pub use adam::{AdamConfig, AdamState};
pub use lbfgs::LbfgsState;
pub use line_search::{hager_zhang_search, LineSearchConfig, SearchOutcome, SearchWarning};

use crate::error::Result;
use crate::physics::LossBreakdown;

/// Objective over a flat parameter vector.
///
/// `full` must be deterministic in its inputs; the L-BFGS line search
/// depends on that. `next_batch` may subsample and advance internal batch
/// state; the default is full-batch.
pub trait Objective {
    fn full(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown>;

    fn next_batch(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
        self.full(params, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Adam,
    Lbfgs,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Adam => "adam",
            Phase::Lbfgs => "lbfgs",
        }
    }
}

/// One optimizer iteration as recorded in the loss history.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iteration: usize,
    pub phase: Phase,
    pub breakdown: LossBreakdown,
    pub grad_norm: f64,
    /// Accepted line-search step; absent for Adam iterations.
    pub step_size: Option<f64>,
    pub warning: Option<SearchWarning>,
}

/// Iteration budgets and stopping tolerances for both phases.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub adam_iters: usize,
    pub adam: AdamConfig,
    pub lbfgs_max_iters: usize,
    pub lbfgs_memory: usize,
    /// Stop when the gradient infinity norm drops below this.
    pub grad_tolerance: f64,
    /// Stop when the relative loss change stays below this...
    pub plateau_tolerance: f64,
    /// ...for this many consecutive iterations.
    pub plateau_window: usize,
    pub line_search: LineSearchConfig,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            adam_iters: 5000,
            adam: AdamConfig::default(),
            lbfgs_max_iters: 20000,
            lbfgs_memory: 10,
            grad_tolerance: 1e-8,
            plateau_tolerance: 1e-9,
            plateau_window: 10,
            line_search: LineSearchConfig::default(),
        }
    }
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    GradientNorm,
    Plateau,
    IterationBudget,
    /// The line search could not find a decreasing step.
    LineSearchStall,
    /// A non-finite loss or gradient appeared; parameters were rolled back
    /// to the last finite iterate. The index is the failing iteration.
    Diverged { iteration: usize },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<IterRecord>,
    pub stop: Stop,
}

impl TrainOutcome {
    pub fn diverged(&self) -> Option<usize> {
        match self.stop {
            Stop::Diverged { iteration } => Some(iteration),
            _ => None,
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Runs both phases over `params` in place.
///
/// On divergence the parameters roll back to the last iterate with a
/// finite loss and gradient, the outcome reports the failing iteration,
/// and the history up to that point is preserved. Hard errors (length
/// mismatches and the like) propagate as errors.
pub fn train_phase<O: Objective>(
    obj: &mut O,
    params: &mut [f64],
    schedule: &Schedule,
) -> Result<TrainOutcome> {
    let n = params.len();
    let mut grad = vec![0.0; n];
    let mut history: Vec<IterRecord> = Vec::new();
    let mut last_good = params.to_vec();

    if schedule.adam_iters > 0 {
        let mut adam = AdamState::new(n, schedule.adam);
        for _ in 0..schedule.adam_iters {
            let bd = obj.next_batch(params, &mut grad)?;
            if !bd.total.is_finite() || !all_finite(&grad) {
                params.copy_from_slice(&last_good);
                return Ok(TrainOutcome {
                    stop: Stop::Diverged {
                        iteration: history.len(),
                    },
                    history,
                });
            }
            last_good.copy_from_slice(params);
            history.push(IterRecord {
                iteration: history.len(),
                phase: Phase::Adam,
                breakdown: bd,
                grad_norm: inf_norm(&grad),
                step_size: None,
                warning: None,
            });
            adam.step(params, &grad)?;
        }
    }

    if schedule.lbfgs_max_iters == 0 {
        return Ok(TrainOutcome {
            history,
            stop: Stop::IterationBudget,
        });
    }

    let bd = obj.full(params, &mut grad)?;
    if !bd.total.is_finite() || !all_finite(&grad) {
        params.copy_from_slice(&last_good);
        return Ok(TrainOutcome {
            stop: Stop::Diverged {
                iteration: history.len(),
            },
            history,
        });
    }
    last_good.copy_from_slice(params);
    let mut loss = bd.total;

    let mut lbfgs = LbfgsState::new(schedule.lbfgs_memory);
    let mut direction = vec![0.0; n];
    let mut trial_params = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut plateau_run = 0usize;
    let mut stop = Stop::IterationBudget;

    for k in 0..schedule.lbfgs_max_iters {
        let gnorm = inf_norm(&grad);
        if gnorm < schedule.grad_tolerance {
            stop = Stop::GradientNorm;
            break;
        }

        direction.copy_from_slice(&lbfgs.direction(&grad));
        let mut slope = dot(&direction, &grad);
        if slope >= 0.0 {
            // Stale curvature; fall back to steepest descent.
            lbfgs.clear();
            for (d, g) in direction.iter_mut().zip(&grad) {
                *d = -*g;
            }
            slope = -dot(&grad, &grad);
        }
        if slope == 0.0 {
            stop = Stop::GradientNorm;
            break;
        }

        // Cache of the most recent finite trial so the accepted step does
        // not have to be re-evaluated.
        let mut cached: Option<(f64, LossBreakdown)> = None;
        let initial = if k == 0 { (1.0 / gnorm).min(1.0) } else { 1.0 };

        let outcome = {
            let phi = |alpha: f64| -> (f64, f64) {
                for i in 0..n {
                    trial_params[i] = params[i] + alpha * direction[i];
                }
                match obj.full(&trial_params, &mut trial_grad) {
                    Ok(bd) if bd.total.is_finite() && all_finite(&trial_grad) => {
                        cached = Some((alpha, bd));
                        (bd.total, dot(&trial_grad, &direction))
                    }
                    // Treat any failed trial as an over-long step; the
                    // search backs off. Persistent failures surface as a
                    // stall below.
                    _ => (f64::INFINITY, f64::INFINITY),
                }
            };
            hager_zhang_search(phi, loss, slope, initial, &schedule.line_search)
        };

        let outcome = match outcome {
            Ok(o) => o,
            Err(crate::error::Error::StepRejected(_)) => {
                stop = Stop::LineSearchStall;
                break;
            }
            Err(e) => return Err(e),
        };
        if !outcome.value.is_finite() || outcome.value >= loss {
            stop = Stop::LineSearchStall;
            break;
        }

        let alpha = outcome.alpha;
        let bd_new = match cached {
            Some((a, bd)) if a == alpha => bd,
            _ => {
                for i in 0..n {
                    trial_params[i] = params[i] + alpha * direction[i];
                }
                let bd = obj.full(&trial_params, &mut trial_grad)?;
                if !bd.total.is_finite() || !all_finite(&trial_grad) {
                    stop = Stop::LineSearchStall;
                    break;
                }
                bd
            }
        };

        let mut s = direction.clone();
        for si in &mut s {
            *si *= alpha;
        }
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        lbfgs.update(s, y);

        params.copy_from_slice(&trial_params);
        grad.copy_from_slice(&trial_grad);
        last_good.copy_from_slice(params);
        let prev = loss;
        loss = bd_new.total;

        history.push(IterRecord {
            iteration: history.len(),
            phase: Phase::Lbfgs,
            breakdown: bd_new,
            grad_norm: inf_norm(&grad),
            step_size: Some(alpha),
            warning: outcome.warning,
        });

        let rel = (prev - loss).abs() / prev.abs().max(f64::MIN_POSITIVE);
        plateau_run = if rel < schedule.plateau_tolerance {
            plateau_run + 1
        } else {
            0
        };
        if plateau_run >= schedule.plateau_window {
            stop = Stop::Plateau;
            break;
        }
    }

    Ok(TrainOutcome { history, stop })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(x) = 1/2 (x0^2 + 10 x1^2).
    struct Quadratic;

    impl Objective for Quadratic {
        fn full(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
            grad[0] = params[0];
            grad[1] = 10.0 * params[1];
            Ok(LossBreakdown::from_scalar(
                0.5 * (params[0] * params[0] + 10.0 * params[1] * params[1]),
            ))
        }
    }

    fn quadratic_schedule() -> Schedule {
        Schedule {
            adam_iters: 0,
            lbfgs_max_iters: 50,
            grad_tolerance: 1e-12,
            ..Schedule::default()
        }
    }

    #[test]
    fn quadratic_converges_in_few_iterations() {
        let mut params = vec![1.0, 1.0];
        let out = train_phase(&mut Quadratic, &mut params, &quadratic_schedule()).unwrap();
        assert!(inf_norm(&params) < 1e-10, "params {params:?}");
        let lbfgs_iters = out
            .history
            .iter()
            .filter(|r| r.phase == Phase::Lbfgs)
            .count();
        assert!(lbfgs_iters <= 10, "{lbfgs_iters} iterations");
        assert!(matches!(out.stop, Stop::GradientNorm | Stop::Plateau));
    }

    #[test]
    fn accepted_iterations_strictly_decrease_the_loss() {
        let mut params = vec![3.0, -2.0];
        let out = train_phase(&mut Quadratic, &mut params, &quadratic_schedule()).unwrap();
        let totals: Vec<f64> = out.history.iter().map(|r| r.breakdown.total).collect();
        assert!(!totals.is_empty());
        assert!(totals[0] < 0.5 * (9.0 + 40.0));
        for w in totals.windows(2) {
            assert!(w[1] < w[0], "{} !< {}", w[1], w[0]);
        }
    }

    #[test]
    fn zero_budgets_change_nothing_and_record_nothing() {
        let mut params = vec![0.7, -0.3];
        let schedule = Schedule {
            adam_iters: 0,
            lbfgs_max_iters: 0,
            ..Schedule::default()
        };
        let out = train_phase(&mut Quadratic, &mut params, &schedule).unwrap();
        assert_eq!(params, vec![0.7, -0.3]);
        assert!(out.history.is_empty());
    }

    #[test]
    fn history_counts_adam_plus_accepted_lbfgs_iterations() {
        let mut params = vec![1.0, 1.0];
        let schedule = Schedule {
            adam_iters: 7,
            lbfgs_max_iters: 50,
            ..Schedule::default()
        };
        let out = train_phase(&mut Quadratic, &mut params, &schedule).unwrap();
        let adam: Vec<_> = out
            .history
            .iter()
            .filter(|r| r.phase == Phase::Adam)
            .collect();
        let lbfgs: Vec<_> = out
            .history
            .iter()
            .filter(|r| r.phase == Phase::Lbfgs)
            .collect();
        assert_eq!(adam.len(), 7);
        assert_eq!(out.history.len(), adam.len() + lbfgs.len());
        // Adam records precede L-BFGS ones and indices are consecutive.
        for (i, r) in out.history.iter().enumerate() {
            assert_eq!(r.iteration, i);
            assert_eq!(r.phase == Phase::Adam, i < 7);
            assert_eq!(r.step_size.is_some(), r.phase == Phase::Lbfgs);
        }
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let run = || {
            let mut params = vec![1.3, -0.9];
            let out = train_phase(&mut Quadratic, &mut params, &quadratic_schedule()).unwrap();
            (params, out.history.len())
        };
        let (p1, n1) = run();
        let (p2, n2) = run();
        assert_eq!(n1, n2);
        assert_eq!(p1[0].to_bits(), p2[0].to_bits());
        assert_eq!(p1[1].to_bits(), p2[1].to_bits());
    }

    /// Returns NaN from the given call index onward.
    struct Poisoned {
        calls: usize,
        fail_from: usize,
        seen: Vec<Vec<f64>>,
    }

    impl Objective for Poisoned {
        fn full(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
            self.seen.push(params.to_vec());
            let bad = self.calls >= self.fail_from;
            self.calls += 1;
            grad[0] = params[0];
            if bad {
                Ok(LossBreakdown::from_scalar(f64::NAN))
            } else {
                Ok(LossBreakdown::from_scalar(0.5 * params[0] * params[0]))
            }
        }
    }

    #[test]
    fn divergence_rolls_back_to_the_last_finite_iterate() {
        let mut obj = Poisoned {
            calls: 0,
            fail_from: 3,
            seen: Vec::new(),
        };
        let mut params = vec![2.0];
        let schedule = Schedule {
            adam_iters: 10,
            lbfgs_max_iters: 0,
            ..Schedule::default()
        };
        let out = train_phase(&mut obj, &mut params, &schedule).unwrap();
        assert_eq!(out.stop, Stop::Diverged { iteration: 3 });
        assert_eq!(out.history.len(), 3);
        // The failing evaluation saw the parameters produced by step 3; the
        // rollback target is the argument of the last finite call.
        assert_eq!(params, obj.seen[2]);
    }

    #[test]
    fn gradient_tolerance_stops_before_the_budget() {
        let mut params = vec![1e-13, 0.0];
        let out = train_phase(&mut Quadratic, &mut params, &quadratic_schedule()).unwrap();
        assert_eq!(out.stop, Stop::GradientNorm);
        assert!(out.history.is_empty());
    }
}
