//! Step-size rules and the Armijo backtracking search.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_BACKTRACKS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// `t_n = alpha n^(-exponent)`.
    RobbinsMonro { alpha: f64, exponent: f64 },
    /// Backtracking from a fixed `alpha`.
    Armijo { alpha: f64, rho: f64, c: f64, max_backtracks: usize },
    /// Backtracking from `alpha0 damping^(n / period)`, floored at `alpha_min`.
    DampedArmijo { alpha0: f64, rho: f64, c: f64, damping: f64, period: usize, alpha_min: f64, max_backtracks: usize },
}

impl StepRule {
    pub fn robbins_monro(alpha: f64) -> Self {
        StepRule::RobbinsMonro { alpha, exponent: 0.85 }
    }

    pub fn armijo(alpha: f64, rho: f64, c: f64) -> Self {
        StepRule::Armijo { alpha, rho, c, max_backtracks: DEFAULT_MAX_BACKTRACKS }
    }

    pub fn damped_armijo(alpha0: f64, rho: f64, c: f64) -> Self {
        StepRule::DampedArmijo {
            alpha0,
            rho,
            c,
            damping: 0.9,
            period: 20,
            alpha_min: 0.0,
            max_backtracks: DEFAULT_MAX_BACKTRACKS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        let check_line = |rho: f64, c: f64| -> Result<()> {
            if !(rho > 0.0 && rho < 1.0) {
                return bad(format!("rho must lie in (0, 1), got {rho}"));
            }
            if !(c > 0.0 && c < 1.0) {
                return bad(format!("c must lie in (0, 1), got {c}"));
            }
            Ok(())
        };
        match *self {
            StepRule::RobbinsMonro { alpha, exponent } => {
                if !(alpha > 0.0) {
                    return bad(format!("alpha must be positive, got {alpha}"));
                }
                if !(exponent > 0.5 && exponent <= 1.0) {
                    return bad(format!("exponent must lie in (0.5, 1], got {exponent}"));
                }
                Ok(())
            }
            StepRule::Armijo { alpha, rho, c, .. } => {
                if !(alpha > 0.0) {
                    return bad(format!("alpha must be positive, got {alpha}"));
                }
                check_line(rho, c)
            }
            StepRule::DampedArmijo { alpha0, rho, c, damping, period, alpha_min, .. } => {
                if !(alpha0 > 0.0) {
                    return bad(format!("alpha must be positive, got {alpha0}"));
                }
                if !(damping > 0.0 && damping <= 1.0) {
                    return bad(format!("damping must lie in (0, 1], got {damping}"));
                }
                if period == 0 {
                    return bad("period must be at least 1".into());
                }
                if !(alpha_min >= 0.0) {
                    return bad(format!("alpha_min must be non-negative, got {alpha_min}"));
                }
                check_line(rho, c)
            }
        }
    }

    pub fn is_line_search(&self) -> bool {
        !matches!(self, StepRule::RobbinsMonro { .. })
    }

    /// `(rho, c, max_backtracks)` for the line-search rules.
    pub fn line_search(&self) -> Option<(f64, f64, usize)> {
        match *self {
            StepRule::RobbinsMonro { .. } => None,
            StepRule::Armijo { rho, c, max_backtracks, .. } | StepRule::DampedArmijo { rho, c, max_backtracks, .. } => {
                Some((rho, c, max_backtracks))
            }
        }
    }
}

/// Step length (Robbins-Monro) or initial trial step (Armijo variants) at
/// iteration `n >= 1`.
pub fn propose_step(rule: &StepRule, n: usize) -> f64 {
    match *rule {
        StepRule::RobbinsMonro { alpha, exponent } => alpha * (n.max(1) as f64).powf(-exponent),
        StepRule::Armijo { alpha, .. } => alpha,
        StepRule::DampedArmijo { alpha0, damping, period, alpha_min, .. } => {
            (alpha0 * damping.powi((n / period) as i32)).max(alpha_min)
        }
    }
}

/// Outcome of a backtracking search.
#[derive(Clone, Debug, PartialEq)]
pub struct Backtrack<T> {
    /// Accepted step, or 0 when the search failed.
    pub step: f64,
    pub backtracks: usize,
    /// Objective at every trial that produced a valid mesh.
    pub trial_values: Vec<f64>,
    /// Whatever the evaluator returned for the accepted trial.
    pub accepted: Option<T>,
    pub j_trial: Option<f64>,
}

/// Tries `t = alpha rho^m` for `m = 0, 1, ...` and returns the first step
/// with `J(t) <= J - t c grad_norm_sq`. `trial(t)` returns `None` when the
/// trial geometry is invalid, otherwise the objective and a payload.
pub fn armijo_backtrack<T, E>(
    j_current: f64,
    grad_norm_sq: f64,
    alpha: f64,
    rho: f64,
    c: f64,
    max_backtracks: usize,
    mut trial: impl FnMut(f64) -> std::result::Result<Option<(f64, T)>, E>,
) -> std::result::Result<Backtrack<T>, E> {
    let mut trial_values = Vec::new();
    let mut t = alpha;
    for m in 0..=max_backtracks {
        if let Some((j, payload)) = trial(t)? {
            trial_values.push(j);
            if j <= j_current - t * c * grad_norm_sq {
                return Ok(Backtrack { step: t, backtracks: m, trial_values, accepted: Some(payload), j_trial: Some(j) });
            }
        }
        t *= rho;
    }
    Ok(Backtrack { step: 0.0, backtracks: max_backtracks, trial_values, accepted: None, j_trial: None })
}
