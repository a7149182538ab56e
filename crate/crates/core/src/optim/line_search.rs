//! Hager-Zhang line search: bracket, secant refinement, bisection fallback.
//!
//! Accepts a step satisfying either the original Wolfe conditions or the
//! approximate variant, with the approximate branch additionally gated on a
//! strict objective decrease so every accepted step is monotone. Non-finite
//! trial values are treated as over-long steps and the search backs away
//! from them.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    /// Sufficient-decrease coefficient (Wolfe delta).
    pub sufficient_decrease: f64,
    /// Curvature coefficient (Wolfe sigma).
    pub curvature: f64,
    /// Evaluation budget; exceeding it returns the best trial seen.
    pub max_iterations: usize,
    /// Largest step the expansion phase may reach.
    pub max_step: f64,
    /// Relative slack on phi(0) for the approximate Wolfe value gate.
    pub wolfe_epsilon: f64,
    /// Bracket expansion factor.
    pub expansion: f64,
    /// Interpolation point for the bisection update.
    pub bisection: f64,
    /// Interval must shrink by this factor per round, else bisect.
    pub shrink_threshold: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            sufficient_decrease: 0.1,
            curvature: 0.9,
            max_iterations: 50,
            max_step: 1e8,
            wolfe_epsilon: 1e-6,
            expansion: 5.0,
            bisection: 0.5,
            shrink_threshold: 0.66,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchWarning {
    /// Budget ran out; the best decreasing trial was returned.
    EvaluationBudget,
    /// The objective kept decreasing out to the step cap.
    StepCap,
    /// The bracket collapsed to rounding width before the curvature
    /// condition was met.
    NarrowBracket,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOutcome {
    pub alpha: f64,
    pub value: f64,
    pub slope: f64,
    pub evaluations: usize,
    pub warning: Option<SearchWarning>,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    a: f64,
    f: f64,
    d: f64,
}

struct Search<'a, F> {
    phi: F,
    cfg: &'a LineSearchConfig,
    phi0: f64,
    dphi0: f64,
    eps: f64,
    evals: usize,
    best: Option<Trial>,
}

impl<'a, F: FnMut(f64) -> (f64, f64)> Search<'a, F> {
    fn eval(&mut self, a: f64) -> Trial {
        let (f, d) = (self.phi)(a);
        self.evals += 1;
        let t = Trial { a, f, d };
        if a > 0.0 && f.is_finite() && self.best.map_or(true, |b| f < b.f) {
            self.best = Some(t);
        }
        t
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.cfg.max_iterations
    }

    fn satisfies(&self, t: &Trial) -> bool {
        if !(t.a > 0.0) || !t.f.is_finite() {
            return false;
        }
        let c = self.cfg;
        if !(t.d >= c.curvature * self.dphi0) {
            return false;
        }
        let armijo = t.f <= self.phi0 + c.sufficient_decrease * t.a * self.dphi0;
        let approx =
            (2.0 * c.sufficient_decrease - 1.0) * self.dphi0 >= t.d && t.f < self.phi0;
        armijo || (approx && t.f <= self.phi0 + self.eps)
    }

    fn accept(&self, t: Trial, warning: Option<SearchWarning>) -> SearchOutcome {
        SearchOutcome {
            alpha: t.a,
            value: t.f,
            slope: t.d,
            evaluations: self.evals,
            warning,
        }
    }

    fn fallback(&self) -> Result<SearchOutcome> {
        match self.best {
            Some(t) => Ok(self.accept(t, Some(SearchWarning::EvaluationBudget))),
            None => Err(Error::StepRejected(
                "line search found no finite trial value".into(),
            )),
        }
    }

    /// Narrows [lo, hi] where hi overshoots the value gate, until the upper
    /// end has nonnegative slope. Returns an accepted trial, a proper
    /// bracket, or nothing when the budget runs out.
    fn bisect_overshoot(&mut self, mut lo: Trial, mut hi: Trial) -> Option<BracketStep> {
        loop {
            if self.exhausted() {
                return None;
            }
            let mid = self.eval(lo.a + self.cfg.bisection * (hi.a - lo.a));
            if self.satisfies(&mid) {
                return Some(BracketStep::Accept(mid));
            }
            if mid.d >= 0.0 {
                return Some(BracketStep::Bracket(lo, mid));
            }
            // Non-finite trials fail both tests and shrink from the right.
            if mid.f <= self.phi0 + self.eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// Hager-Zhang interval update with trial point c.
    fn update(&mut self, lo: Trial, hi: Trial, c: f64) -> Option<UpdateStep> {
        if !(c > lo.a && c < hi.a) || !c.is_finite() {
            return Some(UpdateStep::Unchanged(lo, hi));
        }
        if self.exhausted() {
            return None;
        }
        let t = self.eval(c);
        if self.satisfies(&t) {
            return Some(UpdateStep::Accept(t));
        }
        if t.d >= 0.0 {
            return Some(UpdateStep::Moved(lo, t, t));
        }
        if t.f <= self.phi0 + self.eps {
            return Some(UpdateStep::Moved(t, hi, t));
        }
        match self.bisect_overshoot(lo, t)? {
            BracketStep::Accept(t) => Some(UpdateStep::Accept(t)),
            BracketStep::Bracket(a, b) => Some(UpdateStep::Moved(a, b, t)),
        }
    }
}

enum BracketStep {
    Accept(Trial),
    Bracket(Trial, Trial),
}

enum UpdateStep {
    Accept(Trial),
    Moved(Trial, Trial, Trial),
    Unchanged(Trial, Trial),
}

fn secant(a: &Trial, b: &Trial) -> f64 {
    (a.a * b.d - b.a * a.d) / (b.d - a.d)
}

/// Searches for a step length along a ray given the directional objective
/// `phi(alpha) -> (value, slope)` with `phi(0) = phi0`, `phi'(0) = dphi0`.
///
/// The returned step satisfies the Wolfe conditions unless a warning says
/// otherwise; warnings are non-fatal and the returned trial is still the
/// best known. A nonnegative initial slope is an error.
pub fn hager_zhang_search<F: FnMut(f64) -> (f64, f64)>(
    phi: F,
    phi0: f64,
    dphi0: f64,
    initial: f64,
    cfg: &LineSearchConfig,
) -> Result<SearchOutcome> {
    if !dphi0.is_finite() || dphi0 >= 0.0 {
        return Err(Error::NotADescentDirection(dphi0));
    }
    if !phi0.is_finite() {
        return Err(Error::StepRejected("objective not finite at step 0".into()));
    }

    let mut search = Search {
        phi,
        cfg,
        phi0,
        dphi0,
        eps: cfg.wolfe_epsilon * phi0.abs(),
        evals: 0,
        best: None,
    };

    let zero = Trial {
        a: 0.0,
        f: phi0,
        d: dphi0,
    };

    // Bracketing: expand until the slope turns or the value gate trips.
    let mut lo = zero;
    let mut cur = search.eval(initial.clamp(f64::MIN_POSITIVE, cfg.max_step));
    let (mut lo, mut hi) = loop {
        if search.satisfies(&cur) {
            return Ok(search.accept(cur, None));
        }
        if cur.f.is_finite() && cur.f <= search.phi0 + search.eps {
            if cur.d >= 0.0 {
                break (lo, cur);
            }
            if cur.a >= cfg.max_step {
                return Ok(search.accept(cur, Some(SearchWarning::StepCap)));
            }
            if search.exhausted() {
                return search.fallback();
            }
            lo = cur;
            cur = search.eval((cur.a * cfg.expansion).min(cfg.max_step));
        } else {
            match search.bisect_overshoot(lo, cur) {
                Some(BracketStep::Accept(t)) => return Ok(search.accept(t, None)),
                Some(BracketStep::Bracket(a, b)) => break (a, b),
                None => return search.fallback(),
            }
        }
    };

    // Secant refinement with bisection safeguard.
    loop {
        let width = hi.a - lo.a;
        if width <= f64::EPSILON * hi.a.abs().max(1.0) {
            if lo.a > 0.0 && lo.f < phi0 {
                return Ok(search.accept(lo, Some(SearchWarning::NarrowBracket)));
            }
            return search.fallback();
        }

        // Double secant step.
        let c = secant(&lo, &hi);
        let (a1, b1, evaluated) = match search.update(lo, hi, c) {
            None => return search.fallback(),
            Some(UpdateStep::Accept(t)) => return Ok(search.accept(t, None)),
            Some(UpdateStep::Moved(a, b, t)) => (a, b, Some(t)),
            Some(UpdateStep::Unchanged(a, b)) => (a, b, None),
        };
        let (mut a2, mut b2) = (a1, b1);
        if let Some(t) = evaluated {
            let reuse = if t.a == b1.a {
                Some(secant(&hi, &b1))
            } else if t.a == a1.a {
                Some(secant(&lo, &a1))
            } else {
                None
            };
            if let Some(c2) = reuse {
                match search.update(a1, b1, c2) {
                    None => return search.fallback(),
                    Some(UpdateStep::Accept(t)) => return Ok(search.accept(t, None)),
                    Some(UpdateStep::Moved(a, b, _)) => (a2, b2) = (a, b),
                    Some(UpdateStep::Unchanged(a, b)) => (a2, b2) = (a, b),
                }
            }
        }

        // Insufficient shrink: bisect.
        if b2.a - a2.a > cfg.shrink_threshold * width {
            let mid = a2.a + 0.5 * (b2.a - a2.a);
            match search.update(a2, b2, mid) {
                None => return search.fallback(),
                Some(UpdateStep::Accept(t)) => return Ok(search.accept(t, None)),
                Some(UpdateStep::Moved(a, b, _)) => (a2, b2) = (a, b),
                Some(UpdateStep::Unchanged(a, b)) => (a2, b2) = (a, b),
            }
        }
        (lo, hi) = (a2, b2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(alpha: f64) -> (f64, f64) {
        ((alpha - 1.0) * (alpha - 1.0), 2.0 * (alpha - 1.0))
    }

    #[test]
    fn accepts_the_exact_minimizer_immediately() {
        let cfg = LineSearchConfig::default();
        let out = hager_zhang_search(quadratic, 1.0, -2.0, 1.0, &cfg).unwrap();
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.value, 0.0);
        assert_eq!(out.evaluations, 1);
        assert!(out.warning.is_none());
    }

    #[test]
    fn accepted_step_satisfies_both_wolfe_conditions() {
        let cfg = LineSearchConfig::default();
        for initial in [0.05, 0.3, 2.0, 7.0] {
            let out = hager_zhang_search(quadratic, 1.0, -2.0, initial, &cfg).unwrap();
            assert!(out.warning.is_none(), "initial {initial}");
            let (f, d) = quadratic(out.alpha);
            assert_eq!(f, out.value);
            assert!(f <= 1.0 + cfg.sufficient_decrease * out.alpha * -2.0);
            assert!(d >= cfg.curvature * -2.0);
            assert!(d.abs() <= cfg.curvature * 2.0);
        }
    }

    #[test]
    fn expansion_reaches_an_acceptable_step_from_a_tiny_guess() {
        let cfg = LineSearchConfig::default();
        let out = hager_zhang_search(quadratic, 1.0, -2.0, 1e-3, &cfg).unwrap();
        assert!(out.warning.is_none());
        assert!(out.alpha > 0.1 && out.alpha < 1.5, "alpha {}", out.alpha);
        assert!(out.value < 1.0);
    }

    #[test]
    fn linear_descent_stops_at_the_step_cap_with_warning() {
        let cfg = LineSearchConfig {
            max_step: 64.0,
            ..LineSearchConfig::default()
        };
        let out = hager_zhang_search(|a| (-a, -1.0), 0.0, -1.0, 1.0, &cfg).unwrap();
        assert_eq!(out.alpha, 64.0);
        assert_eq!(out.warning, Some(SearchWarning::StepCap));
        assert_eq!(out.value, -64.0);
    }

    #[test]
    fn ascent_direction_is_rejected() {
        // phi(a) = a^2 + a has phi'(0) = 1.
        let err = hager_zhang_search(|a| (a * a + a, 2.0 * a + 1.0), 0.0, 1.0, 1.0,
            &LineSearchConfig::default())
        .unwrap_err();
        assert!(matches!(err, Error::NotADescentDirection(s) if s == 1.0));
    }

    #[test]
    fn non_finite_region_is_backed_away_from() {
        let phi = |a: f64| {
            if a > 2.0 {
                (f64::NAN, f64::NAN)
            } else {
                quadratic(a)
            }
        };
        let cfg = LineSearchConfig::default();
        let out = hager_zhang_search(phi, 1.0, -2.0, 8.0, &cfg).unwrap();
        assert!(out.alpha <= 2.0);
        assert!(out.value < 1.0);
        assert!(out.warning.is_none());
    }

    #[test]
    fn exhausted_budget_returns_best_trial_with_warning() {
        // Tight conditions the early trials cannot meet.
        let cfg = LineSearchConfig {
            sufficient_decrease: 0.4,
            curvature: 0.5,
            max_iterations: 2,
            ..LineSearchConfig::default()
        };
        let out = hager_zhang_search(quadratic, 1.0, -2.0, 3.0, &cfg).unwrap();
        assert_eq!(out.warning, Some(SearchWarning::EvaluationBudget));
        assert_eq!(out.evaluations, 2);
        assert!(out.value < 1.0, "best-found trial still decreases");
    }

    #[test]
    fn defaults_are_ordered_wolfe_constants() {
        let cfg = LineSearchConfig::default();
        assert!(0.0 < cfg.sufficient_decrease);
        assert!(cfg.sufficient_decrease < cfg.curvature);
        assert!(cfg.curvature < 1.0);
        assert_eq!(cfg.max_iterations, 50);
    }
}
