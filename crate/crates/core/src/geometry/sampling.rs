//! Latin hypercube sampling and collocation set generation.

use super::{
    derive_seed, rectangle_inlet_velocity, semicircle_inlet_velocity, BoundaryKind,
    BoundaryPoint, CollocationCounts, CollocationSet, Domain, FlowConfig,
};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stratum boundary `lo + k * (hi - lo) / n`, evaluated with the same
/// floating-point operations the sampler uses so membership checks are exact.
pub fn stratum_boundary(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    let step = (hi - lo) / n as f64;
    lo + k as f64 * step
}

/// Latin hypercube sample: `n` points in the box given by `bounds`, with
/// exactly one point per stratum in every dimension. Deterministic per seed.
pub fn sample_lhs(bounds: &[(f64, f64)], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::EmptySample(0));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Configuration(format!(
                "bad sampling interval [{}, {}]",
                lo, hi
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; bounds.len()]; n];
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        let step = (hi - lo) / n as f64;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for (i, point) in out.iter_mut().enumerate() {
            // The offset is kept away from 0 and 1 so rounding can never
            // push a sample across its stratum boundary.
            let u: f64 = rng.gen::<f64>().clamp(1e-9, 1.0 - 1e-9);
            point[d] = (lo + perm[i] as f64 * step) + u * step;
        }
    }
    Ok(out)
}

fn lhs3(bounds: [(f64, f64); 3], n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    Ok(sample_lhs(&bounds, n, seed)?
        .into_iter()
        .map(|p| [p[0], p[1], p[2]])
        .collect())
}

fn lhs2(bounds: [(f64, f64); 2], n: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    Ok(sample_lhs(&bounds, n, seed)?
        .into_iter()
        .map(|p| [p[0], p[1]])
        .collect())
}

/// Interior samples for a curved domain: stratified draws over the bounding
/// box, rejecting outside points and redrawing until the budget is met.
fn sample_interior(domain: &Domain, n: usize, with_time: bool, seed: u64) -> Result<Vec<Vec<f64>>> {
    let ((x0, x1), (y0, y1)) = domain.bounding_box();
    let t1 = domain.final_time();
    let bounds: Vec<(f64, f64)> = if with_time {
        vec![(x0, x1), (y0, y1), (0.0, t1)]
    } else {
        vec![(x0, x1), (y0, y1)]
    };
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut round = 0u64;
    while kept.len() < n {
        let missing = n - kept.len();
        let batch = sample_lhs(&bounds, missing, derive_seed(seed, round))?;
        for p in batch {
            if domain.strictly_inside(p[0], p[1]) {
                kept.push(p);
            }
        }
        round += 1;
        if round > 10_000 {
            return Err(Error::Configuration(
                "interior sampling failed to fill the budget; the domain may be degenerate"
                    .into(),
            ));
        }
    }
    Ok(kept)
}

/// Generate the training data for a domain: interior residual points,
/// boundary points with their targets, and initial points.
///
/// Budget split: `counts.boundary` wall points plus `counts.inout`
/// inlet/outlet points form the boundary list; the initial list gets the
/// same total; the interior receives the rest.
pub fn generate_collocation(
    domain: &Domain,
    flow: &FlowConfig,
    counts: &CollocationCounts,
    seed: u64,
) -> Result<CollocationSet> {
    let n_interior = counts.n_interior().ok_or_else(|| {
        Error::Configuration(format!(
            "total budget {} leaves no interior points after boundary {} and inlet/outlet {}",
            counts.total, counts.boundary, counts.inout
        ))
    })?;
    let t1 = domain.final_time();
    let n_inlet = counts.inout - counts.inout / 2;
    let n_outlet = counts.inout / 2;

    let interior: Vec<[f64; 3]> = match domain {
        Domain::Rectangle(d) => lhs3(
            [(0.0, d.length), (0.0, d.height), (0.0, t1)],
            n_interior,
            derive_seed(seed, 1),
        )?,
        Domain::SemiCircular(_) => sample_interior(domain, n_interior, true, derive_seed(seed, 1))?
            .into_iter()
            .map(|p| [p[0], p[1], p[2]])
            .collect(),
    };

    let mut boundary: Vec<BoundaryPoint> = Vec::with_capacity(counts.boundary + counts.inout);
    match domain {
        Domain::Rectangle(d) => {
            // Walls y = 0 and y = H, no-slip.
            let n_bottom = counts.boundary - counts.boundary / 2;
            let n_top = counts.boundary / 2;
            for (wall_y, n, tag) in [(0.0, n_bottom, 2u64), (d.height, n_top, 3u64)] {
                if n == 0 {
                    continue;
                }
                for p in lhs2([(0.0, d.length), (0.0, t1)], n, derive_seed(seed, tag))? {
                    boundary.push(BoundaryPoint {
                        pos: [p[0], wall_y, p[1]],
                        target_u: Some(0.0),
                        target_v: Some(0.0),
                        target_p: None,
                        kind: BoundaryKind::Wall,
                    });
                }
            }
            if n_inlet > 0 {
                for p in lhs2([(0.0, d.height), (0.0, t1)], n_inlet, derive_seed(seed, 4))? {
                    let (u, v) = rectangle_inlet_velocity(d, flow, p[0], p[1])?;
                    boundary.push(BoundaryPoint {
                        pos: [0.0, p[0], p[1]],
                        target_u: Some(u),
                        target_v: Some(v),
                        target_p: None,
                        kind: BoundaryKind::Inlet,
                    });
                }
            }
            if n_outlet > 0 {
                for p in lhs2([(0.0, d.height), (0.0, t1)], n_outlet, derive_seed(seed, 5))? {
                    boundary.push(BoundaryPoint {
                        pos: [d.length, p[0], p[1]],
                        target_u: None,
                        target_v: None,
                        target_p: Some(0.0),
                        kind: BoundaryKind::Outlet,
                    });
                }
            }
        }
        Domain::SemiCircular(d) => {
            let pi = std::f64::consts::PI;
            let n_inner = counts.boundary - counts.boundary / 2;
            let n_outer = counts.boundary / 2;
            // Inner and outer arcs, no-slip. Points are placed exactly on
            // the wall radius at the sampled angle.
            for (outer, n, tag) in [(false, n_inner, 2u64), (true, n_outer, 3u64)] {
                if n == 0 {
                    continue;
                }
                for p in lhs2([(0.0, pi), (0.0, t1)], n, derive_seed(seed, tag))? {
                    let theta = p[0];
                    let r = if outer { d.r_outer(theta) } else { d.r_inner() };
                    boundary.push(BoundaryPoint {
                        pos: [r * theta.cos(), r * theta.sin(), p[1]],
                        target_u: Some(0.0),
                        target_v: Some(0.0),
                        target_p: None,
                        kind: BoundaryKind::Wall,
                    });
                }
            }
            if n_inlet > 0 {
                let width = d.r_outer(pi) - d.r_inner();
                for p in lhs2([(0.0, width), (0.0, t1)], n_inlet, derive_seed(seed, 4))? {
                    let (u, v) = semicircle_inlet_velocity(d, flow, p[0], p[1])?;
                    boundary.push(BoundaryPoint {
                        pos: [-(d.r_inner() + p[0]), 0.0, p[1]],
                        target_u: Some(u),
                        target_v: Some(v),
                        target_p: None,
                        kind: BoundaryKind::Inlet,
                    });
                }
            }
            if n_outlet > 0 {
                let width = d.r_outer(0.0) - d.r_inner();
                for p in lhs2([(0.0, width), (0.0, t1)], n_outlet, derive_seed(seed, 5))? {
                    boundary.push(BoundaryPoint {
                        pos: [d.r_inner() + p[0], 0.0, p[1]],
                        target_u: None,
                        target_v: None,
                        target_p: Some(0.0),
                        kind: BoundaryKind::Outlet,
                    });
                }
            }
        }
    }

    let n_initial = counts.boundary + counts.inout;
    let initial: Vec<[f64; 2]> = match domain {
        Domain::Rectangle(d) => lhs2(
            [(0.0, d.length), (0.0, d.height)],
            n_initial,
            derive_seed(seed, 6),
        )?,
        Domain::SemiCircular(_) => {
            sample_interior(domain, n_initial, false, derive_seed(seed, 6))?
                .into_iter()
                .map(|p| [p[0], p[1]])
                .collect()
        }
    };

    Ok(CollocationSet {
        interior,
        boundary,
        initial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RectangleDomain, SemiCircularDomain};
    use proptest::prelude::*;

    /// Exact occupancy check used by the stratification tests: one point per
    /// stratum per dimension, with boundaries computed exactly as the
    /// sampler computes them.
    fn assert_stratified(points: &[Vec<f64>], bounds: &[(f64, f64)], n: usize) {
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            let mut hits = vec![0usize; n];
            for p in points {
                let k = (0..n)
                    .find(|&k| {
                        p[d] >= stratum_boundary(lo, hi, n, k)
                            && p[d] < stratum_boundary(lo, hi, n, k + 1)
                    })
                    .unwrap_or_else(|| panic!("point {} outside all strata", p[d]));
                hits[k] += 1;
            }
            assert!(hits.iter().all(|&c| c == 1), "dimension {} not stratified", d);
        }
    }

    #[test]
    fn lhs_stratification_fixed_sizes() {
        let bounds = [(0.0, 1.1), (0.0, 0.41), (0.0, 0.5)];
        for n in [1usize, 4, 100, 3321] {
            let pts = sample_lhs(&bounds, n, 77).unwrap();
            assert_eq!(pts.len(), n);
            assert_stratified(&pts, &bounds, n);
        }
    }

    #[test]
    fn lhs_is_deterministic_per_seed() {
        let bounds = [(0.0, 2.0), (-1.0, 1.0)];
        let a = sample_lhs(&bounds, 50, 9).unwrap();
        let b = sample_lhs(&bounds, 50, 9).unwrap();
        let c = sample_lhs(&bounds, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn lhs_rejects_zero_points() {
        assert!(matches!(
            sample_lhs(&[(0.0, 1.0)], 0, 1),
            Err(Error::EmptySample(0))
        ));
    }

    proptest! {
        #[test]
        fn lhs_stratification_random(n in 1usize..150, seed in 0u64..1000) {
            let bounds = [(-2.5, 3.0), (0.0, 0.41)];
            let pts = sample_lhs(&bounds, n, seed).unwrap();
            assert_stratified(&pts, &bounds, n);
        }
    }

    #[test]
    fn rectangle_training_counts() {
        let domain = Domain::Rectangle(RectangleDomain::default());
        let flow = FlowConfig::rectangle_defaults();
        let set =
            generate_collocation(&domain, &flow, &CollocationCounts::rectangle_training(), 3)
                .unwrap();
        assert_eq!(set.total(), 3321);
        assert_eq!(set.n_boundary(), 244 + 81);
        assert_eq!(set.n_initial(), 244 + 81);
        assert_eq!(set.n_interior(), 3321 - 2 * 325);
        // Every wall point sits exactly on a wall; inlet/outlet on their edges.
        for b in &set.boundary {
            match b.kind {
                BoundaryKind::Wall => {
                    assert!(b.pos[1] == 0.0 || b.pos[1] == 0.41);
                    assert_eq!((b.target_u, b.target_v), (Some(0.0), Some(0.0)));
                    assert_eq!(b.target_p, None);
                }
                BoundaryKind::Inlet => {
                    assert_eq!(b.pos[0], 0.0);
                    assert!(b.target_u.is_some() && b.target_v == Some(0.0));
                }
                BoundaryKind::Outlet => {
                    assert_eq!(b.pos[0], 1.1);
                    assert_eq!(b.target_p, Some(0.0));
                    assert!(b.target_u.is_none() && b.target_v.is_none());
                }
            }
        }
        for p in &set.interior {
            assert!(p[0] > 0.0 && p[0] < 1.1 && p[1] > 0.0 && p[1] < 0.41);
            assert!(p[2] > 0.0 && p[2] < 0.5);
        }
    }

    #[test]
    fn rectangle_prediction_counts() {
        let domain = Domain::Rectangle(RectangleDomain::default());
        let flow = FlowConfig::rectangle_defaults();
        let set = generate_collocation(
            &domain,
            &flow,
            &CollocationCounts::rectangle_prediction(),
            3,
        )
        .unwrap();
        assert_eq!(set.total(), 64561);
        assert_eq!(set.n_boundary(), 1124 + 161);
    }

    #[test]
    fn semicircle_collocation_fills_budget_and_walls_are_exact() {
        let d = SemiCircularDomain::stenosed();
        let domain = Domain::SemiCircular(d);
        let flow = FlowConfig::semicircle_defaults();
        let counts = CollocationCounts {
            total: 2976,
            boundary: 200,
            inout: 64,
        };
        let set = generate_collocation(&domain, &flow, &counts, 11).unwrap();
        assert_eq!(set.total(), 2976);
        for b in &set.boundary {
            let (r, theta) = SemiCircularDomain::polar(b.pos[0], b.pos[1]);
            match b.kind {
                BoundaryKind::Wall => {
                    let near_inner = (r - d.r_inner()).abs() <= 1e-12;
                    let near_outer = (r - d.r_outer(theta)).abs() <= 1e-12;
                    assert!(near_inner || near_outer, "wall point off the walls");
                }
                BoundaryKind::Inlet => assert!(b.pos[0] < 0.0 && b.pos[1] == 0.0),
                BoundaryKind::Outlet => assert!(b.pos[0] > 0.0 && b.pos[1] == 0.0),
            }
        }
        for p in &set.interior {
            assert!(domain.contains(p[0], p[1], 0.0));
        }
        for p in &set.initial {
            assert!(domain.contains(p[0], p[1], 0.0));
        }
    }

    #[test]
    fn inlet_targets_match_the_profile_at_sample_time() {
        let d = RectangleDomain::default();
        let domain = Domain::Rectangle(d);
        let flow = FlowConfig::rectangle_defaults();
        let counts = CollocationCounts {
            total: 200,
            boundary: 20,
            inout: 20,
        };
        let set = generate_collocation(&domain, &flow, &counts, 5).unwrap();
        for b in set.boundary.iter().filter(|b| b.kind == BoundaryKind::Inlet) {
            let (u, v) = rectangle_inlet_velocity(&d, &flow, b.pos[1], b.pos[2]).unwrap();
            assert_eq!(b.target_u, Some(u));
            assert_eq!(b.target_v, Some(v));
        }
    }
}
