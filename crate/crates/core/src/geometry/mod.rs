//! Flow domains, boundary data and collocation sampling.
//!
//! Two geometries are supported: a rectangular channel with a pulsatile
//! parabolic inlet on the left edge, and a semi-circular bend (half annulus)
//! with the inlet on the theta = pi cross-section, optionally narrowed by a
//! Gaussian indentation of the outer wall. Everything is dimensionless; the
//! inlet amplitude and fluid constants live in [`FlowConfig`].

mod partition;
mod sampling;

pub use partition::{partition_domain, InterfacePoints, Region, SubdomainSpec};
pub use sampling::{generate_collocation, sample_lhs, stratum_boundary};

use crate::error::{Error, Result};

/// Rectangular channel [0, L] x [0, H] over the time window [0, T].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleDomain {
    pub length: f64,
    pub height: f64,
    pub final_time: f64,
    pub time_step: f64,
}

impl Default for RectangleDomain {
    fn default() -> Self {
        RectangleDomain {
            length: 1.1,
            height: 0.41,
            final_time: 0.5,
            time_step: 0.01,
        }
    }
}

/// Half annulus: radius r in [R - a, r_outer(theta)], theta in [0, pi],
/// where R is the centerline (bend) radius and a the cross-sectional radius.
/// The inlet is the theta = pi segment, the outlet theta = 0. A stenosis is
/// modeled as a Gaussian dent of the outer wall:
/// r_outer(theta) = R + a - amplitude * exp(-(theta - center)^2 / (2 width^2)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiCircularDomain {
    pub cross_radius: f64,
    pub bend_radius: f64,
    pub final_time: f64,
    pub time_step: f64,
    pub stenosis_amplitude: f64,
    pub stenosis_center: f64,
    pub stenosis_width: f64,
}

impl Default for SemiCircularDomain {
    fn default() -> Self {
        SemiCircularDomain {
            cross_radius: 1.6,
            bend_radius: 2.9,
            final_time: 6.0,
            time_step: 0.01,
            stenosis_amplitude: 0.0,
            stenosis_center: std::f64::consts::FRAC_PI_2,
            stenosis_width: std::f64::consts::FRAC_PI_8,
        }
    }
}

impl SemiCircularDomain {
    /// Stenosed preset: dent depth half the cross radius, centered at the
    /// top of the bend.
    pub fn stenosed() -> Self {
        let base = Self::default();
        SemiCircularDomain {
            stenosis_amplitude: 0.5 * base.cross_radius,
            ..base
        }
    }

    pub fn r_inner(&self) -> f64 {
        self.bend_radius - self.cross_radius
    }

    pub fn r_outer(&self, theta: f64) -> f64 {
        let d = theta - self.stenosis_center;
        self.bend_radius + self.cross_radius
            - self.stenosis_amplitude * (-d * d / (2.0 * self.stenosis_width * self.stenosis_width)).exp()
    }

    /// Polar coordinates (r, theta) of a point, theta in [-pi, pi].
    pub fn polar(x: f64, y: f64) -> (f64, f64) {
        (x.hypot(y), y.atan2(x))
    }
}

/// Either supported geometry plus its time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Rectangle(RectangleDomain),
    SemiCircular(SemiCircularDomain),
}

impl Domain {
    pub fn final_time(&self) -> f64 {
        match self {
            Domain::Rectangle(d) => d.final_time,
            Domain::SemiCircular(d) => d.final_time,
        }
    }

    pub fn time_step(&self) -> f64 {
        match self {
            Domain::Rectangle(d) => d.time_step,
            Domain::SemiCircular(d) => d.time_step,
        }
    }

    /// Spatial bounding box as ((x_min, x_max), (y_min, y_max)).
    pub fn bounding_box(&self) -> ((f64, f64), (f64, f64)) {
        match self {
            Domain::Rectangle(d) => ((0.0, d.length), (0.0, d.height)),
            Domain::SemiCircular(d) => {
                let r = d.bend_radius + d.cross_radius;
                ((-r, r), (0.0, r))
            }
        }
    }

    /// Membership test with an absolute slack `tol` on the boundary.
    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        match self {
            Domain::Rectangle(d) => {
                x >= -tol && x <= d.length + tol && y >= -tol && y <= d.height + tol
            }
            Domain::SemiCircular(d) => {
                if y < -tol {
                    return false;
                }
                let (r, theta) = SemiCircularDomain::polar(x, y.max(0.0));
                r >= d.r_inner() - tol && r <= d.r_outer(theta.clamp(0.0, std::f64::consts::PI)) + tol
            }
        }
    }

    fn strictly_inside(&self, x: f64, y: f64) -> bool {
        match self {
            Domain::Rectangle(d) => x > 0.0 && x < d.length && y > 0.0 && y < d.height,
            Domain::SemiCircular(d) => {
                if y <= 0.0 {
                    return false;
                }
                let (r, theta) = SemiCircularDomain::polar(x, y);
                r > d.r_inner() && r < d.r_outer(theta)
            }
        }
    }
}

/// Fluid constants and inlet amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub density: f64,
    pub viscosity: f64,
    pub u_max: f64,
}

impl FlowConfig {
    pub fn rectangle_defaults() -> Self {
        FlowConfig {
            density: 1.0,
            viscosity: 0.01,
            u_max: 0.5,
        }
    }

    pub fn semicircle_defaults() -> Self {
        FlowConfig {
            density: 1.0,
            viscosity: 0.4,
            u_max: 0.75,
        }
    }
}

/// Pulsatile factor sin(pi t / T + 3 pi / 2) + 1; zero at t = 0, peak 2 at
/// t = T.
pub fn pulse(t: f64, final_time: f64) -> f64 {
    (std::f64::consts::PI * t / final_time + 1.5 * std::f64::consts::PI).sin() + 1.0
}

/// Inlet velocity of the rectangular channel at height y, time t.
pub fn rectangle_inlet_velocity(
    domain: &RectangleDomain,
    flow: &FlowConfig,
    y: f64,
    t: f64,
) -> Result<(f64, f64)> {
    if !(0.0..=domain.height).contains(&y) {
        return Err(Error::OutOfDomain(0.0, y));
    }
    let h = domain.height;
    let u = 4.0 * flow.u_max * y * (h - y) / (h * h) * pulse(t, domain.final_time);
    Ok((u, 0.0))
}

/// Inlet velocity of the semi-circular bend in global coordinates.
///
/// `s` is the cross-sectional coordinate measured from the inner wall along
/// the inlet segment, with diameter D = 2a. Flow enters in the +y direction
/// (decreasing theta from pi).
pub fn semicircle_inlet_velocity(
    domain: &SemiCircularDomain,
    flow: &FlowConfig,
    s: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let d = 2.0 * domain.cross_radius;
    if !(0.0..=d).contains(&s) {
        return Err(Error::OutOfDomain(s, 0.0));
    }
    let axial = 4.0 * flow.u_max * s * (d - s) / (d * d) * pulse(t, domain.final_time);
    Ok((0.0, axial))
}

/// A boundary collocation point with its prescribed data. Absent targets are
/// not penalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub pos: [f64; 3],
    pub target_u: Option<f64>,
    pub target_v: Option<f64>,
    pub target_p: Option<f64>,
    pub kind: BoundaryKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Wall,
    Inlet,
    Outlet,
}

/// Sampled training data: interior residual points, boundary points with
/// targets, and initial points at t = 0 where (u, v, p) = (0, 0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    pub interior: Vec<[f64; 3]>,
    pub boundary: Vec<BoundaryPoint>,
    pub initial: Vec<[f64; 2]>,
}

impl CollocationSet {
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_initial(&self) -> usize {
        self.initial.len()
    }

    pub fn total(&self) -> usize {
        self.n_interior() + self.n_boundary() + self.n_initial()
    }
}

/// Point budget for collocation generation. `boundary` counts wall points,
/// `inout` counts inlet plus outlet points. The initial slice mirrors the
/// boundary slice (`boundary + inout` points at t = 0); the interior gets
/// the remainder of `total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollocationCounts {
    pub total: usize,
    pub boundary: usize,
    pub inout: usize,
}

impl CollocationCounts {
    pub fn rectangle_training() -> Self {
        CollocationCounts {
            total: 3321,
            boundary: 244,
            inout: 81,
        }
    }

    pub fn rectangle_prediction() -> Self {
        CollocationCounts {
            total: 64561,
            boundary: 1124,
            inout: 161,
        }
    }

    pub fn semicircle_training() -> Self {
        CollocationCounts {
            total: 29760,
            boundary: 2000,
            inout: 640,
        }
    }

    pub fn n_interior(&self) -> Option<usize> {
        let fixed = 2 * (self.boundary + self.inout);
        self.total.checked_sub(fixed).filter(|&n| n > 0)
    }
}

/// Seed derivation for independent sampling streams (splitmix64 step).
pub(crate) fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base
        .wrapping_add(tag.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
