//! Domain decomposition into equal slabs with shared interfaces.
//!
//! The rectangle splits into x-slabs, the bend into angular slabs. Interface
//! point lists are generated once per neighboring pair and shared verbatim by
//! both sides; the stored normals satisfy n_ij = -n_ji exactly.

use super::{derive_seed, sample_lhs, CollocationSet, Domain, SemiCircularDomain};
use crate::error::{Error, Result};

/// Slab occupied by one subdomain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    XSlab { x_min: f64, x_max: f64 },
    ThetaSlab { theta_min: f64, theta_max: f64 },
}

impl Region {
    /// Slab coordinate of a point: x for x-slabs, polar angle for angular
    /// slabs.
    pub fn coordinate(&self, x: f64, y: f64) -> f64 {
        match self {
            Region::XSlab { .. } => x,
            Region::ThetaSlab { .. } => SemiCircularDomain::polar(x, y).1,
        }
    }

    /// Slab bounds in the same coordinate as [`Self::coordinate`].
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Region::XSlab { x_min, x_max } => (x_min, x_max),
            Region::ThetaSlab {
                theta_min,
                theta_max,
            } => (theta_min, theta_max),
        }
    }

    /// Membership of a spatial point. `last` closes the upper edge so the
    /// slabs tile the domain without gaps or overlaps.
    pub fn contains(&self, x: f64, y: f64, last: bool) -> bool {
        match *self {
            Region::XSlab { x_min, x_max } => x >= x_min && (x < x_max || (last && x <= x_max)),
            Region::ThetaSlab {
                theta_min,
                theta_max,
            } => {
                let (_, theta) = SemiCircularDomain::polar(x, y);
                theta >= theta_min && (theta < theta_max || (last && theta <= theta_max))
            }
        }
    }
}

/// Interface sample shared with one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfacePoints {
    pub neighbor: usize,
    /// Identical on both sides of the pair.
    pub points: Vec<[f64; 3]>,
    /// Unit normal pointing from this subdomain toward `neighbor`.
    pub normal: [f64; 2],
}

/// One subdomain: its slab, its share of the collocation data and its
/// interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainSpec {
    pub index: usize,
    pub region: Region,
    pub collocation: CollocationSet,
    pub interfaces: Vec<InterfacePoints>,
}

impl SubdomainSpec {
    pub fn neighbors(&self) -> Vec<usize> {
        self.interfaces.iter().map(|i| i.neighbor).collect()
    }
}

/// Split the domain into `m` equal slabs and distribute `set` by membership.
/// Every neighboring pair receives `n_interface` points sampled by LHS over
/// (transverse coordinate, time).
pub fn partition_domain(
    domain: &Domain,
    set: &CollocationSet,
    m: usize,
    n_interface: usize,
    seed: u64,
) -> Result<Vec<SubdomainSpec>> {
    if m == 0 {
        return Err(Error::Partition("need at least one subdomain".into()));
    }
    if m > 1 && n_interface == 0 {
        return Err(Error::Partition(
            "interface point budget must be positive when m > 1".into(),
        ));
    }

    let regions: Vec<Region> = match domain {
        Domain::Rectangle(d) => (0..m)
            .map(|k| Region::XSlab {
                x_min: d.length * k as f64 / m as f64,
                x_max: d.length * (k + 1) as f64 / m as f64,
            })
            .collect(),
        Domain::SemiCircular(_) => {
            let pi = std::f64::consts::PI;
            (0..m)
                .map(|k| Region::ThetaSlab {
                    theta_min: pi * k as f64 / m as f64,
                    theta_max: pi * (k + 1) as f64 / m as f64,
                })
                .collect()
        }
    };

    let assign = |x: f64, y: f64| -> usize {
        for (k, r) in regions.iter().enumerate() {
            if r.contains(x, y, k == m - 1) {
                return k;
            }
        }
        // Points come from the collocation generator, so they lie inside the
        // domain; clamp any residual rounding case to the nearest slab.
        m - 1
    };

    let mut subs: Vec<SubdomainSpec> = regions
        .iter()
        .enumerate()
        .map(|(k, &region)| SubdomainSpec {
            index: k,
            region,
            collocation: CollocationSet {
                interior: Vec::new(),
                boundary: Vec::new(),
                initial: Vec::new(),
            },
            interfaces: Vec::new(),
        })
        .collect();

    for p in &set.interior {
        subs[assign(p[0], p[1])].collocation.interior.push(*p);
    }
    for b in &set.boundary {
        subs[assign(b.pos[0], b.pos[1])].collocation.boundary.push(*b);
    }
    for p in &set.initial {
        subs[assign(p[0], p[1])].collocation.initial.push(*p);
    }

    for (k, sub) in subs.iter().enumerate() {
        if sub.collocation.interior.is_empty() {
            return Err(Error::Partition(format!(
                "subdomain {} of {} has no interior points; reduce the subdomain count",
                k, m
            )));
        }
    }

    // Interfaces between slab k and k+1.
    let t1 = domain.final_time();
    for k in 0..m.saturating_sub(1) {
        let (points, normal) = match domain {
            Domain::Rectangle(d) => {
                let cut = d.length * (k + 1) as f64 / m as f64;
                let samples = sample_lhs(
                    &[(0.0, d.height), (0.0, t1)],
                    n_interface,
                    derive_seed(seed, 100 + k as u64),
                )?;
                let pts: Vec<[f64; 3]> =
                    samples.into_iter().map(|p| [cut, p[0], p[1]]).collect();
                (pts, [1.0, 0.0])
            }
            Domain::SemiCircular(d) => {
                let pi = std::f64::consts::PI;
                let theta = pi * (k + 1) as f64 / m as f64;
                let samples = sample_lhs(
                    &[(d.r_inner(), d.r_outer(theta)), (0.0, t1)],
                    n_interface,
                    derive_seed(seed, 100 + k as u64),
                )?;
                let pts: Vec<[f64; 3]> = samples
                    .into_iter()
                    .map(|p| [p[0] * theta.cos(), p[0] * theta.sin(), p[1]])
                    .collect();
                // Unit azimuthal direction, pointing toward increasing theta.
                (pts, [-theta.sin(), theta.cos()])
            }
        };
        subs[k].interfaces.push(InterfacePoints {
            neighbor: k + 1,
            points: points.clone(),
            normal,
        });
        subs[k + 1].interfaces.push(InterfacePoints {
            neighbor: k,
            points,
            normal: [-normal[0], -normal[1]],
        });
    }

    Ok(subs)
}
