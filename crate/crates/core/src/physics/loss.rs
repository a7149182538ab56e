//! Weighted loss assembly across subdomains.

use super::residuals::{
    boundary_initial_residuals, flux_residuals, governing_residuals, interface_residuals,
    velocity_pressure, ResidualForm,
};
use crate::error::{Error, Result};
use crate::geometry::{FlowConfig, SubdomainSpec};
use crate::net::{evaluate_with_derivatives, NetworkParams};

/// Training variant. Selects which loss components participate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Single network, boundary/initial weighting only.
    Wpinn,
    /// Decomposed with interface continuity penalties.
    Wxpinn,
    /// Decomposed with continuity and flux conservation penalties.
    Wcpinn,
}

impl Variant {
    pub fn uses_interface(self) -> bool {
        !matches!(self, Variant::Wpinn)
    }

    pub fn uses_flux(self) -> bool {
        matches!(self, Variant::Wcpinn)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Wpinn => "wpinn",
            Variant::Wxpinn => "wxpinn",
            Variant::Wcpinn => "wcpinn",
        }
    }
}

/// Weights on the non-governing loss components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            beta: 1.0,
            gamma: 1.0,
            delta: 1.0,
        }
    }
}

/// The loss components, the weights in effect, and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub governing: f64,
    pub bc_ic: f64,
    pub interface: f64,
    pub flux: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// A breakdown holding a bare scalar objective. Used by optimizer tests
    /// and anywhere a total is tracked without component structure.
    pub fn from_scalar(value: f64) -> LossBreakdown {
        LossBreakdown {
            governing: value,
            bc_ic: 0.0,
            interface: 0.0,
            flux: 0.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            total: value,
        }
    }

    /// Combines raw component values under the variant's active weights.
    /// Components a variant does not use are forced to zero, so the stored
    /// fields always satisfy
    /// `total = governing + beta*bc_ic + gamma*interface + delta*flux`.
    pub fn compose(
        governing: f64,
        bc_ic: f64,
        interface: f64,
        flux: f64,
        weights: LossWeights,
        variant: Variant,
    ) -> LossBreakdown {
        let (gamma, interface) = if variant.uses_interface() {
            (weights.gamma, interface)
        } else {
            (0.0, 0.0)
        };
        let (delta, flux) = if variant.uses_flux() {
            (weights.delta, flux)
        } else {
            (0.0, 0.0)
        };
        let beta = weights.beta;
        LossBreakdown {
            governing,
            bc_ic,
            interface,
            flux,
            beta,
            gamma,
            delta,
            total: governing + beta * bc_ic + gamma * interface + delta * flux,
        }
    }
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Evaluates the full variant loss for the given networks and subdomains.
///
/// This is the plain, value-only assembly: every point is evaluated
/// independently and accumulated in order. The fused gradient path in the
/// trainer must agree with it to rounding error, which makes this the
/// reference the tests check against.
///
/// Interface and flux terms are charged to both sides of each pair; the
/// residual definitions make the two charges equal, so no side is
/// privileged. A flux weight of exactly zero skips flux evaluation
/// entirely, which keeps the conservative variant's trajectory identical
/// to the continuity-only variant when the flux term is switched off.
pub fn assemble_loss(
    nets: &[NetworkParams],
    subs: &[SubdomainSpec],
    flow: &FlowConfig,
    weights: LossWeights,
    variant: Variant,
) -> Result<LossBreakdown> {
    if nets.len() != subs.len() {
        return Err(Error::Configuration(format!(
            "{} networks for {} subdomains",
            nets.len(),
            subs.len()
        )));
    }

    let mut governing = 0.0;
    let mut bc_ic = 0.0;
    let mut interface = 0.0;
    let mut flux = 0.0;

    for (i, sub) in subs.iter().enumerate() {
        let net = &nets[i];
        let set = &sub.collocation;
        if set.interior.is_empty() {
            return Err(Error::DegenerateLoss(format!(
                "subdomain {i} has no interior collocation points"
            )));
        }

        let mut g_sum = 0.0;
        for pt in &set.interior {
            let eval = evaluate_with_derivatives(net, pt, 2)?;
            g_sum += governing_residuals(&eval, flow, ResidualForm::SigmaDivergence)?
                .squared_sum();
        }
        governing += mean(g_sum, set.interior.len());

        let mut b_sum = 0.0;
        for bp in &set.boundary {
            let eval = evaluate_with_derivatives(net, &bp.pos, 2)?;
            b_sum += boundary_initial_residuals(&eval, bp)?;
        }
        let mut ic_sum = 0.0;
        for &[x, y] in &set.initial {
            let eval = evaluate_with_derivatives(net, &[x, y, 0.0], 2)?;
            let (u, v, _) = velocity_pressure(&eval);
            ic_sum += u * u + v * v;
        }
        bc_ic += mean(b_sum, set.boundary.len()) + mean(ic_sum, set.initial.len());

        if !variant.uses_interface() {
            continue;
        }
        for iface in &sub.interfaces {
            let j = iface.neighbor;
            let other = nets
                .get(j)
                .ok_or(Error::InterfaceMismatch(i, j))?;
            let mut if_sum = 0.0;
            let mut fl_sum = 0.0;
            for pt in &iface.points {
                let ei = evaluate_with_derivatives(net, pt, 2)?;
                let ej = evaluate_with_derivatives(other, pt, 2)?;
                let pi = velocity_pressure(&ei);
                let pj = velocity_pressure(&ej);
                if_sum += interface_residuals(pi, pj).squared_sum();
                if variant.uses_flux() && weights.delta != 0.0 {
                    let [nx, ny] = iface.normal;
                    let un_i = pi.0 * nx + pi.1 * ny;
                    let un_j = pj.0 * nx + pj.1 * ny;
                    fl_sum +=
                        flux_residuals(un_i, pi.2, un_j, pj.2, flow.density).squared_sum();
                }
            }
            interface += mean(if_sum, iface.points.len());
            flux += mean(fl_sum, iface.points.len());
        }
    }

    Ok(LossBreakdown::compose(
        governing, bc_ic, interface, flux, weights, variant,
    ))
}
