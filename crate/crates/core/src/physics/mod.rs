//! Flow residuals and the weighted training loss.

mod loss;
mod residuals;

pub use loss::{assemble_loss, LossBreakdown, LossWeights, Variant};
pub use residuals::{
    boundary_initial_residuals, flux_residuals, governing_adjoint, governing_residuals,
    interface_residuals, velocity_from_stream, velocity_pressure, FluxResiduals,
    GoverningResiduals, InterfaceResiduals, ResidualForm, StreamVelocity,
};
