//! Pointwise residual operators for the mixed-variable flow formulation.
//!
//! The network predicts (psi, p, s11, s12, s22). Velocity comes from the
//! stream function, so continuity holds by construction and the momentum
//! equations close either through the stress divergence (order-2 input
//! derivatives) or directly through pressure and the velocity Laplacian
//! (order-3, used as a cross-check).

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, FlowConfig};
use crate::net::{OutputAdjoint, PointEvaluation, P, PSI, S11, S12, S22};

/// Which closure of the momentum equations to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualForm {
    /// Momentum through the divergence of the predicted stress outputs.
    SigmaDivergence,
    /// Momentum through pressure gradient and velocity Laplacian. Needs
    /// third derivatives of the stream function.
    Direct,
}

/// Velocity recovered from stream-function derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamVelocity {
    pub u: f64,
    pub v: f64,
}

/// u = d(psi)/dy, v = -d(psi)/dx.
#[inline]
pub fn velocity_from_stream(eval: &PointEvaluation) -> StreamVelocity {
    StreamVelocity {
        u: eval.first[PSI][1],
        v: -eval.first[PSI][0],
    }
}

/// (u, v, p) at a point, the quantities matched across interfaces and
/// against boundary targets.
#[inline]
pub fn velocity_pressure(eval: &PointEvaluation) -> (f64, f64, f64) {
    let vel = velocity_from_stream(eval);
    (vel.u, vel.v, eval.outputs[P])
}

/// The six governing residuals at one collocation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoverningResiduals {
    pub momentum_x: f64,
    pub momentum_y: f64,
    pub pressure: f64,
    pub stress_xx: f64,
    pub stress_xy: f64,
    pub stress_yy: f64,
}

impl GoverningResiduals {
    #[inline]
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.momentum_x,
            self.momentum_y,
            self.pressure,
            self.stress_xx,
            self.stress_xy,
            self.stress_yy,
        ]
    }

    /// Sum of squares of all six components.
    #[inline]
    pub fn squared_sum(&self) -> f64 {
        self.as_array().iter().map(|r| r * r).sum()
    }
}

/// Evaluates the six governing residuals from one network evaluation.
///
/// The constitutive and pressure residuals are identical in both forms;
/// only the momentum closure differs. `Direct` requires the evaluation to
/// carry third derivatives.
pub fn governing_residuals(
    eval: &PointEvaluation,
    flow: &FlowConfig,
    form: ResidualForm,
) -> Result<GoverningResiduals> {
    let rho = flow.density;
    let mu = flow.viscosity;

    let psi_x = eval.first[PSI][0];
    let psi_y = eval.first[PSI][1];
    let [hxx, hxy, hxt, hyy, hyt, _htt] = eval.psi_second;

    let u = psi_y;
    let v = -psi_x;
    let u_x = hxy;
    let u_y = hyy;
    let u_t = hyt;
    let v_x = -hxx;
    let v_y = -hxy;
    let v_t = -hxt;

    let p = eval.outputs[P];
    let s11 = eval.outputs[S11];
    let s12 = eval.outputs[S12];
    let s22 = eval.outputs[S22];

    let accel_x = rho * (u_t + u * u_x + v * u_y);
    let accel_y = rho * (v_t + u * v_x + v * v_y);

    let (momentum_x, momentum_y) = match form {
        ResidualForm::SigmaDivergence => {
            let s11_x = eval.first[S11][0];
            let s12_x = eval.first[S12][0];
            let s12_y = eval.first[S12][1];
            let s22_y = eval.first[S22][1];
            (accel_x - (s11_x + s12_y), accel_y - (s12_x + s22_y))
        }
        ResidualForm::Direct => {
            let t = eval.psi_third.ok_or_else(|| {
                Error::InsufficientDerivativeOrder(
                    "direct momentum residuals need third derivatives of psi".into(),
                )
            })?;
            let p_x = eval.first[P][0];
            let p_y = eval.first[P][1];
            // u = psi_y: u_xx = psi_xxy, u_yy = psi_yyy
            // v = -psi_x: v_xx = -psi_xxx, v_yy = -psi_xyy
            let lap_u = t[1] + t[6];
            let lap_v = -(t[0] + t[3]);
            (accel_x + p_x - mu * lap_u, accel_y + p_y - mu * lap_v)
        }
    };

    Ok(GoverningResiduals {
        momentum_x,
        momentum_y,
        pressure: p + 0.5 * (s11 + s22),
        stress_xx: (-p + 2.0 * mu * u_x) - s11,
        stress_xy: mu * (u_y + v_x) - s12,
        stress_yy: (-p + 2.0 * mu * v_y) - s22,
    })
}

/// Accumulates d(loss)/d(evaluation outputs) given d(loss)/d(residuals),
/// for the sigma-divergence form.
///
/// `rb` holds the loss sensitivities to the six residuals in `as_array`
/// order. The adjoint contributions land additively in `adj`, so one
/// adjoint can gather seeds from several loss terms before the reverse
/// network pass runs.
pub fn governing_adjoint(
    eval: &PointEvaluation,
    flow: &FlowConfig,
    rb: &[f64; 6],
    adj: &mut OutputAdjoint,
) {
    let rho = flow.density;
    let mu = flow.viscosity;

    let psi_x = eval.first[PSI][0];
    let psi_y = eval.first[PSI][1];
    let [hxx, hxy, _hxt, hyy, _hyt, _htt] = eval.psi_second;

    // Momentum residuals, written in psi derivatives:
    //   R0 = rho*(hyt + psi_y*hxy - psi_x*hyy) - s11_x - s12_y
    //   R1 = rho*(-hxt - psi_y*hxx + psi_x*hxy) - s12_x - s22_y
    adj.first[PSI][0] += rb[0] * (-rho * hyy) + rb[1] * (rho * hxy);
    adj.first[PSI][1] += rb[0] * (rho * hxy) + rb[1] * (-rho * hxx);

    adj.psi_second[0] += rb[1] * (-rho * psi_y);
    adj.psi_second[1] += rb[0] * (rho * psi_y) + rb[1] * (rho * psi_x);
    adj.psi_second[2] += rb[1] * (-rho);
    adj.psi_second[3] += rb[0] * (-rho * psi_x);
    adj.psi_second[4] += rb[0] * rho;

    adj.first[S11][0] += -rb[0];
    adj.first[S12][1] += -rb[0];
    adj.first[S12][0] += -rb[1];
    adj.first[S22][1] += -rb[1];

    // R2 = p + (s11 + s22)/2
    adj.outputs[P] += rb[2];
    adj.outputs[S11] += 0.5 * rb[2];
    adj.outputs[S22] += 0.5 * rb[2];

    // R3 = -p + 2*mu*hxy - s11
    adj.outputs[P] += -rb[3];
    adj.psi_second[1] += rb[3] * (2.0 * mu);
    adj.outputs[S11] += -rb[3];

    // R4 = mu*(hyy - hxx) - s12
    adj.psi_second[3] += rb[4] * mu;
    adj.psi_second[0] += rb[4] * (-mu);
    adj.outputs[S12] += -rb[4];

    // R5 = -p - 2*mu*hxy - s22
    adj.outputs[P] += -rb[5];
    adj.psi_second[1] += rb[5] * (-2.0 * mu);
    adj.outputs[S22] += -rb[5];
}

/// Squared mismatch against the targets a boundary or initial point carries.
///
/// Only components with a prescribed target contribute. A point with no
/// targets at all is an error: it would silently weaken the constraint set.
pub fn boundary_initial_residuals(eval: &PointEvaluation, point: &BoundaryPoint) -> Result<f64> {
    let (u, v, p) = velocity_pressure(eval);
    let mut sum = 0.0;
    let mut any = false;
    if let Some(t) = point.target_u {
        let r = u - t;
        sum += r * r;
        any = true;
    }
    if let Some(t) = point.target_v {
        let r = v - t;
        sum += r * r;
        any = true;
    }
    if let Some(t) = point.target_p {
        let r = p - t;
        sum += r * r;
        any = true;
    }
    if !any {
        return Err(Error::EmptyTarget);
    }
    Ok(sum)
}

/// Interface mismatch in (u, v, p), attributed to side `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceResiduals {
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl InterfaceResiduals {
    #[inline]
    pub fn squared_sum(&self) -> f64 {
        self.u * self.u + self.v * self.v + self.p * self.p
    }
}

/// Half the prediction gap at a shared interface point, signed for side `i`.
///
/// Swapping the arguments negates every component exactly, so the two
/// sides of an interface score the same penalty.
pub fn interface_residuals(
    side_i: (f64, f64, f64),
    side_j: (f64, f64, f64),
) -> InterfaceResiduals {
    InterfaceResiduals {
        u: (side_i.0 - side_j.0) / 2.0,
        v: (side_i.1 - side_j.1) / 2.0,
        p: (side_i.2 - side_j.2) / 2.0,
    }
}

/// Mass and momentum flux mismatch across an interface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxResiduals {
    pub mass: f64,
    pub momentum: f64,
}

impl FluxResiduals {
    #[inline]
    pub fn squared_sum(&self) -> f64 {
        self.mass * self.mass + self.momentum * self.momentum
    }
}

/// Flux continuity in the interface-normal direction.
///
/// `normal_i` / `normal_j` are the normal velocity components u.n on each
/// side; `p_i` / `p_j` the pressures. Mass flux is rho*u_n, momentum flux
/// rho*u_n^2 + p.
pub fn flux_residuals(
    normal_i: f64,
    p_i: f64,
    normal_j: f64,
    p_j: f64,
    density: f64,
) -> FluxResiduals {
    FluxResiduals {
        mass: density * (normal_i - normal_j),
        momentum: (density * normal_i * normal_i + p_i) - (density * normal_j * normal_j + p_j),
    }
}
