//! Derivative evaluation and reverse-mode parameter gradients.
//!
//! Input derivatives come from jet propagation (exact, single forward pass).
//! Parameter gradients come from a reverse sweep over that same jet
//! computation, so losses built from values, first derivatives and psi's
//! second derivatives backpropagate exactly.

use super::jet::{tanh_backward, Jet, Jet2, Jet3};
use super::NetworkParams;
use crate::error::{Error, Result};

/// Output slots of the solver network.
pub const PSI: usize = 0;
pub const P: usize = 1;
pub const S11: usize = 2;
pub const S12: usize = 3;
pub const S22: usize = 4;

/// Network outputs and input derivatives at one point.
///
/// `first[k][d]` is d(output k)/d(input d). Second derivatives are kept for
/// output 0 (the stream function) only; the residuals need no others.
/// `psi_third` is populated when order 3 is requested.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEvaluation {
    pub input: [f64; 3],
    pub outputs: Vec<f64>,
    pub first: Vec<[f64; 3]>,
    pub psi_second: [f64; 6],
    pub psi_third: Option<[f64; 10]>,
}

impl PointEvaluation {
    /// Hessian entry of the stream function for an unordered index pair.
    #[inline]
    pub fn psi_h(&self, i: usize, j: usize) -> f64 {
        self.psi_second[super::jet::PAIR_IDX[i][j]]
    }
}

/// Adjoint seeds for the quantities a [`PointEvaluation`] exposes.
#[derive(Debug, Clone)]
pub struct OutputAdjoint {
    pub outputs: Vec<f64>,
    pub first: Vec<[f64; 3]>,
    pub psi_second: [f64; 6],
}

impl OutputAdjoint {
    pub fn zeros(n_out: usize) -> Self {
        OutputAdjoint {
            outputs: vec![0.0; n_out],
            first: vec![[0.0; 3]; n_out],
            psi_second: [0.0; 6],
        }
    }
}

/// Forward records needed by [`backward`]: the input jets plus pre- and
/// post-activation jets of every hidden layer.
#[derive(Debug, Clone)]
pub struct EvalTrace {
    input: Vec<Jet2>,
    hidden_z: Vec<Vec<Jet2>>,
    hidden_a: Vec<Vec<Jet2>>,
}

fn check_input(net: &NetworkParams, input: &[f64]) -> Result<()> {
    if input.len() != net.input_dim() {
        return Err(Error::InvalidArchitecture(format!(
            "input length {} does not match input dimension {}",
            input.len(),
            net.input_dim()
        )));
    }
    if !input.iter().all(|x| x.is_finite()) {
        let mut p = [0.0; 3];
        for (i, &x) in input.iter().take(3).enumerate() {
            p[i] = x;
        }
        return Err(Error::NonFiniteInput(p[0], p[1], p[2]));
    }
    Ok(())
}

fn forward_layer<J: Jet>(net: &NetworkParams, l: usize, a: &[J]) -> Vec<J> {
    let n_in = net.layer_sizes()[l];
    let n_out = net.layer_sizes()[l + 1];
    let w = &net.weights()[l];
    let b = &net.biases()[l];
    let mut z = Vec::with_capacity(n_out);
    for r in 0..n_out {
        let row = &w[r * n_in..(r + 1) * n_in];
        let mut acc = J::constant(b[r]);
        for (wc, ac) in row.iter().zip(a.iter()) {
            acc.axpy(*wc, ac);
        }
        z.push(acc);
    }
    z
}

fn forward_jets<J: Jet>(net: &NetworkParams, input: &[f64]) -> Vec<J> {
    let n_layers = net.weights().len();
    let mut a: Vec<J> = input
        .iter()
        .enumerate()
        .map(|(d, &x)| J::input(x, d))
        .collect();
    for l in 0..n_layers {
        let z = forward_layer(net, l, &a);
        a = if l + 1 < n_layers {
            z.iter().map(|j| j.tanh()).collect()
        } else {
            z
        };
    }
    a
}

fn pack_order2(input: &[f64], out: &[Jet2]) -> Result<PointEvaluation> {
    if !out.iter().all(|j| j.is_finite()) {
        return Err(Error::EvaluationOverflow);
    }
    let mut padded = [0.0; 3];
    for (i, &x) in input.iter().enumerate() {
        padded[i] = x;
    }
    Ok(PointEvaluation {
        input: padded,
        outputs: out.iter().map(|j| j.v).collect(),
        first: out.iter().map(|j| j.g).collect(),
        psi_second: out[PSI].h,
        psi_third: None,
    })
}

/// Evaluate the network and its input derivatives at one point.
///
/// `order` is 2 for training (values, gradients, psi Hessian) or 3 to add
/// psi's third derivatives for the direct residual form.
pub fn evaluate_with_derivatives(
    net: &NetworkParams,
    input: &[f64],
    order: usize,
) -> Result<PointEvaluation> {
    check_input(net, input)?;
    match order {
        2 => pack_order2(input, &forward_jets::<Jet2>(net, input)),
        3 => {
            let out = forward_jets::<Jet3>(net, input);
            let jets2: Vec<Jet2> = out
                .iter()
                .map(|j| Jet2 {
                    v: j.v,
                    g: j.g,
                    h: j.h,
                })
                .collect();
            let mut eval = pack_order2(input, &jets2)?;
            if !out[PSI].t.iter().all(|x| x.is_finite()) {
                return Err(Error::EvaluationOverflow);
            }
            eval.psi_third = Some(out[PSI].t);
            Ok(eval)
        }
        other => Err(Error::InsufficientDerivativeOrder(format!(
            "order {} not supported (use 2 or 3)",
            other
        ))),
    }
}

/// Order-2 evaluation that also records the forward jets for [`backward`].
pub fn evaluate_with_trace(
    net: &NetworkParams,
    input: &[f64],
) -> Result<(PointEvaluation, EvalTrace)> {
    check_input(net, input)?;
    let n_layers = net.weights().len();
    let input_jets: Vec<Jet2> = input
        .iter()
        .enumerate()
        .map(|(d, &x)| Jet2::input(x, d))
        .collect();
    let mut hidden_z = Vec::with_capacity(n_layers.saturating_sub(1));
    let mut hidden_a = Vec::with_capacity(n_layers.saturating_sub(1));
    let mut a = input_jets.clone();
    for l in 0..n_layers {
        let z = forward_layer::<Jet2>(net, l, &a);
        if l + 1 < n_layers {
            let act: Vec<Jet2> = z.iter().map(|j| j.tanh()).collect();
            hidden_z.push(z);
            hidden_a.push(act.clone());
            a = act;
        } else {
            a = z;
        }
    }
    let eval = pack_order2(input, &a)?;
    Ok((
        eval,
        EvalTrace {
            input: input_jets,
            hidden_z,
            hidden_a,
        },
    ))
}

/// Accumulate d(adjoint . evaluation)/d(parameters) into `grad`.
///
/// `grad` must have the network's `param_count` length and uses the flat
/// layout of [`NetworkParams::write_flat`]. The reverse sweep walks the jet
/// computation, so seeds on first and second derivatives flow back through
/// the derivative calculation itself, not just the primal values.
pub fn backward(
    net: &NetworkParams,
    trace: &EvalTrace,
    adjoint: &OutputAdjoint,
    grad: &mut [f64],
) {
    assert_eq!(grad.len(), net.param_count());
    let n_out = net.output_dim();
    assert_eq!(adjoint.outputs.len(), n_out);
    assert_eq!(adjoint.first.len(), n_out);
    let sizes = net.layer_sizes();
    let n_layers = net.weights().len();

    // Adjoint of the output-layer pre-activations (the outputs themselves,
    // since the last layer is linear).
    let mut zbar: Vec<Jet2> = (0..n_out)
        .map(|k| Jet2 {
            v: adjoint.outputs[k],
            g: adjoint.first[k],
            h: if k == PSI {
                adjoint.psi_second
            } else {
                [0.0; 6]
            },
        })
        .collect();

    // Flat offset of each layer's parameter block.
    let mut offsets = Vec::with_capacity(n_layers);
    let mut k = 0;
    for l in 0..n_layers {
        offsets.push(k);
        k += sizes[l] * sizes[l + 1] + sizes[l + 1];
    }

    for l in (0..n_layers).rev() {
        let n_in = sizes[l];
        let n_outl = sizes[l + 1];
        let a_prev: &[Jet2] = if l == 0 {
            &trace.input
        } else {
            &trace.hidden_a[l - 1]
        };
        let w_off = offsets[l];
        let b_off = w_off + n_in * n_outl;
        for r in 0..n_outl {
            let zb = &zbar[r];
            for c in 0..n_in {
                grad[w_off + r * n_in + c] += zb.dot(&a_prev[c]);
            }
            grad[b_off + r] += zb.v;
        }
        if l > 0 {
            let w = &net.weights()[l];
            let mut abar = vec![Jet2::ZERO; n_in];
            for r in 0..n_outl {
                let row = &w[r * n_in..(r + 1) * n_in];
                for c in 0..n_in {
                    abar[c].axpy(row[c], &zbar[r]);
                }
            }
            let z_prev = &trace.hidden_z[l - 1];
            zbar = (0..n_in)
                .map(|c| tanh_backward(&z_prev[c], &abar[c]))
                .collect();
        }
    }
}

/// Evaluate many points. Delegates to the per-point path so batch and
/// per-point results are identical by construction.
pub fn evaluate_batch(
    net: &NetworkParams,
    inputs: &[[f64; 3]],
    order: usize,
) -> Result<Vec<PointEvaluation>> {
    inputs
        .iter()
        .map(|p| evaluate_with_derivatives(net, p, order))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::net::PAIRS;
    use approx::assert_relative_eq;

    fn tanh_net() -> NetworkParams {
        NetworkParams::from_parts(
            vec![1, 1, 1],
            vec![vec![1.0], vec![1.0]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap()
    }

    #[test]
    fn tanh_network_derivatives_at_zero() {
        let eval = evaluate_with_derivatives(&tanh_net(), &[0.0], 2).unwrap();
        assert_eq!(eval.outputs[0], 0.0);
        assert_eq!(eval.first[0][0], 1.0);
        assert_eq!(eval.psi_second[0], 0.0);
    }

    #[test]
    fn tanh_network_derivatives_at_half() {
        let eval = evaluate_with_derivatives(&tanh_net(), &[0.5], 2).unwrap();
        let t = 0.5f64.tanh();
        assert_relative_eq!(eval.first[0][0], 1.0 - t * t, max_relative = 1e-12);
        assert_relative_eq!(eval.first[0][0], 0.7864477329659274, max_relative = 1e-10);
        assert_relative_eq!(
            eval.psi_second[0],
            -2.0 * t * (1.0 - t * t),
            max_relative = 1e-12
        );
        assert_relative_eq!(eval.psi_second[0], -0.7268619813835873, max_relative = 1e-9);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for seed in [1u64, 2, 3] {
            let net = NetworkParams::init(&[3, 12, 12, 5], seed).unwrap();
            let x = [0.31, -0.62, 0.47];
            let eval = evaluate_with_derivatives(&net, &x, 2).unwrap();
            for k in 0..5 {
                let f = |p: &[f64]| net.forward(p).unwrap()[k];
                for d in 0..3 {
                    let fd1 = fd::first(&f, &x, d, 1e-4);
                    assert_relative_eq!(
                        eval.first[k][d],
                        fd1,
                        max_relative = 1e-5,
                        epsilon = 1e-8
                    );
                }
            }
            let fpsi = |p: &[f64]| net.forward(p).unwrap()[0];
            for (pidx, &(i, j)) in PAIRS.iter().enumerate() {
                let fd2 = fd::second(&fpsi, &x, i, j, 1e-4);
                assert_relative_eq!(
                    eval.psi_second[pidx],
                    fd2,
                    max_relative = 1e-5,
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn third_order_matches_finite_differences_of_second() {
        let net = NetworkParams::init(&[3, 10, 5], 7).unwrap();
        let x = [0.2, 0.1, -0.3];
        let eval = evaluate_with_derivatives(&net, &x, 3).unwrap();
        let third = eval.psi_third.unwrap();
        for (q, &(i, j, k)) in super::super::jet::TRIPLES.iter().enumerate() {
            // d/dx_i of the (j,k) Hessian entry.
            let g = |p: &[f64]| {
                evaluate_with_derivatives(&net, p, 2)
                    .unwrap()
                    .psi_h(j, k)
            };
            let fd3 = fd::first(&g, &x, i, 1e-4);
            assert_relative_eq!(third[q], fd3, max_relative = 1e-4, epsilon = 1e-7);
        }
    }

    #[test]
    fn unsupported_order_is_rejected() {
        let net = NetworkParams::zeros(&[3, 4, 5]).unwrap();
        assert!(matches!(
            evaluate_with_derivatives(&net, &[0.0; 3], 4),
            Err(Error::InsufficientDerivativeOrder(_))
        ));
    }

    #[test]
    fn overflow_is_reported() {
        // Huge affine weights push the linear output layer to infinity.
        let big = 1e308;
        let net = NetworkParams::from_parts(
            vec![1, 2],
            vec![vec![big, big]],
            vec![vec![big, big]],
        )
        .unwrap();
        assert!(matches!(
            evaluate_with_derivatives(&net, &[1.0], 2),
            Err(Error::EvaluationOverflow)
        ));
    }

    /// Scalar functional of everything an evaluation exposes; used to probe
    /// the reverse pass against finite differences over the parameters.
    fn probe_functional(eval: &PointEvaluation, adj: &OutputAdjoint) -> f64 {
        let mut s = 0.0;
        for k in 0..eval.outputs.len() {
            s += adj.outputs[k] * eval.outputs[k];
            for d in 0..3 {
                s += adj.first[k][d] * eval.first[k][d];
            }
        }
        for p in 0..6 {
            s += adj.psi_second[p] * eval.psi_second[p];
        }
        s
    }

    #[test]
    fn backward_matches_finite_differences() {
        let net = NetworkParams::init(&[3, 9, 8, 5], 11).unwrap();
        let x = [0.4, -0.2, 0.7];
        let mut adj = OutputAdjoint::zeros(5);
        // Deterministic non-trivial seed pattern.
        for k in 0..5 {
            adj.outputs[k] = 0.3 + 0.1 * k as f64;
            for d in 0..3 {
                adj.first[k][d] = 0.05 * (k as f64 + 1.0) * (d as f64 - 1.2);
            }
        }
        for p in 0..6 {
            adj.psi_second[p] = 0.2 - 0.07 * p as f64;
        }

        let (_, trace) = evaluate_with_trace(&net, &x).unwrap();
        let mut grad = vec![0.0; net.param_count()];
        backward(&net, &trace, &adj, &mut grad);

        let flat0 = net.to_flat();
        let f = |theta: &[f64]| {
            let mut n = net.clone();
            n.read_flat(theta);
            let eval = evaluate_with_derivatives(&n, &x, 2).unwrap();
            probe_functional(&eval, &adj)
        };
        let fd_grad = fd::gradient(&f, &flat0, 1e-5);
        for i in 0..grad.len() {
            assert_relative_eq!(grad[i], fd_grad[i], max_relative = 1e-4, epsilon = 1e-7);
        }
    }

    #[test]
    fn backward_is_linear_in_the_seeds() {
        let net = NetworkParams::init(&[3, 6, 5], 5).unwrap();
        let (_, trace) = evaluate_with_trace(&net, &[0.1, 0.2, 0.3]).unwrap();

        let mut a = OutputAdjoint::zeros(5);
        a.outputs[1] = 1.0;
        a.first[0][1] = 0.5;
        let mut b = OutputAdjoint::zeros(5);
        b.psi_second[3] = 1.0;
        b.first[4][0] = -0.25;

        let mut ga = vec![0.0; net.param_count()];
        backward(&net, &trace, &a, &mut ga);
        let mut gb = vec![0.0; net.param_count()];
        backward(&net, &trace, &b, &mut gb);

        let mut combined = OutputAdjoint::zeros(5);
        for k in 0..5 {
            combined.outputs[k] = a.outputs[k] + 2.0 * b.outputs[k];
            for d in 0..3 {
                combined.first[k][d] = a.first[k][d] + 2.0 * b.first[k][d];
            }
        }
        for p in 0..6 {
            combined.psi_second[p] = a.psi_second[p] + 2.0 * b.psi_second[p];
        }
        let mut gc = vec![0.0; net.param_count()];
        backward(&net, &trace, &combined, &mut gc);

        for i in 0..gc.len() {
            let expect = ga[i] + 2.0 * gb[i];
            let scale = expect.abs().max(1.0);
            assert!(
                (gc[i] - expect).abs() <= 1e-12 * scale,
                "linearity violated at {}: {} vs {}",
                i,
                gc[i],
                expect
            );
        }
    }

    #[test]
    fn batch_equals_per_point() {
        let net = NetworkParams::init(&[3, 8, 5], 3).unwrap();
        let pts = [[0.1, 0.2, 0.3], [-0.5, 0.4, 0.0], [0.9, -0.9, 0.5]];
        let batch = evaluate_batch(&net, &pts, 2).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let single = evaluate_with_derivatives(&net, p, 2).unwrap();
            assert_eq!(batch[i], single);
        }
    }

    #[test]
    fn trace_outputs_agree_with_plain_evaluation() {
        let net = NetworkParams::init(&[3, 8, 8, 5], 21).unwrap();
        let x = [0.3, 0.1, -0.4];
        let (eval, trace) = evaluate_with_trace(&net, &x).unwrap();
        let plain = evaluate_with_derivatives(&net, &x, 2).unwrap();
        assert_eq!(eval, plain);
        assert_eq!(trace.hidden_z.len(), 2);
        assert_eq!(trace.hidden_a.len(), 2);
        assert_eq!(trace.input.len(), 3);
    }
}
