//! Fused loss and gradient evaluation over all subdomains.
//!
//! Work is split into fixed-size chunks of points. Each chunk is processed
//! sequentially and independently; chunk partials are folded in chunk-index
//! order. The parallel path only distributes chunk processing, so its
//! results are bit-identical to the sequential path for any thread count.
//!
//! Interface pairs are evaluated once from the lower-indexed side. The
//! per-side penalties are equal by the residual definitions, so the pair's
//! contribution is twice the one-sided mean, which matches summing both
//! sides exactly.

use crate::error::{Error, Result};
use crate::geometry::{FlowConfig, SubdomainSpec};
use crate::net::{
    backward, evaluate_with_trace, EvalTrace, NetworkParams, OutputAdjoint, P, PSI,
};
use crate::optim::Objective;
use crate::physics::{
    boundary_initial_residuals, flux_residuals, governing_adjoint, governing_residuals,
    interface_residuals, velocity_pressure, LossBreakdown, LossWeights, ResidualForm, Variant,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const CHUNK: usize = 64;

/// One interface pair, evaluated from subdomain `sub`'s side.
#[derive(Debug, Clone, Copy)]
struct PairRef {
    sub: usize,
    iface: usize,
    neighbor: usize,
    n_points: usize,
}

#[derive(Debug, Clone)]
enum Task {
    /// Interior points of `sub`, selected by index.
    Interior { sub: usize, idx: Vec<u32> },
    Boundary { sub: usize, lo: usize, hi: usize },
    Initial { sub: usize, lo: usize, hi: usize },
    Pair { pair: usize, lo: usize, hi: usize },
}

/// Chunk result: component sums plus gradient pieces for at most two
/// parameter segments.
struct Partial {
    governing: f64,
    boundary: f64,
    initial: f64,
    interface: f64,
    flux: f64,
    grad_a: Option<(usize, Vec<f64>)>,
    grad_b: Option<(usize, Vec<f64>)>,
}

impl Partial {
    fn zero() -> Self {
        Partial {
            governing: 0.0,
            boundary: 0.0,
            initial: 0.0,
            interface: 0.0,
            flux: 0.0,
            grad_a: None,
            grad_b: None,
        }
    }
}

/// Per-iteration mini-batch bookkeeping over interior points.
struct BatchState {
    /// Per-subdomain share of the batch, proportional to interior size.
    quotas: Vec<usize>,
    /// Shuffled interior indices per subdomain.
    order: Vec<Vec<u32>>,
    cursor: Vec<usize>,
    rng: ChaCha8Rng,
}

impl BatchState {
    fn new(subs: &[SubdomainSpec], batch_size: usize, seed: u64) -> Option<Self> {
        let sizes: Vec<usize> = subs.iter().map(|s| s.collocation.interior.len()).collect();
        let total: usize = sizes.iter().sum();
        if batch_size >= total {
            return None;
        }
        // Largest-remainder apportionment of the batch across subdomains.
        let mut quotas: Vec<usize> = Vec::with_capacity(sizes.len());
        let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(sizes.len());
        let mut assigned = 0usize;
        for (i, &n) in sizes.iter().enumerate() {
            let exact = batch_size as f64 * n as f64 / total as f64;
            let q = (exact.floor() as usize).min(n);
            quotas.push(q);
            assigned += q;
            remainders.push((i, exact - q as f64));
        }
        remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let mut left = batch_size.saturating_sub(assigned);
        for (i, _) in remainders {
            if left == 0 {
                break;
            }
            if quotas[i] < sizes[i] {
                quotas[i] += 1;
                left -= 1;
            }
        }
        // Every subdomain must keep at least one interior point in play.
        for (q, &n) in quotas.iter_mut().zip(&sizes) {
            if *q == 0 && n > 0 {
                *q = 1;
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = sizes
            .iter()
            .map(|&n| {
                let mut v: Vec<u32> = (0..n as u32).collect();
                v.shuffle(&mut rng);
                v
            })
            .collect();
        Some(BatchState {
            cursor: vec![0; sizes.len()],
            quotas,
            order,
            rng,
        })
    }

    /// Draws the next index set for one subdomain, reshuffling at epoch
    /// boundaries.
    fn draw(&mut self, sub: usize) -> Vec<u32> {
        let quota = self.quotas[sub];
        let mut out = Vec::with_capacity(quota);
        while out.len() < quota {
            let list = &mut self.order[sub];
            if self.cursor[sub] == list.len() {
                list.shuffle(&mut self.rng);
                self.cursor[sub] = 0;
            }
            let take = (quota - out.len()).min(list.len() - self.cursor[sub]);
            out.extend_from_slice(&list[self.cursor[sub]..self.cursor[sub] + take]);
            self.cursor[sub] += take;
        }
        out
    }
}

pub(crate) struct FusedObjective<'a> {
    subs: &'a [SubdomainSpec],
    flow: FlowConfig,
    weights: LossWeights,
    variant: Variant,
    arch: Vec<usize>,
    segment: usize,
    pairs: Vec<PairRef>,
    parallel: bool,
    batch: Option<BatchState>,
    full_tasks: Vec<Task>,
}

fn chunked_ranges(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).step_by(CHUNK).map(move |lo| (lo, (lo + CHUNK).min(n)))
}

impl<'a> FusedObjective<'a> {
    pub fn new(
        subs: &'a [SubdomainSpec],
        arch: &[usize],
        flow: FlowConfig,
        weights: LossWeights,
        variant: Variant,
        batch_size: Option<usize>,
        batch_seed: u64,
        parallel: bool,
    ) -> Result<Self> {
        for (i, sub) in subs.iter().enumerate() {
            if sub.collocation.interior.is_empty() {
                return Err(Error::DegenerateLoss(format!(
                    "subdomain {i} has no interior collocation points"
                )));
            }
        }
        let mut pairs = Vec::new();
        if variant.uses_interface() {
            for (i, sub) in subs.iter().enumerate() {
                for (k, iface) in sub.interfaces.iter().enumerate() {
                    if iface.neighbor >= subs.len() {
                        return Err(Error::InterfaceMismatch(i, iface.neighbor));
                    }
                    if i < iface.neighbor {
                        pairs.push(PairRef {
                            sub: i,
                            iface: k,
                            neighbor: iface.neighbor,
                            n_points: iface.points.len(),
                        });
                    }
                }
            }
        }

        let segment = NetworkParams::zeros(arch)?.param_count();
        let mut obj = FusedObjective {
            subs,
            flow,
            weights,
            variant,
            arch: arch.to_vec(),
            segment,
            pairs,
            parallel,
            batch: None,
            full_tasks: Vec::new(),
        };
        obj.full_tasks = obj.build_tasks(None);
        obj.batch = batch_size.and_then(|b| BatchState::new(subs, b, batch_seed));
        Ok(obj)
    }

    pub fn param_count(&self) -> usize {
        self.segment * self.subs.len()
    }

    fn build_tasks(&self, batch: Option<&[Vec<u32>]>) -> Vec<Task> {
        let mut tasks = Vec::new();
        for (i, sub) in self.subs.iter().enumerate() {
            let set = &sub.collocation;
            match batch {
                None => {
                    let n = set.interior.len();
                    for (lo, hi) in chunked_ranges(n) {
                        tasks.push(Task::Interior {
                            sub: i,
                            idx: (lo as u32..hi as u32).collect(),
                        });
                    }
                }
                Some(selected) => {
                    for chunk in selected[i].chunks(CHUNK) {
                        tasks.push(Task::Interior {
                            sub: i,
                            idx: chunk.to_vec(),
                        });
                    }
                }
            }
            for (lo, hi) in chunked_ranges(set.boundary.len()) {
                tasks.push(Task::Boundary { sub: i, lo, hi });
            }
            for (lo, hi) in chunked_ranges(set.initial.len()) {
                tasks.push(Task::Initial { sub: i, lo, hi });
            }
        }
        for (p, pair) in self.pairs.iter().enumerate() {
            for (lo, hi) in chunked_ranges(pair.n_points) {
                tasks.push(Task::Pair { pair: p, lo, hi });
            }
        }
        tasks
    }

    /// Denominators in effect for one evaluation: per-subdomain active
    /// interior counts.
    fn interior_counts(&self, batch: Option<&[Vec<u32>]>) -> Vec<usize> {
        match batch {
            None => self
                .subs
                .iter()
                .map(|s| s.collocation.interior.len())
                .collect(),
            Some(sel) => sel.iter().map(|v| v.len()).collect(),
        }
    }

    fn nets_from(&self, params: &[f64]) -> Result<Vec<NetworkParams>> {
        if params.len() != self.param_count() {
            return Err(Error::Configuration(format!(
                "flat parameter vector has {} entries, expected {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut nets = Vec::with_capacity(self.subs.len());
        for i in 0..self.subs.len() {
            let mut net = NetworkParams::zeros(&self.arch)?;
            net.read_flat(&params[i * self.segment..(i + 1) * self.segment]);
            nets.push(net);
        }
        Ok(nets)
    }

    fn process(
        &self,
        task: &Task,
        nets: &[NetworkParams],
        n_interior: &[usize],
    ) -> Result<Partial> {
        let mut out = Partial::zero();
        match task {
            Task::Interior { sub, idx } => {
                let net = &nets[*sub];
                let set = &self.subs[*sub].collocation;
                let scale = 2.0 / n_interior[*sub] as f64;
                let mut grad = vec![0.0; self.segment];
                for &k in idx {
                    let pt = &set.interior[k as usize];
                    let (eval, trace) = match eval_or_overflow(net, pt)? {
                        Some(v) => v,
                        None => {
                            out.governing = f64::INFINITY;
                            continue;
                        }
                    };
                    let r =
                        governing_residuals(&eval, &self.flow, ResidualForm::SigmaDivergence)?;
                    out.governing += r.squared_sum();
                    let arr = r.as_array();
                    let mut rb = [0.0; 6];
                    for (rbj, rj) in rb.iter_mut().zip(arr) {
                        *rbj = scale * rj;
                    }
                    let mut adj = OutputAdjoint::zeros(net.output_dim());
                    governing_adjoint(&eval, &self.flow, &rb, &mut adj);
                    backward(net, &trace, &adj, &mut grad);
                }
                out.grad_a = Some((*sub, grad));
            }
            Task::Boundary { sub, lo, hi } => {
                let net = &nets[*sub];
                let set = &self.subs[*sub].collocation;
                let scale = self.weights.beta * 2.0 / set.boundary.len() as f64;
                let mut grad = vec![0.0; self.segment];
                for bp in &set.boundary[*lo..*hi] {
                    let (eval, trace) = match eval_or_overflow(net, &bp.pos)? {
                        Some(v) => v,
                        None => {
                            out.boundary = f64::INFINITY;
                            continue;
                        }
                    };
                    out.boundary += boundary_initial_residuals(&eval, bp)?;
                    let (u, v, p) = velocity_pressure(&eval);
                    let mut adj = OutputAdjoint::zeros(net.output_dim());
                    if let Some(t) = bp.target_u {
                        adj.first[PSI][1] += scale * (u - t);
                    }
                    if let Some(t) = bp.target_v {
                        adj.first[PSI][0] -= scale * (v - t);
                    }
                    if let Some(t) = bp.target_p {
                        adj.outputs[P] += scale * (p - t);
                    }
                    backward(net, &trace, &adj, &mut grad);
                }
                out.grad_a = Some((*sub, grad));
            }
            Task::Initial { sub, lo, hi } => {
                let net = &nets[*sub];
                let set = &self.subs[*sub].collocation;
                let scale = self.weights.beta * 2.0 / set.initial.len() as f64;
                let mut grad = vec![0.0; self.segment];
                for pt in &set.initial[*lo..*hi] {
                    let pos = [pt[0], pt[1], 0.0];
                    let (eval, trace) = match eval_or_overflow(net, &pos)? {
                        Some(v) => v,
                        None => {
                            out.initial = f64::INFINITY;
                            continue;
                        }
                    };
                    let (u, v, _) = velocity_pressure(&eval);
                    out.initial += u * u + v * v;
                    let mut adj = OutputAdjoint::zeros(net.output_dim());
                    adj.first[PSI][1] += scale * u;
                    adj.first[PSI][0] -= scale * v;
                    backward(net, &trace, &adj, &mut grad);
                }
                out.grad_a = Some((*sub, grad));
            }
            Task::Pair { pair, lo, hi } => {
                let pr = self.pairs[*pair];
                let iface = &self.subs[pr.sub].interfaces[pr.iface];
                let net_i = &nets[pr.sub];
                let net_j = &nets[pr.neighbor];
                let n = pr.n_points as f64;
                let s_if = 2.0 * self.weights.gamma / n;
                let with_flux = self.variant.uses_flux() && self.weights.delta != 0.0;
                let s_fl = 4.0 * self.weights.delta / n;
                let [nx, ny] = iface.normal;
                let rho = self.flow.density;
                let mut grad_i = vec![0.0; self.segment];
                let mut grad_j = vec![0.0; self.segment];
                for pt in &iface.points[*lo..*hi] {
                    let (ei, ti) = match eval_or_overflow(net_i, pt)? {
                        Some(v) => v,
                        None => {
                            out.interface = f64::INFINITY;
                            continue;
                        }
                    };
                    let (ej, tj) = match eval_or_overflow(net_j, pt)? {
                        Some(v) => v,
                        None => {
                            out.interface = f64::INFINITY;
                            continue;
                        }
                    };
                    let pi = velocity_pressure(&ei);
                    let pj = velocity_pressure(&ej);
                    let r = interface_residuals(pi, pj);
                    out.interface += r.squared_sum();

                    let mut adj_i = OutputAdjoint::zeros(net_i.output_dim());
                    let mut adj_j = OutputAdjoint::zeros(net_j.output_dim());
                    adj_i.first[PSI][1] += s_if * r.u;
                    adj_i.first[PSI][0] -= s_if * r.v;
                    adj_i.outputs[P] += s_if * r.p;
                    adj_j.first[PSI][1] -= s_if * r.u;
                    adj_j.first[PSI][0] += s_if * r.v;
                    adj_j.outputs[P] -= s_if * r.p;

                    if with_flux {
                        let un_i = pi.0 * nx + pi.1 * ny;
                        let un_j = pj.0 * nx + pj.1 * ny;
                        let f = flux_residuals(un_i, pi.2, un_j, pj.2, rho);
                        out.flux += f.squared_sum();
                        let w_i = s_fl * (rho * f.mass + 2.0 * rho * un_i * f.momentum);
                        let w_j = -s_fl * (rho * f.mass + 2.0 * rho * un_j * f.momentum);
                        adj_i.first[PSI][1] += w_i * nx;
                        adj_i.first[PSI][0] -= w_i * ny;
                        adj_i.outputs[P] += s_fl * f.momentum;
                        adj_j.first[PSI][1] += w_j * nx;
                        adj_j.first[PSI][0] -= w_j * ny;
                        adj_j.outputs[P] -= s_fl * f.momentum;
                    }

                    backward(net_i, &ti, &adj_i, &mut grad_i);
                    backward(net_j, &tj, &adj_j, &mut grad_j);
                }
                out.grad_a = Some((pr.sub, grad_i));
                out.grad_b = Some((pr.neighbor, grad_j));
            }
        }
        Ok(out)
    }

    fn compute(
        &self,
        params: &[f64],
        grad: &mut [f64],
        tasks: &[Task],
        n_interior: &[usize],
    ) -> Result<LossBreakdown> {
        let nets = self.nets_from(params)?;
        let partials: Vec<Result<Partial>> = if self.parallel {
            tasks
                .par_iter()
                .map(|t| self.process(t, &nets, n_interior))
                .collect()
        } else {
            tasks
                .iter()
                .map(|t| self.process(t, &nets, n_interior))
                .collect()
        };

        grad.fill(0.0);
        let m = self.subs.len();
        let mut g_sum = vec![0.0; m];
        let mut b_sum = vec![0.0; m];
        let mut ic_sum = vec![0.0; m];
        let mut if_sum = vec![0.0; self.pairs.len()];
        let mut fl_sum = vec![0.0; self.pairs.len()];

        for (task, partial) in tasks.iter().zip(partials) {
            let p = partial?;
            match task {
                Task::Interior { sub, .. } => g_sum[*sub] += p.governing,
                Task::Boundary { sub, .. } => b_sum[*sub] += p.boundary,
                Task::Initial { sub, .. } => ic_sum[*sub] += p.initial,
                Task::Pair { pair, .. } => {
                    if_sum[*pair] += p.interface;
                    fl_sum[*pair] += p.flux;
                }
            }
            for piece in [p.grad_a, p.grad_b].into_iter().flatten() {
                let (seg, g) = piece;
                let dst = &mut grad[seg * self.segment..(seg + 1) * self.segment];
                for (d, s) in dst.iter_mut().zip(&g) {
                    *d += s;
                }
            }
        }

        let mut governing = 0.0;
        let mut bc_ic = 0.0;
        for i in 0..m {
            governing += g_sum[i] / n_interior[i] as f64;
            let set = &self.subs[i].collocation;
            let b = if set.boundary.is_empty() {
                0.0
            } else {
                b_sum[i] / set.boundary.len() as f64
            };
            let ic = if set.initial.is_empty() {
                0.0
            } else {
                ic_sum[i] / set.initial.len() as f64
            };
            bc_ic += b + ic;
        }
        let mut interface = 0.0;
        let mut flux = 0.0;
        for (p, pair) in self.pairs.iter().enumerate() {
            interface += 2.0 * (if_sum[p] / pair.n_points as f64);
            flux += 2.0 * (fl_sum[p] / pair.n_points as f64);
        }

        Ok(LossBreakdown::compose(
            governing,
            bc_ic,
            interface,
            flux,
            self.weights,
            self.variant,
        ))
    }
}

/// Maps overflow during evaluation to `None` so the optimizer sees an
/// infinite loss instead of a hard error; genuine usage errors propagate.
fn eval_or_overflow(
    net: &NetworkParams,
    input: &[f64],
) -> Result<Option<(crate::net::PointEvaluation, EvalTrace)>> {
    match evaluate_with_trace(net, input) {
        Ok(v) => Ok(Some(v)),
        Err(Error::EvaluationOverflow) => Ok(None),
        Err(e) => Err(e),
    }
}

impl Objective for FusedObjective<'_> {
    fn full(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
        let n_interior = self.interior_counts(None);
        // Split borrows: tasks are read-only during compute.
        let tasks = std::mem::take(&mut self.full_tasks);
        let result = self.compute(params, grad, &tasks, &n_interior);
        self.full_tasks = tasks;
        result
    }

    fn next_batch(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
        if self.batch.is_none() {
            return self.full(params, grad);
        }
        let selected: Vec<Vec<u32>> = {
            let batch = self.batch.as_mut().unwrap();
            (0..self.subs.len()).map(|i| batch.draw(i)).collect()
        };
        let tasks = self.build_tasks(Some(&selected));
        let n_interior = self.interior_counts(Some(&selected));
        self.compute(params, grad, &tasks, &n_interior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::geometry::{
        generate_collocation, partition_domain, CollocationCounts, Domain, RectangleDomain,
    };
    use crate::physics::assemble_loss;
    use approx::assert_relative_eq;

    fn problem(m: usize, seed: u64) -> (FlowConfig, Vec<SubdomainSpec>) {
        let domain = Domain::Rectangle(RectangleDomain::default());
        let flow = FlowConfig::rectangle_defaults();
        let counts = CollocationCounts {
            total: 60,
            boundary: 8,
            inout: 4,
        };
        let set = generate_collocation(&domain, &flow, &counts, seed).unwrap();
        let subs = partition_domain(&domain, &set, m, 6, seed).unwrap();
        (flow, subs)
    }

    fn flat_params(subs: usize, arch: &[usize], seed: u64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..subs {
            out.extend(NetworkParams::init(arch, seed + i as u64).unwrap().to_flat());
        }
        out
    }

    fn check_against_reference(variant: Variant, weights: LossWeights, m: usize) {
        let (flow, subs) = problem(m, 17);
        let arch = [3, 8, 7, 5];
        let mut obj = FusedObjective::new(
            &subs, &arch, flow, weights, variant, None, 0, false,
        )
        .unwrap();
        let params = flat_params(m, &arch, 33);
        let mut grad = vec![0.0; obj.param_count()];
        let fused = obj.full(&params, &mut grad).unwrap();

        let nets: Vec<NetworkParams> = (0..m)
            .map(|i| {
                let mut n = NetworkParams::zeros(&arch).unwrap();
                n.read_flat(&params[i * obj.segment..(i + 1) * obj.segment]);
                n
            })
            .collect();
        let reference = assemble_loss(&nets, &subs, &flow, weights, variant).unwrap();
        assert_relative_eq!(fused.total, reference.total, max_relative = 1e-12);
        assert_relative_eq!(fused.governing, reference.governing, max_relative = 1e-12);
        assert_relative_eq!(fused.bc_ic, reference.bc_ic, max_relative = 1e-12);
        assert_relative_eq!(
            fused.interface,
            reference.interface,
            max_relative = 1e-12,
            epsilon = 1e-300
        );
        assert_relative_eq!(fused.flux, reference.flux, max_relative = 1e-12, epsilon = 1e-300);

        // Gradient against central differences of the independent
        // value-only assembly.
        let f = |p: &[f64]| {
            let nets: Vec<NetworkParams> = (0..m)
                .map(|i| {
                    let mut n = NetworkParams::zeros(&arch).unwrap();
                    n.read_flat(&p[i * obj.segment..(i + 1) * obj.segment]);
                    n
                })
                .collect();
            assemble_loss(&nets, &subs, &flow, weights, variant)
                .unwrap()
                .total
        };
        let fd_grad = fd::gradient(&f, &params, 1e-5);
        for (i, (&a, &b)) in grad.iter().zip(fd_grad.iter()).enumerate() {
            assert_relative_eq!(a, b, max_relative = 3e-4, epsilon = 3e-7);
            let _ = i;
        }
    }

    #[test]
    fn single_domain_matches_reference_loss_and_gradient() {
        check_against_reference(
            Variant::Wpinn,
            LossWeights {
                beta: 2.0,
                gamma: 0.0,
                delta: 0.0,
            },
            1,
        );
    }

    #[test]
    fn decomposed_continuity_matches_reference_loss_and_gradient() {
        check_against_reference(
            Variant::Wxpinn,
            LossWeights {
                beta: 1.0,
                gamma: 5.0,
                delta: 0.0,
            },
            2,
        );
    }

    #[test]
    fn conservative_matches_reference_loss_and_gradient() {
        check_against_reference(
            Variant::Wcpinn,
            LossWeights {
                beta: 1.5,
                gamma: 5.0,
                delta: 5.0,
            },
            2,
        );
    }

    #[test]
    fn parallel_mode_is_bit_identical_to_sequential() {
        let (flow, subs) = problem(3, 5);
        let arch = [3, 10, 5];
        let weights = LossWeights {
            beta: 1.0,
            gamma: 5.0,
            delta: 5.0,
        };
        let params = flat_params(3, &arch, 7);
        let run = |parallel: bool| {
            let mut obj = FusedObjective::new(
                &subs, &arch, flow, weights, Variant::Wcpinn, None, 0, parallel,
            )
            .unwrap();
            let mut grad = vec![0.0; obj.param_count()];
            let bd = obj.full(&params, &mut grad).unwrap();
            (bd, grad)
        };
        let (bd_seq, g_seq) = run(false);
        let (bd_par, g_par) = run(true);
        assert_eq!(bd_seq.total.to_bits(), bd_par.total.to_bits());
        for (a, b) in g_seq.iter().zip(&g_par) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn zero_flux_weight_is_bit_identical_to_continuity_variant() {
        let (flow, subs) = problem(2, 23);
        let arch = [3, 9, 5];
        let params = flat_params(2, &arch, 29);
        let run = |variant: Variant| {
            let weights = LossWeights {
                beta: 1.0,
                gamma: 5.0,
                delta: 0.0,
            };
            let mut obj =
                FusedObjective::new(&subs, &arch, flow, weights, variant, None, 0, false).unwrap();
            let mut grad = vec![0.0; obj.param_count()];
            let bd = obj.full(&params, &mut grad).unwrap();
            (bd, grad)
        };
        let (bd_c, g_c) = run(Variant::Wcpinn);
        let (bd_x, g_x) = run(Variant::Wxpinn);
        assert_eq!(bd_c.total.to_bits(), bd_x.total.to_bits());
        for (a, b) in g_c.iter().zip(&g_x) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn minibatches_cover_all_interior_points_each_epoch() {
        let (flow, subs) = problem(1, 41);
        let n = subs[0].collocation.interior.len();
        let arch = [3, 6, 5];
        let weights = LossWeights {
            beta: 1.0,
            gamma: 0.0,
            delta: 0.0,
        };
        let mut obj = FusedObjective::new(
            &subs,
            &arch,
            flow,
            weights,
            Variant::Wpinn,
            Some(7),
            99,
            false,
        )
        .unwrap();
        let batch = obj.batch.as_mut().unwrap();
        assert_eq!(batch.quotas[0], 7);
        let mut seen = vec![0usize; n];
        let draws = n / 7;
        for _ in 0..draws {
            for k in batch.draw(0) {
                seen[k as usize] += 1;
            }
        }
        // Without replacement: no index repeats before the epoch wraps.
        assert!(seen.iter().all(|&c| c <= 1));
        assert_eq!(seen.iter().sum::<usize>(), draws * 7);
    }

    #[test]
    fn oversized_batch_falls_back_to_full_batch() {
        let (flow, subs) = problem(1, 41);
        let n = subs[0].collocation.interior.len();
        let arch = [3, 6, 5];
        let weights = LossWeights {
            beta: 1.0,
            gamma: 0.0,
            delta: 0.0,
        };
        let mut obj = FusedObjective::new(
            &subs,
            &arch,
            flow,
            weights,
            Variant::Wpinn,
            Some(n + 50),
            99,
            false,
        )
        .unwrap();
        assert!(obj.batch.is_none());
        let params = flat_params(1, &arch, 3);
        let mut g1 = vec![0.0; obj.param_count()];
        let mut g2 = vec![0.0; obj.param_count()];
        let a = obj.next_batch(&params, &mut g1).unwrap();
        let b = obj.full(&params, &mut g2).unwrap();
        assert_eq!(a.total.to_bits(), b.total.to_bits());
    }

    #[test]
    fn non_finite_parameters_give_infinite_loss_not_an_error() {
        let (flow, subs) = problem(1, 47);
        let arch = [3, 6, 5];
        let weights = LossWeights {
            beta: 1.0,
            gamma: 0.0,
            delta: 0.0,
        };
        let mut obj =
            FusedObjective::new(&subs, &arch, flow, weights, Variant::Wpinn, None, 0, false)
                .unwrap();
        let mut params = flat_params(1, &arch, 3);
        params[0] = 1e308;
        params[10] = 1e308;
        let mut grad = vec![0.0; obj.param_count()];
        let bd = obj.full(&params, &mut grad).unwrap();
        assert!(bd.total.is_infinite());
    }
}
