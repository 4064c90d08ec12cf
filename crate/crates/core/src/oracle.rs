//! Brute-force references for tiny networks: exact marginal likelihood and
//! variational bound by exhaustive enumeration of hidden spike sequences,
//! and central finite differences.
//!
//! Everything here is exponential in `|H|·T` and meant for verification.

use rand::Rng;

use crate::basis::build_raised_cosine_basis;
use crate::error::{check_len, Error, Result};
use crate::model::{spike_log_prob, NetworkState, Projections};
use crate::network::{NetworkSpec, NeuronId, Topology};
use crate::params::{ModelParams, ParamGroup};
use crate::spikes::SpikeTrain;

pub const MAX_HIDDEN: usize = 3;
pub const MAX_VISIBLE: usize = 2;
pub const MAX_HORIZON: usize = 5;
pub const MAX_ENUMERATION_BITS: usize = 15;

/// A network small enough to marginalize exactly, with observed visible
/// and exogenous sequences.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub spec: NetworkSpec,
    pub params: ModelParams,
    pub visible: SpikeTrain,
    pub exogenous: SpikeTrain,
}

/// Dimensions for random tiny instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TinySizes {
    pub inputs: usize,
    pub visible: usize,
    pub hidden: usize,
    pub horizon: usize,
    pub window_len: usize,
    pub k_a: usize,
    pub k_b: usize,
}

impl Default for TinySizes {
    fn default() -> Self {
        Self {
            inputs: 2,
            visible: 2,
            hidden: 2,
            horizon: 5,
            window_len: 3,
            k_a: 2,
            k_b: 2,
        }
    }
}

impl TinyInstance {
    pub fn new(
        spec: NetworkSpec,
        params: ModelParams,
        visible: SpikeTrain,
        exogenous: SpikeTrain,
    ) -> Result<Self> {
        params.check_shape(&spec)?;
        check_len("visible channels", spec.visible().len(), visible.channels())?;
        check_len("input channels", spec.num_inputs(), exogenous.channels())?;
        check_len("exogenous horizon", visible.horizon(), exogenous.horizon())?;
        Ok(Self {
            spec,
            params,
            visible,
            exogenous,
        })
    }

    /// Recurrent tiny network with parameters uniform on `[-scale, scale]`
    /// and random binary observations.
    pub fn random<R: Rng + ?Sized>(sizes: TinySizes, scale: f64, rng: &mut R) -> Result<Self> {
        let a = build_raised_cosine_basis(sizes.k_a, sizes.window_len, None)?;
        let b = build_raised_cosine_basis(sizes.k_b, sizes.window_len, None)?;
        let spec = NetworkSpec::preset(
            Topology::PaperRecurrent,
            sizes.inputs,
            sizes.visible,
            sizes.hidden,
            a,
            b,
        )?;
        let params = ModelParams::uniform(&spec, scale, rng);
        let mut bits = |c: usize| -> Result<SpikeTrain> {
            let data: Vec<u8> = (0..c * sizes.horizon).map(|_| rng.gen_range(0..2)).collect();
            SpikeTrain::from_rows(c, sizes.horizon, &data)
        };
        let visible = bits(sizes.visible)?;
        let exogenous = bits(sizes.inputs)?;
        Self::new(spec, params, visible, exogenous)
    }

    pub fn horizon(&self) -> usize {
        self.visible.horizon()
    }

    pub fn enumeration_bits(&self) -> usize {
        self.spec.hidden().len() * self.horizon()
    }

    fn check_bounds(&self) -> Result<()> {
        let bits = self.enumeration_bits();
        if self.spec.hidden().len() > MAX_HIDDEN
            || self.spec.visible().len() > MAX_VISIBLE
            || self.horizon() > MAX_HORIZON
            || bits > MAX_ENUMERATION_BITS
        {
            return Err(Error::InstanceTooLarge { bits });
        }
        Ok(())
    }

    /// Hidden sequence number `code`: bit `t·|H| + pos` is hidden neuron
    /// `pos` at step `t`.
    pub fn hidden_sequence(&self, code: u64) -> SpikeTrain {
        let nh = self.spec.hidden().len();
        let mut h = SpikeTrain::zeros(nh, self.horizon());
        for t in 0..self.horizon() {
            for pos in 0..nh {
                h.set(pos, t, (code >> (t * nh + pos)) & 1 == 1);
            }
        }
        h
    }

    /// `(log p(v || h), log p(h || v))` for one hidden sequence.
    pub fn replay(&self, params: &ModelParams, hidden: &SpikeTrain) -> (f64, f64) {
        let spec = &self.spec;
        let mut state = NetworkState::new(spec);
        let mut proj = Projections::new(spec);
        let mut node_spikes = vec![0u8; spec.num_nodes()];
        let (mut log_v, mut log_h) = (0.0, 0.0);
        for t in 0..self.horizon() {
            proj.compute(&state, spec);
            for (pos, &id) in spec.visible().iter().enumerate() {
                log_v += spike_log_prob(self.visible.get(pos, t), proj.potential(params, spec, id));
            }
            for (pos, &id) in spec.hidden().iter().enumerate() {
                log_h += spike_log_prob(hidden.get(pos, t), proj.potential(params, spec, id));
            }
            crate::model::fill_node_spikes(
                spec,
                &mut node_spikes,
                &self.exogenous,
                &self.visible,
                hidden,
                t,
            );
            state.push(&node_spikes);
        }
        (log_v, log_h)
    }
}

/// Numerically stable running log-sum-exp.
#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}

/// `log Σ_h p(v, h)` by enumerating hidden sequences in lexicographic order.
pub fn exact_log_marginal(inst: &TinyInstance) -> Result<f64> {
    exact_log_marginal_with(inst, &inst.params)
}

pub fn exact_log_marginal_with(inst: &TinyInstance, params: &ModelParams) -> Result<f64> {
    inst.check_bounds()?;
    let mut acc = LogSumExp::new();
    for code in 0..1u64 << inst.enumeration_bits() {
        let (lv, lh) = inst.replay(params, &inst.hidden_sequence(code));
        acc.add(lv + lh);
    }
    Ok(acc.value())
}

/// Second marginalizer: depth-first over time, branching on the hidden
/// configuration at each step and combining subtrees with log-sum-exp.
pub fn exact_log_marginal_recursive(inst: &TinyInstance) -> Result<f64> {
    inst.check_bounds()?;
    let spec = &inst.spec;
    let state = NetworkState::new(spec);
    Ok(recurse(inst, &state, 0))
}

fn recurse(inst: &TinyInstance, state: &NetworkState, t: usize) -> f64 {
    if t == inst.horizon() {
        return 0.0;
    }
    let spec = &inst.spec;
    let params = &inst.params;
    let nh = spec.hidden().len();
    let mut proj = Projections::new(spec);
    proj.compute(state, spec);
    let log_v: f64 = spec
        .visible()
        .iter()
        .enumerate()
        .map(|(pos, &id)| spike_log_prob(inst.visible.get(pos, t), proj.potential(params, spec, id)))
        .sum();
    let hidden_u: Vec<f64> = spec
        .hidden()
        .iter()
        .map(|&id| proj.potential(params, spec, id))
        .collect();
    // Branch over hidden configurations at t, highest code first.
    let mut terms = Vec::with_capacity(1 << nh);
    for config in (0..1u32 << nh).rev() {
        let mut log_h = 0.0;
        let mut next = state.clone();
        let mut node_spikes = vec![0u8; spec.num_nodes()];
        for c in 0..spec.num_inputs() {
            node_spikes[c] = inst.exogenous.get(c, t);
        }
        for (pos, &id) in spec.visible().iter().enumerate() {
            node_spikes[spec.neuron_node(id)] = inst.visible.get(pos, t);
        }
        for (pos, &id) in spec.hidden().iter().enumerate() {
            let s = ((config >> pos) & 1) as u8;
            log_h += spike_log_prob(s, hidden_u[pos]);
            node_spikes[spec.neuron_node(id)] = s;
        }
        next.push(&node_spikes);
        terms.push(log_h + recurse(inst, &next, t + 1));
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    log_v + m + terms.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `E_{p(h || v)}[log p(v || h)]` computed exactly.
pub fn exact_elbo(inst: &TinyInstance) -> Result<f64> {
    exact_elbo_with(inst, &inst.params)
}

pub fn exact_elbo_with(inst: &TinyInstance, params: &ModelParams) -> Result<f64> {
    inst.check_bounds()?;
    let mut total = 0.0;
    for code in 0..1u64 << inst.enumeration_bits() {
        let (lv, lh) = inst.replay(params, &inst.hidden_sequence(code));
        total += lh.exp() * lv;
    }
    Ok(total)
}

/// Largest joint `log p(v, h)` over all hidden sequences; a lower bound on
/// the log-marginal.
pub fn best_joint_log_prob(inst: &TinyInstance) -> Result<f64> {
    inst.check_bounds()?;
    Ok((0..1u64 << inst.enumeration_bits())
        .map(|code| {
            let (lv, lh) = inst.replay(&inst.params, &inst.hidden_sequence(code));
            lv + lh
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Largest `log p(v || h)` over all hidden sequences; an upper bound on the
/// log-marginal, which averages `p(v || h)` under `p(h || v)`.
pub fn best_conditional_log_likelihood(inst: &TinyInstance) -> Result<f64> {
    inst.check_bounds()?;
    Ok((0..1u64 << inst.enumeration_bits())
        .map(|code| inst.replay(&inst.params, &inst.hidden_sequence(code)).0)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Central differences `(f(φ + h e_k) - f(φ - h e_k)) / 2h` per coordinate.
pub fn finite_diff_grad(
    f: impl Fn(&ModelParams) -> f64,
    params: &ModelParams,
    h: f64,
) -> Result<ModelParams> {
    let mut grad = ModelParams::zeros_like(params);
    let mut probe = params.clone();
    for k in 0..params.len() {
        let x = params.get(k);
        probe.set(k, x + h);
        let plus = f(&probe);
        probe.set(k, x - h);
        let minus = f(&probe);
        probe.set(k, x);
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::NonFinite(format!("objective at coordinate {k}")));
        }
        grad.set(k, (plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Sum over steps and visible neurons of the local gradients, replayed
/// along a fixed hidden sequence: the analytic gradient of
/// `log p(v || h)`.
pub fn analytic_visible_gradient(inst: &TinyInstance, hidden: &SpikeTrain) -> Result<ModelParams> {
    Ok(analytic_gradients(inst, hidden)?.0)
}

/// Analytic gradients of `(log p(v || h), log p(h || v))` along a fixed
/// hidden sequence.
pub fn analytic_gradients(
    inst: &TinyInstance,
    hidden: &SpikeTrain,
) -> Result<(ModelParams, ModelParams)> {
    let spec = &inst.spec;
    check_len("hidden channels", spec.hidden().len(), hidden.channels())?;
    check_len("hidden horizon", inst.horizon(), hidden.horizon())?;
    let mut state = NetworkState::new(spec);
    let mut vis = ModelParams::zeros(spec);
    let mut hid = ModelParams::zeros(spec);
    let mut node_spikes = vec![0u8; spec.num_nodes()];
    for t in 0..inst.horizon() {
        let groups = [
            (spec.visible(), &inst.visible, &mut vis),
            (spec.hidden(), hidden, &mut hid),
        ];
        for (ids, spikes, total) in groups {
            for (pos, &id) in ids.iter().enumerate() {
                let u = crate::model::membrane_potential(&state, &inst.params, spec, id)?;
                let g = crate::within_task::neuron_gradient_params(
                    &state,
                    spec,
                    id,
                    spikes.get(pos, t),
                    u,
                )?;
                total.zip_inplace(&g, |a, b| a + b);
            }
        }
        crate::model::fill_node_spikes(spec, &mut node_spikes, &inst.exogenous, &inst.visible, hidden, t);
        state.push(&node_spikes);
    }
    Ok((vis, hid))
}

/// Max over coordinates of `|a - b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &ModelParams, b: &ModelParams, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// [`max_relative_error`] restricted to each parameter group, in the order
/// `[w_alpha, w_beta, gamma]`.
pub fn max_relative_error_by_group(a: &ModelParams, b: &ModelParams, floor: f64) -> [f64; 3] {
    let mut out = [0.0f64; 3];
    for (k, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        let slot = match a.group(k) {
            ParamGroup::Alpha { .. } => 0,
            ParamGroup::Beta { .. } => 1,
            ParamGroup::Gamma { .. } => 2,
        };
        let err = (x - y).abs() / x.abs().max(y.abs()).max(floor);
        out[slot] = out[slot].max(err);
    }
    out
}

/// Neuron that owns hidden position `pos`.
pub fn hidden_id(inst: &TinyInstance, pos: usize) -> NeuronId {
    inst.spec.hidden()[pos]
}
