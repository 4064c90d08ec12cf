//! GLM network dynamics: membrane potentials, stochastic spiking and the
//! causally conditioned likelihood of visible spikes.

use rand::Rng;

use crate::error::{check_len, Result};
use crate::network::{NetworkSpec, NeuronId, Role};
use crate::params::ModelParams;
use crate::spikes::SpikeTrain;

/// Logistic sigmoid, evaluated without overflow for large `|u|`.
#[inline]
pub fn spike_probability(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)`, stable for large `|x|`.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log p(s | u)` for a Bernoulli(σ(u)) spike `s`.
#[inline]
pub fn spike_log_prob(spike: u8, u: f64) -> f64 {
    if spike != 0 {
        -softplus(-u)
    } else {
        -softplus(u)
    }
}

/// Spike histories of every input and neuron over the last `window_len`
/// steps, plus the processing time `tau`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkState {
    window_len: usize,
    num_nodes: usize,
    /// `num_nodes × window_len` ring buffer; `head` is the next write slot.
    history: Vec<u8>,
    head: usize,
    tau: u64,
}

impl NetworkState {
    pub fn new(spec: &NetworkSpec) -> Self {
        let window_len = spec.window_len();
        Self {
            window_len,
            num_nodes: spec.num_nodes(),
            history: vec![0; spec.num_nodes() * window_len],
            head: 0,
            tau: 0,
        }
    }

    /// Clears all histories and rewinds `tau` to zero.
    pub fn reset(&mut self) {
        self.history.iter_mut().for_each(|s| *s = 0);
        self.head = 0;
        self.tau = 0;
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Spike of node `node` at delay `d`, i.e. at time `tau - d`
    /// (`d = 0` is the most recent step).
    #[inline]
    pub fn spike_at(&self, node: usize, d: usize) -> u8 {
        let pos = (self.head + self.window_len - 1 - d) % self.window_len;
        self.history[node * self.window_len + pos]
    }

    /// Window `[s_{tau}, s_{tau-1}, ..., s_{tau-window_len+1}]` of a node.
    pub fn window(&self, node: usize) -> Vec<f64> {
        (0..self.window_len)
            .map(|d| f64::from(self.spike_at(node, d)))
            .collect()
    }

    /// Appends one step of spikes for every node (inputs first, then neurons
    /// in id order) and advances `tau`.
    pub fn push(&mut self, node_spikes: &[u8]) {
        debug_assert_eq!(node_spikes.len(), self.num_nodes);
        for (n, &s) in node_spikes.iter().enumerate() {
            self.history[n * self.window_len + self.head] = u8::from(s != 0);
        }
        self.head = (self.head + 1) % self.window_len;
        self.tau += 1;
    }
}

/// Basis projections of the current windows: `Aᵀ s⃗_j` for every node and
/// `Bᵀ s⃗_i` for every neuron. Shared by the potential and its gradient.
#[derive(Debug, Clone)]
pub struct Projections {
    k_a: usize,
    k_b: usize,
    num_inputs: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Projections {
    pub fn new(spec: &NetworkSpec) -> Self {
        let k_a = spec.synaptic_basis().num_basis();
        let k_b = spec.feedback_basis().num_basis();
        Self {
            k_a,
            k_b,
            num_inputs: spec.num_inputs(),
            alpha: vec![0.0; spec.num_nodes() * k_a],
            beta: vec![0.0; spec.num_neurons() * k_b],
        }
    }

    pub fn compute(&mut self, state: &NetworkState, spec: &NetworkSpec) {
        let a = spec.synaptic_basis();
        let b = spec.feedback_basis();
        self.alpha.iter_mut().for_each(|v| *v = 0.0);
        self.beta.iter_mut().for_each(|v| *v = 0.0);
        for node in 0..spec.num_nodes() {
            for d in 0..state.window_len() {
                if state.spike_at(node, d) == 0 {
                    continue;
                }
                let pa = &mut self.alpha[node * self.k_a..(node + 1) * self.k_a];
                for (k, p) in pa.iter_mut().enumerate() {
                    *p += a.get(d, k);
                }
                if node >= self.num_inputs {
                    let i = node - self.num_inputs;
                    let pb = &mut self.beta[i * self.k_b..(i + 1) * self.k_b];
                    for (k, p) in pb.iter_mut().enumerate() {
                        *p += b.get(d, k);
                    }
                }
            }
        }
    }

    /// `Aᵀ s⃗` for a node index.
    #[inline]
    pub fn alpha(&self, node: usize) -> &[f64] {
        &self.alpha[node * self.k_a..(node + 1) * self.k_a]
    }

    /// `Bᵀ s⃗` for a neuron's own history.
    #[inline]
    pub fn beta(&self, neuron: NeuronId) -> &[f64] {
        let i = neuron.0 as usize;
        &self.beta[i * self.k_b..(i + 1) * self.k_b]
    }

    /// Membrane potential of `neuron` from these projections.
    #[inline]
    pub fn potential(&self, params: &ModelParams, spec: &NetworkSpec, neuron: NeuronId) -> f64 {
        let mut u = params.gamma(neuron);
        for &(syn, src) in spec.incoming(neuron) {
            u += dot(params.alpha(syn), self.alpha(src));
        }
        u + dot(params.beta(neuron), self.beta(neuron))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Membrane potential of one neuron given the spike histories in `state`.
pub fn membrane_potential(
    state: &NetworkState,
    params: &ModelParams,
    spec: &NetworkSpec,
    neuron: NeuronId,
) -> Result<f64> {
    spec.role(neuron)?;
    let mut proj = Projections::new(spec);
    proj.compute(state, spec);
    Ok(proj.potential(params, spec, neuron))
}

/// Result of one simulation step. Spike vectors follow the order of
/// `spec.visible()` / `spec.hidden()`; `u` is indexed by neuron id.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub hidden: Vec<u8>,
    pub visible: Vec<u8>,
    pub u: Vec<f64>,
}

/// Advances the network by one step.
///
/// Hidden neurons are sampled from Bernoulli(σ(u)). Visible neurons take
/// `clamp_visible` when given and are sampled otherwise. One uniform draw is
/// consumed per sampled neuron, in neuron-id order.
pub fn step<R: Rng + ?Sized>(
    state: &mut NetworkState,
    params: &ModelParams,
    spec: &NetworkSpec,
    exogenous: &[u8],
    clamp_visible: Option<&[u8]>,
    rng: &mut R,
) -> Result<StepOutput> {
    check_len("exogenous spikes", spec.num_inputs(), exogenous.len())?;
    if let Some(c) = clamp_visible {
        check_len("visible clamp", spec.visible().len(), c.len())?;
    }
    let mut proj = Projections::new(spec);
    proj.compute(state, spec);
    let n = spec.num_neurons();
    let mut out = StepOutput {
        hidden: vec![0; spec.hidden().len()],
        visible: vec![0; spec.visible().len()],
        u: vec![0.0; n],
    };
    let mut node_spikes = Vec::with_capacity(spec.num_nodes());
    node_spikes.extend(exogenous.iter().map(|&s| u8::from(s != 0)));
    for i in 0..n {
        let id = NeuronId(i as u32);
        let u = proj.potential(params, spec, id);
        out.u[i] = u;
        let spike = match (spec.role(id)?, clamp_visible) {
            (Role::Visible(pos), Some(c)) => {
                let s = u8::from(c[pos] != 0);
                out.visible[pos] = s;
                s
            }
            (Role::Visible(pos), None) => {
                let s = u8::from(rng.gen::<f64>() < spike_probability(u));
                out.visible[pos] = s;
                s
            }
            (Role::Hidden(pos), _) => {
                let s = u8::from(rng.gen::<f64>() < spike_probability(u));
                out.hidden[pos] = s;
                s
            }
        };
        node_spikes.push(spike);
    }
    state.push(&node_spikes);
    Ok(out)
}

/// `log p(v_{≤T} || h_{≤T-1})`: the visible spikes' log-likelihood with all
/// spikes (visible, hidden, exogenous) fixed to the given sequences.
///
/// Rows of `visible_seq`/`hidden_seq` follow `spec.visible()`/`spec.hidden()`.
pub fn conditional_log_likelihood(
    visible_seq: &SpikeTrain,
    hidden_seq: &SpikeTrain,
    exogenous_seq: &SpikeTrain,
    params: &ModelParams,
    spec: &NetworkSpec,
) -> Result<f64> {
    let horizon = visible_seq.horizon();
    check_len("visible channels", spec.visible().len(), visible_seq.channels())?;
    check_len("hidden channels", spec.hidden().len(), hidden_seq.channels())?;
    check_len("input channels", spec.num_inputs(), exogenous_seq.channels())?;
    check_len("hidden horizon", horizon, hidden_seq.horizon())?;
    check_len("exogenous horizon", horizon, exogenous_seq.horizon())?;
    params.check_shape(spec)?;

    let mut state = NetworkState::new(spec);
    let mut proj = Projections::new(spec);
    let mut node_spikes = vec![0u8; spec.num_nodes()];
    let mut total = 0.0;
    for t in 0..horizon {
        proj.compute(&state, spec);
        for (pos, &id) in spec.visible().iter().enumerate() {
            let u = proj.potential(params, spec, id);
            total += spike_log_prob(visible_seq.get(pos, t), u);
        }
        fill_node_spikes(spec, &mut node_spikes, exogenous_seq, visible_seq, hidden_seq, t);
        state.push(&node_spikes);
    }
    Ok(total)
}

pub(crate) fn fill_node_spikes(
    spec: &NetworkSpec,
    node_spikes: &mut [u8],
    exogenous: &SpikeTrain,
    visible: &SpikeTrain,
    hidden: &SpikeTrain,
    t: usize,
) {
    for c in 0..spec.num_inputs() {
        node_spikes[c] = exogenous.get(c, t);
    }
    for (pos, &id) in spec.visible().iter().enumerate() {
        node_spikes[spec.neuron_node(id)] = visible.get(pos, t);
    }
    for (pos, &id) in spec.hidden().iter().enumerate() {
        node_spikes[spec.neuron_node(id)] = hidden.get(pos, t);
    }
}
