//! Online within-task learning: a single streaming pass over the
//! concatenated examples with three-factor updates.
//!
//! Visible neurons follow the local log-likelihood gradient. Hidden neurons
//! follow a score-function estimate gated by the global learning signal (the
//! summed visible log-likelihood). Gradients are accumulated for `delta_s`
//! steps, folded into exponentially decaying traces and then applied.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::data::Example;
use crate::error::{check_len, Error, Result};
use crate::model::{spike_log_prob, spike_probability, NetworkState, Projections};
use crate::network::{NetworkSpec, NeuronId, Node, Role};
use crate::params::{ModelParams, ParamGroup};

/// How spike histories behave at example boundaries inside the stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Histories are zeroed at the start of every example.
    #[default]
    Reset,
    /// Histories carry over from the previous example.
    CarryOver,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnConfig {
    /// Learning rate.
    pub eta: f64,
    /// Trace decay in `[0, 1)`.
    pub kappa: f64,
    /// Accumulation interval in time steps.
    pub delta_s: usize,
    /// L1 strength on synaptic and feedback weights.
    #[serde(default)]
    pub reg_lambda: f64,
    #[serde(default)]
    pub boundary: BoundaryMode,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            kappa: 0.2,
            delta_s: 5,
            reg_lambda: 0.0,
            boundary: BoundaryMode::Reset,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidConfig(format!("eta = {} must be >= 0", self.eta)));
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::InvalidConfig(format!(
                "kappa = {} must lie in [0, 1)",
                self.kappa
            )));
        }
        if self.delta_s == 0 {
            return Err(Error::InvalidConfig("delta_s must be >= 1".into()));
        }
        if !(self.reg_lambda.is_finite() && self.reg_lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "reg_lambda = {} must be >= 0",
                self.reg_lambda
            )));
        }
        Ok(())
    }
}

/// Accumulators and traces of the learner. Gradient arrays share the
/// layout of [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    /// Learning signal summed since the last boundary.
    pub learning_signal_acc: f64,
    /// Decaying average of past accumulated learning signals.
    pub learning_signal_trace: f64,
    pub grad_acc: ModelParams,
    pub grad_trace: ModelParams,
}

impl TraceState {
    pub fn new(spec: &NetworkSpec) -> Self {
        Self {
            learning_signal_acc: 0.0,
            learning_signal_trace: 0.0,
            grad_acc: ModelParams::zeros(spec),
            grad_trace: ModelParams::zeros(spec),
        }
    }

    /// `l ← κl + (1-κ)l_acc`, `e ← κe + (1-κ)e_acc`.
    pub fn fold(&mut self, kappa: f64) {
        self.learning_signal_trace =
            kappa * self.learning_signal_trace + (1.0 - kappa) * self.learning_signal_acc;
        self.grad_trace
            .zip_inplace(&self.grad_acc, |e, acc| kappa * e + (1.0 - kappa) * acc);
    }

    pub fn reset_accumulators(&mut self) {
        self.learning_signal_acc = 0.0;
        self.grad_acc.map_inplace(|_| 0.0);
    }
}

/// Gradient of `log p(s | u)` for one neuron at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronGradient {
    /// One `K_a` vector per incoming synapse, in the order the windows were given.
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub gamma: f64,
}

/// Local gradient of a neuron's spike log-probability: the post-synaptic
/// error `s - σ(u)` times the basis-projected pre-synaptic windows.
pub fn local_gradient(
    post_spike: u8,
    u: f64,
    pre_windows: &[Vec<f64>],
    own_window: &[f64],
    synaptic_basis: &BasisSet,
    feedback_basis: &BasisSet,
) -> Result<NeuronGradient> {
    let w = synaptic_basis.window_len();
    for win in pre_windows {
        check_len("pre-synaptic window", w, win.len())?;
    }
    check_len("feedback window", feedback_basis.window_len(), own_window.len())?;
    let err = f64::from(post_spike) - spike_probability(u);
    let alpha = pre_windows
        .iter()
        .map(|win| {
            let mut p = vec![0.0; synaptic_basis.num_basis()];
            synaptic_basis.project(win, &mut p);
            p.iter().map(|v| v * err).collect()
        })
        .collect();
    let mut beta = vec![0.0; feedback_basis.num_basis()];
    feedback_basis.project(own_window, &mut beta);
    beta.iter_mut().for_each(|v| *v *= err);
    Ok(NeuronGradient {
        alpha,
        beta,
        gamma: err,
    })
}

/// Instantaneous learning signal: the visible log-likelihood at one step.
pub fn learning_signal(visible_spikes: &[u8], visible_u: &[f64]) -> Result<f64> {
    check_len("visible potentials", visible_spikes.len(), visible_u.len())?;
    Ok(visible_spikes
        .iter()
        .zip(visible_u)
        .map(|(&v, &u)| spike_log_prob(v, u))
        .sum())
}

/// Context handed to an [`UpdateProbe`] at an accumulation boundary.
#[derive(Debug, Clone, Copy)]
pub struct Boundary {
    /// Zero-based boundary counter.
    pub index: usize,
    /// Stream time step (1-based) at which the boundary fires.
    pub tau: usize,
}

/// Observation and intervention points inside [`update_with_probe`].
pub trait UpdateProbe {
    /// Before the traces are folded; accumulators may be edited here.
    fn before_fold(&mut self, _at: Boundary, _traces: &mut TraceState) {}
    /// After folding, before the parameter step; traces may be edited here.
    fn after_fold(&mut self, _at: Boundary, _traces: &mut TraceState) {}
    /// After the parameter step.
    fn after_step(&mut self, _at: Boundary, _phi: &ModelParams) {}
}

pub struct NoProbe;

impl UpdateProbe for NoProbe {}

/// Writes one CSV row `tau,l,e_norm` per boundary.
pub struct TraceCsvLog<W: Write> {
    out: W,
    header_written: bool,
    pub error: Option<std::io::Error>,
}

impl<W: Write> TraceCsvLog<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            header_written: false,
            error: None,
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> UpdateProbe for TraceCsvLog<W> {
    fn after_fold(&mut self, at: Boundary, traces: &mut TraceState) {
        if self.error.is_some() {
            return;
        }
        let mut res = Ok(());
        if !self.header_written {
            res = writeln!(self.out, "tau,l,e_norm");
            self.header_written = true;
        }
        if res.is_ok() {
            res = writeln!(
                self.out,
                "{},{:e},{:e}",
                at.tau,
                traces.learning_signal_trace,
                traces.grad_trace.norm()
            );
        }
        self.error = res.err();
    }
}

/// Marks which flat parameter coordinates belong to hidden neurons.
pub fn hidden_mask(spec: &NetworkSpec) -> Vec<bool> {
    let p = ModelParams::zeros(spec);
    (0..p.len())
        .map(|k| {
            let owner = match p.group(k) {
                ParamGroup::Alpha { synapse, .. } => spec.synapses()[synapse].dest,
                ParamGroup::Beta { neuron, .. } | ParamGroup::Gamma { neuron } => {
                    NeuronId(neuron as u32)
                }
            };
            spec.is_hidden(owner)
        })
        .collect()
}

/// Checks an example against the network's input/visible dimensions.
pub fn check_example(ex: &Example, spec: &NetworkSpec) -> Result<()> {
    check_len("example input channels", spec.num_inputs(), ex.x.channels())?;
    check_len("example label channels", spec.visible().len(), ex.y.channels())?;
    check_len("example horizon", ex.x.horizon(), ex.y.horizon())?;
    if ex.x.horizon() == 0 {
        return Err(Error::DimensionMismatch {
            what: "example horizon",
            expected: 1,
            got: 0,
        });
    }
    Ok(())
}

/// Streams `dataset` once, starting from `theta`, and returns the adapted
/// parameters.
pub fn update<R: Rng + ?Sized>(
    theta: &ModelParams,
    dataset: &[Example],
    spec: &NetworkSpec,
    cfg: &LearnConfig,
    rng: &mut R,
) -> Result<ModelParams> {
    update_with_probe(theta, dataset, spec, cfg, rng, &mut NoProbe)
}

pub fn update_with_probe<R: Rng + ?Sized, P: UpdateProbe + ?Sized>(
    theta: &ModelParams,
    dataset: &[Example],
    spec: &NetworkSpec,
    cfg: &LearnConfig,
    rng: &mut R,
    probe: &mut P,
) -> Result<ModelParams> {
    cfg.validate()?;
    theta.check_shape(spec)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for ex in dataset {
        check_example(ex, spec)?;
    }

    let mut phi = theta.clone();
    let mask = hidden_mask(spec);
    let mut traces = TraceState::new(spec);
    let mut state = NetworkState::new(spec);
    let mut proj = Projections::new(spec);
    let n = spec.num_neurons();
    let mut u = vec![0.0; n];
    let mut spikes = vec![0u8; n];
    let mut node_spikes = vec![0u8; spec.num_nodes()];
    let mut tau = 0usize;
    let mut boundaries = 0usize;

    for ex in dataset {
        if cfg.boundary == BoundaryMode::Reset {
            state.reset();
        }
        for t in 0..ex.x.horizon() {
            proj.compute(&state, spec);
            let mut ell = 0.0;
            for i in 0..n {
                let id = NeuronId(i as u32);
                u[i] = proj.potential(&phi, spec, id);
                spikes[i] = match spec.role(id)? {
                    Role::Visible(pos) => {
                        let v = ex.y.get(pos, t);
                        ell += spike_log_prob(v, u[i]);
                        v
                    }
                    Role::Hidden(_) => u8::from(rng.gen::<f64>() < spike_probability(u[i])),
                };
            }
            traces.learning_signal_acc += ell;
            accumulate_gradients(&mut traces.grad_acc, spec, &proj, &u, &spikes);

            for c in 0..spec.num_inputs() {
                node_spikes[c] = ex.x.get(c, t);
            }
            node_spikes[spec.num_inputs()..].copy_from_slice(&spikes);
            state.push(&node_spikes);
            tau += 1;

            if tau % cfg.delta_s == 0 {
                apply_boundary(&mut phi, &mut traces, &mask, cfg, boundaries, tau, probe);
                boundaries += 1;
            }
        }
    }
    if tau % cfg.delta_s != 0 {
        apply_boundary(&mut phi, &mut traces, &mask, cfg, boundaries, tau, probe);
    }
    Ok(phi)
}

/// Adds `(s_i - σ(u_i)) ×` pre-synaptic terms into `acc` for every neuron.
fn accumulate_gradients(
    acc: &mut ModelParams,
    spec: &NetworkSpec,
    proj: &Projections,
    u: &[f64],
    spikes: &[u8],
) {
    for i in 0..spec.num_neurons() {
        let id = NeuronId(i as u32);
        let err = f64::from(spikes[i]) - spike_probability(u[i]);
        for &(syn, src) in spec.incoming(id) {
            for (g, p) in acc.alpha_mut(syn).iter_mut().zip(proj.alpha(src)) {
                *g += err * p;
            }
        }
        for (g, p) in acc.beta_mut(id).iter_mut().zip(proj.beta(id)) {
            *g += err * p;
        }
        *acc.gamma_mut(id) += err;
    }
}

fn apply_boundary<P: UpdateProbe + ?Sized>(
    phi: &mut ModelParams,
    traces: &mut TraceState,
    hidden: &[bool],
    cfg: &LearnConfig,
    index: usize,
    tau: usize,
    probe: &mut P,
) {
    let at = Boundary { index, tau };
    probe.before_fold(at, traces);
    traces.fold(cfg.kappa);
    probe.after_fold(at, traces);

    let l = traces.learning_signal_trace;
    let eta = cfg.eta;
    let n_weights = phi.w_alpha().len() + phi.w_beta().len();
    for (k, &is_hidden) in hidden.iter().enumerate() {
        let e = traces.grad_trace.get(k);
        let mut step = if is_hidden { eta * l * e } else { eta * e };
        if cfg.reg_lambda > 0.0 && k < n_weights {
            let w = phi.get(k);
            if w != 0.0 {
                step -= eta * cfg.reg_lambda * w.signum();
            }
        }
        if step != 0.0 {
            phi.set(k, phi.get(k) + step);
        }
    }
    probe.after_step(at, phi);
    traces.reset_accumulators();
}

/// Brute-force gradient of one neuron's log-probability, assembled in the
/// [`ModelParams`] layout. Test-support helper built on [`local_gradient`].
pub fn neuron_gradient_params(
    state: &NetworkState,
    spec: &NetworkSpec,
    neuron: NeuronId,
    post_spike: u8,
    u: f64,
) -> Result<ModelParams> {
    let incoming = spec.incoming(neuron);
    let windows: Vec<Vec<f64>> = incoming.iter().map(|&(_, src)| state.window(src)).collect();
    let own = state.window(spec.node_index(Node::Neuron(neuron)));
    let g = local_gradient(
        post_spike,
        u,
        &windows,
        &own,
        spec.synaptic_basis(),
        spec.feedback_basis(),
    )?;
    let mut out = ModelParams::zeros(spec);
    for (&(syn, _), ga) in incoming.iter().zip(&g.alpha) {
        out.alpha_mut(syn).copy_from_slice(ga);
    }
    out.beta_mut(neuron).copy_from_slice(&g.beta);
    *out.gamma_mut(neuron) = g.gamma;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_raised_cosine_basis;
    use crate::network::Topology;
    use crate::spikes::SpikeTrain;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis() -> BasisSet {
        build_raised_cosine_basis(3, 5, None).unwrap()
    }

    #[test]
    fn gradient_with_silent_windows() {
        let w = vec![vec![0.0; 5]; 2];
        let g = local_gradient(1, 0.0, &w, &[0.0; 5], &basis(), &basis()).unwrap();
        assert_eq!(g.gamma, 0.5);
        assert!(g.alpha.iter().flatten().all(|&v| v == 0.0));
        assert!(g.beta.iter().all(|&v| v == 0.0));
        assert!(local_gradient(1, 0.0, &[vec![0.0; 4]], &[0.0; 5], &basis(), &basis()).is_err());
    }

    #[test]
    fn gradient_vanishes_when_saturated() {
        let u = 30.0;
        let delta = 1.0 - spike_probability(u);
        let w = vec![vec![1.0; 5]];
        let g = local_gradient(1, u, &w, &[1.0; 5], &basis(), &basis()).unwrap();
        let mut pre = vec![0.0; 3];
        basis().project(&w[0], &mut pre);
        for (ga, p) in g.alpha[0].iter().zip(&pre) {
            assert!(ga.abs() <= delta * p.abs() + 1e-300);
        }
        assert!(g.gamma.abs() <= delta);
    }

    #[test]
    fn learning_signal_values() {
        let l = learning_signal(&[0, 1], &[0.0, 0.0]).unwrap();
        assert!((l - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        let l = learning_signal(&[1, 0], &[3f64.ln(), -(3f64.ln())]).unwrap();
        assert!((l - 2.0 * 0.75f64.ln()).abs() < 1e-12);
        assert!(learning_signal(&[1], &[0.0, 1.0]).is_err());
    }

    fn toy_spec() -> NetworkSpec {
        NetworkSpec::preset(Topology::PaperRecurrent, 2, 2, 2, basis(), basis()).unwrap()
    }

    fn toy_data(rng: &mut ChaCha8Rng, m: usize, t: usize) -> Vec<Example> {
        (0..m)
            .map(|_| {
                let x: Vec<u8> = (0..2 * t).map(|_| rng.gen_range(0..2)).collect();
                let y: Vec<u8> = (0..2 * t).map(|_| rng.gen_range(0..2)).collect();
                Example {
                    x: SpikeTrain::from_rows(2, t, &x).unwrap(),
                    y: SpikeTrain::from_rows(2, t, &y).unwrap(),
                    label: 0,
                }
            })
            .collect()
    }

    #[test]
    fn zero_rate_is_identity() {
        let spec = toy_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = ModelParams::uniform(&spec, 0.5, &mut rng);
        let data = toy_data(&mut rng, 3, 7);
        let cfg = LearnConfig {
            eta: 0.0,
            ..LearnConfig::default()
        };
        let phi = update(&theta, &data, &spec, &cfg, &mut rng).unwrap();
        assert_eq!(phi, theta);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = toy_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = ModelParams::zeros(&spec);
        let cfg = LearnConfig::default();
        assert_eq!(
            update(&theta, &[], &spec, &cfg, &mut rng),
            Err(Error::EmptyDataset)
        );
        let mut data = toy_data(&mut rng, 1, 4);
        data[0].y = SpikeTrain::zeros(3, 4);
        assert!(update(&theta, &data, &spec, &cfg, &mut rng).is_err());
        let bad = LearnConfig {
            kappa: 1.0,
            ..cfg
        };
        assert!(update(&theta, &toy_data(&mut rng, 1, 4), &spec, &bad, &mut rng).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = toy_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let theta = ModelParams::uniform(&spec, 0.3, &mut rng);
        let data = toy_data(&mut rng, 2, 9);
        let cfg = LearnConfig::default();
        let a = update(&theta, &data, &spec, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = update(&theta, &data, &spec, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, theta);
    }

    #[derive(Default)]
    struct Count {
        boundaries: Vec<usize>,
    }

    impl UpdateProbe for Count {
        fn after_step(&mut self, at: Boundary, _phi: &ModelParams) {
            self.boundaries.push(at.tau);
        }
    }

    #[test]
    fn partial_window_flushes_at_end() {
        let spec = toy_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = toy_data(&mut rng, 2, 6);
        let cfg = LearnConfig {
            delta_s: 5,
            ..LearnConfig::default()
        };
        let mut probe = Count::default();
        update_with_probe(&ModelParams::zeros(&spec), &data, &spec, &cfg, &mut rng, &mut probe)
            .unwrap();
        assert_eq!(probe.boundaries, vec![5, 10, 12]);
    }

    #[test]
    fn trace_log_writes_rows() {
        let spec = toy_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = toy_data(&mut rng, 1, 10);
        let mut log = TraceCsvLog::new(Vec::new());
        update_with_probe(
            &ModelParams::zeros(&spec),
            &data,
            &spec,
            &LearnConfig::default(),
            &mut rng,
            &mut log,
        )
        .unwrap();
        let text = String::from_utf8(log.into_inner()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau,l,e_norm");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("5,"));
    }

    #[test]
    fn l1_shrinks_weights_not_biases() {
        let spec = toy_spec();
        let mut theta = ModelParams::zeros(&spec);
        theta.map_inplace(|_| 1.0);
        let mut zero_grad = ZeroGrads;
        let cfg = LearnConfig {
            eta: 0.1,
            reg_lambda: 0.5,
            delta_s: 4,
            ..LearnConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = toy_data(&mut rng, 1, 4);
        let phi = update_with_probe(&theta, &data, &spec, &cfg, &mut rng, &mut zero_grad).unwrap();
        let nw = phi.w_alpha().len() + phi.w_beta().len();
        for k in 0..phi.len() {
            if k < nw {
                assert!((phi.get(k) - 0.95).abs() < 1e-15);
            } else {
                assert_eq!(phi.get(k), 1.0);
            }
        }
    }

    struct ZeroGrads;

    impl UpdateProbe for ZeroGrads {
        fn before_fold(&mut self, _at: Boundary, traces: &mut TraceState) {
            traces.reset_accumulators();
        }
    }
}
