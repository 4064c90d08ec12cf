//! Online-within-online meta-learning: task and meta-data buffers, the
//! first-order meta-update, and the joint/conventional baselines.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Example, Task};
use crate::error::{Error, Result};
use crate::model::{spike_log_prob, spike_probability, NetworkState, Projections};
use crate::network::{NetworkSpec, NeuronId, Role};
use crate::params::ModelParams;
use crate::seeding::{derive_seed, rng_for, tag};
use crate::within_task::{check_example, update, LearnConfig};

/// Within-task data for the task currently being streamed.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataBuffer {
    pub task_id: u64,
    examples: Vec<Example>,
}

impl TaskDataBuffer {
    pub fn new(task_id: u64) -> Self {
        Self {
            task_id,
            examples: Vec::new(),
        }
    }

    pub fn push_batch(&mut self, batch: &[Example]) {
        self.examples.extend_from_slice(batch);
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }
}

/// Completed tasks available to the meta-learner, oldest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetaDataBuffer {
    tasks: Vec<(u64, Vec<Example>)>,
    capacity: Option<usize>,
}

impl MetaDataBuffer {
    pub fn new(capacity: Option<usize>) -> Self {
        Self {
            tasks: Vec::new(),
            capacity,
        }
    }

    /// Stores a finished task, evicting the oldest task when at capacity.
    pub fn insert(&mut self, task_id: u64, examples: Vec<Example>) -> Result<()> {
        if self.contains(task_id) {
            return Err(Error::InvalidConfig(format!(
                "task {task_id} already in meta-data buffer"
            )));
        }
        if self.capacity == Some(0) {
            return Ok(());
        }
        if let Some(cap) = self.capacity {
            while self.tasks.len() >= cap {
                self.tasks.remove(0);
            }
        }
        self.tasks.push((task_id, examples));
        Ok(())
    }

    pub fn contains(&self, task_id: u64) -> bool {
        self.tasks.iter().any(|(id, _)| *id == task_id)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.tasks.iter().map(|(id, _)| *id)
    }

    pub fn task(&self, pos: usize) -> (u64, &[Example]) {
        let (id, ex) = &self.tasks[pos];
        (*id, ex)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetaConfig {
    /// Meta-learning rate.
    pub mu: f64,
    /// Tasks sampled per meta-update.
    pub n_tasks: usize,
    /// Examples sampled per task.
    pub m_examples: usize,
    /// Examples added to the task-data buffer per within-task step.
    pub batch_size: usize,
    pub inner: LearnConfig,
    /// Run a meta-update every this many within-task steps.
    pub meta_every: usize,
    /// Maximum number of tasks kept in the meta-data buffer.
    pub buffer_capacity: Option<usize>,
    /// Sign of the meta-step.
    pub direction: MetaDirection,
}

/// Which way a meta-step moves `θ` relative to the adapted models `φ_n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaDirection {
    /// `θ + μ Σ (θ - φ_n)`.
    #[default]
    AwayFromAdapted,
    /// `θ + μ Σ (φ_n - θ)`, the usual first-order step toward the adapted
    /// models.
    TowardAdapted,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            mu: 0.01,
            n_tasks: 5,
            m_examples: 2,
            batch_size: 1,
            inner: LearnConfig::default(),
            meta_every: 1,
            buffer_capacity: None,
            direction: MetaDirection::AwayFromAdapted,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidConfig(format!("mu = {} must be >= 0", self.mu)));
        }
        for (name, v) in [
            ("n_tasks", self.n_tasks),
            ("m_examples", self.m_examples),
            ("batch_size", self.batch_size),
            ("meta_every", self.meta_every),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        self.inner.validate()
    }
}

/// Draws `n_tasks` datasets of `m_examples` each from the buffer.
///
/// Tasks are drawn uniformly, without replacement when the buffer holds at
/// least `n_tasks` tasks and with replacement otherwise. Examples within a
/// task are drawn without replacement.
pub fn sample_meta_batch<R: Rng + ?Sized>(
    buffer: &MetaDataBuffer,
    cfg: &MetaConfig,
    rng: &mut R,
) -> Result<Vec<Vec<Example>>> {
    sample_task_datasets(buffer, cfg, rng).map(|v| v.into_iter().map(|(_, d)| d).collect())
}

/// Like [`sample_meta_batch`], also returning the sampled task ids.
pub fn sample_task_datasets<R: Rng + ?Sized>(
    buffer: &MetaDataBuffer,
    cfg: &MetaConfig,
    rng: &mut R,
) -> Result<Vec<(u64, Vec<Example>)>> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let positions: Vec<usize> = if buffer.len() >= cfg.n_tasks {
        index::sample(rng, buffer.len(), cfg.n_tasks).into_vec()
    } else {
        (0..cfg.n_tasks).map(|_| rng.gen_range(0..buffer.len())).collect()
    };
    positions
        .into_iter()
        .map(|pos| {
            let (id, examples) = buffer.task(pos);
            if examples.len() < cfg.m_examples {
                return Err(Error::InsufficientExamples {
                    task: id,
                    available: examples.len(),
                    requested: cfg.m_examples,
                });
            }
            let picked = index::sample(rng, examples.len(), cfg.m_examples)
                .into_iter()
                .map(|k| examples[k].clone())
                .collect();
            Ok((id, picked))
        })
        .collect()
}

/// Seed of the `n`-th inner model of a meta-update seeded with `seed`.
pub fn inner_seed(seed: u64, n: usize) -> u64 {
    derive_seed(seed, &[n as u64])
}

/// Inner models `φ_n = Update(θ, D_n)`, each with its own sub-seed.
pub fn inner_models(
    theta: &ModelParams,
    datasets: &[Vec<Example>],
    spec: &NetworkSpec,
    cfg: &MetaConfig,
    seed: u64,
) -> Result<Vec<ModelParams>> {
    use rayon::prelude::*;
    datasets
        .par_iter()
        .enumerate()
        .map(|(n, d)| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(inner_seed(seed, n));
            update(theta, d, spec, &cfg.inner, &mut rng)
        })
        .collect()
}

/// `θ + μ Σ_n (θ - φ_n)`, summed in ascending `n`.
pub fn reptile_step(theta: &ModelParams, phis: &[ModelParams], mu: f64) -> ModelParams {
    directed_step(theta, phis, mu, MetaDirection::AwayFromAdapted)
}

/// Like [`reptile_step`], with the sign of each difference set by `direction`.
pub fn directed_step(
    theta: &ModelParams,
    phis: &[ModelParams],
    mu: f64,
    direction: MetaDirection,
) -> ModelParams {
    let mut sum = ModelParams::zeros_like(theta);
    for phi in phis {
        let mut diff = theta.clone();
        match direction {
            MetaDirection::AwayFromAdapted => diff.zip_inplace(phi, |t, p| t - p),
            MetaDirection::TowardAdapted => diff.zip_inplace(phi, |t, p| p - t),
        }
        sum.zip_inplace(&diff, |s, d| s + d);
    }
    let mut out = theta.clone();
    out.zip_inplace(&sum, |t, s| t + mu * s);
    out
}

/// First-order meta-update over `datasets`.
pub fn meta_update(
    theta: &ModelParams,
    datasets: &[Vec<Example>],
    spec: &NetworkSpec,
    cfg: &MetaConfig,
    seed: u64,
) -> Result<ModelParams> {
    if datasets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    theta.check_shape(spec)?;
    let phis = inner_models(theta, datasets, spec, cfg, seed)?;
    Ok(directed_step(theta, &phis, cfg.mu, cfg.direction))
}

/// Joint-training replacement for the meta-update: a single `Update` on
/// the concatenation of the sampled datasets, in sample order.
pub fn joint_training_baseline<R: Rng + ?Sized>(
    theta: &ModelParams,
    buffer: &MetaDataBuffer,
    spec: &NetworkSpec,
    cfg: &MetaConfig,
    sample_rng: &mut R,
    inner_rng: &mut R,
) -> Result<ModelParams> {
    let pooled: Vec<Example> = sample_meta_batch(buffer, cfg, sample_rng)?
        .into_iter()
        .flatten()
        .collect();
    update(theta, &pooled, spec, &cfg.inner, inner_rng)
}

use rand::SeedableRng;

/// Free-running classification and teacher-forced log-loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub logloss: f64,
}

/// Predicts the class of `x` by running the network with visible neurons
/// unclamped `reps` times and taking the visible neuron with the largest
/// total spike count (lowest index on ties).
pub fn classify<R: Rng + ?Sized>(
    phi: &ModelParams,
    spec: &NetworkSpec,
    x: &crate::spikes::SpikeTrain,
    reps: usize,
    rng: &mut R,
) -> Result<usize> {
    let mut counts = vec![0usize; spec.visible().len()];
    let mut state = NetworkState::new(spec);
    for _ in 0..reps {
        state.reset();
        for t in 0..x.horizon() {
            let out = crate::model::step(&mut state, phi, spec, &x.column(t), None, rng)?;
            for (c, &v) in counts.iter_mut().zip(&out.visible) {
                *c += v as usize;
            }
        }
    }
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Mean per-step, per-visible-neuron negative log-likelihood of `y` given
/// `x`, with visible neurons clamped and one sampled hidden trajectory.
pub fn teacher_forced_logloss<R: Rng + ?Sized>(
    phi: &ModelParams,
    spec: &NetworkSpec,
    ex: &Example,
    rng: &mut R,
) -> Result<f64> {
    check_example(ex, spec)?;
    let mut state = NetworkState::new(spec);
    let mut proj = Projections::new(spec);
    let mut node_spikes = vec![0u8; spec.num_nodes()];
    let mut total = 0.0;
    for t in 0..ex.horizon() {
        proj.compute(&state, spec);
        for c in 0..spec.num_inputs() {
            node_spikes[c] = ex.x.get(c, t);
        }
        for i in 0..spec.num_neurons() {
            let id = NeuronId(i as u32);
            let u = proj.potential(phi, spec, id);
            let s = match spec.role(id)? {
                Role::Visible(pos) => {
                    let v = ex.y.get(pos, t);
                    total -= spike_log_prob(v, u);
                    v
                }
                Role::Hidden(_) => u8::from(rng.gen::<f64>() < spike_probability(u)),
            };
            node_spikes[spec.num_inputs() + i] = s;
        }
        state.push(&node_spikes);
    }
    Ok(total / (ex.horizon() * spec.visible().len().max(1)) as f64)
}

pub fn evaluate<R: Rng + ?Sized>(
    phi: &ModelParams,
    spec: &NetworkSpec,
    test: &[Example],
    reps: usize,
    rng: &mut R,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    for ex in test {
        check_example(ex, spec)?;
        if classify(phi, spec, &ex.x, reps, rng)? == ex.label {
            correct += 1;
        }
        loss += teacher_forced_logloss(phi, spec, ex, rng)?;
    }
    Ok(Evaluation {
        accuracy: correct as f64 / test.len() as f64,
        logloss: loss / test.len() as f64,
    })
}

/// Scores the within-task parameters `phi` after step `i` of task `t`.
pub trait EvalHook {
    fn evaluate(&mut self, phi: &ModelParams, spec: &NetworkSpec, task: &Task, t: u64, i: usize)
        -> Result<Evaluation>;
}

impl<F> EvalHook for F
where
    F: FnMut(&ModelParams, &NetworkSpec, &Task, u64, usize) -> Result<Evaluation>,
{
    fn evaluate(
        &mut self,
        phi: &ModelParams,
        spec: &NetworkSpec,
        task: &Task,
        t: u64,
        i: usize,
    ) -> Result<Evaluation> {
        self(phi, spec, task, t, i)
    }
}

/// Default hook: [`evaluate`] on the task's fixed test set.
#[derive(Debug, Clone, Copy)]
pub struct TestSetEval {
    pub reps: usize,
    pub seed: u64,
}

impl EvalHook for TestSetEval {
    fn evaluate(
        &mut self,
        phi: &ModelParams,
        spec: &NetworkSpec,
        task: &Task,
        t: u64,
        i: usize,
    ) -> Result<Evaluation> {
        let mut rng = rng_for(self.seed, &[tag::EVAL, t, i as u64]);
        evaluate(phi, spec, &task.test, self.reps, &mut rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Owoml,
    Joint,
    Conventional,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Owoml => "owoml",
            Method::Joint => "joint",
            Method::Conventional => "conventional",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub t: u64,
    pub i: usize,
    pub examples_seen: usize,
    pub test_accuracy: f64,
    pub test_logloss: f64,
    pub wallclock_ms: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub records: Vec<MetricRecord>,
}

pub const METRICS_HEADER: &str = "t,i,examples_seen,test_accuracy,test_logloss,wallclock_ms,method";

impl RunMetrics {
    /// Writes the metrics CSV. With `wallclock = false` the column is
    /// written as `0`, which makes the output a deterministic function of
    /// the run.
    pub fn write_csv<W: Write>(&self, mut w: W, wallclock: bool) -> std::io::Result<()> {
        writeln!(w, "{METRICS_HEADER}")?;
        for r in &self.records {
            let ms = if wallclock { r.wallclock_ms } else { 0.0 };
            writeln!(
                w,
                "{},{},{},{},{},{:.3},{}",
                r.t, r.i, r.examples_seen, r.test_accuracy, r.test_logloss, ms, r.method
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, wallclock: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, wallclock).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn extend(&mut self, other: RunMetrics) {
        self.records.extend(other.records);
    }
}

/// State of the outer online loop: the meta-learned initialization and the
/// meta-data buffer.
#[derive(Debug, Clone)]
pub struct MetaLearner<'a> {
    spec: &'a NetworkSpec,
    cfg: MetaConfig,
    method: Method,
    seed: u64,
    pub theta: ModelParams,
    pub buffer: MetaDataBuffer,
    /// When set, `theta` is redrawn uniformly on `[-w0, w0]` at each new task.
    pub reinit_scale: Option<f64>,
    /// Suppresses meta-updates and buffer insertion (frozen evaluation).
    pub frozen: bool,
    /// Number of inner `Update` calls and meta-updates performed so far.
    pub counters: Counters,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub updates: usize,
    pub meta_updates: usize,
}

impl<'a> MetaLearner<'a> {
    pub fn new(
        spec: &'a NetworkSpec,
        cfg: MetaConfig,
        method: Method,
        theta: ModelParams,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        theta.check_shape(spec)?;
        Ok(Self {
            spec,
            cfg,
            method,
            seed,
            theta,
            buffer: MetaDataBuffer::new(cfg.buffer_capacity),
            reinit_scale: None,
            frozen: false,
            counters: Counters::default(),
        })
    }

    pub fn config(&self) -> &MetaConfig {
        &self.cfg
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Streams one task: grows the task-data buffer batch by batch, adapts
    /// from `theta`, evaluates, and meta-updates `theta` after each batch.
    /// The task enters the meta-data buffer once its stream ends.
    pub fn process_task(
        &mut self,
        t: u64,
        task: &Task,
        eval: &mut dyn EvalHook,
        metrics: &mut RunMetrics,
    ) -> Result<()> {
        if task.train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(w0) = self.reinit_scale {
            let mut rng = rng_for(self.seed, &[tag::INIT, t]);
            self.theta = ModelParams::uniform(self.spec, w0, &mut rng);
        }
        let mut data = TaskDataBuffer::new(task.id);
        for (step, batch) in task.train.chunks(self.cfg.batch_size).enumerate() {
            let i = step + 1;
            let started = Instant::now();
            data.push_batch(batch);
            let mut rng = rng_for(self.seed, &[tag::INNER, t, i as u64]);
            let phi = update(&self.theta, data.examples(), self.spec, &self.cfg.inner, &mut rng)?;
            self.counters.updates += 1;
            let score = eval.evaluate(&phi, self.spec, task, t, i)?;
            if self.wants_meta_update(i) {
                self.meta_step(t, i)?;
            }
            metrics.records.push(MetricRecord {
                t,
                i,
                examples_seen: data.examples().len(),
                test_accuracy: score.accuracy,
                test_logloss: score.logloss,
                wallclock_ms: started.elapsed().as_secs_f64() * 1e3,
                method: self.method,
            });
        }
        if !self.frozen {
            self.buffer.insert(task.id, data.into_examples())?;
        }
        Ok(())
    }

    fn wants_meta_update(&self, i: usize) -> bool {
        !self.frozen
            && self.method != Method::Conventional
            && !self.buffer.is_empty()
            && i % self.cfg.meta_every == 0
    }

    fn meta_step(&mut self, t: u64, i: usize) -> Result<()> {
        let mut sample_rng = rng_for(self.seed, &[tag::META_SAMPLE, t, i as u64]);
        let inner_seed = derive_seed(self.seed, &[tag::META_INNER, t, i as u64]);
        match self.method {
            Method::Owoml => {
                let datasets = sample_meta_batch(&self.buffer, &self.cfg, &mut sample_rng)?;
                self.theta = meta_update(&self.theta, &datasets, self.spec, &self.cfg, inner_seed)?;
                self.counters.updates += datasets.len();
            }
            Method::Joint => {
                let mut inner_rng = rand_chacha::ChaCha8Rng::seed_from_u64(inner_seed);
                let mut sample_rng = sample_rng;
                self.theta = joint_training_baseline(
                    &self.theta,
                    &self.buffer,
                    self.spec,
                    &self.cfg,
                    &mut sample_rng,
                    &mut inner_rng,
                )?;
                self.counters.updates += 1;
            }
            Method::Conventional => return Ok(()),
        }
        self.counters.meta_updates += 1;
        Ok(())
    }

    pub fn run(&mut self, tasks: &[(u64, Task)], eval: &mut dyn EvalHook) -> Result<RunMetrics> {
        let mut metrics = RunMetrics::default();
        for (t, task) in tasks {
            self.process_task(*t, task, eval, &mut metrics)?;
        }
        Ok(metrics)
    }
}

/// Numbers tasks `1, 2, ...` in stream order.
pub fn numbered(tasks: &[Task]) -> Vec<(u64, Task)> {
    tasks
        .iter()
        .cloned()
        .enumerate()
        .map(|(k, t)| (k as u64 + 1, t))
        .collect()
}

/// The full online-within-online loop from initialization `theta`.
pub fn owoml_run(
    tasks: &[Task],
    spec: &NetworkSpec,
    cfg: &MetaConfig,
    theta: ModelParams,
    eval: &mut dyn EvalHook,
    seed: u64,
) -> Result<(RunMetrics, ModelParams)> {
    let mut learner = MetaLearner::new(spec, *cfg, Method::Owoml, theta, seed)?;
    let metrics = learner.run(&numbered(tasks), eval)?;
    Ok((metrics, learner.theta))
}

/// Per-task training from a fresh uniform initialization on `[-w0, w0]`,
/// with meta-updates disabled.
pub fn conventional_baseline(
    tasks: &[Task],
    spec: &NetworkSpec,
    cfg: &MetaConfig,
    init_scale: f64,
    eval: &mut dyn EvalHook,
    seed: u64,
) -> Result<RunMetrics> {
    let theta = ModelParams::zeros(spec);
    let mut learner = MetaLearner::new(spec, *cfg, Method::Conventional, theta, seed)?;
    learner.reinit_scale = Some(init_scale);
    learner.run(&numbered(tasks), eval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_raised_cosine_basis;
    use crate::network::Topology;
    use crate::spikes::SpikeTrain;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn ex(tag: usize) -> Example {
        Example {
            x: SpikeTrain::zeros(1, 1),
            y: SpikeTrain::zeros(2, 1),
            label: tag,
        }
    }

    fn buffer(tasks: usize, per_task: usize) -> MetaDataBuffer {
        let mut b = MetaDataBuffer::new(None);
        for t in 0..tasks {
            b.insert(t as u64, (0..per_task).map(|k| ex(t * 1000 + k)).collect())
                .unwrap();
        }
        b
    }

    fn cfg(n: usize, m: usize) -> MetaConfig {
        MetaConfig {
            n_tasks: n,
            m_examples: m,
            ..MetaConfig::default()
        }
    }

    #[test]
    fn single_task_sampled_with_replacement() {
        let b = buffer(1, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ds = sample_meta_batch(&b, &cfg(3, 2), &mut rng).unwrap();
        assert_eq!(ds.len(), 3);
        for d in &ds {
            assert_eq!(d.len(), 2);
            assert_ne!(d[0].label, d[1].label);
            assert!(d.iter().all(|e| e.label < 1000));
        }
    }

    #[test]
    fn distinct_tasks_when_enough() {
        let b = buffer(7, 3);
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ds = sample_task_datasets(&b, &cfg(5, 2), &mut rng).unwrap();
            let ids: HashSet<u64> = ds.iter().map(|(id, _)| *id).collect();
            assert_eq!(ids.len(), 5);
        }
    }

    #[test]
    fn full_task_is_permutation() {
        let b = buffer(1, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = sample_meta_batch(&b, &cfg(1, 6), &mut rng).unwrap();
        let mut labels: Vec<usize> = ds[0].iter().map(|e| e.label).collect();
        labels.sort();
        assert_eq!(labels, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn sampling_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            sample_meta_batch(&MetaDataBuffer::default(), &cfg(1, 1), &mut rng),
            Err(Error::EmptyBuffer)
        );
        assert!(matches!(
            sample_meta_batch(&buffer(2, 1), &cfg(1, 2), &mut rng),
            Err(Error::InsufficientExamples { .. })
        ));
    }

    #[test]
    fn buffer_discipline() {
        let mut b = MetaDataBuffer::new(Some(2));
        b.insert(1, vec![ex(0)]).unwrap();
        assert!(b.insert(1, vec![ex(0)]).is_err());
        b.insert(2, vec![ex(0)]).unwrap();
        b.insert(3, vec![ex(0)]).unwrap();
        assert_eq!(b.task_ids().collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn reptile_step_arithmetic() {
        let a = build_raised_cosine_basis(1, 2, None).unwrap();
        let spec = NetworkSpec::preset(Topology::Feedforward, 1, 1, 0, a.clone(), a).unwrap();
        let theta = ModelParams::from_parts(&spec, vec![1.0], vec![2.0], vec![3.0]).unwrap();
        let p1 = ModelParams::from_parts(&spec, vec![0.5], vec![2.0], vec![4.0]).unwrap();
        let p2 = ModelParams::from_parts(&spec, vec![1.5], vec![1.0], vec![3.0]).unwrap();
        let out = reptile_step(&theta, &[p1.clone(), p2.clone()], 0.5);
        // sums of (theta - phi): 0, 1, -1
        assert_eq!(out.iter().collect::<Vec<_>>(), vec![1.0, 2.5, 2.5]);
        assert_eq!(reptile_step(&theta, &[p1, p2], 0.0), theta);
    }

    #[test]
    fn metrics_csv_format() {
        let m = RunMetrics {
            records: vec![MetricRecord {
                t: 1,
                i: 2,
                examples_seen: 2,
                test_accuracy: 0.5,
                test_logloss: 0.25,
                wallclock_ms: 12.3456,
                method: Method::Owoml,
            }],
        };
        assert_eq!(
            m.to_csv_string(true),
            format!("{METRICS_HEADER}\n1,2,2,0.5,0.25,12.346,owoml\n")
        );
        assert!(m.to_csv_string(false).contains(",0.000,owoml"));
    }
}
