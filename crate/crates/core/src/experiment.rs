//! End-to-end experiments: meta-training on a task stream followed by
//! frozen evaluation on fresh tasks.

use serde::{Deserialize, Serialize};

use crate::basis::build_raised_cosine_basis;
use crate::data::{synthetic_task_family, FamilyConfig, TaskFamily};
use crate::error::{Error, Result};
use crate::meta::{MetaConfig, MetaLearner, Method, RunMetrics, TestSetEval};
use crate::network::{NetworkSpec, Topology};
use crate::params::ModelParams;
use crate::seeding::{derive_seed, rng_for, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub topology: Topology,
    pub hidden: usize,
    /// Must equal the number of classes when given.
    pub visible: Option<usize>,
    pub window_len: usize,
    pub k_a: usize,
    /// Defaults to `k_a`.
    pub k_b: Option<usize>,
    pub spacing: Option<f64>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            topology: Topology::PaperRecurrent,
            hidden: 4,
            visible: None,
            window_len: 10,
            k_a: 4,
            k_b: None,
            spacing: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub method: Method,
    pub seed: u64,
    /// Tasks streamed with meta-learning enabled.
    pub t_meta: usize,
    /// Fresh tasks evaluated afterwards with the initialization frozen.
    pub eval_tasks: usize,
    /// Half-width of the uniform parameter initialization.
    pub init_scale: f64,
    /// Free-running repetitions per test example.
    pub eval_reps: usize,
    pub network: NetworkConfig,
    pub meta: MetaConfig,
    pub family: FamilyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Owoml,
            seed: 0,
            t_meta: 15,
            eval_tasks: 6,
            init_scale: 0.1,
            eval_reps: 5,
            network: NetworkConfig::default(),
            meta: MetaConfig::default(),
            family: FamilyConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.meta.validate()?;
        if let Some(v) = self.network.visible {
            if v != self.family.num_classes {
                return Err(Error::InvalidConfig(format!(
                    "network.visible = {v} but the family has {} classes",
                    self.family.num_classes
                )));
            }
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::InvalidConfig("init_scale must be >= 0".into()));
        }
        if self.eval_reps == 0 {
            return Err(Error::InvalidConfig("eval_reps must be >= 1".into()));
        }
        if self.t_meta + self.eval_tasks == 0 {
            return Err(Error::InvalidConfig("no tasks to run".into()));
        }
        if self.family.train_per_class == 0 {
            return Err(Error::InvalidConfig("tasks need training data".into()));
        }
        if self.family.test_per_class == 0 {
            return Err(Error::InvalidConfig("tasks need test data".into()));
        }
        Ok(())
    }

    pub fn build_network(&self) -> Result<NetworkSpec> {
        let n = &self.network;
        let a = build_raised_cosine_basis(n.k_a, n.window_len, n.spacing)?;
        let b = build_raised_cosine_basis(n.k_b.unwrap_or(n.k_a), n.window_len, n.spacing)?;
        NetworkSpec::preset(
            n.topology,
            self.family.channels,
            self.family.num_classes,
            n.hidden,
            a,
            b,
        )
    }

    /// Task family for master seed `seed`.
    pub fn build_family(&self, seed: u64) -> Result<TaskFamily> {
        synthetic_task_family(FamilyConfig {
            seed: derive_seed(self.family.seed, &[seed]),
            ..self.family
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub method: Method,
    pub seed: u64,
    pub spec: NetworkSpec,
    /// All records; tasks with `t > t_meta` belong to the frozen phase.
    pub metrics: RunMetrics,
    pub theta: ModelParams,
}

impl ExperimentOutcome {
    pub fn eval_metrics(&self, t_meta: usize) -> RunMetrics {
        RunMetrics {
            records: self
                .metrics
                .records
                .iter()
                .filter(|r| r.t > t_meta as u64)
                .cloned()
                .collect(),
        }
    }
}

/// Runs `cfg.method` with master seed `seed`. `on_task_end` sees the
/// initialization after each task.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed: u64,
    on_task_end: &mut dyn FnMut(u64, &ModelParams),
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let spec = cfg.build_network()?;
    let family = cfg.build_family(seed)?;
    let theta = ModelParams::uniform(&spec, cfg.init_scale, &mut rng_for(seed, &[tag::INIT, 0]));
    let method = cfg.method;
    let mut metrics = RunMetrics::default();
    let theta = {
        let mut learner = MetaLearner::new(&spec, cfg.meta, method, theta, seed)?;
        if method == Method::Conventional {
            if cfg.meta.mu != 0.0 {
                log::warn!("mu = {} ignored for the conventional baseline", cfg.meta.mu);
            }
            learner.reinit_scale = Some(cfg.init_scale);
        }
        let mut eval = TestSetEval {
            reps: cfg.eval_reps,
            seed,
        };
        let total = cfg.t_meta + cfg.eval_tasks;
        for t in 1..=total as u64 {
            if t == cfg.t_meta as u64 + 1 {
                learner.frozen = true;
            }
            let task = family.sample_task(t - 1)?;
            learner.process_task(t, &task, &mut eval, &mut metrics)?;
            on_task_end(t, &learner.theta);
        }
        learner.theta
    };
    Ok(ExperimentOutcome {
        method,
        seed,
        spec,
        metrics,
        theta,
    })
}

/// Mean and standard deviation across seeds of a per-step metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub method: Method,
    pub i: usize,
    pub seeds: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub logloss_mean: f64,
    pub logloss_std: f64,
}

pub const CURVE_HEADER: &str =
    "method,i,seeds,accuracy_mean,accuracy_std,logloss_mean,logloss_std";

/// Curves over within-task step `i` for tasks with `t > t_from`. Each run
/// is first averaged over its tasks, then mean ± std is taken across runs.
pub fn aggregate_curves(runs: &[RunMetrics], t_from: u64) -> Vec<CurvePoint> {
    use std::collections::BTreeMap;
    // (method order, i) -> per-run (acc, loss) means
    let mut per_run: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    let mut methods: BTreeMap<String, Method> = BTreeMap::new();
    for run in runs {
        let mut acc: BTreeMap<(String, usize), (f64, f64, usize)> = BTreeMap::new();
        for r in run.records.iter().filter(|r| r.t > t_from) {
            methods.insert(r.method.to_string(), r.method);
            let e = acc.entry((r.method.to_string(), r.i)).or_insert((0.0, 0.0, 0));
            e.0 += r.test_accuracy;
            e.1 += r.test_logloss;
            e.2 += 1;
        }
        for (key, (a, l, n)) in acc {
            per_run
                .entry(key)
                .or_default()
                .push((a / n as f64, l / n as f64));
        }
    }
    per_run
        .into_iter()
        .map(|((m, i), vals)| {
            let (am, asd) = mean_std(vals.iter().map(|v| v.0));
            let (lm, lsd) = mean_std(vals.iter().map(|v| v.1));
            CurvePoint {
                method: methods[&m],
                i,
                seeds: vals.len(),
                accuracy_mean: am,
                accuracy_std: asd,
                logloss_mean: lm,
                logloss_std: lsd,
            }
        })
        .collect()
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.method, p.i, p.seeds, p.accuracy_mean, p.accuracy_std, p.logloss_mean, p.logloss_std
        ));
    }
    s
}
