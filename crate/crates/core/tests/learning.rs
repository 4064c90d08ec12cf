use owoml_core::basis::build_raised_cosine_basis;
use owoml_core::meta::{
    conventional_baseline, inner_seed, joint_training_baseline, meta_update, reptile_step,
    sample_meta_batch, MetaDataBuffer, MetaLearner, TestSetEval,
};
use owoml_core::oracle::{
    analytic_gradients, exact_elbo_with, finite_diff_grad, max_relative_error, TinyInstance,
    TinySizes,
};
use owoml_core::within_task::hidden_mask;
use owoml_core::{
    update, Example, LearnConfig, MetaConfig, Method, ModelParams, NetworkSpec, SpikeTrain,
    TaskFamily, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny(seed: u64, sizes: TinySizes) -> TinyInstance {
    TinyInstance::random(sizes, 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn as_example(inst: &TinyInstance) -> Example {
    Example {
        x: inst.exogenous.clone(),
        y: inst.visible.clone(),
        label: 0,
    }
}

#[test]
fn finite_difference_error_shrinks_quadratically() {
    for seed in 0..10 {
        let inst = tiny(seed, TinySizes::default());
        let hidden = inst.hidden_sequence(seed * 37 % 1024);
        let (analytic, _) = analytic_gradients(&inst, &hidden).unwrap();
        let err = |h: f64| {
            let fd = finite_diff_grad(|p| inst.replay(p, &hidden).0, &inst.params, h).unwrap();
            max_relative_error(&analytic, &fd, 1e-3)
        };
        let (e2, e3, e4) = (err(1e-2), err(1e-3), err(1e-4));
        assert!(e4 < 1e-5, "seed {seed}: {e2:e} {e3:e} {e4:e}");
        // truncation error is O(h^2) until rounding takes over
        assert!(e3 < e2 / 20.0 && e4 < e3 / 20.0, "seed {seed}: {e2:e} {e3:e} {e4:e}");
    }
}

/// With silent hidden neurons, one boundary (Δs = S) and κ = 0, `update`
/// makes exactly one step: `η·g_v` on visible parameters and `η·ℓ·g_h` on
/// hidden ones, where the gradients and ℓ come from replaying the stream.
#[test]
fn single_boundary_update_is_one_gradient_step() {
    for seed in 0..10 {
        let mut inst = tiny(seed, TinySizes { horizon: 5, ..TinySizes::default() });
        for &id in inst.spec.hidden() {
            *inst.params.gamma_mut(id) = -60.0;
        }
        let hidden = SpikeTrain::zeros(inst.spec.hidden().len(), inst.horizon());
        let (g_v, g_h) = analytic_gradients(&inst, &hidden).unwrap();
        let (ll, _) = inst.replay(&inst.params, &hidden);
        let cfg = LearnConfig {
            eta: 0.1,
            kappa: 0.0,
            delta_s: inst.horizon(),
            ..LearnConfig::default()
        };
        let phi = update(
            &inst.params,
            &[as_example(&inst)],
            &inst.spec,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        let mask = hidden_mask(&inst.spec);
        for k in 0..phi.len() {
            let step = phi.get(k) - inst.params.get(k);
            let want = if mask[k] { 0.1 * ll * g_h.get(k) } else { 0.1 * g_v.get(k) };
            assert!((step - want).abs() < 1e-12, "seed {seed} coordinate {k}: {step} vs {want}");
        }
    }
}

/// The hidden-parameter step is a score-function estimate of the exact
/// variational gradient; its mean should point the same way.
#[test]
fn hidden_update_agrees_in_sign_with_exact_gradient() {
    let sizes = TinySizes {
        inputs: 1,
        visible: 1,
        hidden: 2,
        horizon: 4,
        window_len: 2,
        k_a: 1,
        k_b: 1,
    };
    let cfg = LearnConfig {
        eta: 1.0,
        kappa: 0.0,
        delta_s: 4,
        ..LearnConfig::default()
    };
    let runs = 20_000;
    let mut agree = 0usize;
    let mut counted = 0usize;
    for seed in 0..6 {
        let inst = tiny(100 + seed, sizes);
        let mask = hidden_mask(&inst.spec);
        let exact = finite_diff_grad(|p| exact_elbo_with(&inst, p).unwrap(), &inst.params, 1e-5).unwrap();
        let n = inst.params.len();
        let (mut sum, mut sq) = (vec![0.0; n], vec![0.0; n]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..runs {
            let phi = update(&inst.params, &[as_example(&inst)], &inst.spec, &cfg, &mut rng).unwrap();
            for k in 0..n {
                let d = phi.get(k) - inst.params.get(k);
                sum[k] += d;
                sq[k] += d * d;
            }
        }
        for k in (0..n).filter(|&k| mask[k]) {
            let mean = sum[k] / runs as f64;
            let se = ((sq[k] / runs as f64 - mean * mean) / runs as f64).sqrt();
            if exact.get(k).abs() > 3.0 * se {
                counted += 1;
                agree += usize::from(mean.signum() == exact.get(k).signum());
            }
        }
    }
    assert!(counted >= 10, "only {counted} coordinates above the noise floor");
    assert!(agree as f64 >= 0.8 * counted as f64, "{agree}/{counted}");
}

fn small_setup() -> (NetworkSpec, TaskFamily) {
    let a = build_raised_cosine_basis(2, 4, None).unwrap();
    let spec = NetworkSpec::preset(Topology::PaperRecurrent, 6, 2, 2, a.clone(), a).unwrap();
    let family = owoml_core::data::synthetic_task_family(owoml_core::data::FamilyConfig {
        channels: 6,
        horizon: 8,
        train_per_class: 3,
        test_per_class: 2,
        ..Default::default()
    })
    .unwrap();
    (spec, family)
}

#[test]
fn zero_meta_rate_with_reinit_equals_conventional() {
    let (spec, family) = small_setup();
    let tasks = family.tasks(0, 3).unwrap();
    let cfg = MetaConfig {
        mu: 0.0,
        ..MetaConfig::default()
    };
    let mut eval = TestSetEval { reps: 2, seed: 5 };
    let conventional = conventional_baseline(&tasks, &spec, &cfg, 0.1, &mut eval, 5).unwrap();
    let mut learner =
        MetaLearner::new(&spec, cfg, Method::Owoml, ModelParams::zeros(&spec), 5).unwrap();
    learner.reinit_scale = Some(0.1);
    let owoml = learner.run(&owoml_core::meta::numbered(&tasks), &mut eval).unwrap();
    assert!(learner.counters.meta_updates > 0);
    let key = |m: &owoml_core::RunMetrics| {
        m.records
            .iter()
            .map(|r| (r.t, r.i, r.examples_seen, r.test_accuracy, r.test_logloss))
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&conventional), key(&owoml));
}

#[test]
fn meta_sum_is_order_independent_up_to_rounding() {
    let (spec, family) = small_setup();
    let theta = ModelParams::uniform(&spec, 0.5, &mut ChaCha8Rng::seed_from_u64(1));
    let datasets: Vec<Vec<Example>> = family
        .tasks(0, 5)
        .unwrap()
        .into_iter()
        .map(|t| t.train[..2].to_vec())
        .collect();
    let cfg = MetaConfig {
        mu: 0.3,
        ..MetaConfig::default()
    };
    let phis: Vec<ModelParams> = datasets
        .iter()
        .enumerate()
        .map(|(n, d)| {
            update(&theta, d, &spec, &cfg.inner, &mut ChaCha8Rng::seed_from_u64(inner_seed(9, n))).unwrap()
        })
        .collect();
    let forward = meta_update(&theta, &datasets, &spec, &cfg, 9).unwrap();
    assert_eq!(forward, reptile_step(&theta, &phis, cfg.mu));
    let scale = phis.iter().map(|p| p.max_abs_diff(&theta)).fold(0.0, f64::max);
    let bound = 5.0 * f64::EPSILON * (cfg.mu * 5.0 * scale + theta.max_abs());
    let mut order: Vec<usize> = (0..5).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        for i in (1..5).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let permuted: Vec<ModelParams> = order.iter().map(|&n| phis[n].clone()).collect();
        let out = reptile_step(&theta, &permuted, cfg.mu);
        assert!(out.max_abs_diff(&forward) <= bound, "{} > {bound}", out.max_abs_diff(&forward));
    }
}

#[test]
fn joint_training_on_one_task_is_a_plain_update() {
    let (spec, family) = small_setup();
    let task = family.sample_task(0).unwrap();
    let mut buffer = MetaDataBuffer::new(None);
    buffer.insert(0, task.train.clone()).unwrap();
    let theta = ModelParams::uniform(&spec, 0.3, &mut ChaCha8Rng::seed_from_u64(2));
    let cfg = MetaConfig::default();
    let joint = joint_training_baseline(
        &theta,
        &buffer,
        &spec,
        &cfg,
        &mut ChaCha8Rng::seed_from_u64(11),
        &mut ChaCha8Rng::seed_from_u64(12),
    )
    .unwrap();
    let pooled: Vec<Example> = sample_meta_batch(&buffer, &cfg, &mut ChaCha8Rng::seed_from_u64(11))
        .unwrap()
        .concat();
    assert_eq!(pooled.len(), cfg.n_tasks * cfg.m_examples);
    let direct = update(&theta, &pooled, &spec, &cfg.inner, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
    assert_eq!(joint, direct);
}

#[test]
fn conventional_results_do_not_depend_on_task_order() {
    let (spec, family) = small_setup();
    let tasks = family.tasks(0, 3).unwrap();
    let cfg = MetaConfig::default();
    let run = |order: &[usize]| {
        let numbered: Vec<(u64, owoml_core::Task)> =
            order.iter().map(|&k| (k as u64 + 1, tasks[k].clone())).collect();
        let mut learner =
            MetaLearner::new(&spec, cfg, Method::Conventional, ModelParams::zeros(&spec), 4).unwrap();
        learner.reinit_scale = Some(0.1);
        let mut records = learner
            .run(&numbered, &mut TestSetEval { reps: 2, seed: 4 })
            .unwrap()
            .records;
        records.sort_by_key(|r| (r.t, r.i));
        records
            .into_iter()
            .map(|r| (r.t, r.i, r.test_accuracy, r.test_logloss))
            .collect::<Vec<_>>()
    };
    assert_eq!(run(&[0, 1, 2]), run(&[2, 0, 1]));
}

#[test]
fn buffer_grows_only_after_each_task() {
    let (spec, family) = small_setup();
    let cfg = MetaConfig::default();
    let mut learner =
        MetaLearner::new(&spec, cfg, Method::Owoml, ModelParams::zeros(&spec), 0).unwrap();
    let mut metrics = owoml_core::RunMetrics::default();
    for t in 1..=3u64 {
        let task = family.sample_task(t).unwrap();
        let mut seen = Vec::new();
        let mut hook = |_: &ModelParams, _: &NetworkSpec, _: &owoml_core::Task, _: u64, i: usize| {
            seen.push(i);
            Ok(owoml_core::meta::Evaluation { accuracy: 0.0, logloss: 0.0 })
        };
        assert!(!learner.buffer.contains(task.id));
        learner.process_task(t, &task, &mut hook, &mut metrics).unwrap();
        assert_eq!(seen, (1..=task.train.len()).collect::<Vec<_>>());
        assert!(learner.buffer.contains(task.id));
        assert_eq!(learner.buffer.len(), t as usize);
    }
    // the first task has an empty buffer: no meta-updates
    let per_task = family.sample_task(1).unwrap().train.len();
    assert_eq!(learner.counters.meta_updates, 2 * per_task);
    let seen: Vec<usize> = metrics.records.iter().map(|r| r.examples_seen).collect();
    assert_eq!(&seen[..per_task], &(1..=per_task).collect::<Vec<_>>()[..]);
}
