use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{encode_label, rate_encode, Example, LabelEncoding};
use crate::error::{Error, Result};
use crate::seeding::{rng_for, tag};

/// Parameters of the synthetic few-shot classification family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub seed: u64,
    /// Size of the shared prototype pool.
    pub num_prototypes: usize,
    pub channels: usize,
    pub horizon: usize,
    pub num_classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Mixing weight of per-pixel uniform noise, in `[0, 1]`.
    pub difficulty: f64,
    /// Bit-flip probability from a class archetype to each prototype of its
    /// pool, in `[0, 0.5]`. At 0.5 prototypes are independent of the
    /// archetypes and tasks share no class structure.
    pub spread: f64,
    pub max_rate: f64,
    pub label: LabelEncoding,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_prototypes: 8,
            channels: 16,
            horizon: 40,
            num_classes: 2,
            train_per_class: 14,
            test_per_class: 6,
            difficulty: 0.3,
            spread: 0.5,
            max_rate: 0.5,
            label: LabelEncoding::default(),
        }
    }
}

/// A family of tasks sharing one pool of binary prototype patterns.
///
/// The pool is split by `k % num_classes` into one sub-pool per class. Each
/// sub-pool holds bit-flipped copies of a random class archetype, and a
/// task draws its class-`c` prototype from sub-pool `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskFamily {
    pub config: FamilyConfig,
    prototypes: Vec<Vec<f64>>,
}

/// One task: its class prototypes, a training stream and a held-out test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: u64,
    /// Pool index of the prototype behind each class.
    pub prototypes: Vec<usize>,
    /// Training examples in arrival order, classes interleaved.
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

/// Builds a task family whose prototype pool is a pure function of
/// `config.seed`.
pub fn synthetic_task_family(config: FamilyConfig) -> Result<TaskFamily> {
    if config.num_prototypes < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 prototypes, got {}",
            config.num_prototypes
        )));
    }
    if config.num_classes < 2 || config.num_classes > config.num_prototypes {
        return Err(Error::InvalidConfig(format!(
            "num_classes {} must lie in 2..={}",
            config.num_classes, config.num_prototypes
        )));
    }
    if !(0.0..=1.0).contains(&config.difficulty) {
        return Err(Error::InvalidConfig(format!(
            "difficulty {} outside [0, 1]",
            config.difficulty
        )));
    }
    if !(0.0..=0.5).contains(&config.spread) {
        return Err(Error::InvalidConfig(format!(
            "spread {} outside [0, 0.5]",
            config.spread
        )));
    }
    if config.channels == 0 || config.horizon == 0 {
        return Err(Error::InvalidConfig("channels and horizon must be positive".into()));
    }
    if config.channels < 63 && (1u64 << config.channels) < config.num_prototypes as u64 {
        return Err(Error::InvalidConfig(format!(
            "{} channels cannot hold {} distinct prototypes",
            config.channels, config.num_prototypes
        )));
    }
    let mut rng = rng_for(config.seed, &[tag::PROTOTYPES]);
    let bits = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..config.channels)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 })
            .collect()
    };
    let mut archetypes: Vec<Vec<f64>> = Vec::with_capacity(config.num_classes);
    while archetypes.len() < config.num_classes {
        let a = bits(&mut rng);
        if !archetypes.contains(&a) {
            archetypes.push(a);
        }
    }
    // Prototypes of different classes must differ, or some task would be
    // unlearnable.
    let mut prototypes: Vec<Vec<f64>> = Vec::with_capacity(config.num_prototypes);
    while prototypes.len() < config.num_prototypes {
        let class = prototypes.len() % config.num_classes;
        let p: Vec<f64> = archetypes[class]
            .iter()
            .map(|&b| if rng.gen::<f64>() < config.spread { 1.0 - b } else { b })
            .collect();
        let clash = prototypes
            .iter()
            .enumerate()
            .any(|(k, q)| k % config.num_classes != class && *q == p);
        if !clash {
            prototypes.push(p);
        }
    }
    Ok(TaskFamily { config, prototypes })
}

impl TaskFamily {
    pub fn prototypes(&self) -> &[Vec<f64>] {
        &self.prototypes
    }

    /// Noisy rate-encoded sample of a prototype with the given class label.
    pub fn sample_example<R: Rng + ?Sized>(
        &self,
        prototype: usize,
        label: usize,
        rng: &mut R,
    ) -> Result<Example> {
        let c = &self.config;
        let d = c.difficulty;
        let pattern: Vec<f64> = self.prototypes[prototype]
            .iter()
            .map(|&p| ((1.0 - d) * p + d * rng.gen::<f64>()).clamp(0.0, 1.0))
            .collect();
        let x = rate_encode(&pattern, c.horizon, c.max_rate, rng)?;
        let y = encode_label(label, c.num_classes, c.horizon, c.label, rng)?;
        Ok(Example { x, y, label })
    }

    /// Task `task_id` of the family; a pure function of `(seed, task_id)`.
    pub fn sample_task(&self, task_id: u64) -> Result<Task> {
        let c = &self.config;
        let mut rng = rng_for(c.seed, &[tag::TASK, task_id]);
        let prototypes: Vec<usize> = (0..c.num_classes)
            .map(|class| {
                let pool: Vec<usize> = (class..self.prototypes.len()).step_by(c.num_classes).collect();
                *pool.choose(&mut rng).expect("non-empty sub-pool")
            })
            .collect();
        let per_class = c.train_per_class + c.test_per_class;
        let mut all = Vec::with_capacity(per_class * c.num_classes);
        for (label, &proto) in prototypes.iter().enumerate() {
            for _ in 0..per_class {
                all.push(self.sample_example(proto, label, &mut rng)?);
            }
        }
        let (train, test) = split_train_test(&all, c.train_per_class, c.test_per_class, &mut rng)?;
        Ok(Task {
            id: task_id,
            prototypes,
            train: interleave_classes(train, c.num_classes),
            test,
        })
    }

    pub fn tasks(&self, first_id: u64, count: usize) -> Result<Vec<Task>> {
        (0..count as u64)
            .map(|k| self.sample_task(first_id + k))
            .collect()
    }
}

/// Reorders examples round-robin by class: `c0, c1, c0, c1, ...`.
fn interleave_classes(examples: Vec<Example>, num_classes: usize) -> Vec<Example> {
    let mut by_class: Vec<std::collections::VecDeque<Example>> =
        vec![Default::default(); num_classes];
    for ex in examples {
        by_class[ex.label].push_back(ex);
    }
    let mut out = Vec::new();
    loop {
        let mut any = false;
        for q in by_class.iter_mut() {
            if let Some(ex) = q.pop_front() {
                out.push(ex);
                any = true;
            }
        }
        if !any {
            return out;
        }
    }
}

/// Class-balanced disjoint split by example index. Returns `(train, test)`
/// index lists, each grouped by class in ascending label order.
pub fn split_indices<R: Rng + ?Sized>(
    labels: &[usize],
    per_class_train: usize,
    per_class_test: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..num_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < per_class_train + per_class_test {
            return Err(Error::InsufficientExamples {
                task: class as u64,
                available: idx.len(),
                requested: per_class_train + per_class_test,
            });
        }
        idx.shuffle(rng);
        train.extend_from_slice(&idx[..per_class_train]);
        test.extend_from_slice(&idx[per_class_train..per_class_train + per_class_test]);
    }
    Ok((train, test))
}

pub fn split_train_test<R: Rng + ?Sized>(
    dataset: &[Example],
    per_class_train: usize,
    per_class_test: usize,
    rng: &mut R,
) -> Result<(Vec<Example>, Vec<Example>)> {
    let labels: Vec<usize> = dataset.iter().map(|e| e.label).collect();
    let (tr, te) = split_indices(&labels, per_class_train, per_class_test, rng)?;
    Ok((
        tr.into_iter().map(|i| dataset[i].clone()).collect(),
        te.into_iter().map(|i| dataset[i].clone()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn same_seed_same_pool() {
        let cfg = FamilyConfig::default();
        let a = synthetic_task_family(cfg).unwrap();
        let b = synthetic_task_family(cfg).unwrap();
        assert_eq!(a.prototypes(), b.prototypes());
        assert_eq!(a.sample_task(3).unwrap(), b.sample_task(3).unwrap());
        let c = synthetic_task_family(FamilyConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.prototypes(), c.prototypes());
    }

    #[test]
    fn rejects_small_pool() {
        let cfg = FamilyConfig {
            num_prototypes: 1,
            ..Default::default()
        };
        assert!(synthetic_task_family(cfg).is_err());
    }

    #[test]
    fn noiseless_classes_separable_on_any_discriminative_channel() {
        let cfg = FamilyConfig {
            difficulty: 0.0,
            max_rate: 1.0,
            ..Default::default()
        };
        let fam = synthetic_task_family(cfg).unwrap();
        for id in 0..5 {
            let task = fam.sample_task(id).unwrap();
            let (p0, p1) = (&fam.prototypes()[task.prototypes[0]], &fam.prototypes()[task.prototypes[1]]);
            let disc: Vec<usize> = (0..cfg.channels).filter(|&c| p0[c] != p1[c]).collect();
            assert!(!disc.is_empty());
            for &c in &disc {
                for ex in task.train.iter().chain(&task.test) {
                    let full = ex.x.count(c) == cfg.horizon;
                    let silent = ex.x.count(c) == 0;
                    let expect_full = fam.prototypes()[task.prototypes[ex.label]][c] == 1.0;
                    assert!(if expect_full { full } else { silent });
                }
            }
        }
    }

    #[test]
    fn task_shapes_and_interleaving() {
        let cfg = FamilyConfig::default();
        let fam = synthetic_task_family(cfg).unwrap();
        let task = fam.sample_task(0).unwrap();
        assert_eq!(task.train.len(), 28);
        assert_eq!(task.test.len(), 12);
        assert_ne!(task.prototypes[0], task.prototypes[1]);
        for (i, ex) in task.train.iter().enumerate() {
            assert_eq!(ex.label, i % 2);
            assert_eq!((ex.x.channels(), ex.x.horizon()), (16, 40));
            assert_eq!((ex.y.channels(), ex.y.horizon()), (2, 40));
        }
    }

    #[test]
    fn split_counts_and_disjointness() {
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (tr, te) = split_indices(&labels, 14, 6, &mut rng).unwrap();
        assert_eq!((tr.len(), te.len()), (28, 12));
        let a: HashSet<_> = tr.iter().collect();
        assert!(te.iter().all(|i| !a.contains(i)));
        assert_eq!(tr.iter().filter(|&&i| labels[i] == 0).count(), 14);
        let (tr, te) = split_indices(&labels, 0, 3, &mut rng).unwrap();
        assert!(tr.is_empty());
        assert_eq!(te.len(), 6);
        assert!(split_indices(&labels, 15, 6, &mut rng).is_err());
    }
}
