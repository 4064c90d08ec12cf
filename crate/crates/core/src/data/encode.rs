use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spikes::SpikeTrain;

/// Independent Bernoulli(`p · max_rate`) spikes per channel and step.
pub fn rate_encode<R: Rng + ?Sized>(
    pattern: &[f64],
    horizon: usize,
    max_rate: f64,
    rng: &mut R,
) -> Result<SpikeTrain> {
    if !(max_rate > 0.0 && max_rate <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "max_rate {max_rate} outside (0, 1]"
        )));
    }
    if let Some(p) = pattern.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidConfig(format!(
            "intensity {p} outside [0, 1]"
        )));
    }
    let mut train = SpikeTrain::zeros(pattern.len(), horizon);
    for (c, &p) in pattern.iter().enumerate() {
        let rate = p * max_rate;
        for t in 0..horizon {
            train.set(c, t, rng.gen::<f64>() < rate);
        }
    }
    Ok(train)
}

/// Spike rates of the one-hot temporal label code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelEncoding {
    pub active_rate: f64,
    pub inactive_rate: f64,
}

impl Default for LabelEncoding {
    fn default() -> Self {
        Self {
            active_rate: 0.9,
            inactive_rate: 0.05,
        }
    }
}

/// One channel per class; the `label` channel fires at `active_rate`, the
/// others at `inactive_rate`.
pub fn encode_label<R: Rng + ?Sized>(
    label: usize,
    num_classes: usize,
    horizon: usize,
    enc: LabelEncoding,
    rng: &mut R,
) -> Result<SpikeTrain> {
    if label >= num_classes {
        return Err(Error::InvalidConfig(format!(
            "label {label} out of range for {num_classes} classes"
        )));
    }
    let valid = |r: f64| (0.0..=1.0).contains(&r);
    if !(valid(enc.active_rate) && valid(enc.inactive_rate))
        || enc.active_rate <= enc.inactive_rate
    {
        return Err(Error::InvalidConfig(format!(
            "label rates {:?} must lie in [0, 1] with active > inactive",
            enc
        )));
    }
    let mut train = SpikeTrain::zeros(num_classes, horizon);
    for c in 0..num_classes {
        let rate = if c == label {
            enc.active_rate
        } else {
            enc.inactive_rate
        };
        for t in 0..horizon {
            train.set(c, t, rng.gen::<f64>() < rate);
        }
    }
    Ok(train)
}
