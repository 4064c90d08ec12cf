//! Trainable parameters of a GLM network.

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::network::{NetworkSpec, NeuronId};

/// Synaptic weights `w_alpha` (one `K_a` vector per synapse, in synapse
/// order), feedback weights `w_beta` (one `K_b` vector per neuron) and biases
/// `gamma` (one per neuron).
///
/// The same type serves as within-task parameters and as the meta-learned
/// initialization. Flat coordinate order is `w_alpha`, `w_beta`, `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    k_a: usize,
    k_b: usize,
    w_alpha: Vec<f64>,
    w_beta: Vec<f64>,
    gamma: Vec<f64>,
}

/// Which parameter group a flat coordinate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Alpha { synapse: usize, k: usize },
    Beta { neuron: usize, k: usize },
    Gamma { neuron: usize },
}

impl ModelParams {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let k_a = spec.synaptic_basis().num_basis();
        let k_b = spec.feedback_basis().num_basis();
        Self {
            k_a,
            k_b,
            w_alpha: vec![0.0; spec.synapses().len() * k_a],
            w_beta: vec![0.0; spec.num_neurons() * k_b],
            gamma: vec![0.0; spec.num_neurons()],
        }
    }

    pub fn zeros_like(other: &ModelParams) -> ModelParams {
        let mut z = other.clone();
        z.map_inplace(|_| 0.0);
        z
    }

    /// Every coordinate i.i.d. uniform on `[-w0, w0]`.
    pub fn uniform<R: Rng + ?Sized>(spec: &NetworkSpec, w0: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(spec);
        if w0 > 0.0 {
            p.map_inplace(|_| rng.gen_range(-w0..=w0));
        }
        p
    }

    pub fn from_parts(
        spec: &NetworkSpec,
        w_alpha: Vec<f64>,
        w_beta: Vec<f64>,
        gamma: Vec<f64>,
    ) -> Result<Self> {
        let mut p = Self::zeros(spec);
        check_len("w_alpha", p.w_alpha.len(), w_alpha.len())?;
        check_len("w_beta", p.w_beta.len(), w_beta.len())?;
        check_len("gamma", p.gamma.len(), gamma.len())?;
        p.w_alpha = w_alpha;
        p.w_beta = w_beta;
        p.gamma = gamma;
        if !p.is_finite() {
            return Err(Error::NonFinite("parameters".into()));
        }
        Ok(p)
    }

    /// Checks that the shapes agree with `spec`.
    pub fn check_shape(&self, spec: &NetworkSpec) -> Result<()> {
        check_len("K_a", spec.synaptic_basis().num_basis(), self.k_a)?;
        check_len("K_b", spec.feedback_basis().num_basis(), self.k_b)?;
        check_len("w_alpha", spec.synapses().len() * self.k_a, self.w_alpha.len())?;
        check_len("w_beta", spec.num_neurons() * self.k_b, self.w_beta.len())?;
        check_len("gamma", spec.num_neurons(), self.gamma.len())
    }

    pub fn k_a(&self) -> usize {
        self.k_a
    }

    pub fn k_b(&self) -> usize {
        self.k_b
    }

    #[inline]
    pub fn alpha(&self, synapse: usize) -> &[f64] {
        &self.w_alpha[synapse * self.k_a..(synapse + 1) * self.k_a]
    }

    #[inline]
    pub fn alpha_mut(&mut self, synapse: usize) -> &mut [f64] {
        &mut self.w_alpha[synapse * self.k_a..(synapse + 1) * self.k_a]
    }

    #[inline]
    pub fn beta(&self, neuron: NeuronId) -> &[f64] {
        let i = neuron.0 as usize;
        &self.w_beta[i * self.k_b..(i + 1) * self.k_b]
    }

    #[inline]
    pub fn beta_mut(&mut self, neuron: NeuronId) -> &mut [f64] {
        let i = neuron.0 as usize;
        &mut self.w_beta[i * self.k_b..(i + 1) * self.k_b]
    }

    #[inline]
    pub fn gamma(&self, neuron: NeuronId) -> f64 {
        self.gamma[neuron.0 as usize]
    }

    #[inline]
    pub fn gamma_mut(&mut self, neuron: NeuronId) -> &mut f64 {
        &mut self.gamma[neuron.0 as usize]
    }

    pub fn w_alpha(&self) -> &[f64] {
        &self.w_alpha
    }

    pub fn w_beta(&self) -> &[f64] {
        &self.w_beta
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    pub fn len(&self) -> usize {
        self.w_alpha.len() + self.w_beta.len() + self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, k: usize) -> f64 {
        let (a, b) = (self.w_alpha.len(), self.w_beta.len());
        if k < a {
            self.w_alpha[k]
        } else if k < a + b {
            self.w_beta[k - a]
        } else {
            self.gamma[k - a - b]
        }
    }

    pub fn set(&mut self, k: usize, v: f64) {
        let (a, b) = (self.w_alpha.len(), self.w_beta.len());
        if k < a {
            self.w_alpha[k] = v;
        } else if k < a + b {
            self.w_beta[k - a] = v;
        } else {
            self.gamma[k - a - b] = v;
        }
    }

    pub fn group(&self, k: usize) -> ParamGroup {
        let (a, b) = (self.w_alpha.len(), self.w_beta.len());
        if k < a {
            ParamGroup::Alpha {
                synapse: k / self.k_a,
                k: k % self.k_a,
            }
        } else if k < a + b {
            ParamGroup::Beta {
                neuron: (k - a) / self.k_b,
                k: (k - a) % self.k_b,
            }
        } else {
            ParamGroup::Gamma { neuron: k - a - b }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.w_alpha
            .iter()
            .chain(&self.w_beta)
            .chain(&self.gamma)
            .copied()
    }

    pub fn map_inplace(&mut self, mut f: impl FnMut(f64) -> f64) {
        for v in self
            .w_alpha
            .iter_mut()
            .chain(&mut self.w_beta)
            .chain(&mut self.gamma)
        {
            *v = f(*v);
        }
    }

    /// Coordinate-wise `self[k] = f(self[k], other[k])`.
    pub fn zip_inplace(&mut self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) {
        debug_assert_eq!(self.len(), other.len());
        for (v, o) in self
            .w_alpha
            .iter_mut()
            .chain(&mut self.w_beta)
            .chain(&mut self.gamma)
            .zip(other.iter())
        {
            *v = f(*v, o);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
