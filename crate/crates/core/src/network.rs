//! Network topology: visible/hidden neuron sets, exogenous inputs, synapses.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};

/// Identifier of a neuron. Neuron ids of a network are exactly `0..num_neurons`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronId(pub u32);

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "neuron:{}", self.0)
    }
}

/// Source of a synapse: an exogenous input channel or a neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Input(u32),
    Neuron(NeuronId),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Input(c) => write!(f, "input:{c}"),
            Node::Neuron(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidNetwork(format!("cannot parse node '{s}'"));
        let (kind, idx) = s.split_once(':').ok_or_else(bad)?;
        let idx: u32 = idx.parse().map_err(|_| bad())?;
        match kind {
            "input" => Ok(Node::Input(idx)),
            "neuron" => Ok(Node::Neuron(NeuronId(idx))),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Synapse {
    pub source: Node,
    pub dest: NeuronId,
}

/// Named topology presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// Inputs feed every neuron, hidden feed visible.
    Feedforward,
    /// `Feedforward` plus lateral hidden-to-hidden links and visible-to-hidden
    /// feedback links.
    PaperRecurrent,
}

/// Static description of a GLM spiking network.
///
/// Synapses are kept sorted by `(dest, source)`; parameter arrays follow that
/// order. Internally every input and neuron is a "node": inputs occupy node
/// indices `0..num_inputs` and neuron `k` is node `num_inputs + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    num_inputs: usize,
    visible: Vec<NeuronId>,
    hidden: Vec<NeuronId>,
    synapses: Vec<Synapse>,
    synaptic_basis: BasisSet,
    feedback_basis: BasisSet,
    /// Per neuron: `(synapse index, source node index)` of incoming edges.
    incoming: Vec<Vec<(usize, usize)>>,
    /// Per neuron: position in `visible` or `hidden`.
    role: Vec<Role>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Visible(usize),
    Hidden(usize),
}

impl NetworkSpec {
    pub fn new(
        num_inputs: usize,
        visible: Vec<NeuronId>,
        hidden: Vec<NeuronId>,
        synapses: impl IntoIterator<Item = Synapse>,
        synaptic_basis: BasisSet,
        feedback_basis: BasisSet,
    ) -> Result<Self> {
        let num_neurons = visible.len() + hidden.len();
        let mut role = vec![None; num_neurons];
        for (pos, id) in visible.iter().enumerate() {
            let slot = role
                .get_mut(id.0 as usize)
                .ok_or_else(|| Error::InvalidNetwork(format!("{id} out of range")))?;
            if slot.is_some() {
                return Err(Error::InvalidNetwork(format!("{id} listed twice")));
            }
            *slot = Some(Role::Visible(pos));
        }
        for (pos, id) in hidden.iter().enumerate() {
            let slot = role
                .get_mut(id.0 as usize)
                .ok_or_else(|| Error::InvalidNetwork(format!("{id} out of range")))?;
            if slot.is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "{id} is both visible and hidden or listed twice"
                )));
            }
            *slot = Some(Role::Hidden(pos));
        }
        // Every slot is filled: ids are a permutation of 0..num_neurons.
        let role: Vec<Role> = role.into_iter().map(|r| r.expect("filled")).collect();
        if synaptic_basis.window_len() != feedback_basis.window_len() {
            return Err(Error::InvalidNetwork(
                "synaptic and feedback bases must share the window length".into(),
            ));
        }

        let mut set = BTreeSet::new();
        for syn in synapses {
            match syn.source {
                Node::Input(c) if c as usize >= num_inputs => {
                    return Err(Error::InvalidNetwork(format!("{} out of range", syn.source)))
                }
                Node::Neuron(n) if n.0 as usize >= num_neurons => {
                    return Err(Error::InvalidNetwork(format!("{} out of range", syn.source)))
                }
                Node::Neuron(n) if n == syn.dest => {
                    return Err(Error::InvalidNetwork(format!(
                        "self-loop on {n}; self-feedback is implicit"
                    )))
                }
                _ => {}
            }
            if syn.dest.0 as usize >= num_neurons {
                return Err(Error::InvalidNetwork(format!("{} out of range", syn.dest)));
            }
            if !set.insert((syn.dest, syn.source)) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate synapse {} -> {}",
                    syn.source, syn.dest
                )));
            }
        }
        let synapses: Vec<Synapse> = set
            .into_iter()
            .map(|(dest, source)| Synapse { source, dest })
            .collect();
        let mut incoming = vec![Vec::new(); num_neurons];
        for (idx, syn) in synapses.iter().enumerate() {
            let src = match syn.source {
                Node::Input(c) => c as usize,
                Node::Neuron(n) => num_inputs + n.0 as usize,
            };
            incoming[syn.dest.0 as usize].push((idx, src));
        }
        Ok(Self {
            num_inputs,
            visible,
            hidden,
            synapses,
            synaptic_basis,
            feedback_basis,
            incoming,
            role,
        })
    }

    /// Builds a preset topology with dense ids: visible neurons are
    /// `0..num_visible`, hidden neurons follow.
    pub fn preset(
        topology: Topology,
        num_inputs: usize,
        num_visible: usize,
        num_hidden: usize,
        synaptic_basis: BasisSet,
        feedback_basis: BasisSet,
    ) -> Result<Self> {
        let visible: Vec<NeuronId> = (0..num_visible as u32).map(NeuronId).collect();
        let hidden: Vec<NeuronId> = (num_visible as u32..(num_visible + num_hidden) as u32)
            .map(NeuronId)
            .collect();
        let mut syns = Vec::new();
        for &dest in visible.iter().chain(&hidden) {
            for c in 0..num_inputs as u32 {
                syns.push(Synapse {
                    source: Node::Input(c),
                    dest,
                });
            }
        }
        for &h in &hidden {
            for &v in &visible {
                syns.push(Synapse {
                    source: Node::Neuron(h),
                    dest: v,
                });
            }
        }
        if topology == Topology::PaperRecurrent {
            for &a in &hidden {
                for &b in &hidden {
                    if a != b {
                        syns.push(Synapse {
                            source: Node::Neuron(a),
                            dest: b,
                        });
                    }
                }
                for &v in &visible {
                    syns.push(Synapse {
                        source: Node::Neuron(v),
                        dest: a,
                    });
                }
            }
        }
        Self::new(num_inputs, visible, hidden, syns, synaptic_basis, feedback_basis)
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_neurons(&self) -> usize {
        self.role.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_inputs + self.num_neurons()
    }

    pub fn visible(&self) -> &[NeuronId] {
        &self.visible
    }

    pub fn hidden(&self) -> &[NeuronId] {
        &self.hidden
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn synaptic_basis(&self) -> &BasisSet {
        &self.synaptic_basis
    }

    pub fn feedback_basis(&self) -> &BasisSet {
        &self.feedback_basis
    }

    pub fn window_len(&self) -> usize {
        self.synaptic_basis.window_len()
    }

    pub fn role(&self, id: NeuronId) -> Result<Role> {
        self.role
            .get(id.0 as usize)
            .copied()
            .ok_or(Error::UnknownNeuron(id))
    }

    pub fn is_hidden(&self, id: NeuronId) -> bool {
        matches!(self.role.get(id.0 as usize), Some(Role::Hidden(_)))
    }

    /// Incoming `(synapse index, source node index)` pairs of a neuron.
    pub fn incoming(&self, id: NeuronId) -> &[(usize, usize)] {
        &self.incoming[id.0 as usize]
    }

    pub fn node_index(&self, node: Node) -> usize {
        match node {
            Node::Input(c) => c as usize,
            Node::Neuron(n) => self.num_inputs + n.0 as usize,
        }
    }

    pub fn neuron_node(&self, id: NeuronId) -> usize {
        self.num_inputs + id.0 as usize
    }

    pub fn synapse_index(&self, syn: Synapse) -> Option<usize> {
        self.synapses
            .binary_search_by(|s| (s.dest, s.source).cmp(&(syn.dest, syn.source)))
            .ok()
    }
}
