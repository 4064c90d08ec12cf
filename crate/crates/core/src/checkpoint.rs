//! Text checkpoints of a network and its parameters.
//!
//! ```text
//! owoml-checkpoint 1
//! spec-hash <16 hex digits>
//! inputs <n>
//! visible <id> <id> ...
//! hidden <id> ...
//! basis synaptic <window_len> <num_basis> <row-major values...>
//! basis feedback <window_len> <num_basis> <values...>
//! synapse <source> <dest>            (one line per synapse, sorted)
//! w_alpha <source> <dest> <K_a values>
//! w_beta <neuron> <K_b values>
//! gamma <neuron> <value>
//! end
//! ```
//!
//! Reals are written with 17 significant digits, so a round trip is
//! bit-exact. The spec hash covers the topology and basis lines.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::network::{NetworkSpec, Node, NeuronId, Synapse};
use crate::params::ModelParams;

const HEADER: &str = "owoml-checkpoint 1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn spec_lines(spec: &NetworkSpec) -> String {
    let mut s = String::new();
    let ids = |v: &[NeuronId]| v.iter().map(|n| n.0.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(s, "inputs {}", spec.num_inputs()).unwrap();
    writeln!(s, "visible {}", ids(spec.visible())).unwrap();
    writeln!(s, "hidden {}", ids(spec.hidden())).unwrap();
    for (name, b) in [("synaptic", spec.synaptic_basis()), ("feedback", spec.feedback_basis())] {
        write!(s, "basis {name} {} {}", b.window_len(), b.num_basis()).unwrap();
        for v in b.as_slice() {
            write!(s, " {}", real(*v)).unwrap();
        }
        s.push('\n');
    }
    for syn in spec.synapses() {
        writeln!(s, "synapse {} {}", syn.source, syn.dest).unwrap();
    }
    s
}

/// Short hash identifying a network's topology and bases.
pub fn spec_hash(spec: &NetworkSpec) -> String {
    let digest = Sha256::digest(spec_lines(spec).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_checkpoint_string(spec: &NetworkSpec, params: &ModelParams) -> Result<String> {
    params.check_shape(spec)?;
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "spec-hash {}", spec_hash(spec)).unwrap();
    s.push_str(&spec_lines(spec));
    for (k, syn) in spec.synapses().iter().enumerate() {
        write!(s, "w_alpha {} {}", syn.source, syn.dest).unwrap();
        for v in params.alpha(k) {
            write!(s, " {}", real(*v)).unwrap();
        }
        s.push('\n');
    }
    for i in 0..spec.num_neurons() as u32 {
        let id = NeuronId(i);
        write!(s, "w_beta {id}").unwrap();
        for v in params.beta(id) {
            write!(s, " {}", real(*v)).unwrap();
        }
        s.push('\n');
    }
    for i in 0..spec.num_neurons() as u32 {
        let id = NeuronId(i);
        writeln!(s, "gamma {id} {}", real(params.gamma(id))).unwrap();
    }
    s.push_str("end\n");
    Ok(s)
}

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Checkpoint(format!("line {line}: {msg}"))
}

fn parse_reals(line: usize, toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| err(line, format!("bad number '{t}'")))
                .and_then(|v| {
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(err(line, "non-finite value"))
                    }
                })
        })
        .collect()
}

fn parse_u32(line: usize, t: &str) -> Result<u32> {
    t.parse().map_err(|_| err(line, format!("bad integer '{t}'")))
}

/// Parses a checkpoint, verifying the recorded spec hash.
pub fn from_checkpoint_str(text: &str) -> Result<(NetworkSpec, ModelParams)> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((_, other)) => return Err(err(1, format!("unsupported header '{other}'"))),
        None => return Err(err(1, "empty file")),
    }
    let mut hash = None;
    let mut inputs = None;
    let mut visible = Vec::new();
    let mut hidden = Vec::new();
    let mut bases: [Option<BasisSet>; 2] = [None, None];
    let mut synapses = Vec::new();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut gamma = Vec::new();
    let mut ended = false;
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        if ended {
            return Err(err(n, "content after 'end'"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "spec-hash" if toks.len() == 2 => hash = Some(toks[1].to_string()),
            "inputs" if toks.len() == 2 => inputs = Some(parse_u32(n, toks[1])? as usize),
            "visible" => {
                visible = toks[1..].iter().map(|t| parse_u32(n, t).map(NeuronId)).collect::<Result<_>>()?
            }
            "hidden" => {
                hidden = toks[1..].iter().map(|t| parse_u32(n, t).map(NeuronId)).collect::<Result<_>>()?
            }
            "basis" if toks.len() >= 4 => {
                let slot = match toks[1] {
                    "synaptic" => 0,
                    "feedback" => 1,
                    other => return Err(err(n, format!("unknown basis '{other}'"))),
                };
                let w = parse_u32(n, toks[2])? as usize;
                let k = parse_u32(n, toks[3])? as usize;
                let values = parse_reals(n, &toks[4..])?;
                bases[slot] = Some(BasisSet::from_matrix(w, k, values).map_err(|e| err(n, e))?);
            }
            "synapse" if toks.len() == 3 => synapses.push(Synapse {
                source: toks[1].parse().map_err(|e| err(n, e))?,
                dest: match toks[2].parse().map_err(|e| err(n, e))? {
                    Node::Neuron(id) => id,
                    Node::Input(_) => return Err(err(n, "synapse must end at a neuron")),
                },
            }),
            "w_alpha" if toks.len() >= 3 => alpha.push((n, toks[1].to_string(), toks[2].to_string(), parse_reals(n, &toks[3..])?)),
            "w_beta" if toks.len() >= 2 => beta.push((n, toks[1].to_string(), parse_reals(n, &toks[2..])?)),
            "gamma" if toks.len() == 3 => gamma.push((n, toks[1].to_string(), parse_reals(n, &toks[2..])?[0])),
            "end" if toks.len() == 1 => ended = true,
            _ => return Err(err(n, format!("unrecognized line '{line}'"))),
        }
    }
    if !ended {
        return Err(Error::Checkpoint("missing 'end' (truncated file?)".into()));
    }
    let [a, b] = bases;
    let spec = NetworkSpec::new(
        inputs.ok_or_else(|| Error::Checkpoint("missing 'inputs'".into()))?,
        visible,
        hidden,
        synapses,
        a.ok_or_else(|| Error::Checkpoint("missing synaptic basis".into()))?,
        b.ok_or_else(|| Error::Checkpoint("missing feedback basis".into()))?,
    )
    .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let expected = spec_hash(&spec);
    match hash {
        Some(h) if h == expected => {}
        Some(h) => {
            return Err(Error::Checkpoint(format!(
                "spec hash mismatch: file says {h}, content hashes to {expected}"
            )))
        }
        None => return Err(Error::Checkpoint("missing 'spec-hash'".into())),
    }

    let mut params = ModelParams::zeros(&spec);
    if alpha.len() != spec.synapses().len() {
        return Err(Error::Checkpoint(format!(
            "{} w_alpha lines for {} synapses",
            alpha.len(),
            spec.synapses().len()
        )));
    }
    for (k, (n, src, dst, vals)) in alpha.into_iter().enumerate() {
        let syn = spec.synapses()[k];
        if src != syn.source.to_string() || dst != syn.dest.to_string() {
            return Err(err(n, "w_alpha lines out of synapse order"));
        }
        if vals.len() != params.k_a() {
            return Err(err(n, format!("expected {} values", params.k_a())));
        }
        params.alpha_mut(k).copy_from_slice(&vals);
    }
    if beta.len() != spec.num_neurons() || gamma.len() != spec.num_neurons() {
        return Err(Error::Checkpoint("expected one w_beta and gamma line per neuron".into()));
    }
    for (i, ((nb, idb, vals), (ng, idg, g))) in beta.into_iter().zip(gamma).enumerate() {
        let id = NeuronId(i as u32);
        if idb != id.to_string() {
            return Err(err(nb, "w_beta lines out of neuron order"));
        }
        if idg != id.to_string() {
            return Err(err(ng, "gamma lines out of neuron order"));
        }
        if vals.len() != params.k_b() {
            return Err(err(nb, format!("expected {} values", params.k_b())));
        }
        params.beta_mut(id).copy_from_slice(&vals);
        *params.gamma_mut(id) = g;
    }
    Ok((spec, params))
}

pub fn save_checkpoint(
    path: impl AsRef<std::path::Path>,
    spec: &NetworkSpec,
    params: &ModelParams,
) -> Result<()> {
    std::fs::write(path, to_checkpoint_string(spec, params)?)
        .map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn load_checkpoint(path: impl AsRef<std::path::Path>) -> Result<(NetworkSpec, ModelParams)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Checkpoint(e.to_string()))?;
    from_checkpoint_str(&text)
}
