use std::path::Path;

use owoml_core::checkpoint::{load_checkpoint, spec_hash};
use owoml_core::network::Role;
use owoml_core::params::ParamGroup;

use crate::CliError;

pub fn run(path: &Path, values: bool) -> Result<(), CliError> {
    let (spec, params) =
        load_checkpoint(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    println!("checkpoint     {}", path.display());
    println!("spec-hash      {}", spec_hash(&spec));
    println!("inputs         {}", spec.num_inputs());
    println!("visible        {}", spec.visible().len());
    println!("hidden         {}", spec.hidden().len());
    println!("synapses       {}", spec.synapses().len());
    println!(
        "bases          window {} / K_a {} / K_b {}",
        spec.window_len(),
        spec.synaptic_basis().num_basis(),
        spec.feedback_basis().num_basis()
    );
    println!("parameters     {}", params.len());
    let mut stats = [(0.0f64, 0.0f64); 3];
    for (k, v) in params.iter().enumerate() {
        let slot = match params.group(k) {
            ParamGroup::Alpha { .. } => 0,
            ParamGroup::Beta { .. } => 1,
            ParamGroup::Gamma { .. } => 2,
        };
        stats[slot].0 += v * v;
        stats[slot].1 = stats[slot].1.max(v.abs());
    }
    for (name, (sq, max)) in ["w_alpha", "w_beta", "gamma"].iter().zip(stats) {
        println!("{name:<14} |.|_2 {:.6e}  |.|_inf {:.6e}", sq.sqrt(), max);
    }
    if values {
        for syn in spec.synapses() {
            let idx = spec.synapse_index(*syn).expect("listed synapse");
            println!("alpha {} -> {} {:?}", syn.source, syn.dest, params.alpha(idx));
        }
        for &id in spec.visible().iter().chain(spec.hidden()) {
            let role = match spec.role(id).expect("known neuron") {
                Role::Visible(_) => "visible",
                Role::Hidden(_) => "hidden",
            };
            println!(
                "neuron {id} ({role}) beta {:?} gamma {}",
                params.beta(id),
                params.gamma(id)
            );
        }
    }
    Ok(())
}
