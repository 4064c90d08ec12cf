use clap::Args;
use owoml_core::oracle::{
    analytic_gradients, finite_diff_grad, max_relative_error_by_group, TinyInstance, TinySizes,
    MAX_HIDDEN, MAX_HORIZON, MAX_VISIBLE,
};
use owoml_core::seeding::rng_for;
use rand::Rng;

use crate::CliError;

pub const TOLERANCE: f64 = 1e-5;
/// Denominator floor of the relative error, so that near-zero gradients are
/// compared on an absolute scale.
pub const ERROR_FLOOR: f64 = 1e-3;

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 2)]
    inputs: usize,
    #[arg(long, default_value_t = 2)]
    visible: usize,
    #[arg(long, default_value_t = 2)]
    hidden: usize,
    #[arg(long, default_value_t = 5)]
    horizon: usize,
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value_t = 2)]
    k_a: usize,
    #[arg(long, default_value_t = 2)]
    k_b: usize,
    /// Parameters are drawn uniformly from [-scale, scale].
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Perturb the analytic gradient (negative control; the check must fail).
    #[arg(long)]
    corrupt: bool,
}

const GROUPS: [&str; 3] = ["w_alpha", "w_beta", "gamma"];

pub fn run(args: GradcheckArgs) -> Result<(), CliError> {
    if args.visible == 0 || args.visible > MAX_VISIBLE {
        return Err(CliError::Config(format!("visible must be in 1..={MAX_VISIBLE}")));
    }
    if args.hidden > MAX_HIDDEN {
        return Err(CliError::Config(format!("hidden must be at most {MAX_HIDDEN}")));
    }
    if args.horizon == 0 || args.horizon > MAX_HORIZON {
        return Err(CliError::Config(format!("horizon must be in 1..={MAX_HORIZON}")));
    }
    if !(args.step > 0.0) || !(args.scale >= 0.0) {
        return Err(CliError::config("step and scale must be positive"));
    }
    let sizes = TinySizes {
        inputs: args.inputs,
        visible: args.visible,
        hidden: args.hidden,
        horizon: args.horizon,
        window_len: args.window,
        k_a: args.k_a,
        k_b: args.k_b,
    };
    let mut vis_err = [0.0f64; 3];
    let mut hid_err = [0.0f64; 3];
    for n in 0..args.instances {
        let mut rng = rng_for(args.seed, &[n as u64]);
        let inst = TinyInstance::random(sizes, args.scale, &mut rng).map_err(CliError::config)?;
        let code = rng.gen_range(0..1u64 << inst.enumeration_bits());
        let hidden = inst.hidden_sequence(code);
        let (mut vis, hid) = analytic_gradients(&inst, &hidden).map_err(anyhow::Error::from)?;
        if args.corrupt {
            let last = vis.len() - 1;
            vis.set(last, vis.get(last) + 1e-2);
        }
        let fd_vis = finite_diff_grad(|p| inst.replay(p, &hidden).0, &inst.params, args.step)
            .map_err(anyhow::Error::from)?;
        merge(&mut vis_err, max_relative_error_by_group(&vis, &fd_vis, ERROR_FLOOR));
        if args.hidden > 0 {
            let fd_hid = finite_diff_grad(|p| inst.replay(p, &hidden).1, &inst.params, args.step)
                .map_err(anyhow::Error::from)?;
            merge(&mut hid_err, max_relative_error_by_group(&hid, &fd_hid, ERROR_FLOOR));
        }
    }
    println!(
        "gradcheck: {} instances, h = {:e}, tolerance {:e}",
        args.instances, args.step, TOLERANCE
    );
    println!("{:<10} {:>14} {:>14}", "group", "visible", "hidden");
    for (g, name) in GROUPS.iter().enumerate() {
        let hid = if args.hidden > 0 {
            format!("{:.3e}", hid_err[g])
        } else {
            "n/a".to_string()
        };
        println!("{name:<10} {:>14.3e} {hid:>14}", vis_err[g]);
    }
    let worst = vis_err.iter().chain(&hid_err).fold(0.0f64, |a, &b| a.max(b));
    if worst < TOLERANCE {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL (max relative error {worst:.3e})");
        Err(CliError::CheckFailed)
    }
}

fn merge(acc: &mut [f64; 3], new: [f64; 3]) {
    for (a, b) in acc.iter_mut().zip(new) {
        *a = a.max(b);
    }
}
