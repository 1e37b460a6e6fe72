use std::fs;

use tevlog::sim::{run_sweep, LossModel, SimConfig, SimMode};

use super::{parse_f64_list, parse_u64_list, SimModeArg, SimulateArgs};

pub fn run(args: &SimulateArgs) -> Result<i32, String> {
    let config = SimConfig {
        n: args.n,
        p_grid: parse_f64_list(&args.p, "loss probability")?,
        s_values: parse_u64_list(&args.s, "checkpoint interval")?,
        a_values: parse_u64_list(&args.a, "a-past offset")?,
        trials: args.trials,
        seed: args.seed,
        mode: match args.mode {
            SimModeArg::Fast => SimMode::Fast,
            SimModeArg::Full => SimMode::Full,
        },
        loss_model: match args.burst_len {
            Some(run_len) => LossModel::Burst { run_len },
            None => LossModel::Independent,
        },
        anchor_fail_prob: args.fail_anchor_prob,
    };
    config.validate().map_err(|e| e.to_string())?;

    let result = run_sweep(&config).map_err(|e| e.to_string())?;
    let csv = result.to_csv();
    match &args.out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            let sidecar = path.with_extension("config.json");
            fs::write(&sidecar, result.config_json())
                .map_err(|e| format!("cannot write {}: {e}", sidecar.display()))?;
            println!(
                "rows={} cells={} out={} config={}",
                result.rows.len(),
                config.s_values.len() * config.a_values.len() * config.trials as usize,
                path.display(),
                sidecar.display()
            );
        }
        None => print!("{csv}"),
    }
    Ok(0)
}
