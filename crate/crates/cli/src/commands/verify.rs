use std::fs;

use tevlog::persist;
use tevlog::verifier::{verify_log, AvailableLog, Status, VerifyError};

use super::{default_receipts_path, OutputFormat, VerifyArgs, EXIT_USAGE, EXIT_VERIFY_FAILED};

pub fn run(args: &VerifyArgs) -> Result<i32, String> {
    let stored = persist::read_log(&args.log).map_err(|e| e.to_string())?;
    let anchor = persist::read_anchor(&args.anchor).map_err(|e| e.to_string())?;
    let receipts_path = args
        .receipts
        .clone()
        .unwrap_or_else(|| default_receipts_path(&args.log));
    let receipts = if receipts_path.exists() {
        persist::read_receipts(&receipts_path).map_err(|e| e.to_string())?
    } else {
        Default::default()
    };

    let mut log = AvailableLog::new();
    log.readouts = stored.readouts;
    log.flagged_corrupt = stored.corrupt;
    log.receipts = receipts;

    let report = match verify_log(&log, &anchor, &stored.config) {
        Ok(report) => report,
        Err(err @ VerifyError::ConfigMismatch { .. }) => {
            eprintln!("error: {err}");
            return Ok(EXIT_USAGE);
        }
        Err(err) => return Err(err.to_string()),
    };

    let rendered = match args.format {
        OutputFormat::Json => persist::report_to_json(&report),
        OutputFormat::Csv => persist::report_to_csv(&report),
        OutputFormat::Table => {
            let mut out = String::new();
            out.push_str("index  status\n");
            for (index, status) in report.statuses.iter().enumerate() {
                out.push_str(&format!("{index:<6} {status}\n"));
            }
            out
        }
    };
    match &args.out {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{rendered}"),
    }

    let n = report.statuses.len().max(1) as f64;
    let stats = &report.stats;
    println!(
        "n={} verifiable={} ({:.4}) lost={} ({:.4}) unreachable={} corrupt={} unanchored_tail={} head_unreachable={} anchored_checkpoints={}",
        report.statuses.len(),
        stats.verifiable,
        stats.verifiable as f64 / n,
        stats.lost,
        stats.lost as f64 / n,
        stats.unreachable,
        stats.corrupt,
        stats.unanchored_tail,
        stats.head_unreachable,
        report.anchored_checkpoints.len(),
    );

    // Success means every present readout up to the last anchored
    // checkpoint verified and nothing anywhere is corrupt.
    let failed = stats.corrupt > 0
        || report
            .statuses
            .iter()
            .any(|status| *status == Status::Unreachable);
    Ok(if failed { EXIT_VERIFY_FAILED } else { 0 })
}
