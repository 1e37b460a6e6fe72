use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tevlog::persist;

use super::TamperArgs;

/// Flips one byte in one segment body, leaving witness and signature
/// untouched, then re-serializes the log. The record stays structurally
/// valid; the verifier flags it corrupt because its content no longer
/// matches what was signed (or what its successors' links committed to).
pub fn run(args: &TamperArgs) -> Result<i32, String> {
    let stored = persist::read_log(&args.log).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(args.seed);

    let candidates: Vec<u64> = stored
        .readouts
        .values()
        .filter(|r| r.segments.iter().any(|s| !s.body.is_empty()))
        .map(|r| r.index)
        .collect();
    if candidates.is_empty() {
        return Err("no record has a non-empty segment body to tamper".into());
    }
    let index = match args.index {
        Some(index) => {
            if !candidates.contains(&index) {
                return Err(format!(
                    "index {index} is absent or has only empty segment bodies"
                ));
            }
            index
        }
        None => candidates[rng.gen_range(0..candidates.len())],
    };

    let mut readouts: Vec<_> = stored.readouts.into_values().collect();
    let target = readouts
        .iter_mut()
        .find(|r| r.index == index)
        .expect("chosen index is present");
    let segment_choices: Vec<usize> = target
        .segments
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.body.is_empty())
        .map(|(i, _)| i)
        .collect();
    let seg = segment_choices[rng.gen_range(0..segment_choices.len())];
    let pos = rng.gen_range(0..target.segments[seg].body.len());
    let mask = rng.gen_range(1..=255u8);
    target.segments[seg].body[pos] ^= mask;
    let label = target.segments[seg].label.clone();

    persist::write_log(&args.out, &stored.config, &stored.public_key, &readouts)
        .map_err(|e| e.to_string())?;
    println!("tampered index={index} segment={label} byte={pos}");
    Ok(0)
}
