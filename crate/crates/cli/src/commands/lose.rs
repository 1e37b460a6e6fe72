use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tevlog::persist;

use super::{parse_u64_list, LoseArgs};

pub fn run(args: &LoseArgs) -> Result<i32, String> {
    let stored = persist::read_log(&args.log).map_err(|e| e.to_string())?;

    let to_remove: Vec<u64> = match (&args.indices, args.random) {
        (Some(list), None) => {
            let indices = parse_u64_list(list, "index")?;
            for &i in &indices {
                if !stored.readouts.contains_key(&i) {
                    return Err(format!("index {i} is not present in the log"));
                }
            }
            indices
        }
        (None, Some(p)) => {
            if !(0.0..=1.0).contains(&p) {
                return Err("--random probability must lie in [0, 1]".into());
            }
            let mut rng = StdRng::seed_from_u64(args.seed);
            stored
                .readouts
                .keys()
                .copied()
                .filter(|_| rng.gen::<f64>() < p)
                .collect()
        }
        (None, None) => return Err("pass either --indices or --random".into()),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };

    let remaining: Vec<_> = stored
        .readouts
        .values()
        .filter(|r| !to_remove.contains(&r.index))
        .cloned()
        .collect();
    persist::write_log(&args.out, &stored.config, &stored.public_key, &remaining)
        .map_err(|e| e.to_string())?;
    println!(
        "removed={} remaining={}",
        stored.readouts.len() - remaining.len(),
        remaining.len()
    );
    Ok(0)
}
