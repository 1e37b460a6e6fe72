use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, RngCore, SeedableRng};

use tevlog::anchor::{AnchorStore, EvidenceBatch};
use tevlog::chain::{new_chain, ChainConfig};
use tevlog::crypto::{Digest, KeyPair};
use tevlog::persist;
use tevlog::readout::{BlindingPair, GeoPoint, Segment};

use super::{default_receipts_path, RecordArgs};

/// One readout body to emit: a label and raw bytes.
struct Body {
    label: String,
    bytes: Vec<u8>,
}

fn load_bodies(input: &Path) -> Result<Vec<Body>, String> {
    if input.is_dir() {
        let mut names: Vec<_> = fs::read_dir(input)
            .map_err(|e| format!("cannot read {}: {e}", input.display()))?
            .filter_map(|entry| entry.ok())
            .filter(|entry| entry.path().is_file())
            .map(|entry| entry.path())
            .collect();
        names.sort();
        names
            .into_iter()
            .map(|path| {
                let bytes =
                    fs::read(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                Ok(Body {
                    label: path
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "data".into()),
                    bytes,
                })
            })
            .collect()
    } else {
        let text = fs::read_to_string(input)
            .map_err(|e| format!("cannot read {}: {e}", input.display()))?;
        Ok(text
            .lines()
            .map(|line| Body {
                label: "data".into(),
                bytes: line.as_bytes().to_vec(),
            })
            .collect())
    }
}

fn load_or_generate_key(path: &Path) -> Result<KeyPair, String> {
    if path.exists() {
        persist::read_key(path).map_err(|e| e.to_string())
    } else {
        let key = KeyPair::generate(&mut rand::thread_rng());
        persist::write_key(path, &key).map_err(|e| e.to_string())?;
        eprintln!("generated new key at {}", path.display());
        Ok(key)
    }
}

fn parse_location(text: &str) -> Result<GeoPoint, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("invalid location {text:?}, expected \"lat,lon\""));
    }
    let lat_deg: f64 = parts[0].trim().parse().map_err(|_| "invalid latitude")?;
    let lon_deg: f64 = parts[1].trim().parse().map_err(|_| "invalid longitude")?;
    Ok(GeoPoint { lat_deg, lon_deg })
}

pub fn run(args: &RecordArgs) -> Result<i32, String> {
    let bodies = load_bodies(&args.input)?;
    if bodies.is_empty() {
        return Err(format!("no data bodies in {}", args.input.display()));
    }
    if !(0.0..=1.0).contains(&args.fail_anchor_prob) {
        return Err("--fail-anchor-prob must lie in [0, 1]".into());
    }
    let location = args.location.as_deref().map(parse_location).transpose()?;
    let key = load_or_generate_key(&args.key)?;
    let config =
        ChainConfig::new(args.a, args.s).map_err(|e| format!("invalid chain config: {e}"))?;

    let mut store = if args.anchor.exists() {
        persist::read_anchor(&args.anchor).map_err(|e| e.to_string())?
    } else {
        AnchorStore::new()
    };
    if args.fail_anchor_prob > 0.0 {
        store.fail_with_probability(args.fail_anchor_prob, args.seed);
    }
    let mut batch =
        EvidenceBatch::new(args.batch_size).map_err(|e| format!("invalid batch size: {e}"))?;
    let mut blinding_rng = StdRng::seed_from_u64(args.seed);

    let mut chain = new_chain(config, key.clone());
    let mut readouts = Vec::with_capacity(bodies.len());
    let mut checkpoint_by_digest: HashMap<Digest, u64> = HashMap::new();
    let mut receipts: BTreeMap<u64, tevlog::AnchorReceipt> = BTreeMap::new();
    let mut checkpoints = 0u64;

    for (i, body) in bodies.into_iter().enumerate() {
        let blinding_pairs: Vec<BlindingPair> = (0..args.blinding)
            .map(|_| {
                let mut random_number = [0u8; 32];
                blinding_rng.fill_bytes(&mut random_number);
                let search_key: [u8; 16] = blinding_rng.gen();
                BlindingPair {
                    random_number,
                    search_key: search_key.to_vec(),
                }
            })
            .collect();
        let timestamp = args.t0 + args.dt * i as i64;
        let result = chain
            .emit(
                timestamp,
                location,
                vec![Segment::new(body.label, body.bytes)],
                blinding_pairs,
                &mut batch,
                &mut store,
            )
            .map_err(|e| format!("emit failed at index {i}: {e}"))?;
        if result.readout.is_checkpoint {
            checkpoints += 1;
            checkpoint_by_digest.insert(result.readout.final_digest().digest(), result.readout.index);
        }
        for receipt in &result.flushed_receipts {
            if let Some(&index) = checkpoint_by_digest.get(&receipt.leaf()) {
                receipts.insert(index, receipt.clone());
            }
        }
        readouts.push(result.readout);
    }

    // Drain whatever the last partial batch holds; a failure here leaves
    // those digests unanchored, which the summary reports.
    let pending = match batch.flush(&mut store) {
        Ok(flushed) => {
            for receipt in flushed {
                if let Some(&index) = checkpoint_by_digest.get(&receipt.leaf()) {
                    receipts.insert(index, receipt);
                }
            }
            0
        }
        Err(_) => batch.pending().len(),
    };

    let receipts_path = args
        .receipts
        .clone()
        .unwrap_or_else(|| default_receipts_path(&args.out));
    persist::write_log(&args.out, &config, &key.public_key(), &readouts)
        .map_err(|e| e.to_string())?;
    persist::write_anchor(&args.anchor, &store).map_err(|e| e.to_string())?;
    persist::write_receipts(&receipts_path, &receipts).map_err(|e| e.to_string())?;

    println!(
        "readouts={} checkpoints={} anchored_checkpoints={} anchored_roots={} pending={}",
        readouts.len(),
        checkpoints,
        receipts.len(),
        store.len(),
        pending
    );
    Ok(0)
}
