use tevlog::crypto::Digest;
use tevlog::persist;

use super::{AnchorQueryArgs, OutputFormat};

pub fn run(args: &AnchorQueryArgs) -> Result<i32, String> {
    let store = persist::read_anchor(&args.anchor).map_err(|e| e.to_string())?;
    let digest =
        Digest::from_hex(&args.digest).map_err(|_| format!("invalid digest {:?}", args.digest))?;
    let block = store.get_stored(&digest);
    match args.format {
        OutputFormat::Json => println!(
            "{}",
            serde_json::json!({
                "digest": digest.to_hex(),
                "stored": block > 0,
                "block": block,
            })
        ),
        _ => println!("digest={} stored={} block={}", digest.to_hex(), block > 0, block),
    }
    Ok(0)
}
