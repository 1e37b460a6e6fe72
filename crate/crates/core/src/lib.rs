//! Tamper-evident sensor-data logging with verifiability under loss.
//!
//! A sensor signs every readout and links it backward twice: to the
//! previous readout's final digest and to the digest `a` steps back. The
//! redundant a-past link turns the stream into a sparse DAG that survives
//! short loss bursts. Periodic checkpoints carry a witness section (the
//! digests of the body segments) and anchor their final digest — via
//! Merkle aggregation — in an emulated on-chain digest store. A verifier
//! that holds a partial log and the anchor classifies every index by
//! walking the digest DAG backward from anchored checkpoints.
//!
//! Modules:
//!
//! * [`crypto`] — SHA-256 digests, Ed25519 keys and signatures.
//! * [`codec`] — the canonical byte layout digests are computed over.
//! * [`readout`] — the signed readout structure, witness sections, and
//!   selective disclosure.
//! * [`chain`] — stream construction: links, checkpoints, atomic
//!   anchoring actions.
//! * [`merkle`] — evidence aggregation and inclusion proofs.
//! * [`anchor`] — the emulated digest-storage contract and the batching
//!   evidence service.
//! * [`verifier`] — per-index classification of partial logs.
//! * [`sim`] — Monte Carlo sweeps of the verifiable fraction over loss
//!   probability, checkpoint interval, and a-past offset.
//! * [`persist`] — on-disk formats (see `FORMATS.md`).
//!
//! The `parallel` feature (default) fans simulation grid cells out with
//! rayon; disabling it falls back to a sequential runner with identical
//! output.

pub mod anchor;
pub mod chain;
pub mod codec;
pub mod crypto;
pub mod merkle;
pub mod persist;
pub mod readout;
pub mod sim;
pub mod verifier;

pub use anchor::{AnchorFault, AnchorReceipt, AnchorStore, EvidenceBatch, SubmitOutcome};
pub use chain::{is_checkpoint_index, new_chain, AtomicActionResult, ChainConfig, ChainState};
pub use crypto::{hash, verify_signature, Digest, KeyPair, PublicKey, Signature};
pub use merkle::{build_tree, prove, verify_proof, MerkleProof, MerkleTree};
pub use readout::{
    build_readout, final_digest, redact, verify_redacted, BlindingPair, ChainLink, FinalDigest,
    GeoPoint, Readout, RedactedReadout, Segment, WitnessSection,
};
pub use sim::{run_sweep, run_sweep_serial, saturation_curve, SimConfig, SimMode, SimResult};
pub use verifier::{
    reachable_set, verify_log, verify_single, AvailableLog, Status, VerificationReport,
};
