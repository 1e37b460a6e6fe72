//! Classification of a partially available readout log against an anchor
//! store: each index becomes verifiable, lost, unreachable, corrupt, or
//! unanchored-tail.
//!
//! Verification is backward-only: traversal starts at available, anchored
//! checkpoints and follows the digest edges `i → i-1` and `i → i-a`,
//! passing only through available, uncorrupted readouts. An edge counts
//! only if the digest stored in the source readout equals the recomputed
//! final digest of the target; a mismatch marks the target corrupt, which
//! blocks traversal exactly like a loss.
//!
//! A checkpoint contributes only if the readout itself is available, its
//! signature verifies, and its final digest is anchored (receipt proof
//! verifies and the root is stored). Readouts past the last anchored
//! checkpoint are pending, not failed: they get the distinct
//! unanchored-tail status.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::anchor::{AnchorReceipt, AnchorStore};
use crate::chain::{is_checkpoint_index, ChainConfig};
use crate::crypto::Digest;
use crate::merkle::verify_proof;
use crate::readout::Readout;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("readout {index} contradicts the chain config: {detail}")]
    ConfigMismatch { index: u64, detail: &'static str },
    #[error("expected stream length {expected} but found index {found}")]
    InconsistentLength { expected: u64, found: u64 },
    #[error("index {0} requested but the stream has length {1}")]
    IndexOutOfRange(u64, u64),
}

/// Per-index verification outcome. Statuses are mutually exclusive and
/// exhaustive over the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Present, signature-valid, and reachable from an anchored checkpoint.
    Verifiable,
    /// Absent from the log.
    Lost,
    /// Present and valid, but no intact digest path reaches it.
    Unreachable,
    /// Present but internally inconsistent, or contradicted by a signed
    /// digest on a verification path.
    Corrupt,
    /// Present and valid but newer than the last anchored checkpoint;
    /// pending until the next checkpoint anchors.
    UnanchoredTail,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Verifiable => "verifiable",
            Status::Lost => "lost",
            Status::Unreachable => "unreachable",
            Status::Corrupt => "corrupt",
            Status::UnanchoredTail => "unanchored-tail",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verifiable" => Ok(Status::Verifiable),
            "lost" => Ok(Status::Lost),
            "unreachable" => Ok(Status::Unreachable),
            "corrupt" => Ok(Status::Corrupt),
            "unanchored-tail" => Ok(Status::UnanchoredTail),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

/// What survived of a recorded stream: present readouts by index (missing
/// indices are losses), anchor receipts by checkpoint index, and indices
/// the reader already flagged as corrupt (e.g. records whose stored bytes
/// disagree with their fields).
#[derive(Debug, Default)]
pub struct AvailableLog {
    pub readouts: BTreeMap<u64, Readout>,
    pub receipts: BTreeMap<u64, AnchorReceipt>,
    pub flagged_corrupt: BTreeSet<u64>,
    /// Total emitted stream length, when known. Without it the length is
    /// inferred as one past the highest present index, so trailing losses
    /// are indistinguishable from the end of the stream.
    pub expected_len: Option<u64>,
}

impl AvailableLog {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Counts per status over the whole stream. `head_unreachable` is the
/// subset of unreachable indices that sit before the first anchored
/// checkpoint, reported separately so verifiability can be accounted
/// either with or without the checkpointless head.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReportStats {
    pub verifiable: usize,
    pub lost: usize,
    pub unreachable: usize,
    pub corrupt: usize,
    pub unanchored_tail: usize,
    pub head_unreachable: usize,
}

impl ReportStats {
    pub fn total(&self) -> usize {
        self.verifiable + self.lost + self.unreachable + self.corrupt + self.unanchored_tail
    }
}

/// Full per-index classification of a stream.
#[derive(Debug)]
pub struct VerificationReport {
    pub statuses: Vec<Status>,
    pub anchored_checkpoints: BTreeSet<u64>,
    pub stats: ReportStats,
}

impl VerificationReport {
    pub fn len(&self) -> usize {
        self.statuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statuses.is_empty()
    }
}

/// Evidence trail for one verified index: the concrete digest path from
/// an anchored checkpoint down to the index, plus the receipt that ties
/// the checkpoint to the anchor. Independently checkable.
#[derive(Debug, Clone)]
pub struct EvidenceTrail {
    pub checkpoint: u64,
    /// Indices from the checkpoint down to the target; each consecutive
    /// pair is one digest edge.
    pub path: Vec<u64>,
    pub receipt: AnchorReceipt,
}

/// Outcome of verifying a single index.
#[derive(Debug)]
pub struct SingleVerification {
    pub index: u64,
    pub status: Status,
    pub trail: Option<EvidenceTrail>,
}

struct Analysis {
    statuses: Vec<Status>,
    anchored_checkpoints: BTreeSet<u64>,
    stats: ReportStats,
    /// For each reachable index, the higher index whose stored digest
    /// attested it; checkpoints point at themselves.
    parents: Vec<Option<u64>>,
}

/// Pure reachability over availability masks: the set of available
/// indices reachable from any available checkpoint by repeatedly
/// following `i → i-1` and `i → i-a` through available indices.
/// Checkpoints themselves are included. Lost checkpoints contribute
/// nothing (`checkpoints[i]` is ignored unless `available[i]`).
pub fn reachable_set(available: &[bool], checkpoints: &[bool], a: u64) -> Vec<bool> {
    assert_eq!(available.len(), checkpoints.len());
    assert!(a >= 1, "a-past offset must be at least 1");
    let n = available.len();
    let a = a as usize;
    let mut reach = vec![false; n];
    // Both in-edges of an index come from strictly higher indices, so one
    // descending pass settles everything.
    for i in (0..n).rev() {
        if checkpoints[i] && available[i] {
            reach[i] = true;
        }
        if reach[i] {
            if i >= 1 && available[i - 1] {
                reach[i - 1] = true;
            }
            if i >= a && available[i - a] {
                reach[i - a] = true;
            }
        }
    }
    reach
}

fn analyze(
    log: &AvailableLog,
    anchor: &AnchorStore,
    config: &ChainConfig,
) -> Result<Analysis, VerifyError> {
    let max_present = log
        .readouts
        .keys()
        .chain(log.flagged_corrupt.iter())
        .max()
        .copied();
    let n = match (log.expected_len, max_present) {
        (Some(expected), Some(max)) => {
            if max >= expected {
                return Err(VerifyError::InconsistentLength {
                    expected,
                    found: max,
                });
            }
            expected
        }
        (Some(expected), None) => expected,
        (None, Some(max)) => max + 1,
        (None, None) => 0,
    } as usize;

    let a = config.a();
    let mut corrupt = vec![false; n];
    for &i in &log.flagged_corrupt {
        corrupt[i as usize] = true;
    }

    // Pass 1: internal consistency, then config agreement. Offsets and
    // the checkpoint flag are signed by the sensor, so on a
    // signature-valid readout a disagreement means the caller's config is
    // wrong, not the data.
    let mut finals: Vec<Option<Digest>> = vec![None; n];
    for (&i, readout) in &log.readouts {
        let i_us = i as usize;
        if readout.index != i || readout.check_integrity().is_err() {
            corrupt[i_us] = true;
            continue;
        }
        if let Some(link) = &readout.chain_link {
            if link.apast_offset != a {
                return Err(VerifyError::ConfigMismatch {
                    index: i,
                    detail: "a-past offset differs from the configured a",
                });
            }
            let should_have_apast = a >= 2 && i >= a;
            if link.apast_digest.is_some() != should_have_apast {
                return Err(VerifyError::ConfigMismatch {
                    index: i,
                    detail: "a-past digest presence contradicts the configured a",
                });
            }
        }
        if readout.is_checkpoint != is_checkpoint_index(i, config.s()) {
            return Err(VerifyError::ConfigMismatch {
                index: i,
                detail: "checkpoint flag contradicts the configured interval",
            });
        }
        if !corrupt[i_us] {
            finals[i_us] = Some(readout.final_digest().digest());
        }
    }

    // Pass 2: anchored checkpoints. The receipt must tie the readout's
    // final digest to a root the store actually holds.
    let mut anchored_checkpoints = BTreeSet::new();
    for (&i, readout) in &log.readouts {
        let i_us = i as usize;
        if corrupt[i_us] || !readout.is_checkpoint {
            continue;
        }
        let Some(receipt) = log.receipts.get(&i) else {
            continue;
        };
        let anchored = receipt.leaf() == finals[i_us].expect("valid readout has digest")
            && receipt.proof.root == receipt.digest
            && verify_proof(&receipt.proof)
            && receipt.block_number > 0
            && anchor.get_stored(&receipt.digest) == receipt.block_number;
        if anchored {
            anchored_checkpoints.insert(i);
        }
    }

    // Pass 3: link-checked traversal, descending so every in-edge of an
    // index is examined before the index itself is expanded.
    let mut reach = vec![false; n];
    let mut parents: Vec<Option<u64>> = vec![None; n];
    for j in (0..n).rev() {
        if corrupt[j] {
            reach[j] = false;
            parents[j] = None;
            continue;
        }
        if anchored_checkpoints.contains(&(j as u64)) {
            reach[j] = true;
            parents[j] = Some(j as u64);
        }
        if !reach[j] {
            continue;
        }
        let readout = &log.readouts[&(j as u64)];
        let Some(link) = &readout.chain_link else {
            continue;
        };
        let mut follow = |target: usize, stored: Digest| {
            if corrupt[target] {
                return;
            }
            match finals[target] {
                Some(actual) if actual == stored => {
                    if !reach[target] {
                        reach[target] = true;
                        parents[target] = Some(j as u64);
                    }
                }
                Some(_) => {
                    // The signed link contradicts the target's content.
                    corrupt[target] = true;
                    reach[target] = false;
                    parents[target] = None;
                }
                None => {}
            }
        };
        follow(j - 1, link.prev_digest);
        if let Some(apast) = link.apast_digest {
            if j as u64 >= a {
                follow(j - a as usize, apast);
            }
        }
    }

    let last_anchored = anchored_checkpoints.iter().max().copied();
    let first_anchored = anchored_checkpoints.iter().min().copied();
    let mut statuses = Vec::with_capacity(n);
    let mut stats = ReportStats::default();
    for i in 0..n {
        let present = log.readouts.contains_key(&(i as u64)) || log.flagged_corrupt.contains(&(i as u64));
        let status = if corrupt[i] {
            stats.corrupt += 1;
            Status::Corrupt
        } else if !present {
            stats.lost += 1;
            Status::Lost
        } else if reach[i] {
            stats.verifiable += 1;
            Status::Verifiable
        } else if last_anchored.is_none_or(|last| i as u64 > last) {
            stats.unanchored_tail += 1;
            Status::UnanchoredTail
        } else {
            stats.unreachable += 1;
            if first_anchored.is_some_and(|first| (i as u64) < first) {
                stats.head_unreachable += 1;
            }
            Status::Unreachable
        };
        statuses.push(status);
    }

    Ok(Analysis {
        statuses,
        anchored_checkpoints,
        stats,
        parents,
    })
}

/// Classifies every index of the stream. Deterministic; `config` must be
/// the one used at record time.
pub fn verify_log(
    log: &AvailableLog,
    anchor: &AnchorStore,
    config: &ChainConfig,
) -> Result<VerificationReport, VerifyError> {
    let analysis = analyze(log, anchor, config)?;
    Ok(VerificationReport {
        statuses: analysis.statuses,
        anchored_checkpoints: analysis.anchored_checkpoints,
        stats: analysis.stats,
    })
}

/// Classifies one index and, when verifiable, returns the concrete
/// evidence trail that proves it.
pub fn verify_single(
    log: &AvailableLog,
    anchor: &AnchorStore,
    index: u64,
    config: &ChainConfig,
) -> Result<SingleVerification, VerifyError> {
    let analysis = analyze(log, anchor, config)?;
    let n = analysis.statuses.len() as u64;
    if index >= n {
        return Err(VerifyError::IndexOutOfRange(index, n));
    }
    let status = analysis.statuses[index as usize];
    let trail = (status == Status::Verifiable).then(|| {
        let mut path = vec![index];
        let mut cur = index;
        while let Some(parent) = analysis.parents[cur as usize] {
            if parent == cur {
                break;
            }
            path.push(parent);
            cur = parent;
        }
        path.reverse();
        let checkpoint = path[0];
        EvidenceTrail {
            checkpoint,
            path,
            receipt: log.receipts[&checkpoint].clone(),
        }
    });
    Ok(SingleVerification {
        index,
        status,
        trail,
    })
}
