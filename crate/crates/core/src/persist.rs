//! Stable on-disk formats, so record, anchor, and verify can run as
//! separate invocations.
//!
//! Logs are JSON Lines: a header line (format, version, chain config,
//! sensor public key) followed by one record per readout in strictly
//! increasing index order; gaps are losses. Each record carries both
//! hex-encoded fields for inspection and the full canonical binary
//! encoding; the two are cross-checked on read, and a record whose halves
//! disagree is surfaced as corrupt rather than failing the read. Anchor
//! stores, receipts, and reports are single JSON documents.
//!
//! Exact field names and byte layouts are documented in `FORMATS.md`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchor::{AnchorError, AnchorReceipt, AnchorStore};
use crate::chain::ChainConfig;
use crate::crypto::{CryptoError, Digest, KeyPair, PublicKey, Signature};
use crate::merkle::{MerkleProof, ProofStep, Side};
use crate::readout::{
    BlindingPair, ChainLink, GeoPoint, Readout, Segment, WitnessSection,
};
use crate::verifier::{Status, VerificationReport};

/// Format version accepted by every reader in this module.
pub const FORMAT_VERSION: u32 = 1;

const LOG_FORMAT: &str = "tevlog-log";
const ANCHOR_FORMAT: &str = "tevlog-anchor";
const RECEIPTS_FORMAT: &str = "tevlog-receipts";
const REPORT_FORMAT: &str = "tevlog-report";
const KEY_FORMAT: &str = "tevlog-key";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed {what} at line {line}, byte offset {offset}")]
    Malformed {
        path: String,
        what: &'static str,
        line: usize,
        offset: usize,
    },
    #[error("{path}: expected format {expected:?}, found {found:?}")]
    WrongFormat {
        path: String,
        expected: &'static str,
        found: String,
    },
    #[error("{path}: unsupported format version {found} (reader supports {FORMAT_VERSION})")]
    UnsupportedVersion { path: String, found: u32 },
    #[error("{path}: record at line {line} is out of order (index {index})")]
    OutOfOrder {
        path: String,
        line: usize,
        index: u64,
    },
    #[error("{path}: {source}")]
    Anchor {
        path: String,
        #[source]
        source: AnchorError,
    },
    #[error("{path}: {source}")]
    Key {
        path: String,
        #[source]
        source: CryptoError,
    },
    #[error("{path}: invalid field {what}: {value:?}")]
    BadField {
        path: String,
        what: &'static str,
        value: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> PersistError {
    PersistError::Io {
        path: path.display().to_string(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Wire DTOs
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LogHeaderDto {
    format: String,
    version: u32,
    a: u64,
    s: u64,
    public_key: String,
}

#[derive(Serialize, Deserialize)]
struct SegmentDto {
    label: String,
    body: String,
}

#[derive(Serialize, Deserialize)]
struct BlindingDto {
    random: String,
    search_key: String,
}

#[derive(Serialize, Deserialize)]
struct ChainLinkDto {
    prev: String,
    prev_offset: u64,
    apast: Option<String>,
    apast_offset: u64,
}

#[derive(Serialize, Deserialize)]
struct WitnessDto {
    segment_digests: Vec<String>,
    blinding_digests: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RecordDto {
    index: u64,
    timestamp_us: i64,
    location: Option<[f64; 2]>,
    segments: Vec<SegmentDto>,
    blinding: Vec<BlindingDto>,
    chain_link: Option<ChainLinkDto>,
    witness: Option<WitnessDto>,
    checkpoint: bool,
    signature: String,
    final_digest: String,
    canonical: String,
}

#[derive(Serialize, Deserialize)]
struct AnchorFileDto {
    format: String,
    version: u32,
    current_block: u64,
    entries: Vec<AnchorEntryDto>,
}

#[derive(Serialize, Deserialize)]
struct AnchorEntryDto {
    digest: String,
    block: u64,
}

#[derive(Serialize, Deserialize)]
struct ProofStepDto {
    sibling: String,
    side: String,
}

#[derive(Serialize, Deserialize)]
struct ProofDto {
    leaf: String,
    path: Vec<ProofStepDto>,
    root: String,
}

#[derive(Serialize, Deserialize)]
struct ReceiptDto {
    index: u64,
    digest: String,
    block_number: u64,
    proof: ProofDto,
}

#[derive(Serialize, Deserialize)]
struct ReceiptsFileDto {
    format: String,
    version: u32,
    receipts: Vec<ReceiptDto>,
}

#[derive(Serialize, Deserialize)]
struct KeyFileDto {
    format: String,
    version: u32,
    public_key: String,
    private_key: String,
}

#[derive(Serialize, Deserialize)]
struct ReportStatsDto {
    verifiable: usize,
    lost: usize,
    unreachable: usize,
    corrupt: usize,
    unanchored_tail: usize,
    head_unreachable: usize,
}

#[derive(Serialize, Deserialize)]
struct ReportDto {
    format: String,
    version: u32,
    n: usize,
    anchored_checkpoints: Vec<u64>,
    stats: ReportStatsDto,
    statuses: Vec<StatusEntryDto>,
}

#[derive(Serialize, Deserialize)]
struct StatusEntryDto {
    index: u64,
    status: String,
}

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

fn record_dto(readout: &Readout) -> RecordDto {
    RecordDto {
        index: readout.index,
        timestamp_us: readout.timestamp_us,
        location: readout.location.map(|l| [l.lat_deg, l.lon_deg]),
        segments: readout
            .segments
            .iter()
            .map(|s| SegmentDto {
                label: s.label.clone(),
                body: hex::encode(&s.body),
            })
            .collect(),
        blinding: readout
            .blinding_pairs
            .iter()
            .map(|b| BlindingDto {
                random: hex::encode(b.random_number),
                search_key: hex::encode(&b.search_key),
            })
            .collect(),
        chain_link: readout.chain_link.as_ref().map(|l| ChainLinkDto {
            prev: l.prev_digest.to_hex(),
            prev_offset: l.prev_offset,
            apast: l.apast_digest.map(|d| d.to_hex()),
            apast_offset: l.apast_offset,
        }),
        witness: readout.witness.as_ref().map(|w| WitnessDto {
            segment_digests: w.segment_digests.iter().map(Digest::to_hex).collect(),
            blinding_digests: w.blinding_digests.iter().map(Digest::to_hex).collect(),
        }),
        checkpoint: readout.is_checkpoint,
        signature: hex::encode(readout.signature.bytes),
        final_digest: readout.final_digest().digest().to_hex(),
        canonical: hex::encode(readout.canonical_bytes()),
    }
}

/// Rebuilds the readout from the human-readable fields. Any hex or shape
/// problem yields `None` (the caller falls back to the canonical blob and
/// flags the record).
fn readout_from_dto(dto: &RecordDto, public_key: PublicKey) -> Option<Readout> {
    let mut segments = Vec::with_capacity(dto.segments.len());
    for s in &dto.segments {
        segments.push(Segment {
            label: s.label.clone(),
            body: hex::decode(&s.body).ok()?,
        });
    }
    let mut blinding_pairs = Vec::with_capacity(dto.blinding.len());
    for b in &dto.blinding {
        blinding_pairs.push(BlindingPair {
            random_number: hex::decode(&b.random).ok()?.try_into().ok()?,
            search_key: hex::decode(&b.search_key).ok()?,
        });
    }
    let chain_link = match &dto.chain_link {
        Some(l) => Some(ChainLink {
            prev_digest: Digest::from_hex(&l.prev).ok()?,
            prev_offset: l.prev_offset,
            apast_digest: match &l.apast {
                Some(hex_digest) => Some(Digest::from_hex(hex_digest).ok()?),
                None => None,
            },
            apast_offset: l.apast_offset,
        }),
        None => None,
    };
    let witness = match &dto.witness {
        Some(w) => {
            let mut segment_digests = Vec::with_capacity(w.segment_digests.len());
            for d in &w.segment_digests {
                segment_digests.push(Digest::from_hex(d).ok()?);
            }
            let mut blinding_digests = Vec::with_capacity(w.blinding_digests.len());
            for d in &w.blinding_digests {
                blinding_digests.push(Digest::from_hex(d).ok()?);
            }
            Some(WitnessSection {
                segment_digests,
                blinding_digests,
            })
        }
        None => None,
    };
    let sig_bytes: [u8; 64] = hex::decode(&dto.signature).ok()?.try_into().ok()?;
    Some(Readout {
        index: dto.index,
        sensor_public_key: public_key,
        timestamp_us: dto.timestamp_us,
        location: dto.location.map(|[lat_deg, lon_deg]| GeoPoint { lat_deg, lon_deg }),
        segments,
        blinding_pairs,
        chain_link,
        witness,
        is_checkpoint: dto.checkpoint,
        signature: Signature {
            bytes: sig_bytes,
            signer: public_key,
        },
    })
}

fn proof_dto(proof: &MerkleProof) -> ProofDto {
    ProofDto {
        leaf: proof.leaf.to_hex(),
        path: proof
            .path
            .iter()
            .map(|step| ProofStepDto {
                sibling: step.sibling.to_hex(),
                side: match step.side {
                    Side::Left => "left".into(),
                    Side::Right => "right".into(),
                },
            })
            .collect(),
        root: proof.root.to_hex(),
    }
}

fn proof_from_dto(dto: &ProofDto, path: &Path) -> Result<MerkleProof, PersistError> {
    let bad = |what: &'static str, value: &str| PersistError::BadField {
        path: path.display().to_string(),
        what,
        value: value.to_string(),
    };
    let mut steps = Vec::with_capacity(dto.path.len());
    for step in &dto.path {
        steps.push(ProofStep {
            sibling: Digest::from_hex(&step.sibling)
                .map_err(|_| bad("proof sibling", &step.sibling))?,
            side: match step.side.as_str() {
                "left" => Side::Left,
                "right" => Side::Right,
                other => return Err(bad("proof side", other)),
            },
        });
    }
    Ok(MerkleProof {
        leaf: Digest::from_hex(&dto.leaf).map_err(|_| bad("proof leaf", &dto.leaf))?,
        path: steps,
        root: Digest::from_hex(&dto.root).map_err(|_| bad("proof root", &dto.root))?,
    })
}

fn check_format(
    path: &Path,
    expected: &'static str,
    found: &str,
    version: u32,
) -> Result<(), PersistError> {
    if found != expected {
        return Err(PersistError::WrongFormat {
            path: path.display().to_string(),
            expected,
            found: found.to_string(),
        });
    }
    if version != FORMAT_VERSION {
        return Err(PersistError::UnsupportedVersion {
            path: path.display().to_string(),
            found: version,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Log files
// ---------------------------------------------------------------------------

/// A parsed log file: header, present readouts, and indices whose stored
/// fields contradict each other (surfaced to the verifier as corrupt).
#[derive(Debug)]
pub struct StoredLog {
    pub config: ChainConfig,
    pub public_key: PublicKey,
    pub readouts: BTreeMap<u64, Readout>,
    pub corrupt: BTreeSet<u64>,
}

/// Writes header plus one line per readout. Readouts must arrive in
/// strictly increasing index order.
pub fn write_log(
    path: &Path,
    config: &ChainConfig,
    public_key: &PublicKey,
    readouts: impl IntoIterator<Item = impl std::borrow::Borrow<Readout>>,
) -> Result<(), PersistError> {
    let mut out = Vec::new();
    let header = LogHeaderDto {
        format: LOG_FORMAT.into(),
        version: FORMAT_VERSION,
        a: config.a(),
        s: config.s(),
        public_key: public_key.to_hex(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).unwrap()).unwrap();
    let mut last_index = None;
    for readout in readouts {
        let readout = readout.borrow();
        assert!(
            last_index.is_none_or(|last| readout.index > last),
            "readouts must be written in increasing index order"
        );
        last_index = Some(readout.index);
        writeln!(out, "{}", serde_json::to_string(&record_dto(readout)).unwrap()).unwrap();
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a log file. Missing indices are losses; records whose JSON
/// fields and embedded canonical bytes disagree (or whose content cannot
/// be rebuilt) are reported in `corrupt` instead of failing the read.
pub fn read_log(path: &Path) -> Result<StoredLog, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let path_str = path.display().to_string();
    let mut lines = LineOffsets::new(&text);

    let (header_line, header_offset) = lines.next().ok_or(PersistError::Malformed {
        path: path_str.clone(),
        what: "log header",
        line: 1,
        offset: 0,
    })?;
    let header: LogHeaderDto =
        serde_json::from_str(header_line).map_err(|e| PersistError::Malformed {
            path: path_str.clone(),
            what: "log header",
            line: 1,
            offset: header_offset + e.column().saturating_sub(1),
        })?;
    check_format(path, LOG_FORMAT, &header.format, header.version)?;
    let public_key =
        PublicKey::from_hex(&header.public_key).map_err(|_| PersistError::BadField {
            path: path_str.clone(),
            what: "public_key",
            value: header.public_key.clone(),
        })?;
    let config = ChainConfig::new(header.a, header.s).map_err(|_| PersistError::BadField {
        path: path_str.clone(),
        what: "chain config",
        value: format!("a={} s={}", header.a, header.s),
    })?;

    let mut readouts = BTreeMap::new();
    let mut corrupt = BTreeSet::new();
    let mut line_no = 1;
    let mut last_index = None;
    for (line, offset) in lines {
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        let dto: RecordDto = serde_json::from_str(line).map_err(|e| PersistError::Malformed {
            path: path_str.clone(),
            what: "log record",
            line: line_no,
            offset: offset + e.column().saturating_sub(1),
        })?;
        if last_index.is_some_and(|last| dto.index <= last) {
            return Err(PersistError::OutOfOrder {
                path: path_str.clone(),
                line: line_no,
                index: dto.index,
            });
        }
        last_index = Some(dto.index);

        let from_fields = readout_from_dto(&dto, public_key);
        let from_canonical = hex::decode(&dto.canonical)
            .ok()
            .and_then(|bytes| Readout::from_canonical_bytes(&bytes).ok());
        match (from_fields, from_canonical) {
            (Some(fields), Some(canonical)) if fields == canonical => {
                readouts.insert(dto.index, canonical);
            }
            (_, Some(canonical)) if canonical.index == dto.index => {
                // Halves disagree: keep the archival bytes, flag the record.
                corrupt.insert(dto.index);
                readouts.insert(dto.index, canonical);
            }
            (Some(fields), _) => {
                corrupt.insert(dto.index);
                readouts.insert(dto.index, fields);
            }
            _ => {
                corrupt.insert(dto.index);
            }
        }
    }
    Ok(StoredLog {
        config,
        public_key,
        readouts,
        corrupt,
    })
}

/// Line iterator that tracks the byte offset of each line start.
struct LineOffsets<'a> {
    text: &'a str,
    offset: usize,
}

impl<'a> LineOffsets<'a> {
    fn new(text: &'a str) -> Self {
        LineOffsets { text, offset: 0 }
    }
}

impl<'a> Iterator for LineOffsets<'a> {
    type Item = (&'a str, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.text.is_empty() {
            return None;
        }
        let start = self.offset;
        match self.text.find('\n') {
            Some(pos) => {
                let line = &self.text[..pos];
                self.text = &self.text[pos + 1..];
                self.offset += pos + 1;
                Some((line, start))
            }
            None => {
                let line = self.text;
                self.text = "";
                self.offset += line.len();
                Some((line, start))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Anchor files
// ---------------------------------------------------------------------------

pub fn write_anchor(path: &Path, store: &AnchorStore) -> Result<(), PersistError> {
    let dto = AnchorFileDto {
        format: ANCHOR_FORMAT.into(),
        version: FORMAT_VERSION,
        current_block: store.current_block(),
        entries: store
            .entries_by_block()
            .into_iter()
            .map(|(digest, block)| AnchorEntryDto {
                digest: digest.to_hex(),
                block,
            })
            .collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&dto).unwrap()).map_err(|e| io_err(path, e))
}

/// Reads an anchor store. An empty file is a valid fresh store.
pub fn read_anchor(path: &Path) -> Result<AnchorStore, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.trim().is_empty() {
        return Ok(AnchorStore::new());
    }
    let dto: AnchorFileDto = serde_json::from_str(&text).map_err(|e| PersistError::Malformed {
        path: path.display().to_string(),
        what: "anchor store",
        line: e.line(),
        offset: e.column().saturating_sub(1),
    })?;
    check_format(path, ANCHOR_FORMAT, &dto.format, dto.version)?;
    let mut entries = Vec::with_capacity(dto.entries.len());
    for entry in &dto.entries {
        let digest = Digest::from_hex(&entry.digest).map_err(|_| PersistError::BadField {
            path: path.display().to_string(),
            what: "anchor digest",
            value: entry.digest.clone(),
        })?;
        entries.push((digest, entry.block));
    }
    AnchorStore::from_entries(dto.current_block, entries).map_err(|source| PersistError::Anchor {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Receipt files
// ---------------------------------------------------------------------------

pub fn write_receipts(
    path: &Path,
    receipts: &BTreeMap<u64, AnchorReceipt>,
) -> Result<(), PersistError> {
    let dto = ReceiptsFileDto {
        format: RECEIPTS_FORMAT.into(),
        version: FORMAT_VERSION,
        receipts: receipts
            .iter()
            .map(|(&index, receipt)| ReceiptDto {
                index,
                digest: receipt.digest.to_hex(),
                block_number: receipt.block_number,
                proof: proof_dto(&receipt.proof),
            })
            .collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&dto).unwrap()).map_err(|e| io_err(path, e))
}

pub fn read_receipts(path: &Path) -> Result<BTreeMap<u64, AnchorReceipt>, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.trim().is_empty() {
        return Ok(BTreeMap::new());
    }
    let dto: ReceiptsFileDto = serde_json::from_str(&text).map_err(|e| PersistError::Malformed {
        path: path.display().to_string(),
        what: "receipts",
        line: e.line(),
        offset: e.column().saturating_sub(1),
    })?;
    check_format(path, RECEIPTS_FORMAT, &dto.format, dto.version)?;
    let mut receipts = BTreeMap::new();
    for r in &dto.receipts {
        receipts.insert(
            r.index,
            AnchorReceipt {
                digest: Digest::from_hex(&r.digest).map_err(|_| PersistError::BadField {
                    path: path.display().to_string(),
                    what: "receipt digest",
                    value: r.digest.clone(),
                })?,
                block_number: r.block_number,
                proof: proof_from_dto(&r.proof, path)?,
            },
        );
    }
    Ok(receipts)
}

// ---------------------------------------------------------------------------
// Key files
// ---------------------------------------------------------------------------

pub fn write_key(path: &Path, key: &KeyPair) -> Result<(), PersistError> {
    let dto = KeyFileDto {
        format: KEY_FORMAT.into(),
        version: FORMAT_VERSION,
        public_key: key.public_key().to_hex(),
        private_key: hex::encode(key.secret_bytes()),
    };
    fs::write(path, serde_json::to_string_pretty(&dto).unwrap()).map_err(|e| io_err(path, e))
}

pub fn read_key(path: &Path) -> Result<KeyPair, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let dto: KeyFileDto = serde_json::from_str(&text).map_err(|e| PersistError::Malformed {
        path: path.display().to_string(),
        what: "key file",
        line: e.line(),
        offset: e.column().saturating_sub(1),
    })?;
    check_format(path, KEY_FORMAT, &dto.format, dto.version)?;
    let bad_field = |what: &'static str, value: &str| PersistError::BadField {
        path: path.display().to_string(),
        what,
        value: value.to_string(),
    };
    let secret: [u8; 32] = hex::decode(&dto.private_key)
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| bad_field("private_key", "<redacted>"))?;
    let public = PublicKey::from_hex(&dto.public_key)
        .map_err(|_| bad_field("public_key", &dto.public_key))?;
    KeyPair::from_parts(secret, *public.as_bytes()).map_err(|source| PersistError::Key {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

/// Report as a JSON document.
pub fn report_to_json(report: &VerificationReport) -> String {
    let dto = ReportDto {
        format: REPORT_FORMAT.into(),
        version: FORMAT_VERSION,
        n: report.statuses.len(),
        anchored_checkpoints: report.anchored_checkpoints.iter().copied().collect(),
        stats: ReportStatsDto {
            verifiable: report.stats.verifiable,
            lost: report.stats.lost,
            unreachable: report.stats.unreachable,
            corrupt: report.stats.corrupt,
            unanchored_tail: report.stats.unanchored_tail,
            head_unreachable: report.stats.head_unreachable,
        },
        statuses: report
            .statuses
            .iter()
            .enumerate()
            .map(|(index, status)| StatusEntryDto {
                index: index as u64,
                status: status.as_str().into(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).unwrap()
}

/// Per-index status table as CSV.
pub fn report_to_csv(report: &VerificationReport) -> String {
    let mut out = String::from("index,status\n");
    for (index, status) in report.statuses.iter().enumerate() {
        out.push_str(&format!("{index},{status}\n"));
    }
    out
}

/// Parses the JSON report back into statuses (used by tooling and tests).
pub fn report_statuses_from_json(text: &str) -> Result<Vec<Status>, String> {
    let dto: ReportDto = serde_json::from_str(text).map_err(|e| e.to_string())?;
    dto.statuses
        .iter()
        .map(|entry| entry.status.parse())
        .collect()
}
