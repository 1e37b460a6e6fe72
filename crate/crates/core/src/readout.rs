//! The readout data structure: metadata, segmented body, optional witness
//! section, chain links, and signature, plus final-digest derivation and
//! selective disclosure.
//!
//! Two byte encodings matter here (layouts in `FORMATS.md`):
//!
//! * **signing bytes** — what the sensor signs. For witnessed readouts the
//!   body is represented by its witness digests, so a redacted copy can be
//!   verified without the hidden segment bytes or the raw blinding pairs.
//!   Witness-less (stream-mode) readouts sign their raw body instead.
//! * **record bytes** — the full archival encoding of every field,
//!   parseable back into a [`Readout`]. Persistence embeds these per
//!   record.
//!
//! The final digest is `hash(signing bytes || signature)`; that value is
//! what chain links reference and what checkpoints anchor.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::{CodecError, Decoder, Encoder};
use crate::crypto::{hash, verify_signature, Digest, KeyPair, PublicKey, Signature};

/// Domain byte prefixed to hashed segment encodings.
const SEGMENT_TAG: u8 = 0x02;
/// Domain byte prefixed to hashed blinding-pair encodings.
const BLINDING_TAG: u8 = 0x03;
/// Leading byte of signing bytes (also the head of final-digest preimages).
const SIGNING_TAG: u8 = 0x10;
/// Version byte leading the archival record encoding.
const RECORD_VERSION: u8 = 0x01;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReadoutError {
    #[error("a readout needs at least one segment")]
    NoSegments,
    #[error("duplicate segment label {0:?}")]
    DuplicateLabel(String),
    #[error("index 0 must have no chain link and later indices must have one")]
    IndexLinkMismatch,
    #[error("location coordinates must be finite")]
    NonFiniteLocation,
    #[error("redaction requires a witness section")]
    NoWitness,
    #[error("unknown segment label {0:?}")]
    UnknownLabel(String),
}

/// Why a readout failed its internal consistency check.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntegrityError {
    #[error("signature does not verify")]
    BadSignature,
    #[error("signature signer differs from the sensor public key")]
    SignerMismatch,
    #[error("checkpoint readout is missing its witness section")]
    MissingWitness,
    #[error("witness digest count does not match the body")]
    WitnessShape,
    #[error("witness digest {0} does not match its segment or blinding pair")]
    WitnessMismatch(usize),
    #[error("duplicate segment label {0:?}")]
    DuplicateLabel(String),
    #[error("chain link shape is invalid")]
    BadLink,
}

/// One labelled section of a readout body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub label: String,
    pub body: Vec<u8>,
}

impl Segment {
    pub fn new(label: impl Into<String>, body: impl Into<Vec<u8>>) -> Self {
        Segment {
            label: label.into(),
            body: body.into(),
        }
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.put_str(&self.label);
        enc.put_bytes(&self.body);
    }

    fn decode(dec: &mut Decoder) -> Result<Self, CodecError> {
        Ok(Segment {
            label: dec.get_str()?,
            body: dec.get_bytes()?,
        })
    }

    /// Digest committed into the witness section for this segment.
    pub fn digest(&self) -> Digest {
        let mut enc = Encoder::new();
        enc.put_u8(SEGMENT_TAG);
        self.encode(&mut enc);
        hash(&enc.into_bytes())
    }
}

/// `<random number, search key>` pair carried for anonymized traceability.
/// The random number must come from an entropy source, never from content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindingPair {
    pub random_number: [u8; 32],
    pub search_key: Vec<u8>,
}

impl BlindingPair {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_raw(&self.random_number);
        enc.put_bytes(&self.search_key);
    }

    fn decode(dec: &mut Decoder) -> Result<Self, CodecError> {
        Ok(BlindingPair {
            random_number: dec.get_raw()?,
            search_key: dec.get_bytes()?,
        })
    }

    pub fn digest(&self) -> Digest {
        let mut enc = Encoder::new();
        enc.put_u8(BLINDING_TAG);
        self.encode(&mut enc);
        hash(&enc.into_bytes())
    }
}

/// Ordered digests of the body sections, collectively signed on
/// checkpoints (and any sporadic witnessed readout).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessSection {
    pub segment_digests: Vec<Digest>,
    pub blinding_digests: Vec<Digest>,
}

impl WitnessSection {
    pub fn over(segments: &[Segment], blinding_pairs: &[BlindingPair]) -> Self {
        WitnessSection {
            segment_digests: segments.iter().map(Segment::digest).collect(),
            blinding_digests: blinding_pairs.iter().map(BlindingPair::digest).collect(),
        }
    }

    fn encode(&self, enc: &mut Encoder) {
        enc.put_u32(self.segment_digests.len() as u32);
        for d in &self.segment_digests {
            enc.put_raw(d.as_bytes());
        }
        enc.put_u32(self.blinding_digests.len() as u32);
        for d in &self.blinding_digests {
            enc.put_raw(d.as_bytes());
        }
    }

    fn decode(dec: &mut Decoder) -> Result<Self, CodecError> {
        let n = dec.get_u32()? as usize;
        let mut segment_digests = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            segment_digests.push(Digest::from_bytes(dec.get_raw()?));
        }
        let m = dec.get_u32()? as usize;
        let mut blinding_digests = Vec::with_capacity(m.min(4096));
        for _ in 0..m {
            blinding_digests.push(Digest::from_bytes(dec.get_raw()?));
        }
        Ok(WitnessSection {
            segment_digests,
            blinding_digests,
        })
    }
}

/// Backward links: the previous final digest (offset 1) and, when the
/// stream is old enough, the a-past final digest at `apast_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainLink {
    pub prev_digest: Digest,
    pub prev_offset: u64,
    pub apast_digest: Option<Digest>,
    pub apast_offset: u64,
}

impl ChainLink {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_raw(self.prev_digest.as_bytes());
        enc.put_u64(self.prev_offset);
        match self.apast_digest {
            Some(d) => {
                enc.put_bool(true);
                enc.put_raw(d.as_bytes());
            }
            None => enc.put_bool(false),
        }
        enc.put_u64(self.apast_offset);
    }

    fn decode(dec: &mut Decoder) -> Result<Self, CodecError> {
        let prev_digest = Digest::from_bytes(dec.get_raw()?);
        let prev_offset = dec.get_u64()?;
        let apast_digest = if dec.get_bool()? {
            Some(Digest::from_bytes(dec.get_raw()?))
        } else {
            None
        };
        let apast_offset = dec.get_u64()?;
        Ok(ChainLink {
            prev_digest,
            prev_offset,
            apast_digest,
            apast_offset,
        })
    }
}

/// Latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

/// Semantic wrapper for the digest that chain links reference and
/// checkpoints anchor: `hash(signing bytes || signature)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinalDigest(Digest);

impl FinalDigest {
    pub fn digest(&self) -> Digest {
        self.0
    }
}

impl From<FinalDigest> for Digest {
    fn from(fd: FinalDigest) -> Digest {
        fd.0
    }
}

/// One signed sensor emission.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub index: u64,
    pub sensor_public_key: PublicKey,
    pub timestamp_us: i64,
    pub location: Option<GeoPoint>,
    pub segments: Vec<Segment>,
    pub blinding_pairs: Vec<BlindingPair>,
    pub chain_link: Option<ChainLink>,
    pub witness: Option<WitnessSection>,
    pub is_checkpoint: bool,
    pub signature: Signature,
}

impl Readout {
    /// The bytes the sensor signs: every field except the signature.
    /// Witnessed readouts commit to their body via the witness digests;
    /// witness-less readouts commit to the raw body.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.put_u8(SIGNING_TAG);
        enc.put_u64(self.index);
        enc.put_raw(self.sensor_public_key.as_bytes());
        enc.put_i64(self.timestamp_us);
        match self.location {
            Some(loc) => {
                enc.put_bool(true);
                enc.put_f64(loc.lat_deg);
                enc.put_f64(loc.lon_deg);
            }
            None => enc.put_bool(false),
        }
        match &self.witness {
            Some(w) => {
                enc.put_bool(true);
                w.encode(&mut enc);
            }
            None => {
                enc.put_bool(false);
                enc.put_u32(self.segments.len() as u32);
                for s in &self.segments {
                    s.encode(&mut enc);
                }
                enc.put_u32(self.blinding_pairs.len() as u32);
                for b in &self.blinding_pairs {
                    b.encode(&mut enc);
                }
            }
        }
        match &self.chain_link {
            Some(link) => {
                enc.put_bool(true);
                link.encode(&mut enc);
            }
            None => enc.put_bool(false),
        }
        enc.put_bool(self.is_checkpoint);
        enc.into_bytes()
    }

    /// `hash(signing bytes || signature)`; changes if any signed field,
    /// the public key, or the signature changes.
    pub fn final_digest(&self) -> FinalDigest {
        let mut bytes = self.signing_bytes();
        bytes.extend_from_slice(&self.signature.bytes);
        FinalDigest(hash(&bytes))
    }

    /// Full archival encoding of every field, including raw segment
    /// bodies and blinding pairs. Ends with a length-prefixed extension
    /// area (empty as written) that readers skip.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.put_u8(RECORD_VERSION);
        enc.put_u64(self.index);
        enc.put_raw(self.sensor_public_key.as_bytes());
        enc.put_i64(self.timestamp_us);
        match self.location {
            Some(loc) => {
                enc.put_bool(true);
                enc.put_f64(loc.lat_deg);
                enc.put_f64(loc.lon_deg);
            }
            None => enc.put_bool(false),
        }
        enc.put_u32(self.segments.len() as u32);
        for s in &self.segments {
            s.encode(&mut enc);
        }
        enc.put_u32(self.blinding_pairs.len() as u32);
        for b in &self.blinding_pairs {
            b.encode(&mut enc);
        }
        match &self.chain_link {
            Some(link) => {
                enc.put_bool(true);
                link.encode(&mut enc);
            }
            None => enc.put_bool(false),
        }
        match &self.witness {
            Some(w) => {
                enc.put_bool(true);
                w.encode(&mut enc);
            }
            None => enc.put_bool(false),
        }
        enc.put_bool(self.is_checkpoint);
        enc.put_raw(&self.signature.bytes);
        enc.put_bytes(&[]); // extension area
        enc.into_bytes()
    }

    /// Parses [`Readout::canonical_bytes`]. Unknown extension bytes are
    /// skipped; an unknown version byte is rejected.
    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Readout, CodecError> {
        let mut dec = Decoder::new(bytes);
        let version = dec.get_u8()?;
        if version != RECORD_VERSION {
            return Err(CodecError::Invalid {
                offset: 0,
                what: "record version",
            });
        }
        let index = dec.get_u64()?;
        let sensor_public_key = PublicKey::from_bytes(dec.get_raw()?);
        let timestamp_us = dec.get_i64()?;
        let location = if dec.get_bool()? {
            Some(GeoPoint {
                lat_deg: dec.get_f64()?,
                lon_deg: dec.get_f64()?,
            })
        } else {
            None
        };
        let n = dec.get_u32()? as usize;
        let mut segments = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            segments.push(Segment::decode(&mut dec)?);
        }
        let m = dec.get_u32()? as usize;
        let mut blinding_pairs = Vec::with_capacity(m.min(4096));
        for _ in 0..m {
            blinding_pairs.push(BlindingPair::decode(&mut dec)?);
        }
        let chain_link = if dec.get_bool()? {
            Some(ChainLink::decode(&mut dec)?)
        } else {
            None
        };
        let witness = if dec.get_bool()? {
            Some(WitnessSection::decode(&mut dec)?)
        } else {
            None
        };
        let is_checkpoint = dec.get_bool()?;
        let sig_bytes: [u8; 64] = dec.get_raw()?;
        let _extension = dec.get_bytes()?;
        dec.finish()?;
        Ok(Readout {
            index,
            sensor_public_key,
            timestamp_us,
            location,
            segments,
            blinding_pairs,
            chain_link,
            witness,
            is_checkpoint,
            signature: Signature {
                bytes: sig_bytes,
                signer: sensor_public_key,
            },
        })
    }

    /// Checks everything that can be checked without the rest of the
    /// stream: signature, signer identity, witness consistency with the
    /// body, label uniqueness, and link shape.
    pub fn check_integrity(&self) -> Result<(), IntegrityError> {
        let mut seen = BTreeSet::new();
        for s in &self.segments {
            if !seen.insert(s.label.as_str()) {
                return Err(IntegrityError::DuplicateLabel(s.label.clone()));
            }
        }
        if self.signature.signer != self.sensor_public_key {
            return Err(IntegrityError::SignerMismatch);
        }
        if !verify_signature(
            &self.signature,
            &self.sensor_public_key,
            &self.signing_bytes(),
        ) {
            return Err(IntegrityError::BadSignature);
        }
        if self.is_checkpoint && self.witness.is_none() {
            return Err(IntegrityError::MissingWitness);
        }
        if let Some(w) = &self.witness {
            if w.segment_digests.len() != self.segments.len()
                || w.blinding_digests.len() != self.blinding_pairs.len()
            {
                return Err(IntegrityError::WitnessShape);
            }
            for (i, s) in self.segments.iter().enumerate() {
                if w.segment_digests[i] != s.digest() {
                    return Err(IntegrityError::WitnessMismatch(i));
                }
            }
            for (i, b) in self.blinding_pairs.iter().enumerate() {
                if w.blinding_digests[i] != b.digest() {
                    return Err(IntegrityError::WitnessMismatch(i));
                }
            }
        }
        if let Some(link) = &self.chain_link {
            let apast_ok = match link.apast_digest {
                Some(_) => link.apast_offset >= 2,
                None => true,
            };
            if self.index == 0 || link.prev_offset != 1 || !apast_ok {
                return Err(IntegrityError::BadLink);
            }
        } else if self.index != 0 {
            return Err(IntegrityError::BadLink);
        }
        Ok(())
    }
}

/// Constructs and signs a readout. The witness section is computed and
/// attached iff `is_checkpoint`; stream-mode readouts omit it.
#[allow(clippy::too_many_arguments)]
pub fn build_readout(
    key: &KeyPair,
    index: u64,
    timestamp_us: i64,
    location: Option<GeoPoint>,
    segments: Vec<Segment>,
    blinding_pairs: Vec<BlindingPair>,
    chain_link: Option<ChainLink>,
    is_checkpoint: bool,
) -> Result<Readout, ReadoutError> {
    if segments.is_empty() {
        return Err(ReadoutError::NoSegments);
    }
    let mut seen = BTreeSet::new();
    for s in &segments {
        if !seen.insert(s.label.as_str()) {
            return Err(ReadoutError::DuplicateLabel(s.label.clone()));
        }
    }
    if (index == 0) != chain_link.is_none() {
        return Err(ReadoutError::IndexLinkMismatch);
    }
    if let Some(loc) = location {
        if !loc.lat_deg.is_finite() || !loc.lon_deg.is_finite() {
            return Err(ReadoutError::NonFiniteLocation);
        }
    }
    let witness = is_checkpoint.then(|| WitnessSection::over(&segments, &blinding_pairs));
    let mut readout = Readout {
        index,
        sensor_public_key: key.public_key(),
        timestamp_us,
        location,
        segments,
        blinding_pairs,
        chain_link,
        witness,
        is_checkpoint,
        // Placeholder until the signing bytes exist.
        signature: Signature {
            bytes: [0u8; 64],
            signer: key.public_key(),
        },
    };
    readout.signature = key.sign(&readout.signing_bytes());
    Ok(readout)
}

/// Convenience free function mirroring [`Readout::final_digest`].
pub fn final_digest(readout: &Readout) -> FinalDigest {
    readout.final_digest()
}

/// One segment position of a redacted readout: either the clear segment
/// or just its digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentDisclosure {
    Disclosed(Segment),
    Hidden(Digest),
}

/// A readout with some segments withheld. Deliberately a distinct type
/// from [`Readout`]: a redacted structure cannot be chained from or
/// re-redacted, only verified against an expected final digest. Raw
/// blinding pairs are dropped; their digests remain in the witness.
#[derive(Debug, Clone, PartialEq)]
pub struct RedactedReadout {
    pub index: u64,
    pub sensor_public_key: PublicKey,
    pub timestamp_us: i64,
    pub location: Option<GeoPoint>,
    pub segments: Vec<SegmentDisclosure>,
    pub chain_link: Option<ChainLink>,
    pub witness: WitnessSection,
    pub is_checkpoint: bool,
    pub signature: Signature,
}

/// Hides every segment whose label is not in `keep_labels`. Defined only
/// for witnessed readouts; the witness and signature carry over unchanged.
pub fn redact(readout: &Readout, keep_labels: &[&str]) -> Result<RedactedReadout, ReadoutError> {
    let witness = readout.witness.clone().ok_or(ReadoutError::NoWitness)?;
    let known: BTreeSet<&str> = readout.segments.iter().map(|s| s.label.as_str()).collect();
    for label in keep_labels {
        if !known.contains(label) {
            return Err(ReadoutError::UnknownLabel((*label).to_string()));
        }
    }
    let keep: BTreeSet<&str> = keep_labels.iter().copied().collect();
    let segments = readout
        .segments
        .iter()
        .map(|s| {
            if keep.contains(s.label.as_str()) {
                SegmentDisclosure::Disclosed(s.clone())
            } else {
                SegmentDisclosure::Hidden(s.digest())
            }
        })
        .collect();
    Ok(RedactedReadout {
        index: readout.index,
        sensor_public_key: readout.sensor_public_key,
        timestamp_us: readout.timestamp_us,
        location: readout.location,
        segments,
        chain_link: readout.chain_link,
        witness,
        is_checkpoint: readout.is_checkpoint,
        signature: readout.signature,
    })
}

/// Verifies a redacted readout against the final digest its stream
/// committed to: recomputes digests of disclosed segments, combines them
/// with the disclosed digests of hidden ones, re-derives the witness,
/// checks the signature, and compares `hash(signing bytes || signature)`
/// with `expected_final`. Adversarial input yields `false`.
pub fn verify_redacted(redacted: &RedactedReadout, expected_final: &FinalDigest) -> bool {
    if redacted.segments.len() != redacted.witness.segment_digests.len() {
        return false;
    }
    for (i, disclosure) in redacted.segments.iter().enumerate() {
        let digest = match disclosure {
            SegmentDisclosure::Disclosed(seg) => seg.digest(),
            SegmentDisclosure::Hidden(d) => *d,
        };
        if digest != redacted.witness.segment_digests[i] {
            return false;
        }
    }
    if redacted.signature.signer != redacted.sensor_public_key {
        return false;
    }
    // Reassemble the signed structure; segment bodies do not appear in
    // the signing bytes of witnessed readouts.
    let shell = Readout {
        index: redacted.index,
        sensor_public_key: redacted.sensor_public_key,
        timestamp_us: redacted.timestamp_us,
        location: redacted.location,
        segments: Vec::new(),
        blinding_pairs: Vec::new(),
        chain_link: redacted.chain_link,
        witness: Some(redacted.witness.clone()),
        is_checkpoint: redacted.is_checkpoint,
        signature: redacted.signature,
    };
    let signing = shell.signing_bytes();
    if !verify_signature(&redacted.signature, &redacted.sensor_public_key, &signing) {
        return false;
    }
    shell.final_digest() == *expected_final
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, RngCore, SeedableRng};

    fn key(seed: u64) -> KeyPair {
        let mut rng = StdRng::seed_from_u64(seed);
        KeyPair::generate(&mut rng)
    }

    fn sample_segments() -> Vec<Segment> {
        vec![
            Segment::new("t", b"21.5C".to_vec()),
            Segment::new("rh", b"40%".to_vec()),
            Segment::new("note", b"calibrated".to_vec()),
        ]
    }

    fn sample_pair(rng: &mut impl RngCore) -> BlindingPair {
        let mut random_number = [0u8; 32];
        rng.fill_bytes(&mut random_number);
        let mut search_key = vec![0u8; 8];
        rng.fill_bytes(&mut search_key);
        BlindingPair {
            random_number,
            search_key,
        }
    }

    /// Deterministic pseudo-random readout for property-style tests.
    pub(crate) fn random_readout(rng: &mut StdRng) -> Readout {
        let key = KeyPair::generate(rng);
        let index = rng.gen_range(0..3u64);
        let n_segments = rng.gen_range(1..4);
        let segments = (0..n_segments)
            .map(|i| {
                let len = rng.gen_range(0..12);
                let mut body = vec![0u8; len];
                rng.fill_bytes(&mut body);
                Segment::new(format!("s{i}"), body)
            })
            .collect();
        let blinding_pairs = (0..rng.gen_range(0..3))
            .map(|_| sample_pair(rng))
            .collect();
        let chain_link = (index > 0).then(|| ChainLink {
            prev_digest: Digest::from_bytes(rng.gen()),
            prev_offset: 1,
            apast_digest: rng.gen_bool(0.5).then(|| Digest::from_bytes(rng.gen())),
            apast_offset: rng.gen_range(2..10),
        });
        let location = rng.gen_bool(0.5).then(|| GeoPoint {
            lat_deg: rng.gen_range(-90.0..90.0),
            lon_deg: rng.gen_range(-180.0..180.0),
        });
        build_readout(
            &key,
            index,
            rng.gen_range(0..1_000_000_000),
            location,
            segments,
            blinding_pairs,
            chain_link,
            rng.gen_bool(0.5),
        )
        .unwrap()
    }

    #[test]
    fn genesis_checkpoint_construction() {
        let k = key(1);
        let r = build_readout(
            &k,
            0,
            1_700_000_000_000_000,
            None,
            vec![Segment::new("t", b"21.5C".to_vec())],
            vec![],
            None,
            true,
        )
        .unwrap();
        assert!(r.witness.is_some());
        assert!(r.chain_link.is_none());
        assert!(verify_signature(
            &r.signature,
            &k.public_key(),
            &r.signing_bytes()
        ));
        r.check_integrity().unwrap();
    }

    #[test]
    fn stream_mode_omits_witness() {
        let k = key(2);
        let link = ChainLink {
            prev_digest: hash(b"prev"),
            prev_offset: 1,
            apast_digest: Some(hash(b"apast")),
            apast_offset: 3,
        };
        let r = build_readout(
            &k,
            5,
            10,
            None,
            sample_segments(),
            vec![],
            Some(link),
            false,
        )
        .unwrap();
        assert!(r.witness.is_none());
        r.check_integrity().unwrap();
    }

    #[test]
    fn build_rejects_bad_inputs() {
        let k = key(3);
        assert_eq!(
            build_readout(&k, 0, 0, None, vec![], vec![], None, true).unwrap_err(),
            ReadoutError::NoSegments
        );
        let link = ChainLink {
            prev_digest: hash(b"p"),
            prev_offset: 1,
            apast_digest: None,
            apast_offset: 3,
        };
        assert_eq!(
            build_readout(
                &k,
                0,
                0,
                None,
                sample_segments(),
                vec![],
                Some(link),
                false
            )
            .unwrap_err(),
            ReadoutError::IndexLinkMismatch
        );
        assert_eq!(
            build_readout(&k, 1, 0, None, sample_segments(), vec![], None, false).unwrap_err(),
            ReadoutError::IndexLinkMismatch
        );
        let dup = vec![Segment::new("t", b"a".to_vec()), Segment::new("t", b"b".to_vec())];
        assert_eq!(
            build_readout(&k, 0, 0, None, dup, vec![], None, false).unwrap_err(),
            ReadoutError::DuplicateLabel("t".into())
        );
        assert_eq!(
            build_readout(
                &k,
                0,
                0,
                Some(GeoPoint {
                    lat_deg: f64::NAN,
                    lon_deg: 0.0
                }),
                sample_segments(),
                vec![],
                None,
                true
            )
            .unwrap_err(),
            ReadoutError::NonFiniteLocation
        );
    }

    #[test]
    fn final_digest_deterministic_and_field_sensitive() {
        let k = key(4);
        let build = |ts: i64| {
            build_readout(&k, 0, ts, None, sample_segments(), vec![], None, true).unwrap()
        };
        let a = build(100);
        let b = build(100);
        let c = build(101);
        assert_eq!(a.final_digest(), b.final_digest());
        assert_ne!(a.final_digest(), c.final_digest());
    }

    #[test]
    fn segment_byte_flip_changes_final_digest() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let r = random_readout(&mut rng);
            let before = r.final_digest();
            let mut mutated = r.clone();
            let si = rng.gen_range(0..mutated.segments.len());
            if mutated.segments[si].body.is_empty() {
                mutated.segments[si].body.push(1);
            } else {
                let bi = rng.gen_range(0..mutated.segments[si].body.len());
                mutated.segments[si].body[bi] ^= 0x20;
            }
            // Witnessed readouts bind bodies via the witness digests.
            if mutated.witness.is_some() {
                mutated.witness = Some(WitnessSection::over(
                    &mutated.segments,
                    &mutated.blinding_pairs,
                ));
            }
            assert_ne!(mutated.final_digest(), before);
        }
    }

    #[test]
    fn canonical_bytes_round_trip_and_determinism() {
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..200 {
            let r = random_readout(&mut rng);
            let bytes = r.canonical_bytes();
            assert_eq!(bytes, r.canonical_bytes());
            let parsed = Readout::from_canonical_bytes(&bytes).unwrap();
            assert_eq!(parsed, r);
        }
    }

    #[test]
    fn canonical_bytes_distinct_for_distinct_readouts() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..5_000 {
            let r = random_readout(&mut rng);
            assert!(seen.insert(r.canonical_bytes()), "encoding collision");
        }
    }

    #[test]
    fn final_digests_do_not_collide() {
        let mut rng = StdRng::seed_from_u64(8);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..10_000 {
            let r = random_readout(&mut rng);
            seen.insert(r.final_digest());
        }
        assert_eq!(seen.len(), 10_000);
    }

    #[test]
    fn truncated_canonical_bytes_name_offset() {
        let k = key(9);
        let r = build_readout(&k, 0, 0, None, sample_segments(), vec![], None, true).unwrap();
        let bytes = r.canonical_bytes();
        let err = Readout::from_canonical_bytes(&bytes[..bytes.len() - 10]).unwrap_err();
        assert!(matches!(err, CodecError::Truncated { .. }));
    }

    #[test]
    fn redact_identity_and_full() {
        let mut rng = StdRng::seed_from_u64(10);
        let k = key(10);
        let r = build_readout(
            &k,
            0,
            0,
            None,
            sample_segments(),
            vec![sample_pair(&mut rng)],
            None,
            true,
        )
        .unwrap();
        let expected = r.final_digest();

        let all = redact(&r, &["t", "rh", "note"]).unwrap();
        assert!(all
            .segments
            .iter()
            .all(|s| matches!(s, SegmentDisclosure::Disclosed(_))));
        assert!(verify_redacted(&all, &expected));

        let none = redact(&r, &[]).unwrap();
        assert!(none
            .segments
            .iter()
            .all(|s| matches!(s, SegmentDisclosure::Hidden(_))));
        assert!(verify_redacted(&none, &expected));
    }

    #[test]
    fn redact_requires_witness_and_known_labels() {
        let k = key(11);
        let link = ChainLink {
            prev_digest: hash(b"p"),
            prev_offset: 1,
            apast_digest: None,
            apast_offset: 3,
        };
        let stream = build_readout(
            &k,
            1,
            0,
            None,
            sample_segments(),
            vec![],
            Some(link),
            false,
        )
        .unwrap();
        assert_eq!(redact(&stream, &["t"]).unwrap_err(), ReadoutError::NoWitness);

        let cp = build_readout(&k, 0, 0, None, sample_segments(), vec![], None, true).unwrap();
        assert_eq!(
            redact(&cp, &["bogus"]).unwrap_err(),
            ReadoutError::UnknownLabel("bogus".into())
        );
    }

    #[test]
    fn verify_redacted_over_random_subsets() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..100 {
            let mut r = random_readout(&mut rng);
            if r.witness.is_none() {
                r = build_readout(
                    &key(rng.gen()),
                    0,
                    r.timestamp_us,
                    r.location,
                    r.segments.clone(),
                    r.blinding_pairs.clone(),
                    None,
                    true,
                )
                .unwrap();
            }
            let expected = r.final_digest();
            let labels: Vec<&str> = r
                .segments
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .map(|s| s.label.as_str())
                .collect();
            let rr = redact(&r, &labels).unwrap();
            assert!(verify_redacted(&rr, &expected));
        }
    }

    #[test]
    fn tampered_redactions_fail() {
        let k = key(13);
        let r = build_readout(&k, 0, 0, None, sample_segments(), vec![], None, true).unwrap();
        let expected = r.final_digest();

        // Modify a disclosed segment body.
        let mut rr = redact(&r, &["t", "rh"]).unwrap();
        if let SegmentDisclosure::Disclosed(seg) = &mut rr.segments[0] {
            seg.body[0] ^= 1;
        }
        assert!(!verify_redacted(&rr, &expected));

        // Alter the digest of a hidden segment.
        let mut rr = redact(&r, &["t", "rh"]).unwrap();
        if let SegmentDisclosure::Hidden(d) = &mut rr.segments[2] {
            let mut b = *d.as_bytes();
            b[5] ^= 1;
            *d = Digest::from_bytes(b);
        }
        assert!(!verify_redacted(&rr, &expected));

        // Swap the order of two witness digests (and matching segments).
        let mut rr = redact(&r, &[]).unwrap();
        rr.segments.swap(0, 1);
        rr.witness.segment_digests.swap(0, 1);
        assert!(!verify_redacted(&rr, &expected));

        // Wrong expected digest.
        let rr = redact(&r, &[]).unwrap();
        let other = build_readout(&k, 0, 1, None, sample_segments(), vec![], None, true)
            .unwrap()
            .final_digest();
        assert!(!verify_redacted(&rr, &other));
    }

    #[test]
    fn integrity_detects_witness_body_mismatch() {
        let k = key(14);
        let mut r = build_readout(&k, 0, 0, None, sample_segments(), vec![], None, true).unwrap();
        // Tamper a body without touching witness or signature: the
        // signature still verifies (it covers the witness), so the
        // witness cross-check must catch it.
        r.segments[0].body[0] ^= 1;
        assert!(verify_signature(
            &r.signature,
            &r.sensor_public_key,
            &r.signing_bytes()
        ));
        assert_eq!(r.check_integrity().unwrap_err(), IntegrityError::WitnessMismatch(0));
    }
}
