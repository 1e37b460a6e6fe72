//! Stateful construction of a readout stream: previous + a-past digest
//! links, checkpoints every `s` readouts, and the atomic action that
//! submits checkpoint evidence to the anchor.
//!
//! The digest relation over indices forms a DAG with edges `i → i-1` and
//! `i → i-a` only. With `a = 1` the redundant link is omitted entirely,
//! so the structure degenerates to a singly linked list.

use std::collections::VecDeque;

use thiserror::Error;

use crate::anchor::{AnchorReceipt, AnchorStore, EvidenceBatch, SubmitOutcome};
use crate::crypto::KeyPair;
use crate::readout::{
    build_readout, BlindingPair, ChainLink, FinalDigest, GeoPoint, Readout, ReadoutError, Segment,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("a-past offset must be at least 1")]
    BadApastOffset,
    #[error("checkpoint interval must be at least 1")]
    BadCheckpointInterval,
    #[error(transparent)]
    Readout(#[from] ReadoutError),
}

/// Stream parameters: `a` is the a-past offset, `s` the checkpoint
/// interval in readouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainConfig {
    a: u64,
    s: u64,
}

impl ChainConfig {
    pub fn new(a: u64, s: u64) -> Result<Self, ChainError> {
        if a < 1 {
            return Err(ChainError::BadApastOffset);
        }
        if s < 1 {
            return Err(ChainError::BadCheckpointInterval);
        }
        Ok(ChainConfig { a, s })
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn s(&self) -> u64 {
        self.s
    }
}

/// True iff a readout at `index` is a checkpoint under interval `s`:
/// the s-th, 2s-th, ... readouts, so `s = 1` makes every readout a
/// checkpoint.
pub fn is_checkpoint_index(index: u64, s: u64) -> bool {
    assert!(s >= 1, "checkpoint interval must be at least 1");
    (index + 1) % s == 0
}

/// Outcome of one emission: the readout plus whether its evidence made it
/// to the anchor. A failed or deferred submission is not an error; the
/// readout is still emitted and a later checkpoint covers the stream.
#[derive(Debug)]
pub struct AtomicActionResult {
    pub readout: Readout,
    /// True iff this readout's final digest was anchored by this action.
    pub anchored: bool,
    /// Receipt for this readout's digest, when anchored.
    pub anchor_receipt: Option<AnchorReceipt>,
    /// Every receipt issued by this action's flush, including ones for
    /// digests queued by earlier checkpoints.
    pub flushed_receipts: Vec<AnchorReceipt>,
}

/// Single-owner emitter for one sensor's stream. Emissions are strictly
/// sequential; distinct chains may run on distinct threads.
#[derive(Debug)]
pub struct ChainState {
    config: ChainConfig,
    key: KeyPair,
    next_index: u64,
    /// Final digests of the last `a` readouts, newest first.
    recent: VecDeque<FinalDigest>,
}

impl ChainState {
    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn public_key(&self) -> crate::crypto::PublicKey {
        self.key.public_key()
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Final digest of the most recent emission, if any. Useful for
    /// sporadic (non-checkpoint) anchoring via
    /// [`EvidenceBatch::submit`].
    pub fn last_digest(&self) -> Option<FinalDigest> {
        self.recent.front().copied()
    }
}

/// Fresh chain at index 0.
pub fn new_chain(config: ChainConfig, key: KeyPair) -> ChainState {
    ChainState {
        config,
        key,
        next_index: 0,
        recent: VecDeque::with_capacity(config.a() as usize),
    }
}

impl ChainState {
    /// Emits the next readout. Links it to the previous digest (absent at
    /// index 0) and the a-past digest (absent while `index < a`, and
    /// omitted entirely when `a = 1`). On checkpoints the final digest is
    /// submitted to the anchor as part of the same action; an anchor
    /// failure surfaces as `anchored = false`, never as an error.
    pub fn emit(
        &mut self,
        timestamp_us: i64,
        location: Option<GeoPoint>,
        segments: Vec<Segment>,
        blinding_pairs: Vec<BlindingPair>,
        batch: &mut EvidenceBatch,
        store: &mut AnchorStore,
    ) -> Result<AtomicActionResult, ChainError> {
        let index = self.next_index;
        let a = self.config.a();
        let chain_link = (index > 0).then(|| ChainLink {
            prev_digest: self.recent[0].digest(),
            prev_offset: 1,
            apast_digest: (a >= 2 && index >= a).then(|| self.recent[a as usize - 1].digest()),
            apast_offset: a,
        });
        let is_checkpoint = is_checkpoint_index(index, self.config.s());
        let readout = build_readout(
            &self.key,
            index,
            timestamp_us,
            location,
            segments,
            blinding_pairs,
            chain_link,
            is_checkpoint,
        )?;
        let digest = readout.final_digest();

        let mut anchored = false;
        let mut anchor_receipt = None;
        let mut flushed_receipts = Vec::new();
        if is_checkpoint {
            match batch.submit(store, digest) {
                Ok(SubmitOutcome::Flushed(receipts)) => {
                    anchor_receipt = receipts
                        .iter()
                        .find(|r| r.leaf() == digest.digest())
                        .cloned();
                    anchored = anchor_receipt.is_some();
                    flushed_receipts = receipts;
                }
                Ok(SubmitOutcome::Pending) => {}
                Err(_fault) => {}
            }
        }

        self.recent.push_front(digest);
        self.recent.truncate(a as usize);
        self.next_index += 1;

        Ok(AtomicActionResult {
            readout,
            anchored,
            anchor_receipt,
            flushed_receipts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn key(seed: u64) -> KeyPair {
        let mut rng = StdRng::seed_from_u64(seed);
        KeyPair::generate(&mut rng)
    }

    fn emit_n(
        chain: &mut ChainState,
        batch: &mut EvidenceBatch,
        store: &mut AnchorStore,
        n: u64,
    ) -> Vec<AtomicActionResult> {
        (0..n)
            .map(|i| {
                chain
                    .emit(
                        i as i64 * 1_000,
                        None,
                        vec![Segment::new("v", i.to_be_bytes().to_vec())],
                        vec![],
                        batch,
                        store,
                    )
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(3, 100).is_ok());
        assert_eq!(ChainConfig::new(0, 100).unwrap_err(), ChainError::BadApastOffset);
        assert_eq!(
            ChainConfig::new(3, 0).unwrap_err(),
            ChainError::BadCheckpointInterval
        );
        // Every readout a checkpoint is a valid configuration.
        assert!(ChainConfig::new(10, 1).is_ok());
    }

    #[test]
    fn new_chain_starts_empty() {
        let chain = new_chain(ChainConfig::new(3, 100).unwrap(), key(1));
        assert_eq!(chain.next_index(), 0);
        assert!(chain.last_digest().is_none());
    }

    #[test]
    fn checkpoint_index_rule() {
        assert!((0..50).all(|i| is_checkpoint_index(i, 1)));
        assert!(is_checkpoint_index(99, 100));
        assert!(!is_checkpoint_index(100, 100));
        let cps: Vec<u64> = (0..10).filter(|&i| is_checkpoint_index(i, 5)).collect();
        assert_eq!(cps, vec![4, 9]);
    }

    #[test]
    fn links_reference_prev_and_apast_digests() {
        let mut chain = new_chain(ChainConfig::new(3, 5).unwrap(), key(2));
        let mut batch = EvidenceBatch::new(1).unwrap();
        let mut store = AnchorStore::new();
        let results = emit_n(&mut chain, &mut batch, &mut store, 8);

        assert!(results[0].readout.chain_link.is_none());
        for i in 1..8usize {
            let link = results[i].readout.chain_link.as_ref().unwrap();
            assert_eq!(link.prev_digest, results[i - 1].readout.final_digest().digest());
            assert_eq!(link.prev_offset, 1);
            assert_eq!(link.apast_offset, 3);
            if i >= 3 {
                assert_eq!(
                    link.apast_digest.unwrap(),
                    results[i - 3].readout.final_digest().digest()
                );
            } else {
                assert!(link.apast_digest.is_none());
            }
        }
        // Spot check from the example: index 5 links to digests of 4 and 2.
        let link5 = results[5].readout.chain_link.as_ref().unwrap();
        assert_eq!(link5.prev_digest, results[4].readout.final_digest().digest());
        assert_eq!(
            link5.apast_digest.unwrap(),
            results[2].readout.final_digest().digest()
        );
    }

    #[test]
    fn checkpoint_density_is_floor_n_over_s() {
        for (n, s) in [(10u64, 5u64), (11, 5), (9, 5), (100, 7), (5, 1)] {
            let mut chain = new_chain(ChainConfig::new(2, s).unwrap(), key(3));
            let mut batch = EvidenceBatch::new(1).unwrap();
            let mut store = AnchorStore::new();
            let results = emit_n(&mut chain, &mut batch, &mut store, n);
            let checkpoints = results.iter().filter(|r| r.readout.is_checkpoint).count();
            assert_eq!(checkpoints as u64, n / s, "n={n} s={s}");
        }
    }

    #[test]
    fn every_emit_anchors_when_s_is_one() {
        let mut chain = new_chain(ChainConfig::new(3, 1).unwrap(), key(4));
        let mut batch = EvidenceBatch::new(1).unwrap();
        let mut store = AnchorStore::new();
        let results = emit_n(&mut chain, &mut batch, &mut store, 10);
        assert!(results.iter().all(|r| r.anchored));
        assert_eq!(store.len(), 10);
        for r in &results {
            let receipt = r.anchor_receipt.as_ref().unwrap();
            assert!(store.is_stored(&receipt.digest));
        }
    }

    #[test]
    fn a_of_one_omits_redundant_link() {
        let mut chain = new_chain(ChainConfig::new(1, 5).unwrap(), key(5));
        let mut batch = EvidenceBatch::new(1).unwrap();
        let mut store = AnchorStore::new();
        let results = emit_n(&mut chain, &mut batch, &mut store, 6);
        for r in &results[1..] {
            let link = r.readout.chain_link.as_ref().unwrap();
            assert!(link.apast_digest.is_none());
            assert_eq!(link.apast_offset, 1);
        }
    }

    #[test]
    fn anchor_failure_still_emits() {
        let mut chain = new_chain(ChainConfig::new(2, 2).unwrap(), key(6));
        let mut batch = EvidenceBatch::new(1).unwrap();
        let mut store = AnchorStore::new();
        store.fail_next(1);
        let results = emit_n(&mut chain, &mut batch, &mut store, 4);
        // Index 1 is a checkpoint whose submission failed.
        assert!(results[1].readout.is_checkpoint);
        assert!(!results[1].anchored);
        assert!(results[1].anchor_receipt.is_none());
        // The stream kept going and the next checkpoint anchored; the
        // failed digest stayed pending in the batch and was flushed with
        // the next checkpoint's submission.
        assert!(results[3].anchored);
        assert_eq!(results[3].flushed_receipts.len(), 2);
        assert_eq!(chain.next_index(), 4);
    }

    #[test]
    fn backward_edges_form_a_dag() {
        let mut chain = new_chain(ChainConfig::new(4, 3).unwrap(), key(7));
        let mut batch = EvidenceBatch::new(1).unwrap();
        let mut store = AnchorStore::new();
        let results = emit_n(&mut chain, &mut batch, &mut store, 12);
        for (i, r) in results.iter().enumerate() {
            if let Some(link) = &r.readout.chain_link {
                assert_eq!(link.prev_offset, 1);
                assert!(i >= 1);
                if link.apast_digest.is_some() {
                    // Edge i → i-a only exists once i ≥ a.
                    assert!(i as u64 >= link.apast_offset);
                    assert!(link.apast_offset >= 2);
                }
            } else {
                assert_eq!(i, 0);
            }
        }
    }
}
