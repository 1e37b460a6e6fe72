//! In-process emulation of the digest-storage contract plus the evidence
//! service that batches final digests into Merkle roots.
//!
//! The store keeps the contract's observable behavior exactly: `store`
//! returns whether the digest was already present and records the current
//! block number only on first write; `get_stored` returns 0 for absent
//! digests; `is_stored` is `get_stored > 0`. Each successful write is its
//! own block, counting from 1, so tests are exact.
//!
//! Submission failures are first-class: a fault policy can make `store`
//! fail, modeling the case where the atomic action that should have
//! stored the evidence does not complete.

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::crypto::Digest;
use crate::merkle::{build_tree, prove, MerkleProof};
use crate::readout::FinalDigest;

/// Submission failure injected by the store's fault policy.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("anchor submission failed")]
pub struct AnchorFault;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnchorError {
    #[error("batch size must be at least 1")]
    BadBatchSize,
    #[error("duplicate digest in anchor data")]
    DuplicateDigest,
}

/// Injected-failure policy for `store`.
#[derive(Debug)]
enum FaultInjector {
    /// Fail the next `remaining` submissions, then recover.
    FailNext { remaining: u32 },
    /// Fail each submission independently with probability `p`.
    FailRandom { p: f64, rng: StdRng },
}

/// Emulated contract state: digest → block number, plus a monotone block
/// counter. Block number 0 is reserved to mean "not stored".
///
/// A store is single-owner behind `&mut`; share one between threads with
/// a mutex, which serializes calls and preserves the first-write-wins
/// semantics.
#[derive(Debug, Default)]
pub struct AnchorStore {
    digests: HashMap<Digest, u64>,
    next_block: u64,
    fault: Option<FaultInjector>,
}

impl AnchorStore {
    pub fn new() -> Self {
        AnchorStore {
            digests: HashMap::new(),
            next_block: 1,
            fault: None,
        }
    }

    /// Rebuilds a store from persisted entries. Rejects duplicates.
    pub fn from_entries(
        current_block: u64,
        entries: impl IntoIterator<Item = (Digest, u64)>,
    ) -> Result<Self, AnchorError> {
        let mut digests = HashMap::new();
        for (digest, block) in entries {
            if digests.insert(digest, block).is_some() {
                return Err(AnchorError::DuplicateDigest);
            }
        }
        Ok(AnchorStore {
            digests,
            next_block: current_block.max(1),
            fault: None,
        })
    }

    /// Fail the next `n` submissions.
    pub fn fail_next(&mut self, n: u32) {
        self.fault = Some(FaultInjector::FailNext { remaining: n });
    }

    /// Fail each submission independently with probability `p`.
    pub fn fail_with_probability(&mut self, p: f64, seed: u64) {
        self.fault = Some(FaultInjector::FailRandom {
            p,
            rng: StdRng::seed_from_u64(seed),
        });
    }

    pub fn clear_fault(&mut self) {
        self.fault = None;
    }

    fn fault_fires(&mut self) -> bool {
        match &mut self.fault {
            Some(FaultInjector::FailNext { remaining }) => {
                if *remaining > 0 {
                    *remaining -= 1;
                    true
                } else {
                    false
                }
            }
            Some(FaultInjector::FailRandom { p, rng }) => rng.gen_bool(*p),
            None => false,
        }
    }

    /// Contract `store`: returns true iff the digest was already present;
    /// otherwise records the current block against it and advances the
    /// counter. Re-storing never overwrites.
    pub fn store(&mut self, digest: Digest) -> Result<bool, AnchorFault> {
        if self.fault_fires() {
            return Err(AnchorFault);
        }
        let already = self.digests.contains_key(&digest);
        if !already {
            self.digests.insert(digest, self.next_block);
            self.next_block += 1;
        }
        Ok(already)
    }

    /// Contract `getStored`: the recorded block number, or 0 if absent.
    pub fn get_stored(&self, digest: &Digest) -> u64 {
        self.digests.get(digest).copied().unwrap_or(0)
    }

    /// Contract `isStored`.
    pub fn is_stored(&self, digest: &Digest) -> bool {
        self.get_stored(digest) > 0
    }

    pub fn len(&self) -> usize {
        self.digests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digests.is_empty()
    }

    pub fn current_block(&self) -> u64 {
        self.next_block
    }

    /// Entries ordered by block number, for stable serialization.
    pub fn entries_by_block(&self) -> Vec<(Digest, u64)> {
        let mut entries: Vec<_> = self.digests.iter().map(|(d, b)| (*d, *b)).collect();
        entries.sort_by_key(|(_, b)| *b);
        entries
    }
}

/// Proof that one final digest is covered by an anchored Merkle root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorReceipt {
    /// The anchored digest (the Merkle root over the flushed batch).
    pub digest: Digest,
    pub block_number: u64,
    /// Root → leaf linkage for the receipted final digest.
    pub proof: MerkleProof,
}

impl AnchorReceipt {
    /// The final digest this receipt covers.
    pub fn leaf(&self) -> Digest {
        self.proof.leaf
    }
}

/// Result of queueing one digest with the evidence service.
#[derive(Debug)]
pub enum SubmitOutcome {
    /// Queued; receipts will be issued when the batch flushes.
    Pending,
    /// The batch flushed; receipts cover every digest it held.
    Flushed(Vec<AnchorReceipt>),
}

/// Batches final digests and anchors one Merkle root per flush.
///
/// A failed flush leaves every queued digest pending; no subset of a
/// batch is ever anchored.
#[derive(Debug)]
pub struct EvidenceBatch {
    pending: Vec<Digest>,
    batch_size: usize,
}

impl EvidenceBatch {
    pub fn new(batch_size: usize) -> Result<Self, AnchorError> {
        if batch_size == 0 {
            return Err(AnchorError::BadBatchSize);
        }
        Ok(EvidenceBatch {
            pending: Vec::new(),
            batch_size,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn pending(&self) -> &[Digest] {
        &self.pending
    }

    /// Queues a digest; flushes when the queue reaches the batch size.
    pub fn submit(
        &mut self,
        store: &mut AnchorStore,
        digest: FinalDigest,
    ) -> Result<SubmitOutcome, AnchorFault> {
        self.pending.push(digest.digest());
        if self.pending.len() >= self.batch_size {
            return Ok(SubmitOutcome::Flushed(self.flush(store)?));
        }
        Ok(SubmitOutcome::Pending)
    }

    /// Anchors the pending digests under one Merkle root and issues a
    /// receipt per digest. On failure the queue is left intact.
    pub fn flush(&mut self, store: &mut AnchorStore) -> Result<Vec<AnchorReceipt>, AnchorFault> {
        if self.pending.is_empty() {
            return Ok(Vec::new());
        }
        let tree = build_tree(&self.pending).expect("pending is non-empty");
        let root = tree.root();
        store.store(root)?;
        let block_number = store.get_stored(&root);
        let receipts = (0..self.pending.len())
            .map(|i| AnchorReceipt {
                digest: root,
                block_number,
                proof: prove(&tree, i).expect("index in range"),
            })
            .collect();
        self.pending.clear();
        Ok(receipts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::hash;
    use crate::merkle::verify_proof;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn fd(data: &[u8]) -> FinalDigest {
        // Fabricate a final digest through a readout-free path: tests
        // here only care about 32-byte values.
        let k = crate::crypto::KeyPair::from_seed([7u8; 32]);
        let r = crate::readout::build_readout(
            &k,
            0,
            0,
            None,
            vec![crate::readout::Segment::new("d", data.to_vec())],
            vec![],
            None,
            true,
        )
        .unwrap();
        r.final_digest()
    }

    #[test]
    fn contract_store_get_is_stored() {
        let mut store = AnchorStore::new();
        let d = hash(b"digest");
        assert!(!store.is_stored(&d));
        assert_eq!(store.get_stored(&d), 0);

        assert!(!store.store(d).unwrap());
        assert_eq!(store.get_stored(&d), 1);
        assert!(store.is_stored(&d));

        // Re-store returns true and never overwrites.
        assert!(store.store(d).unwrap());
        assert_eq!(store.get_stored(&d), 1);

        let d2 = hash(b"second");
        assert!(!store.store(d2).unwrap());
        assert_eq!(store.get_stored(&d2), 2);
    }

    #[test]
    fn is_stored_equivalent_to_get_stored_positive() {
        let mut store = AnchorStore::new();
        let mut rng = StdRng::seed_from_u64(20);
        let pool: Vec<Digest> = (0..32).map(|i| hash(&[i])).collect();
        for _ in 0..2_000 {
            let d = pool[rng.gen_range(0..pool.len())];
            if rng.gen_bool(0.5) {
                let _ = store.store(d);
            }
            assert_eq!(store.is_stored(&d), store.get_stored(&d) > 0);
        }
    }

    #[test]
    fn fail_next_then_recover() {
        let mut store = AnchorStore::new();
        store.fail_next(2);
        let d = hash(b"x");
        assert_eq!(store.store(d), Err(AnchorFault));
        assert_eq!(store.store(d), Err(AnchorFault));
        assert_eq!(store.store(d), Ok(false));
        assert!(store.is_stored(&d));
    }

    #[test]
    fn batch_of_one_yields_immediate_receipt_with_empty_path() {
        let mut store = AnchorStore::new();
        let mut batch = EvidenceBatch::new(1).unwrap();
        let digest = fd(b"single");
        match batch.submit(&mut store, digest).unwrap() {
            SubmitOutcome::Flushed(receipts) => {
                assert_eq!(receipts.len(), 1);
                let r = &receipts[0];
                assert!(r.proof.path.is_empty());
                assert_eq!(r.digest, digest.digest());
                assert_eq!(r.leaf(), digest.digest());
                assert!(verify_proof(&r.proof));
                assert!(store.is_stored(&r.digest));
                assert_eq!(store.get_stored(&r.digest), r.block_number);
            }
            SubmitOutcome::Pending => panic!("batch of one must flush"),
        }
    }

    #[test]
    fn batch_of_four_anchors_one_root() {
        let mut store = AnchorStore::new();
        let mut batch = EvidenceBatch::new(4).unwrap();
        let digests: Vec<FinalDigest> = (0..4).map(|i| fd(&[i])).collect();
        for d in &digests[..3] {
            assert!(matches!(
                batch.submit(&mut store, *d).unwrap(),
                SubmitOutcome::Pending
            ));
        }
        let receipts = match batch.submit(&mut store, digests[3]).unwrap() {
            SubmitOutcome::Flushed(r) => r,
            SubmitOutcome::Pending => panic!("fourth submission must flush"),
        };
        assert_eq!(receipts.len(), 4);
        assert_eq!(store.len(), 1);
        for (i, r) in receipts.iter().enumerate() {
            assert_eq!(r.leaf(), digests[i].digest());
            assert_eq!(r.proof.root, r.digest);
            assert!(verify_proof(&r.proof));
            assert!(store.is_stored(&r.digest));
        }
        assert!(batch.pending().is_empty());
    }

    #[test]
    fn failed_flush_is_atomic() {
        let mut store = AnchorStore::new();
        let mut batch = EvidenceBatch::new(4).unwrap();
        for i in 0..3 {
            batch.submit(&mut store, fd(&[i])).unwrap();
        }
        store.fail_next(1);
        assert!(matches!(batch.submit(&mut store, fd(&[3])), Err(AnchorFault)));
        assert_eq!(batch.pending().len(), 4);
        assert_eq!(store.len(), 0);

        // Retry succeeds and anchors the whole batch.
        let receipts = batch.flush(&mut store).unwrap();
        assert_eq!(receipts.len(), 4);
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn duplicate_entries_rejected() {
        let d = hash(b"dup");
        assert_eq!(
            AnchorStore::from_entries(3, vec![(d, 1), (d, 2)]).unwrap_err(),
            AnchorError::DuplicateDigest
        );
    }

    #[test]
    fn concurrent_stores_serialize_behind_mutex() {
        use std::sync::{Arc, Mutex};
        let store = Arc::new(Mutex::new(AnchorStore::new()));
        let handles: Vec<_> = (0..4u8)
            .map(|t| {
                let store = Arc::clone(&store);
                std::thread::spawn(move || {
                    for i in 0..50u8 {
                        store.lock().unwrap().store(hash(&[t, i])).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let store = store.lock().unwrap();
        assert_eq!(store.len(), 200);
        // Every block number 1..=200 assigned exactly once.
        let mut blocks: Vec<u64> = store.entries_by_block().iter().map(|(_, b)| *b).collect();
        blocks.dedup();
        assert_eq!(blocks.len(), 200);
        assert_eq!(store.current_block(), 201);
    }
}
