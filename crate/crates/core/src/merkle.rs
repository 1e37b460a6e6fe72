//! Merkle aggregation of final digests and self-contained inclusion proofs.
//!
//! The evidence service batches digests into a tree and anchors only the
//! root, so a verifier holding one leaf and its sibling path can recompute
//! the root and compare it against the anchored value.
//!
//! Node hashing is domain-separated: interior nodes are
//! `hash(0x01 || left || right)` while leaves enter the tree as-is, so a
//! leaf can never be confused with an interior preimage. Odd levels
//! duplicate their last digest, and a single-leaf tree's root is the leaf
//! itself.

use thiserror::Error;

use crate::codec::{CodecError, Decoder, Encoder};
use crate::crypto::{hash, Digest, DIGEST_LEN};

/// Domain byte prefixed to interior-node preimages.
const NODE_TAG: u8 = 0x01;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MerkleError {
    #[error("cannot build a tree over zero leaves")]
    EmptyLeaves,
    #[error("leaf index {index} out of range for {leaves} leaves")]
    IndexOutOfRange { index: usize, leaves: usize },
}

/// Which side of the running hash a proof sibling sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One step of a Merkle proof: the sibling digest and its side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProofStep {
    pub sibling: Digest,
    pub side: Side,
}

/// Hash of an interior node over its two children.
pub fn combine(left: &Digest, right: &Digest) -> Digest {
    let mut buf = [0u8; 1 + 2 * DIGEST_LEN];
    buf[0] = NODE_TAG;
    buf[1..33].copy_from_slice(left.as_bytes());
    buf[33..65].copy_from_slice(right.as_bytes());
    hash(&buf)
}

/// Complete tree: `levels[0]` is the leaves, the top level is the root.
#[derive(Debug, Clone)]
pub struct MerkleTree {
    levels: Vec<Vec<Digest>>,
}

impl MerkleTree {
    pub fn leaves(&self) -> &[Digest] {
        &self.levels[0]
    }

    pub fn leaf_count(&self) -> usize {
        self.levels[0].len()
    }

    pub fn root(&self) -> Digest {
        *self.levels.last().unwrap().first().unwrap()
    }
}

/// Self-contained inclusion proof; verifiable without the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleProof {
    pub leaf: Digest,
    pub path: Vec<ProofStep>,
    pub root: Digest,
}

/// Builds the tree bottom-up, duplicating the last digest of odd levels.
pub fn build_tree(leaves: &[Digest]) -> Result<MerkleTree, MerkleError> {
    if leaves.is_empty() {
        return Err(MerkleError::EmptyLeaves);
    }
    let mut levels = vec![leaves.to_vec()];
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap();
        let mut next = Vec::with_capacity(prev.len().div_ceil(2));
        for pair in prev.chunks(2) {
            let left = &pair[0];
            let right = pair.get(1).unwrap_or(left);
            next.push(combine(left, right));
        }
        levels.push(next);
    }
    Ok(MerkleTree { levels })
}

/// Produces the sibling path for `leaf_index`.
pub fn prove(tree: &MerkleTree, leaf_index: usize) -> Result<MerkleProof, MerkleError> {
    let n = tree.leaf_count();
    if leaf_index >= n {
        return Err(MerkleError::IndexOutOfRange {
            index: leaf_index,
            leaves: n,
        });
    }
    let mut path = Vec::new();
    let mut idx = leaf_index;
    for level in &tree.levels[..tree.levels.len() - 1] {
        let step = if idx % 2 == 0 {
            // Sibling on the right; the last node of an odd level pairs
            // with a copy of itself.
            ProofStep {
                sibling: *level.get(idx + 1).unwrap_or(&level[idx]),
                side: Side::Right,
            }
        } else {
            ProofStep {
                sibling: level[idx - 1],
                side: Side::Left,
            }
        };
        path.push(step);
        idx /= 2;
    }
    Ok(MerkleProof {
        leaf: tree.levels[0][leaf_index],
        path,
        root: tree.root(),
    })
}

/// Folds the leaf through the path and compares against the root.
/// Adversarial input yields `false`, never an error.
pub fn verify_proof(proof: &MerkleProof) -> bool {
    fold_path(proof.leaf, &proof.path) == proof.root
}

/// The running hash after applying every proof step to `leaf`.
pub fn fold_path(leaf: Digest, path: &[ProofStep]) -> Digest {
    let mut cur = leaf;
    for step in path {
        cur = match step.side {
            Side::Right => combine(&cur, &step.sibling),
            Side::Left => combine(&step.sibling, &cur),
        };
    }
    cur
}

impl MerkleProof {
    /// Canonical binary form: leaf, length-prefixed path (one side byte
    /// per step), root.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.put_raw(self.leaf.as_bytes());
        enc.put_u32(self.path.len() as u32);
        for step in &self.path {
            enc.put_raw(step.sibling.as_bytes());
            enc.put_u8(match step.side {
                Side::Left => 0,
                Side::Right => 1,
            });
        }
        enc.put_raw(self.root.as_bytes());
        enc.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut dec = Decoder::new(bytes);
        let leaf = Digest::from_bytes(dec.get_raw()?);
        let len = dec.get_u32()? as usize;
        let mut path = Vec::with_capacity(len.min(1024));
        for _ in 0..len {
            let sibling = Digest::from_bytes(dec.get_raw()?);
            let offset = dec.offset();
            let side = match dec.get_u8()? {
                0 => Side::Left,
                1 => Side::Right,
                _ => {
                    return Err(CodecError::Invalid {
                        offset,
                        what: "proof side flag",
                    })
                }
            };
            path.push(ProofStep { sibling, side });
        }
        let root = Digest::from_bytes(dec.get_raw()?);
        dec.finish()?;
        Ok(MerkleProof { leaf, path, root })
    }
}
