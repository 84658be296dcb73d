//! Merkle batch anchoring: many firmware digests committed under one root
//! stored on-chain, with per-device inclusion proofs checked off-chain.
//!
//! Parents are `SHA-256(left ‖ right)`. An unpaired node at the end of a
//! level is promoted unchanged, so a single-leaf tree's root is the leaf
//! itself. Leaves and internal nodes share one hash domain.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contract::{FirmwareContract, TxOptions, MERKLE_ROOT_ID};
use crate::fingerprint::{parse_hex_digest, Digest};
use crate::ledger::{Keypair, Receipt};
use crate::node::{Node, NodeError};

#[derive(Debug, thiserror::Error)]
pub enum AnchorError {
    #[error("a Merkle tree needs at least one leaf")]
    Empty,
    #[error("leaf index {index} out of range for {len} leaves")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("line {line}: invalid digest")]
    BadLine { line: usize },
    #[error("{path}: content digest {actual} does not match file name")]
    NameMismatch { path: PathBuf, actual: Digest },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub sibling: Digest,
    pub side: Side,
}

/// Inclusion proof. `leaf_count` pins the tree shape so a proof only
/// verifies at the position it was issued for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerkleProof {
    pub leaf_index: usize,
    pub leaf_count: usize,
    pub path: Vec<ProofStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleTree {
    /// `levels[0]` is the leaves; the last level holds only the root.
    levels: Vec<Vec<Digest>>,
}

pub fn hash_pair(left: &Digest, right: &Digest) -> Digest {
    Digest::of_parts(&[&left.0, &right.0])
}

fn next_level(level: &[Digest]) -> Vec<Digest> {
    level
        .chunks(2)
        .map(|pair| match pair {
            [l, r] => hash_pair(l, r),
            [single] => *single,
            _ => unreachable!(),
        })
        .collect()
}

pub fn build_tree(leaves: &[Digest]) -> Result<MerkleTree, AnchorError> {
    if leaves.is_empty() {
        return Err(AnchorError::Empty);
    }
    let mut levels = vec![leaves.to_vec()];
    while levels.last().unwrap().len() > 1 {
        let next = next_level(levels.last().unwrap());
        levels.push(next);
    }
    Ok(MerkleTree { levels })
}

impl MerkleTree {
    pub fn root(&self) -> Digest {
        self.levels.last().unwrap()[0]
    }

    pub fn leaves(&self) -> &[Digest] {
        &self.levels[0]
    }

    pub fn len(&self) -> usize {
        self.levels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn levels(&self) -> &[Vec<Digest>] {
        &self.levels
    }

    pub fn prove(&self, index: usize) -> Result<MerkleProof, AnchorError> {
        prove(self, index)
    }
}

pub fn prove(tree: &MerkleTree, index: usize) -> Result<MerkleProof, AnchorError> {
    let len = tree.len();
    if index >= len {
        return Err(AnchorError::IndexOutOfRange { index, len });
    }
    let mut path = Vec::new();
    let mut idx = index;
    for level in &tree.levels[..tree.levels.len() - 1] {
        let sib = idx ^ 1;
        if sib < level.len() {
            let side = if idx % 2 == 1 {
                Side::Left
            } else {
                Side::Right
            };
            path.push(ProofStep {
                sibling: level[sib],
                side,
            });
        }
        idx /= 2;
    }
    Ok(MerkleProof {
        leaf_index: index,
        leaf_count: len,
        path,
    })
}

/// Folds `leaf` along the proof, or `None` if the path does not have the
/// shape the claimed index and leaf count dictate.
pub fn fold_proof(leaf: &Digest, proof: &MerkleProof) -> Option<Digest> {
    if proof.leaf_index >= proof.leaf_count {
        return None;
    }
    let mut acc = *leaf;
    let mut idx = proof.leaf_index;
    let mut len = proof.leaf_count;
    let mut steps = proof.path.iter();
    while len > 1 {
        if idx ^ 1 < len {
            let step = steps.next()?;
            let expected = if idx % 2 == 1 {
                Side::Left
            } else {
                Side::Right
            };
            if step.side != expected {
                return None;
            }
            acc = match step.side {
                Side::Left => hash_pair(&step.sibling, &acc),
                Side::Right => hash_pair(&acc, &step.sibling),
            };
        }
        idx /= 2;
        len = len.div_ceil(2);
    }
    match steps.next() {
        Some(_) => None,
        None => Some(acc),
    }
}

pub fn verify_proof(leaf: &Digest, proof: &MerkleProof, root: &Digest) -> bool {
    fold_proof(leaf, proof).is_some_and(|r| r == *root)
}

/// Leaf-list file body: one lowercase hex digest per line.
pub fn leaf_file_contents(leaves: &[Digest]) -> String {
    let mut s = String::with_capacity(leaves.len() * 65);
    for d in leaves {
        s.push_str(&d.to_hex());
        s.push('\n');
    }
    s
}

pub fn parse_leaf_list(text: &str) -> Result<Vec<Digest>, AnchorError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let l = l.trim();
            parse_hex_digest(l.strip_prefix("0x").unwrap_or(l))
                .map_err(|_| AnchorError::BadLine { line: i + 1 })
        })
        .collect()
}

/// Writes the leaf list into `dir` under the hex digest of its contents.
pub fn write_leaf_file(dir: &Path, leaves: &[Digest]) -> Result<PathBuf, AnchorError> {
    let body = leaf_file_contents(leaves);
    let path = dir.join(Digest::of(body.as_bytes()).to_hex());
    fs::write(&path, body)?;
    Ok(path)
}

/// Reads a leaf list. If the file name is a digest, the contents must hash
/// to it.
pub fn read_leaf_file(path: &Path) -> Result<Vec<Digest>, AnchorError> {
    let bytes = fs::read(path)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    if let Ok(named) = parse_hex_digest(name) {
        let actual = Digest::of(&bytes);
        if actual != named {
            return Err(AnchorError::NameMismatch {
                path: path.to_path_buf(),
                actual,
            });
        }
    }
    let text = String::from_utf8_lossy(&bytes);
    parse_leaf_list(&text)
}

/// Stores `root` under the reserved `merkle-root` id.
pub fn anchor_root<N: Node>(
    contract: &FirmwareContract<N>,
    owner: &Keypair,
    root: Digest,
    opts: &TxOptions,
) -> Result<Receipt, NodeError> {
    contract.register_versioned(owner, MERKLE_ROOT_ID, root, opts)
}

/// Device-side check: local proof fold plus a free read-only comparison
/// against the anchored root.
pub fn verify_against_chain<N: Node>(
    contract: &FirmwareContract<N>,
    leaf: &Digest,
    proof: &MerkleProof,
) -> Result<bool, NodeError> {
    match fold_proof(leaf, proof) {
        Some(root) => contract.verify_versioned(MERKLE_ROOT_ID, root),
        None => Ok(false),
    }
}
