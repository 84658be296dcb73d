//! Admitted transactions awaiting inclusion.
//!
//! Selection order is gas price descending, then arrival ascending, over
//! each sender's lowest pending nonce so per-sender nonce order is kept.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashSet, VecDeque};

use super::types::{Address, Gas, SignedTransaction, TxHash, Wei};

#[derive(Debug, Clone)]
pub struct PendingTx {
    pub tx: SignedTransaction,
    pub hash: TxHash,
    pub arrival_seq: u64,
    pub arrival_ms: u64,
}

impl PendingTx {
    /// Worst-case debit: full gas limit at the offered price plus value.
    pub fn max_cost(&self) -> Wei {
        max_cost(&self.tx)
    }
}

pub fn max_cost(tx: &SignedTransaction) -> Wei {
    (tx.tx.gas_limit as Wei)
        .saturating_mul(tx.tx.gas_price)
        .saturating_add(tx.tx.value)
}

#[derive(Debug, Default, Clone)]
pub struct Mempool {
    by_sender: BTreeMap<Address, VecDeque<PendingTx>>,
    hashes: HashSet<TxHash>,
    next_seq: u64,
}

impl Mempool {
    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }

    pub fn contains(&self, hash: &TxHash) -> bool {
        self.hashes.contains(hash)
    }

    /// Nonce following the sender's last pending transaction.
    pub fn next_nonce(&self, sender: &Address) -> Option<u64> {
        self.by_sender
            .get(sender)
            .and_then(|q| q.back())
            .map(|p| p.tx.tx.nonce + 1)
    }

    pub fn pending_cost(&self, sender: &Address) -> Wei {
        self.by_sender
            .get(sender)
            .map(|q| {
                q.iter()
                    .map(PendingTx::max_cost)
                    .fold(0, Wei::saturating_add)
            })
            .unwrap_or(0)
    }

    /// Caller guarantees the nonce directly follows the sender's queue.
    pub fn insert(&mut self, tx: SignedTransaction, arrival_ms: u64) -> TxHash {
        let hash = tx.hash();
        let seq = self.next_seq;
        self.next_seq += 1;
        self.hashes.insert(hash);
        self.by_sender
            .entry(tx.tx.from)
            .or_default()
            .push_back(PendingTx {
                tx,
                hash,
                arrival_seq: seq,
                arrival_ms,
            });
        hash
    }

    /// Removes and returns the transactions for the next block.
    pub fn select(&mut self, block_gas_limit: Gas) -> Vec<PendingTx> {
        let mut out = Vec::new();
        let mut budget = block_gas_limit;
        let mut blocked: HashSet<Address> = HashSet::new();
        loop {
            let best = self
                .by_sender
                .iter()
                .filter(|(addr, _)| !blocked.contains(*addr))
                .filter_map(|(addr, q)| q.front().map(|p| (*addr, p)))
                .max_by_key(|(_, p)| (p.tx.tx.gas_price, Reverse(p.arrival_seq)))
                .map(|(addr, p)| (addr, p.tx.tx.gas_limit));
            let Some((sender, gas_limit)) = best else {
                break;
            };
            if gas_limit > budget {
                // Later nonces of this sender cannot go before this one.
                blocked.insert(sender);
                continue;
            }
            budget -= gas_limit;
            let queue = self.by_sender.get_mut(&sender).unwrap();
            let pending = queue.pop_front().unwrap();
            if queue.is_empty() {
                self.by_sender.remove(&sender);
            }
            self.hashes.remove(&pending.hash);
            out.push(pending);
        }
        out
    }
}
