//! Node access: one trait over the in-process ledger and the HTTP gateway
//! client, so the same client code runs against either.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use parking_lot::{Mutex, RwLock};

use crate::fingerprint::Digest;
use crate::ledger::store::ChainStore;
use crate::ledger::{
    Address, Block, Event, Gas, GenesisConfig, Ledger, LedgerError, Receipt, ReceiptStatus,
    SignedTransaction, TxHash, UnsignedTransaction, Wei,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NodeError {
    /// Admission refused; the message starts with the rejection id.
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("not-found")]
    NotFound,
    #[error("reverted: {0}")]
    Reverted(String),
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("timeout waiting for {0}")]
    Timeout(String),
    #[error("rpc error {code}: {message}")]
    Rpc { code: i64, message: String },
    #[error("{0}")]
    Other(String),
}

impl NodeError {
    /// Identifier such as `nonce-reuse` for rejections.
    pub fn rejection_id(&self) -> Option<&str> {
        match self {
            NodeError::Rejected(m) => Some(m.split(':').next().unwrap_or(m).trim()),
            _ => None,
        }
    }
}

impl From<LedgerError> for NodeError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::Rejected(r) => NodeError::Rejected(r.to_string()),
            LedgerError::NotFound => NodeError::NotFound,
            LedgerError::Reverted(r) => NodeError::Reverted(r),
            other => NodeError::Other(other.to_string()),
        }
    }
}

pub trait Node {
    fn is_connected(&self) -> bool;
    fn chain_id(&self) -> Result<u64, NodeError>;
    fn block_number(&self) -> Result<u64, NodeError>;
    fn balance(&self, address: &Address) -> Result<Wei, NodeError>;
    /// Next usable nonce, counting pending transactions.
    fn nonce(&self, address: &Address) -> Result<u64, NodeError>;
    fn gas_price(&self, method: &str) -> Result<Wei, NodeError>;
    fn estimate_gas(&self, tx: &UnsignedTransaction) -> Result<Gas, NodeError>;
    fn send_transaction(&self, tx: &SignedTransaction) -> Result<TxHash, NodeError>;
    fn call(&self, from: Address, to: &Address, data: &[u8]) -> Result<Vec<u8>, NodeError>;
    /// `None` while pending.
    fn receipt(&self, hash: &TxHash) -> Result<Option<Receipt>, NodeError>;
    fn block(&self, number: u64) -> Result<Option<Block>, NodeError>;
    fn logs(
        &self,
        contract: &Address,
        from_block: u64,
        to_block: u64,
    ) -> Result<Vec<Event>, NodeError>;
    fn state_root(&self) -> Result<Digest, NodeError>;

    fn wait_for_receipt(&self, hash: &TxHash, timeout: Duration) -> Result<Receipt, NodeError> {
        let deadline = Instant::now() + timeout;
        loop {
            if let Some(r) = self.receipt(hash)? {
                return Ok(r);
            }
            if Instant::now() >= deadline {
                return Err(NodeError::Timeout(format!("receipt {hash}")));
            }
            thread::sleep(Duration::from_millis(25));
        }
    }
}

impl<N: Node + ?Sized> Node for &N {
    fn is_connected(&self) -> bool {
        (**self).is_connected()
    }
    fn chain_id(&self) -> Result<u64, NodeError> {
        (**self).chain_id()
    }
    fn block_number(&self) -> Result<u64, NodeError> {
        (**self).block_number()
    }
    fn balance(&self, a: &Address) -> Result<Wei, NodeError> {
        (**self).balance(a)
    }
    fn nonce(&self, a: &Address) -> Result<u64, NodeError> {
        (**self).nonce(a)
    }
    fn gas_price(&self, m: &str) -> Result<Wei, NodeError> {
        (**self).gas_price(m)
    }
    fn estimate_gas(&self, tx: &UnsignedTransaction) -> Result<Gas, NodeError> {
        (**self).estimate_gas(tx)
    }
    fn send_transaction(&self, tx: &SignedTransaction) -> Result<TxHash, NodeError> {
        (**self).send_transaction(tx)
    }
    fn call(&self, from: Address, to: &Address, data: &[u8]) -> Result<Vec<u8>, NodeError> {
        (**self).call(from, to, data)
    }
    fn receipt(&self, h: &TxHash) -> Result<Option<Receipt>, NodeError> {
        (**self).receipt(h)
    }
    fn block(&self, n: u64) -> Result<Option<Block>, NodeError> {
        (**self).block(n)
    }
    fn logs(&self, c: &Address, f: u64, t: u64) -> Result<Vec<Event>, NodeError> {
        (**self).logs(c, f, t)
    }
    fn state_root(&self) -> Result<Digest, NodeError> {
        (**self).state_root()
    }
    fn wait_for_receipt(&self, h: &TxHash, timeout: Duration) -> Result<Receipt, NodeError> {
        (**self).wait_for_receipt(h, timeout)
    }
}

/// How blocks get produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiningMode {
    /// Every accepted transaction is sealed immediately in its own block,
    /// on the simulated clock, and is final at once.
    Instant,
    /// Blocks are sealed by [`LocalNode::tick`] or a wall-clock ticker.
    Interval,
}

#[derive(Debug)]
enum Clock {
    Simulated,
    Wall { start: Instant, offset_ms: u64 },
}

struct Shared {
    ledger: RwLock<Ledger>,
    mode: MiningMode,
    clock: Clock,
    store: Mutex<Option<ChainStore>>,
    stop: AtomicBool,
}

/// An in-process node: a ledger behind a single-writer lock.
#[derive(Clone)]
pub struct LocalNode {
    shared: Arc<Shared>,
}

impl std::fmt::Debug for LocalNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalNode")
            .field("mode", &self.shared.mode)
            .field("clock", &self.shared.clock)
            .finish_non_exhaustive()
    }
}

impl LocalNode {
    fn build(ledger: Ledger, mode: MiningMode, clock: Clock) -> Self {
        LocalNode {
            shared: Arc::new(Shared {
                ledger: RwLock::new(ledger),
                mode,
                clock,
                store: Mutex::new(None),
                stop: AtomicBool::new(false),
            }),
        }
    }

    /// Instant-mine node on the simulated clock.
    pub fn instant(genesis: GenesisConfig) -> Self {
        Self::from_ledger(Ledger::new(genesis), MiningMode::Instant)
    }

    /// Simulated clock; in `Interval` mode the caller drives [`tick`](Self::tick).
    pub fn from_ledger(ledger: Ledger, mode: MiningMode) -> Self {
        Self::build(ledger, mode, Clock::Simulated)
    }

    /// Interval mining on the wall clock, continuing after the ledger's
    /// latest timestamp. Call [`spawn_ticker`](Self::spawn_ticker) to mine.
    pub fn realtime(ledger: Ledger) -> Self {
        let offset_ms = ledger.now_ms();
        Self::build(
            ledger,
            MiningMode::Interval,
            Clock::Wall {
                start: Instant::now(),
                offset_ms,
            },
        )
    }

    /// Persists every subsequently sealed block to `store`.
    pub fn with_store(self, store: ChainStore) -> Self {
        *self.shared.store.lock() = Some(store);
        self
    }

    pub fn mode(&self) -> MiningMode {
        self.shared.mode
    }

    pub fn now_ms(&self) -> u64 {
        match &self.shared.clock {
            Clock::Simulated => self.shared.ledger.read().now_ms(),
            Clock::Wall { start, offset_ms } => offset_ms + start.elapsed().as_millis() as u64,
        }
    }

    pub fn read<R>(&self, f: impl FnOnce(&Ledger) -> R) -> R {
        f(&self.shared.ledger.read())
    }

    /// Direct mutable access, bypassing mining and persistence.
    pub fn write<R>(&self, f: impl FnOnce(&mut Ledger) -> R) -> R {
        f(&mut self.shared.ledger.write())
    }

    fn persist(&self, block: &Block) {
        if let Some(store) = self.shared.store.lock().as_mut() {
            if let Err(e) = store.append(block) {
                tracing::error!("failed to persist block {}: {e}", block.number());
            }
        }
    }

    /// Seals a block at `now_ms` if the interval has elapsed.
    pub fn tick(&self, now_ms: u64) -> Result<Option<Block>, NodeError> {
        let mut ledger = self.shared.ledger.write();
        ledger.advance_time(now_ms);
        if now_ms < ledger.next_block_time() {
            return Ok(None);
        }
        let block = ledger.produce_block(now_ms)?.clone();
        drop(ledger);
        self.persist(&block);
        Ok(Some(block))
    }

    /// Background thread sealing a block every interval of wall time.
    pub fn spawn_ticker(&self) -> thread::JoinHandle<()> {
        let node = self.clone();
        thread::spawn(move || {
            while !node.shared.stop.load(Ordering::Relaxed) {
                let next = node.read(|l| l.next_block_time());
                let now = node.now_ms();
                if now >= next {
                    if let Err(e) = node.tick(now) {
                        tracing::error!("block production failed: {e}");
                    }
                } else {
                    thread::sleep(Duration::from_millis((next - now).min(50)));
                }
            }
        })
    }

    /// Stops the ticker and syncs the chain file.
    pub fn shutdown(&self) {
        self.shared.stop.store(true, Ordering::Relaxed);
        if let Some(store) = self.shared.store.lock().as_mut() {
            if let Err(e) = store.sync() {
                tracing::error!("failed to sync chain file: {e}");
            }
        }
    }
}

impl Node for LocalNode {
    fn is_connected(&self) -> bool {
        true
    }

    fn chain_id(&self) -> Result<u64, NodeError> {
        Ok(self.read(|l| l.profile().chain_id))
    }

    fn block_number(&self) -> Result<u64, NodeError> {
        Ok(self.read(|l| l.head().number()))
    }

    fn balance(&self, address: &Address) -> Result<Wei, NodeError> {
        Ok(self.read(|l| l.balance(address)))
    }

    fn nonce(&self, address: &Address) -> Result<u64, NodeError> {
        Ok(self.read(|l| l.next_nonce(address)))
    }

    fn gas_price(&self, method: &str) -> Result<Wei, NodeError> {
        Ok(self.read(|l| l.profile().gas_price_hint(method)))
    }

    fn estimate_gas(&self, tx: &UnsignedTransaction) -> Result<Gas, NodeError> {
        Ok(self.read(|l| l.estimate_gas(tx)))
    }

    fn send_transaction(&self, tx: &SignedTransaction) -> Result<TxHash, NodeError> {
        let now = self.now_ms();
        let mut ledger = self.shared.ledger.write();
        let hash = ledger
            .submit_transaction(tx.clone(), now)
            .map_err(LedgerError::from)?;
        if self.shared.mode == MiningMode::Instant {
            let at = ledger.now_ms().max(ledger.next_block_time());
            let block = ledger.produce_block(at)?.clone();
            let finality = ledger.profile().finality_delay_ms;
            ledger.advance_time(at + finality);
            drop(ledger);
            self.persist(&block);
        }
        Ok(hash)
    }

    fn call(&self, from: Address, to: &Address, data: &[u8]) -> Result<Vec<u8>, NodeError> {
        Ok(self.read(|l| l.execute_call(from, to, data))?)
    }

    fn receipt(&self, hash: &TxHash) -> Result<Option<Receipt>, NodeError> {
        let now = self.now_ms();
        match self.read(|l| l.receipt_at(hash, now))? {
            ReceiptStatus::Final(r) => Ok(Some(*r)),
            ReceiptStatus::Pending => Ok(None),
        }
    }

    fn block(&self, number: u64) -> Result<Option<Block>, NodeError> {
        Ok(self.read(|l| l.block(number).cloned()))
    }

    fn logs(&self, contract: &Address, from: u64, to: u64) -> Result<Vec<Event>, NodeError> {
        Ok(self.read(|l| l.logs(contract, from, to)))
    }

    fn state_root(&self) -> Result<Digest, NodeError> {
        Ok(self.read(|l| l.state_root()))
    }
}
