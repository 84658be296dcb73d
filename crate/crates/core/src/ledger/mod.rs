//! Deterministic single-chain ledger.
//!
//! Accounts, nonces, signed transactions, a mempool, block production, gas
//! metering and receipts. All hashes are SHA-256 over the canonical
//! encodings in [`crate::codec`]. Time is supplied by the caller in
//! milliseconds, so runs are reproducible.

pub mod gas;
pub mod keys;
pub mod mempool;
pub mod profile;
pub mod store;
pub mod types;

use std::collections::{BTreeMap, HashMap};

use crate::codec::Encoder;
use crate::contract::{ContractState, ExecContext, Revert, CREATION_CODE};
use crate::fingerprint::Digest;

pub use gas::{gas_for, ExecutionCost, GasSchedule};
pub use keys::{create_account, verify_transaction, Account, Keypair, SignatureScheme};
pub use mempool::Mempool;
pub use profile::{CalibrationProfile, GenesisConfig};
pub use types::*;

/// Why a transaction was refused admission to the mempool.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Rejection {
    #[error("invalid-signature")]
    InvalidSignature,
    #[error("nonce-reuse: expected nonce {expected}, got {got}")]
    NonceReuse { expected: u64, got: u64 },
    #[error("nonce-too-high: expected nonce {expected}, got {got}")]
    NonceTooHigh { expected: u64, got: u64 },
    #[error("insufficient-balance: need {needed} wei, have {available}")]
    InsufficientBalance { needed: Wei, available: Wei },
    #[error("intrinsic-gas-too-low: need {needed}, limit {limit}")]
    IntrinsicGasTooLow { needed: Gas, limit: Gas },
    #[error("exceeds-block-gas-limit")]
    ExceedsBlockGasLimit,
}

impl Rejection {
    /// Stable identifier, also used on the wire.
    pub fn id(&self) -> &'static str {
        match self {
            Rejection::InvalidSignature => "invalid-signature",
            Rejection::NonceReuse { .. } => "nonce-reuse",
            Rejection::NonceTooHigh { .. } => "nonce-too-high",
            Rejection::InsufficientBalance { .. } => "insufficient-balance",
            Rejection::IntrinsicGasTooLow { .. } => "intrinsic-gas-too-low",
            Rejection::ExceedsBlockGasLimit => "exceeds-block-gas-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("rejected: {0}")]
    Rejected(#[from] Rejection),
    #[error("not-found")]
    NotFound,
    #[error("too-early: next block allowed at {earliest_ms} ms")]
    TooEarly { earliest_ms: u64 },
    #[error("reverted: {0}")]
    Reverted(String),
    #[error("corrupt-chain: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReceiptStatus {
    Pending,
    Final(Box<Receipt>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AccountState {
    pub nonce: u64,
    pub balance: Wei,
}

/// Result of running a payload against a scratch copy of state.
struct Execution {
    cost: ExecutionCost,
    revert: Option<String>,
    created: Option<(Address, ContractState)>,
    updated: Option<(Address, ContractState)>,
    logs: Vec<Event>,
    output: Vec<u8>,
    transfer: bool,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    genesis: GenesisConfig,
    accounts: BTreeMap<Address, AccountState>,
    contracts: BTreeMap<Address, ContractState>,
    mempool: Mempool,
    blocks: Vec<Block>,
    receipts: HashMap<TxHash, Receipt>,
    submitted_at: HashMap<TxHash, u64>,
    now_ms: u64,
}

impl Ledger {
    pub fn new(genesis: GenesisConfig) -> Ledger {
        let mut accounts = BTreeMap::new();
        for (addr, balance) in &genesis.accounts {
            accounts
                .entry(*addr)
                .or_insert_with(AccountState::default)
                .balance += balance;
        }
        accounts.entry(genesis.coinbase).or_default();
        let mut ledger = Ledger {
            genesis,
            accounts,
            contracts: BTreeMap::new(),
            mempool: Mempool::default(),
            blocks: Vec::new(),
            receipts: HashMap::new(),
            submitted_at: HashMap::new(),
            now_ms: 0,
        };
        let header = BlockHeader {
            number: 0,
            parent_hash: Digest::ZERO,
            timestamp_ms: 0,
            gas_used: 0,
            state_root: ledger.state_root(),
            coinbase: ledger.genesis.coinbase,
            tx_hashes: Vec::new(),
        };
        ledger.blocks.push(Block {
            hash: header.hash(),
            header,
            transactions: Vec::new(),
        });
        ledger
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn profile(&self) -> &CalibrationProfile {
        &self.genesis.profile
    }

    pub fn coinbase(&self) -> Address {
        self.genesis.coinbase
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    /// Moves the ledger clock forward; never backwards.
    pub fn advance_time(&mut self, now_ms: u64) {
        self.now_ms = self.now_ms.max(now_ms);
    }

    /// Operator gas-limit change; applies to blocks sealed from now on.
    pub fn set_block_gas_limit(&mut self, limit: Gas) {
        self.genesis.profile.block_gas_limit = limit;
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("genesis block exists")
    }

    pub fn block(&self, number: u64) -> Option<&Block> {
        self.blocks.get(number as usize)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn account(&self, addr: &Address) -> AccountState {
        self.accounts.get(addr).copied().unwrap_or_default()
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&Address, &AccountState)> {
        self.accounts.iter()
    }

    pub fn balance(&self, addr: &Address) -> Wei {
        self.account(addr).balance
    }

    pub fn nonce(&self, addr: &Address) -> u64 {
        self.account(addr).nonce
    }

    /// Nonce the next submitted transaction from `addr` must carry.
    pub fn next_nonce(&self, addr: &Address) -> u64 {
        self.mempool
            .next_nonce(addr)
            .unwrap_or_else(|| self.nonce(addr))
    }

    pub fn contract(&self, addr: &Address) -> Option<&ContractState> {
        self.contracts.get(addr)
    }

    pub fn mempool(&self) -> &Mempool {
        &self.mempool
    }

    pub fn total_supply(&self) -> Wei {
        self.accounts.values().map(|a| a.balance).sum()
    }

    pub fn submitted_at(&self, hash: &TxHash) -> Option<u64> {
        self.submitted_at.get(hash).copied()
    }

    /// SHA-256 over all account and contract storage, in address order.
    pub fn state_root(&self) -> Digest {
        let mut e = Encoder::new();
        e.u32(self.accounts.len() as u32);
        for (addr, acc) in &self.accounts {
            e.fixed(&addr.0).u64(acc.nonce).u128(acc.balance);
        }
        e.u32(self.contracts.len() as u32);
        for (addr, c) in &self.contracts {
            e.fixed(&addr.0);
            c.encode_storage(&mut e);
        }
        Digest::of(e.as_slice())
    }

    /// Admission control: signature, gas bounds, nonce and balance.
    pub fn submit_transaction(
        &mut self,
        tx: SignedTransaction,
        now_ms: u64,
    ) -> Result<TxHash, Rejection> {
        if !verify_transaction(&tx) {
            return Err(Rejection::InvalidSignature);
        }
        let profile = &self.genesis.profile;
        if tx.tx.gas_limit > profile.block_gas_limit {
            return Err(Rejection::ExceedsBlockGasLimit);
        }
        let intrinsic = profile.gas.intrinsic(&tx.tx, profile.declared_code_size);
        if intrinsic > tx.tx.gas_limit {
            return Err(Rejection::IntrinsicGasTooLow {
                needed: intrinsic,
                limit: tx.tx.gas_limit,
            });
        }
        let from = tx.tx.from;
        let expected = self.next_nonce(&from);
        if tx.tx.nonce < expected {
            return Err(Rejection::NonceReuse {
                expected,
                got: tx.tx.nonce,
            });
        }
        if tx.tx.nonce > expected {
            return Err(Rejection::NonceTooHigh {
                expected,
                got: tx.tx.nonce,
            });
        }
        let available = self
            .balance(&from)
            .saturating_sub(self.mempool.pending_cost(&from));
        let needed = mempool::max_cost(&tx);
        if needed > available {
            return Err(Rejection::InsufficientBalance { needed, available });
        }
        self.advance_time(now_ms);
        let hash = self.mempool.insert(tx, now_ms);
        self.submitted_at.insert(hash, now_ms);
        Ok(hash)
    }

    /// Earliest timestamp at which the next block may be sealed.
    pub fn next_block_time(&self) -> u64 {
        self.head().timestamp_ms() + self.genesis.profile.block_interval_ms
    }

    /// Seals a block at `now_ms` from the mempool.
    pub fn produce_block(&mut self, now_ms: u64) -> Result<&Block, LedgerError> {
        let earliest = self.next_block_time();
        if now_ms < earliest {
            return Err(LedgerError::TooEarly {
                earliest_ms: earliest,
            });
        }
        let selected = self.mempool.select(self.genesis.profile.block_gas_limit);
        let txs = selected.into_iter().map(|p| p.tx).collect();
        self.execute_block(now_ms, txs);
        Ok(self.head())
    }

    /// Re-executes a block read back from storage; its hash must match.
    pub fn apply_sealed_block(&mut self, block: &Block) -> Result<(), LedgerError> {
        let corrupt = |m: String| LedgerError::Corrupt(m);
        if block.number() != self.head().number() + 1 {
            return Err(corrupt(format!("block {} out of sequence", block.number())));
        }
        if block.header.parent_hash != self.head().hash {
            return Err(corrupt(format!("block {} parent mismatch", block.number())));
        }
        if block.timestamp_ms() < self.next_block_time() {
            return Err(corrupt(format!("block {} too early", block.number())));
        }
        let mut gas = 0;
        // Per sender: next expected nonce and cost committed so far.
        let mut senders: HashMap<Address, (u64, Wei)> = HashMap::new();
        for tx in &block.transactions {
            if !verify_transaction(tx) {
                return Err(corrupt(format!(
                    "bad signature in block {}",
                    block.number()
                )));
            }
            let from = tx.tx.from;
            let (nonce, spent) = senders
                .entry(from)
                .or_insert_with(|| (self.nonce(&from), 0));
            if tx.tx.nonce != *nonce {
                return Err(corrupt(format!("bad nonce in block {}", block.number())));
            }
            *nonce += 1;
            *spent += mempool::max_cost(tx);
            if self.balance(&from) < *spent {
                return Err(corrupt(format!("unfunded tx in block {}", block.number())));
            }
            gas += tx.tx.gas_limit;
        }
        if gas > self.genesis.profile.block_gas_limit {
            return Err(corrupt(format!("block {} over gas limit", block.number())));
        }
        self.execute_block(block.timestamp_ms(), block.transactions.clone());
        if self.head().hash != block.hash {
            return Err(corrupt(format!(
                "block {} hash mismatch after replay",
                block.number()
            )));
        }
        Ok(())
    }

    fn execute_block(&mut self, timestamp_ms: u64, txs: Vec<SignedTransaction>) {
        let number = self.head().number() + 1;
        let mut gas_used = 0;
        let mut log_index = 0u32;
        let mut tx_hashes = Vec::with_capacity(txs.len());
        let mut receipts = Vec::with_capacity(txs.len());
        for (i, tx) in txs.iter().enumerate() {
            let receipt = self.apply_transaction(tx, number, i as u32, log_index);
            log_index += receipt.logs.len() as u32;
            gas_used += receipt.gas_used;
            tx_hashes.push(receipt.tx_hash);
            receipts.push(receipt);
        }
        let header = BlockHeader {
            number,
            parent_hash: self.head().hash,
            timestamp_ms,
            gas_used,
            state_root: self.state_root(),
            coinbase: self.genesis.coinbase,
            tx_hashes,
        };
        for r in receipts {
            self.receipts.insert(r.tx_hash, r);
        }
        self.blocks.push(Block {
            hash: header.hash(),
            header,
            transactions: txs,
        });
        self.advance_time(timestamp_ms);
    }

    fn run_payload(
        &self,
        tx: &UnsignedTransaction,
        block_number: u64,
        log_index: u32,
    ) -> Execution {
        let mut exec = Execution {
            cost: ExecutionCost::default(),
            revert: None,
            created: None,
            updated: None,
            logs: Vec::new(),
            output: Vec::new(),
            transfer: false,
        };
        match tx.to {
            None => {
                exec.cost.method = Some("deploy".to_string());
                if tx.data != CREATION_CODE {
                    exec.revert = Some("unknown-code".into());
                } else if tx.value != 0 {
                    exec.revert = Some("non-payable".into());
                } else {
                    let addr = Address::for_contract(&tx.from, tx.nonce);
                    exec.cost.storage_new = ContractState::DEPLOY_STORAGE_SLOTS;
                    exec.created = Some((addr, ContractState::new(tx.from)));
                }
            }
            Some(to) => match self.contracts.get(&to) {
                Some(state) => {
                    let mut scratch = state.clone();
                    let ctx = ExecContext {
                        caller: tx.from,
                        contract: to,
                        block_number,
                        value: tx.value,
                        first_log_index: log_index,
                    };
                    match scratch.execute(&ctx, &tx.data) {
                        Ok(out) => {
                            exec.cost = ExecutionCost {
                                method: Some(out.method.name().to_string()),
                                storage_new: out.storage_new,
                                storage_updated: out.storage_updated,
                                logs: out.logs.len() as u64,
                                log_topics: out.logs.iter().map(Event::topic_count).sum(),
                                log_data_bytes: out.logs.iter().map(Event::data_len).sum(),
                            };
                            exec.logs = out.logs;
                            exec.output = out.output;
                            exec.updated = Some((to, scratch));
                        }
                        Err(Revert { method, reason }) => {
                            exec.cost =
                                ExecutionCost::reverted(method.map(|m| m.name().to_string()));
                            exec.revert = Some(reason);
                        }
                    }
                }
                None => exec.transfer = true,
            },
        }
        exec
    }

    fn apply_transaction(
        &mut self,
        stx: &SignedTransaction,
        block_number: u64,
        tx_index: u32,
        log_index: u32,
    ) -> Receipt {
        let tx = &stx.tx;
        let profile = &self.genesis.profile;
        let mut exec = self.run_payload(tx, block_number, log_index);
        let mut gas_used = gas_for(tx, &profile.gas, profile.declared_code_size, &exec.cost);
        if gas_used > tx.gas_limit {
            gas_used = tx.gas_limit;
            exec.revert = Some("out-of-gas".into());
        }
        let fee = gas_used as Wei * tx.gas_price;
        let success = exec.revert.is_none();

        let sender = self.accounts.entry(tx.from).or_default();
        sender.balance -= fee;
        sender.nonce += 1;
        self.accounts
            .entry(self.genesis.coinbase)
            .or_default()
            .balance += fee;

        let mut contract_address = None;
        let mut logs = Vec::new();
        if success {
            if let Some((addr, state)) = exec.created.take() {
                self.contracts.insert(addr, state);
                contract_address = Some(addr);
            }
            if let Some((addr, state)) = exec.updated.take() {
                self.contracts.insert(addr, state);
            }
            if exec.transfer && tx.value > 0 {
                self.accounts.entry(tx.from).or_default().balance -= tx.value;
                self.accounts.entry(tx.to.unwrap()).or_default().balance += tx.value;
            }
            logs = exec.logs;
        }
        Receipt {
            tx_hash: stx.hash(),
            block_number,
            tx_index,
            from: tx.from,
            to: tx.to,
            status: if success {
                TxStatus::Success
            } else {
                TxStatus::Reverted
            },
            gas_used,
            gas_price: tx.gas_price,
            fee,
            contract_address,
            logs,
            revert_reason: exec.revert,
        }
    }

    /// Gas the transaction would use if included in the next block.
    pub fn estimate_gas(&self, tx: &UnsignedTransaction) -> Gas {
        let profile = &self.genesis.profile;
        let exec = self.run_payload(tx, self.head().number() + 1, 0);
        gas_for(tx, &profile.gas, profile.declared_code_size, &exec.cost)
    }

    /// Receipt availability as of `now_ms`: final once sealed and the
    /// finality delay has elapsed.
    pub fn receipt_at(&self, hash: &TxHash, now_ms: u64) -> Result<ReceiptStatus, LedgerError> {
        if let Some(r) = self.receipts.get(hash) {
            let sealed = self.blocks[r.block_number as usize].timestamp_ms();
            if now_ms >= sealed + self.genesis.profile.finality_delay_ms {
                return Ok(ReceiptStatus::Final(Box::new(r.clone())));
            }
            return Ok(ReceiptStatus::Pending);
        }
        if self.mempool.contains(hash) {
            return Ok(ReceiptStatus::Pending);
        }
        Err(LedgerError::NotFound)
    }

    pub fn get_receipt(&self, hash: &TxHash) -> Result<ReceiptStatus, LedgerError> {
        self.receipt_at(hash, self.now_ms)
    }

    /// Receipt regardless of finality.
    pub fn sealed_receipt(&self, hash: &TxHash) -> Option<&Receipt> {
        self.receipts.get(hash)
    }

    /// Millisecond time at which the receipt for `hash` becomes final.
    pub fn final_at(&self, hash: &TxHash) -> Option<u64> {
        let r = self.receipts.get(hash)?;
        Some(
            self.blocks[r.block_number as usize].timestamp_ms()
                + self.genesis.profile.finality_delay_ms,
        )
    }

    pub fn confirmations(&self, block_number: u64) -> u64 {
        (self.head().number() + 1).saturating_sub(block_number)
    }

    /// Runs a method without a transaction. State is never modified.
    pub fn execute_call(
        &self,
        from: Address,
        to: &Address,
        data: &[u8],
    ) -> Result<Vec<u8>, LedgerError> {
        let state = self.contracts.get(to).ok_or(LedgerError::NotFound)?;
        let mut scratch = state.clone();
        let ctx = ExecContext {
            caller: from,
            contract: *to,
            block_number: self.head().number(),
            value: 0,
            first_log_index: 0,
        };
        scratch
            .execute(&ctx, data)
            .map(|out| out.output)
            .map_err(|r| LedgerError::Reverted(r.reason))
    }

    /// Logs emitted by `contract` in blocks `from..=to`.
    pub fn logs(&self, contract: &Address, from_block: u64, to_block: u64) -> Vec<Event> {
        let to_block = to_block.min(self.head().number());
        let mut out = Vec::new();
        for n in from_block..=to_block {
            let Some(block) = self.block(n) else { break };
            for h in &block.header.tx_hashes {
                if let Some(r) = self.receipts.get(h) {
                    out.extend(r.logs.iter().filter(|e| &e.emitter == contract).cloned());
                }
            }
        }
        out
    }

    /// Recomputes every header hash and parent link from genesis.
    pub fn verify_chain(&self) -> Result<(), LedgerError> {
        let mut parent = Digest::ZERO;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.header.number != i as u64 {
                return Err(LedgerError::Corrupt(format!("block {i} misnumbered")));
            }
            if b.header.parent_hash != parent {
                return Err(LedgerError::Corrupt(format!("block {i} parent link")));
            }
            if b.header.hash() != b.hash {
                return Err(LedgerError::Corrupt(format!("block {i} header hash")));
            }
            let hashes: Vec<_> = b.transactions.iter().map(|t| t.hash()).collect();
            if hashes != b.header.tx_hashes {
                return Err(LedgerError::Corrupt(format!("block {i} tx list")));
            }
            parent = b.hash;
        }
        Ok(())
    }
}
