//! Explorer-style audit export: one record per transaction touching a
//! contract, derived from chain data only.

use serde::{Deserialize, Serialize};

use super::method_name;
use crate::ledger::{format_eth, Address, Gas, TxHash, TxStatus, Wei};
use crate::node::{Node, NodeError};
use crate::serde_util;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub tx_hash: TxHash,
    pub block_number: u64,
    pub from: Address,
    pub to: Option<Address>,
    pub method: String,
    pub status: TxStatus,
    pub gas_used: Gas,
    #[serde(with = "serde_util::wei")]
    pub gas_price_wei: Wei,
    #[serde(with = "serde_util::wei")]
    pub fee_wei: Wei,
    pub fee_eth: String,
    pub confirmations: u64,
    pub timestamp_ms: u64,
}

/// Every transaction that created or called `contract`, in chain order.
pub fn export_audit<N: Node>(node: &N, contract: &Address) -> Result<Vec<AuditRecord>, NodeError> {
    let head = node.block_number()?;
    let mut out = Vec::new();
    let mut deployed = false;
    for n in 1..=head {
        let Some(block) = node.block(n)? else { break };
        for stx in &block.transactions {
            let tx = &stx.tx;
            let is_call = tx.to.as_ref() == Some(contract);
            let is_create =
                tx.to.is_none() && Address::for_contract(&tx.from, tx.nonce) == *contract;
            if !is_call && !is_create {
                continue;
            }
            let hash = stx.hash();
            let receipt = node
                .receipt(&hash)?
                .ok_or_else(|| NodeError::Other(format!("receipt for {hash} not final")))?;
            if is_create {
                if receipt.contract_address != Some(*contract) {
                    continue;
                }
                deployed = true;
            }
            out.push(AuditRecord {
                tx_hash: hash,
                block_number: n,
                from: tx.from,
                to: tx.to,
                method: method_name(tx.to.as_ref(), &tx.data),
                status: receipt.status,
                gas_used: receipt.gas_used,
                gas_price_wei: receipt.gas_price,
                fee_wei: receipt.fee,
                fee_eth: format_eth(receipt.fee),
                confirmations: head + 1 - n,
                timestamp_ms: block.timestamp_ms(),
            });
        }
    }
    if !deployed {
        return Err(NodeError::NotFound);
    }
    Ok(out)
}

/// One JSON object per line, fields in declaration order.
pub fn to_jsonl(records: &[AuditRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    s
}

pub fn from_jsonl(text: &str) -> Result<Vec<AuditRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
