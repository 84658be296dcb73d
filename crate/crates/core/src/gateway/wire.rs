//! Request/response envelopes and value encodings of the `/rpc` endpoint.
//!
//! Requests are JSON objects `{"id": <int>, "method": <string>, "params":
//! [...]}`; responses echo `id` and carry exactly one of `result` or
//! `error`. Binary values travel as `0x` hex, wei amounts as decimal
//! strings, transactions and blocks as hex of their canonical encoding.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::fingerprint::Digest;
use crate::ledger::{Address, Block, TxHash};
use crate::serde_util;

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const INTERNAL_ERROR: i64 = -32603;
/// Transaction refused admission; message starts with the rejection id.
pub const TX_REJECTED: i64 = -32000;
pub const NOT_FOUND: i64 = -32001;
/// Read-only call reverted; message is the revert reason.
pub const CALL_REVERTED: i64 = -32002;
pub const LEDGER_ERROR: i64 = -32003;

/// Every method the gateway serves.
pub const METHODS: &[&str] = &[
    "net_connected",
    "chain_id",
    "block_number",
    "get_balance",
    "get_nonce",
    "gas_price",
    "estimate_gas",
    "send_transaction",
    "call",
    "get_receipt",
    "get_block",
    "get_logs",
    "state_root",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpcRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jsonrpc: Option<String>,
    pub id: i64,
    pub method: String,
    #[serde(default)]
    pub params: Vec<Value>,
}

impl RpcRequest {
    pub fn new(id: i64, method: &str, params: Vec<Value>) -> Self {
        RpcRequest {
            jsonrpc: Some("2.0".into()),
            id,
            method: method.to_string(),
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpcErrorObject {
    pub code: i64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcResponse {
    pub jsonrpc: String,
    /// `null` when the request could not be parsed far enough to read it.
    pub id: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RpcErrorObject>,
}

impl RpcResponse {
    pub fn ok(id: i64, result: Value) -> Self {
        RpcResponse {
            jsonrpc: "2.0".into(),
            id: Some(id),
            result: Some(result),
            error: None,
        }
    }

    pub fn err(id: Option<i64>, code: i64, message: impl Into<String>) -> Self {
        RpcResponse {
            jsonrpc: "2.0".into(),
            id,
            result: None,
            error: Some(RpcErrorObject {
                code,
                message: message.into(),
            }),
        }
    }

    /// Exactly one of `result` and `error` is present.
    pub fn is_well_formed(&self) -> bool {
        self.result.is_some() != self.error.is_some()
    }
}

/// JSON view of a block. `raw` is authoritative; the other fields are for
/// humans and tooling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockView {
    pub number: u64,
    pub hash: Digest,
    pub parent_hash: Digest,
    pub timestamp_ms: u64,
    pub gas_used: u64,
    pub state_root: Digest,
    pub coinbase: Address,
    pub transactions: Vec<TxHash>,
    #[serde(with = "serde_util::hex_bytes")]
    pub raw: Vec<u8>,
}

impl From<&Block> for BlockView {
    fn from(b: &Block) -> Self {
        BlockView {
            number: b.header.number,
            hash: b.hash,
            parent_hash: b.header.parent_hash,
            timestamp_ms: b.header.timestamp_ms,
            gas_used: b.header.gas_used,
            state_root: b.header.state_root,
            coinbase: b.header.coinbase,
            transactions: b.header.tx_hashes.clone(),
            raw: b.encode(),
        }
    }
}

pub fn hex_value(bytes: &[u8]) -> Value {
    Value::String(format!("0x{}", hex::encode(bytes)))
}

pub fn digest_value(d: &Digest) -> Value {
    hex_value(&d.0)
}

/// Accepts a digest with or without `0x`.
pub fn parse_digest(v: &Value) -> Option<Digest> {
    let s = v.as_str()?;
    crate::fingerprint::parse_hex_digest(s.strip_prefix("0x").unwrap_or(s)).ok()
}

pub fn parse_bytes(v: &Value) -> Option<Vec<u8>> {
    serde_util::decode_hex(v.as_str()?).ok()
}

pub fn parse_address(v: &Value) -> Option<Address> {
    v.as_str()?.parse().ok()
}
