use std::sync::atomic::{AtomicI64, Ordering};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use super::wire::*;
use crate::fingerprint::Digest;
use crate::ledger::{
    Address, Block, Event, Gas, Receipt, SignedTransaction, TxHash, UnsignedTransaction, Wei,
};
use crate::node::{Node, NodeError};

/// Appends `/rpc` unless the URL already names it.
pub fn normalize_url(url: &str) -> String {
    let trimmed = url.trim_end_matches('/');
    if trimmed.ends_with("/rpc") {
        trimmed.to_string()
    } else {
        format!("{trimmed}/rpc")
    }
}

/// [`Node`] over HTTP.
#[derive(Debug)]
pub struct RpcClient {
    url: String,
    agent: ureq::Agent,
    next_id: AtomicI64,
}

impl RpcClient {
    pub fn new(url: &str) -> Self {
        Self::with_timeout(url, Duration::from_secs(30))
    }

    pub fn with_timeout(url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RpcClient {
            url: normalize_url(url),
            agent,
            next_id: AtomicI64::new(1),
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Sends one request and returns the raw response envelope.
    pub fn request(&self, method: &str, params: Vec<Value>) -> Result<RpcResponse, NodeError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let body = serde_json::to_string(&RpcRequest::new(id, method, params))
            .map_err(|e| NodeError::Other(e.to_string()))?;
        self.post_raw(body.as_bytes())
    }

    /// Posts an arbitrary body; used to probe malformed-input handling.
    pub fn post_raw(&self, body: &[u8]) -> Result<RpcResponse, NodeError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => NodeError::Timeout(self.url.clone()),
                other => NodeError::Unreachable(format!("{}: {other}", self.url)),
            })?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| NodeError::Unreachable(e.to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| NodeError::Other(format!("malformed response: {e}")))
    }

    fn invoke<T: DeserializeOwned>(
        &self,
        method: &str,
        params: Vec<Value>,
    ) -> Result<T, NodeError> {
        let resp = self.request(method, params)?;
        if let Some(err) = resp.error {
            return Err(match err.code {
                TX_REJECTED => NodeError::Rejected(err.message),
                NOT_FOUND => NodeError::NotFound,
                CALL_REVERTED => NodeError::Reverted(err.message),
                code => NodeError::Rpc {
                    code,
                    message: err.message,
                },
            });
        }
        let result = resp.result.unwrap_or(Value::Null);
        serde_json::from_value(result)
            .map_err(|e| NodeError::Other(format!("malformed result: {e}")))
    }

    fn invoke_wei(&self, method: &str, params: Vec<Value>) -> Result<Wei, NodeError> {
        let s: String = self.invoke(method, params)?;
        s.parse()
            .map_err(|_| NodeError::Other(format!("malformed wei amount {s:?}")))
    }

    fn invoke_hex(&self, method: &str, params: Vec<Value>) -> Result<Vec<u8>, NodeError> {
        let v: Value = self.invoke(method, params)?;
        parse_bytes(&v).ok_or_else(|| NodeError::Other("malformed hex".into()))
    }

    fn invoke_digest(&self, method: &str, params: Vec<Value>) -> Result<Digest, NodeError> {
        let v: Value = self.invoke(method, params)?;
        parse_digest(&v).ok_or_else(|| NodeError::Other("malformed digest".into()))
    }
}

/// True if a gateway answers `net_connected` at `url` within `timeout`.
pub fn client_connect(url: &str, timeout: Duration) -> bool {
    RpcClient::with_timeout(url, timeout).is_connected()
}

impl Node for RpcClient {
    fn is_connected(&self) -> bool {
        matches!(self.invoke::<bool>("net_connected", vec![]), Ok(true))
    }

    fn chain_id(&self) -> Result<u64, NodeError> {
        self.invoke("chain_id", vec![])
    }

    fn block_number(&self) -> Result<u64, NodeError> {
        self.invoke("block_number", vec![])
    }

    fn balance(&self, address: &Address) -> Result<Wei, NodeError> {
        self.invoke_wei("get_balance", vec![json!(address)])
    }

    fn nonce(&self, address: &Address) -> Result<u64, NodeError> {
        self.invoke("get_nonce", vec![json!(address)])
    }

    fn gas_price(&self, method: &str) -> Result<Wei, NodeError> {
        self.invoke_wei("gas_price", vec![json!(method)])
    }

    fn estimate_gas(&self, tx: &UnsignedTransaction) -> Result<Gas, NodeError> {
        self.invoke("estimate_gas", vec![hex_value(&tx.canonical_bytes())])
    }

    fn send_transaction(&self, tx: &SignedTransaction) -> Result<TxHash, NodeError> {
        self.invoke_digest("send_transaction", vec![hex_value(&tx.encode())])
    }

    fn call(&self, from: Address, to: &Address, data: &[u8]) -> Result<Vec<u8>, NodeError> {
        self.invoke_hex("call", vec![json!(to), hex_value(data), json!(from)])
    }

    fn receipt(&self, hash: &TxHash) -> Result<Option<Receipt>, NodeError> {
        self.invoke("get_receipt", vec![digest_value(hash)])
    }

    fn block(&self, number: u64) -> Result<Option<Block>, NodeError> {
        let view: Option<BlockView> = self.invoke("get_block", vec![json!(number)])?;
        view.map(|v| {
            let block = Block::decode(&v.raw)
                .map_err(|e| NodeError::Other(format!("malformed block: {e}")))?;
            if block.hash != v.hash {
                return Err(NodeError::Other("block hash mismatch".into()));
            }
            Ok(block)
        })
        .transpose()
    }

    fn logs(&self, contract: &Address, from: u64, to: u64) -> Result<Vec<Event>, NodeError> {
        self.invoke("get_logs", vec![json!(contract), json!(from), json!(to)])
    }

    fn state_root(&self) -> Result<Digest, NodeError> {
        self.invoke_digest("state_root", vec![])
    }
}
