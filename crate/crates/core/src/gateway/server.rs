use std::future::Future;
use std::io;
use std::net::SocketAddr;
use std::thread;

use axum::body::Bytes;
use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::sync::oneshot;

use super::wire::*;
use crate::ledger::{Address, SignedTransaction, UnsignedTransaction};
use crate::node::{LocalNode, Node, NodeError};

fn node_error(id: i64, e: NodeError) -> RpcResponse {
    let (code, message) = match e {
        NodeError::Rejected(m) => (TX_REJECTED, m),
        NodeError::NotFound => (NOT_FOUND, "not-found".to_string()),
        NodeError::Reverted(r) => (CALL_REVERTED, r),
        other => (LEDGER_ERROR, other.to_string()),
    };
    RpcResponse::err(Some(id), code, message)
}

/// Parses a raw request body and dispatches it.
pub fn handle_body(node: &LocalNode, body: &[u8]) -> RpcResponse {
    let value: Value = match serde_json::from_slice(body) {
        Ok(v) => v,
        Err(e) => return RpcResponse::err(None, PARSE_ERROR, format!("parse error: {e}")),
    };
    let id = value.get("id").and_then(Value::as_i64);
    match serde_json::from_value::<RpcRequest>(value) {
        Ok(req) => rpc_dispatch(node, &req),
        Err(e) => RpcResponse::err(id, INVALID_REQUEST, format!("invalid request: {e}")),
    }
}

/// Executes one request against the node.
pub fn rpc_dispatch(node: &LocalNode, req: &RpcRequest) -> RpcResponse {
    let id = req.id;
    let p = &req.params;
    let bad =
        |what: &str| RpcResponse::err(Some(id), INVALID_PARAMS, format!("invalid params: {what}"));
    let arity = |n: usize| p.len() == n;
    let result: Result<Value, NodeError> = match req.method.as_str() {
        "net_connected" => Ok(Value::Bool(node.is_connected())),
        "chain_id" => node.chain_id().map(Value::from),
        "block_number" => node.block_number().map(Value::from),
        "get_balance" | "get_nonce" => {
            let Some(addr) = arity(1).then(|| parse_address(&p[0])).flatten() else {
                return bad("expected [address]");
            };
            if req.method == "get_balance" {
                node.balance(&addr).map(|b| Value::String(b.to_string()))
            } else {
                node.nonce(&addr).map(Value::from)
            }
        }
        "gas_price" => {
            let method = match p.as_slice() {
                [] => "default",
                [Value::String(m)] => m.as_str(),
                _ => return bad("expected [] or [method]"),
            };
            node.gas_price(method).map(|w| Value::String(w.to_string()))
        }
        "estimate_gas" => {
            let Some(tx) = arity(1)
                .then(|| parse_bytes(&p[0]))
                .flatten()
                .and_then(|b| UnsignedTransaction::decode(&b).ok())
            else {
                return bad("expected [unsigned tx hex]");
            };
            node.estimate_gas(&tx).map(Value::from)
        }
        "send_transaction" => {
            let Some(tx) = arity(1)
                .then(|| parse_bytes(&p[0]))
                .flatten()
                .and_then(|b| SignedTransaction::decode(&b).ok())
            else {
                return bad("expected [signed tx hex]");
            };
            node.send_transaction(&tx).map(|h| digest_value(&h))
        }
        "call" => {
            let (to, data, from) = match p.as_slice() {
                [to, data] => (parse_address(to), parse_bytes(data), Some(Address::ZERO)),
                [to, data, from] => (parse_address(to), parse_bytes(data), parse_address(from)),
                _ => return bad("expected [to, data] or [to, data, from]"),
            };
            let (Some(to), Some(data), Some(from)) = (to, data, from) else {
                return bad("expected [to, data] or [to, data, from]");
            };
            node.call(from, &to, &data).map(|out| hex_value(&out))
        }
        "get_receipt" => {
            let Some(h) = arity(1).then(|| parse_digest(&p[0])).flatten() else {
                return bad("expected [tx hash]");
            };
            node.receipt(&h)
                .map(|r| r.map_or(Value::Null, |r| serde_json::to_value(r).unwrap()))
        }
        "get_block" => {
            let Some(n) = arity(1).then(|| p[0].as_u64()).flatten() else {
                return bad("expected [block number]");
            };
            node.block(n).map(|b| {
                b.map_or(Value::Null, |b| {
                    serde_json::to_value(BlockView::from(&b)).unwrap()
                })
            })
        }
        "get_logs" => {
            let parsed = match p.as_slice() {
                [c, f, t] => parse_address(c).zip(f.as_u64()).zip(t.as_u64()),
                _ => None,
            };
            let Some(((contract, from), to)) = parsed else {
                return bad("expected [contract, from_block, to_block]");
            };
            node.logs(&contract, from, to)
                .map(|logs| serde_json::to_value(logs).unwrap())
        }
        "state_root" => node.state_root().map(|d| digest_value(&d)),
        other => {
            return RpcResponse::err(
                Some(id),
                METHOD_NOT_FOUND,
                format!("method not found: {other}"),
            )
        }
    };
    match result {
        Ok(v) => RpcResponse::ok(id, v),
        Err(e) => node_error(id, e),
    }
}

async fn rpc_handler(State(node): State<LocalNode>, body: Bytes) -> Json<RpcResponse> {
    Json(handle_body(&node, &body))
}

pub fn router(node: LocalNode) -> Router {
    Router::new()
        .route("/rpc", post(rpc_handler))
        .with_state(node)
}

/// Serves `/rpc` on an already-bound listener until `shutdown` resolves.
pub async fn run(
    listener: tokio::net::TcpListener,
    node: LocalNode,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, router(node))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A gateway running on its own thread and runtime.
pub struct GatewayServer {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<()>>,
}

impl GatewayServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/rpc", self.addr)
    }

    pub fn stop(mut self) {
        self.stop_inner();
    }

    fn stop_inner(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for GatewayServer {
    fn drop(&mut self) {
        self.stop_inner();
    }
}

/// Binds `bind` and serves the node's ledger on a background thread.
pub fn serve(bind: SocketAddr, node: LocalNode) -> io::Result<GatewayServer> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind(bind))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = thread::spawn(move || {
        let result = runtime.block_on(run(listener, node, async {
            let _ = rx.await;
        }));
        if let Err(e) = result {
            tracing::error!("gateway stopped: {e}");
        }
    });
    Ok(GatewayServer {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Convenience for tests and examples: a JSON request body.
pub fn request_body(id: i64, method: &str, params: Vec<Value>) -> String {
    json!(RpcRequest::new(id, method, params)).to_string()
}
