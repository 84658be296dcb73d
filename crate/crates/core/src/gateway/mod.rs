//! HTTP JSON gateway to a [`LocalNode`](crate::node::LocalNode).
//!
//! One endpoint, `POST /rpc`. Every request body, however malformed,
//! gets a well-formed JSON response with either `result` or `error`.

pub mod client;
pub mod server;
pub mod wire;

pub use client::{client_connect, normalize_url, RpcClient};
pub use server::{handle_body, request_body, rpc_dispatch, run, serve, GatewayServer};
pub use wire::{RpcErrorObject, RpcRequest, RpcResponse};
