//! Client-side contract operations: build, sign, submit, await.

use std::time::Duration;

use super::{decode_bool, Call, VersionedEntry, CREATION_CODE};
use crate::fingerprint::Digest;
use crate::ledger::{
    Address, Gas, Keypair, Receipt, SignatureScheme, TxStatus, UnsignedTransaction, Wei,
};
use crate::node::{Node, NodeError};

#[derive(Debug, Clone)]
pub struct TxOptions {
    /// Defaults to the node's hint for the method.
    pub gas_price: Option<Wei>,
    /// Defaults to the node's estimate.
    pub gas_limit: Option<Gas>,
    pub receipt_timeout: Duration,
}

impl Default for TxOptions {
    fn default() -> Self {
        TxOptions {
            gas_price: None,
            gas_limit: None,
            receipt_timeout: Duration::from_secs(120),
        }
    }
}

/// Signs and submits a transaction, then waits for its receipt.
pub fn transact<N: Node>(
    node: &N,
    keys: &Keypair,
    to: Option<Address>,
    data: Vec<u8>,
    method: &str,
    opts: &TxOptions,
) -> Result<Receipt, NodeError> {
    let from = keys.address();
    let gas_price = match opts.gas_price {
        Some(p) => p,
        None => node.gas_price(method)?,
    };
    let mut tx = UnsignedTransaction {
        from,
        to,
        nonce: node.nonce(&from)?,
        gas_limit: 0,
        gas_price,
        value: 0,
        data,
        scheme_id: SignatureScheme::Ed25519 as u8,
    };
    tx.gas_limit = match opts.gas_limit {
        Some(g) => g,
        None => node.estimate_gas(&tx)?,
    };
    let signed = keys.sign(tx);
    let hash = node.send_transaction(&signed)?;
    node.wait_for_receipt(&hash, opts.receipt_timeout)
}

/// Deploys a new FirmwareIntegrity contract owned by `keys`.
pub fn deploy<N: Node>(
    node: &N,
    keys: &Keypair,
    opts: &TxOptions,
) -> Result<(Address, Receipt), NodeError> {
    let receipt = transact(node, keys, None, CREATION_CODE.to_vec(), "deploy", opts)?;
    match (receipt.status, receipt.contract_address) {
        (TxStatus::Success, Some(addr)) => Ok((addr, receipt)),
        _ => Err(NodeError::Reverted(
            receipt
                .revert_reason
                .unwrap_or_else(|| "deploy-failed".into()),
        )),
    }
}

/// Handle on a deployed contract.
#[derive(Debug, Clone, Copy)]
pub struct FirmwareContract<N> {
    node: N,
    address: Address,
}

impl<N: Node> FirmwareContract<N> {
    pub fn at(node: N, address: Address) -> Self {
        FirmwareContract { node, address }
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn node(&self) -> &N {
        &self.node
    }

    fn send(&self, keys: &Keypair, call: Call, opts: &TxOptions) -> Result<Receipt, NodeError> {
        let method = call.method().name();
        transact(
            &self.node,
            keys,
            Some(self.address),
            call.encode(),
            method,
            opts,
        )
    }

    fn read(&self, call: Call) -> Result<Vec<u8>, NodeError> {
        self.node.call(Address::ZERO, &self.address, &call.encode())
    }

    /// One-time, owner-only store of the reference digest. A reverted
    /// receipt is returned as `Ok`.
    pub fn store_hash(
        &self,
        keys: &Keypair,
        d: Digest,
        opts: &TxOptions,
    ) -> Result<Receipt, NodeError> {
        self.send(keys, Call::StoreHash(d), opts)
    }

    /// Free read-only comparison against the reference.
    pub fn verify_hash_call(&self, d: Digest) -> Result<bool, NodeError> {
        let out = self.read(Call::VerifyHash(d))?;
        decode_bool(&out).ok_or_else(|| NodeError::Other("malformed bool".into()))
    }

    /// Fee-bearing verification that records a `VerificationPerformed` event.
    pub fn verify_hash_tx(
        &self,
        keys: &Keypair,
        d: Digest,
        opts: &TxOptions,
    ) -> Result<Receipt, NodeError> {
        self.send(keys, Call::VerifyHash(d), opts)
    }

    pub fn register_versioned(
        &self,
        keys: &Keypair,
        firmware_id: &str,
        d: Digest,
        opts: &TxOptions,
    ) -> Result<Receipt, NodeError> {
        if !super::validate_firmware_id(firmware_id) {
            return Err(NodeError::Other(format!(
                "invalid firmware id {firmware_id:?}"
            )));
        }
        self.send(
            keys,
            Call::RegisterVersioned {
                id: firmware_id.to_string(),
                digest: d,
            },
            opts,
        )
    }

    pub fn get_versioned(&self, firmware_id: &str) -> Result<VersionedEntry, NodeError> {
        let out = self.read(Call::GetVersioned(firmware_id.to_string()))?;
        VersionedEntry::decode(&out).ok_or_else(|| NodeError::Other("malformed entry".into()))
    }

    pub fn verify_versioned(&self, firmware_id: &str, d: Digest) -> Result<bool, NodeError> {
        let out = self.read(Call::VerifyVersioned {
            id: firmware_id.to_string(),
            digest: d,
        })?;
        decode_bool(&out).ok_or_else(|| NodeError::Other("malformed bool".into()))
    }

    pub fn owner(&self) -> Result<Address, NodeError> {
        let out = self.read(Call::Owner)?;
        let bytes: [u8; 20] = out
            .try_into()
            .map_err(|_| NodeError::Other("malformed address".into()))?;
        Ok(Address(bytes))
    }

    pub fn reference(&self) -> Result<Digest, NodeError> {
        let out = self.read(Call::Reference)?;
        let bytes: [u8; 32] = out
            .try_into()
            .map_err(|_| NodeError::Other("malformed digest".into()))?;
        Ok(Digest(bytes))
    }
}

/// The verdict carried by a logged verification receipt.
pub fn verification_outcome(receipt: &Receipt) -> Option<bool> {
    receipt
        .logs
        .iter()
        .find(|e| e.kind == crate::ledger::EventKind::VerificationPerformed)
        .and_then(|e| e.matched)
}
