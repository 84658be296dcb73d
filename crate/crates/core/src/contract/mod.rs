//! The FirmwareIntegrity contract, executed natively by the ledger.
//!
//! Storage holds the owner, a one-time reference digest, and a versioned
//! registry keyed by firmware id. Calldata is a 4-byte selector (first four
//! bytes of SHA-256 of the method signature) followed by fixed-width
//! arguments: digests as 32 raw bytes, firmware ids as 64 bytes of UTF-8
//! right-padded with zeros.

pub mod audit;
pub mod ops;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::Encoder;
use crate::fingerprint::Digest;
use crate::ledger::types::{Address, Event, EventKind};

pub use audit::{export_audit, AuditRecord};
pub use ops::{FirmwareContract, TxOptions};

/// Creation payload identifying the contract code.
pub const CREATION_CODE: &[u8] = b"FirmwareIntegrity";
/// Width of an encoded firmware id argument.
pub const FIRMWARE_ID_FIELD_LEN: usize = 64;
/// Registry id reserved for Merkle batch roots.
pub const MERKLE_ROOT_ID: &str = "merkle-root";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    StoreHash,
    VerifyHash,
    RegisterVersioned,
    GetVersioned,
    VerifyVersioned,
    Owner,
    Reference,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::StoreHash,
        Method::VerifyHash,
        Method::RegisterVersioned,
        Method::GetVersioned,
        Method::VerifyVersioned,
        Method::Owner,
        Method::Reference,
    ];

    pub fn signature(self) -> &'static str {
        match self {
            Method::StoreHash => "storeHash(bytes32)",
            Method::VerifyHash => "verifyHash(bytes32)",
            Method::RegisterVersioned => "registerVersioned(string,bytes32)",
            Method::GetVersioned => "getVersioned(string)",
            Method::VerifyVersioned => "verifyVersioned(string,bytes32)",
            Method::Owner => "owner()",
            Method::Reference => "reference()",
        }
    }

    /// Name used in gas tables and audit records.
    pub fn name(self) -> &'static str {
        let sig = self.signature();
        &sig[..sig.find('(').unwrap()]
    }

    pub fn selector(self) -> [u8; 4] {
        let d = Digest::of(self.signature().as_bytes());
        [d.0[0], d.0[1], d.0[2], d.0[3]]
    }

    pub fn from_selector(sel: &[u8]) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.selector() == sel)
    }
}

/// Name of the method a transaction invokes, as shown in audit records.
pub fn method_name(to: Option<&Address>, data: &[u8]) -> String {
    if to.is_none() {
        return "deploy".to_string();
    }
    if data.is_empty() {
        return "transfer".to_string();
    }
    match data.get(..4).and_then(Method::from_selector) {
        Some(m) => m.name().to_string(),
        None => format!("0x{}", hex::encode(&data[..data.len().min(4)])),
    }
}

/// A decoded contract invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Call {
    StoreHash(Digest),
    VerifyHash(Digest),
    RegisterVersioned { id: String, digest: Digest },
    GetVersioned(String),
    VerifyVersioned { id: String, digest: Digest },
    Owner,
    Reference,
}

impl Call {
    pub fn method(&self) -> Method {
        match self {
            Call::StoreHash(_) => Method::StoreHash,
            Call::VerifyHash(_) => Method::VerifyHash,
            Call::RegisterVersioned { .. } => Method::RegisterVersioned,
            Call::GetVersioned(_) => Method::GetVersioned,
            Call::VerifyVersioned { .. } => Method::VerifyVersioned,
            Call::Owner => Method::Owner,
            Call::Reference => Method::Reference,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.method().selector().to_vec();
        match self {
            Call::StoreHash(d) | Call::VerifyHash(d) => out.extend_from_slice(&d.0),
            Call::RegisterVersioned { id, digest } | Call::VerifyVersioned { id, digest } => {
                out.extend_from_slice(&encode_id(id));
                out.extend_from_slice(&digest.0);
            }
            Call::GetVersioned(id) => out.extend_from_slice(&encode_id(id)),
            Call::Owner | Call::Reference => {}
        }
        out
    }

    pub fn decode(data: &[u8]) -> Result<Call, Revert> {
        let Some(method) = data.get(..4).and_then(Method::from_selector) else {
            return Err(Revert::new(None, "unknown-method"));
        };
        let args = &data[4..];
        let malformed = || Revert::new(Some(method), "malformed-calldata");
        let digest_at = |off: usize| -> Result<Digest, Revert> {
            args.get(off..off + 32)
                .map(|b| Digest(b.try_into().unwrap()))
                .ok_or_else(malformed)
        };
        let id_at = |off: usize| -> Result<String, Revert> {
            let field = args
                .get(off..off + FIRMWARE_ID_FIELD_LEN)
                .ok_or_else(malformed)?;
            decode_id(field).ok_or_else(|| Revert::new(Some(method), "invalid-firmware-id"))
        };
        let (call, len) = match method {
            Method::StoreHash => (Call::StoreHash(digest_at(0)?), 32),
            Method::VerifyHash => (Call::VerifyHash(digest_at(0)?), 32),
            Method::RegisterVersioned => (
                Call::RegisterVersioned {
                    id: id_at(0)?,
                    digest: digest_at(FIRMWARE_ID_FIELD_LEN)?,
                },
                FIRMWARE_ID_FIELD_LEN + 32,
            ),
            Method::GetVersioned => (Call::GetVersioned(id_at(0)?), FIRMWARE_ID_FIELD_LEN),
            Method::VerifyVersioned => (
                Call::VerifyVersioned {
                    id: id_at(0)?,
                    digest: digest_at(FIRMWARE_ID_FIELD_LEN)?,
                },
                FIRMWARE_ID_FIELD_LEN + 32,
            ),
            Method::Owner => (Call::Owner, 0),
            Method::Reference => (Call::Reference, 0),
        };
        if args.len() != len {
            return Err(malformed());
        }
        Ok(call)
    }
}

/// Firmware ids are 1..=64 bytes of UTF-8 without NUL.
pub fn validate_firmware_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= FIRMWARE_ID_FIELD_LEN && !id.contains('\0')
}

fn encode_id(id: &str) -> [u8; FIRMWARE_ID_FIELD_LEN] {
    assert!(validate_firmware_id(id), "invalid firmware id {id:?}");
    let mut out = [0u8; FIRMWARE_ID_FIELD_LEN];
    out[..id.len()].copy_from_slice(id.as_bytes());
    out
}

fn decode_id(field: &[u8]) -> Option<String> {
    let end = field.iter().position(|&b| b == 0).unwrap_or(field.len());
    if field[end..].iter().any(|&b| b != 0) {
        return None;
    }
    let id = std::str::from_utf8(&field[..end]).ok()?;
    validate_firmware_id(id).then(|| id.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionedEntry {
    pub digest: Digest,
    pub version: u64,
    pub registered_at_block: u64,
}

impl VersionedEntry {
    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.fixed(&self.digest.0)
            .u64(self.version)
            .u64(self.registered_at_block);
        e.finish()
    }

    pub fn decode(bytes: &[u8]) -> Option<VersionedEntry> {
        if bytes.len() != 48 {
            return None;
        }
        Some(VersionedEntry {
            digest: Digest(bytes[..32].try_into().unwrap()),
            version: u64::from_be_bytes(bytes[32..40].try_into().unwrap()),
            registered_at_block: u64::from_be_bytes(bytes[40..].try_into().unwrap()),
        })
    }
}

/// Contract execution failure. State is left untouched.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason}")]
pub struct Revert {
    pub method: Option<Method>,
    pub reason: String,
}

impl Revert {
    pub fn new(method: Option<Method>, reason: &str) -> Self {
        Revert {
            method,
            reason: reason.to_string(),
        }
    }
}

/// Environment of one invocation.
#[derive(Debug, Clone)]
pub struct ExecContext {
    pub caller: Address,
    pub contract: Address,
    pub block_number: u64,
    pub value: u128,
    /// Index assigned to the first log this invocation emits.
    pub first_log_index: u32,
}

/// Successful invocation: return data plus consumed storage and logs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub method: Method,
    pub output: Vec<u8>,
    pub storage_new: u64,
    pub storage_updated: u64,
    pub logs: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractState {
    pub owner: Address,
    pub reference: Option<Digest>,
    pub stored_at_block: Option<u64>,
    pub registry: BTreeMap<String, VersionedEntry>,
    pub event_log: Vec<Event>,
}

impl ContractState {
    /// Storage slots written by the constructor.
    pub const DEPLOY_STORAGE_SLOTS: u64 = 1;

    pub fn new(owner: Address) -> Self {
        ContractState {
            owner,
            reference: None,
            stored_at_block: None,
            registry: BTreeMap::new(),
            event_log: Vec::new(),
        }
    }

    /// Canonical encoding of contract storage. The event log is not storage.
    pub fn encode_storage(&self, e: &mut Encoder) {
        e.fixed(&self.owner.0);
        match &self.reference {
            Some(d) => e.u8(1).fixed(&d.0),
            None => e.u8(0),
        };
        match self.stored_at_block {
            Some(b) => e.u8(1).u64(b),
            None => e.u8(0),
        };
        e.u32(self.registry.len() as u32);
        for (id, entry) in &self.registry {
            e.bytes(id.as_bytes()).fixed(&entry.encode());
        }
    }

    pub fn storage_hash(&self) -> Digest {
        let mut e = Encoder::new();
        self.encode_storage(&mut e);
        Digest::of(e.as_slice())
    }

    /// Read-only verification against the stored reference.
    pub fn verify(&self, d: &Digest) -> Result<bool, Revert> {
        match &self.reference {
            Some(r) => Ok(r == d),
            None => Err(Revert::new(Some(Method::VerifyHash), "no-reference")),
        }
    }

    pub fn execute(&mut self, ctx: &ExecContext, data: &[u8]) -> Result<Outcome, Revert> {
        let call = Call::decode(data)?;
        let method = call.method();
        let revert = |reason: &str| Err(Revert::new(Some(method), reason));
        if ctx.value != 0 {
            return revert("non-payable");
        }
        let event = |kind, digest, matched, firmware_id, version, offset: u32| Event {
            kind,
            emitter: ctx.contract,
            actor: ctx.caller,
            digest,
            matched,
            firmware_id,
            version,
            block_number: ctx.block_number,
            log_index: ctx.first_log_index + offset,
        };
        let mut out = Outcome {
            method,
            output: Vec::new(),
            storage_new: 0,
            storage_updated: 0,
            logs: Vec::new(),
        };
        match call {
            Call::StoreHash(d) => {
                if ctx.caller != self.owner {
                    return revert("unauthorized");
                }
                if self.reference.is_some() {
                    return revert("already-stored");
                }
                self.reference = Some(d);
                self.stored_at_block = Some(ctx.block_number);
                out.storage_new = 2;
                out.logs
                    .push(event(EventKind::HashStored, d, None, None, None, 0));
            }
            Call::VerifyHash(d) => {
                let matched = self.verify(&d)?;
                out.output = vec![matched as u8];
                out.logs.push(event(
                    EventKind::VerificationPerformed,
                    d,
                    Some(matched),
                    None,
                    None,
                    0,
                ));
            }
            Call::RegisterVersioned { id, digest } => {
                if ctx.caller != self.owner {
                    return revert("unauthorized");
                }
                let version = match self.registry.get(&id) {
                    Some(prev) => {
                        out.storage_updated = 2;
                        prev.version + 1
                    }
                    None => {
                        out.storage_new = 2;
                        1
                    }
                };
                self.registry.insert(
                    id.clone(),
                    VersionedEntry {
                        digest,
                        version,
                        registered_at_block: ctx.block_number,
                    },
                );
                out.output = version.to_be_bytes().to_vec();
                out.logs.push(event(
                    EventKind::HashStored,
                    digest,
                    None,
                    Some(id),
                    Some(version),
                    0,
                ));
            }
            Call::GetVersioned(id) => match self.registry.get(&id) {
                Some(entry) => out.output = entry.encode(),
                None => return revert("unknown-id"),
            },
            Call::VerifyVersioned { id, digest } => match self.registry.get(&id) {
                Some(entry) => out.output = vec![(entry.digest == digest) as u8],
                None => return revert("unknown-id"),
            },
            Call::Owner => out.output = self.owner.0.to_vec(),
            Call::Reference => match &self.reference {
                Some(d) => out.output = d.0.to_vec(),
                None => return revert("no-reference"),
            },
        }
        self.event_log.extend(out.logs.iter().cloned());
        Ok(out)
    }
}

/// Decodes a boolean return value.
pub fn decode_bool(output: &[u8]) -> Option<bool> {
    match output {
        [0] => Some(false),
        [1] => Some(true),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(caller: Address) -> ExecContext {
        ExecContext {
            caller,
            contract: Address([0xcc; 20]),
            block_number: 3,
            value: 0,
            first_log_index: 0,
        }
    }

    const OWNER: Address = Address([1; 20]);
    const OTHER: Address = Address([2; 20]);

    #[test]
    fn selectors_are_distinct() {
        let mut sels: Vec<_> = Method::ALL.iter().map(|m| m.selector()).collect();
        sels.sort();
        sels.dedup();
        assert_eq!(sels.len(), Method::ALL.len());
        assert_eq!(Method::StoreHash.name(), "storeHash");
    }

    #[test]
    fn calldata_round_trip() {
        let calls = [
            Call::StoreHash(Digest([7; 32])),
            Call::RegisterVersioned {
                id: "plc-7".into(),
                digest: Digest([1; 32]),
            },
            Call::GetVersioned("x".repeat(64)),
            Call::Owner,
        ];
        for c in calls {
            assert_eq!(Call::decode(&c.encode()).unwrap(), c);
        }
        assert_eq!(Call::StoreHash(Digest::ZERO).encode().len(), 36);
        assert_eq!(
            Call::RegisterVersioned {
                id: "a".into(),
                digest: Digest::ZERO
            }
            .encode()
            .len(),
            100
        );
    }

    #[test]
    fn bad_calldata() {
        assert_eq!(
            Call::decode(&[1, 2, 3, 4]).unwrap_err().reason,
            "unknown-method"
        );
        let mut data = Call::StoreHash(Digest::ZERO).encode();
        data.push(0);
        assert_eq!(
            Call::decode(&data).unwrap_err().reason,
            "malformed-calldata"
        );
        let mut data = Method::GetVersioned.selector().to_vec();
        data.extend_from_slice(&[0u8; 64]);
        assert_eq!(
            Call::decode(&data).unwrap_err().reason,
            "invalid-firmware-id"
        );
    }

    #[test]
    fn store_rules() {
        let mut s = ContractState::new(OWNER);
        let d = Digest([9; 32]);
        let call = Call::StoreHash(d).encode();

        let err = s.execute(&ctx(OTHER), &call).unwrap_err();
        assert_eq!(err.reason, "unauthorized");
        assert_eq!(s.reference, None);

        let out = s.execute(&ctx(OWNER), &call).unwrap();
        assert_eq!(out.storage_new, 2);
        assert_eq!(s.reference, Some(d));
        assert_eq!(s.stored_at_block, Some(3));
        assert_eq!(s.event_log.len(), 1);
        assert_eq!(s.event_log[0].kind, EventKind::HashStored);

        let err = s.execute(&ctx(OWNER), &call).unwrap_err();
        assert_eq!(err.reason, "already-stored");
    }

    #[test]
    fn verify_rules() {
        let mut s = ContractState::new(OWNER);
        let d = Digest([9; 32]);
        assert_eq!(
            s.execute(&ctx(OTHER), &Call::VerifyHash(d).encode())
                .unwrap_err()
                .reason,
            "no-reference"
        );
        s.execute(&ctx(OWNER), &Call::StoreHash(d).encode())
            .unwrap();
        let out = s
            .execute(&ctx(OTHER), &Call::VerifyHash(d).encode())
            .unwrap();
        assert_eq!(decode_bool(&out.output), Some(true));
        assert_eq!(out.logs[0].matched, Some(true));
        assert_eq!(out.logs[0].actor, OTHER);
        let out = s
            .execute(
                &ctx(OTHER),
                &Call::VerifyHash(d.with_bit_flipped(200)).encode(),
            )
            .unwrap();
        assert_eq!(decode_bool(&out.output), Some(false));
    }

    #[test]
    fn versioned_registry() {
        let mut s = ContractState::new(OWNER);
        let reg = |id: &str, b: u8| Call::RegisterVersioned {
            id: id.into(),
            digest: Digest([b; 32]),
        };
        let out = s.execute(&ctx(OWNER), &reg("plc-7", 1).encode()).unwrap();
        assert_eq!(out.output, 1u64.to_be_bytes());
        assert_eq!(out.storage_new, 2);
        let out = s.execute(&ctx(OWNER), &reg("plc-7", 2).encode()).unwrap();
        assert_eq!(out.output, 2u64.to_be_bytes());
        assert_eq!(out.storage_updated, 2);
        assert_eq!(s.registry["plc-7"].digest, Digest([2; 32]));
        assert_eq!(
            s.execute(&ctx(OTHER), &reg("plc-7", 3).encode())
                .unwrap_err()
                .reason,
            "unauthorized"
        );
        assert_eq!(s.registry["plc-7"].version, 2);
    }

    #[test]
    fn value_rejected() {
        let mut s = ContractState::new(OWNER);
        let mut c = ctx(OWNER);
        c.value = 1;
        assert_eq!(
            s.execute(&c, &Call::Owner.encode()).unwrap_err().reason,
            "non-payable"
        );
    }
}
