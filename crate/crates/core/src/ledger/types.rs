use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{DecodeError, Decoder, Encoder};
use crate::fingerprint::Digest;
use crate::serde_util;

pub type TxHash = Digest;
pub type BlockHash = Digest;
pub type Gas = u64;
pub type Wei = u128;

pub const WEI_PER_GWEI: Wei = 1_000_000_000;
pub const WEI_PER_ETH: Wei = 1_000_000_000_000_000_000;

/// A 20-byte account or contract address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0u8; 20]);

    /// Last 20 bytes of a 32-byte hash.
    pub fn from_hash(d: &Digest) -> Address {
        let mut out = [0u8; 20];
        out.copy_from_slice(&d.0[12..]);
        Address(out)
    }

    /// Address of a contract created by `deployer` with account nonce `nonce`.
    pub fn for_contract(deployer: &Address, nonce: u64) -> Address {
        Address::from_hash(&Digest::of_parts(&[&deployer.0, &nonce.to_be_bytes()]))
    }

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.0))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid address {0:?}: expected 0x followed by 40 hex characters")]
pub struct AddressParseError(pub String);

impl FromStr for Address {
    type Err = AddressParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AddressParseError(s.to_string());
        let body = s.strip_prefix("0x").ok_or_else(err)?;
        if body.len() != 40 {
            return Err(err());
        }
        let bytes = hex::decode(body).map_err(|_| err())?;
        Ok(Address(bytes.try_into().map_err(|_| err())?))
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Formats a wei amount as an exact decimal ETH string without trailing zeros.
pub fn format_eth(wei: Wei) -> String {
    let whole = wei / WEI_PER_ETH;
    let frac = wei % WEI_PER_ETH;
    if frac == 0 {
        return whole.to_string();
    }
    let frac = format!("{frac:018}");
    format!("{whole}.{}", frac.trim_end_matches('0'))
}

/// Formats a wei amount in ETH rounded to `sig` significant figures, with
/// trailing zeros dropped. `4_430_010_654_608_835` wei at 4 figures is
/// `0.00443`.
pub fn format_eth_sig(wei: Wei, sig: u32) -> String {
    if wei == 0 {
        return "0".to_string();
    }
    let digits = wei.to_string().len() as i32;
    // Round to `sig` significant decimal digits in integer arithmetic.
    let drop = digits - sig as i32;
    let rounded = if drop > 0 {
        let unit = 10u128.pow(drop as u32);
        (wei + unit / 2) / unit * unit
    } else {
        wei
    };
    format_eth(rounded)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxStatus {
    Success,
    Reverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    HashStored,
    VerificationPerformed,
}

/// A contract log entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub emitter: Address,
    pub actor: Address,
    pub digest: Digest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub firmware_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u64>,
    pub block_number: u64,
    pub log_index: u32,
}

impl Event {
    /// Indexed topics: event signature and actor.
    pub fn topic_count(&self) -> u64 {
        2
    }

    /// Length of the unindexed data section in bytes.
    pub fn data_len(&self) -> u64 {
        let mut len = 32;
        if self.matched.is_some() {
            len += 1;
        }
        if self.firmware_id.is_some() {
            len += crate::contract::FIRMWARE_ID_FIELD_LEN as u64;
        }
        if self.version.is_some() {
            len += 8;
        }
        len
    }
}

/// The signed portion of a transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsignedTransaction {
    pub from: Address,
    pub to: Option<Address>,
    pub nonce: u64,
    pub gas_limit: Gas,
    pub gas_price: Wei,
    pub value: Wei,
    pub data: Vec<u8>,
    pub scheme_id: u8,
}

impl UnsignedTransaction {
    pub fn encode_into(&self, e: &mut Encoder) {
        e.fixed(&self.from.0);
        match &self.to {
            Some(to) => e.u8(1).fixed(&to.0),
            None => e.u8(0),
        };
        e.u64(self.nonce)
            .u64(self.gas_limit)
            .u128(self.gas_price)
            .u128(self.value)
            .bytes(&self.data)
            .u8(self.scheme_id);
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        self.encode_into(&mut e);
        e.finish()
    }

    pub fn hash(&self) -> TxHash {
        Digest::of(&self.canonical_bytes())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let out = Self::decode_from(&mut d)?;
        d.finish()?;
        Ok(out)
    }

    pub fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let from = Address(d.fixed()?);
        let to = match d.tag(1)? {
            1 => Some(Address(d.fixed()?)),
            _ => None,
        };
        Ok(UnsignedTransaction {
            from,
            to,
            nonce: d.u64()?,
            gas_limit: d.u64()?,
            gas_price: d.u128()?,
            value: d.u128()?,
            data: d.bytes()?.to_vec(),
            scheme_id: d.u8()?,
        })
    }
}

/// A transaction plus the sender's public key and a detached signature over
/// its hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedTransaction {
    pub tx: UnsignedTransaction,
    pub public_key: Vec<u8>,
    pub signature: Vec<u8>,
}

impl SignedTransaction {
    pub fn hash(&self) -> TxHash {
        self.tx.hash()
    }

    pub fn encode_into(&self, e: &mut Encoder) {
        self.tx.encode_into(e);
        e.bytes(&self.public_key).bytes(&self.signature);
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        self.encode_into(&mut e);
        e.finish()
    }

    pub fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let tx = UnsignedTransaction::decode_from(d)?;
        let public_key = d.bytes()?.to_vec();
        let signature = d.bytes()?.to_vec();
        Ok(SignedTransaction {
            tx,
            public_key,
            signature,
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let out = Self::decode_from(&mut d)?;
        d.finish()?;
        Ok(out)
    }
}

/// The immutable outcome of an included transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_hash: TxHash,
    pub block_number: u64,
    pub tx_index: u32,
    pub from: Address,
    pub to: Option<Address>,
    pub status: TxStatus,
    pub gas_used: Gas,
    #[serde(with = "serde_util::wei")]
    pub gas_price: Wei,
    #[serde(with = "serde_util::wei")]
    pub fee: Wei,
    pub contract_address: Option<Address>,
    pub logs: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revert_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub number: u64,
    pub parent_hash: BlockHash,
    pub timestamp_ms: u64,
    pub gas_used: Gas,
    pub state_root: Digest,
    pub coinbase: Address,
    pub tx_hashes: Vec<TxHash>,
}

impl BlockHeader {
    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.u64(self.number)
            .fixed(&self.parent_hash.0)
            .u64(self.timestamp_ms)
            .u64(self.gas_used)
            .fixed(&self.state_root.0)
            .fixed(&self.coinbase.0)
            .u32(self.tx_hashes.len() as u32);
        for h in &self.tx_hashes {
            e.fixed(&h.0);
        }
        e.finish()
    }

    pub fn hash(&self) -> BlockHash {
        Digest::of(&self.encode())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub hash: BlockHash,
    pub transactions: Vec<SignedTransaction>,
}

impl Block {
    pub fn number(&self) -> u64 {
        self.header.number
    }

    pub fn timestamp_ms(&self) -> u64 {
        self.header.timestamp_ms
    }

    /// Header followed by every signed transaction.
    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.bytes(&self.header.encode());
        e.u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            tx.encode_into(&mut e);
        }
        e.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let header_bytes = d.bytes()?;
        let header = decode_header(header_bytes)?;
        let n = d.u32()? as usize;
        let mut transactions = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            transactions.push(SignedTransaction::decode_from(&mut d)?);
        }
        d.finish()?;
        let hash = Digest::of(header_bytes);
        Ok(Block {
            header,
            hash,
            transactions,
        })
    }
}

fn decode_header(bytes: &[u8]) -> Result<BlockHeader, DecodeError> {
    let mut d = Decoder::new(bytes);
    let number = d.u64()?;
    let parent_hash = Digest(d.fixed()?);
    let timestamp_ms = d.u64()?;
    let gas_used = d.u64()?;
    let state_root = Digest(d.fixed()?);
    let coinbase = Address(d.fixed()?);
    let n = d.u32()? as usize;
    let mut tx_hashes = Vec::with_capacity(n.min(4096));
    for _ in 0..n {
        tx_hashes.push(Digest(d.fixed()?));
    }
    d.finish()?;
    Ok(BlockHeader {
        number,
        parent_hash,
        timestamp_ms,
        gas_used,
        state_root,
        coinbase,
        tx_hashes,
    })
}
