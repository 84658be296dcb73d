//! Calibration profiles and genesis configuration.
//!
//! A profile fixes block timing, the block gas limit, the gas schedule and
//! suggested gas prices. The `sepolia-paper` profile is calibrated so that
//! the FirmwareIntegrity contract's operations consume:
//!
//! | operation                     | gas     |
//! |-------------------------------|---------|
//! | deployment                    | 454,695 |
//! | `storeHash` / new `registerVersioned` entry | 78,200 |
//! | logged `verifyHash`           | 91,891  |
//!
//! with blocks every 12 s and receipts final 8.6 s after sealing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gas::GasSchedule;
use super::keys::Keypair;
use super::types::{Address, Gas, Wei, WEI_PER_ETH};
use crate::serde_util;

pub const SEPOLIA_PAPER: &str = "sepolia-paper";
pub const DEVNET: &str = "devnet";

/// Gas price observed for the deployment transaction (9.742818053 Gwei).
pub const SEPOLIA_DEPLOY_GAS_PRICE: Wei = 9_742_818_053;
/// Gas price observed for the verification transaction (1.539866239 Gwei).
pub const SEPOLIA_VERIFY_GAS_PRICE: Wei = 1_539_866_239;

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("unknown profile {0:?} (known: sepolia-paper, devnet)")]
    Unknown(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid profile file: {0}")]
    Parse(String),
    #[error("invalid profile: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    pub name: String,
    pub chain_id: u64,
    pub block_interval_ms: u64,
    pub finality_delay_ms: u64,
    pub block_gas_limit: Gas,
    /// Stand-in for compiled contract size, billed per byte at deployment.
    pub declared_code_size: u64,
    pub gas: GasSchedule,
    /// Suggested gas price per method name; `default` covers the rest.
    pub gas_price_hints: BTreeMap<String, Wei>,
}

impl CalibrationProfile {
    pub fn builtin(name: &str) -> Result<Self, ProfileError> {
        match name {
            SEPOLIA_PAPER => Ok(Self::sepolia_paper()),
            DEVNET => Ok(Self::devnet()),
            other => Err(ProfileError::Unknown(other.to_string())),
        }
    }

    pub fn sepolia_paper() -> Self {
        let gas = GasSchedule {
            // Uniform calldata pricing makes costs independent of digest bytes.
            calldata_zero_byte: 16,
            method_surcharge: BTreeMap::from([
                ("deploy".to_string(), 32_623),
                ("storeHash".to_string(), 15_243),
                ("registerVersioned".to_string(), 13_643),
                ("verifyHash".to_string(), 68_926),
            ]),
            ..GasSchedule::default()
        };
        CalibrationProfile {
            name: SEPOLIA_PAPER.to_string(),
            chain_id: 11_155_111,
            block_interval_ms: 12_000,
            finality_delay_ms: 8_600,
            block_gas_limit: 30_000_000,
            declared_code_size: 1_744,
            gas,
            gas_price_hints: BTreeMap::from([
                ("default".to_string(), SEPOLIA_VERIFY_GAS_PRICE),
                ("deploy".to_string(), SEPOLIA_DEPLOY_GAS_PRICE),
                ("storeHash".to_string(), SEPOLIA_DEPLOY_GAS_PRICE),
                ("registerVersioned".to_string(), SEPOLIA_DEPLOY_GAS_PRICE),
                ("verifyHash".to_string(), SEPOLIA_VERIFY_GAS_PRICE),
            ]),
        }
    }

    pub fn devnet() -> Self {
        let gas = GasSchedule {
            method_surcharge: BTreeMap::from([
                ("deploy".to_string(), 10_000),
                ("storeHash".to_string(), 2_000),
                ("registerVersioned".to_string(), 2_000),
                ("verifyHash".to_string(), 2_000),
            ]),
            ..GasSchedule::default()
        };
        CalibrationProfile {
            name: DEVNET.to_string(),
            chain_id: 1_337,
            block_interval_ms: 2_000,
            finality_delay_ms: 0,
            block_gas_limit: 30_000_000,
            declared_code_size: 1_744,
            gas,
            gas_price_hints: BTreeMap::from([("default".to_string(), 1_000_000_000)]),
        }
    }

    pub fn gas_price_hint(&self, method: &str) -> Wei {
        self.gas_price_hints
            .get(method)
            .or_else(|| self.gas_price_hints.get("default"))
            .copied()
            .unwrap_or(1_000_000_000)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.block_interval_ms == 0 {
            return Err(ProfileError::Invalid(
                "block_interval must be positive".into(),
            ));
        }
        if self.block_gas_limit == 0 {
            return Err(ProfileError::Invalid(
                "block_gas_limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Genesis state: profile, funded accounts and the fee recipient.
#[derive(Debug, Clone, PartialEq)]
pub struct GenesisConfig {
    pub profile: CalibrationProfile,
    pub accounts: Vec<(Address, Wei)>,
    pub coinbase: Address,
}

/// Seeds of the accounts funded by [`GenesisConfig::dev`].
pub const DEV_SEEDS: [&str; 4] = ["dev-0", "dev-1", "dev-2", "dev-3"];

impl GenesisConfig {
    pub fn new(profile: CalibrationProfile) -> Self {
        GenesisConfig {
            profile,
            accounts: Vec::new(),
            coinbase: Keypair::from_seed(b"coinbase").address(),
        }
    }

    /// Profile with the `dev-*` accounts funded at 100 ETH each.
    pub fn dev(profile: CalibrationProfile) -> Self {
        let mut g = GenesisConfig::new(profile);
        for seed in DEV_SEEDS {
            g.accounts.push((
                Keypair::from_seed(seed.as_bytes()).address(),
                100 * WEI_PER_ETH,
            ));
        }
        g
    }

    pub fn fund(mut self, address: Address, balance: Wei) -> Self {
        self.accounts.push((address, balance));
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&GenesisFile::from(self)).expect("genesis serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ProfileError> {
        let file: GenesisFile =
            toml::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))?;
        file.resolve()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProfileError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ProfileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AccountEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    address: Option<Address>,
    /// Alternative to `address`: fund the account derived from this seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<String>,
    #[serde(with = "serde_util::wei")]
    balance_wei: Wei,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GasOverrides {
    tx_base: Option<Gas>,
    calldata_nonzero_byte: Option<Gas>,
    calldata_zero_byte: Option<Gas>,
    create_surcharge: Option<Gas>,
    code_deposit_per_byte: Option<Gas>,
    storage_write_new: Option<Gas>,
    storage_write_update: Option<Gas>,
    log_base: Option<Gas>,
    log_per_topic: Option<Gas>,
    log_per_data_byte: Option<Gas>,
    #[serde(default)]
    method_surcharge: BTreeMap<String, Gas>,
}

/// On-disk genesis/profile file. Every key except `accounts` is optional
/// and overrides the `base` profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenesisFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chain_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block_interval_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finality_delay_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block_interval_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finality_delay_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block_gas_limit: Option<Gas>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_code_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coinbase: Option<Address>,
    #[serde(default)]
    gas: GasOverrides,
    #[serde(default, with = "wei_map")]
    gas_price_hints: BTreeMap<String, Wei>,
    #[serde(default)]
    accounts: Vec<AccountEntry>,
}

mod wei_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::ledger::types::Wei;

    #[derive(Serialize, Deserialize)]
    struct W(#[serde(with = "crate::serde_util::wei")] Wei);

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, Wei>, s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|(k, v)| (k.clone(), W(*v)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Wei>, D::Error> {
        Ok(BTreeMap::<String, W>::deserialize(d)?
            .into_iter()
            .map(|(k, W(v))| (k, v))
            .collect())
    }
}

fn seconds_to_ms(s: f64, key: &str) -> Result<u64, ProfileError> {
    if !s.is_finite() || s < 0.0 {
        return Err(ProfileError::Invalid(format!(
            "{key} must be a non-negative number"
        )));
    }
    Ok((s * 1000.0).round() as u64)
}

impl From<&GenesisConfig> for GenesisFile {
    fn from(g: &GenesisConfig) -> Self {
        let p = &g.profile;
        let s = &p.gas;
        GenesisFile {
            base: None,
            name: Some(p.name.clone()),
            chain_id: Some(p.chain_id),
            block_interval_s: None,
            finality_delay_s: None,
            block_interval_ms: Some(p.block_interval_ms),
            finality_delay_ms: Some(p.finality_delay_ms),
            block_gas_limit: Some(p.block_gas_limit),
            declared_code_size: Some(p.declared_code_size),
            coinbase: Some(g.coinbase),
            gas: GasOverrides {
                tx_base: Some(s.tx_base),
                calldata_nonzero_byte: Some(s.calldata_nonzero_byte),
                calldata_zero_byte: Some(s.calldata_zero_byte),
                create_surcharge: Some(s.create_surcharge),
                code_deposit_per_byte: Some(s.code_deposit_per_byte),
                storage_write_new: Some(s.storage_write_new),
                storage_write_update: Some(s.storage_write_update),
                log_base: Some(s.log_base),
                log_per_topic: Some(s.log_per_topic),
                log_per_data_byte: Some(s.log_per_data_byte),
                method_surcharge: s.method_surcharge.clone(),
            },
            gas_price_hints: p.gas_price_hints.clone(),
            accounts: g
                .accounts
                .iter()
                .map(|(a, b)| AccountEntry {
                    address: Some(*a),
                    seed: None,
                    balance_wei: *b,
                })
                .collect(),
        }
    }
}

impl GenesisFile {
    fn resolve(self) -> Result<GenesisConfig, ProfileError> {
        // A fully explicit file (as written by `to_toml`) starts from an
        // empty schedule so removed surcharges stay removed.
        let mut p = CalibrationProfile::builtin(self.base.as_deref().unwrap_or(SEPOLIA_PAPER))?;
        if self.base.is_none() && !self.gas.method_surcharge.is_empty() {
            p.gas.method_surcharge.clear();
        }
        if let Some(name) = self.name {
            p.name = name;
        }
        if let Some(v) = self.chain_id {
            p.chain_id = v;
        }
        if let Some(v) = self.block_interval_s {
            p.block_interval_ms = seconds_to_ms(v, "block_interval_s")?;
        }
        if let Some(v) = self.finality_delay_s {
            p.finality_delay_ms = seconds_to_ms(v, "finality_delay_s")?;
        }
        if let Some(v) = self.block_interval_ms {
            p.block_interval_ms = v;
        }
        if let Some(v) = self.finality_delay_ms {
            p.finality_delay_ms = v;
        }
        if let Some(v) = self.block_gas_limit {
            p.block_gas_limit = v;
        }
        if let Some(v) = self.declared_code_size {
            p.declared_code_size = v;
        }
        let g = self.gas;
        let s = &mut p.gas;
        macro_rules! apply {
            ($($field:ident),*) => { $( if let Some(v) = g.$field { s.$field = v; } )* };
        }
        apply!(
            tx_base,
            calldata_nonzero_byte,
            calldata_zero_byte,
            create_surcharge,
            code_deposit_per_byte,
            storage_write_new,
            storage_write_update,
            log_base,
            log_per_topic,
            log_per_data_byte
        );
        s.method_surcharge.extend(g.method_surcharge);
        if !self.gas_price_hints.is_empty() {
            if self.base.is_none() {
                p.gas_price_hints.clear();
            }
            p.gas_price_hints.extend(self.gas_price_hints);
        }
        p.validate()?;

        let mut genesis = GenesisConfig::new(p);
        if let Some(c) = self.coinbase {
            genesis.coinbase = c;
        }
        for entry in self.accounts {
            let address = match (entry.address, entry.seed) {
                (Some(a), None) => a,
                (None, Some(seed)) => Keypair::from_seed(seed.as_bytes()).address(),
                _ => {
                    return Err(ProfileError::Invalid(
                        "each account needs exactly one of `address` or `seed`".into(),
                    ))
                }
            };
            genesis.accounts.push((address, entry.balance_wei));
        }
        Ok(genesis)
    }
}
