//! Gas schedule and cost accounting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{Gas, UnsignedTransaction};

/// Per-operation gas costs. `method_surcharge` is keyed by method name
/// (`deploy`, `storeHash`, `verifyHash`, `registerVersioned`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasSchedule {
    pub tx_base: Gas,
    pub calldata_nonzero_byte: Gas,
    pub calldata_zero_byte: Gas,
    pub create_surcharge: Gas,
    pub code_deposit_per_byte: Gas,
    pub storage_write_new: Gas,
    pub storage_write_update: Gas,
    pub log_base: Gas,
    pub log_per_topic: Gas,
    pub log_per_data_byte: Gas,
    #[serde(default)]
    pub method_surcharge: BTreeMap<String, Gas>,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            tx_base: 21_000,
            calldata_nonzero_byte: 16,
            calldata_zero_byte: 4,
            create_surcharge: 32_000,
            code_deposit_per_byte: 200,
            storage_write_new: 20_000,
            storage_write_update: 5_000,
            log_base: 375,
            log_per_topic: 375,
            log_per_data_byte: 8,
            method_surcharge: BTreeMap::new(),
        }
    }
}

impl GasSchedule {
    pub fn surcharge(&self, method: &str) -> Gas {
        self.method_surcharge.get(method).copied().unwrap_or(0)
    }

    pub fn calldata_cost(&self, data: &[u8]) -> Gas {
        data.iter()
            .map(|&b| {
                if b == 0 {
                    self.calldata_zero_byte
                } else {
                    self.calldata_nonzero_byte
                }
            })
            .sum()
    }

    /// Cost charged before execution: base, calldata, and creation costs.
    pub fn intrinsic(&self, tx: &UnsignedTransaction, declared_code_size: u64) -> Gas {
        let mut gas = self.tx_base + self.calldata_cost(&tx.data);
        if tx.to.is_none() {
            gas += self.create_surcharge + self.code_deposit_per_byte * declared_code_size;
        }
        gas
    }

    pub fn execution(&self, cost: &ExecutionCost) -> Gas {
        let method = cost.method.as_deref().map_or(0, |m| self.surcharge(m));
        method
            + self.storage_write_new * cost.storage_new
            + self.storage_write_update * cost.storage_updated
            + self.log_base * cost.logs
            + self.log_per_topic * cost.log_topics
            + self.log_per_data_byte * cost.log_data_bytes
    }
}

/// Resources consumed while executing a transaction's payload.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionCost {
    pub method: Option<String>,
    pub storage_new: u64,
    pub storage_updated: u64,
    pub logs: u64,
    pub log_topics: u64,
    pub log_data_bytes: u64,
}

impl ExecutionCost {
    /// Cost of a reverted call: the method surcharge only.
    pub fn reverted(method: Option<String>) -> Self {
        ExecutionCost {
            method,
            ..Default::default()
        }
    }
}

/// Total gas for `tx` given what its execution consumed.
pub fn gas_for(
    tx: &UnsignedTransaction,
    schedule: &GasSchedule,
    declared_code_size: u64,
    cost: &ExecutionCost,
) -> Gas {
    schedule.intrinsic(tx, declared_code_size) + schedule.execution(cost)
}
