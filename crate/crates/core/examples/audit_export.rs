//! Export an explorer-style audit trail for a contract as JSON lines.

use firmchain::contract::{self, audit, FirmwareContract, TxOptions};
use firmchain::ledger::{CalibrationProfile, GenesisConfig, Keypair};
use firmchain::{Digest, LocalNode};

fn main() -> anyhow::Result<()> {
    let node = LocalNode::instant(GenesisConfig::dev(CalibrationProfile::sepolia_paper()));
    let owner = Keypair::from_seed(b"dev-0");
    let intruder = Keypair::from_seed(b"dev-3");
    let opts = TxOptions::default();

    let (addr, _) = contract::ops::deploy(&node, &owner, &opts)?;
    let c = FirmwareContract::at(node.clone(), addr);
    c.store_hash(&owner, Digest::of(b"firmware"), &opts)?;
    c.store_hash(&intruder, Digest::of(b"forged"), &opts)?;
    c.verify_hash_tx(&intruder, Digest::of(b"firmware"), &opts)?;

    let records = audit::export_audit(&node, &addr)?;
    print!("{}", audit::to_jsonl(&records));
    Ok(())
}
