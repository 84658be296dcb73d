//! Deploy a contract, register a firmware digest and verify an image,
//! both with a free read-only call and a logged transaction.

use firmchain::contract::{self, FirmwareContract, TxOptions};
use firmchain::ledger::{format_eth_sig, CalibrationProfile, GenesisConfig, Keypair};
use firmchain::{Digest, LocalNode};

fn main() -> anyhow::Result<()> {
    let node = LocalNode::instant(GenesisConfig::dev(CalibrationProfile::sepolia_paper()));
    let owner = Keypair::from_seed(b"dev-0");
    let opts = TxOptions::default();

    let (addr, deploy) = contract::ops::deploy(&node, &owner, &opts)?;
    println!(
        "deployed {addr}: gas {} fee {} ETH",
        deploy.gas_used,
        format_eth_sig(deploy.fee, 4)
    );

    let c = FirmwareContract::at(node, addr);
    let image = b"plc firmware v1.2.0";
    let stored = c.store_hash(&owner, Digest::of(image), &opts)?;
    println!(
        "registered: gas {} fee {} ETH",
        stored.gas_used,
        format_eth_sig(stored.fee, 4)
    );

    println!(
        "genuine image matches: {}",
        c.verify_hash_call(Digest::of(image))?
    );
    println!(
        "patched image matches: {}",
        c.verify_hash_call(Digest::of(b"plc firmware v1.2.0+backdoor"))?
    );

    let logged = c.verify_hash_tx(&owner, Digest::of(image), &opts)?;
    println!(
        "logged verification: outcome {:?} gas {} fee {} ETH",
        contract::ops::verification_outcome(&logged),
        logged.gas_used,
        format_eth_sig(logged.fee, 4)
    );
    Ok(())
}
