//! Anchor a fleet of firmware digests under one on-chain Merkle root and
//! check individual devices with inclusion proofs.

use firmchain::anchor::{anchor_root, build_tree, verify_against_chain};
use firmchain::contract::{self, FirmwareContract, TxOptions};
use firmchain::ledger::{CalibrationProfile, GenesisConfig, Keypair};
use firmchain::{Digest, LocalNode};

fn main() -> anyhow::Result<()> {
    let node = LocalNode::instant(GenesisConfig::dev(CalibrationProfile::sepolia_paper()));
    let owner = Keypair::from_seed(b"dev-0");
    let (addr, _) = contract::ops::deploy(&node, &owner, &TxOptions::default())?;
    let c = FirmwareContract::at(node, addr);

    let fleet: Vec<Digest> = (0..1000)
        .map(|i| Digest::of(format!("sensor-{i:04} firmware").as_bytes()))
        .collect();
    let tree = build_tree(&fleet)?;
    let r = anchor_root(&c, &owner, tree.root(), &TxOptions::default())?;
    println!(
        "anchored {} devices under {} for {} gas",
        fleet.len(),
        tree.root(),
        r.gas_used
    );

    let proof = tree.prove(417)?;
    println!("device 417: proof of {} steps", proof.path.len());
    println!(
        "  genuine: {}",
        verify_against_chain(&c, &fleet[417], &proof)?
    );
    println!(
        "  tampered: {}",
        verify_against_chain(&c, &Digest::of(b"rogue"), &proof)?
    );
    Ok(())
}
