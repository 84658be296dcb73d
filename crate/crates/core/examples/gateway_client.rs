//! Serve a node over HTTP and drive it with the RPC client.

use firmchain::contract::{self, FirmwareContract, TxOptions};
use firmchain::gateway::{serve, RpcClient};
use firmchain::ledger::{CalibrationProfile, GenesisConfig, Keypair};
use firmchain::{Digest, LocalNode, Node};

fn main() -> anyhow::Result<()> {
    let node = LocalNode::instant(GenesisConfig::dev(CalibrationProfile::devnet()));
    let server = serve("127.0.0.1:0".parse()?, node.clone())?;
    println!("gateway at {}", server.url());

    let client = RpcClient::new(&server.url());
    println!("chain id {}", client.chain_id()?);

    let owner = Keypair::from_seed(b"dev-0");
    let (addr, _) = contract::ops::deploy(&client, &owner, &TxOptions::default())?;
    let c = FirmwareContract::at(&client, addr);
    c.register_versioned(
        &owner,
        "gw-router",
        Digest::of(b"router fw 3.1"),
        &TxOptions::default(),
    )?;
    let entry = c.get_versioned("gw-router")?;
    println!(
        "gw-router v{} at block {}: {}",
        entry.version, entry.registered_at_block, entry.digest
    );

    assert_eq!(client.state_root()?, node.state_root()?);
    server.stop();
    Ok(())
}
