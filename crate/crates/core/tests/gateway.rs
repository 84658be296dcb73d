use firmchain::contract::{self, export_audit, FirmwareContract, TxOptions};
use firmchain::gateway::wire::{self, METHODS};
use firmchain::gateway::{handle_body, request_body, serve, RpcClient};
use firmchain::ledger::{
    CalibrationProfile, GenesisConfig, Keypair, SignatureScheme, UnsignedTransaction, WEI_PER_ETH,
};
use firmchain::{Digest, LocalNode, Node, NodeError};
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

fn devnet() -> LocalNode {
    LocalNode::instant(GenesisConfig::dev(CalibrationProfile::devnet()))
}

fn random_json(rng: &mut ChaCha20Rng, depth: u32) -> Value {
    match rng.random_range(0..if depth > 3 { 6 } else { 8 }) {
        0 => Value::Null,
        1 => json!(rng.random::<bool>()),
        2 => json!(rng.random::<i64>()),
        3 => json!(rng.random::<f64>() * 1e30),
        4 => {
            let n = rng.random_range(0..80);
            let mut b = vec![0u8; n];
            rng.fill_bytes(&mut b);
            json!(format!("0x{}", hex::encode(b)))
        }
        5 => json!([
            "",
            "0x",
            "0xzz",
            "latest",
            "-1",
            "340282366920938463463374607431768211456"
        ]
        .choose(rng)
        .unwrap()),
        6 => Value::Array(
            (0..rng.random_range(0..4))
                .map(|_| random_json(rng, depth + 1))
                .collect(),
        ),
        _ => {
            let mut m = serde_json::Map::new();
            for k in ["id", "method", "params", "x"] {
                if rng.random_bool(0.5) {
                    m.insert(k.into(), random_json(rng, depth + 1));
                }
            }
            Value::Object(m)
        }
    }
}

/// One hostile request body: raw noise, truncation, wrong shapes, or a real
/// method with garbage parameters.
fn hostile_body(rng: &mut ChaCha20Rng) -> Vec<u8> {
    let method = *METHODS.choose(rng).unwrap();
    match rng.random_range(0..7) {
        0 => {
            let mut b = vec![0u8; rng.random_range(0..256)];
            rng.fill_bytes(&mut b);
            b
        }
        1 => {
            let full = request_body(1, method, vec![json!("0x00")]);
            let cut = rng.random_range(0..full.len());
            full.as_bytes()[..cut].to_vec()
        }
        2 => random_json(rng, 0).to_string().into_bytes(),
        3 => {
            let params = (0..rng.random_range(0..4))
                .map(|_| random_json(rng, 1))
                .collect();
            request_body(rng.random(), method, params).into_bytes()
        }
        4 => json!({"id": random_json(rng, 2), "method": method, "params": random_json(rng, 2)})
            .to_string()
            .into_bytes(),
        5 => {
            let mut s = request_body(rng.random(), method, vec![]).into_bytes();
            let i = rng.random_range(0..s.len());
            s[i] = rng.random();
            s
        }
        _ => format!("{}{}", "[".repeat(rng.random_range(100..400)), "1").into_bytes(),
    }
}

#[test]
fn every_hostile_body_gets_a_well_formed_response() {
    let node = devnet();
    let server = serve("127.0.0.1:0".parse().unwrap(), node.clone()).unwrap();
    let client = RpcClient::new(&server.url());
    let mut rng = ChaCha20Rng::seed_from_u64(0xBAD_B0D1);
    let head = node.block_number().unwrap();
    for i in 0..10_000 {
        let body = hostile_body(&mut rng);
        let resp = client
            .post_raw(&body)
            .unwrap_or_else(|e| panic!("request {i} broke the gateway: {e}"));
        assert!(resp.is_well_formed(), "request {i}: {resp:?}");
        assert_eq!(resp.jsonrpc, "2.0");
        if let Some(err) = &resp.error {
            assert!(
                [
                    wire::PARSE_ERROR,
                    wire::INVALID_REQUEST,
                    wire::METHOD_NOT_FOUND,
                    wire::INVALID_PARAMS,
                    wire::INTERNAL_ERROR,
                    wire::TX_REJECTED,
                    wire::NOT_FOUND,
                    wire::CALL_REVERTED,
                    wire::LEDGER_ERROR,
                ]
                .contains(&err.code),
                "request {i}: unexpected code {}",
                err.code
            );
        }
    }
    assert!(client.is_connected());
    assert_eq!(node.block_number().unwrap(), head);
    node.read(|l| l.verify_chain()).unwrap();
}

#[test]
fn error_codes_by_class() {
    let node = devnet();
    let code = |body: &[u8]| handle_body(&node, body).error.map(|e| e.code);
    assert_eq!(code(b""), Some(wire::PARSE_ERROR));
    assert_eq!(code(b"{\"id\":1,"), Some(wire::PARSE_ERROR));
    assert_eq!(code(b"42"), Some(wire::INVALID_REQUEST));
    assert_eq!(
        code(br#"{"id":1,"method":"chain_id","extra":0}"#),
        Some(wire::INVALID_REQUEST)
    );
    assert_eq!(
        code(request_body(1, "eth_call", vec![]).as_bytes()),
        Some(wire::METHOD_NOT_FOUND)
    );
    assert_eq!(
        code(request_body(1, "get_block", vec![json!("seven")]).as_bytes()),
        Some(wire::INVALID_PARAMS)
    );
    assert_eq!(
        code(request_body(1, "send_transaction", vec![json!("0x0102")]).as_bytes()),
        Some(wire::INVALID_PARAMS)
    );
    assert_eq!(code(request_body(1, "chain_id", vec![]).as_bytes()), None);

    let r = handle_body(&node, br#"{"id":9,"method":"nope"}"#);
    assert_eq!(r.id, Some(9));
    let r = handle_body(&node, br#"{"id":9,"method":17}"#);
    assert_eq!(r.id, Some(9));
    assert_eq!(r.error.unwrap().code, wire::INVALID_REQUEST);
}

#[test]
fn node_errors_survive_the_wire() {
    let node = devnet();
    let server = serve("127.0.0.1:0".parse().unwrap(), node.clone()).unwrap();
    let client = RpcClient::new(&server.url());
    let owner = Keypair::from_seed(b"dev-0");

    let broke = Keypair::from_seed(b"nobody");
    let err = contract::ops::deploy(&client, &broke, &TxOptions::default()).unwrap_err();
    assert_eq!(err.rejection_id(), Some("insufficient-balance"));

    let (addr, _) = contract::ops::deploy(&client, &owner, &TxOptions::default()).unwrap();
    let c = FirmwareContract::at(&client, addr);
    let err = c.verify_hash_call(Digest::ZERO).unwrap_err();
    assert!(
        matches!(&err, NodeError::Reverted(r) if r == "no-reference"),
        "{err}"
    );
    assert!(matches!(
        c.get_versioned("absent"),
        Err(NodeError::Reverted(_))
    ));
    assert!(matches!(
        client.receipt(&Digest::ZERO),
        Err(NodeError::NotFound)
    ));
    assert!(matches!(
        node.receipt(&Digest::ZERO),
        Err(NodeError::NotFound)
    ));

    let tx = UnsignedTransaction {
        from: owner.address(),
        to: Some(broke.address()),
        nonce: 0,
        gas_limit: 21_000,
        gas_price: client.gas_price("transfer").unwrap(),
        value: WEI_PER_ETH,
        data: vec![],
        scheme_id: SignatureScheme::Ed25519 as u8,
    };
    let signed = owner.sign(tx);
    let first = client.send_transaction(&signed);
    assert!(first.is_err(), "nonce 0 is already used by the deploy");
    assert_eq!(first.unwrap_err().rejection_id(), Some("nonce-reuse"));
}

fn quickstart<N: Node>(node: &N) -> (Digest, Vec<String>) {
    let owner = Keypair::from_seed(b"dev-0");
    let other = Keypair::from_seed(b"dev-2");
    let opts = TxOptions::default();
    let (addr, _) = contract::ops::deploy(node, &owner, &opts).unwrap();
    let c = FirmwareContract::at(node, addr);
    let good = Digest::of(b"firmware v1");
    c.store_hash(&owner, good, &opts).unwrap();
    c.store_hash(&other, good, &opts).unwrap();
    c.register_versioned(&owner, "plc-7", good, &opts).unwrap();
    c.register_versioned(&owner, "plc-7", Digest::of(b"v2"), &opts)
        .unwrap();
    assert!(c.verify_hash_call(good).unwrap());
    c.verify_hash_tx(&other, Digest::of(b"evil"), &opts)
        .unwrap();
    let audit = export_audit(node, &addr)
        .unwrap()
        .iter()
        .map(|r| serde_json::to_string(r).unwrap())
        .collect();
    (node.state_root().unwrap(), audit)
}

#[test]
fn gateway_is_transparent() {
    let direct = devnet();
    let (root_direct, audit_direct) = quickstart(&direct);

    let behind = devnet();
    let server = serve("127.0.0.1:0".parse().unwrap(), behind.clone()).unwrap();
    let client = RpcClient::new(&server.url());
    let (root_remote, audit_remote) = quickstart(&client);

    assert_eq!(root_direct, root_remote);
    assert_eq!(audit_direct, audit_remote);
    assert_eq!(audit_direct.len(), 6);
    assert_eq!(behind.state_root().unwrap(), root_direct);
    for n in 0..=direct.block_number().unwrap() {
        assert_eq!(direct.block(n).unwrap(), client.block(n).unwrap());
    }
}

#[test]
fn unreachable_gateway_is_a_connectivity_error() {
    let server = serve("127.0.0.1:0".parse().unwrap(), devnet()).unwrap();
    let url = server.url();
    server.stop();
    let client = RpcClient::with_timeout(&url, std::time::Duration::from_millis(500));
    assert!(!client.is_connected());
    assert!(matches!(
        client.block_number(),
        Err(NodeError::Unreachable(_) | NodeError::Timeout(_))
    ));
}
