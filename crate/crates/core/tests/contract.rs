mod common;

use common::{sha256_oracle, GasTerms};
use firmchain::contract::{
    self, export_audit, Call, FirmwareContract, Method, TxOptions, CREATION_CODE,
};
use firmchain::ledger::{
    CalibrationProfile, EventKind, GenesisConfig, Keypair, TxStatus, WEI_PER_ETH,
};
use firmchain::{Digest, LocalNode, Node};
use proptest::prelude::*;

fn sepolia() -> (LocalNode, Keypair) {
    let node = LocalNode::instant(GenesisConfig::dev(CalibrationProfile::sepolia_paper()));
    (node, Keypair::from_seed(b"dev-0"))
}

fn deployed(node: &LocalNode, owner: &Keypair) -> FirmwareContract<LocalNode> {
    let (addr, _) = contract::ops::deploy(node, owner, &TxOptions::default()).unwrap();
    FirmwareContract::at(node.clone(), addr)
}

/// Gas range whose fee at `price_gwei` rounds to `fee_eth` at the given
/// number of decimal places.
fn gas_bracket(fee_eth: f64, decimals: i32, price_gwei: f64) -> (f64, f64) {
    let half = 0.5 * 10f64.powi(-decimals);
    let wei_per_gas = price_gwei * 1e9;
    (
        (fee_eth - half) * 1e18 / wei_per_gas,
        (fee_eth + half) * 1e18 / wei_per_gas,
    )
}

fn in_bracket(gas: u64, (lo, hi): (f64, f64)) -> bool {
    (lo..hi).contains(&(gas as f64))
}

fn within(actual: f64, target: f64, rel: f64) -> bool {
    ((actual - target) / target).abs() <= rel
}

#[test]
fn deployment_reproduces_published_fee() {
    let (node, owner) = sepolia();
    let (_, r) = contract::ops::deploy(&node, &owner, &TxOptions::default()).unwrap();
    let oracle = GasTerms {
        base: 21_000,
        calldata_bytes: CREATION_CODE.len() as u64,
        per_calldata_byte: 16,
        create: 32_000,
        code_bytes: 1_744,
        new_slots: 1,
        updated_slots: 0,
        logs: 0,
        topics: 0,
        log_bytes: 0,
        surcharge: 32_623,
    };
    assert_eq!(oracle.total(), 454_695);
    assert_eq!(r.gas_used, oracle.total());
    assert!(in_bracket(r.gas_used, gas_bracket(0.00443, 5, 9.742818053)));
    assert_eq!(r.gas_price, 9_742_818_053);
    assert_eq!(r.fee, 454_695u128 * 9_742_818_053);
    assert!(within(r.fee as f64 / 1e18, 0.00443, 0.001));
}

#[test]
fn logged_verification_reproduces_published_fee() {
    let (node, owner) = sepolia();
    let c = deployed(&node, &owner);
    let d = Digest::of(b"firmware");
    c.store_hash(&owner, d, &TxOptions::default()).unwrap();
    let r = c.verify_hash_tx(&owner, d, &TxOptions::default()).unwrap();
    let oracle = GasTerms {
        base: 21_000,
        calldata_bytes: 36,
        per_calldata_byte: 16,
        create: 0,
        code_bytes: 0,
        new_slots: 0,
        updated_slots: 0,
        logs: 1,
        topics: 2,
        log_bytes: 33,
        surcharge: 68_926,
    };
    assert_eq!(oracle.total(), 91_891);
    assert_eq!(r.gas_used, 91_891);
    assert!(in_bracket(
        r.gas_used,
        gas_bracket(0.0001415, 7, 1.539866239)
    ));
    assert_eq!(r.gas_price, 1_539_866_239);
    assert!(within(r.fee as f64 / 1e18, 0.0001415, 0.001));
    assert_eq!(contract::ops::verification_outcome(&r), Some(true));
}

#[test]
fn registration_costs_table_value() {
    let (node, owner) = sepolia();
    let c = deployed(&node, &owner);
    let store = c
        .store_hash(&owner, Digest::of(b"a"), &TxOptions::default())
        .unwrap();
    let oracle = GasTerms {
        base: 21_000,
        calldata_bytes: 36,
        per_calldata_byte: 16,
        create: 0,
        code_bytes: 0,
        new_slots: 2,
        updated_slots: 0,
        logs: 1,
        topics: 2,
        log_bytes: 32,
        surcharge: 15_243,
    };
    assert_eq!(store.gas_used, oracle.total());
    assert_eq!(store.gas_used, 78_200);

    let reg = c
        .register_versioned(&owner, "plc-7", Digest::of(b"b"), &TxOptions::default())
        .unwrap();
    let oracle = GasTerms {
        calldata_bytes: 100,
        log_bytes: 104,
        surcharge: 13_643,
        ..oracle
    };
    assert_eq!(reg.gas_used, oracle.total());
    assert_eq!(reg.gas_used, 78_200);

    let update = c
        .register_versioned(&owner, "plc-7", Digest::of(b"c"), &TxOptions::default())
        .unwrap();
    assert_eq!(update.gas_used, 78_200 - 2 * 20_000 + 2 * 5_000);
    assert_eq!(c.get_versioned("plc-7").unwrap().version, 2);
}

#[test]
fn selectors_match_oracle() {
    for m in [
        Method::StoreHash,
        Method::VerifyHash,
        Method::RegisterVersioned,
        Method::GetVersioned,
        Method::VerifyVersioned,
        Method::Owner,
        Method::Reference,
    ] {
        let h = sha256_oracle(m.signature().as_bytes());
        assert_eq!(m.selector(), h[..4], "{}", m.signature());
        assert_eq!(Method::from_selector(&h[..4]), Some(m));
    }
}

#[test]
fn access_control_and_one_time_store() {
    let (node, owner) = sepolia();
    let c = deployed(&node, &owner);
    let mallory = Keypair::from_seed(b"dev-3");
    let opts = TxOptions::default();
    let r = c.store_hash(&mallory, Digest::of(b"evil"), &opts).unwrap();
    assert_eq!(r.status, TxStatus::Reverted);
    assert_eq!(r.revert_reason.as_deref(), Some("unauthorized"));
    assert!(r.fee > 0, "reverted transactions still pay");

    assert_eq!(
        c.verify_hash_call(Digest::ZERO).unwrap_err().to_string(),
        "reverted: no-reference"
    );
    c.store_hash(&owner, Digest::of(b"good"), &opts).unwrap();
    let again = c.store_hash(&owner, Digest::of(b"other"), &opts).unwrap();
    assert_eq!(again.revert_reason.as_deref(), Some("already-stored"));
    assert_eq!(c.reference().unwrap(), Digest::of(b"good"));
    assert_eq!(c.owner().unwrap(), owner.address());
    assert!(c.verify_hash_call(Digest::of(b"good")).unwrap());
    assert!(!c.verify_hash_call(Digest::of(b"bad")).unwrap());

    let reg = c
        .register_versioned(&mallory, "x", Digest::ZERO, &opts)
        .unwrap();
    assert_eq!(reg.revert_reason.as_deref(), Some("unauthorized"));
    assert!(c.get_versioned("x").is_err());
}

#[test]
fn malformed_calldata_reverts() {
    let (node, owner) = sepolia();
    let c = deployed(&node, &owner);
    let err = node
        .call(owner.address(), &c.address(), &[1, 2, 3, 4, 5])
        .unwrap_err();
    assert_eq!(err.to_string(), "reverted: unknown-method");
    let mut data = Method::StoreHash.selector().to_vec();
    data.extend_from_slice(&[0; 5]);
    let err = node.call(owner.address(), &c.address(), &data).unwrap_err();
    assert_eq!(err.to_string(), "reverted: malformed-calldata");
}

#[test]
fn deploying_twice_gives_distinct_addresses() {
    let (node, owner) = sepolia();
    let a = deployed(&node, &owner).address();
    let b = deployed(&node, &owner).address();
    assert_ne!(a, b);
}

#[test]
fn unfunded_key_is_rejected() {
    let (node, _) = sepolia();
    let broke = Keypair::from_seed(b"nobody");
    let err = contract::ops::deploy(&node, &broke, &TxOptions::default()).unwrap_err();
    assert_eq!(err.rejection_id(), Some("insufficient-balance"));
}

#[test]
fn audit_fees_cross_check_receipts() {
    let (node, owner) = sepolia();
    let c = deployed(&node, &owner);
    let d = Digest::of(b"fw");
    let opts = TxOptions::default();
    c.store_hash(&owner, d, &opts).unwrap();
    c.verify_hash_tx(&owner, d, &opts).unwrap();
    let records = export_audit(&node, &c.address()).unwrap();
    assert_eq!(records.len(), 3);
    let methods: Vec<_> = records.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, ["deploy", "storeHash", "verifyHash"]);
    for rec in &records {
        let receipt = node.receipt(&rec.tx_hash).unwrap().unwrap();
        assert_eq!(rec.fee_wei, receipt.fee);
        assert_eq!(rec.fee_wei, rec.gas_used as u128 * rec.gas_price_wei);
        assert_eq!(rec.gas_used, receipt.gas_used);
        assert_eq!(
            rec.confirmations,
            node.block_number().unwrap() - rec.block_number + 1
        );
    }
    let logs = node.logs(&c.address(), 0, 100).unwrap();
    assert_eq!(logs.len(), 2);
    assert_eq!(logs[0].kind, EventKind::HashStored);
    assert_eq!(logs[1].kind, EventKind::VerificationPerformed);
    assert_eq!(logs[1].matched, Some(true));
}

#[test]
fn total_supply_is_conserved_across_the_flow() {
    let (node, owner) = sepolia();
    let before = node.read(|l| l.total_supply());
    let c = deployed(&node, &owner);
    c.store_hash(&owner, Digest::of(b"x"), &TxOptions::default())
        .unwrap();
    assert_eq!(node.read(|l| l.total_supply()), before);
    assert_eq!(before, 4 * 100 * WEI_PER_ETH);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn registration_gas_is_independent_of_content(
        digest in any::<[u8; 32]>(),
        id in "[a-z0-9-]{1,64}",
    ) {
        let (node, owner) = sepolia();
        let c = deployed(&node, &owner);
        let r = c.register_versioned(&owner, &id, Digest(digest), &TxOptions::default()).unwrap();
        prop_assert_eq!(r.gas_used, 78_200);
        let s = c.store_hash(&owner, Digest(digest), &TxOptions::default()).unwrap();
        prop_assert_eq!(s.gas_used, 78_200);
    }

    #[test]
    fn call_encoding_round_trips(digest in any::<[u8; 32]>(), id in "[ -~]{1,64}") {
        for call in [
            Call::StoreHash(Digest(digest)),
            Call::VerifyHash(Digest(digest)),
            Call::RegisterVersioned { id: id.clone(), digest: Digest(digest) },
            Call::GetVersioned(id.clone()),
            Call::VerifyVersioned { id: id.clone(), digest: Digest(digest) },
        ] {
            prop_assert_eq!(Call::decode(&call.encode()).unwrap(), call);
        }
    }
}
