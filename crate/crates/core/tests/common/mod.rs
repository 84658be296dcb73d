//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

pub mod cli;

/// Straight-line FIPS 180-4 SHA-256, written without reference to the
/// library's hashing backend.
pub fn sha256_oracle(msg: &[u8]) -> [u8; 32] {
    const K: [u32; 64] = [
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2,
    ];
    let mut h: [u32; 8] = [
        0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab,
        0x5be0cd19,
    ];
    let mut padded = msg.to_vec();
    padded.push(0x80);
    while padded.len() % 64 != 56 {
        padded.push(0);
    }
    padded.extend_from_slice(&((msg.len() as u64) * 8).to_be_bytes());

    for block in padded.chunks(64) {
        let mut w = [0u32; 64];
        for t in 0..16 {
            w[t] = u32::from_be_bytes(block[4 * t..4 * t + 4].try_into().unwrap());
        }
        for t in 16..64 {
            let s0 = w[t - 15].rotate_right(7) ^ w[t - 15].rotate_right(18) ^ (w[t - 15] >> 3);
            let s1 = w[t - 2].rotate_right(17) ^ w[t - 2].rotate_right(19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16]
                .wrapping_add(s0)
                .wrapping_add(w[t - 7])
                .wrapping_add(s1);
        }
        let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh] = h;
        for t in 0..64 {
            let big_s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let t1 = hh
                .wrapping_add(big_s1)
                .wrapping_add(ch)
                .wrapping_add(K[t])
                .wrapping_add(w[t]);
            let big_s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let t2 = big_s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(t1);
            d = c;
            c = b;
            b = a;
            a = t1.wrapping_add(t2);
        }
        for (x, y) in h.iter_mut().zip([a, b, c, d, e, f, g, hh]) {
            *x = x.wrapping_add(y);
        }
    }
    let mut out = [0u8; 32];
    for (i, word) in h.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&word.to_be_bytes());
    }
    out
}

pub struct NistVector {
    pub msg: Vec<u8>,
    pub md: [u8; 32],
}

/// Parses the CAVS `SHA256ShortMsg.rsp` vector file.
pub fn nist_short_msg_vectors() -> Vec<NistVector> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/SHA256ShortMsg.rsp");
    let text = std::fs::read_to_string(&path).expect("vector file present");
    let mut out = Vec::new();
    let mut len_bits: Option<usize> = None;
    let mut msg: Option<Vec<u8>> = None;
    for line in text.lines().map(str::trim) {
        if let Some(v) = line.strip_prefix("Len = ") {
            len_bits = Some(v.parse().unwrap());
        } else if let Some(v) = line.strip_prefix("Msg = ") {
            let bytes = hex::decode(v).unwrap();
            msg = Some(bytes[..len_bits.unwrap() / 8].to_vec());
        } else if let Some(v) = line.strip_prefix("MD = ") {
            out.push(NistVector {
                msg: msg.take().unwrap(),
                md: hex::decode(v).unwrap().try_into().unwrap(),
            });
        }
    }
    out
}

/// Brute-force Merkle root: repeatedly pair adjacent nodes, carrying an
/// unpaired last node up unchanged.
pub fn merkle_root_oracle(leaves: &[[u8; 32]]) -> [u8; 32] {
    let mut level = leaves.to_vec();
    while level.len() > 1 {
        let mut next = Vec::new();
        let mut i = 0;
        while i < level.len() {
            if i + 1 < level.len() {
                let mut buf = level[i].to_vec();
                buf.extend_from_slice(&level[i + 1]);
                next.push(sha256_oracle(&buf));
            } else {
                next.push(level[i]);
            }
            i += 2;
        }
        level = next;
    }
    level[0]
}

/// Gas a transaction should cost under a schedule, recomputed by hand
/// from the published parameters.
pub struct GasTerms {
    pub base: u64,
    pub calldata_bytes: u64,
    pub per_calldata_byte: u64,
    pub create: u64,
    pub code_bytes: u64,
    pub new_slots: u64,
    pub updated_slots: u64,
    pub logs: u64,
    pub topics: u64,
    pub log_bytes: u64,
    pub surcharge: u64,
}

impl GasTerms {
    pub fn total(&self) -> u64 {
        self.base
            + self.calldata_bytes * self.per_calldata_byte
            + self.create
            + self.code_bytes * 200
            + self.new_slots * 20_000
            + self.updated_slots * 5_000
            + self.logs * 375
            + self.topics * 375
            + self.log_bytes * 8
            + self.surcharge
    }
}

pub mod workload {
    //! Seeded random transaction workload with invariant checks after
    //! every sealed block.

    use std::collections::BTreeMap;

    use firmchain::contract::{Call, CREATION_CODE};
    use firmchain::ledger::{
        Address, CalibrationProfile, GenesisConfig, Keypair, Ledger, SignatureScheme,
        SignedTransaction, TxStatus, UnsignedTransaction, Wei, WEI_PER_ETH, WEI_PER_GWEI,
    };
    use firmchain::Digest;
    use rand::{Rng, RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    use super::sha256_oracle;

    #[derive(Debug, Default)]
    pub struct Violations {
        pub supply: Vec<String>,
        pub nonce: Vec<String>,
        pub chain_hash: Vec<String>,
        pub fee: Vec<String>,
        pub balance_delta: Vec<String>,
        pub replay_admitted: Vec<String>,
    }

    impl Violations {
        pub fn total(&self) -> usize {
            self.supply.len()
                + self.nonce.len()
                + self.chain_hash.len()
                + self.fee.len()
                + self.balance_delta.len()
                + self.replay_admitted.len()
        }
    }

    pub struct Outcome {
        pub ledger: Ledger,
        pub included: usize,
        pub rejected: usize,
        pub reverted: usize,
        pub violations: Violations,
    }

    fn header_hash_oracle(b: &firmchain::ledger::Block) -> [u8; 32] {
        let h = &b.header;
        let mut buf = Vec::new();
        buf.extend_from_slice(&h.number.to_be_bytes());
        buf.extend_from_slice(&h.parent_hash.0);
        buf.extend_from_slice(&h.timestamp_ms.to_be_bytes());
        buf.extend_from_slice(&h.gas_used.to_be_bytes());
        buf.extend_from_slice(&h.state_root.0);
        buf.extend_from_slice(&h.coinbase.0);
        buf.extend_from_slice(&(h.tx_hashes.len() as u32).to_be_bytes());
        for t in &h.tx_hashes {
            buf.extend_from_slice(&t.0);
        }
        sha256_oracle(&buf)
    }

    /// Recomputes every block hash and parent link from header fields.
    pub fn check_chain_hashes(ledger: &Ledger, out: &mut Vec<String>) {
        let mut parent = [0u8; 32];
        for b in ledger.blocks() {
            let h = header_hash_oracle(b);
            if h != b.hash.0 {
                out.push(format!(
                    "block {} hash differs from recomputation",
                    b.number()
                ));
            }
            if b.header.parent_hash.0 != parent {
                out.push(format!("block {} parent link broken", b.number()));
            }
            let listed: Vec<_> = b.transactions.iter().map(|t| t.hash()).collect();
            if listed != b.header.tx_hashes {
                out.push(format!("block {} tx list differs from header", b.number()));
            }
            parent = h;
        }
    }

    /// Drives at least `min_included` random transactions through a fresh
    /// devnet ledger.
    pub fn run(seed: u64, min_included: usize) -> Outcome {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let keys: Vec<Keypair> = (0..6)
            .map(|i| Keypair::from_seed(format!("wl-{seed}-{i}").as_bytes()))
            .collect();
        let mut genesis = GenesisConfig::new(CalibrationProfile::devnet());
        for (i, k) in keys.iter().enumerate() {
            // The last account is nearly broke so balance checks fire.
            let bal = if i == 5 {
                WEI_PER_ETH / 10_000
            } else {
                50 * WEI_PER_ETH
            };
            genesis = genesis.fund(k.address(), bal);
        }
        let mut ledger = Ledger::new(genesis);
        let supply = ledger.total_supply();
        let coinbase = ledger.coinbase();

        let mut v = Violations::default();
        let mut contracts: Vec<Address> = Vec::new();
        let mut admitted: Vec<SignedTransaction> = Vec::new();
        let (mut included, mut rejected, mut reverted) = (0, 0, 0);
        let mut since_block = 0;
        let mut block_every = rng.random_range(1..8);

        while included < min_included {
            let k = &keys[rng.random_range(0..keys.len())];
            let action = rng.random_range(0..100);
            if action < 5 && !admitted.is_empty() {
                let old = admitted[rng.random_range(0..admitted.len())].clone();
                let now = ledger.now_ms();
                match ledger.submit_transaction(old.clone(), now) {
                    Ok(_) => v
                        .replay_admitted
                        .push(format!("replay of {} admitted", old.hash())),
                    Err(_) => rejected += 1,
                }
                continue;
            }
            let (to, data, value) = match action {
                0..=34 => {
                    let to = if rng.random_bool(0.8) {
                        keys[rng.random_range(0..keys.len())].address()
                    } else {
                        let mut a = [0u8; 20];
                        rng.fill_bytes(&mut a);
                        Address(a)
                    };
                    (Some(to), vec![], rng.random_range(0..2 * WEI_PER_ETH))
                }
                35..=44 => (None, CREATION_CODE.to_vec(), 0),
                _ if contracts.is_empty() => (None, CREATION_CODE.to_vec(), 0),
                _ => {
                    let c = contracts[rng.random_range(0..contracts.len())];
                    let mut d = [0u8; 32];
                    rng.fill_bytes(&mut d);
                    let call = match rng.random_range(0..4) {
                        0 => Call::StoreHash(Digest(d)),
                        1 => Call::VerifyHash(Digest(d)),
                        2 => Call::RegisterVersioned {
                            id: format!("fw-{}", rng.random_range(0..20)),
                            digest: Digest(d),
                        },
                        _ => Call::Owner,
                    };
                    let value = if rng.random_bool(0.05) { 1 } else { 0 };
                    (Some(c), call.encode(), value)
                }
            };
            let nonce_skew = if rng.random_bool(0.03) { 1 } else { 0 };
            let mut tx = UnsignedTransaction {
                from: k.address(),
                to,
                nonce: ledger.next_nonce(&k.address()) + nonce_skew,
                gas_limit: 0,
                gas_price: rng.random_range(1..50) as Wei * WEI_PER_GWEI,
                value,
                data,
                scheme_id: SignatureScheme::Ed25519 as u8,
            };
            let est = ledger.estimate_gas(&tx);
            tx.gas_limit = match rng.random_range(0..20) {
                0 => est.saturating_sub(rng.random_range(1..5_000)),
                1 => est / 2,
                _ => est + rng.random_range(0..10_000),
            };
            let stx = if rng.random_bool(0.02) {
                let mut s = k.sign(tx);
                s.signature[0] ^= 1;
                s
            } else {
                k.sign(tx)
            };
            let now = ledger.now_ms();
            match ledger.submit_transaction(stx.clone(), now) {
                Ok(_) => admitted.push(stx),
                Err(_) => {
                    rejected += 1;
                    continue;
                }
            }
            since_block += 1;
            if since_block < block_every {
                continue;
            }
            since_block = 0;
            block_every = rng.random_range(1..8);

            // Seal and check.
            let before: BTreeMap<Address, (u64, Wei)> = ledger
                .accounts()
                .map(|(a, s)| (*a, (s.nonce, s.balance)))
                .collect();
            let at = ledger.next_block_time();
            let block = ledger.produce_block(at).unwrap().clone();
            let mut expected: BTreeMap<Address, i128> = BTreeMap::new();
            let mut sent: BTreeMap<Address, u64> = BTreeMap::new();
            for stx in &block.transactions {
                let r = ledger.sealed_receipt(&stx.hash()).unwrap().clone();
                included += 1;
                if r.fee != r.gas_used as Wei * stx.tx.gas_price || r.gas_price != stx.tx.gas_price
                {
                    v.fee.push(format!(
                        "{}: fee {} != {} x {}",
                        r.tx_hash, r.fee, r.gas_used, stx.tx.gas_price
                    ));
                }
                if r.gas_used > stx.tx.gas_limit {
                    v.fee.push(format!("{}: gas_used above limit", r.tx_hash));
                }
                *sent.entry(stx.tx.from).or_default() += 1;
                *expected.entry(stx.tx.from).or_default() -= r.fee as i128;
                *expected.entry(coinbase).or_default() += r.fee as i128;
                match r.status {
                    TxStatus::Success => {
                        if let Some(to) = stx.tx.to {
                            *expected.entry(stx.tx.from).or_default() -= stx.tx.value as i128;
                            *expected.entry(to).or_default() += stx.tx.value as i128;
                        }
                        if let Some(c) = r.contract_address {
                            contracts.push(c);
                        }
                    }
                    TxStatus::Reverted => reverted += 1,
                }
            }
            if ledger.total_supply() != supply {
                v.supply.push(format!(
                    "block {}: supply {} != {supply}",
                    block.number(),
                    ledger.total_supply()
                ));
            }
            for (addr, state) in ledger.accounts() {
                let (n0, b0) = before.get(addr).copied().unwrap_or((0, 0));
                let want_nonce = n0 + sent.get(addr).copied().unwrap_or(0);
                if state.nonce != want_nonce || state.nonce < n0 {
                    v.nonce.push(format!(
                        "{addr}: nonce {} expected {want_nonce}",
                        state.nonce
                    ));
                }
                let want = b0 as i128 + expected.get(addr).copied().unwrap_or(0);
                if state.balance as i128 != want {
                    v.balance_delta
                        .push(format!("{addr}: balance {} expected {want}", state.balance));
                }
            }
        }
        check_chain_hashes(&ledger, &mut v.chain_hash);
        Outcome {
            ledger,
            included,
            rejected,
            reverted,
            violations: v,
        }
    }
}
