//! The `firmchain` command-line tool.
//!
//! Exit codes: 0 success or MATCH, 1 MISMATCH, 2 local I/O or usage error,
//! 3 gateway unreachable, 4 on-chain rejection or revert.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::anchor::{self, MerkleProof};
use crate::contract::{self, audit, FirmwareContract, TxOptions, MERKLE_ROOT_ID};
use crate::fingerprint::{compute_digest, parse_hex_digest, Digest, FirmwareImage};
use crate::gateway::{self, RpcClient};
use crate::harness::{self, BenchConfig, MutationModel, ScenarioReport};
use crate::ledger::store::{ChainStore, StoreError};
use crate::ledger::{
    format_eth_sig, Address, CalibrationProfile, GenesisConfig, Keypair, Ledger, Receipt, TxStatus,
};
use crate::node::{LocalNode, MiningMode, NodeError};

pub const DEFAULT_RPC_URL: &str = "http://127.0.0.1:8545/rpc";
pub const DEFAULT_PORT: u16 = 8545;

#[derive(Debug, Parser)]
#[command(
    name = "firmchain",
    version,
    about = "Firmware integrity registration and verification"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Gateway URL.
    #[arg(long, global = true, env = "FIRMCHAIN_RPC_URL", default_value = DEFAULT_RPC_URL)]
    pub rpc_url: String,
    /// Key file (64 hex characters) for commands that send transactions.
    #[arg(long, global = true)]
    pub key: Option<PathBuf>,
    /// Contract address.
    #[arg(long, global = true)]
    pub contract: Option<Address>,
    /// One JSON object per action instead of human-readable lines.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seconds to wait for the gateway and for receipts.
    #[arg(long, global = true, default_value_t = 120)]
    pub timeout: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the SHA-256 digest of a file (`-` reads stdin).
    Hash {
        path: String,
        #[arg(long, default_value_t = crate::fingerprint::DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
    },
    /// Write a key file and print its address.
    Keygen {
        /// Derive the key from a seed instead of the OS RNG.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a local ledger behind the HTTP gateway.
    Node(NodeArgs),
    /// Deploy a FirmwareIntegrity contract.
    Deploy,
    /// Store a firmware image's digest as the contract reference.
    Register {
        path: String,
        /// Register under a versioned firmware id instead.
        #[arg(long)]
        id: Option<String>,
    },
    /// Compare a firmware image with the registered reference.
    Verify {
        path: String,
        /// Send a fee-bearing transaction that logs the verification.
        #[arg(long, conflicts_with = "read_only")]
        on_chain: bool,
        /// Free read-only call (default).
        #[arg(long)]
        read_only: bool,
        /// Compare against a versioned entry instead of the reference.
        #[arg(long)]
        id: Option<String>,
    },
    /// Export every transaction touching the contract as JSON lines.
    Audit {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run threat scenarios or the performance bench on a simulated stack.
    Bench(BenchArgs),
    /// Merkle batch anchoring.
    #[command(subcommand)]
    Anchor(AnchorCommand),
}

#[derive(Debug, Args)]
pub struct NodeArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Built-in calibration profile.
    #[arg(long, default_value = crate::ledger::profile::DEVNET)]
    pub profile: String,
    /// Genesis TOML file; overrides --profile.
    #[arg(long)]
    pub genesis: Option<PathBuf>,
    /// Block interval in seconds.
    #[arg(long)]
    pub block_interval: Option<f64>,
    /// Seal a block per transaction on a simulated clock.
    #[arg(long)]
    pub instant_mine: bool,
    /// Append blocks to this file; reloaded if it exists.
    #[arg(long)]
    pub chain_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// tamper, replay, spoof, perf or all.
    #[arg(long, default_value = "all")]
    pub scenario: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub submitters: u32,
    #[arg(long, default_value = crate::ledger::profile::SEPOLIA_PAPER)]
    pub profile: String,
    #[arg(long, default_value_t = harness::DEFAULT_SEED)]
    pub seed: u64,
    /// Tamper mutation model.
    #[arg(long, default_value = "bit-flip")]
    pub mutation: String,
    #[arg(long)]
    pub block_gas_limit: Option<u64>,
    /// Bench config TOML; command-line flags are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report(s) as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnchorCommand {
    /// Build a tree over firmware files (or a digest list) and write the
    /// content-addressed leaf file.
    Build {
        files: Vec<PathBuf>,
        /// Read leaf digests from a text file of hex lines instead.
        #[arg(long)]
        digests: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print the inclusion proof for one leaf.
    Prove {
        #[arg(long)]
        leaves: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a firmware file against a proof and a root.
    Verify {
        path: String,
        #[arg(long)]
        proof: PathBuf,
        /// Expected root; if omitted the anchored root is checked via --contract.
        #[arg(long)]
        root: Option<String>,
    },
    /// Anchor the leaf file's root on-chain under `merkle-root`.
    Commit {
        #[arg(long)]
        leaves: PathBuf,
    },
}

/// Failure with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Local(String),
    #[error("{0}")]
    Connectivity(String),
    #[error("{0}")]
    OnChain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Local(_) => 2,
            CliError::Connectivity(_) => 3,
            CliError::OnChain(_) => 4,
        }
    }
}

impl From<NodeError> for CliError {
    fn from(e: NodeError) -> Self {
        match e {
            NodeError::Unreachable(_)
            | NodeError::Timeout(_)
            | NodeError::Rpc { .. }
            | NodeError::Other(_) => CliError::Connectivity(e.to_string()),
            NodeError::Rejected(_) | NodeError::Reverted(_) | NodeError::NotFound => {
                CliError::OnChain(e.to_string())
            }
        }
    }
}

fn local(e: impl std::fmt::Display) -> CliError {
    CliError::Local(e.to_string())
}

/// Successful outcome: 0, or 1 for a verification mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Mismatch,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Ok => 0,
            Verdict::Mismatch => 1,
        }
    }
}

struct Output {
    json: bool,
}

impl Output {
    /// Human mode prints `lines`; JSON mode prints `record` on one line.
    fn emit(&self, lines: &[String], record: Value) {
        let mut out = io::stdout().lock();
        if self.json {
            let _ = writeln!(out, "{record}");
        } else {
            for l in lines {
                let _ = writeln!(out, "{l}");
            }
        }
        let _ = out.flush();
    }
}

fn fee_eth(wei: u128) -> String {
    format!("{} ETH", format_eth_sig(wei, 4))
}

fn receipt_record(action: &str, r: &Receipt) -> Value {
    json!({
        "action": action,
        "tx_hash": r.tx_hash,
        "block_number": r.block_number,
        "status": r.status,
        "gas_used": r.gas_used,
        "gas_price_wei": r.gas_price.to_string(),
        "fee_wei": r.fee.to_string(),
        "fee_eth": format_eth_sig(r.fee, 4),
        "revert_reason": r.revert_reason,
    })
}

fn receipt_lines(r: &Receipt) -> Vec<String> {
    vec![
        format!("tx: {}", r.tx_hash),
        format!("block: {}", r.block_number),
        format!(
            "status: {}",
            if r.status == TxStatus::Success {
                "success"
            } else {
                "reverted"
            }
        ),
        format!("gas_used: {}", r.gas_used),
        format!("fee: {}", fee_eth(r.fee)),
    ]
}

fn reverted(r: &Receipt) -> Result<(), CliError> {
    match r.status {
        TxStatus::Success => Ok(()),
        TxStatus::Reverted => Err(CliError::OnChain(format!(
            "reverted: {}",
            r.revert_reason.as_deref().unwrap_or("unknown")
        ))),
    }
}

fn digest_path(path: &str, chunk: usize) -> Result<Digest, CliError> {
    let d = if path == "-" {
        compute_digest(FirmwareImage::from_reader(io::stdin().lock()), chunk)
    } else {
        FirmwareImage::open(path).and_then(|img| compute_digest(img, chunk))
    };
    d.map_err(local)
}

struct Ctx<'a> {
    global: &'a GlobalArgs,
    out: Output,
}

impl Ctx<'_> {
    fn client(&self) -> Result<RpcClient, CliError> {
        let timeout = Duration::from_secs(self.global.timeout.max(1));
        let probe = Duration::from_secs(5).min(timeout);
        if !gateway::client_connect(&self.global.rpc_url, probe) {
            return Err(CliError::Connectivity(format!(
                "cannot reach gateway at {}",
                gateway::normalize_url(&self.global.rpc_url)
            )));
        }
        Ok(RpcClient::with_timeout(&self.global.rpc_url, timeout))
    }

    fn keys(&self) -> Result<Keypair, CliError> {
        let path = self
            .global
            .key
            .as_ref()
            .ok_or_else(|| CliError::Local("--key is required for this command".into()))?;
        Keypair::load(path).map_err(local)
    }

    fn contract(&self) -> Result<Address, CliError> {
        self.global
            .contract
            .ok_or_else(|| CliError::Local("--contract is required for this command".into()))
    }

    fn tx_options(&self) -> TxOptions {
        TxOptions {
            receipt_timeout: Duration::from_secs(self.global.timeout.max(1)),
            ..TxOptions::default()
        }
    }
}

/// Runs a parsed command line. Exit code per the module docs.
pub fn run(cli: Cli) -> Result<Verdict, CliError> {
    let ctx = Ctx {
        global: &cli.global,
        out: Output {
            json: cli.global.json,
        },
    };
    match cli.command {
        Command::Hash { path, chunk_size } => cmd_hash(&ctx, &path, chunk_size),
        Command::Keygen { seed, out } => cmd_keygen(&ctx, seed.as_deref(), &out),
        Command::Node(args) => cmd_node(&ctx, &args),
        Command::Deploy => cmd_deploy(&ctx),
        Command::Register { path, id } => cmd_register(&ctx, &path, id.as_deref()),
        Command::Verify {
            path,
            on_chain,
            read_only: _,
            id,
        } => cmd_verify(&ctx, &path, on_chain, id.as_deref()),
        Command::Audit { out } => cmd_audit(&ctx, &out),
        Command::Bench(args) => cmd_bench(&ctx, &args),
        Command::Anchor(cmd) => cmd_anchor(&ctx, cmd),
    }
}

fn cmd_hash(ctx: &Ctx, path: &str, chunk: usize) -> Result<Verdict, CliError> {
    let d = digest_path(path, chunk)?;
    ctx.out.emit(
        &[d.to_hex()],
        json!({"action": "hash", "path": path, "digest": d}),
    );
    Ok(Verdict::Ok)
}

fn cmd_keygen(ctx: &Ctx, seed: Option<&str>, out: &Path) -> Result<Verdict, CliError> {
    let keys = match seed {
        Some(s) => Keypair::from_seed(s.as_bytes()),
        None => Keypair::from_secret(rand::random()),
    };
    keys.save(out).map_err(local)?;
    ctx.out.emit(
        &[format!("address: {}", keys.address())],
        json!({"action": "keygen", "address": keys.address(), "key_file": out}),
    );
    Ok(Verdict::Ok)
}

fn node_genesis(args: &NodeArgs) -> Result<GenesisConfig, CliError> {
    let mut genesis = match &args.genesis {
        Some(path) => GenesisConfig::load(path).map_err(local)?,
        None => GenesisConfig::dev(CalibrationProfile::builtin(&args.profile).map_err(local)?),
    };
    if let Some(secs) = args.block_interval {
        if !(secs > 0.0 && secs.is_finite()) {
            return Err(CliError::Local("--block-interval must be positive".into()));
        }
        genesis.profile.block_interval_ms = (secs * 1000.0).round() as u64;
    }
    genesis.profile.validate().map_err(local)?;
    Ok(genesis)
}

fn open_chain(args: &NodeArgs) -> Result<(Ledger, Option<ChainStore>), CliError> {
    let store_err = |e: StoreError| CliError::Local(e.to_string());
    match &args.chain_file {
        Some(path) if path.exists() => {
            let (ledger, store) = ChainStore::open(path).map_err(store_err)?;
            Ok((ledger, Some(store)))
        }
        Some(path) => {
            let ledger = Ledger::new(node_genesis(args)?);
            let store = ChainStore::create(path, &ledger).map_err(store_err)?;
            Ok((ledger, Some(store)))
        }
        None => Ok((Ledger::new(node_genesis(args)?), None)),
    }
}

fn cmd_node(ctx: &Ctx, args: &NodeArgs) -> Result<Verdict, CliError> {
    let (ledger, store) = open_chain(args)?;
    let profile = ledger.profile().clone();
    let head = ledger.head().number();
    let mut node = if args.instant_mine {
        LocalNode::from_ledger(ledger, MiningMode::Instant)
    } else {
        LocalNode::realtime(ledger)
    };
    if let Some(store) = store {
        node = node.with_store(store);
    }
    let ticker = (!args.instant_mine).then(|| node.spawn_ticker());

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(local)?;
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::Local(format!("bad bind address: {e}")))?;
    let listener = runtime
        .block_on(tokio::net::TcpListener::bind(addr))
        .map_err(|e| CliError::Local(format!("cannot bind {addr}: {e}")))?;
    let bound = listener.local_addr().map_err(local)?;
    let url = format!("http://{bound}/rpc");
    ctx.out.emit(
        &[
            url.clone(),
            format!(
                "profile {} chain_id {} block_interval {} ms finality_delay {} ms mining {} head {}",
                profile.name,
                profile.chain_id,
                profile.block_interval_ms,
                profile.finality_delay_ms,
                if args.instant_mine { "instant" } else { "interval" },
                head
            ),
        ],
        json!({
            "action": "node",
            "url": url,
            "profile": profile.name,
            "chain_id": profile.chain_id,
            "block_interval_ms": profile.block_interval_ms,
            "finality_delay_ms": profile.finality_delay_ms,
            "instant_mine": args.instant_mine,
            "head": head,
        }),
    );

    let served = runtime.block_on(gateway::run(listener, node.clone(), shutdown_signal()));
    node.shutdown();
    if let Some(t) = ticker {
        let _ = t.join();
    }
    served.map_err(local)?;
    tracing::info!("node stopped");
    Ok(Verdict::Ok)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

fn cmd_deploy(ctx: &Ctx) -> Result<Verdict, CliError> {
    let keys = ctx.keys()?;
    let client = ctx.client()?;
    let (addr, r) = contract::ops::deploy(&client, &keys, &ctx.tx_options())?;
    let mut lines = vec![format!("contract: {addr}")];
    lines.extend(receipt_lines(&r));
    let mut rec = receipt_record("deploy", &r);
    rec["contract"] = json!(addr);
    ctx.out.emit(&lines, rec);
    Ok(Verdict::Ok)
}

fn cmd_register(ctx: &Ctx, path: &str, id: Option<&str>) -> Result<Verdict, CliError> {
    let d = digest_path(path, crate::fingerprint::DEFAULT_CHUNK_SIZE)?;
    let keys = ctx.keys()?;
    let addr = ctx.contract()?;
    let client = ctx.client()?;
    let c = FirmwareContract::at(&client, addr);
    let r = match id {
        Some(id) => c.register_versioned(&keys, id, d, &ctx.tx_options())?,
        None => c.store_hash(&keys, d, &ctx.tx_options())?,
    };
    let mut lines = vec![format!("digest: {d}")];
    lines.extend(receipt_lines(&r));
    let mut rec = receipt_record("register", &r);
    rec["digest"] = json!(d);
    rec["firmware_id"] = json!(id);
    ctx.out.emit(&lines, rec);
    reverted(&r)?;
    Ok(Verdict::Ok)
}

fn cmd_verify(
    ctx: &Ctx,
    path: &str,
    on_chain: bool,
    id: Option<&str>,
) -> Result<Verdict, CliError> {
    let d = digest_path(path, crate::fingerprint::DEFAULT_CHUNK_SIZE)?;
    let addr = ctx.contract()?;
    if on_chain && id.is_some() {
        return Err(CliError::Local(
            "--on-chain compares against the reference; drop --id".into(),
        ));
    }
    let keys = if on_chain { Some(ctx.keys()?) } else { None };
    let client = ctx.client()?;
    let c = FirmwareContract::at(&client, addr);
    let (matched, receipt) = match (&keys, id) {
        (Some(keys), _) => {
            let r = c.verify_hash_tx(keys, d, &ctx.tx_options())?;
            reverted(&r)?;
            let m = contract::ops::verification_outcome(&r)
                .ok_or_else(|| CliError::OnChain("receipt has no verification event".into()))?;
            (m, Some(r))
        }
        (None, Some(id)) => (c.verify_versioned(id, d)?, None),
        (None, None) => (c.verify_hash_call(d)?, None),
    };
    let verdict = if matched { "MATCH" } else { "MISMATCH" };
    let mut lines = vec![verdict.to_string(), format!("digest: {d}")];
    let mut rec = match &receipt {
        Some(r) => {
            lines.extend(receipt_lines(r));
            receipt_record("verify", r)
        }
        None => json!({"action": "verify"}),
    };
    rec["mode"] = json!(if on_chain { "on-chain" } else { "read-only" });
    rec["digest"] = json!(d);
    rec["verdict"] = json!(verdict);
    ctx.out.emit(&lines, rec);
    Ok(if matched {
        Verdict::Ok
    } else {
        Verdict::Mismatch
    })
}

fn cmd_audit(ctx: &Ctx, out: &Path) -> Result<Verdict, CliError> {
    let addr = ctx.contract()?;
    let client = ctx.client()?;
    let records = audit::export_audit(&client, &addr)?;
    fs::write(out, audit::to_jsonl(&records))
        .map_err(|e| local(format!("{}: {e}", out.display())))?;
    ctx.out.emit(
        &[format!(
            "{} records written to {}",
            records.len(),
            out.display()
        )],
        json!({"action": "audit", "records": records.len(), "out": out}),
    );
    Ok(Verdict::Ok)
}

fn cmd_bench(ctx: &Ctx, args: &BenchArgs) -> Result<Verdict, CliError> {
    let profile = CalibrationProfile::builtin(&args.profile).map_err(local)?;
    let scenarios: Vec<&str> = match args.scenario.as_str() {
        "all" => vec!["tamper", "replay", "spoof", "perf"],
        s @ ("tamper" | "replay" | "spoof" | "perf") => vec![s],
        other => return Err(CliError::Local(format!("unknown scenario {other:?}"))),
    };
    let model = MutationModel::parse(&args.mutation)
        .ok_or_else(|| CliError::Local(format!("unknown mutation model {:?}", args.mutation)))?;
    let bench_cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| local(format!("{}: {e}", p.display())))?;
            toml::from_str::<BenchConfig>(&text).map_err(local)?
        }
        None => BenchConfig {
            submitters: args.submitters,
            txs_per_submitter: args.trials,
            seed: args.seed,
            block_gas_limit: args.block_gas_limit,
            randomize_phase: true,
        },
    };

    let mut reports: Vec<ScenarioReport> = Vec::new();
    for s in scenarios {
        let r = match s {
            "tamper" => harness::run_tamper_scenario(args.trials, model, &profile, args.seed),
            "replay" => harness::run_replay_scenario(args.trials, &profile, args.seed),
            "spoof" => harness::run_spoof_scenario(args.trials, &profile, args.seed),
            _ => Ok(harness::run_perf_bench(&bench_cfg, &profile)),
        }
        .map_err(|e| CliError::Local(e.to_string()))?;
        let mut rec = serde_json::to_value(&r.summary).unwrap_or(Value::Null);
        rec["action"] = json!("bench");
        rec["scenario"] = json!(r.scenario);
        rec["seed"] = json!(r.seed);
        ctx.out.emit(&[r.headline()], rec);
        reports.push(r);
    }
    if let Some(out) = &args.out {
        let body = if reports.len() == 1 {
            reports[0].to_json()
        } else {
            serde_json::to_string_pretty(&reports).map_err(local)?
        };
        fs::write(out, body).map_err(|e| local(format!("{}: {e}", out.display())))?;
    }
    Ok(Verdict::Ok)
}

fn read_proof(path: &Path) -> Result<MerkleProof, CliError> {
    let text = fs::read_to_string(path).map_err(|e| local(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| local(format!("{}: {e}", path.display())))
}

fn cmd_anchor(ctx: &Ctx, cmd: AnchorCommand) -> Result<Verdict, CliError> {
    match cmd {
        AnchorCommand::Build {
            files,
            digests,
            out_dir,
        } => {
            let leaves = match digests {
                Some(p) => {
                    let text = fs::read_to_string(&p)
                        .map_err(|e| local(format!("{}: {e}", p.display())))?;
                    anchor::parse_leaf_list(&text).map_err(local)?
                }
                None => files
                    .iter()
                    .map(|f| crate::fingerprint::digest_file(f).map_err(local))
                    .collect::<Result<_, _>>()?,
            };
            let tree = anchor::build_tree(&leaves).map_err(local)?;
            let path = anchor::write_leaf_file(&out_dir, &leaves).map_err(local)?;
            ctx.out.emit(
                &[
                    format!("root: {}", tree.root()),
                    format!("leaves: {}", tree.len()),
                    format!("leaf_file: {}", path.display()),
                ],
                json!({"action": "anchor-build", "root": tree.root(), "leaves": tree.len(), "leaf_file": path}),
            );
            Ok(Verdict::Ok)
        }
        AnchorCommand::Prove { leaves, index, out } => {
            let list = anchor::read_leaf_file(&leaves).map_err(local)?;
            let tree = anchor::build_tree(&list).map_err(local)?;
            let proof = tree.prove(index).map_err(local)?;
            let body = serde_json::to_string_pretty(&proof).map_err(local)?;
            match out {
                Some(p) => {
                    fs::write(&p, &body).map_err(|e| local(format!("{}: {e}", p.display())))?;
                    ctx.out.emit(
                        &[
                            format!("root: {}", tree.root()),
                            format!("proof: {}", p.display()),
                        ],
                        json!({"action": "anchor-prove", "root": tree.root(), "proof_file": p}),
                    );
                }
                None => ctx.out.emit(
                    &[body],
                    json!({"action": "anchor-prove", "root": tree.root(), "proof": proof}),
                ),
            }
            Ok(Verdict::Ok)
        }
        AnchorCommand::Verify { path, proof, root } => {
            let leaf = digest_path(&path, crate::fingerprint::DEFAULT_CHUNK_SIZE)?;
            let proof = read_proof(&proof)?;
            let (matched, source) = match root {
                Some(r) => {
                    let r = parse_hex_digest(r.strip_prefix("0x").unwrap_or(&r)).map_err(local)?;
                    (anchor::verify_proof(&leaf, &proof, &r), "given")
                }
                None => {
                    let addr = ctx.contract()?;
                    let client = ctx.client()?;
                    let c = FirmwareContract::at(&client, addr);
                    (anchor::verify_against_chain(&c, &leaf, &proof)?, "anchored")
                }
            };
            let verdict = if matched { "MATCH" } else { "MISMATCH" };
            ctx.out.emit(
                &[verdict.to_string(), format!("leaf: {leaf}")],
                json!({"action": "anchor-verify", "leaf": leaf, "root_source": source, "verdict": verdict}),
            );
            Ok(if matched {
                Verdict::Ok
            } else {
                Verdict::Mismatch
            })
        }
        AnchorCommand::Commit { leaves } => {
            let list = anchor::read_leaf_file(&leaves).map_err(local)?;
            let tree = anchor::build_tree(&list).map_err(local)?;
            let keys = ctx.keys()?;
            let addr = ctx.contract()?;
            let client = ctx.client()?;
            let c = FirmwareContract::at(&client, addr);
            let r = anchor::anchor_root(&c, &keys, tree.root(), &ctx.tx_options())?;
            let mut lines = vec![
                format!("root: {}", tree.root()),
                format!("id: {MERKLE_ROOT_ID}"),
            ];
            lines.extend(receipt_lines(&r));
            let mut rec = receipt_record("anchor-commit", &r);
            rec["root"] = json!(tree.root());
            rec["leaves"] = json!(tree.len());
            ctx.out.emit(&lines, rec);
            reverted(&r)?;
            Ok(Verdict::Ok)
        }
    }
}
