//! Drives the `firmchain` binary as a user would.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub const BIN: &str = env!("CARGO_BIN_EXE_firmchain");

/// A `firmchain node` child process, killed on drop.
pub struct NodeProc {
    child: Child,
    pub url: String,
}

impl NodeProc {
    pub fn spawn(args: &[&str]) -> NodeProc {
        let mut child = Command::new(BIN)
            .args(["node", "--port", "0"])
            .args(args)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn node");
        let stdout = child.stdout.take().unwrap();
        let mut lines = BufReader::new(stdout).lines();
        let url = lines
            .next()
            .expect("node printed nothing")
            .expect("read url");
        assert!(url.starts_with("http://"), "unexpected first line {url:?}");
        // Keep draining so the child never blocks on a full pipe.
        std::thread::spawn(move || for _ in lines {});
        NodeProc { child, url }
    }

    /// Sends SIGINT and returns the exit status code.
    pub fn interrupt(mut self) -> Option<i32> {
        let pid = self.child.id().to_string();
        Command::new("kill")
            .args(["-INT", &pid])
            .status()
            .expect("kill");
        self.child.wait().expect("wait").code()
    }
}

impl Drop for NodeProc {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    /// Value of the first `field: value` line.
    pub fn field(&self, name: &str) -> Option<&str> {
        let prefix = format!("{name}: ");
        self.stdout
            .lines()
            .find_map(|l| l.strip_prefix(prefix.as_str()))
    }

    pub fn first_line(&self) -> &str {
        self.stdout.lines().next().unwrap_or("")
    }
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Run {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }
}

pub fn firmchain(rpc_url: Option<&str>, args: &[&str]) -> Run {
    let mut cmd = Command::new(BIN);
    cmd.env_remove("FIRMCHAIN_RPC_URL");
    if let Some(url) = rpc_url {
        cmd.env("FIRMCHAIN_RPC_URL", url);
    }
    cmd.args(args)
        .stdin(Stdio::null())
        .output()
        .expect("run firmchain")
        .into()
}

/// Deterministic firmware image used by the quickstart.
pub fn firmware_bytes() -> Vec<u8> {
    (0..20_000u32)
        .map(|i| (i.wrapping_mul(2_654_435_761) >> 13) as u8)
        .collect()
}

/// Exit codes of each quickstart step, plus the audit file.
#[derive(Debug)]
pub struct Quickstart {
    pub steps: Vec<(&'static str, i32, i32)>,
    pub hash: String,
    pub audit: Vec<u8>,
    pub audit_path: PathBuf,
}

impl Quickstart {
    pub fn all_codes_match(&self) -> bool {
        self.steps.iter().all(|(_, want, got)| want == got)
    }
}

/// node, keygen, hash, deploy, register, verify (match, mismatch, on-chain), audit.
pub fn quickstart(dir: &Path) -> Quickstart {
    let node = NodeProc::spawn(&["--instant-mine", "--profile", "sepolia-paper"]);
    let url = Some(node.url.as_str());
    let p = |name: &str| dir.join(name).display().to_string();
    std::fs::write(p("fw.bin"), firmware_bytes()).unwrap();
    let mut bad = firmware_bytes();
    bad[100] ^= 0x04;
    std::fs::write(p("fw-tampered.bin"), bad).unwrap();

    let mut steps = Vec::new();
    let key = p("owner.key");
    let r = firmchain(None, &["keygen", "--seed", "dev-0", "--out", &key]);
    steps.push(("keygen", 0, r.code));
    let hash = firmchain(None, &["hash", &p("fw.bin")]);
    steps.push(("hash", 0, hash.code));
    let deploy = firmchain(url, &["--key", &key, "deploy"]);
    steps.push(("deploy", 0, deploy.code));
    let contract = deploy.field("contract").unwrap_or("").to_string();
    let c = ["--key", key.as_str(), "--contract", contract.as_str()];
    let run = |args: &[&str]| firmchain(url, &[&c[..], args].concat());
    steps.push(("register", 0, run(&["register", &p("fw.bin")]).code));
    steps.push(("verify", 0, run(&["verify", &p("fw.bin")]).code));
    steps.push((
        "verify-tampered",
        1,
        run(&["verify", &p("fw-tampered.bin")]).code,
    ));
    steps.push((
        "verify-on-chain",
        0,
        run(&["verify", "--on-chain", &p("fw.bin")]).code,
    ));
    let audit_path = dir.join("audit.jsonl");
    steps.push(("audit", 0, run(&["audit", "--out", &p("audit.jsonl")]).code));
    let audit = std::fs::read(&audit_path).unwrap_or_default();
    Quickstart {
        steps,
        hash: hash.first_line().to_string(),
        audit,
        audit_path,
    }
}
