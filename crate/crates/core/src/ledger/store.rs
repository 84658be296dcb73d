//! Append-only chain file.
//!
//! Layout: the magic `FWCHAIN1`, the genesis configuration as
//! length-prefixed TOML text, then one length-prefixed canonical block
//! encoding per sealed block (genesis block excluded). Loading replays
//! every block from genesis and checks each hash.

use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::profile::GenesisConfig;
use super::types::Block;
use super::{Ledger, LedgerError};

const MAGIC: &[u8; 8] = b"FWCHAIN1";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("chain file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("chain file {path} is not a chain file")]
    BadMagic { path: String },
    #[error("chain file {path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

pub struct ChainStore {
    path: PathBuf,
    file: File,
}

impl std::fmt::Debug for ChainStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChainStore")
            .field("path", &self.path)
            .finish()
    }
}

fn write_record(w: &mut impl Write, bytes: &[u8]) -> io::Result<()> {
    w.write_all(&(bytes.len() as u32).to_be_bytes())?;
    w.write_all(bytes)
}

fn read_record(r: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let mut buf = vec![0u8; u32::from_be_bytes(len) as usize];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

impl ChainStore {
    /// Creates a new chain file and writes every block `ledger` already has.
    pub fn create(path: impl AsRef<Path>, ledger: &Ledger) -> Result<ChainStore, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| StoreError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut file = File::create(&path).map_err(io_err)?;
        file.write_all(MAGIC).map_err(io_err)?;
        write_record(&mut file, ledger.genesis().to_toml().as_bytes()).map_err(io_err)?;
        for block in &ledger.blocks()[1..] {
            write_record(&mut file, &block.encode()).map_err(io_err)?;
        }
        file.sync_data().map_err(io_err)?;
        Ok(ChainStore { path, file })
    }

    /// Replays the file into a fresh ledger and reopens it for appending.
    pub fn open(path: impl AsRef<Path>) -> Result<(Ledger, ChainStore), StoreError> {
        let ledger = load(&path)?;
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|source| StoreError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Ok((ledger, ChainStore { path, file }))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, block: &Block) -> Result<(), StoreError> {
        let io_err = |source| StoreError::Io {
            path: self.path.display().to_string(),
            source,
        };
        let mut buf = Vec::new();
        write_record(&mut buf, &block.encode()).map_err(io_err)?;
        self.file.write_all(&buf).map_err(io_err)?;
        self.file.flush().map_err(io_err)
    }

    pub fn sync(&mut self) -> Result<(), StoreError> {
        self.file.sync_all().map_err(|source| StoreError::Io {
            path: self.path.display().to_string(),
            source,
        })
    }
}

/// Rebuilds a ledger from a chain file.
pub fn load(path: impl AsRef<Path>) -> Result<Ledger, StoreError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let io_err = |source| StoreError::Io {
        path: name.clone(),
        source,
    };
    let format = |message: String| StoreError::Format {
        path: name.clone(),
        message,
    };
    let mut r = BufReader::new(File::open(path).map_err(io_err)?);
    let mut magic = [0u8; 8];
    if r.read_exact(&mut magic).is_err() || &magic != MAGIC {
        return Err(StoreError::BadMagic { path: name.clone() });
    }
    let genesis_bytes = read_record(&mut r)
        .map_err(io_err)?
        .ok_or_else(|| format("missing genesis".into()))?;
    let text = String::from_utf8(genesis_bytes).map_err(|e| format(e.to_string()))?;
    let genesis = GenesisConfig::from_toml(&text).map_err(|e| format(e.to_string()))?;
    let mut ledger = Ledger::new(genesis);
    while let Some(bytes) = read_record(&mut r).map_err(io_err)? {
        let block = Block::decode(&bytes).map_err(|e| format(e.to_string()))?;
        ledger.apply_sealed_block(&block)?;
    }
    Ok(ledger)
}
