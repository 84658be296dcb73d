//! Streaming SHA-256 fingerprints of firmware images.
//!
//! A firmware image is treated as opaque bytes and hashed verbatim in
//! fixed-size chunks. The digest does not depend on the chunk size.

use std::fmt;
use std::fs::File;
use std::io::{self, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

/// Chunk size used when none is given.
pub const DEFAULT_CHUNK_SIZE: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum FingerprintError {
    #[error("chunk size must be positive")]
    ZeroChunkSize,
    #[error("read failed at offset {offset}: {source}")]
    Read {
        offset: u64,
        #[source]
        source: io::Error,
    },
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("source ended after {read} of {declared} declared bytes")]
    ShortRead { read: u64, declared: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HexError {
    #[error("expected 64 hex characters, got {0}")]
    Length(usize),
    #[error("invalid hex character {ch:?} at position {index}")]
    Character { index: usize, ch: char },
}

/// A 32-byte SHA-256 firmware fingerprint.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// One-shot SHA-256 of an in-memory buffer.
    pub fn of(bytes: &[u8]) -> Digest {
        Digest(Sha256::digest(bytes).into())
    }

    /// SHA-256 of the concatenation of `parts`.
    pub fn of_parts(parts: &[&[u8]]) -> Digest {
        let mut hasher = Sha256::new();
        for part in parts {
            hasher.update(part);
        }
        Digest(hasher.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        digest_to_hex(self)
    }

    /// Returns a copy with bit `bit` (0 = MSB of byte 0) inverted.
    pub fn with_bit_flipped(&self, bit: usize) -> Digest {
        let mut out = *self;
        out.0[bit / 8] ^= 0x80 >> (bit % 8);
        out
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = HexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_hex_digest(s)
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_hex_digest(&s).map_err(serde::de::Error::custom)
    }
}

/// A byte source with a declared length, read front to back.
pub struct FirmwareImage<R> {
    source: R,
    declared_length: Option<u64>,
}

impl<R: Read> FirmwareImage<R> {
    /// Wraps a reader whose length is not known up front (e.g. stdin).
    pub fn from_reader(source: R) -> Self {
        FirmwareImage {
            source,
            declared_length: None,
        }
    }

    pub fn with_length(source: R, declared_length: u64) -> Self {
        FirmwareImage {
            source,
            declared_length: Some(declared_length),
        }
    }

    pub fn declared_length(&self) -> Option<u64> {
        self.declared_length
    }
}

impl<'a> FirmwareImage<&'a [u8]> {
    pub fn from_bytes(bytes: &'a [u8]) -> Self {
        FirmwareImage::with_length(bytes, bytes.len() as u64)
    }
}

impl FirmwareImage<File> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, FingerprintError> {
        let path = path.as_ref();
        let open_err = |source| FingerprintError::Open {
            path: path.display().to_string(),
            source,
        };
        let file = File::open(path).map_err(open_err)?;
        let len = file.metadata().map_err(open_err)?.len();
        Ok(FirmwareImage::with_length(file, len))
    }
}

/// Hashes the whole image, reading `chunk_size` bytes at a time.
pub fn compute_digest<R: Read>(
    image: FirmwareImage<R>,
    chunk_size: usize,
) -> Result<Digest, FingerprintError> {
    if chunk_size == 0 {
        return Err(FingerprintError::ZeroChunkSize);
    }
    let FirmwareImage {
        mut source,
        declared_length,
    } = image;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; chunk_size];
    let mut offset: u64 = 0;
    loop {
        // A short read is not end of stream; only Ok(0) is.
        let n = match source.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(source) => return Err(FingerprintError::Read { offset, source }),
        };
        hasher.update(&buf[..n]);
        offset += n as u64;
    }
    if let Some(declared) = declared_length {
        if offset < declared {
            return Err(FingerprintError::ShortRead {
                read: offset,
                declared,
            });
        }
    }
    Ok(Digest(hasher.finalize().into()))
}

pub fn digest_file(path: impl AsRef<Path>) -> Result<Digest, FingerprintError> {
    compute_digest(FirmwareImage::open(path)?, DEFAULT_CHUNK_SIZE)
}

pub fn digest_bytes(bytes: &[u8]) -> Digest {
    Digest::of(bytes)
}

pub fn digest_to_hex(d: &Digest) -> String {
    hex::encode(d.0)
}

/// Parses 64 hex characters (either case) into a digest.
pub fn parse_hex_digest(s: &str) -> Result<Digest, HexError> {
    let len = s.chars().count();
    if len != 64 {
        return Err(HexError::Length(len));
    }
    let mut out = [0u8; 32];
    let bytes = s.as_bytes();
    for (index, ch) in s.chars().enumerate() {
        if !ch.is_ascii_hexdigit() {
            return Err(HexError::Character { index, ch });
        }
    }
    for (i, pair) in bytes.chunks(2).enumerate() {
        let hi = (pair[0] as char).to_digit(16).unwrap() as u8;
        let lo = (pair[1] as char).to_digit(16).unwrap() as u8;
        out[i] = (hi << 4) | lo;
    }
    Ok(Digest(out))
}
