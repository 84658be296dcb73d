//! Fingerprint a firmware image with a streaming SHA-256.
//!
//! ```text
//! cargo run --example hash_firmware -- path/to/image.bin
//! ```

use firmchain::fingerprint::{compute_digest, FirmwareImage, DEFAULT_CHUNK_SIZE};

fn main() -> anyhow::Result<()> {
    let digest = match std::env::args().nth(1) {
        Some(path) => compute_digest(FirmwareImage::open(path)?, DEFAULT_CHUNK_SIZE)?,
        None => compute_digest(
            FirmwareImage::from_bytes(b"demo firmware image"),
            DEFAULT_CHUNK_SIZE,
        )?,
    };
    println!("{digest}");
    Ok(())
}
