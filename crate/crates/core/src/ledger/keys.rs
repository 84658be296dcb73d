//! Account keys and the signature schemes accepted by the ledger.

use std::fs;
use std::path::Path;

use ed25519_dalek::{Signer as _, SigningKey, Verifier as _, VerifyingKey};

use super::types::{Address, SignedTransaction, UnsignedTransaction, Wei};
use crate::fingerprint::Digest;

/// Signature schemes, identified on the wire by `scheme_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum SignatureScheme {
    Ed25519 = 1,
}

impl SignatureScheme {
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(SignatureScheme::Ed25519),
            _ => None,
        }
    }

    pub fn verify(self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        match self {
            SignatureScheme::Ed25519 => {
                let Ok(pk) = <[u8; 32]>::try_from(public_key) else {
                    return false;
                };
                let Ok(sig) = <[u8; 64]>::try_from(signature) else {
                    return false;
                };
                let Ok(vk) = VerifyingKey::from_bytes(&pk) else {
                    return false;
                };
                vk.verify(message, &ed25519_dalek::Signature::from_bytes(&sig))
                    .is_ok()
            }
        }
    }
}

/// Address derived from a serialized public key.
pub fn address_of(public_key: &[u8]) -> Address {
    Address::from_hash(&Digest::of(public_key))
}

/// Account as seen by the ledger: identity plus mutable counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Account {
    pub address: Address,
    pub public_key: Vec<u8>,
    pub nonce: u64,
    pub balance: Wei,
}

#[derive(Debug, thiserror::Error)]
pub enum KeyError {
    #[error("cannot read key file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("key file must contain 64 hex characters")]
    Format,
}

/// An ed25519 signing key.
#[derive(Clone)]
pub struct Keypair {
    signing: SigningKey,
}

impl std::fmt::Debug for Keypair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Keypair")
            .field("address", &self.address())
            .finish_non_exhaustive()
    }
}

impl Keypair {
    /// Deterministic key: the secret is SHA-256 of `seed`.
    pub fn from_seed(seed: &[u8]) -> Keypair {
        Keypair::from_secret(Digest::of(seed).0)
    }

    pub fn from_secret(secret: [u8; 32]) -> Keypair {
        Keypair {
            signing: SigningKey::from_bytes(&secret),
        }
    }

    pub fn secret_hex(&self) -> String {
        hex::encode(self.signing.to_bytes())
    }

    pub fn public_key(&self) -> Vec<u8> {
        self.signing.verifying_key().to_bytes().to_vec()
    }

    pub fn address(&self) -> Address {
        address_of(&self.public_key())
    }

    pub fn scheme(&self) -> SignatureScheme {
        SignatureScheme::Ed25519
    }

    pub fn sign(&self, tx: UnsignedTransaction) -> SignedTransaction {
        let hash = tx.hash();
        let signature = self.signing.sign(&hash.0).to_bytes().to_vec();
        SignedTransaction {
            tx,
            public_key: self.public_key(),
            signature,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Keypair, KeyError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| KeyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let bytes = hex::decode(text.trim()).map_err(|_| KeyError::Format)?;
        let secret: [u8; 32] = bytes.try_into().map_err(|_| KeyError::Format)?;
        Ok(Keypair::from_secret(secret))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), KeyError> {
        let path = path.as_ref();
        fs::write(path, format!("{}\n", self.secret_hex())).map_err(|source| KeyError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Creates the account for `seed` with a zero nonce and the given balance.
pub fn create_account(seed: &[u8], balance: Wei) -> (Keypair, Account) {
    let keys = Keypair::from_seed(seed);
    let account = Account {
        address: keys.address(),
        public_key: keys.public_key(),
        nonce: 0,
        balance,
    };
    (keys, account)
}

/// Checks that `tx` is signed by the key its `from` address commits to.
pub fn verify_transaction(tx: &SignedTransaction) -> bool {
    let Some(scheme) = SignatureScheme::from_id(tx.tx.scheme_id) else {
        return false;
    };
    if address_of(&tx.public_key) != tx.tx.from {
        return false;
    }
    scheme.verify(&tx.public_key, &tx.hash().0, &tx.signature)
}
