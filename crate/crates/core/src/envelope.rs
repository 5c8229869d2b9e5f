//! Toy encrypted record standing in for TLS/WTLS sessions.
//!
//! NOT SECURE. The cipher is a repeating-key XOR mixed with the record
//! counter. Its only job is to make "who can read the payload" observable in
//! tests: a relay that never holds the key provably never sees plaintext.
//!
//! Wire layout, integers little-endian:
//!
//! ```text
//! "SENV" | version u8 = 1 | session_id [16] | counter u64 | len u32 | ciphertext
//! ```

use std::collections::HashMap;

use thiserror::Error;

use crate::digest::fnv1a64;

pub const MAGIC: &[u8; 4] = b"SENV";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 33;
pub const CONTENT_TYPE: &str = "application/x-senv";
pub const MAX_KEY_LEN: usize = 64;

pub type SessionId = [u8; 16];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("bad envelope magic")]
    BadMagic,
    #[error("unsupported envelope version {0}")]
    BadVersion(u8),
    #[error("truncated envelope")]
    Truncated,
    #[error("envelope belongs to another session")]
    WrongSession,
    #[error("replayed envelope (counter {counter} <= {last_seen})")]
    ReplayDetected { counter: u64, last_seen: u64 },
    #[error("key must be 1 to {MAX_KEY_LEN} bytes, got {0}")]
    BadKey(usize),
}

#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey {
    key: Vec<u8>,
    session_id: SessionId,
}

impl std::fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionKey")
            .field("key_len", &self.key.len())
            .field("session_id", &hex(&self.session_id))
            .finish()
    }
}

impl SessionKey {
    pub fn new(key: Vec<u8>, session_id: SessionId) -> Result<Self, EnvelopeError> {
        if key.is_empty() || key.len() > MAX_KEY_LEN {
            return Err(EnvelopeError::BadKey(key.len()));
        }
        Ok(Self { key, session_id })
    }

    /// Pre-shared key whose session id is derived from the key bytes, so both
    /// ends agree on it without a handshake.
    pub fn pre_shared(key: Vec<u8>) -> Result<Self, EnvelopeError> {
        let mut tagged = b"senv-session:".to_vec();
        tagged.extend_from_slice(&key);
        let mut id = [0u8; 16];
        id[..8].copy_from_slice(&fnv1a64(&tagged).to_le_bytes());
        id[8..].copy_from_slice(&fnv1a64(&key).to_le_bytes());
        Self::new(key, id)
    }

    pub fn session_id(&self) -> SessionId {
        self.session_id
    }

    pub fn key(&self) -> &[u8] {
        &self.key
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecureEnvelope {
    pub session_id: SessionId,
    pub counter: u64,
    pub ciphertext: Vec<u8>,
}

impl SecureEnvelope {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.ciphertext.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.session_id);
        out.extend_from_slice(&self.counter.to_le_bytes());
        out.extend_from_slice(&(self.ciphertext.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(EnvelopeError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(EnvelopeError::Truncated);
        }
        if bytes[4] != VERSION {
            return Err(EnvelopeError::BadVersion(bytes[4]));
        }
        let session_id: SessionId = bytes[5..21].try_into().expect("16 bytes");
        let counter = u64::from_le_bytes(bytes[21..29].try_into().expect("8 bytes"));
        let len = u32::from_le_bytes(bytes[29..33].try_into().expect("4 bytes")) as usize;
        if bytes.len() != HEADER_LEN + len {
            return Err(EnvelopeError::Truncated);
        }
        Ok(Self {
            session_id,
            counter,
            ciphertext: bytes[HEADER_LEN..].to_vec(),
        })
    }
}

fn keystream_xor(key: &[u8], counter: u64, data: &[u8]) -> Vec<u8> {
    let ctr = counter.to_le_bytes();
    data.iter()
        .enumerate()
        .map(|(i, b)| b ^ key[i % key.len()] ^ ctr[i % 8])
        .collect()
}

pub fn seal(key: &SessionKey, counter: u64, plaintext: &[u8]) -> SecureEnvelope {
    SecureEnvelope {
        session_id: key.session_id,
        counter,
        ciphertext: keystream_xor(&key.key, counter, plaintext),
    }
}

/// Decrypts without replay tracking; see [`ReplayGuard`] for the stateful form.
pub fn open(key: &SessionKey, env: &SecureEnvelope) -> Result<Vec<u8>, EnvelopeError> {
    if env.session_id != key.session_id {
        return Err(EnvelopeError::WrongSession);
    }
    Ok(keystream_xor(&key.key, env.counter, &env.ciphertext))
}

/// Highest counter accepted per session. Owned by one endpoint.
#[derive(Debug, Default)]
pub struct ReplayGuard {
    last_seen: HashMap<SessionId, u64>,
}

impl ReplayGuard {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens `env` and records its counter; counters must strictly increase.
    pub fn open(&mut self, key: &SessionKey, env: &SecureEnvelope) -> Result<Vec<u8>, EnvelopeError> {
        let plaintext = open(key, env)?;
        if let Some(&last_seen) = self.last_seen.get(&env.session_id) {
            if env.counter <= last_seen {
                return Err(EnvelopeError::ReplayDetected {
                    counter: env.counter,
                    last_seen,
                });
            }
        }
        self.last_seen.insert(env.session_id, env.counter);
        Ok(plaintext)
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
