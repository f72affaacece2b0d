use chacha20poly1305::aead::{AeadInPlace, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce, Tag};
use sha2::{Digest, Sha256};

use super::GovError;
use crate::numerics::RngStream;

pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
pub const HEADER_LEN: usize = 64;
pub const MAX_KEY_ID_LEN: usize = 30;
pub const MAGIC: &[u8; 4] = b"SEAL";
pub const FORMAT_VERSION: u8 = 1;

/// Header bytes covered by the authentication tag: magic through nonce.
const AAD_LEN: usize = 48;

/// ChaCha20-Poly1305 package. The encrypted plaintext is
/// `SHA-256(payload) || payload`, so a successful decryption also proves
/// the payload digest. See `docs/sealed-package.md` for the file layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedPackage {
    pub key_id: String,
    pub nonce: [u8; NONCE_LEN],
    pub tag: [u8; TAG_LEN],
    pub ciphertext: Vec<u8>,
    /// Hex SHA-256 of the payload; known to the sealer, `None` after
    /// parsing a file until the package is opened.
    pub plaintext_digest: Option<String>,
}

fn cipher(key: &[u8]) -> Result<ChaCha20Poly1305, GovError> {
    if key.len() != KEY_LEN {
        return Err(GovError::WrongKeyLength(key.len()));
    }
    Ok(ChaCha20Poly1305::new(Key::from_slice(key)))
}

fn header_prefix(key_id: &str, nonce: &[u8; NONCE_LEN]) -> [u8; AAD_LEN] {
    let mut h = [0u8; AAD_LEN];
    h[..4].copy_from_slice(MAGIC);
    h[4] = FORMAT_VERSION;
    h[5] = key_id.len() as u8;
    h[6..6 + key_id.len()].copy_from_slice(key_id.as_bytes());
    h[36..48].copy_from_slice(nonce);
    h
}

/// Encrypts `payload` under a nonce drawn from `rng`.
pub fn seal(payload: &[u8], key: &[u8], key_id: &str, rng: &mut RngStream) -> Result<SealedPackage, GovError> {
    let aead = cipher(key)?;
    if key_id.len() > MAX_KEY_ID_LEN {
        return Err(GovError::KeyIdTooLong(key_id.len()));
    }
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let digest = Sha256::digest(payload);
    let mut buf = Vec::with_capacity(32 + payload.len());
    buf.extend_from_slice(&digest);
    buf.extend_from_slice(payload);
    let aad = header_prefix(key_id, &nonce);
    let tag = aead
        .encrypt_in_place_detached(Nonce::from_slice(&nonce), &aad, &mut buf)
        .map_err(|_| GovError::AuthFailure)?;
    Ok(SealedPackage {
        key_id: key_id.into(),
        nonce,
        tag: tag.into(),
        ciphertext: buf,
        plaintext_digest: Some(hex::encode(digest)),
    })
}

pub fn unseal(pkg: &SealedPackage, key: &[u8]) -> Result<Vec<u8>, GovError> {
    let aead = cipher(key)?;
    if pkg.key_id.len() > MAX_KEY_ID_LEN {
        return Err(GovError::KeyIdTooLong(pkg.key_id.len()));
    }
    let aad = header_prefix(&pkg.key_id, &pkg.nonce);
    let mut buf = pkg.ciphertext.clone();
    aead.decrypt_in_place_detached(Nonce::from_slice(&pkg.nonce), &aad, &mut buf, Tag::from_slice(&pkg.tag))
        .map_err(|_| GovError::AuthFailure)?;
    if buf.len() < 32 {
        return Err(GovError::AuthFailure);
    }
    let payload = buf.split_off(32);
    let digest = hex::encode(Sha256::digest(&payload));
    if hex::encode(&buf) != digest || pkg.plaintext_digest.as_ref().is_some_and(|d| *d != digest) {
        return Err(GovError::AuthFailure);
    }
    Ok(payload)
}

impl SealedPackage {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.ciphertext.len());
        out.extend_from_slice(&header_prefix(&self.key_id, &self.nonce));
        out.extend_from_slice(&self.tag);
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GovError> {
        if bytes.len() < HEADER_LEN {
            return Err(GovError::BadHeader(format!("{} bytes, header needs {HEADER_LEN}", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(GovError::BadHeader("bad magic".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(GovError::BadHeader(format!("unsupported version {}", bytes[4])));
        }
        let n = bytes[5] as usize;
        if n > MAX_KEY_ID_LEN || bytes[6 + n..36].iter().any(|&b| b != 0) {
            return Err(GovError::BadHeader("malformed key id field".into()));
        }
        let key_id = std::str::from_utf8(&bytes[6..6 + n])
            .map_err(|_| GovError::BadHeader("key id is not UTF-8".into()))?
            .to_string();
        Ok(Self {
            key_id,
            nonce: bytes[36..48].try_into().expect("12 bytes"),
            tag: bytes[48..64].try_into().expect("16 bytes"),
            ciphertext: bytes[HEADER_LEN..].to_vec(),
            plaintext_digest: None,
        })
    }
}
