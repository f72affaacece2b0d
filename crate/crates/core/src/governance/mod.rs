//! Policy-gated access, a hash-chained lifecycle log, and authenticated
//! encryption for shared datasets.

mod lifecycle;
mod policy;
mod seal;

pub use lifecycle::{
    next_state, replay, transition, verify_chain, LifecycleRecord, LifecycleState, LogEntry, ACTIONS, ALL_STATES,
    GENESIS_HASH,
};
pub use policy::{authorize, Authorization, DatasetMeta, Policy, PolicyKind, PolicyVerdict, UserContext, VERDICT_KEY};
pub use seal::{
    seal, unseal, SealedPackage, FORMAT_VERSION, HEADER_LEN, KEY_LEN, MAGIC, MAX_KEY_ID_LEN, NONCE_LEN, TAG_LEN,
};

use thiserror::Error;

use crate::ercd::AugmentedDataset;
use crate::numerics::RngStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GovError {
    #[error("malformed policy: {0}")]
    MalformedPolicy(String),
    #[error("user context has an empty user_id")]
    InvalidUser,
    #[error("action `{action}` is not allowed in state {state:?}")]
    IllegalTransition { state: LifecycleState, action: String },
    #[error("lifecycle history fails replay")]
    ChainCorrupt,
    #[error("authentication failed")]
    AuthFailure,
    #[error("key must be 32 bytes, got {0}")]
    WrongKeyLength(usize),
    #[error("key id is {0} bytes, at most 30 allowed")]
    KeyIdTooLong(usize),
    #[error("bad package header: {0}")]
    BadHeader(String),
    #[error("access denied")]
    Denied(Vec<PolicyVerdict>),
    #[error("dataset is {0:?}, sharing needs Certified")]
    NotCertified(LifecycleState),
    #[error("malformed log: {0}")]
    Format(String),
}

/// Who is asking, about what, under which policies.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessRequest {
    pub user: UserContext,
    pub meta: DatasetMeta,
    pub policies: Vec<Policy>,
}

/// Seals the canonical serialization of a certified dataset for `req.user`
/// and returns the package with the lifecycle record extended by a `share`
/// entry. On any error the input record is left as it was.
pub fn share(
    dprime: &AugmentedDataset,
    rec: &LifecycleRecord,
    req: &AccessRequest,
    key: &[u8],
    key_id: &str,
    rng: &mut RngStream,
    now: u64,
) -> Result<(SealedPackage, LifecycleRecord), GovError> {
    if rec.state != LifecycleState::Certified {
        return Err(GovError::NotCertified(rec.state));
    }
    let auth = authorize(&req.user, &req.meta, &req.policies)?;
    if !auth.granted {
        return Err(GovError::Denied(auth.verdicts));
    }
    let pkg = seal(dprime.to_canonical_json().as_bytes(), key, key_id, rng)?;
    let next = transition(rec, "share", &req.user.user_id, now)?;
    Ok((pkg, next))
}
