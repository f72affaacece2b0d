use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::GovError;

/// Dataset metadata the policies are evaluated against.
pub type DatasetMeta = BTreeMap<String, String>;

/// Metadata key read by certification policies.
pub const VERDICT_KEY: &str = "validation_verdict";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// params: `role`
    RoleRequired,
    /// params: `consent`
    ConsentRequired,
    /// Passes when the metadata records a passing validation verdict.
    CertificationRequired,
    /// params: `key`, `op` (eq, ne, lt, le, gt, ge), `value`
    MetadataPredicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    pub policy_id: String,
    pub kind: PolicyKind,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl Policy {
    pub fn new(policy_id: &str, kind: PolicyKind, params: &[(&str, &str)]) -> Self {
        Self {
            policy_id: policy_id.into(),
            kind,
            params: params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn role(policy_id: &str, role: &str) -> Self {
        Self::new(policy_id, PolicyKind::RoleRequired, &[("role", role)])
    }

    pub fn consent(policy_id: &str, consent: &str) -> Self {
        Self::new(policy_id, PolicyKind::ConsentRequired, &[("consent", consent)])
    }

    pub fn certification(policy_id: &str) -> Self {
        Self::new(policy_id, PolicyKind::CertificationRequired, &[])
    }

    fn param(&self, key: &str) -> Result<&str, GovError> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| GovError::MalformedPolicy(format!("{}: missing parameter `{key}`", self.policy_id)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserContext {
    pub user_id: String,
    #[serde(default)]
    pub roles: BTreeSet<String>,
    #[serde(default)]
    pub consents: BTreeSet<String>,
}

impl UserContext {
    pub fn new(user_id: &str, roles: &[&str], consents: &[&str]) -> Self {
        Self {
            user_id: user_id.into(),
            roles: roles.iter().map(|s| s.to_string()).collect(),
            consents: consents.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyVerdict {
    pub policy_id: String,
    pub passed: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Authorization {
    pub granted: bool,
    pub verdicts: Vec<PolicyVerdict>,
}

fn compare(op: &str, have: &str, want: &str) -> Result<bool, String> {
    let numeric = have.parse::<f64>().ok().zip(want.parse::<f64>().ok());
    let ord = match numeric {
        Some((a, b)) => a.partial_cmp(&b),
        None => Some(have.cmp(want)),
    };
    use std::cmp::Ordering::*;
    Ok(match op {
        "eq" => ord == Some(Equal),
        "ne" => ord != Some(Equal),
        "lt" => ord == Some(Less),
        "le" => matches!(ord, Some(Less | Equal)),
        "gt" => ord == Some(Greater),
        "ge" => matches!(ord, Some(Greater | Equal)),
        other => return Err(format!("unknown comparator `{other}`")),
    })
}

fn evaluate(p: &Policy, user: &UserContext, meta: &DatasetMeta) -> Result<PolicyVerdict, GovError> {
    let (passed, reason) = match p.kind {
        PolicyKind::RoleRequired => {
            let role = p.param("role")?;
            let ok = user.roles.contains(role);
            (ok, format!("role `{role}` {}", if ok { "held" } else { "missing" }))
        }
        PolicyKind::ConsentRequired => {
            let consent = p.param("consent")?;
            let ok = user.consents.contains(consent);
            (ok, format!("consent `{consent}` {}", if ok { "given" } else { "missing" }))
        }
        PolicyKind::CertificationRequired => {
            let v = meta.get(VERDICT_KEY).map(String::as_str);
            (v == Some("pass"), format!("{VERDICT_KEY} = {}", v.unwrap_or("<absent>")))
        }
        PolicyKind::MetadataPredicate => {
            let (key, op, want) = (p.param("key")?, p.param("op")?, p.param("value")?);
            match meta.get(key) {
                None => (false, format!("metadata `{key}` absent")),
                Some(have) => {
                    let ok = compare(op, have, want)
                        .map_err(|e| GovError::MalformedPolicy(format!("{}: {e}", p.policy_id)))?;
                    (ok, format!("{key}={have} {op} {want}"))
                }
            }
        }
    };
    Ok(PolicyVerdict { policy_id: p.policy_id.clone(), passed, reason })
}

/// Conjunction of every policy. An empty policy list grants access;
/// supply an explicit policy when default-deny is wanted.
pub fn authorize(user: &UserContext, meta: &DatasetMeta, policies: &[Policy]) -> Result<Authorization, GovError> {
    if user.user_id.is_empty() {
        return Err(GovError::InvalidUser);
    }
    let verdicts = policies.iter().map(|p| evaluate(p, user, meta)).collect::<Result<Vec<_>, _>>()?;
    Ok(Authorization { granted: verdicts.iter().all(|v| v.passed), verdicts })
}
