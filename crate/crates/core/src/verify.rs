//! Client boundary for asset authentication and KYC.
//!
//! Production deployments plug an HTTP adapter behind [`AssetAuthenticator`]
//! and [`KycProvider`]; the simulation uses the deterministic doubles below.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::sha256;
use crate::ledger::AccountId;
use crate::registry::SneakerMeta;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("authentication requires live photo evidence")]
    MissingEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuthVerdict {
    Certified,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuthDecision {
    sneaker_id: String,
    verdict: AuthVerdict,
    evidence_ref: String,
    issued_at: u64,
}

impl AuthDecision {
    pub fn new(
        sneaker_id: impl Into<String>,
        verdict: AuthVerdict,
        evidence_ref: impl Into<String>,
        issued_at: u64,
    ) -> Result<Self, VerifyError> {
        let evidence_ref = evidence_ref.into();
        if verdict == AuthVerdict::Certified && evidence_ref.is_empty() {
            return Err(VerifyError::MissingEvidence);
        }
        Ok(AuthDecision {
            sneaker_id: sneaker_id.into(),
            verdict,
            evidence_ref,
            issued_at,
        })
    }

    pub fn sneaker_id(&self) -> &str {
        &self.sneaker_id
    }

    pub fn verdict(&self) -> AuthVerdict {
        self.verdict
    }

    pub fn evidence_ref(&self) -> &str {
        &self.evidence_ref
    }

    pub fn issued_at(&self) -> u64 {
        self.issued_at
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == AuthVerdict::Certified
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KycState {
    Passed,
    Failed,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KycStatus {
    pub account: AccountId,
    pub status: KycState,
}

pub trait AssetAuthenticator: Send + Sync {
    fn authenticate(&self, meta: &SneakerMeta, evidence_ref: &str, now: u64) -> Result<AuthDecision, VerifyError>;
}

pub trait KycProvider: Send + Sync {
    fn kyc_check(&self, account: &AccountId) -> KycStatus;
}

/// Ground truth about a physical pair, known only to the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Authenticity {
    Genuine,
    Fake,
}

/// Verifier double. Genuine pairs are always certified; a fake is caught
/// with probability `accuracy`, using a draw that is a pure function of
/// `(seed, sneakerId)`. Pairs with no recorded truth are rejected.
#[derive(Debug, Clone)]
pub struct SimulatedAuthenticator {
    seed: u64,
    accuracy: f64,
    truth: BTreeMap<String, Authenticity>,
}

impl SimulatedAuthenticator {
    pub fn new(seed: u64, accuracy: f64) -> Self {
        assert!((0.0..=1.0).contains(&accuracy), "accuracy must be a probability");
        SimulatedAuthenticator {
            seed,
            accuracy,
            truth: BTreeMap::new(),
        }
    }

    pub fn set_truth(&mut self, sneaker_id: impl Into<String>, truth: Authenticity) {
        self.truth.insert(sneaker_id.into(), truth);
    }

    pub fn truth(&self, sneaker_id: &str) -> Option<Authenticity> {
        self.truth.get(sneaker_id).copied()
    }

    /// Uniform draw in [0, 1) for this asset.
    pub fn draw(&self, sneaker_id: &str) -> f64 {
        let mut buf = self.seed.to_le_bytes().to_vec();
        buf.extend_from_slice(sneaker_id.as_bytes());
        let d = sha256(buf);
        let x = u64::from_le_bytes(d.0[..8].try_into().expect("8 bytes"));
        (x >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl AssetAuthenticator for SimulatedAuthenticator {
    fn authenticate(&self, meta: &SneakerMeta, evidence_ref: &str, now: u64) -> Result<AuthDecision, VerifyError> {
        if evidence_ref.is_empty() {
            return Err(VerifyError::MissingEvidence);
        }
        let verdict = match self.truth(&meta.sneaker_id) {
            Some(Authenticity::Genuine) => AuthVerdict::Certified,
            Some(Authenticity::Fake) if self.draw(&meta.sneaker_id) >= self.accuracy => AuthVerdict::Certified,
            _ => AuthVerdict::Rejected,
        };
        AuthDecision::new(meta.sneaker_id.clone(), verdict, evidence_ref, now)
    }
}

/// KYC double backed by a fixed table; unlisted accounts are `Unknown`.
#[derive(Debug, Clone, Default)]
pub struct StaticKyc {
    table: BTreeMap<AccountId, KycState>,
}

impl StaticKyc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, account: AccountId, state: KycState) {
        self.table.insert(account, state);
    }

    pub fn with(mut self, account: AccountId, state: KycState) -> Self {
        self.set(account, state);
        self
    }
}

impl KycProvider for StaticKyc {
    fn kyc_check(&self, account: &AccountId) -> KycStatus {
        KycStatus {
            account: account.clone(),
            status: self.table.get(account).copied().unwrap_or(KycState::Unknown),
        }
    }
}
