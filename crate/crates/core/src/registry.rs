//! Registry of non-tradable NFTs bound to physical sneaker pairs.
//!
//! On-chain records carry only an opaque SHA-256 of the canonical metadata.
//! The metadata itself lives in the [`MetadataRepository`] and is resolved on
//! explicit request by an authorized party presenting the right digest.
//! Location changes go through an oracle attestation and are versioned, so the
//! mint-time digest stays provable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{canonical_json, chain, sha256, Digest};
use crate::ledger::{AccountId, TradeId};
use crate::verify::{AuthDecision, AuthVerdict};

pub type NftId = u64;
pub type DisputeId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("sneaker {0:?} already has an NFT")]
    DuplicateSneakerId(String),
    #[error("sneaker {0:?} is not certified")]
    NotCertified(String),
    #[error("{caller} does not own NFT {nft}")]
    NotOwner { nft: NftId, caller: AccountId },
    #[error("unknown NFT {0}")]
    UnknownNft(NftId),
    #[error("unauthorized metadata request")]
    Unauthorized,
    #[error("digest does not match the NFT metadata")]
    DigestMismatch,
    #[error("bad oracle attestation: {0}")]
    BadAttestation(&'static str),
    #[error("invalid metadata: {0}")]
    InvalidMeta(&'static str),
    #[error("NFT {0} is locked by an open listing")]
    Locked(NftId),
}

/// Off-chain description of one physical pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SneakerMeta {
    pub sneaker_id: String,
    pub name: String,
    pub image_url: String,
    pub location: String,
    pub proof_of_ownership: String,
    pub nft_back_ref: Option<NftId>,
}

impl SneakerMeta {
    pub fn new(
        sneaker_id: impl Into<String>,
        name: impl Into<String>,
        image_url: impl Into<String>,
        location: impl Into<String>,
        proof_of_ownership: impl Into<String>,
    ) -> Self {
        SneakerMeta {
            sneaker_id: sneaker_id.into(),
            name: name.into(),
            image_url: image_url.into(),
            location: location.into(),
            proof_of_ownership: proof_of_ownership.into(),
            nft_back_ref: None,
        }
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        if self.sneaker_id.is_empty() {
            return Err(RegistryError::InvalidMeta("empty sneakerId"));
        }
        Ok(())
    }

    pub fn canonical(&self) -> String {
        canonical_json(self)
    }
}

/// SHA-256 of the canonical serialization.
pub fn metadata_hash(meta: &SneakerMeta) -> Digest {
    sha256(meta.canonical())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NftRecord {
    pub id: NftId,
    pub owner: AccountId,
    /// Mint-time digest; never changes.
    pub metadata_hash: Digest,
    pub chain_id: String,
    pub non_tradable: bool,
    pub ownership_history: Vec<(AccountId, u64)>,
    /// Every metadata version, starting with the mint digest.
    pub metadata_versions: Vec<Digest>,
}

impl NftRecord {
    pub fn public_view(&self) -> PublicNft {
        PublicNft {
            id: self.id,
            owner: self.owner.clone(),
            metadata_hash: self.metadata_hash,
            chain_id: self.chain_id.clone(),
        }
    }

    pub fn latest_digest(&self) -> Digest {
        *self.metadata_versions.last().expect("at least the mint version")
    }
}

/// What anybody reading the chain can see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PublicNft {
    pub id: NftId,
    pub owner: AccountId,
    pub metadata_hash: Digest,
    pub chain_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRepository {
    entries: BTreeMap<Digest, SneakerMeta>,
    live: BTreeMap<String, Digest>,
}

impl MetadataRepository {
    fn store(&mut self, meta: SneakerMeta) -> Digest {
        let d = metadata_hash(&meta);
        self.live.insert(meta.sneaker_id.clone(), d);
        self.entries.insert(d, meta);
        d
    }

    pub fn get(&self, digest: &Digest) -> Option<&SneakerMeta> {
        self.entries.get(digest)
    }

    pub fn live_digest(&self, sneaker_id: &str) -> Option<Digest> {
        self.live.get(sneaker_id).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Digest, &SneakerMeta)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Shared-key oracle standing in for an off-chain location feed.
#[derive(Clone)]
pub struct Oracle {
    id: AccountId,
    key: Digest,
}

impl Oracle {
    pub fn new(id: AccountId, secret: &str) -> Self {
        Oracle {
            id,
            key: sha256(secret),
        }
    }

    pub fn id(&self) -> &AccountId {
        &self.id
    }

    pub fn attest(&self, nft_id: NftId, location: &str) -> OracleAttestation {
        OracleAttestation {
            oracle: self.id.clone(),
            nft_id,
            location: location.to_string(),
            tag: attestation_tag(&self.key, nft_id, location),
        }
    }
}

fn attestation_tag(key: &Digest, nft_id: NftId, location: &str) -> Digest {
    chain(key, canonical_json(&(nft_id, location)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleAttestation {
    pub oracle: AccountId,
    pub nft_id: NftId,
    pub location: String,
    pub tag: Digest,
}

/// Why an account other than the owner may resolve metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccessRole {
    EscrowBuyer(TradeId),
    DisputeCourt(DisputeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Authority {
    Owner(AccountId),
    Escrow(TradeId),
    Court(DisputeId),
}

/// Who is moving an NFT. Outside the crate only [`TransferAuthority::owner`]
/// can be built; escrow settlement and verdict execution are protocol
/// capabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferAuthority(Authority);

impl TransferAuthority {
    pub fn owner(caller: AccountId) -> Self {
        TransferAuthority(Authority::Owner(caller))
    }

    pub(crate) fn escrow(trade: TradeId) -> Self {
        TransferAuthority(Authority::Escrow(trade))
    }

    pub(crate) fn court(dispute: DisputeId) -> Self {
        TransferAuthority(Authority::Court(dispute))
    }

    pub fn label(&self) -> &'static str {
        match self.0 {
            Authority::Owner(_) => "owner",
            Authority::Escrow(_) => "escrow",
            Authority::Court(_) => "court",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    chain_id: String,
    #[serde(skip)]
    oracle_key: Option<(AccountId, Digest)>,
    records: Vec<NftRecord>,
    repository: MetadataRepository,
    grants: BTreeMap<NftId, Vec<(AccountId, AccessRole)>>,
    locks: BTreeMap<NftId, u64>,
}

impl Registry {
    pub fn new(chain_id: impl Into<String>) -> Self {
        Registry {
            chain_id: chain_id.into(),
            ..Default::default()
        }
    }

    pub fn with_oracle(mut self, oracle: &Oracle) -> Self {
        self.oracle_key = Some((oracle.id.clone(), oracle.key));
        self
    }

    pub fn chain_id(&self) -> &str {
        &self.chain_id
    }

    pub fn records(&self) -> &[NftRecord] {
        &self.records
    }

    pub fn repository(&self) -> &MetadataRepository {
        &self.repository
    }

    pub fn get(&self, id: NftId) -> Result<&NftRecord, RegistryError> {
        self.records.get(id as usize).ok_or(RegistryError::UnknownNft(id))
    }

    fn get_mut(&mut self, id: NftId) -> Result<&mut NftRecord, RegistryError> {
        self.records.get_mut(id as usize).ok_or(RegistryError::UnknownNft(id))
    }

    pub fn public_view(&self, id: NftId) -> Result<PublicNft, RegistryError> {
        self.get(id).map(NftRecord::public_view)
    }

    pub fn find_by_sneaker(&self, sneaker_id: &str) -> Option<&NftRecord> {
        let d = self.repository.live_digest(sneaker_id)?;
        let back = self.repository.get(&d)?.nft_back_ref?;
        self.records.get(back as usize)
    }

    pub fn mint_nft(
        &mut self,
        mut meta: SneakerMeta,
        owner: AccountId,
        auth: &AuthDecision,
        chain_id: &str,
        now: u64,
    ) -> Result<NftRecord, RegistryError> {
        meta.validate()?;
        if auth.sneaker_id() != meta.sneaker_id || auth.verdict() != AuthVerdict::Certified {
            return Err(RegistryError::NotCertified(meta.sneaker_id));
        }
        if self.repository.live_digest(&meta.sneaker_id).is_some() {
            return Err(RegistryError::DuplicateSneakerId(meta.sneaker_id));
        }
        if meta.nft_back_ref.is_some() {
            return Err(RegistryError::InvalidMeta("nftBackRef is assigned at mint"));
        }
        let id = self.records.len() as NftId;
        meta.nft_back_ref = Some(id);
        let digest = self.repository.store(meta);
        let record = NftRecord {
            id,
            owner: owner.clone(),
            metadata_hash: digest,
            chain_id: chain_id.to_string(),
            non_tradable: true,
            ownership_history: vec![(owner, now)],
            metadata_versions: vec![digest],
        };
        self.records.push(record.clone());
        Ok(record)
    }

    pub fn transfer_ownership(
        &mut self,
        nft_id: NftId,
        authority: &TransferAuthority,
        new_owner: AccountId,
        now: u64,
    ) -> Result<NftRecord, RegistryError> {
        let locked = self.locks.contains_key(&nft_id);
        let rec = self.get_mut(nft_id)?;
        if let Authority::Owner(caller) = &authority.0 {
            if *caller != rec.owner {
                return Err(RegistryError::NotOwner {
                    nft: nft_id,
                    caller: caller.clone(),
                });
            }
            if locked {
                return Err(RegistryError::Locked(nft_id));
            }
        }
        rec.owner = new_owner.clone();
        rec.ownership_history.push((new_owner, now));
        Ok(rec.clone())
    }

    pub fn resolve_metadata(
        &self,
        nft_id: NftId,
        digest: &Digest,
        requester: &AccountId,
    ) -> Result<SneakerMeta, RegistryError> {
        let rec = self.get(nft_id)?;
        if !self.is_authorized(nft_id, requester)? {
            return Err(RegistryError::Unauthorized);
        }
        if !rec.metadata_versions.contains(digest) {
            return Err(RegistryError::DigestMismatch);
        }
        self.repository
            .get(digest)
            .cloned()
            .ok_or(RegistryError::DigestMismatch)
    }

    pub fn is_authorized(&self, nft_id: NftId, who: &AccountId) -> Result<bool, RegistryError> {
        let rec = self.get(nft_id)?;
        Ok(rec.owner == *who
            || self
                .grants
                .get(&nft_id)
                .is_some_and(|g| g.iter().any(|(a, _)| a == who)))
    }

    pub fn update_location(
        &mut self,
        nft_id: NftId,
        attestation: &OracleAttestation,
        new_location: &str,
    ) -> Result<NftRecord, RegistryError> {
        let latest = self.get(nft_id)?.latest_digest();
        let (oracle_id, key) = self
            .oracle_key
            .as_ref()
            .ok_or(RegistryError::BadAttestation("no oracle configured"))?;
        if attestation.oracle != *oracle_id {
            return Err(RegistryError::BadAttestation("not the registry oracle"));
        }
        if attestation.nft_id != nft_id || attestation.location != new_location {
            return Err(RegistryError::BadAttestation("attests a different change"));
        }
        if attestation.tag != attestation_tag(key, nft_id, new_location) {
            return Err(RegistryError::BadAttestation("signature does not verify"));
        }
        let mut meta = self
            .repository
            .get(&latest)
            .cloned()
            .expect("versions are stored");
        meta.location = new_location.to_string();
        let digest = self.repository.store(meta);
        let rec = self.get_mut(nft_id)?;
        rec.metadata_versions.push(digest);
        Ok(rec.clone())
    }

    pub fn grant_access(&mut self, nft_id: NftId, who: AccountId, role: AccessRole) {
        let g = self.grants.entry(nft_id).or_default();
        if !g.iter().any(|(a, r)| *a == who && *r == role) {
            g.push((who, role));
        }
    }

    pub fn revoke_access(&mut self, nft_id: NftId, role: AccessRole) {
        if let Some(g) = self.grants.get_mut(&nft_id) {
            g.retain(|(_, r)| *r != role);
            if g.is_empty() {
                self.grants.remove(&nft_id);
            }
        }
    }

    pub(crate) fn lock(&mut self, nft_id: NftId, listing: u64) {
        self.locks.insert(nft_id, listing);
    }

    pub(crate) fn unlock(&mut self, nft_id: NftId) {
        self.locks.remove(&nft_id);
    }

    pub fn is_locked(&self, nft_id: NftId) -> bool {
        self.locks.contains_key(&nft_id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::AuthDecision;

    fn acct(s: &str) -> AccountId {
        AccountId::new(s).unwrap()
    }

    fn meta(id: &str) -> SneakerMeta {
        SneakerMeta::new(id, "Air Force 1 '07", "ipfs://img/af1", "warehouse-A", "cert-7781;photo-2291")
    }

    fn certified(id: &str) -> AuthDecision {
        AuthDecision::new(id, AuthVerdict::Certified, "live-photo-1", 0).unwrap()
    }

    fn minted() -> (Registry, NftRecord) {
        let mut r = Registry::new("sim-chain-1");
        let rec = r
            .mint_nft(meta("CT8532-104"), acct("seller"), &certified("CT8532-104"), "sim-chain-1", 0)
            .unwrap();
        (r, rec)
    }

    #[test]
    fn first_mint() {
        let (r, rec) = minted();
        assert_eq!(rec.id, 0);
        assert_eq!(rec.owner, acct("seller"));
        assert!(rec.non_tradable);
        assert_eq!(rec.ownership_history, vec![(acct("seller"), 0)]);
        assert_eq!(r.find_by_sneaker("CT8532-104").unwrap().id, 0);
    }

    #[test]
    fn double_mint_rejected() {
        let (mut r, _) = minted();
        let err = r
            .mint_nft(meta("CT8532-104"), acct("other"), &certified("CT8532-104"), "sim-chain-1", 1)
            .unwrap_err();
        assert_eq!(err, RegistryError::DuplicateSneakerId("CT8532-104".into()));
        assert_eq!(r.records().len(), 1);
    }

    #[test]
    fn rejected_or_mismatched_decision_cannot_mint() {
        let mut r = Registry::new("c");
        let rejected = AuthDecision::new("X1", AuthVerdict::Rejected, "p", 0).unwrap();
        assert_eq!(
            r.mint_nft(meta("X1"), acct("s"), &rejected, "c", 0),
            Err(RegistryError::NotCertified("X1".into()))
        );
        assert_eq!(
            r.mint_nft(meta("X1"), acct("s"), &certified("X2"), "c", 0),
            Err(RegistryError::NotCertified("X1".into()))
        );
    }

    #[test]
    fn owner_transfers() {
        let (mut r, _) = minted();
        let rec = r
            .transfer_ownership(0, &TransferAuthority::owner(acct("seller")), acct("bob"), 3)
            .unwrap();
        assert_eq!(rec.owner, acct("bob"));
        assert_eq!(rec.ownership_history, vec![(acct("seller"), 0), (acct("bob"), 3)]);
    }

    #[test]
    fn non_owner_cannot_transfer() {
        let (mut r, _) = minted();
        assert_eq!(
            r.transfer_ownership(0, &TransferAuthority::owner(acct("carol")), acct("carol"), 1),
            Err(RegistryError::NotOwner { nft: 0, caller: acct("carol") })
        );
        assert_eq!(
            r.transfer_ownership(9, &TransferAuthority::owner(acct("carol")), acct("carol"), 1),
            Err(RegistryError::UnknownNft(9))
        );
    }

    #[test]
    fn self_transfer_appends_history_once() {
        let (mut r, _) = minted();
        let rec = r
            .transfer_ownership(0, &TransferAuthority::owner(acct("seller")), acct("seller"), 2)
            .unwrap();
        assert_eq!(rec.owner, acct("seller"));
        assert_eq!(rec.ownership_history.len(), 2);
    }

    #[test]
    fn escrow_authority_bypasses_owner_and_lock() {
        let (mut r, _) = minted();
        r.lock(0, 0);
        assert_eq!(
            r.transfer_ownership(0, &TransferAuthority::owner(acct("seller")), acct("x"), 1),
            Err(RegistryError::Locked(0))
        );
        let rec = r.transfer_ownership(0, &TransferAuthority::escrow(4), acct("buyer"), 1).unwrap();
        assert_eq!(rec.owner, acct("buyer"));
    }

    #[test]
    fn hash_is_deterministic_and_sensitive() {
        let a = meta("S1");
        assert_eq!(metadata_hash(&a), metadata_hash(&a.clone()));
        let mut b = a.clone();
        b.location = "warehouse-B".into();
        assert_ne!(metadata_hash(&a), metadata_hash(&b));
    }

    #[test]
    fn stored_under_its_own_digest() {
        let (r, rec) = minted();
        let stored = r.repository().get(&rec.metadata_hash).unwrap();
        assert_eq!(metadata_hash(stored), rec.metadata_hash);
        assert_eq!(stored.nft_back_ref, Some(0));
    }

    #[test]
    fn resolve_rules() {
        let (mut r, rec) = minted();
        let got = r.resolve_metadata(0, &rec.metadata_hash, &acct("seller")).unwrap();
        assert_eq!(got.sneaker_id, "CT8532-104");
        assert_eq!(metadata_hash(&got), rec.metadata_hash);
        assert_eq!(
            r.resolve_metadata(0, &rec.metadata_hash, &acct("stranger")),
            Err(RegistryError::Unauthorized)
        );
        assert_eq!(
            r.resolve_metadata(0, &sha256("nope"), &acct("seller")),
            Err(RegistryError::DigestMismatch)
        );
        // Strangers learn nothing about digest validity either.
        assert_eq!(
            r.resolve_metadata(0, &sha256("nope"), &acct("stranger")),
            Err(RegistryError::Unauthorized)
        );
        r.grant_access(0, acct("buyer"), AccessRole::EscrowBuyer(1));
        assert!(r.resolve_metadata(0, &rec.metadata_hash, &acct("buyer")).is_ok());
        r.revoke_access(0, AccessRole::EscrowBuyer(1));
        assert_eq!(
            r.resolve_metadata(0, &rec.metadata_hash, &acct("buyer")),
            Err(RegistryError::Unauthorized)
        );
    }

    #[test]
    fn location_update_is_versioned() {
        let oracle = Oracle::new(acct("oracle"), "k");
        let (r, rec) = minted();
        let mut r = r.with_oracle(&oracle);
        let att = oracle.attest(0, "warehouse-B");
        let updated = r.update_location(0, &att, "warehouse-B").unwrap();
        assert_eq!(updated.metadata_versions.len(), 2);
        assert_eq!(updated.metadata_hash, rec.metadata_hash);
        assert_eq!(updated.owner, rec.owner);
        // Repository diff: the mint version is kept, a new live version exists.
        let old = r.repository().get(&updated.metadata_versions[0]).unwrap();
        let new = r.repository().get(&updated.metadata_versions[1]).unwrap();
        assert_eq!(old.location, "warehouse-A");
        assert_eq!(new.location, "warehouse-B");
        assert_eq!(new.sneaker_id, old.sneaker_id);
        assert_eq!(r.repository().len(), 2);
        assert_eq!(r.repository().live_digest("CT8532-104"), Some(updated.metadata_versions[1]));
        // Both versions resolve and hash-bind.
        for d in &updated.metadata_versions {
            let m = r.resolve_metadata(0, d, &acct("seller")).unwrap();
            assert_eq!(metadata_hash(&m), *d);
        }
    }

    #[test]
    fn unchanged_location_appends_equal_digest() {
        let oracle = Oracle::new(acct("oracle"), "k");
        let (r, _) = minted();
        let mut r = r.with_oracle(&oracle);
        let rec = r.update_location(0, &oracle.attest(0, "warehouse-A"), "warehouse-A").unwrap();
        assert_eq!(rec.metadata_versions.len(), 2);
        assert_eq!(rec.metadata_versions[0], rec.metadata_versions[1]);
    }

    #[test]
    fn bad_attestations() {
        let oracle = Oracle::new(acct("oracle"), "k");
        let impostor = Oracle::new(acct("mallory"), "k");
        let forged = Oracle::new(acct("oracle"), "wrong-key");
        let (r, _) = minted();
        let mut r = r.with_oracle(&oracle);
        for att in [impostor.attest(0, "B"), forged.attest(0, "B"), oracle.attest(0, "C")] {
            assert!(matches!(r.update_location(0, &att, "B"), Err(RegistryError::BadAttestation(_))));
        }
        assert_eq!(r.update_location(7, &oracle.attest(7, "B"), "B"), Err(RegistryError::UnknownNft(7)));
    }

    #[test]
    fn public_view_hides_sensitive_fields() {
        let (r, _) = minted();
        let json = serde_json::to_string(&r.public_view(0).unwrap()).unwrap();
        for secret in ["CT8532-104", "warehouse-A", "cert-7781"] {
            assert!(!json.contains(secret));
        }
    }

    #[test]
    fn dump_round_trip_keeps_grants() {
        let (mut r, _) = minted();
        r.grant_access(0, acct("court"), AccessRole::DisputeCourt(0));
        let back = Registry::from_json(&r.to_json()).unwrap();
        assert_eq!(back.records(), r.records());
        assert!(back.is_authorized(0, &acct("court")).unwrap());
    }
}
