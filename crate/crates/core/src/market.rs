//! The single-writer market: ledger, registry, escrow, incentives, court and
//! refund pool behind one logical owner and one logical clock.
//!
//! Operations live next to their module (`escrow.rs`, `court.rs`, ...);
//! this file holds the shared state, configuration and the clock.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::court::{Court, CourtError};
use crate::escrow::{EscrowBook, EscrowError};
use crate::hash::sha256;
use crate::incentive::{ActionWeights, IncentiveBook, IncentiveError, UtilityParams};
use crate::journal::{Journal, MarketEvent};
use crate::ledger::{AccountId, Ledger, LedgerError};
use crate::pool::{PoolError, RefundPool};
use crate::rational::{int, ratio, Rational};
use crate::registry::{NftId, NftRecord, Oracle, OracleAttestation, Registry, RegistryError, SneakerMeta};
use crate::verify::{AssetAuthenticator, AuthDecision, KycProvider, SimulatedAuthenticator, StaticKyc, VerifyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarketError {
    #[error("invalid market config: {0}")]
    InvalidConfig(String),
    #[error("clock cannot move backwards from {now} to {to}")]
    ClockBackwards { now: u64, to: u64 },
    #[error("authentication decision does not match the one on record")]
    ForeignDecision,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Escrow(#[from] EscrowError),
    #[error(transparent)]
    Incentive(#[from] IncentiveError),
    #[error(transparent)]
    Court(#[from] CourtError),
    #[error(transparent)]
    Pool(#[from] PoolError),
}

#[derive(Debug, Clone)]
pub struct MarketConfig {
    pub chain_id: String,
    pub min_seller_stake: u64,
    pub juror_min_stake: u64,
    pub shipping_window: u64,
    pub receipt_window: u64,
    pub challenge_window: u64,
    pub appeal_window: u64,
    /// Buyer may cancel alone this many ticks after funding; `None` means
    /// cancellation always needs the seller's consent.
    pub unilateral_cancel_window: Option<u64>,
    pub jury_size: usize,
    pub max_rounds: u32,
    pub protocol_fee_rate: Rational,
    pub juror_penalty_fraction: Rational,
    pub utility: UtilityParams,
    pub action_weights: ActionWeights,
    pub court_account: AccountId,
    pub court_seed: u64,
    /// Apply payoffs automatically when a trade's outcome becomes final.
    pub auto_payoffs: bool,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig {
            chain_id: "sim-chain-1".into(),
            min_seller_stake: 50,
            juror_min_stake: 10,
            shipping_window: 5,
            receipt_window: 5,
            challenge_window: 30,
            appeal_window: 3,
            unilateral_cancel_window: None,
            jury_size: 5,
            max_rounds: 3,
            protocol_fee_rate: ratio(1, 100),
            juror_penalty_fraction: ratio(1, 10),
            utility: UtilityParams::default(),
            action_weights: ActionWeights::default(),
            court_account: AccountId::new("court").expect("valid id"),
            court_seed: 0,
            auto_payoffs: true,
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<(), MarketError> {
        let bad = |m: &str| Err(MarketError::InvalidConfig(m.to_string()));
        if self.jury_size.is_multiple_of(2) {
            return bad("jury size must be odd");
        }
        if self.max_rounds == 0 {
            return bad("at least one court round is required");
        }
        let unit = Rational::zero()..=int(1);
        if !unit.contains(&self.protocol_fee_rate) || !unit.contains(&self.juror_penalty_fraction) {
            return bad("fee rate and penalty fraction must lie in [0, 1]");
        }
        crate::incentive::PayoffMatrix::new(&self.utility)
            .map(|_| ())
            .map_err(|e| MarketError::InvalidConfig(e.to_string()))
    }
}

pub type SimMarket = Market<SimulatedAuthenticator, StaticKyc>;

pub struct Market<A = SimulatedAuthenticator, K = StaticKyc> {
    pub(crate) config: MarketConfig,
    pub(crate) now: u64,
    pub(crate) ledger: Ledger,
    pub(crate) registry: Registry,
    pub(crate) authenticator: A,
    pub(crate) kyc: K,
    pub(crate) auth_decisions: BTreeMap<String, AuthDecision>,
    pub(crate) escrow: EscrowBook,
    pub(crate) incentives: IncentiveBook,
    pub(crate) court: Court,
    pub(crate) pool: RefundPool,
    pub(crate) journal: Journal,
}

impl<A: AssetAuthenticator, K: KycProvider> Market<A, K> {
    pub fn new(config: MarketConfig, authenticator: A, kyc: K) -> Result<Self, MarketError> {
        config.validate()?;
        Ok(Market {
            registry: Registry::new(config.chain_id.clone()),
            config,
            now: 0,
            ledger: Ledger::new(),
            authenticator,
            kyc,
            auth_decisions: BTreeMap::new(),
            escrow: EscrowBook::default(),
            incentives: IncentiveBook::default(),
            court: Court::default(),
            pool: RefundPool::default(),
            journal: Journal::default(),
        })
    }

    pub fn with_oracle(mut self, oracle: &Oracle) -> Self {
        self.registry = self.registry.with_oracle(oracle);
        self
    }

    pub fn config(&self) -> &MarketConfig {
        &self.config
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn escrow(&self) -> &EscrowBook {
        &self.escrow
    }

    pub fn court(&self) -> &Court {
        &self.court
    }

    pub fn pool(&self) -> &RefundPool {
        &self.pool
    }

    pub fn incentives(&self) -> &IncentiveBook {
        &self.incentives
    }

    pub fn journal(&self) -> &Journal {
        &self.journal
    }

    pub fn authenticator(&self) -> &A {
        &self.authenticator
    }

    pub fn authenticator_mut(&mut self) -> &mut A {
        &mut self.authenticator
    }

    pub fn kyc_mut(&mut self) -> &mut K {
        &mut self.kyc
    }

    pub(crate) fn emit(&mut self, event: MarketEvent) {
        self.journal.push(self.now, self.ledger.next_seq(), event);
    }

    /// Moves the clock without running any deadline processing.
    pub fn set_clock(&mut self, t: u64) -> Result<(), MarketError> {
        if t < self.now {
            return Err(MarketError::ClockBackwards { now: self.now, to: t });
        }
        self.now = t;
        Ok(())
    }

    /// Moves the clock and runs everything that is due: shipping timeouts,
    /// receipt auto-completion, challenge-window closure, verdict
    /// finalization and payoff application. Seals the log block.
    pub fn tick(&mut self, t: u64) -> Result<(), MarketError> {
        self.set_clock(t)?;
        self.process_deadlines()?;
        self.journal.seal(self.now, self.ledger.next_seq());
        Ok(())
    }

    pub fn mint_lzs(&mut self, to: &AccountId, amount: u64) -> Result<u64, MarketError> {
        Ok(self.ledger.mint(self.now, to, crate::ledger::TokenKind::LZS, amount)?)
    }

    pub fn stake(&mut self, account: &AccountId, amount: u64) -> Result<u64, MarketError> {
        Ok(self.ledger.stake(self.now, account, amount)?)
    }

    /// Staked LZS not bonded to the court.
    pub fn seller_stake(&self, account: &AccountId) -> u64 {
        self.ledger.staked_of(account).saturating_sub(self.court.bond_of(account))
    }

    pub fn kyc_check(&self, account: &AccountId) -> crate::verify::KycStatus {
        self.kyc.kyc_check(account)
    }

    /// Authenticates once per sneaker; later calls return the recorded
    /// decision, which never changes.
    pub fn authenticate_asset(&mut self, meta: &SneakerMeta, evidence_ref: &str) -> Result<AuthDecision, MarketError> {
        if let Some(d) = self.auth_decisions.get(&meta.sneaker_id) {
            return Ok(d.clone());
        }
        let d = self.authenticator.authenticate(meta, evidence_ref, self.now)?;
        self.auth_decisions.insert(meta.sneaker_id.clone(), d.clone());
        self.emit(MarketEvent::AuthIssued {
            sneaker_tag: sneaker_tag(&meta.sneaker_id),
            verdict: d.verdict(),
        });
        Ok(d)
    }

    pub fn auth_decision(&self, sneaker_id: &str) -> Option<&AuthDecision> {
        self.auth_decisions.get(sneaker_id)
    }

    pub fn mint_nft(&mut self, meta: SneakerMeta, owner: &AccountId, auth: &AuthDecision) -> Result<NftRecord, MarketError> {
        match self.auth_decisions.get(&meta.sneaker_id) {
            Some(d) if d == auth => {}
            Some(_) => return Err(MarketError::ForeignDecision),
            None => return Err(RegistryError::NotCertified(meta.sneaker_id).into()),
        }
        let tag = sneaker_tag(&meta.sneaker_id);
        let chain_id = self.config.chain_id.clone();
        let rec = self.registry.mint_nft(meta, owner.clone(), auth, &chain_id, self.now)?;
        self.emit(MarketEvent::NftMinted {
            nft_id: rec.id,
            owner: owner.clone(),
            metadata_hash: rec.metadata_hash,
            sneaker_tag: tag,
        });
        Ok(rec)
    }

    /// Owner-initiated transfer outside any trade.
    pub fn transfer_nft(&mut self, nft_id: NftId, caller: &AccountId, new_owner: &AccountId) -> Result<NftRecord, MarketError> {
        let auth = crate::registry::TransferAuthority::owner(caller.clone());
        self.move_nft(nft_id, &auth, new_owner)
    }

    pub(crate) fn move_nft(
        &mut self,
        nft_id: NftId,
        auth: &crate::registry::TransferAuthority,
        new_owner: &AccountId,
    ) -> Result<NftRecord, MarketError> {
        let from = self.registry.get(nft_id)?.owner.clone();
        let rec = self.registry.transfer_ownership(nft_id, auth, new_owner.clone(), self.now)?;
        self.emit(MarketEvent::NftTransferred {
            nft_id,
            from,
            to: new_owner.clone(),
            authority: auth.label().to_string(),
        });
        Ok(rec)
    }

    pub fn update_location(&mut self, nft_id: NftId, att: &OracleAttestation, new_location: &str) -> Result<NftRecord, MarketError> {
        let rec = self.registry.update_location(nft_id, att, new_location)?;
        self.emit(MarketEvent::LocationUpdated {
            nft_id,
            metadata_hash: rec.latest_digest(),
        });
        Ok(rec)
    }

    pub(crate) fn process_deadlines(&mut self) -> Result<(), MarketError> {
        self.process_trade_deadlines()?;
        self.process_court_deadlines()?;
        self.process_pending_payoffs()?;
        Ok(())
    }
}

/// Non-reversible tag for a sneaker id, safe to put in the public log.
pub fn sneaker_tag(sneaker_id: &str) -> String {
    sha256(sneaker_id).short_hex()
}
