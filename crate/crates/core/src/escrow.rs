//! Listings and the per-trade escrow state machine.
//!
//! ```text
//! Funded ──ship──▶ Shipped ──receipt / auto──▶ Completed ──window closes──▶ (final)
//!   │  │              │                           │
//!   │  └─timeout─▶ TimedOut                       │
//!   ├─cancel──▶ Cancelled                        │
//!   └──────────────┴────────dispute──────────────┴──▶ Disputed ──verdict──▶ Resolved
//! ```
//!
//! Deadlines are inclusive: an action at exactly the deadline tick is on time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::court::{CourtError, Dispute, EvidencePacket, Party};
use crate::incentive::{QualifyingAction, Strategy, StrategyProfile};
use crate::journal::MarketEvent;
use crate::ledger::{AccountId, Holder, LedgerError, TokenKind, TradeId};
use crate::market::{Market, MarketError};
use crate::pool::FundingSource;
use crate::rational::{self, int};
use crate::registry::{AccessRole, DisputeId, NftId, RegistryError, TransferAuthority};
use crate::verify::{AssetAuthenticator, KycProvider, KycState};

pub type ListingId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EscrowError {
    #[error("{0} has not passed KYC")]
    NotKycPassed(AccountId),
    #[error("seller stake {have} is below the minimum {need}")]
    InsufficientStake { have: u64, need: u64 },
    #[error("{0} does not own the NFT")]
    NotNftOwner(AccountId),
    #[error("NFT {0} is already listed or in a trade")]
    AlreadyListed(NftId),
    #[error("price must be positive")]
    InvalidPrice,
    #[error("unknown listing {0}")]
    UnknownListing(ListingId),
    #[error("listing {0} is closed")]
    ListingClosed(ListingId),
    #[error("seller cannot buy their own listing")]
    SelfTrade,
    #[error("needs {needed} LZS, has {available}")]
    InsufficientFunds { available: u64, needed: u64 },
    #[error("unknown trade {0}")]
    UnknownTrade(TradeId),
    #[error("caller is not the seller")]
    NotSeller,
    #[error("caller is not the buyer")]
    NotBuyer,
    #[error("caller is not a party to the trade")]
    NotParty,
    #[error("trade {trade} is {state}")]
    WrongState { trade: TradeId, state: TradeState },
    #[error("deadline {deadline} passed (now {now})")]
    DeadlinePassed { deadline: u64, now: u64 },
    #[error("no cancellation was requested")]
    NoCancelRequest,
    #[error("evidence cites a digest the registry does not hold for this NFT")]
    UnverifiedAttachment,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Court(#[from] CourtError),
}

impl From<MarketError> for EscrowError {
    fn from(e: MarketError) -> Self {
        match e {
            MarketError::Ledger(e) => EscrowError::Ledger(e),
            MarketError::Registry(e) => EscrowError::Registry(e),
            MarketError::Escrow(e) => e,
            MarketError::Court(e) => EscrowError::Court(e),
            other => unreachable!("escrow settlement raised {other}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Listing {
    pub listing_id: ListingId,
    pub seller: AccountId,
    pub nft_id: NftId,
    pub price_lzs: u64,
    pub chain_id: String,
    pub created_at: u64,
    pub open: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TradeState {
    Funded,
    Shipped,
    Completed,
    Disputed,
    Resolved,
    TimedOut,
    Cancelled,
}

impl TradeState {
    /// The declared transition graph.
    pub fn can_move_to(self, to: TradeState) -> bool {
        use TradeState::*;
        matches!(
            (self, to),
            (Funded, Shipped | Disputed | TimedOut | Cancelled)
                | (Shipped, Completed | Disputed)
                | (Completed, Disputed)
                | (Disputed, Resolved)
        )
    }
}

impl fmt::Display for TradeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    CleanCompletion,
    BuyerCompensated,
    SellerCompensated,
    MutualFraud,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeOutcome {
    pub trade_id: TradeId,
    pub buyer_strategy: Strategy,
    pub seller_strategy: Strategy,
    pub resolution: Resolution,
}

impl TradeOutcome {
    pub fn new(trade_id: TradeId, resolution: Resolution) -> Self {
        let p = resolution.profile();
        TradeOutcome {
            trade_id,
            buyer_strategy: p.buyer,
            seller_strategy: p.seller,
            resolution,
        }
    }

    pub fn profile(&self) -> StrategyProfile {
        StrategyProfile::new(self.buyer_strategy, self.seller_strategy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowReason {
    EscrowLock,
    EscrowPayout,
    EscrowRefund,
    NftIn,
    NftOut,
    ClaimPayout,
}

/// One change to a party's LZS-value position caused by a trade. NFTs count
/// at the trade price; stake awards and LZSP are incentives and not listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueFlow {
    pub account: AccountId,
    pub amount: i128,
    pub reason: FlowReason,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub at: u64,
    pub from: Option<TradeState>,
    pub to: TradeState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeEscrow {
    pub trade_id: TradeId,
    pub listing_id: ListingId,
    pub nft_id: NftId,
    pub seller: AccountId,
    pub buyer: AccountId,
    pub price_lzs: u64,
    pub state: TradeState,
    pub amount_locked: u64,
    pub funded_at: u64,
    pub ship_deadline: u64,
    pub receipt_deadline: Option<u64>,
    pub tracking_info: Option<String>,
    pub completed_at: Option<u64>,
    pub challenge_deadline: Option<u64>,
    pub fee: u64,
    pub cancel_requested: bool,
    pub dispute: Option<DisputeId>,
    pub disputed_from: Option<TradeState>,
    pub outcome: Option<TradeOutcome>,
    pub actions: Vec<(AccountId, QualifyingAction)>,
    pub flows: Vec<ValueFlow>,
    pub history: Vec<Transition>,
    pub challenge_closed: bool,
}

impl TradeEscrow {
    pub fn actions_of(&self, who: &AccountId) -> Vec<QualifyingAction> {
        self.actions.iter().filter(|(a, _)| a == who).map(|(_, q)| *q).collect()
    }

    pub fn party_of(&self, who: &AccountId) -> Option<Party> {
        if *who == self.buyer {
            Some(Party::Buyer)
        } else if *who == self.seller {
            Some(Party::Seller)
        } else {
            None
        }
    }

    pub fn account_of(&self, party: Party) -> &AccountId {
        match party {
            Party::Buyer => &self.buyer,
            Party::Seller => &self.seller,
        }
    }

    /// Net LZS-value change for `who` from this trade.
    pub fn value_position(&self, who: &AccountId) -> i128 {
        self.flows.iter().filter(|f| f.account == *who).map(|f| f.amount).sum()
    }

    /// Position the party would hold had the trade completed cleanly.
    pub fn counterfactual(&self, who: &AccountId) -> i128 {
        if *who == self.seller {
            -(self.fee as i128)
        } else {
            0
        }
    }

    pub fn is_terminal(&self) -> bool {
        match self.state {
            TradeState::Resolved | TradeState::TimedOut | TradeState::Cancelled => true,
            TradeState::Completed => self.challenge_closed,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EscrowBook {
    listings: Vec<Listing>,
    trades: Vec<TradeEscrow>,
    #[serde(skip)]
    active: BTreeSet<TradeId>,
    #[serde(skip)]
    pending: BTreeMap<TradeId, u64>,
    #[serde(skip)]
    due: BTreeSet<(u64, TradeId)>,
}

impl EscrowBook {
    pub fn listing(&self, id: ListingId) -> Option<&Listing> {
        self.listings.get(id as usize)
    }

    pub fn listings(&self) -> &[Listing] {
        &self.listings
    }

    pub fn trade(&self, id: TradeId) -> Option<&TradeEscrow> {
        self.trades.get(id as usize)
    }

    pub fn trades(&self) -> &[TradeEscrow] {
        &self.trades
    }

    pub fn open_listings(&self) -> impl Iterator<Item = &Listing> {
        self.listings.iter().filter(|l| l.open)
    }

    /// Trades with something still to happen on the clock.
    pub fn active(&self) -> impl Iterator<Item = TradeId> + '_ {
        self.active.iter().copied()
    }

    pub fn has_pending_payoff(&self, id: TradeId) -> bool {
        self.pending.contains_key(&id)
    }

    pub fn is_quiescent(&self) -> bool {
        self.active.is_empty() && self.pending.is_empty()
    }

    pub(crate) fn clear_pending(&mut self, id: TradeId) {
        if let Some(due) = self.pending.remove(&id) {
            self.due.remove(&(due, id));
        }
    }

    fn schedule(&mut self, id: TradeId, due: u64) {
        self.clear_pending(id);
        self.pending.insert(id, due);
        self.due.insert((due, id));
    }

    pub(crate) fn record_flow(&mut self, id: TradeId, account: AccountId, amount: i128, reason: FlowReason, at: u64) {
        if let Some(t) = self.trades.get_mut(id as usize) {
            t.flow(account, amount, reason, at);
        }
    }

    fn get_mut(&mut self, id: TradeId) -> Result<&mut TradeEscrow, EscrowError> {
        self.trades.get_mut(id as usize).ok_or(EscrowError::UnknownTrade(id))
    }
}

impl TradeEscrow {
    fn move_to(&mut self, to: TradeState, at: u64) -> Result<(), EscrowError> {
        if !self.state.can_move_to(to) {
            return Err(EscrowError::WrongState {
                trade: self.trade_id,
                state: self.state,
            });
        }
        self.history.push(Transition {
            at,
            from: Some(self.state),
            to,
        });
        self.state = to;
        Ok(())
    }

    fn flow(&mut self, account: AccountId, amount: i128, reason: FlowReason, at: u64) {
        self.flows.push(ValueFlow {
            account,
            amount,
            reason,
            at,
        });
    }
}

impl<A: AssetAuthenticator, K: KycProvider> Market<A, K> {
    pub fn trade(&self, id: TradeId) -> Result<&TradeEscrow, EscrowError> {
        self.escrow.trade(id).ok_or(EscrowError::UnknownTrade(id))
    }

    pub fn create_listing(&mut self, seller: &AccountId, nft_id: NftId, price_lzs: u64) -> Result<Listing, EscrowError> {
        if price_lzs == 0 {
            return Err(EscrowError::InvalidPrice);
        }
        if self.kyc.kyc_check(seller).status != KycState::Passed {
            return Err(EscrowError::NotKycPassed(seller.clone()));
        }
        let have = self.seller_stake(seller);
        if have < self.config.min_seller_stake {
            return Err(EscrowError::InsufficientStake {
                have,
                need: self.config.min_seller_stake,
            });
        }
        let rec = self.registry.get(nft_id)?;
        if rec.owner != *seller {
            return Err(EscrowError::NotNftOwner(seller.clone()));
        }
        if self.registry.is_locked(nft_id) {
            return Err(EscrowError::AlreadyListed(nft_id));
        }
        let listing = Listing {
            listing_id: self.escrow.listings.len() as ListingId,
            seller: seller.clone(),
            nft_id,
            price_lzs,
            chain_id: rec.chain_id.clone(),
            created_at: self.now,
            open: true,
        };
        self.registry.lock(nft_id, listing.listing_id);
        self.escrow.listings.push(listing.clone());
        self.emit(MarketEvent::ListingCreated {
            listing_id: listing.listing_id,
            seller: seller.clone(),
            nft_id,
            price: price_lzs,
        });
        Ok(listing)
    }

    pub fn place_order(&mut self, listing_id: ListingId, buyer: &AccountId) -> Result<TradeEscrow, EscrowError> {
        let listing = self
            .escrow
            .listing(listing_id)
            .ok_or(EscrowError::UnknownListing(listing_id))?
            .clone();
        if !listing.open {
            return Err(EscrowError::ListingClosed(listing_id));
        }
        if listing.seller == *buyer {
            return Err(EscrowError::SelfTrade);
        }
        let available = self.ledger.balance_of(buyer, TokenKind::LZS);
        if available < listing.price_lzs {
            return Err(EscrowError::InsufficientFunds {
                available,
                needed: listing.price_lzs,
            });
        }
        let now = self.now;
        let trade_id = self.escrow.trades.len() as TradeId;
        self.ledger.escrow_lock(now, buyer, trade_id, listing.price_lzs)?;
        let mut trade = TradeEscrow {
            trade_id,
            listing_id,
            nft_id: listing.nft_id,
            seller: listing.seller.clone(),
            buyer: buyer.clone(),
            price_lzs: listing.price_lzs,
            state: TradeState::Funded,
            amount_locked: listing.price_lzs,
            funded_at: now,
            ship_deadline: now + self.config.shipping_window,
            receipt_deadline: None,
            tracking_info: None,
            completed_at: None,
            challenge_deadline: None,
            fee: rational::floor_u64(&(int(listing.price_lzs as i128) * self.config.protocol_fee_rate)),
            cancel_requested: false,
            dispute: None,
            disputed_from: None,
            outcome: None,
            actions: Vec::new(),
            flows: Vec::new(),
            history: vec![Transition {
                at: now,
                from: None,
                to: TradeState::Funded,
            }],
            challenge_closed: false,
        };
        trade.flow(buyer.clone(), -(listing.price_lzs as i128), FlowReason::EscrowLock, now);
        self.escrow.listings[listing_id as usize].open = false;
        self.registry.grant_access(listing.nft_id, buyer.clone(), AccessRole::EscrowBuyer(trade_id));
        self.escrow.trades.push(trade.clone());
        self.escrow.active.insert(trade_id);
        self.emit(MarketEvent::OrderPlaced {
            trade_id,
            listing_id,
            buyer: buyer.clone(),
            seller: listing.seller,
            nft_id: listing.nft_id,
            price: listing.price_lzs,
            ship_deadline: trade.ship_deadline,
        });
        Ok(trade)
    }

    fn record_action(&mut self, trade_id: TradeId, who: &AccountId, action: QualifyingAction) {
        if let Some(t) = self.escrow.trades.get_mut(trade_id as usize) {
            t.actions.push((who.clone(), action));
        }
        self.emit(MarketEvent::ActionRecorded {
            trade_id,
            account: who.clone(),
            action,
        });
    }

    pub fn confirm_shipment(&mut self, trade_id: TradeId, caller: &AccountId, tracking: &str) -> Result<TradeEscrow, EscrowError> {
        let now = self.now;
        let receipt_window = self.config.receipt_window;
        let t = self.escrow.get_mut(trade_id)?;
        if t.seller != *caller {
            return Err(EscrowError::NotSeller);
        }
        if t.state != TradeState::Funded {
            return Err(EscrowError::WrongState {
                trade: trade_id,
                state: t.state,
            });
        }
        if now > t.ship_deadline {
            return Err(EscrowError::DeadlinePassed {
                deadline: t.ship_deadline,
                now,
            });
        }
        t.move_to(TradeState::Shipped, now)?;
        t.receipt_deadline = Some(now + receipt_window);
        t.tracking_info = (!tracking.is_empty()).then(|| tracking.to_string());
        let receipt_deadline = now + receipt_window;
        let seller = t.seller.clone();
        self.emit(MarketEvent::ShipmentConfirmed {
            trade_id,
            receipt_deadline,
        });
        self.record_action(trade_id, &seller, QualifyingAction::ShipmentOnTime);
        if !tracking.is_empty() {
            self.record_action(trade_id, &seller, QualifyingAction::TrackingProvided);
        }
        Ok(self.escrow.trades[trade_id as usize].clone())
    }

    pub fn confirm_receipt(&mut self, trade_id: TradeId, caller: &AccountId) -> Result<TradeOutcome, EscrowError> {
        let t = self.trade(trade_id)?;
        if t.buyer != *caller {
            return Err(EscrowError::NotBuyer);
        }
        if t.state != TradeState::Shipped {
            return Err(EscrowError::WrongState {
                trade: trade_id,
                state: t.state,
            });
        }
        self.record_action(trade_id, caller, QualifyingAction::ReceiptConfirmed);
        self.complete(trade_id, false)
    }

    /// Pays the seller (less the protocol fee), hands the NFT to the buyer and
    /// opens the challenge window. The clean-completion payoffs wait until
    /// the window closes.
    fn complete(&mut self, trade_id: TradeId, auto: bool) -> Result<TradeOutcome, EscrowError> {
        let now = self.now;
        let t = self.trade(trade_id)?.clone();
        let fee = t.fee.min(t.amount_locked);
        let payout = t.amount_locked - fee;
        if fee > 0 {
            self.ledger.escrow_release(now, trade_id, Holder::Pool, fee)?;
        }
        if payout > 0 {
            self.ledger.escrow_release(now, trade_id, Holder::Account(t.seller.clone()), payout)?;
        }
        self.move_nft(t.nft_id, &TransferAuthority::escrow(trade_id), &t.buyer)?;
        self.registry.revoke_access(t.nft_id, AccessRole::EscrowBuyer(trade_id));
        let challenge_deadline = now + self.config.challenge_window;
        let outcome = TradeOutcome::new(trade_id, Resolution::CleanCompletion);
        {
            let tm = self.escrow.get_mut(trade_id)?;
            tm.move_to(TradeState::Completed, now)?;
            tm.amount_locked = 0;
            tm.completed_at = Some(now);
            tm.challenge_deadline = Some(challenge_deadline);
            tm.fee = fee;
            tm.outcome = Some(outcome);
            tm.flow(t.seller.clone(), payout as i128, FlowReason::EscrowPayout, now);
            tm.flow(t.seller.clone(), -(t.price_lzs as i128), FlowReason::NftOut, now);
            tm.flow(t.buyer.clone(), t.price_lzs as i128, FlowReason::NftIn, now);
        }
        self.escrow.schedule(trade_id, challenge_deadline + 1);
        self.emit(MarketEvent::TradeCompleted { trade_id, fee, auto });
        if fee > 0 {
            self.pool_inflow(FundingSource::ProtocolFee(trade_id), fee)?;
        }
        Ok(outcome)
    }

    /// Buyer asks to cancel a funded trade. Inside the unilateral window (if
    /// configured) the cancellation takes effect at once; otherwise it waits
    /// for the seller's approval.
    pub fn request_cancel(&mut self, trade_id: TradeId, caller: &AccountId) -> Result<TradeEscrow, EscrowError> {
        let now = self.now;
        let window = self.config.unilateral_cancel_window;
        let t = self.escrow.get_mut(trade_id)?;
        if t.buyer != *caller {
            return Err(EscrowError::NotBuyer);
        }
        if t.state != TradeState::Funded {
            return Err(EscrowError::WrongState {
                trade: trade_id,
                state: t.state,
            });
        }
        if window.is_some_and(|w| now <= t.funded_at + w) {
            return self.cancel(trade_id);
        }
        t.cancel_requested = true;
        self.emit(MarketEvent::CancelRequested { trade_id });
        Ok(self.escrow.trades[trade_id as usize].clone())
    }

    pub fn approve_cancel(&mut self, trade_id: TradeId, caller: &AccountId) -> Result<TradeEscrow, EscrowError> {
        let t = self.trade(trade_id)?;
        if t.seller != *caller {
            return Err(EscrowError::NotSeller);
        }
        if t.state != TradeState::Funded {
            return Err(EscrowError::WrongState {
                trade: trade_id,
                state: t.state,
            });
        }
        if !t.cancel_requested {
            return Err(EscrowError::NoCancelRequest);
        }
        self.cancel(trade_id)
    }

    fn cancel(&mut self, trade_id: TradeId) -> Result<TradeEscrow, EscrowError> {
        let now = self.now;
        self.refund_buyer(trade_id)?;
        let t = self.escrow.get_mut(trade_id)?;
        t.move_to(TradeState::Cancelled, now)?;
        let nft = t.nft_id;
        self.registry.unlock(nft);
        self.escrow.active.remove(&trade_id);
        self.emit(MarketEvent::TradeCancelled { trade_id });
        Ok(self.escrow.trades[trade_id as usize].clone())
    }

    fn refund_buyer(&mut self, trade_id: TradeId) -> Result<(), EscrowError> {
        let now = self.now;
        let t = self.trade(trade_id)?.clone();
        if t.amount_locked > 0 {
            self.ledger.escrow_refund(now, trade_id, &t.buyer, t.amount_locked)?;
        }
        self.registry.revoke_access(t.nft_id, AccessRole::EscrowBuyer(trade_id));
        let tm = self.escrow.get_mut(trade_id)?;
        tm.flow(t.buyer.clone(), t.amount_locked as i128, FlowReason::EscrowRefund, now);
        tm.amount_locked = 0;
        Ok(())
    }

    /// Refunds a funded trade whose shipping deadline has passed. The seller
    /// is treated as dishonest.
    pub fn apply_timeout(&mut self, trade_id: TradeId) -> Result<Option<TradeOutcome>, EscrowError> {
        let now = self.now;
        let t = self.trade(trade_id)?;
        if t.state != TradeState::Funded || now <= t.ship_deadline {
            return Ok(None);
        }
        self.refund_buyer(trade_id)?;
        let outcome = TradeOutcome::new(trade_id, Resolution::BuyerCompensated);
        let t = self.escrow.get_mut(trade_id)?;
        t.move_to(TradeState::TimedOut, now)?;
        t.outcome = Some(outcome);
        let nft = t.nft_id;
        self.registry.unlock(nft);
        self.escrow.active.remove(&trade_id);
        self.escrow.schedule(trade_id, now);
        self.emit(MarketEvent::TradeTimedOut { trade_id });
        Ok(Some(outcome))
    }

    /// Opens a dispute on a live trade, or on a completed one inside its
    /// challenge window, freezes the escrow and draws the first jury.
    pub fn raise_dispute(&mut self, trade_id: TradeId, party: &AccountId, evidence: EvidencePacket) -> Result<Dispute, EscrowError> {
        let now = self.now;
        let t = self.trade(trade_id)?.clone();
        let opened_by = t.party_of(party).ok_or(EscrowError::NotParty)?;
        let in_window = t.state == TradeState::Completed
            && !t.challenge_closed
            && t.challenge_deadline.is_some_and(|d| now <= d)
            && !self.incentives.is_applied(trade_id);
        if !(matches!(t.state, TradeState::Funded | TradeState::Shipped) || in_window) {
            return Err(EscrowError::WrongState {
                trade: trade_id,
                state: t.state,
            });
        }
        let versions = &self.registry.get(t.nft_id)?.metadata_versions;
        if !evidence.attachments.iter().all(|d| versions.contains(d)) {
            return Err(EscrowError::UnverifiedAttachment);
        }
        let have = self.eligible_jurors(&t.buyer, &t.seller);
        if have < self.config.jury_size {
            return Err(CourtError::PoolTooSmall {
                need: self.config.jury_size,
                have,
            }
            .into());
        }
        let after_completion = t.state == TradeState::Completed;
        let truth = evidence.ground_truth;
        let dispute_id = self.court.open(trade_id, t.buyer.clone(), t.seller.clone(), opened_by, evidence, now);
        {
            let tm = self.escrow.get_mut(trade_id)?;
            tm.disputed_from = Some(tm.state);
            tm.move_to(TradeState::Disputed, now)?;
            tm.dispute = Some(dispute_id);
        }
        self.escrow.clear_pending(trade_id);
        self.escrow.active.remove(&trade_id);
        let court = self.config.court_account.clone();
        self.registry.grant_access(t.nft_id, court, AccessRole::DisputeCourt(dispute_id));
        self.emit(MarketEvent::DisputeOpened {
            dispute_id,
            trade_id,
            opened_by,
            after_completion,
            ground_truth: truth,
        });
        let seed = self.court.round_seed(self.config.court_seed, dispute_id, 0);
        let size = self.config.jury_size;
        self.draw_jury(dispute_id, size, seed)?;
        Ok(self.court.dispute(dispute_id).expect("just opened").clone())
    }

    /// Executes a final verdict on the trade's funds and NFT.
    pub(crate) fn resolve_trade(&mut self, trade_id: TradeId, dispute_id: DisputeId, winner: Party) -> Result<TradeOutcome, MarketError> {
        let now = self.now;
        let t = self.trade(trade_id)?.clone();
        let from = t.disputed_from.expect("disputed trades record their origin");
        let court = TransferAuthority::court(dispute_id);
        match (from, winner) {
            (TradeState::Funded | TradeState::Shipped, Party::Buyer) => {
                self.refund_buyer(trade_id)?;
                self.registry.unlock(t.nft_id);
            }
            (TradeState::Funded | TradeState::Shipped, Party::Seller) => {
                let fee = t.fee.min(t.amount_locked);
                let payout = t.amount_locked - fee;
                if fee > 0 {
                    self.ledger.escrow_release(now, trade_id, Holder::Pool, fee)?;
                }
                if payout > 0 {
                    self.ledger.escrow_release(now, trade_id, Holder::Account(t.seller.clone()), payout)?;
                }
                self.registry.unlock(t.nft_id);
                self.move_nft(t.nft_id, &court, &t.buyer)?;
                self.registry.revoke_access(t.nft_id, AccessRole::EscrowBuyer(trade_id));
                let tm = self.escrow.get_mut(trade_id)?;
                tm.amount_locked = 0;
                tm.flow(t.seller.clone(), payout as i128, FlowReason::EscrowPayout, now);
                tm.flow(t.seller.clone(), -(t.price_lzs as i128), FlowReason::NftOut, now);
                tm.flow(t.buyer.clone(), t.price_lzs as i128, FlowReason::NftIn, now);
                if fee > 0 {
                    self.pool_inflow(FundingSource::ProtocolFee(trade_id), fee)?;
                }
            }
            (_, Party::Buyer) => {
                self.registry.unlock(t.nft_id);
                self.move_nft(t.nft_id, &court, &t.seller)?;
                let tm = self.escrow.get_mut(trade_id)?;
                tm.flow(t.buyer.clone(), -(t.price_lzs as i128), FlowReason::NftOut, now);
                tm.flow(t.seller.clone(), t.price_lzs as i128, FlowReason::NftIn, now);
            }
            (_, Party::Seller) => {
                self.registry.unlock(t.nft_id);
            }
        }
        let resolution = match winner {
            Party::Buyer => Resolution::BuyerCompensated,
            Party::Seller => Resolution::SellerCompensated,
        };
        let outcome = TradeOutcome::new(trade_id, resolution);
        let tm = self.escrow.get_mut(trade_id)?;
        tm.move_to(TradeState::Resolved, now)?;
        tm.outcome = Some(outcome);
        self.registry
            .revoke_access(t.nft_id, AccessRole::DisputeCourt(dispute_id));
        self.escrow.schedule(trade_id, now);
        self.emit(MarketEvent::TradeResolved {
            trade_id,
            dispute_id,
            resolution,
        });
        Ok(outcome)
    }

    pub(crate) fn process_trade_deadlines(&mut self) -> Result<(), MarketError> {
        let now = self.now;
        let active: Vec<TradeId> = self.escrow.active.iter().copied().collect();
        for id in active {
            let t = &self.escrow.trades[id as usize];
            match t.state {
                TradeState::Funded if now > t.ship_deadline => {
                    self.apply_timeout(id)?;
                }
                TradeState::Shipped if t.receipt_deadline.is_some_and(|d| now > d) => {
                    self.complete(id, true)?;
                }
                TradeState::Completed if t.challenge_deadline.is_some_and(|d| now > d) => {
                    let nft = t.nft_id;
                    self.escrow.trades[id as usize].challenge_closed = true;
                    self.registry.unlock(nft);
                    self.escrow.active.remove(&id);
                    self.emit(MarketEvent::ChallengeClosed { trade_id: id });
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub(crate) fn process_pending_payoffs(&mut self) -> Result<(), MarketError> {
        let now = self.now;
        let due: Vec<(u64, TradeId)> = self.escrow.due.range(..=(now, TradeId::MAX)).copied().collect();
        for (at, id) in due {
            self.escrow.due.remove(&(at, id));
            self.escrow.pending.remove(&id);
            if !self.config.auto_payoffs || self.incentives.is_applied(id) {
                continue;
            }
            let outcome = self.escrow.trades[id as usize].outcome.expect("scheduled trades have an outcome");
            self.apply_payoffs(&outcome)?;
        }
        Ok(())
    }
}
