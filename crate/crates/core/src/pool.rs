//! Collective refund pool that reimburses the winner of a dispute up to the
//! loss the trade record proves.
//!
//! Inflows: protocol fees, direct contributions, forfeited seller stakes not
//! awarded to a buyer, and juror redistribution remainders. When the pool is
//! short, a claim is paid partially and the remainder is settled first-in
//! first-out from later inflows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::escrow::FlowReason;
use crate::journal::MarketEvent;
use crate::ledger::{AccountId, Holder, LedgerError, LedgerEvent, TokenKind, TradeId};
use crate::market::Market;
use crate::registry::DisputeId;
use crate::court::Verdict;
use crate::verify::{AssetAuthenticator, KycProvider};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PoolError {
    #[error("verdict is not final")]
    VerdictNotFinal,
    #[error("claimant did not win the dispute")]
    NotWinner,
    #[error("claimed loss {claimed} exceeds the provable loss {provable}")]
    LossOverstated { claimed: u64, provable: u64 },
    #[error("claimed loss must be positive")]
    ZeroLoss,
    #[error("dispute {0} already has a claim")]
    AlreadyClaimed(DisputeId),
    #[error("unknown dispute {0}")]
    UnknownDispute(DisputeId),
    #[error("unknown claim {0}")]
    UnknownClaim(u64),
    #[error("claim {0} was already paid")]
    AlreadyPaid(u64),
    #[error("claim {0} was rejected")]
    Rejected(u64),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FundingSource {
    ProtocolFee(TradeId),
    Contribution(AccountId),
    StakeForfeit(TradeId),
    JurorRemainder(DisputeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funding {
    pub at: u64,
    pub source: FundingSource,
    pub amount: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimStatus {
    Filed,
    Paid,
    RejectedClaim,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: u64,
    pub dispute_id: DisputeId,
    pub trade_id: TradeId,
    pub claimant: AccountId,
    pub loss_lzs: u64,
    pub status: ClaimStatus,
    pub paid: u64,
    pub remainder: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payout {
    pub at: u64,
    pub claim_id: u64,
    pub amount: u64,
    pub remainder_payment: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reimbursement {
    pub claim_id: u64,
    pub paid: u64,
    pub remainder: u64,
    pub ledger_seq: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RefundPool {
    funding: Vec<Funding>,
    claims: Vec<Claim>,
    payouts: Vec<Payout>,
}

impl RefundPool {
    pub fn funding(&self) -> &[Funding] {
        &self.funding
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    pub fn claim(&self, id: u64) -> Option<&Claim> {
        self.claims.get(id as usize)
    }

    pub fn payouts(&self) -> &[Payout] {
        &self.payouts
    }

    pub fn outstanding(&self) -> u64 {
        self.claims.iter().map(|c| c.remainder).sum()
    }

    pub fn paid_for_dispute(&self, d: DisputeId) -> u64 {
        self.claims.iter().filter(|c| c.dispute_id == d).map(|c| c.paid).sum()
    }
}

#[derive(Serialize)]
struct Statement<'a> {
    balance: u64,
    outstanding: u64,
    funding: &'a [Funding],
    claims: &'a [Claim],
    payouts: &'a [Payout],
}

impl<A: AssetAuthenticator, K: KycProvider> Market<A, K> {
    /// Records pool income and settles outstanding remainders from it.
    pub(crate) fn pool_inflow(&mut self, source: FundingSource, amount: u64) -> Result<(), LedgerError> {
        self.pool.funding.push(Funding {
            at: self.now,
            source: source.clone(),
            amount,
        });
        self.emit(MarketEvent::PoolFunded { source, amount });
        self.settle_remainders()
    }

    fn settle_remainders(&mut self) -> Result<(), LedgerError> {
        let now = self.now;
        for i in 0..self.pool.claims.len() {
            let balance = self.ledger.pool_balance();
            if balance == 0 {
                break;
            }
            let c = &self.pool.claims[i];
            if c.remainder == 0 {
                continue;
            }
            let amount = c.remainder.min(balance);
            let claimant = c.claimant.clone();
            let trade_id = c.trade_id;
            self.ledger
                .transfer(now, Holder::Pool, Holder::Account(claimant.clone()), TokenKind::LZS, amount)?;
            let c = &mut self.pool.claims[i];
            c.remainder -= amount;
            c.paid += amount;
            let (claim_id, outstanding) = (c.claim_id, c.remainder);
            self.pool.payouts.push(Payout {
                at: now,
                claim_id,
                amount,
                remainder_payment: true,
            });
            self.escrow.record_flow(trade_id, claimant, amount as i128, FlowReason::ClaimPayout, now);
            self.emit(MarketEvent::RemainderPaid {
                claim_id,
                amount,
                outstanding,
            });
        }
        Ok(())
    }

    /// Direct contribution from an account.
    pub fn fund_pool(&mut self, source: &AccountId, amount: u64) -> Result<LedgerEvent, PoolError> {
        let seq = self
            .ledger
            .transfer(self.now, Holder::Account(source.clone()), Holder::Pool, TokenKind::LZS, amount)?;
        self.pool_inflow(FundingSource::Contribution(source.clone()), amount)?;
        Ok(self.ledger.events()[seq as usize].clone())
    }

    pub fn pool_balance(&self) -> u64 {
        self.ledger.pool_balance()
    }

    /// Loss the trade record proves for `who`: how far their value position
    /// falls short of a clean completion. Never negative.
    pub fn provable_loss(&self, trade_id: TradeId, who: &AccountId) -> u64 {
        self.escrow.trade(trade_id).map_or(0, |t| {
            let gap = t.counterfactual(who) - t.value_position(who);
            gap.clamp(0, u64::MAX as i128) as u64
        })
    }

    pub fn file_claim(&mut self, verdict: &Verdict, claimant: &AccountId, loss_lzs: u64) -> Result<Claim, PoolError> {
        let d = self
            .court
            .dispute(verdict.dispute_id)
            .ok_or(PoolError::UnknownDispute(verdict.dispute_id))?;
        let final_v = d.final_verdict.as_ref().ok_or(PoolError::VerdictNotFinal)?;
        if !verdict.is_final || final_v != verdict {
            return Err(PoolError::VerdictNotFinal);
        }
        let winner = match final_v.winner {
            crate::court::Party::Buyer => &d.buyer,
            crate::court::Party::Seller => &d.seller,
        };
        if claimant != winner {
            return Err(PoolError::NotWinner);
        }
        if loss_lzs == 0 {
            return Err(PoolError::ZeroLoss);
        }
        let dispute_id = d.dispute_id;
        let trade_id = d.trade_id;
        if self
            .pool
            .claims
            .iter()
            .any(|c| c.dispute_id == dispute_id && c.status != ClaimStatus::RejectedClaim)
        {
            return Err(PoolError::AlreadyClaimed(dispute_id));
        }
        let provable = self.provable_loss(trade_id, claimant);
        let status = if loss_lzs > provable {
            ClaimStatus::RejectedClaim
        } else {
            ClaimStatus::Filed
        };
        let claim = Claim {
            claim_id: self.pool.claims.len() as u64,
            dispute_id,
            trade_id,
            claimant: claimant.clone(),
            loss_lzs,
            status,
            paid: 0,
            remainder: 0,
        };
        self.pool.claims.push(claim.clone());
        self.emit(MarketEvent::ClaimFiled {
            claim_id: claim.claim_id,
            dispute_id,
            claimant: claimant.clone(),
            loss: loss_lzs,
            status,
        });
        if status == ClaimStatus::RejectedClaim {
            return Err(PoolError::LossOverstated {
                claimed: loss_lzs,
                provable,
            });
        }
        Ok(claim)
    }

    /// Pays what the pool can now and records the shortfall.
    pub fn pay_claim(&mut self, claim_id: u64) -> Result<Reimbursement, PoolError> {
        let now = self.now;
        let c = self.pool.claims.get(claim_id as usize).ok_or(PoolError::UnknownClaim(claim_id))?;
        match c.status {
            ClaimStatus::Filed => {}
            ClaimStatus::Paid => return Err(PoolError::AlreadyPaid(claim_id)),
            ClaimStatus::RejectedClaim => return Err(PoolError::Rejected(claim_id)),
        }
        let paid = c.loss_lzs.min(self.ledger.pool_balance());
        let remainder = c.loss_lzs - paid;
        let claimant = c.claimant.clone();
        let trade_id = c.trade_id;
        let ledger_seq = if paid > 0 {
            Some(
                self.ledger
                    .transfer(now, Holder::Pool, Holder::Account(claimant.clone()), TokenKind::LZS, paid)?,
            )
        } else {
            None
        };
        let c = &mut self.pool.claims[claim_id as usize];
        c.status = ClaimStatus::Paid;
        c.paid = paid;
        c.remainder = remainder;
        self.pool.payouts.push(Payout {
            at: now,
            claim_id,
            amount: paid,
            remainder_payment: false,
        });
        if paid > 0 {
            self.escrow.record_flow(trade_id, claimant, paid as i128, FlowReason::ClaimPayout, now);
        }
        self.emit(MarketEvent::ClaimPaid {
            claim_id,
            paid,
            remainder,
        });
        Ok(Reimbursement {
            claim_id,
            paid,
            remainder,
            ledger_seq,
        })
    }

    /// Pool statement as JSON: funding, claims, payouts and remainders.
    pub fn pool_statement(&self) -> String {
        serde_json::to_string_pretty(&Statement {
            balance: self.ledger.pool_balance(),
            outstanding: self.pool.outstanding(),
            funding: &self.pool.funding,
            claims: &self.pool.claims,
            payouts: &self.pool.payouts,
        })
        .expect("statement serializes")
    }
}
