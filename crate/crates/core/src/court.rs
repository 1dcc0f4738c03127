//! Stake-weighted jury court with sealed votes, majority verdicts,
//! coherence-based redistribution and appeals to larger juries.
//!
//! Jurors in the minority lose a fixed fraction of their bond; the pot is
//! split evenly among the majority and the integer remainder goes to the
//! refund pool. Redistribution only happens once the verdict is final, so an
//! appeal simply discards the previous round's plan.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{sha256, Digest};
use crate::journal::MarketEvent;
use crate::ledger::{AccountId, Holder, LedgerError, TokenKind, TradeId};
use crate::market::{Market, MarketError};
use crate::pool::FundingSource;
use crate::rational::{self, int, Rational};
use crate::registry::DisputeId;
use crate::verify::{AssetAuthenticator, KycProvider};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CourtError {
    #[error("stake {stake} is below the juror minimum {min}")]
    BelowMinimumStake { stake: u64, min: u64 },
    #[error("coherence must be a probability")]
    InvalidCoherence,
    #[error("jury size {0} is even")]
    EvenJurySize(usize),
    #[error("{have} eligible jurors, {need} needed")]
    PoolTooSmall { need: usize, have: usize },
    #[error("unknown dispute {0}")]
    UnknownDispute(DisputeId),
    #[error("{0} was not drawn for this round")]
    NotDrawn(AccountId),
    #[error("{0} already voted this round")]
    AlreadyVoted(AccountId),
    #[error("{0} drawn jurors have not voted")]
    VotesMissing(usize),
    #[error("dispute {dispute} is {status:?}")]
    WrongStatus { dispute: DisputeId, status: DisputeStatus },
    #[error("the appeal window has closed")]
    WindowClosed,
    #[error("maximum number of rounds reached")]
    MaxRoundsReached,
    #[error("only the losing party may appeal")]
    NotLosingParty,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    FavorsBuyer,
    FavorsSeller,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::FavorsBuyer => Side::FavorsSeller,
            Side::FavorsSeller => Side::FavorsBuyer,
        }
    }

    pub fn party(self) -> Party {
        match self {
            Side::FavorsBuyer => Party::Buyer,
            Side::FavorsSeller => Party::Seller,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Buyer,
    Seller,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Buyer => Party::Seller,
            Party::Seller => Party::Buyer,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Juror {
    pub account: AccountId,
    pub staked_lzs: u64,
    /// Simulation behavior: chance of voting with the evidence.
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidencePacket {
    pub claims: String,
    /// Hidden label used only by simulated jurors.
    pub ground_truth: Side,
    pub attachments: Vec<Digest>,
}

impl EvidencePacket {
    pub fn new(claims: impl Into<String>, ground_truth: Side) -> Self {
        EvidencePacket {
            claims: claims.into(),
            ground_truth,
            attachments: Vec::new(),
        }
    }

    pub fn citing(mut self, digest: Digest) -> Self {
        self.attachments.push(digest);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisputeStatus {
    Open,
    Voting,
    Decided,
    Appealed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub dispute_id: DisputeId,
    pub winner: Party,
    pub round: u32,
    /// (buyer votes, seller votes)
    pub tally: (u32, u32),
    pub is_final: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redistribution {
    pub slashes: Vec<(AccountId, u64)>,
    pub rewards: Vec<(AccountId, u64)>,
    pub remainder: u64,
}

impl Redistribution {
    pub fn slashed(&self) -> u64 {
        self.slashes.iter().map(|x| x.1).sum()
    }

    pub fn rewarded(&self) -> u64 {
        self.rewards.iter().map(|x| x.1).sum()
    }
}

/// Plans the coherence redistribution for one round of votes.
pub fn plan_redistribution(votes: &[(AccountId, u64, Side)], winner: Side, penalty: &Rational) -> Redistribution {
    let slashes: Vec<(AccountId, u64)> = votes
        .iter()
        .filter(|(_, _, s)| *s != winner)
        .map(|(a, bond, _)| (a.clone(), rational::floor_u64(&(int(*bond as i128) * penalty))))
        .filter(|(_, amt)| *amt > 0)
        .collect();
    let pot: u64 = slashes.iter().map(|x| x.1).sum();
    let majority: Vec<&AccountId> = votes.iter().filter(|(_, _, s)| *s == winner).map(|(a, _, _)| a).collect();
    let share = if majority.is_empty() { 0 } else { pot / majority.len() as u64 };
    let rewards = if share == 0 {
        Vec::new()
    } else {
        majority.into_iter().map(|a| (a.clone(), share)).collect()
    };
    let remainder = pot - rewards.iter().map(|x: &(AccountId, u64)| x.1).sum::<u64>();
    Redistribution {
        slashes,
        rewards,
        remainder,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub round: u32,
    pub seed: u64,
    pub jury: Vec<Juror>,
    #[serde(skip)]
    sealed: BTreeMap<AccountId, Side>,
    /// Votes in jury order, visible once the round is tallied.
    pub revealed: Vec<(AccountId, Side)>,
    pub verdict: Option<Verdict>,
    pub appeal_deadline: Option<u64>,
    pub appealed_by: Option<Party>,
}

impl Round {
    fn new(round: u32) -> Self {
        Round {
            round,
            seed: 0,
            jury: Vec::new(),
            sealed: BTreeMap::new(),
            revealed: Vec::new(),
            verdict: None,
            appeal_deadline: None,
            appealed_by: None,
        }
    }

    pub fn votes_cast(&self) -> usize {
        self.sealed.len().max(self.revealed.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispute {
    pub dispute_id: DisputeId,
    pub trade_id: TradeId,
    pub buyer: AccountId,
    pub seller: AccountId,
    pub opened_by: Party,
    pub opened_at: u64,
    pub evidence: EvidencePacket,
    pub rounds: Vec<Round>,
    pub status: DisputeStatus,
    pub final_verdict: Option<Verdict>,
    pub settlement: Option<Redistribution>,
}

impl Dispute {
    pub fn round(&self) -> u32 {
        self.rounds.len() as u32 - 1
    }

    pub fn current(&self) -> &Round {
        self.rounds.last().expect("disputes have a round")
    }

    fn current_mut(&mut self) -> &mut Round {
        self.rounds.last_mut().expect("disputes have a round")
    }

    /// The latest tallied verdict, final or not.
    pub fn verdict(&self) -> Option<&Verdict> {
        self.final_verdict.as_ref().or_else(|| self.rounds.iter().rev().find_map(|r| r.verdict.as_ref()))
    }

    pub fn jury(&self) -> &[Juror] {
        &self.current().jury
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Court {
    jurors: BTreeMap<AccountId, Juror>,
    disputes: Vec<Dispute>,
    #[serde(skip)]
    awaiting: BTreeSet<DisputeId>,
}

impl Court {
    pub fn jurors(&self) -> impl Iterator<Item = &Juror> {
        self.jurors.values()
    }

    pub fn juror(&self, a: &AccountId) -> Option<&Juror> {
        self.jurors.get(a)
    }

    pub fn bond_of(&self, a: &AccountId) -> u64 {
        self.jurors.get(a).map_or(0, |j| j.staked_lzs)
    }

    pub fn disputes(&self) -> &[Dispute] {
        &self.disputes
    }

    pub fn dispute(&self, id: DisputeId) -> Option<&Dispute> {
        self.disputes.get(id as usize)
    }

    fn dispute_mut(&mut self, id: DisputeId) -> Result<&mut Dispute, CourtError> {
        self.disputes.get_mut(id as usize).ok_or(CourtError::UnknownDispute(id))
    }

    pub fn has_undecided(&self) -> bool {
        !self.awaiting.is_empty() || self.disputes.iter().any(|d| d.final_verdict.is_none())
    }

    pub(crate) fn open(
        &mut self,
        trade_id: TradeId,
        buyer: AccountId,
        seller: AccountId,
        opened_by: Party,
        evidence: EvidencePacket,
        now: u64,
    ) -> DisputeId {
        let id = self.disputes.len() as DisputeId;
        self.disputes.push(Dispute {
            dispute_id: id,
            trade_id,
            buyer,
            seller,
            opened_by,
            opened_at: now,
            evidence,
            rounds: vec![Round::new(0)],
            status: DisputeStatus::Open,
            final_verdict: None,
            settlement: None,
        });
        id
    }

    /// Seed for a round: derived from the court seed for the first round and
    /// from the previous round's seed for appeals.
    pub fn round_seed(&self, court_seed: u64, id: DisputeId, round: u32) -> u64 {
        match self.dispute(id).filter(|_| round > 0) {
            Some(d) => derive_seed(&[d.rounds[round as usize - 1].seed, round as u64]),
            None => derive_seed(&[court_seed, id]),
        }
    }

    /// Persists the current round and its votes as a JSON transcript.
    pub fn transcript(&self) -> String {
        serde_json::to_string_pretty(&self.disputes).expect("disputes serialize")
    }
}

pub fn derive_seed(parts: &[u64]) -> u64 {
    let bytes: Vec<u8> = parts.iter().flat_map(|p| p.to_le_bytes()).collect();
    u64::from_le_bytes(sha256(bytes).0[..8].try_into().expect("8 bytes"))
}

/// Draws `size` distinct indices from `weights`, each pick proportional to
/// the remaining weight.
pub fn weighted_sample(weights: &[u64], size: usize, seed: u64) -> Result<Vec<usize>, CourtError> {
    if size.is_multiple_of(2) {
        return Err(CourtError::EvenJurySize(size));
    }
    let eligible = weights.iter().filter(|w| **w > 0).count();
    if eligible < size {
        return Err(CourtError::PoolTooSmall { need: size, have: eligible });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut left: Vec<u64> = weights.to_vec();
    let mut total: u128 = left.iter().map(|w| *w as u128).sum();
    let mut picked = Vec::with_capacity(size);
    for _ in 0..size {
        let mut r = rng.gen_range(0..total);
        let i = left
            .iter()
            .position(|w| {
                if r < *w as u128 {
                    true
                } else {
                    r -= *w as u128;
                    false
                }
            })
            .expect("r is below the remaining total");
        total -= left[i] as u128;
        left[i] = 0;
        picked.push(i);
    }
    Ok(picked)
}

/// Probability a majority of `n` independent jurors, each right with
/// probability `q`, reaches the right verdict.
pub fn honest_win_probability(n: u32, q: f64) -> f64 {
    let mut p = 0.0;
    let mut binom = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            binom = binom * (n - k + 1) as f64 / k as f64;
        }
        if 2 * k > n {
            p += binom * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32);
        }
    }
    p
}

/// A simulated juror: votes with the evidence with probability `coherence`.
pub fn simulated_vote<R: Rng>(rng: &mut R, ground_truth: Side, coherence: f64) -> Side {
    if rng.gen_bool(coherence) {
        ground_truth
    } else {
        ground_truth.opposite()
    }
}

impl<A: AssetAuthenticator, K: KycProvider> Market<A, K> {
    /// Bonds `stake` LZS into the juror pool, topping up an existing bond.
    pub fn register_juror(&mut self, account: &AccountId, stake: u64, coherence: f64) -> Result<Juror, CourtError> {
        if !(0.0..=1.0).contains(&coherence) {
            return Err(CourtError::InvalidCoherence);
        }
        let bond = self.court.bond_of(account) + stake;
        if bond < self.config.juror_min_stake || stake == 0 {
            return Err(CourtError::BelowMinimumStake {
                stake: bond,
                min: self.config.juror_min_stake,
            });
        }
        self.ledger.stake(self.now, account, stake)?;
        let j = Juror {
            account: account.clone(),
            staked_lzs: bond,
            coherence,
        };
        self.court.jurors.insert(account.clone(), j.clone());
        self.emit(MarketEvent::JurorRegistered {
            account: account.clone(),
            bond,
            coherence,
        });
        Ok(j)
    }

    /// Bonded jurors who could sit on a dispute between these parties.
    pub fn eligible_jurors(&self, buyer: &AccountId, seller: &AccountId) -> usize {
        let min = self.config.juror_min_stake;
        let court = &self.config.court_account;
        self.court
            .jurors
            .values()
            .filter(|j| j.staked_lzs >= min && j.account != *buyer && j.account != *seller && j.account != *court)
            .count()
    }

    /// Draws the jury for the dispute's open round.
    pub fn draw_jury(&mut self, dispute_id: DisputeId, size: usize, seed: u64) -> Result<Vec<Juror>, CourtError> {
        let min = self.config.juror_min_stake;
        let court_account = self.config.court_account.clone();
        let d = self.court.dispute(dispute_id).ok_or(CourtError::UnknownDispute(dispute_id))?;
        if !matches!(d.status, DisputeStatus::Open | DisputeStatus::Appealed) {
            return Err(CourtError::WrongStatus {
                dispute: dispute_id,
                status: d.status,
            });
        }
        let pool: Vec<&Juror> = self
            .court
            .jurors
            .values()
            .filter(|j| j.staked_lzs >= min && j.account != d.buyer && j.account != d.seller && j.account != court_account)
            .collect();
        let weights: Vec<u64> = pool.iter().map(|j| j.staked_lzs).collect();
        let jury: Vec<Juror> = weighted_sample(&weights, size, seed)?
            .into_iter()
            .map(|i| pool[i].clone())
            .collect();
        let d = self.court.dispute_mut(dispute_id)?;
        let round = d.round();
        let r = d.current_mut();
        r.seed = seed;
        r.jury = jury.clone();
        d.status = DisputeStatus::Voting;
        self.emit(MarketEvent::JuryDrawn {
            dispute_id,
            round,
            seed,
            jurors: jury.iter().map(|j| j.account.clone()).collect(),
        });
        Ok(jury)
    }

    /// Records a sealed vote.
    pub fn cast_vote(&mut self, dispute_id: DisputeId, juror: &AccountId, vote: Side) -> Result<(), CourtError> {
        let d = self.court.dispute_mut(dispute_id)?;
        if d.status != DisputeStatus::Voting {
            return Err(CourtError::WrongStatus {
                dispute: dispute_id,
                status: d.status,
            });
        }
        let round = d.round();
        let r = d.current_mut();
        if !r.jury.iter().any(|j| j.account == *juror) {
            return Err(CourtError::NotDrawn(juror.clone()));
        }
        if r.sealed.contains_key(juror) {
            return Err(CourtError::AlreadyVoted(juror.clone()));
        }
        r.sealed.insert(juror.clone(), vote);
        self.emit(MarketEvent::VoteCast {
            dispute_id,
            round,
            juror: juror.clone(),
        });
        Ok(())
    }

    /// Opens the sealed votes and declares the majority; the verdict then
    /// waits out the appeal window.
    pub fn tally(&mut self, dispute_id: DisputeId) -> Result<Verdict, CourtError> {
        let deadline = self.now + self.config.appeal_window;
        let d = self.court.dispute_mut(dispute_id)?;
        if d.status != DisputeStatus::Voting {
            return Err(CourtError::WrongStatus {
                dispute: dispute_id,
                status: d.status,
            });
        }
        let round = d.round();
        let r = d.current_mut();
        let missing = r.jury.len() - r.sealed.len();
        if missing > 0 {
            return Err(CourtError::VotesMissing(missing));
        }
        r.revealed = r.jury.iter().map(|j| (j.account.clone(), r.sealed[&j.account])).collect();
        r.sealed.clear();
        let buyer_votes = r.revealed.iter().filter(|(_, s)| *s == Side::FavorsBuyer).count() as u32;
        let seller_votes = r.revealed.len() as u32 - buyer_votes;
        let winner = if buyer_votes > seller_votes { Party::Buyer } else { Party::Seller };
        let v = Verdict {
            dispute_id,
            winner,
            round,
            tally: (buyer_votes, seller_votes),
            is_final: false,
        };
        r.verdict = Some(v.clone());
        r.appeal_deadline = Some(deadline);
        d.status = DisputeStatus::Decided;
        self.court.awaiting.insert(dispute_id);
        self.emit(MarketEvent::VerdictReached {
            dispute_id,
            round,
            winner,
            buyer_votes,
            seller_votes,
            appeal_deadline: deadline,
        });
        Ok(v)
    }

    /// Redistribution the current round would trigger if it became final.
    pub fn pending_redistribution(&self, dispute_id: DisputeId) -> Option<Redistribution> {
        let d = self.court.dispute(dispute_id)?;
        let r = d.current();
        let v = r.verdict.as_ref()?;
        let votes: Vec<_> = r
            .revealed
            .iter()
            .map(|(a, s)| (a.clone(), self.court.bond_of(a), *s))
            .collect();
        let winner = match v.winner {
            Party::Buyer => Side::FavorsBuyer,
            Party::Seller => Side::FavorsSeller,
        };
        Some(plan_redistribution(&votes, winner, &self.config.juror_penalty_fraction))
    }

    /// The losing party asks for a fresh, larger jury.
    pub fn appeal(&mut self, dispute_id: DisputeId, appellant: &AccountId) -> Result<Dispute, CourtError> {
        let now = self.now;
        let max_rounds = self.config.max_rounds;
        let d = self.court.dispute(dispute_id).ok_or(CourtError::UnknownDispute(dispute_id))?;
        if d.status != DisputeStatus::Decided || d.final_verdict.is_some() {
            return Err(if d.final_verdict.is_some() {
                CourtError::WindowClosed
            } else {
                CourtError::WrongStatus {
                    dispute: dispute_id,
                    status: d.status,
                }
            });
        }
        let r = d.current();
        let v = r.verdict.as_ref().expect("decided rounds have a verdict");
        let loser = match v.winner.other() {
            Party::Buyer => &d.buyer,
            Party::Seller => &d.seller,
        };
        if appellant != loser {
            return Err(CourtError::NotLosingParty);
        }
        if r.appeal_deadline.is_some_and(|dl| now > dl) {
            return Err(CourtError::WindowClosed);
        }
        if d.round() + 1 >= max_rounds {
            return Err(CourtError::MaxRoundsReached);
        }
        let by = v.winner.other();
        let size = 2 * r.jury.len() + 1;
        let have = self.eligible_jurors(&d.buyer, &d.seller);
        if have < size {
            return Err(CourtError::PoolTooSmall { need: size, have });
        }
        let next = d.round() + 1;
        let seed = self.court.round_seed(self.config.court_seed, dispute_id, next);
        let d = self.court.dispute_mut(dispute_id)?;
        d.current_mut().appealed_by = Some(by);
        d.rounds.push(Round::new(next));
        d.status = DisputeStatus::Appealed;
        self.court.awaiting.remove(&dispute_id);
        self.emit(MarketEvent::Appealed {
            dispute_id,
            by,
            round: next,
            jury_size: size,
        });
        self.draw_jury(dispute_id, size, seed)?;
        Ok(self.court.dispute(dispute_id).expect("exists").clone())
    }

    pub(crate) fn process_court_deadlines(&mut self) -> Result<(), MarketError> {
        let now = self.now;
        let due: Vec<DisputeId> = self
            .court
            .awaiting
            .iter()
            .copied()
            .filter(|id| {
                self.court.disputes[*id as usize]
                    .current()
                    .appeal_deadline
                    .is_some_and(|dl| now > dl)
            })
            .collect();
        for id in due {
            self.finalize_dispute(id)?;
        }
        Ok(())
    }

    /// Settles jurors for the last round and executes the verdict.
    fn finalize_dispute(&mut self, dispute_id: DisputeId) -> Result<(), MarketError> {
        let now = self.now;
        let plan = self.pending_redistribution(dispute_id).expect("awaiting disputes are decided");
        for (juror, amount) in &plan.slashes {
            let amount = (*amount).min(self.court.bond_of(juror));
            if amount == 0 {
                continue;
            }
            self.ledger.slash(now, juror, Holder::Pool, amount)?;
            if let Some(j) = self.court.jurors.get_mut(juror) {
                j.staked_lzs -= amount;
            }
        }
        for (juror, amount) in &plan.rewards {
            self.ledger
                .transfer(now, Holder::Pool, Holder::Account(juror.clone()), TokenKind::LZS, *amount)?;
        }
        self.emit(MarketEvent::JurorsSettled {
            dispute_id,
            slashed: plan.slashed(),
            rewarded: plan.rewarded(),
            remainder: plan.remainder,
        });
        if plan.remainder > 0 {
            self.pool_inflow(FundingSource::JurorRemainder(dispute_id), plan.remainder)?;
        }
        self.court.awaiting.remove(&dispute_id);
        let d = self.court.dispute_mut(dispute_id)?;
        let mut v = d.current().verdict.clone().expect("decided");
        v.is_final = true;
        d.final_verdict = Some(v.clone());
        d.settlement = Some(plan);
        let trade_id = d.trade_id;
        self.emit(MarketEvent::VerdictFinalized {
            dispute_id,
            winner: v.winner,
            round: v.round,
        });
        self.resolve_trade(trade_id, dispute_id, v.winner)?;
        Ok(())
    }

    pub fn verdict(&self, dispute_id: DisputeId) -> Option<&Verdict> {
        self.court.dispute(dispute_id)?.verdict()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc(s: &str) -> AccountId {
        AccountId::new(s).unwrap()
    }

    /// Independent oracle: enumerate all 2^n vote patterns.
    fn brute_force_majority(n: u32, q: f64) -> f64 {
        (0u32..1 << n)
            .filter(|m| 2 * m.count_ones() > n)
            .map(|m| q.powi(m.count_ones() as i32) * (1.0 - q).powi((n - m.count_ones()) as i32))
            .sum()
    }

    #[test]
    fn majority_probability_matches_enumeration() {
        for n in [1, 3, 5, 7, 11] {
            for q in [0.5, 0.7, 0.9, 0.99] {
                assert!((honest_win_probability(n, q) - brute_force_majority(n, q)).abs() < 1e-12);
            }
        }
        assert!((brute_force_majority(5, 0.9) - 0.99144).abs() < 1e-9);
    }

    #[test]
    fn redistribution_example() {
        let votes: Vec<_> = (0..5)
            .map(|i| (acc(&format!("j{i}")), 100, if i < 3 { Side::FavorsBuyer } else { Side::FavorsSeller }))
            .collect();
        let p = plan_redistribution(&votes, Side::FavorsBuyer, &crate::rational::ratio(1, 10));
        assert_eq!(p.slashes, vec![(acc("j3"), 10), (acc("j4"), 10)]);
        assert_eq!(p.rewards.iter().map(|r| r.1).collect::<Vec<_>>(), vec![6, 6, 6]);
        assert_eq!(p.remainder, 2);
        assert_eq!(p.slashed(), p.rewarded() + p.remainder);
    }

    #[test]
    fn unanimous_moves_nothing() {
        let votes: Vec<_> = (0..5).map(|i| (acc(&format!("j{i}")), 100, Side::FavorsSeller)).collect();
        let p = plan_redistribution(&votes, Side::FavorsSeller, &crate::rational::ratio(1, 10));
        assert_eq!(p, Redistribution::default());
    }

    #[test]
    fn sample_basics() {
        assert_eq!(weighted_sample(&[5, 5, 5], 4, 1), Err(CourtError::EvenJurySize(4)));
        let mut all = weighted_sample(&[5, 5, 5], 3, 1).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2]);
        assert_eq!(weighted_sample(&[5, 0, 5], 3, 1), Err(CourtError::PoolTooSmall { need: 3, have: 2 }));
        assert_eq!(weighted_sample(&[3, 9, 4, 1], 3, 77), weighted_sample(&[3, 9, 4, 1], 3, 77));
    }

    #[test]
    fn stake_weighted_frequency() {
        let n = 10_000;
        let hits = (0..n).filter(|s| weighted_sample(&[90, 10], 1, *s).unwrap()[0] == 0).count();
        let f = hits as f64 / n as f64;
        assert!((f - 0.9).abs() < 0.01, "{f}");
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(derive_seed(&[1, 2]), derive_seed(&[1, 2]));
        assert_ne!(derive_seed(&[1, 2]), derive_seed(&[2, 1]));
    }
}
