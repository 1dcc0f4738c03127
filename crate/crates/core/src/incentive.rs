//! The buyer/seller honesty game and its settlement.
//!
//! [`payoff_cell`] encodes the symbolic payoff matrix: each player gets a value
//! outcome, an LZSP outcome, a stake outcome and (in some cells) a reputation
//! change. [`utility`] maps those symbols to exact rationals so equilibria can
//! be checked, and [`Market::apply_payoffs`] realizes the LZSP, stake and
//! reputation parts of a cell on the ledger.
//!
//! The LZSP reward for a transaction of value φ is
//!
//! ```text
//! η = φ · (1 − α′/ι′),   1 ≤ α′ ≤ 100,  ι′ ≥ α′
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::escrow::{Resolution, TradeOutcome, TradeState};
use crate::journal::MarketEvent;
use crate::ledger::{AccountId, Holder, LedgerError, LedgerEvent, TokenKind, TradeId};
use crate::market::Market;
use crate::rational::{self, int, ratio, Rational};
use crate::verify::{AssetAuthenticator, KycProvider};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IncentiveError {
    #[error("alpha' = {0} is outside [1, 100]")]
    AlphaOutOfRange(u32),
    #[error("iota' = {iota} is below alpha' = {alpha}")]
    IotaTooSmall { alpha: u32, iota: u32 },
    #[error("payoffs for trade {0} were already applied")]
    AlreadyApplied(TradeId),
    #[error("trade {0} is not in a terminal state")]
    NotTerminal(TradeId),
    #[error("unknown trade {0}")]
    UnknownTrade(TradeId),
    #[error("invalid utility parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "s1")]
    Honest,
    #[serde(rename = "s2")]
    Dishonest,
}

impl Strategy {
    pub const BOTH: [Strategy; 2] = [Strategy::Honest, Strategy::Dishonest];

    pub fn other(self) -> Strategy {
        match self {
            Strategy::Honest => Strategy::Dishonest,
            Strategy::Dishonest => Strategy::Honest,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Honest => "s1",
            Strategy::Dishonest => "s2",
        })
    }
}

/// Buyer is player one, seller player two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub buyer: Strategy,
    pub seller: Strategy,
}

impl StrategyProfile {
    pub fn new(buyer: Strategy, seller: Strategy) -> Self {
        StrategyProfile { buyer, seller }
    }

    pub fn all() -> [StrategyProfile; 4] {
        use Strategy::*;
        [
            Self::new(Honest, Honest),
            Self::new(Honest, Dishonest),
            Self::new(Dishonest, Honest),
            Self::new(Dishonest, Dishonest),
        ]
    }
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.buyer, self.seller)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueTerm {
    Gain,
    Loss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LzspTerm {
    Gain,
    LossOrNonGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StakeTerm {
    /// Seller keeps the stake, with returns.
    KeptWithReturns,
    /// Seller forfeits the stake.
    Forfeited,
    /// Buyer does not receive the seller's stake.
    NoGainOfCounterpartyStake,
    /// Buyer receives the seller's stake.
    GainOfCounterpartyStake,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReputationTerm {
    Positive,
    Negative,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicPayoff {
    pub value: ValueTerm,
    pub lzsp: LzspTerm,
    pub stake: StakeTerm,
    pub reputation: ReputationTerm,
}

impl SymbolicPayoff {
    pub const fn new(value: ValueTerm, lzsp: LzspTerm, stake: StakeTerm, reputation: ReputationTerm) -> Self {
        SymbolicPayoff {
            value,
            lzsp,
            stake,
            reputation,
        }
    }
}

impl fmt::Display for SymbolicPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.value {
            ValueTerm::Gain => "vo1",
            ValueTerm::Loss => "vo2",
        };
        let l = match self.lzsp {
            LzspTerm::Gain => "LZSP1",
            LzspTerm::LossOrNonGain => "LZSP2",
        };
        let s = match self.stake {
            StakeTerm::KeptWithReturns => ", S1",
            StakeTerm::Forfeited => ", S2",
            StakeTerm::NoGainOfCounterpartyStake => ", S3",
            StakeTerm::GainOfCounterpartyStake => ", S4",
            StakeTerm::None => "",
        };
        let r = match self.reputation {
            ReputationTerm::Positive => ", R1",
            ReputationTerm::Negative => ", R2",
            ReputationTerm::None => "",
        };
        write!(f, "{v}, {l}{s}{r}")
    }
}

/// The symbolic (buyer, seller) payoffs for a strategy profile.
pub fn payoff_cell(profile: StrategyProfile) -> (SymbolicPayoff, SymbolicPayoff) {
    use LzspTerm as L;
    use ReputationTerm as R;
    use StakeTerm as S;
    use Strategy::*;
    use ValueTerm as V;
    let p = SymbolicPayoff::new;
    match (profile.buyer, profile.seller) {
        (Honest, Honest) => (
            p(V::Gain, L::Gain, S::NoGainOfCounterpartyStake, R::Positive),
            p(V::Gain, L::Gain, S::KeptWithReturns, R::Positive),
        ),
        (Honest, Dishonest) => (
            p(V::Gain, L::LossOrNonGain, S::GainOfCounterpartyStake, R::None),
            p(V::Loss, L::LossOrNonGain, S::Forfeited, R::Negative),
        ),
        (Dishonest, Honest) => (
            p(V::Loss, L::LossOrNonGain, S::NoGainOfCounterpartyStake, R::Negative),
            p(V::Gain, L::LossOrNonGain, S::KeptWithReturns, R::None),
        ),
        (Dishonest, Dishonest) => (
            p(V::Gain, L::LossOrNonGain, S::NoGainOfCounterpartyStake, R::None),
            p(V::Gain, L::LossOrNonGain, S::Forfeited, R::None),
        ),
    }
}

fn check_reward_params(alpha_prime: u32, iota_prime: u32) -> Result<(), IncentiveError> {
    if !(1..=100).contains(&alpha_prime) {
        return Err(IncentiveError::AlphaOutOfRange(alpha_prime));
    }
    if iota_prime < alpha_prime {
        return Err(IncentiveError::IotaTooSmall {
            alpha: alpha_prime,
            iota: iota_prime,
        });
    }
    Ok(())
}

/// LZSP reward η for a transaction of value `phi`.
pub fn reward_amount(phi: Rational, alpha_prime: u32, iota_prime: u32) -> Result<Rational, IncentiveError> {
    check_reward_params(alpha_prime, iota_prime)?;
    if phi < Rational::zero() {
        return Err(IncentiveError::InvalidParams("transaction value must be non-negative".into()));
    }
    Ok(phi * (int(1) - ratio(alpha_prime as i128, iota_prime as i128)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UtilityParams {
    /// Value at stake in a trade (both the monetary and the tangible value).
    #[serde(with = "rational")]
    pub trade_value: Rational,
    #[serde(with = "rational")]
    pub stake_amount: Rational,
    #[serde(with = "rational")]
    pub stake_return_rate: Rational,
    #[serde(with = "rational")]
    pub reputation_weight: Rational,
    #[serde(with = "rational")]
    pub reputation_point: Rational,
    pub alpha_prime: u32,
    pub iota_prime: u32,
}

impl Default for UtilityParams {
    fn default() -> Self {
        UtilityParams {
            trade_value: int(100),
            stake_amount: int(50),
            stake_return_rate: ratio(5, 100),
            reputation_weight: int(1),
            reputation_point: int(10),
            alpha_prime: 50,
            iota_prime: 100,
        }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<(), IncentiveError> {
        check_reward_params(self.alpha_prime, self.iota_prime)?;
        let zero = Rational::zero();
        let bad = |what: &str| Err(IncentiveError::InvalidParams(what.to_string()));
        if self.trade_value <= zero {
            return bad("tradeValue must be positive");
        }
        if self.stake_amount <= zero {
            return bad("stakeAmount must be positive");
        }
        if self.stake_return_rate < zero || self.reputation_weight < zero || self.reputation_point < zero {
            return bad("stakeReturnRate, reputationWeight and reputationPoint must be non-negative");
        }
        Ok(())
    }

    pub fn eta(&self) -> Rational {
        reward_amount(self.trade_value, self.alpha_prime, self.iota_prime).expect("validated")
    }

    pub fn with_trade_value(&self, v: Rational) -> Self {
        UtilityParams {
            trade_value: v,
            ..self.clone()
        }
    }
}

/// Numeric utility of a symbolic payoff.
pub fn utility(payoff: &SymbolicPayoff, params: &UtilityParams) -> Rational {
    let p = params;
    let value = match payoff.value {
        ValueTerm::Gain => p.trade_value,
        ValueTerm::Loss => -p.trade_value,
    };
    let lzsp = match payoff.lzsp {
        LzspTerm::Gain => p.eta(),
        LzspTerm::LossOrNonGain => Rational::zero(),
    };
    let stake = match payoff.stake {
        StakeTerm::KeptWithReturns => p.stake_return_rate * p.stake_amount,
        StakeTerm::Forfeited => -p.stake_amount,
        StakeTerm::NoGainOfCounterpartyStake | StakeTerm::None => Rational::zero(),
        StakeTerm::GainOfCounterpartyStake => p.stake_amount,
    };
    let rep = match payoff.reputation {
        ReputationTerm::Positive => p.reputation_point,
        ReputationTerm::Negative => -p.reputation_point,
        ReputationTerm::None => Rational::zero(),
    };
    value + lzsp + stake + p.reputation_weight * rep
}

/// One inequality of the honesty constraint set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub lhs: Rational,
    pub rhs: Rational,
    /// Whether the check is required for the honest equilibrium, or is one of
    /// the reported ordering properties.
    pub required: bool,
}

impl ConstraintCheck {
    pub fn holds(&self) -> bool {
        self.lhs > self.rhs
    }
}

impl fmt::Display for ConstraintCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} > {}",
            if self.holds() { "PASS" } else { "FAIL" },
            self.name,
            rational::display(&self.lhs),
            rational::display(&self.rhs)
        )
    }
}

/// Numeric 2×2 game for a parameter set.
#[derive(Debug, Clone)]
pub struct PayoffMatrix {
    params: UtilityParams,
    cells: BTreeMap<StrategyProfile, (Rational, Rational)>,
}

impl PayoffMatrix {
    /// Builds the matrix for any parameters the reward formula accepts, even
    /// ones [`UtilityParams::validate`] refuses, so broken configs can be
    /// diagnosed with [`PayoffMatrix::check_honesty`].
    pub fn new(params: &UtilityParams) -> Result<Self, IncentiveError> {
        reward_amount(params.trade_value, params.alpha_prime, params.iota_prime)?;
        let cells = StrategyProfile::all()
            .into_iter()
            .map(|p| {
                let (b, s) = payoff_cell(p);
                (p, (utility(&b, params), utility(&s, params)))
            })
            .collect();
        Ok(PayoffMatrix {
            params: params.clone(),
            cells,
        })
    }

    pub fn params(&self) -> &UtilityParams {
        &self.params
    }

    pub fn utilities(&self, p: StrategyProfile) -> (Rational, Rational) {
        self.cells[&p]
    }

    pub fn total(&self, p: StrategyProfile) -> Rational {
        let (b, s) = self.utilities(p);
        b + s
    }

    pub fn buyer_best_responses(&self, seller: Strategy) -> Vec<Strategy> {
        let u = |b| self.utilities(StrategyProfile::new(b, seller)).0;
        let best = Strategy::BOTH.into_iter().map(u).max().expect("two strategies");
        Strategy::BOTH.into_iter().filter(|&b| u(b) == best).collect()
    }

    pub fn seller_best_responses(&self, buyer: Strategy) -> Vec<Strategy> {
        let u = |s| self.utilities(StrategyProfile::new(buyer, s)).1;
        let best = Strategy::BOTH.into_iter().map(u).max().expect("two strategies");
        Strategy::BOTH.into_iter().filter(|&s| u(s) == best).collect()
    }

    /// Pure-strategy Nash equilibria.
    pub fn nash_equilibria(&self) -> Vec<StrategyProfile> {
        StrategyProfile::all()
            .into_iter()
            .filter(|p| {
                self.buyer_best_responses(p.seller).contains(&p.buyer)
                    && self.seller_best_responses(p.buyer).contains(&p.seller)
            })
            .collect()
    }

    /// Profiles maximizing the utility sum.
    pub fn social_optima(&self) -> Vec<StrategyProfile> {
        let best = StrategyProfile::all().into_iter().map(|p| self.total(p)).max().expect("four cells");
        StrategyProfile::all().into_iter().filter(|&p| self.total(p) == best).collect()
    }

    pub fn constraint_checks(&self) -> Vec<ConstraintCheck> {
        use Strategy::*;
        let u = |b, s| self.utilities(StrategyProfile::new(b, s));
        let p = &self.params;
        let honest_total = self.total(StrategyProfile::new(Honest, Honest));
        let best_other = StrategyProfile::all()
            .into_iter()
            .filter(|q| *q != StrategyProfile::new(Honest, Honest))
            .map(|q| self.total(q))
            .max()
            .expect("three cells");
        vec![
            ConstraintCheck {
                name: "honest gain V + eta + r*S + w*rho is positive",
                lhs: p.trade_value + p.eta() + p.stake_return_rate * p.stake_amount + p.reputation_weight * p.reputation_point,
                rhs: Rational::zero(),
                required: true,
            },
            ConstraintCheck {
                name: "buyer prefers s1 against an honest seller: u_b(s1,s1) > u_b(s2,s1)",
                lhs: u(Honest, Honest).0,
                rhs: u(Dishonest, Honest).0,
                required: true,
            },
            ConstraintCheck {
                name: "seller prefers s1 against an honest buyer: u_s(s1,s1) > u_s(s1,s2)",
                lhs: u(Honest, Honest).1,
                rhs: u(Honest, Dishonest).1,
                required: true,
            },
            ConstraintCheck {
                name: "mutual honesty maximizes the utility sum",
                lhs: honest_total,
                rhs: best_other,
                required: false,
            },
            ConstraintCheck {
                name: "dishonest buyer does better in mutual fraud: u_b(s2,s2) > u_b(s2,s1)",
                lhs: u(Dishonest, Dishonest).0,
                rhs: u(Dishonest, Honest).0,
                required: false,
            },
            ConstraintCheck {
                name: "dishonest seller does better in mutual fraud: u_s(s2,s2) > u_s(s1,s2)",
                lhs: u(Dishonest, Dishonest).1,
                rhs: u(Honest, Dishonest).1,
                required: false,
            },
        ]
    }

    /// Fails with the list of broken required inequalities.
    pub fn check_honesty(&self) -> Result<(), Vec<ConstraintCheck>> {
        let failed: Vec<_> = self
            .constraint_checks()
            .into_iter()
            .filter(|c| c.required && !c.holds())
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(failed)
        }
    }

    /// Text report: matrix with best responses marked, equilibria, optimum
    /// and the constraint checks.
    pub fn render(&self) -> String {
        use Strategy::*;
        let mut out = String::new();
        let cell = |b: Strategy, s: Strategy| {
            let (ub, us) = self.utilities(StrategyProfile::new(b, s));
            let mb = if self.buyer_best_responses(s).contains(&b) { "*" } else { "" };
            let ms = if self.seller_best_responses(b).contains(&s) { "*" } else { "" };
            format!("{}{mb} ; {}{ms}", rational::display(&ub), rational::display(&us))
        };
        let _ = writeln!(out, "payoffs (buyer ; seller), * marks a best response");
        let _ = writeln!(out, "{:<10}| {:<24}| {:<24}", "", "seller s1", "seller s2");
        for b in [Honest, Dishonest] {
            let _ = writeln!(out, "{:<10}| {:<24}| {:<24}", format!("buyer {b}"), cell(b, Honest), cell(b, Dishonest));
        }
        let fmt_profiles = |ps: &[StrategyProfile]| {
            if ps.is_empty() {
                "none".to_string()
            } else {
                ps.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
            }
        };
        let ne = self.nash_equilibria();
        let so = self.social_optima();
        let _ = writeln!(out, "nash equilibria: {}", fmt_profiles(&ne));
        let _ = writeln!(
            out,
            "social optimum: {} (sum {})",
            fmt_profiles(&so),
            rational::display(&self.total(so[0]))
        );
        for c in self.constraint_checks() {
            let _ = writeln!(out, "{c}");
        }
        out
    }
}

/// Trade-lifecycle acts that earn a share of the LZSP reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QualifyingAction {
    ShipmentOnTime,
    TrackingProvided,
    ReceiptConfirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ActionWeights {
    pub shipment_on_time: u32,
    pub tracking_provided: u32,
    pub receipt_confirmed: u32,
}

impl Default for ActionWeights {
    fn default() -> Self {
        ActionWeights {
            shipment_on_time: 1,
            tracking_provided: 1,
            receipt_confirmed: 1,
        }
    }
}

impl ActionWeights {
    pub fn weight(&self, a: QualifyingAction) -> u32 {
        match a {
            QualifyingAction::ShipmentOnTime => self.shipment_on_time,
            QualifyingAction::TrackingProvided => self.tracking_provided,
            QualifyingAction::ReceiptConfirmed => self.receipt_confirmed,
        }
    }
}

/// Splits `total` over `actions` by weight; the last action absorbs the
/// rounding remainder so the shares sum to `total` exactly.
pub fn split_reward(total: u64, actions: &[QualifyingAction], weights: &ActionWeights) -> Vec<(QualifyingAction, u64)> {
    let w_sum: u64 = actions.iter().map(|&a| weights.weight(a) as u64).sum();
    if w_sum == 0 || total == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(actions.len());
    let mut given = 0u64;
    for (i, &a) in actions.iter().enumerate() {
        let share = if i + 1 == actions.len() {
            total - given
        } else {
            (total as u128 * weights.weight(a) as u128 / w_sum as u128) as u64
        };
        given += share;
        out.push((a, share));
    }
    out
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IncentiveBook {
    reputation: BTreeMap<AccountId, i64>,
    applied: BTreeSet<TradeId>,
    lzsp_minted: u64,
}

impl IncentiveBook {
    pub fn reputation(&self, a: &AccountId) -> i64 {
        self.reputation.get(a).copied().unwrap_or(0)
    }

    pub fn is_applied(&self, t: TradeId) -> bool {
        self.applied.contains(&t)
    }

    pub fn lzsp_minted(&self) -> u64 {
        self.lzsp_minted
    }
}

/// What [`Market::apply_payoffs`] wrote.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PayoffApplication {
    pub ledger_seqs: Vec<u64>,
    pub reputation: Vec<(AccountId, i64)>,
    pub lzsp: Vec<(AccountId, u64)>,
    pub slashed: u64,
}

impl<A: AssetAuthenticator, K: KycProvider> Market<A, K> {
    pub fn reputation(&self, account: &AccountId) -> i64 {
        self.incentives.reputation(account)
    }

    /// Mints LZSP rewards, forfeits stakes and moves reputation for a terminal
    /// trade. Value routing already happened in the escrow; this only applies
    /// the incentive side of the cell. At most once per trade.
    pub fn apply_payoffs(&mut self, outcome: &TradeOutcome) -> Result<PayoffApplication, IncentiveError> {
        let trade = self
            .escrow
            .trade(outcome.trade_id)
            .ok_or(IncentiveError::UnknownTrade(outcome.trade_id))?
            .clone();
        if !matches!(trade.state, TradeState::Completed | TradeState::Resolved | TradeState::TimedOut) {
            return Err(IncentiveError::NotTerminal(trade.trade_id));
        }
        if self.incentives.applied.contains(&trade.trade_id) {
            return Err(IncentiveError::AlreadyApplied(trade.trade_id));
        }
        let now = self.now;
        let profile = StrategyProfile::new(outcome.buyer_strategy, outcome.seller_strategy);
        let (buyer_pay, seller_pay) = payoff_cell(profile);
        let params = &self.config.utility;
        let eta = reward_amount(int(trade.price_lzs as i128), params.alpha_prime, params.iota_prime)?;
        let reward = rational::floor_u64(&eta);
        let rho = rational::floor_u64(&params.reputation_point) as i64;
        let mut app = PayoffApplication::default();

        for (who, pay) in [(&trade.buyer, &buyer_pay), (&trade.seller, &seller_pay)] {
            if pay.lzsp == LzspTerm::Gain {
                let actions = trade.actions_of(who);
                for (a, share) in split_reward(reward, &actions, &self.config.action_weights) {
                    if share == 0 {
                        continue;
                    }
                    let seq = self.ledger.mint(now, who, TokenKind::LZSP, share)?;
                    app.ledger_seqs.push(seq);
                    app.lzsp.push((who.clone(), share));
                    self.incentives.lzsp_minted += share;
                    self.emit(MarketEvent::LzspRewarded {
                        trade_id: trade.trade_id,
                        account: who.clone(),
                        action: a,
                        amount: share,
                    });
                }
            }
        }

        if seller_pay.stake == StakeTerm::Forfeited {
            let amount = self.ledger.staked_of(&trade.seller).min(self.config.min_seller_stake);
            if amount > 0 {
                let beneficiary = if buyer_pay.stake == StakeTerm::GainOfCounterpartyStake {
                    Holder::Account(trade.buyer.clone())
                } else {
                    Holder::Pool
                };
                let to_pool = beneficiary == Holder::Pool;
                app.ledger_seqs.push(self.ledger.slash(now, &trade.seller, beneficiary, amount)?);
                app.slashed = amount;
                self.emit(MarketEvent::StakeForfeited {
                    trade_id: trade.trade_id,
                    seller: trade.seller.clone(),
                    amount,
                    to_pool,
                });
                if to_pool {
                    self.pool_inflow(crate::pool::FundingSource::StakeForfeit(trade.trade_id), amount)?;
                }
            }
        }

        for (who, pay) in [(&trade.buyer, &buyer_pay), (&trade.seller, &seller_pay)] {
            let delta = match pay.reputation {
                ReputationTerm::Positive => rho,
                ReputationTerm::Negative => -rho,
                ReputationTerm::None => 0,
            };
            if delta != 0 {
                let points = self.incentives.reputation.entry(who.clone()).or_insert(0);
                *points += delta;
                let points = *points;
                app.reputation.push((who.clone(), delta));
                self.emit(MarketEvent::ReputationChanged {
                    account: who.clone(),
                    delta,
                    points,
                });
            }
        }

        self.incentives.applied.insert(trade.trade_id);
        self.escrow.clear_pending(trade.trade_id);
        self.emit(MarketEvent::PayoffApplied {
            trade_id: trade.trade_id,
            resolution: outcome.resolution,
            buyer_strategy: outcome.buyer_strategy,
            seller_strategy: outcome.seller_strategy,
        });
        Ok(app)
    }

    /// Converts governance tokens into value tokens one for one.
    pub fn redeem_lzsp(&mut self, account: &AccountId, amount: u64) -> Result<(LedgerEvent, LedgerEvent), IncentiveError> {
        let now = self.now;
        let have = self.ledger.balance_of(account, TokenKind::LZSP);
        if amount > 0 && have < amount {
            return Err(LedgerError::InsufficientFunds {
                bucket: format!("free[{account},LZSP]"),
                available: have,
                needed: amount,
            }
            .into());
        }
        let burn = self.ledger.burn(now, account, TokenKind::LZSP, amount)?;
        let mint = self.ledger.mint(now, account, TokenKind::LZS, amount)?;
        let events = self.ledger.events();
        Ok((events[burn as usize].clone(), events[mint as usize].clone()))
    }

    /// One LZSP, one vote.
    pub fn vote_weight(&self, account: &AccountId) -> u64 {
        self.ledger.balance_of(account, TokenKind::LZSP)
    }
}

impl Resolution {
    /// Adjudicated strategy profile for a resolution.
    pub fn profile(self) -> StrategyProfile {
        use Strategy::*;
        match self {
            Resolution::CleanCompletion => StrategyProfile::new(Honest, Honest),
            Resolution::BuyerCompensated => StrategyProfile::new(Honest, Dishonest),
            Resolution::SellerCompensated => StrategyProfile::new(Dishonest, Honest),
            Resolution::MutualFraud => StrategyProfile::new(Dishonest, Dishonest),
        }
    }

    pub fn from_profile(p: StrategyProfile) -> Self {
        use Strategy::*;
        match (p.buyer, p.seller) {
            (Honest, Honest) => Resolution::CleanCompletion,
            (Honest, Dishonest) => Resolution::BuyerCompensated,
            (Dishonest, Honest) => Resolution::SellerCompensated,
            (Dishonest, Dishonest) => Resolution::MutualFraud,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    use LzspTerm as L;
    use ReputationTerm as R;
    use StakeTerm as S;
    use Strategy::*;
    use ValueTerm as V;

    #[test]
    fn cells_match_matrix() {
        let p = SymbolicPayoff::new;
        assert_eq!(
            payoff_cell(StrategyProfile::new(Honest, Honest)),
            (p(V::Gain, L::Gain, S::NoGainOfCounterpartyStake, R::Positive), p(V::Gain, L::Gain, S::KeptWithReturns, R::Positive))
        );
        assert_eq!(
            payoff_cell(StrategyProfile::new(Honest, Dishonest)),
            (p(V::Gain, L::LossOrNonGain, S::GainOfCounterpartyStake, R::None), p(V::Loss, L::LossOrNonGain, S::Forfeited, R::Negative))
        );
        assert_eq!(
            payoff_cell(StrategyProfile::new(Dishonest, Dishonest)),
            (p(V::Gain, L::LossOrNonGain, S::NoGainOfCounterpartyStake, R::None), p(V::Gain, L::LossOrNonGain, S::Forfeited, R::None))
        );
    }

    #[test]
    fn stake_sides() {
        for prof in StrategyProfile::all() {
            let (b, s) = payoff_cell(prof);
            assert!(matches!(b.stake, S::NoGainOfCounterpartyStake | S::GainOfCounterpartyStake));
            assert!(matches!(s.stake, S::KeptWithReturns | S::Forfeited));
        }
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward_amount(int(1000), 100, 100).unwrap(), int(0));
        assert_eq!(reward_amount(int(1000), 50, 100).unwrap(), int(500));
        assert_eq!(reward_amount(int(0), 37, 80).unwrap(), int(0));
        assert_eq!(reward_amount(int(1), 0, 100), Err(IncentiveError::AlphaOutOfRange(0)));
        assert_eq!(reward_amount(int(1), 101, 200), Err(IncentiveError::AlphaOutOfRange(101)));
        assert_eq!(reward_amount(int(1), 50, 49), Err(IncentiveError::IotaTooSmall { alpha: 50, iota: 49 }));
    }

    #[test]
    fn utility_examples() {
        let d = UtilityParams::default();
        let (b, _) = payoff_cell(StrategyProfile::new(Honest, Honest));
        assert_eq!(utility(&b, &d), int(160));
        let (b, _) = payoff_cell(StrategyProfile::new(Dishonest, Honest));
        assert_eq!(utility(&b, &d), int(-110));
        let zero = d.with_trade_value(int(0));
        let none = SymbolicPayoff::new(V::Gain, L::LossOrNonGain, S::None, R::None);
        assert_eq!(utility(&none, &zero), int(0));
    }

    #[test]
    fn default_game_has_honest_equilibrium() {
        let m = PayoffMatrix::new(&UtilityParams::default()).unwrap();
        assert_eq!(m.nash_equilibria(), vec![StrategyProfile::new(Honest, Honest)]);
        assert_eq!(m.social_optima(), vec![StrategyProfile::new(Honest, Honest)]);
        assert!(m.constraint_checks().iter().all(ConstraintCheck::holds));
        let r = m.render();
        assert!(r.contains("nash equilibria: (s1,s1)"));
        assert!(r.contains("160* ; 162.5*"));
    }

    #[test]
    fn zero_reputation_weight_still_honest() {
        let p = UtilityParams {
            reputation_weight: int(0),
            ..Default::default()
        };
        let m = PayoffMatrix::new(&p).unwrap();
        assert_eq!(m.nash_equilibria(), vec![StrategyProfile::new(Honest, Honest)]);
        assert!(m.check_honesty().is_ok());
    }

    #[test]
    fn checker_names_failing_inequality() {
        let p = UtilityParams {
            stake_amount: int(-1000),
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(IncentiveError::InvalidParams(_))));
        let m = PayoffMatrix::new(&p).unwrap();
        let failed = m.check_honesty().unwrap_err();
        assert_eq!(failed.len(), 1);
        assert!(failed[0].name.starts_with("seller prefers s1"));
        assert!(m.render().contains("[FAIL] seller prefers s1"));
    }

    #[test]
    fn split_sums_to_total() {
        let w = ActionWeights::default();
        let acts = [QualifyingAction::ShipmentOnTime, QualifyingAction::TrackingProvided];
        assert_eq!(split_reward(500, &acts, &w).iter().map(|x| x.1).collect::<Vec<_>>(), vec![250, 250]);
        assert_eq!(split_reward(333, &acts, &w).iter().map(|x| x.1).sum::<u64>(), 333);
        assert!(split_reward(10, &[], &w).is_empty());
    }

    proptest! {
        #[test]
        fn reward_properties(phi in 0i64..1_000_000, k in 1i64..1000, a in 1u32..=100, extra in 0u32..500) {
            let i = a + extra;
            let eta = reward_amount(int(phi as i128), a, i).unwrap();
            prop_assert!(eta >= int(0) && eta <= int(phi as i128));
            let scaled = reward_amount(int((phi * k) as i128), a, i).unwrap();
            prop_assert_eq!(scaled, eta * int(k as i128));
            if a < 100 && a < i {
                let next = reward_amount(int(phi as i128), a + 1, i).unwrap();
                prop_assert!(next <= eta);
                if phi > 0 { prop_assert!(next < eta); }
            }
        }
    }
}
