//! Seeded agent-based simulation of the market.
//!
//! One global clock; every tick the agents act in an order shuffled from the
//! seed. Each agent has a fixed strategy drawn at setup. Dishonest sellers
//! either never ship or list a fake pair; dishonest buyers file a false
//! dispute after receiving a genuine pair. Jurors vote with the evidence with
//! their configured coherence, and an honest party that loses a round
//! appeals while rounds remain.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::court::{derive_seed, simulated_vote, EvidencePacket, Party, Side};
use crate::escrow::{ListingId, Resolution, TradeState};
use crate::incentive::{payoff_cell, utility, PayoffMatrix, Strategy, StrategyProfile, UtilityParams};
use crate::journal::{build_log, LogLine, MarketEvent};
use crate::ledger::{AccountId, TokenKind, TradeId};
use crate::market::{Market, MarketConfig, MarketError, SimMarket};
use crate::rational::{self, int, Rational};
use crate::registry::{DisputeId, NftId, SneakerMeta};
use crate::verify::{Authenticity, KycState, SimulatedAuthenticator, StaticKyc};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Market(#[from] MarketError),
}

impl From<crate::escrow::EscrowError> for SimError {
    fn from(e: crate::escrow::EscrowError) -> Self {
        SimError::Market(e.into())
    }
}

impl From<crate::court::CourtError> for SimError {
    fn from(e: crate::court::CourtError) -> Self {
        SimError::Market(e.into())
    }
}

impl From<crate::pool::PoolError> for SimError {
    fn from(e: crate::pool::PoolError) -> Self {
        SimError::Market(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Buyer,
    Seller,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AgentGroup {
    pub role: Role,
    pub count: u32,
    /// Probability that an agent of this group is dishonest.
    pub strategy_mix: f64,
    pub initial_lzs: u64,
    #[serde(default)]
    pub stake: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct JurorGroup {
    pub count: u32,
    pub stake: u64,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Windows {
    pub shipping: u64,
    pub receipt: u64,
    pub challenge: u64,
    pub appeal: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Fees {
    #[serde(with = "rational")]
    pub protocol_fee_rate: Rational,
    #[serde(with = "rational")]
    pub juror_penalty_fraction: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub ticks: u64,
    /// Stop opening orders after this many.
    #[serde(default)]
    pub max_trades: Option<u64>,
    pub agents: Vec<AgentGroup>,
    pub jurors: JurorGroup,
    #[serde(default)]
    pub utility_params: UtilityParams,
    pub windows: Windows,
    pub jury_size: usize,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u32,
    pub fees: Fees,
    #[serde(default = "default_accuracy")]
    pub verifier_accuracy: f64,
    #[serde(default = "default_min_seller_stake")]
    pub min_seller_stake: u64,
    #[serde(default = "default_juror_min_stake")]
    pub juror_min_stake: u64,
    #[serde(default = "default_price_min")]
    pub price_min: u64,
    #[serde(default = "default_price_max")]
    pub price_max: u64,
    /// Share of a dishonest seller's listings that are fakes; the rest are
    /// never shipped.
    #[serde(default = "default_half")]
    pub fake_share: f64,
    /// Chance a buyer spots a fake on receipt; otherwise it is found later
    /// inside the challenge window.
    #[serde(default = "default_detection")]
    pub receipt_detection: f64,
    /// LZS contributed to the refund pool before trading starts.
    #[serde(default)]
    pub pool_seed: u64,
    /// Run even if the utility parameters break the honesty constraints.
    #[serde(default)]
    pub allow_constraint_override: bool,
}

fn default_max_rounds() -> u32 {
    3
}
fn default_accuracy() -> f64 {
    1.0
}
fn default_min_seller_stake() -> u64 {
    50
}
fn default_juror_min_stake() -> u64 {
    10
}
fn default_price_min() -> u64 {
    100
}
fn default_price_max() -> u64 {
    1000
}
fn default_half() -> f64 {
    0.5
}
fn default_detection() -> f64 {
    0.7
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self, SimError> {
        serde_json::from_str(s).map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        let probs = self
            .agents
            .iter()
            .map(|g| ("strategyMix", g.strategy_mix))
            .chain([
                ("coherence", self.jurors.coherence),
                ("verifierAccuracy", self.verifier_accuracy),
                ("fakeShare", self.fake_share),
                ("receiptDetection", self.receipt_detection),
            ]);
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.jury_size.is_multiple_of(2) {
            return bad(format!("jurySize {} is even", self.jury_size));
        }
        let w = &self.windows;
        for (name, v) in [("shipping", w.shipping), ("receipt", w.receipt), ("challenge", w.challenge), ("appeal", w.appeal)] {
            if self.ticks <= v {
                return bad(format!("ticks {} must exceed the {name} window {v}", self.ticks));
            }
        }
        if (self.jurors.count as usize) < self.jury_size {
            return bad(format!("{} jurors cannot seat a jury of {}", self.jurors.count, self.jury_size));
        }
        if self.jurors.stake < self.juror_min_stake {
            return bad("juror stake is below the juror minimum".into());
        }
        if self.price_min == 0 || self.price_min > self.price_max {
            return bad("need 0 < priceMin <= priceMax".into());
        }
        let m = PayoffMatrix::new(&self.utility_params).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if !self.allow_constraint_override {
            self.utility_params.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            if let Err(failed) = m.check_honesty() {
                let names: Vec<_> = failed.iter().map(ToString::to_string).collect();
                return bad(format!("honesty constraints fail: {}", names.join("; ")));
            }
        }
        self.market_config().validate()?;
        Ok(())
    }

    pub fn market_config(&self) -> MarketConfig {
        MarketConfig {
            min_seller_stake: self.min_seller_stake,
            juror_min_stake: self.juror_min_stake,
            shipping_window: self.windows.shipping,
            receipt_window: self.windows.receipt,
            challenge_window: self.windows.challenge,
            appeal_window: self.windows.appeal,
            jury_size: self.jury_size,
            max_rounds: self.max_rounds,
            protocol_fee_rate: self.fees.protocol_fee_rate,
            juror_penalty_fraction: self.fees.juror_penalty_fraction,
            utility: self.utility_params.clone(),
            court_seed: derive_seed(&[self.seed, 1]),
            ..MarketConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SellerPlan {
    Honest,
    NeverShip,
    Fake,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: AccountId,
    pub role: Role,
    pub strategy: Strategy,
    pub initial_lzs: u64,
    open_listing: Option<ListingId>,
    items: u64,
    trades: Vec<TradeId>,
}

#[derive(Debug, Clone)]
struct SimTrade {
    plan: SellerPlan,
    false_dispute: bool,
    shipped_at: Option<u64>,
    receipt_handled: bool,
    late_detection_at: Option<u64>,
}

/// Counters reported by a run, reproducible from its log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub trades_started: u64,
    pub trades_completed: u64,
    pub trades_timed_out: u64,
    pub frauds_attempted: u64,
    pub frauds_blocked: u64,
    pub frauds_compensated: u64,
    pub disputes_opened: u64,
    pub verdicts_correct: u64,
    pub appeals: u64,
    pub claims_paid: u64,
    pub claims_outstanding: u64,
    #[serde(serialize_with = "ser_means")]
    pub mean_utility_by_strategy: BTreeMap<String, Rational>,
    pub lzsp_minted_total: u64,
    pub pool_balance_final: u64,
}

fn ser_means<S: serde::Serializer>(m: &BTreeMap<String, Rational>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &rational::display(v))?;
    }
    map.end()
}

impl Metrics {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "value"]).expect("in-memory csv");
        let rows: Vec<(String, String)> = vec![
            ("tradesStarted".into(), self.trades_started.to_string()),
            ("tradesCompleted".into(), self.trades_completed.to_string()),
            ("tradesTimedOut".into(), self.trades_timed_out.to_string()),
            ("fraudsAttempted".into(), self.frauds_attempted.to_string()),
            ("fraudsBlocked".into(), self.frauds_blocked.to_string()),
            ("fraudsCompensated".into(), self.frauds_compensated.to_string()),
            ("disputesOpened".into(), self.disputes_opened.to_string()),
            ("verdictsCorrect".into(), self.verdicts_correct.to_string()),
            ("appeals".into(), self.appeals.to_string()),
            ("claimsPaid".into(), self.claims_paid.to_string()),
            ("claimsOutstanding".into(), self.claims_outstanding.to_string()),
            ("lzspMintedTotal".into(), self.lzsp_minted_total.to_string()),
            ("poolBalanceFinal".into(), self.pool_balance_final.to_string()),
        ];
        for (k, v) in rows
            .into_iter()
            .chain(self.mean_utility_by_strategy.iter().map(|(k, v)| (format!("meanUtility[{k}]"), rational::display(v))))
        {
            w.write_record([k, v]).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Safety and consistency checks over a finished run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimReport {
    pub honest_agents_checked: u64,
    /// Honest agents left out because a verdict against them was wrong or
    /// their claim is not fully paid.
    pub honest_agents_excluded: u64,
    pub honest_violations: Vec<String>,
    pub cells_checked: u64,
    /// Trades whose final verdict contradicted the evidence.
    pub cells_excluded: u64,
    pub cell_mismatches: Vec<TradeId>,
}

impl SimReport {
    pub fn passed(&self) -> bool {
        self.honest_violations.is_empty() && self.cell_mismatches.is_empty()
    }
}

pub struct SimOutcome {
    pub market: SimMarket,
    pub agents: Vec<Agent>,
    pub metrics: Metrics,
    pub report: SimReport,
    pub log: Vec<LogLine>,
    /// Ticks run, including the drain after the configured horizon.
    pub ticks_run: u64,
    nft_value: BTreeMap<NftId, u64>,
}

impl SimOutcome {
    pub fn nft_value(&self, nft: NftId) -> Option<u64> {
        self.nft_value.get(&nft).copied()
    }

    pub fn log_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        crate::journal::write_log(&self.log, &mut out).expect("in-memory write");
        out
    }

    /// Writes events.jsonl, metrics.csv, registry.json, disputes.json,
    /// pool.json, trades.json and report.json into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let file = fs::File::create(dir.join(EVENTS_FILE))?;
        crate::journal::write_log(&self.log, io::BufWriter::new(file))?;
        fs::write(dir.join("metrics.csv"), self.metrics.to_csv())?;
        fs::write(dir.join("registry.json"), self.market.registry().to_json())?;
        fs::write(dir.join("disputes.json"), self.market.court().transcript())?;
        fs::write(dir.join("pool.json"), self.market.pool_statement())?;
        let trades = serde_json::to_string_pretty(self.market.escrow().trades()).map_err(io::Error::other)?;
        fs::write(dir.join("trades.json"), trades)?;
        let report = serde_json::to_string_pretty(&serde_json::json!({
            "metrics": self.metrics,
            "checks": self.report,
            "ticksRun": self.ticks_run,
        }))
        .map_err(io::Error::other)?;
        fs::write(dir.join("report.json"), report)
    }
}

pub const EVENTS_FILE: &str = "events.jsonl";

struct Sim {
    cfg: ScenarioConfig,
    m: SimMarket,
    rng: ChaCha8Rng,
    agents: Vec<Agent>,
    jurors: Vec<AccountId>,
    listing_plan: BTreeMap<ListingId, SellerPlan>,
    open_listings: Vec<ListingId>,
    trades: BTreeMap<TradeId, SimTrade>,
    watched: BTreeSet<DisputeId>,
    claims_due: BTreeSet<DisputeId>,
    nft_value: BTreeMap<NftId, u64>,
    orders: u64,
    /// Trades and agents whose dispute the court could not seat.
    unseated: BTreeSet<(TradeId, AccountId)>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimOutcome, SimError> {
    cfg.validate()?;
    let auth = SimulatedAuthenticator::new(derive_seed(&[cfg.seed, 2]), cfg.verifier_accuracy);
    let mut m = Market::new(cfg.market_config(), auth, StaticKyc::new())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut agents = Vec::new();
    let (mut nb, mut ns) = (0, 0);
    for g in &cfg.agents {
        for _ in 0..g.count {
            let id = match g.role {
                Role::Buyer => {
                    nb += 1;
                    format!("buyer-{:04}", nb - 1)
                }
                Role::Seller => {
                    ns += 1;
                    format!("seller-{:04}", ns - 1)
                }
            };
            let strategy = if rng.gen_bool(g.strategy_mix) {
                Strategy::Dishonest
            } else {
                Strategy::Honest
            };
            agents.push(Agent {
                id: AccountId::new(id).expect("generated ids are valid"),
                role: g.role,
                strategy,
                initial_lzs: g.initial_lzs,
                open_listing: None,
                items: 0,
                trades: Vec::new(),
            });
            let a = agents.last().expect("pushed");
            m.kyc_mut().set(a.id.clone(), KycState::Passed);
            if g.initial_lzs > 0 {
                m.mint_lzs(&a.id, g.initial_lzs)?;
            }
            if g.stake > 0 {
                m.stake(&a.id, g.stake.min(g.initial_lzs))?;
            }
        }
    }
    let mut jurors = Vec::new();
    for i in 0..cfg.jurors.count {
        let id = AccountId::new(format!("juror-{i:04}")).expect("valid");
        m.mint_lzs(&id, cfg.jurors.stake)?;
        m.register_juror(&id, cfg.jurors.stake, cfg.jurors.coherence)?;
        jurors.push(id);
    }
    if cfg.pool_seed > 0 {
        let treasury = AccountId::new("treasury").expect("valid");
        m.mint_lzs(&treasury, cfg.pool_seed)?;
        m.fund_pool(&treasury, cfg.pool_seed)?;
    }
    m.tick(0)?;
    let mut sim = Sim {
        cfg: cfg.clone(),
        m,
        rng,
        agents,
        jurors,
        listing_plan: BTreeMap::new(),
        open_listings: Vec::new(),
        trades: BTreeMap::new(),
        watched: BTreeSet::new(),
        claims_due: BTreeSet::new(),
        nft_value: BTreeMap::new(),
        orders: 0,
        unseated: BTreeSet::new(),
    };
    let mut t = 0;
    loop {
        t += 1;
        let trading = t <= cfg.ticks;
        sim.step(t, trading)?;
        if !trading && sim.quiescent() {
            break;
        }
    }
    sim.finish(t)
}

impl Sim {
    fn quiescent(&self) -> bool {
        self.m.escrow().is_quiescent()
            && !self.m.court().has_undecided()
            && self.watched.is_empty()
            && self.claims_due.is_empty()
            && self.trades.values().all(|s| s.late_detection_at.is_none())
    }

    fn may_open(&self) -> bool {
        self.cfg
            .max_trades
            .is_none_or(|max| self.orders + (self.open_listings.len() as u64) < max)
    }

    fn step(&mut self, t: u64, trading: bool) -> Result<(), SimError> {
        self.m.tick(t)?;
        let mut order: Vec<usize> = (0..self.agents.len()).collect();
        order.shuffle(&mut self.rng);
        for i in order {
            match self.agents[i].role {
                Role::Seller => self.seller_turn(i, t, trading)?,
                Role::Buyer => self.buyer_turn(i, t, trading)?,
            }
        }
        self.court_phase()?;
        self.claims_phase()?;
        self.restake_jurors()?;
        Ok(())
    }

    fn seller_turn(&mut self, i: usize, t: u64, trading: bool) -> Result<(), SimError> {
        let me = self.agents[i].id.clone();
        for tid in self.agents[i].trades.clone() {
            let trade = self.m.trade(tid)?;
            if trade.state == TradeState::Funded && self.trades[&tid].plan != SellerPlan::NeverShip {
                self.m.confirm_shipment(tid, &me, &format!("TRK-{tid}"))?;
                self.trades.get_mut(&tid).expect("tracked").shipped_at = Some(t);
            }
        }
        self.agents[i].trades.retain(|tid| self.m.trade(*tid).is_ok_and(|x| x.state == TradeState::Funded));
        if let Some(l) = self.agents[i].open_listing {
            if self.m.escrow().listing(l).is_some_and(|l| l.open) {
                return Ok(());
            }
            self.agents[i].open_listing = None;
        }
        if !trading || !self.may_open() || self.m.seller_stake(&me) < self.cfg.min_seller_stake {
            return Ok(());
        }
        let price = self.rng.gen_range(self.cfg.price_min..=self.cfg.price_max);
        let plan = match self.agents[i].strategy {
            Strategy::Honest => SellerPlan::Honest,
            Strategy::Dishonest if self.rng.gen_bool(self.cfg.fake_share) => SellerPlan::Fake,
            Strategy::Dishonest => SellerPlan::NeverShip,
        };
        let n = self.agents[i].items;
        self.agents[i].items += 1;
        let sneaker_id = format!("SNK-{me}-{n:05}");
        let truth = if plan == SellerPlan::Fake {
            Authenticity::Fake
        } else {
            Authenticity::Genuine
        };
        self.m.authenticator_mut().set_truth(sneaker_id.clone(), truth);
        let meta = SneakerMeta::new(
            sneaker_id.clone(),
            format!("Pair {n} of {me}"),
            format!("https://img.example/{sneaker_id}.jpg"),
            format!("{me}/shelf-{}", n % 7),
            format!("cert:{sneaker_id};photo:{t}"),
        );
        let decision = self.m.authenticate_asset(&meta, &format!("live-photo/{sneaker_id}"))?;
        if !decision.is_certified() {
            return Ok(());
        }
        let nft = self.m.mint_nft(meta, &me, &decision)?;
        self.nft_value.insert(nft.id, price);
        let listing = self.m.create_listing(&me, nft.id, price)?;
        self.listing_plan.insert(listing.listing_id, plan);
        self.open_listings.push(listing.listing_id);
        self.agents[i].open_listing = Some(listing.listing_id);
        Ok(())
    }

    fn buyer_turn(&mut self, i: usize, t: u64, trading: bool) -> Result<(), SimError> {
        let me = self.agents[i].id.clone();
        let dishonest = self.agents[i].strategy == Strategy::Dishonest;
        for tid in self.agents[i].trades.clone() {
            let state = self.m.trade(tid)?.state;
            let st = self.trades[&tid].clone();
            match state {
                TradeState::Shipped if !st.receipt_handled && st.shipped_at.is_some_and(|s| t > s) => {
                    self.trades.get_mut(&tid).expect("tracked").receipt_handled = true;
                    if st.plan == SellerPlan::Fake {
                        if self.rng.gen_bool(self.cfg.receipt_detection) {
                            self.dispute(tid, &me, Side::FavorsBuyer, "pair is not authentic")?;
                        } else {
                            self.m.confirm_receipt(tid, &me)?;
                            let later = self.rng.gen_range(1..=self.cfg.windows.challenge);
                            self.trades.get_mut(&tid).expect("tracked").late_detection_at = Some(t + later);
                        }
                    } else if dishonest && self.dispute(tid, &me, Side::FavorsSeller, "item not as agreed")? {
                        self.trades.get_mut(&tid).expect("tracked").false_dispute = true;
                    } else {
                        self.m.confirm_receipt(tid, &me)?;
                    }
                }
                TradeState::Completed if st.late_detection_at.is_some_and(|d| t >= d) => {
                    self.trades.get_mut(&tid).expect("tracked").late_detection_at = None;
                    self.dispute(tid, &me, Side::FavorsBuyer, "pair turned out to be fake")?;
                }
                _ => {}
            }
        }
        self.agents[i].trades.retain(|tid| {
            let st = &self.trades[tid];
            self.m.trade(*tid).is_ok_and(|x| match x.state {
                TradeState::Funded | TradeState::Shipped => true,
                TradeState::Completed => st.late_detection_at.is_some(),
                _ => false,
            })
        });
        let busy = self.agents[i]
            .trades
            .iter()
            .any(|tid| matches!(self.m.trade(*tid).map(|x| x.state), Ok(TradeState::Funded | TradeState::Shipped)));
        if !trading || busy || self.open_listings.is_empty() {
            return Ok(());
        }
        if self.cfg.max_trades.is_some_and(|max| self.orders >= max) {
            return Ok(());
        }
        let k = self.rng.gen_range(0..self.open_listings.len());
        let lid = self.open_listings[k];
        let price = self.m.escrow().listing(lid).expect("open listing").price_lzs;
        if self.m.ledger().balance_of(&me, TokenKind::LZS) < price {
            return Ok(());
        }
        self.open_listings.swap_remove(k);
        let trade = self.m.place_order(lid, &me)?;
        self.orders += 1;
        let plan = self.listing_plan[&lid];
        self.trades.insert(
            trade.trade_id,
            SimTrade {
                plan,
                false_dispute: false,
                shipped_at: None,
                receipt_handled: false,
                late_detection_at: None,
            },
        );
        self.agents[i].trades.push(trade.trade_id);
        let seller = self.agents.iter().position(|a| a.id == trade.seller).expect("seller agent");
        self.agents[seller].trades.push(trade.trade_id);
        Ok(())
    }

    /// Opens a dispute unless too few jurors are eligible to seat a jury.
    fn dispute(&mut self, tid: TradeId, me: &AccountId, truth: Side, claim: &str) -> Result<bool, SimError> {
        let trade = self.m.trade(tid)?;
        if self.m.eligible_jurors(&trade.buyer, &trade.seller) < self.cfg.jury_size {
            self.unseated.insert((tid, me.clone()));
            return Ok(false);
        }
        let nft = trade.nft_id;
        let mint_hash = self.m.registry().get(nft).map_err(MarketError::from)?.metadata_hash;
        let evidence = EvidencePacket::new(claim, truth).citing(mint_hash);
        let d = self.m.raise_dispute(tid, me, evidence)?;
        self.watched.insert(d.dispute_id);
        Ok(true)
    }

    fn court_phase(&mut self) -> Result<(), SimError> {
        let coherence = self.cfg.jurors.coherence;
        for id in self.watched.clone() {
            loop {
                let d = self.m.court().dispute(id).expect("watched").clone();
                if d.final_verdict.is_some() {
                    self.watched.remove(&id);
                    self.claims_due.insert(id);
                    break;
                }
                match d.status {
                    crate::court::DisputeStatus::Voting => {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[self.cfg.seed, 3, id, d.round() as u64]));
                        for j in d.jury() {
                            let v = simulated_vote(&mut rng, d.evidence.ground_truth, coherence);
                            self.m.cast_vote(id, &j.account, v)?;
                        }
                        self.m.tally(id)?;
                    }
                    crate::court::DisputeStatus::Decided => {
                        let v = d.current().verdict.clone().expect("decided");
                        let truth = d.evidence.ground_truth.party();
                        let next_size = 2 * d.jury().len() + 1;
                        let can_seat = self.m.eligible_jurors(&d.buyer, &d.seller) >= next_size;
                        let open = d.current().appeal_deadline.is_some_and(|dl| self.m.now() <= dl);
                        if v.winner != truth && open && can_seat && d.round() + 1 < self.cfg.max_rounds {
                            let appellant = match truth {
                                Party::Buyer => d.buyer.clone(),
                                Party::Seller => d.seller.clone(),
                            };
                            self.m.appeal(id, &appellant)?;
                            continue;
                        }
                        break;
                    }
                    _ => break,
                }
            }
        }
        Ok(())
    }

    fn claims_phase(&mut self) -> Result<(), SimError> {
        for id in std::mem::take(&mut self.claims_due) {
            let d = self.m.court().dispute(id).expect("due").clone();
            let v = d.final_verdict.clone().expect("final");
            let winner = match v.winner {
                Party::Buyer => d.buyer.clone(),
                Party::Seller => d.seller.clone(),
            };
            let loss = self.m.provable_loss(d.trade_id, &winner);
            if loss > 0 {
                let claim = self.m.file_claim(&v, &winner, loss)?;
                self.m.pay_claim(claim.claim_id)?;
            }
        }
        Ok(())
    }

    fn restake_jurors(&mut self) -> Result<(), SimError> {
        for j in self.jurors.clone() {
            let free = self.m.ledger().balance_of(&j, TokenKind::LZS);
            if free > 0 {
                let coherence = self.m.court().juror(&j).map_or(self.cfg.jurors.coherence, |x| x.coherence);
                self.m.register_juror(&j, free, coherence)?;
            }
        }
        Ok(())
    }

    fn realized(&self, tid: TradeId) -> StrategyProfile {
        let st = &self.trades[&tid];
        let seller = if st.plan == SellerPlan::Honest {
            Strategy::Honest
        } else {
            Strategy::Dishonest
        };
        let buyer = if st.false_dispute {
            Strategy::Dishonest
        } else {
            Strategy::Honest
        };
        StrategyProfile::new(buyer, seller)
    }

    fn finish(mut self, last_tick: u64) -> Result<SimOutcome, SimError> {
        let ids: Vec<TradeId> = self.trades.keys().copied().collect();
        let types: BTreeMap<&AccountId, Strategy> = self.agents.iter().map(|a| (&a.id, a.strategy)).collect();
        let mut labels = Vec::new();
        for tid in ids {
            let t = self.m.trade(tid)?;
            let p = self.realized(tid);
            labels.push(MarketEvent::SimRealized {
                trade_id: tid,
                buyer_strategy: p.buyer,
                seller_strategy: p.seller,
                buyer_type: types[&t.buyer],
                seller_type: types[&t.seller],
            });
        }
        for e in labels {
            self.m.emit(e);
        }
        self.m.journal.seal(self.m.now(), self.m.ledger().next_seq());
        let metrics = live_metrics(&self);
        let report = self.report();
        let log = build_log(self.m.ledger().events(), self.m.journal());
        Ok(SimOutcome {
            market: self.m,
            agents: self.agents,
            metrics,
            report,
            log,
            ticks_run: last_tick,
            nft_value: self.nft_value,
        })
    }

    fn verdict_correct(&self, tid: TradeId) -> Option<bool> {
        let d = self.m.trade(tid).ok()?.dispute?;
        let d = self.m.court().dispute(d)?;
        let v = d.final_verdict.as_ref()?;
        Some(v.winner == d.evidence.ground_truth.party())
    }

    fn report(&self) -> SimReport {
        let mut r = SimReport::default();
        for &tid in self.trades.keys() {
            let t = self.m.trade(tid).expect("tracked");
            let Some(outcome) = t.outcome else { continue };
            if t.state == TradeState::Cancelled || !self.m.incentives().is_applied(tid) {
                continue;
            }
            if self.verdict_correct(tid) == Some(false) || self.unseated.iter().any(|u| u.0 == tid) {
                r.cells_excluded += 1;
                continue;
            }
            r.cells_checked += 1;
            if Resolution::from_profile(self.realized(tid)) != outcome.resolution {
                r.cell_mismatches.push(tid);
            }
        }
        let mut tainted: BTreeSet<&AccountId> = BTreeSet::new();
        for &tid in self.trades.keys() {
            let t = self.m.trade(tid).expect("tracked");
            if self.verdict_correct(tid) == Some(false) {
                tainted.insert(&t.buyer);
                tainted.insert(&t.seller);
            }
        }
        tainted.extend(self.unseated.iter().map(|u| &u.1));
        for c in self.m.pool().claims() {
            if c.remainder > 0 {
                tainted.insert(&c.claimant);
            }
        }
        let mut fees: BTreeMap<&AccountId, u64> = BTreeMap::new();
        let mut minted_value: BTreeMap<&AccountId, u64> = BTreeMap::new();
        for rec in self.m.registry().records() {
            let first = &rec.ownership_history[0].0;
            *minted_value.entry(first).or_default() += self.nft_value.get(&rec.id).copied().unwrap_or(0);
        }
        for t in self.m.escrow().trades() {
            let charged = t.flows.iter().any(|f| f.reason == crate::escrow::FlowReason::EscrowPayout);
            if charged {
                *fees.entry(&t.seller).or_default() += t.fee;
            }
        }
        let mut held_value: BTreeMap<&AccountId, u64> = BTreeMap::new();
        for rec in self.m.registry().records() {
            *held_value.entry(&rec.owner).or_default() += self.nft_value.get(&rec.id).copied().unwrap_or(0);
        }
        for a in self.agents.iter().filter(|a| a.strategy == Strategy::Honest) {
            if tainted.contains(&a.id) {
                r.honest_agents_excluded += 1;
                continue;
            }
            r.honest_agents_checked += 1;
            let l = self.m.ledger();
            let now = l.balance_of(&a.id, TokenKind::LZS) as i128
                + l.staked_of(&a.id) as i128
                + held_value.get(&a.id).copied().unwrap_or(0) as i128;
            let start = a.initial_lzs as i128 + minted_value.get(&a.id).copied().unwrap_or(0) as i128;
            let floor = start - fees.get(&a.id).copied().unwrap_or(0) as i128;
            if now < floor {
                r.honest_violations.push(format!("{} ends at {now}, below {floor}", a.id));
            }
        }
        r
    }
}

fn cell_utility(outcome_res: Resolution, buyer_side: bool, params: &UtilityParams, price: u64) -> Rational {
    let (b, s) = payoff_cell(outcome_res.profile());
    let p = params.with_trade_value(int(price as i128));
    utility(if buyer_side { &b } else { &s }, &p)
}

struct MeanAcc(BTreeMap<String, (Rational, i128)>);

impl MeanAcc {
    fn add(&mut self, key: String, v: Rational) {
        let e = self.0.entry(key).or_insert((int(0), 0));
        e.0 += v;
        e.1 += 1;
    }

    fn finish(self) -> BTreeMap<String, Rational> {
        self.0.into_iter().map(|(k, (s, n))| (k, s / int(n))).collect()
    }
}

fn live_metrics(sim: &Sim) -> Metrics {
    let m = &sim.m;
    let types: BTreeMap<&AccountId, Strategy> = sim.agents.iter().map(|a| (&a.id, a.strategy)).collect();
    let mut out = Metrics {
        trades_started: m.escrow().trades().len() as u64,
        trades_completed: 0,
        trades_timed_out: 0,
        frauds_attempted: 0,
        frauds_blocked: m.auth_decisions.values().filter(|d| !d.is_certified()).count() as u64,
        frauds_compensated: 0,
        disputes_opened: m.court().disputes().len() as u64,
        verdicts_correct: 0,
        appeals: m.court().disputes().iter().map(|d| d.rounds.len() as u64 - 1).sum(),
        claims_paid: m.pool().claims().iter().filter(|c| c.status == crate::pool::ClaimStatus::Paid).count() as u64,
        claims_outstanding: m.pool().outstanding(),
        mean_utility_by_strategy: BTreeMap::new(),
        lzsp_minted_total: m.incentives().lzsp_minted(),
        pool_balance_final: m.pool_balance(),
    };
    out.frauds_attempted = out.frauds_blocked;
    let mut means = MeanAcc(BTreeMap::new());
    for t in m.escrow().trades() {
        if t.history.iter().any(|h| h.to == TradeState::Completed) {
            out.trades_completed += 1;
        }
        if t.state == TradeState::TimedOut {
            out.trades_timed_out += 1;
        }
        let p = sim.realized(t.trade_id);
        let fraud = p.buyer == Strategy::Dishonest || p.seller == Strategy::Dishonest;
        out.frauds_attempted += fraud as u64;
        let Some(o) = t.outcome.filter(|_| m.incentives().is_applied(t.trade_id)) else { continue };
        let compensated = (p.seller == Strategy::Dishonest && o.resolution == Resolution::BuyerCompensated)
            || (p.buyer == Strategy::Dishonest && o.resolution == Resolution::SellerCompensated);
        out.frauds_compensated += (fraud && compensated) as u64;
        let params = &m.config().utility;
        means.add(format!("buyer/{}", types[&t.buyer]), cell_utility(o.resolution, true, params, t.price_lzs));
        means.add(format!("seller/{}", types[&t.seller]), cell_utility(o.resolution, false, params, t.price_lzs));
    }
    for d in m.court().disputes() {
        if d.final_verdict.as_ref().is_some_and(|v| v.winner == d.evidence.ground_truth.party()) {
            out.verdicts_correct += 1;
        }
    }
    out.mean_utility_by_strategy = means.finish();
    out
}

/// Recomputes the run metrics from the log alone.
pub fn metrics_from_log(lines: &[LogLine], params: &UtilityParams) -> Metrics {
    let mut out = Metrics {
        trades_started: 0,
        trades_completed: 0,
        trades_timed_out: 0,
        frauds_attempted: 0,
        frauds_blocked: 0,
        frauds_compensated: 0,
        disputes_opened: 0,
        verdicts_correct: 0,
        appeals: 0,
        claims_paid: 0,
        claims_outstanding: 0,
        mean_utility_by_strategy: BTreeMap::new(),
        lzsp_minted_total: 0,
        pool_balance_final: 0,
    };
    let mut price: BTreeMap<TradeId, u64> = BTreeMap::new();
    let mut applied: BTreeMap<TradeId, Resolution> = BTreeMap::new();
    let mut truth: BTreeMap<DisputeId, Side> = BTreeMap::new();
    let mut remainders: BTreeMap<u64, u64> = BTreeMap::new();
    let mut pool: i128 = 0;
    let mut means = MeanAcc(BTreeMap::new());
    for line in lines {
        match line {
            LogLine::Ledger(e) => {
                use crate::ledger::{EventKind, Holder};
                if e.kind == EventKind::Mint && e.token == TokenKind::LZSP {
                    out.lzsp_minted_total += e.amount;
                }
                if e.to == Some(Holder::Pool) {
                    pool += e.amount as i128;
                }
                if e.from == Some(Holder::Pool) {
                    pool -= e.amount as i128;
                }
            }
            LogLine::Market(r) => match &r.event {
                MarketEvent::AuthIssued { verdict, .. } if *verdict == crate::verify::AuthVerdict::Rejected => {
                    out.frauds_blocked += 1;
                }
                MarketEvent::OrderPlaced { trade_id, price: p, .. } => {
                    out.trades_started += 1;
                    price.insert(*trade_id, *p);
                }
                MarketEvent::TradeCompleted { .. } => out.trades_completed += 1,
                MarketEvent::TradeTimedOut { .. } => out.trades_timed_out += 1,
                MarketEvent::DisputeOpened {
                    dispute_id, ground_truth, ..
                } => {
                    out.disputes_opened += 1;
                    truth.insert(*dispute_id, *ground_truth);
                }
                MarketEvent::Appealed { .. } => out.appeals += 1,
                MarketEvent::VerdictFinalized { dispute_id, winner, .. } => {
                    if truth.get(dispute_id).map(|s| s.party()) == Some(*winner) {
                        out.verdicts_correct += 1;
                    }
                }
                MarketEvent::PayoffApplied { trade_id, resolution, .. } => {
                    applied.insert(*trade_id, *resolution);
                }
                MarketEvent::ClaimPaid { claim_id, remainder, .. } => {
                    out.claims_paid += 1;
                    remainders.insert(*claim_id, *remainder);
                }
                MarketEvent::RemainderPaid {
                    claim_id, outstanding, ..
                } => {
                    remainders.insert(*claim_id, *outstanding);
                }
                MarketEvent::SimRealized {
                    trade_id,
                    buyer_strategy,
                    seller_strategy,
                    buyer_type,
                    seller_type,
                } => {
                    let fraud = *buyer_strategy == Strategy::Dishonest || *seller_strategy == Strategy::Dishonest;
                    out.frauds_attempted += fraud as u64;
                    if let Some(res) = applied.get(trade_id) {
                        let compensated = (*seller_strategy == Strategy::Dishonest && *res == Resolution::BuyerCompensated)
                            || (*buyer_strategy == Strategy::Dishonest && *res == Resolution::SellerCompensated);
                        out.frauds_compensated += (fraud && compensated) as u64;
                        let p = price[trade_id];
                        means.add(format!("buyer/{buyer_type}"), cell_utility(*res, true, params, p));
                        means.add(format!("seller/{seller_type}"), cell_utility(*res, false, params, p));
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }
    out.frauds_attempted += out.frauds_blocked;
    out.claims_outstanding = remainders.values().sum();
    out.pool_balance_final = pool.max(0) as u64;
    out.mean_utility_by_strategy = means.finish();
    out
}
