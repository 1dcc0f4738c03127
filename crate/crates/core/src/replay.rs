//! Offline verification of a run log.
//!
//! Re-parses every line, checks it re-renders byte for byte, replays the
//! ledger with a conservation check after every event, compares each block
//! against its seal, and rebuilds NFT ownership and trade states from the
//! market lines.

use std::collections::BTreeMap;
use std::fmt;

use crate::escrow::TradeState;
use crate::journal::{LineChain, LogLine, MarketEvent};
use crate::ledger::{AccountId, BalanceSheet, LedgerEvent, TradeId};
use crate::registry::NftId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayStatus {
    Pass,
    /// Every line present verifies, but the file has no `EndOfLog`.
    Partial,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// 1-based line in the file.
    pub line: usize,
    pub seq: Option<u64>,
    pub reason: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seq {
            Some(s) => write!(f, "at seq {s} (line {}): {}", self.line, self.reason),
            None => write!(f, "at line {}: {}", self.line, self.reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub status: ReplayStatus,
    pub lines: usize,
    pub ledger_events: u64,
    pub market_events: u64,
    pub seals: u64,
    pub checks: Vec<Check>,
    pub sheet: BalanceSheet,
    pub nft_owners: BTreeMap<NftId, AccountId>,
    pub trade_states: BTreeMap<TradeId, TradeState>,
}

impl ReplayReport {
    /// Earliest failure by ledger seq, then by line.
    pub fn first_failure(&self) -> Option<&Failure> {
        self.checks
            .iter()
            .filter_map(|c| c.failure.as_ref())
            .min_by_key(|f| (f.seq.unwrap_or(u64::MAX), f.line))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.failure {
                None => writeln!(f, "[PASS] {}", c.name)?,
                Some(x) => writeln!(f, "[FAIL] {} {x}", c.name)?,
            }
        }
        writeln!(
            f,
            "{} lines, {} ledger events, {} market events, {} seals",
            self.lines, self.ledger_events, self.market_events, self.seals
        )?;
        match (self.status, self.first_failure()) {
            (ReplayStatus::Pass, _) => write!(f, "replay PASS"),
            (ReplayStatus::Partial, _) => write!(f, "replay PARTIAL: prefix verifies, log has no EndOfLog"),
            (ReplayStatus::Fail, Some(x)) => write!(f, "replay FAIL {x}"),
            (ReplayStatus::Fail, None) => write!(f, "replay FAIL"),
        }
    }
}

fn fail(line: usize, seq: Option<u64>, reason: impl Into<String>) -> Option<Failure> {
    Some(Failure {
        line,
        seq,
        reason: reason.into(),
    })
}

/// Verifies a log as written to disk.
pub fn replay_bytes(bytes: &[u8]) -> ReplayReport {
    let text = String::from_utf8_lossy(bytes);
    let raw: Vec<(usize, &str)> = text
        .split('\n')
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let mut parsed = Vec::with_capacity(raw.len());
    let mut parse = None;
    let mut canonical = None;
    for &(n, l) in &raw {
        match LogLine::parse(l) {
            Ok(line) => {
                if canonical.is_none() && line.render() != l {
                    let seq = match &line {
                        LogLine::Ledger(e) => Some(e.seq),
                        _ => None,
                    };
                    canonical = fail(n, seq, "line does not re-render identically");
                }
                parsed.push((n, line));
            }
            Err(e) => {
                parse = fail(n, None, e.to_string());
                break;
            }
        }
    }
    let mut report = replay_lines(&parsed);
    report.lines = raw.len();
    report.checks.insert(0, Check { name: "parse", failure: parse.clone() });
    report.checks.insert(1, Check { name: "canonical", failure: canonical });
    if report.checks.iter().any(|c| c.failure.is_some()) {
        report.status = ReplayStatus::Fail;
    }
    report
}

fn trade_target(ev: &MarketEvent) -> Option<(TradeId, TradeState)> {
    Some(match ev {
        MarketEvent::ShipmentConfirmed { trade_id, .. } => (*trade_id, TradeState::Shipped),
        MarketEvent::TradeCompleted { trade_id, .. } => (*trade_id, TradeState::Completed),
        MarketEvent::TradeTimedOut { trade_id } => (*trade_id, TradeState::TimedOut),
        MarketEvent::TradeCancelled { trade_id } => (*trade_id, TradeState::Cancelled),
        MarketEvent::DisputeOpened { trade_id, .. } => (*trade_id, TradeState::Disputed),
        MarketEvent::TradeResolved { trade_id, .. } => (*trade_id, TradeState::Resolved),
        _ => return None,
    })
}

/// Verifies already parsed lines, each tagged with its 1-based line number.
pub fn replay_lines(lines: &[(usize, LogLine)]) -> ReplayReport {
    let mut sheet = BalanceSheet::default();
    let mut chain = LineChain::default();
    let mut block: Vec<&LedgerEvent> = Vec::new();
    let mut ledger = None;
    let mut seals = None;
    let mut registry = None;
    let mut trades = None;
    let mut end = None;
    let mut complete = false;
    let (mut n_ledger, mut n_market, mut n_seals) = (0u64, 0u64, 0u64);
    let mut last_time = 0;
    let mut nft_owners: BTreeMap<NftId, AccountId> = BTreeMap::new();
    let mut trade_states: BTreeMap<TradeId, TradeState> = BTreeMap::new();

    for (n, line) in lines {
        let n = *n;
        if complete {
            end = end.or(fail(n, None, "lines after EndOfLog"));
            break;
        }
        match line {
            LogLine::Ledger(e) => {
                chain.push(&line.render());
                if ledger.is_none() {
                    if e.seq != n_ledger {
                        ledger = fail(n, Some(e.seq), format!("expected seq {n_ledger}"));
                    } else if e.logical_time < last_time {
                        ledger = fail(n, Some(e.seq), "logical time went backwards");
                    } else if let Err(err) = sheet.apply(e) {
                        ledger = fail(n, Some(e.seq), err.to_string());
                    } else if let Some((t, h, s)) = sheet.conservation_violation() {
                        ledger = fail(n, Some(e.seq), format!("{t} holdings {h} differ from supply {s}"));
                    }
                    last_time = e.logical_time;
                }
                n_ledger += 1;
                block.push(e);
            }
            LogLine::Market(r) => {
                chain.push(&line.render());
                n_market += 1;
                match &r.event {
                    MarketEvent::NftMinted { nft_id, owner, .. } => {
                        if nft_owners.insert(*nft_id, owner.clone()).is_some() && registry.is_none() {
                            registry = fail(n, None, format!("NFT {nft_id} minted twice"));
                        }
                    }
                    MarketEvent::NftTransferred { nft_id, from, to, .. } => match nft_owners.get(nft_id) {
                        Some(o) if o == from => {
                            nft_owners.insert(*nft_id, to.clone());
                        }
                        other => {
                            if registry.is_none() {
                                registry = fail(
                                    n,
                                    None,
                                    format!("NFT {nft_id} moved from {from} but owner is {other:?}"),
                                );
                            }
                        }
                    },
                    MarketEvent::OrderPlaced { trade_id, .. } => {
                        if trade_states.insert(*trade_id, TradeState::Funded).is_some() && trades.is_none() {
                            trades = fail(n, None, format!("trade {trade_id} opened twice"));
                        }
                    }
                    ev => {
                        if let Some((id, to)) = trade_target(ev) {
                            match trade_states.get(&id) {
                                Some(from) if from.can_move_to(to) => {
                                    trade_states.insert(id, to);
                                }
                                from => {
                                    if trades.is_none() {
                                        trades = fail(n, None, format!("trade {id}: illegal move {from:?} -> {to:?}"));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            LogLine::Seal(s) => {
                n_seals += 1;
                if let Some(e) = block
                    .iter()
                    .enumerate()
                    .find(|(i, e)| s.digests.get(*i) != Some(&e.digest().short_hex()))
                    .map(|(_, e)| *e)
                {
                    let line = lines.iter().position(|(_, l)| matches!(l, LogLine::Ledger(x) if x.seq == e.seq));
                    let earlier = ledger.as_ref().is_some_and(|f: &Failure| f.seq.is_some_and(|s| s <= e.seq));
                    if !earlier {
                        let line = line.map_or(n, |i| lines[i].0);
                        ledger = fail(line, Some(e.seq), "amounts differ from the sealed record of this event");
                    }
                }
                if seals.is_none() {
                    let first = block.first().map(|e| e.seq);
                    let last = block.last().map(|e| e.seq);
                    if s.digests.len() != block.len() || s.first_seq != first || s.last_seq != last {
                        seals = fail(n, first, "seal covers a different block of ledger events");
                    } else if s.lines != chain.lines() || s.head != chain.head() {
                        seals = fail(n, None, "line hash differs from the seal");
                    }
                }
                block.clear();
            }
            LogLine::End(e) => {
                complete = true;
                if !block.is_empty() {
                    end = fail(n, block.first().map(|e| e.seq), "ledger events after the last seal");
                } else if e.lines != chain.lines() || e.head != chain.head() || e.ledger_events != n_ledger {
                    end = fail(n, None, "EndOfLog totals differ from the file");
                }
            }
        }
    }
    if ledger.is_none() {
        for (id, state) in &trade_states {
            let settled = matches!(
                state,
                TradeState::Completed | TradeState::Resolved | TradeState::TimedOut | TradeState::Cancelled
            );
            if complete && settled && sheet.escrowed(*id) != 0 {
                ledger = fail(lines.len(), None, format!("trade {id} is settled but escrow still holds funds"));
                break;
            }
        }
    }
    let checks = vec![
        Check { name: "conservation", failure: ledger },
        Check { name: "seals", failure: seals },
        Check { name: "registry", failure: registry },
        Check { name: "trades", failure: trades },
        Check { name: "end", failure: end },
    ];
    let status = if checks.iter().any(|c| c.failure.is_some()) {
        ReplayStatus::Fail
    } else if complete {
        ReplayStatus::Pass
    } else {
        ReplayStatus::Partial
    };
    ReplayReport {
        status,
        lines: lines.len(),
        ledger_events: n_ledger,
        market_events: n_market,
        seals: n_seals,
        checks,
        sheet,
        nft_owners,
        trade_states,
    }
}
