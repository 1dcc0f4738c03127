//! Unified JSON Lines log: ledger events, market events and block seals.
//!
//! Ledger lines keep their seven-field shape. Market lines are
//! `{"logical_time":..,"kind":..,...}`. Every tick closes a block with a
//! `Seal` line carrying the short digest of each ledger event in the block and
//! a running hash over every line so far; `EndOfLog` closes the file. Edits
//! therefore show up at the exact ledger seq, and a missing `EndOfLog` marks
//! a truncated file.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::court::{Party, Side};
use crate::escrow::{ListingId, Resolution};
use crate::hash::{chain, Digest};
use crate::incentive::{QualifyingAction, Strategy};
use crate::ledger::{AccountId, LedgerEvent, TradeId};
use crate::pool::{ClaimStatus, FundingSource};
use crate::registry::{DisputeId, NftId};
use crate::verify::AuthVerdict;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MarketEvent {
    AuthIssued {
        sneaker_tag: String,
        verdict: AuthVerdict,
    },
    NftMinted {
        nft_id: NftId,
        owner: AccountId,
        metadata_hash: Digest,
        sneaker_tag: String,
    },
    NftTransferred {
        nft_id: NftId,
        from: AccountId,
        to: AccountId,
        authority: String,
    },
    LocationUpdated {
        nft_id: NftId,
        metadata_hash: Digest,
    },
    ListingCreated {
        listing_id: ListingId,
        seller: AccountId,
        nft_id: NftId,
        price: u64,
    },
    OrderPlaced {
        trade_id: TradeId,
        listing_id: ListingId,
        buyer: AccountId,
        seller: AccountId,
        nft_id: NftId,
        price: u64,
        ship_deadline: u64,
    },
    ShipmentConfirmed {
        trade_id: TradeId,
        receipt_deadline: u64,
    },
    ActionRecorded {
        trade_id: TradeId,
        account: AccountId,
        action: QualifyingAction,
    },
    CancelRequested {
        trade_id: TradeId,
    },
    TradeCancelled {
        trade_id: TradeId,
    },
    TradeCompleted {
        trade_id: TradeId,
        fee: u64,
        auto: bool,
    },
    TradeTimedOut {
        trade_id: TradeId,
    },
    ChallengeClosed {
        trade_id: TradeId,
    },
    DisputeOpened {
        dispute_id: DisputeId,
        trade_id: TradeId,
        opened_by: Party,
        after_completion: bool,
        /// Simulation label, never read by the protocol.
        ground_truth: Side,
    },
    JuryDrawn {
        dispute_id: DisputeId,
        round: u32,
        seed: u64,
        jurors: Vec<AccountId>,
    },
    VoteCast {
        dispute_id: DisputeId,
        round: u32,
        juror: AccountId,
    },
    VerdictReached {
        dispute_id: DisputeId,
        round: u32,
        winner: Party,
        buyer_votes: u32,
        seller_votes: u32,
        appeal_deadline: u64,
    },
    Appealed {
        dispute_id: DisputeId,
        by: Party,
        round: u32,
        jury_size: usize,
    },
    VerdictFinalized {
        dispute_id: DisputeId,
        winner: Party,
        round: u32,
    },
    JurorsSettled {
        dispute_id: DisputeId,
        slashed: u64,
        rewarded: u64,
        remainder: u64,
    },
    TradeResolved {
        trade_id: TradeId,
        dispute_id: DisputeId,
        resolution: Resolution,
    },
    LzspRewarded {
        trade_id: TradeId,
        account: AccountId,
        action: QualifyingAction,
        amount: u64,
    },
    StakeForfeited {
        trade_id: TradeId,
        seller: AccountId,
        amount: u64,
        to_pool: bool,
    },
    ReputationChanged {
        account: AccountId,
        delta: i64,
        points: i64,
    },
    PayoffApplied {
        trade_id: TradeId,
        resolution: Resolution,
        buyer_strategy: Strategy,
        seller_strategy: Strategy,
    },
    JurorRegistered {
        account: AccountId,
        bond: u64,
        coherence: f64,
    },
    PoolFunded {
        source: FundingSource,
        amount: u64,
    },
    ClaimFiled {
        claim_id: u64,
        dispute_id: DisputeId,
        claimant: AccountId,
        loss: u64,
        status: ClaimStatus,
    },
    ClaimPaid {
        claim_id: u64,
        paid: u64,
        remainder: u64,
    },
    RemainderPaid {
        claim_id: u64,
        amount: u64,
        outstanding: u64,
    },
    /// Simulation label: what the agents actually did in a trade.
    SimRealized {
        trade_id: TradeId,
        buyer_strategy: Strategy,
        seller_strategy: Strategy,
        buyer_type: Strategy,
        seller_type: Strategy,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Item {
    Event(MarketEvent),
    Seal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub logical_time: u64,
    /// Number of ledger events that precede this entry.
    pub ledger_pos: u64,
    pub(crate) item: Item,
}

impl Entry {
    pub fn event(&self) -> Option<&MarketEvent> {
        match &self.item {
            Item::Event(e) => Some(e),
            Item::Seal => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Journal {
    entries: Vec<Entry>,
}

impl Journal {
    pub(crate) fn push(&mut self, logical_time: u64, ledger_pos: u64, event: MarketEvent) {
        self.entries.push(Entry {
            logical_time,
            ledger_pos,
            item: Item::Event(event),
        });
    }

    pub(crate) fn seal(&mut self, logical_time: u64, ledger_pos: u64) {
        self.entries.push(Entry {
            logical_time,
            ledger_pos,
            item: Item::Seal,
        });
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn events(&self) -> impl Iterator<Item = (u64, &MarketEvent)> {
        self.entries.iter().filter_map(|e| e.event().map(|ev| (e.logical_time, ev)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SealRecord {
    pub kind: SealKind,
    pub logical_time: u64,
    pub first_seq: Option<u64>,
    pub last_seq: Option<u64>,
    pub digests: Vec<String>,
    pub lines: u64,
    pub head: Digest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SealKind {
    Seal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndRecord {
    pub kind: EndKind,
    pub lines: u64,
    pub ledger_events: u64,
    pub head: Digest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndKind {
    EndOfLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRecord {
    pub logical_time: u64,
    #[serde(flatten)]
    pub event: MarketEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogLine {
    Ledger(LedgerEvent),
    Market(MarketRecord),
    Seal(SealRecord),
    End(EndRecord),
}

impl LogLine {
    pub fn render(&self) -> String {
        match self {
            LogLine::Ledger(e) => e.to_json_line(),
            LogLine::Market(m) => serde_json::to_string(m).expect("market records serialize"),
            LogLine::Seal(s) => serde_json::to_string(s).expect("seals serialize"),
            LogLine::End(e) => serde_json::to_string(e).expect("end records serialize"),
        }
    }

    pub fn parse(line: &str) -> Result<LogLine, serde_json::Error> {
        let v: Value = serde_json::from_str(line)?;
        if v.get("seq").is_some() {
            return serde_json::from_value(v).map(LogLine::Ledger);
        }
        match v.get("kind").and_then(Value::as_str) {
            Some("Seal") => serde_json::from_value(v).map(LogLine::Seal),
            Some("EndOfLog") => serde_json::from_value(v).map(LogLine::End),
            _ => serde_json::from_value(v).map(LogLine::Market),
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Malformed { line: usize, source: serde_json::Error },
}

/// Running line hash shared by the writer and the verifier.
#[derive(Debug, Clone, Default)]
pub struct LineChain {
    head: Digest,
    lines: u64,
}

impl LineChain {
    pub fn push(&mut self, line: &str) {
        self.head = chain(&self.head, line);
        self.lines += 1;
    }

    pub fn head(&self) -> Digest {
        self.head
    }

    pub fn lines(&self) -> u64 {
        self.lines
    }
}

/// Builds the ordered log lines for a ledger and its journal.
pub fn build_log(ledger_events: &[LedgerEvent], journal: &Journal) -> Vec<LogLine> {
    let mut out = Vec::with_capacity(ledger_events.len() + journal.entries.len() + 1);
    let mut chain = LineChain::default();
    let mut next = 0usize;
    let mut block_start = 0usize;
    let push = |out: &mut Vec<LogLine>, chain: &mut LineChain, line: LogLine| {
        chain.push(&line.render());
        out.push(line);
    };
    let seal = |chain: &LineChain, from: usize, to: usize, t: u64| SealRecord {
        kind: SealKind::Seal,
        logical_time: t,
        first_seq: (from < to).then_some(from as u64),
        last_seq: (from < to).then(|| to as u64 - 1),
        digests: ledger_events[from..to].iter().map(|e| e.digest().short_hex()).collect(),
        lines: chain.lines(),
        head: chain.head(),
    };
    for entry in &journal.entries {
        let upto = (entry.ledger_pos as usize).min(ledger_events.len());
        while next < upto {
            push(&mut out, &mut chain, LogLine::Ledger(ledger_events[next].clone()));
            next += 1;
        }
        match &entry.item {
            Item::Event(ev) => push(
                &mut out,
                &mut chain,
                LogLine::Market(MarketRecord {
                    logical_time: entry.logical_time,
                    event: ev.clone(),
                }),
            ),
            Item::Seal => {
                out.push(LogLine::Seal(seal(&chain, block_start, next, entry.logical_time)));
                block_start = next;
            }
        }
    }
    if next < ledger_events.len() || block_start < next {
        while next < ledger_events.len() {
            push(&mut out, &mut chain, LogLine::Ledger(ledger_events[next].clone()));
            next += 1;
        }
        let t = ledger_events.last().map_or(0, |e| e.logical_time);
        out.push(LogLine::Seal(seal(&chain, block_start, next, t)));
    }
    out.push(LogLine::End(EndRecord {
        kind: EndKind::EndOfLog,
        lines: chain.lines(),
        ledger_events: ledger_events.len() as u64,
        head: chain.head(),
    }));
    out
}

pub fn write_log<W: Write>(lines: &[LogLine], mut out: W) -> io::Result<()> {
    for l in lines {
        out.write_all(l.render().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_log<R: BufRead>(input: R) -> Result<Vec<LogLine>, LogError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(LogLine::parse(&line).map_err(|source| LogError::Malformed { line: i + 1, source })?);
    }
    Ok(out)
}
