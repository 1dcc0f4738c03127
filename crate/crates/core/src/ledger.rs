//! Append-only token ledger.
//!
//! Two tokens circulate: `LZS` (value, payments and stakes) and `LZSP`
//! (governance, minted as an honesty reward). Every economic state change in
//! the market is a [`LedgerEvent`]; the [`BalanceSheet`] is a fold over the
//! event list and can be re-derived at any time with [`Ledger::replay`].
//!
//! Value never disappears except through an explicit `Burn`: slashing always
//! names a beneficiary (an account or the insurance pool), so
//!
//! ```text
//! Σ free(LZS) + Σ staked + Σ escrowed + pool = minted(LZS) − burned(LZS)
//! Σ free(LZSP)                              = minted(LZSP) − burned(LZSP)
//! ```
//!
//! holds after every event.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::hash::{sha256, Digest};

pub type TradeId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("insufficient funds in {bucket}: available {available}, needed {needed}")]
    InsufficientFunds {
        bucket: String,
        available: u64,
        needed: u64,
    },
    #[error("malformed event: {0}")]
    MalformedEvent(String),
    #[error("gap in log: expected seq {expected}, found {found}")]
    GapInLog { expected: u64, found: u64 },
    #[error("invariant violation at seq {seq}: {reason}")]
    InvariantViolation { seq: u64, reason: String },
    #[error("invalid account id {0:?}")]
    InvalidAccount(String),
}

/// Participant wallet identifier.
///
/// Printable ASCII, no whitespace, and never starting with `@` (that prefix is
/// reserved for protocol-held balances, see [`Holder`]).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccountId(String);

impl AccountId {
    pub fn new(id: impl Into<String>) -> Result<Self, LedgerError> {
        let id = id.into();
        let ok = !id.is_empty()
            && !id.starts_with('@')
            && id.bytes().all(|b| b.is_ascii_graphic());
        if ok {
            Ok(AccountId(id))
        } else {
            Err(LedgerError::InvalidAccount(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl FromStr for AccountId {
    type Err = LedgerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AccountId::new(s)
    }
}

impl Serialize for AccountId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for AccountId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        AccountId::new(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    LZS,
    LZSP,
}

impl TokenKind {
    pub const ALL: [TokenKind; 2] = [TokenKind::LZS, TokenKind::LZSP];

    fn index(self) -> usize {
        match self {
            TokenKind::LZS => 0,
            TokenKind::LZSP => 1,
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenKind::LZS => "LZS",
            TokenKind::LZSP => "LZSP",
        })
    }
}

/// Endpoint of a value movement: a participant, the escrow of one trade, or
/// the insurance pool. Serialized as `alice`, `@escrow/7` and `@pool`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Holder {
    Account(AccountId),
    Escrow(TradeId),
    Pool,
}

impl Holder {
    pub fn account(&self) -> Option<&AccountId> {
        match self {
            Holder::Account(a) => Some(a),
            _ => None,
        }
    }
}

impl From<AccountId> for Holder {
    fn from(a: AccountId) -> Self {
        Holder::Account(a)
    }
}

impl From<&AccountId> for Holder {
    fn from(a: &AccountId) -> Self {
        Holder::Account(a.clone())
    }
}

impl fmt::Display for Holder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Holder::Account(a) => f.write_str(a.as_str()),
            Holder::Escrow(t) => write!(f, "@escrow/{t}"),
            Holder::Pool => f.write_str("@pool"),
        }
    }
}

impl fmt::Debug for Holder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Holder {
    type Err = LedgerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "@pool" {
            return Ok(Holder::Pool);
        }
        if let Some(id) = s.strip_prefix("@escrow/") {
            return id
                .parse()
                .map(Holder::Escrow)
                .map_err(|_| LedgerError::InvalidAccount(s.to_string()));
        }
        AccountId::new(s).map(Holder::Account)
    }
}

impl Serialize for Holder {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Holder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Mint,
    Burn,
    Transfer,
    Stake,
    Unstake,
    Slash,
    EscrowLock,
    EscrowRelease,
    EscrowRefund,
}

/// One immutable entry of the log. Field order is the wire order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEvent {
    pub seq: u64,
    pub logical_time: u64,
    pub kind: EventKind,
    pub token: TokenKind,
    pub from: Option<Holder>,
    pub to: Option<Holder>,
    pub amount: u64,
}

impl LedgerEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("ledger event serializes")
    }

    pub fn digest(&self) -> Digest {
        sha256(self.to_json_line())
    }

    /// Checks the per-kind field rules; says nothing about balances.
    pub fn check_shape(&self) -> Result<(), LedgerError> {
        use EventKind::*;
        let bad = |why: &str| Err(LedgerError::MalformedEvent(format!("{:?}: {why}", self.kind)));
        if self.amount == 0 {
            return bad("amount must be positive");
        }
        if self.kind != Mint && self.kind != Burn && self.kind != Transfer && self.token != TokenKind::LZS {
            return bad("only LZS can be staked, slashed or escrowed");
        }
        let from = self.from.as_ref();
        let to = self.to.as_ref();
        let is_account = |h: Option<&Holder>| matches!(h, Some(Holder::Account(_)));
        let is_escrow = |h: Option<&Holder>| matches!(h, Some(Holder::Escrow(_)));
        let is_pool = |h: Option<&Holder>| matches!(h, Some(Holder::Pool));
        match self.kind {
            Mint if from.is_none() && is_account(to) => Ok(()),
            Mint => bad("needs no `from` and an account `to`"),
            Burn if is_account(from) && to.is_none() => Ok(()),
            Burn => bad("needs an account `from` and no `to`"),
            Transfer => {
                let endpoint_ok = |h| is_account(h) || is_pool(h);
                if !endpoint_ok(from) || !endpoint_ok(to) {
                    return bad("endpoints must be accounts or the pool");
                }
                if from == to {
                    return bad("self transfer");
                }
                if (is_pool(from) || is_pool(to)) && self.token != TokenKind::LZS {
                    return bad("the pool holds LZS only");
                }
                Ok(())
            }
            Stake if is_account(from) && to.is_none() => Ok(()),
            Stake => bad("needs an account `from` and no `to`"),
            Unstake if from.is_none() && is_account(to) => Ok(()),
            Unstake => bad("needs no `from` and an account `to`"),
            Slash if is_account(from) && (is_account(to) || is_pool(to)) => Ok(()),
            Slash => bad("needs a staked account `from` and a beneficiary `to`"),
            EscrowLock if is_account(from) && is_escrow(to) => Ok(()),
            EscrowLock => bad("needs an account `from` and an escrow `to`"),
            EscrowRelease if is_escrow(from) && (is_account(to) || is_pool(to)) => Ok(()),
            EscrowRelease => bad("needs an escrow `from` and an account or pool `to`"),
            EscrowRefund if is_escrow(from) && is_account(to) => Ok(()),
            EscrowRefund => bad("needs an escrow `from` and an account `to`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Bucket {
    External,
    Free(AccountId, TokenKind),
    Staked(AccountId),
    Escrow(TradeId),
    Pool,
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bucket::External => f.write_str("external"),
            Bucket::Free(a, t) => write!(f, "free[{a},{t}]"),
            Bucket::Staked(a) => write!(f, "staked[{a}]"),
            Bucket::Escrow(t) => write!(f, "escrowed[{t}]"),
            Bucket::Pool => f.write_str("pool"),
        }
    }
}

fn holder_bucket(h: &Holder, token: TokenKind) -> Bucket {
    match h {
        Holder::Account(a) => Bucket::Free(a.clone(), token),
        Holder::Escrow(t) => Bucket::Escrow(*t),
        Holder::Pool => Bucket::Pool,
    }
}

fn buckets(e: &LedgerEvent) -> (Bucket, Bucket) {
    use EventKind::*;
    let from = || holder_bucket(e.from.as_ref().expect("shape checked"), e.token);
    let to = || holder_bucket(e.to.as_ref().expect("shape checked"), e.token);
    let staked = |h: &Option<Holder>| {
        Bucket::Staked(h.as_ref().and_then(Holder::account).expect("shape checked").clone())
    };
    match e.kind {
        Mint => (Bucket::External, to()),
        Burn => (from(), Bucket::External),
        Transfer | EscrowLock | EscrowRelease | EscrowRefund => (from(), to()),
        Stake => (from(), staked(&e.from)),
        Unstake => (staked(&e.to), to()),
        Slash => (staked(&e.from), to()),
    }
}

/// Balances derived from the event log. Zero entries are dropped so two
/// sheets holding the same balances compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceSheet {
    free: BTreeMap<AccountId, [u64; 2]>,
    staked: BTreeMap<AccountId, u64>,
    escrowed: BTreeMap<TradeId, u64>,
    pool: u64,
    minted: [u64; 2],
    burned: [u64; 2],
}

impl BalanceSheet {
    pub fn free(&self, account: &AccountId, token: TokenKind) -> u64 {
        self.free.get(account).map_or(0, |b| b[token.index()])
    }

    pub fn staked(&self, account: &AccountId) -> u64 {
        self.staked.get(account).copied().unwrap_or(0)
    }

    pub fn escrowed(&self, trade: TradeId) -> u64 {
        self.escrowed.get(&trade).copied().unwrap_or(0)
    }

    pub fn pool(&self) -> u64 {
        self.pool
    }

    pub fn minted(&self, token: TokenKind) -> u64 {
        self.minted[token.index()]
    }

    pub fn burned(&self, token: TokenKind) -> u64 {
        self.burned[token.index()]
    }

    pub fn accounts(&self) -> impl Iterator<Item = &AccountId> {
        let mut all: Vec<&AccountId> = self.free.keys().chain(self.staked.keys()).collect();
        all.sort();
        all.dedup();
        all.into_iter()
    }

    /// Sum of every balance of `token`, recomputed from the maps.
    pub fn holdings(&self, token: TokenKind) -> u128 {
        let free: u128 = self.free.values().map(|b| b[token.index()] as u128).sum();
        match token {
            TokenKind::LZS => {
                free + self.staked.values().map(|&v| v as u128).sum::<u128>()
                    + self.escrowed.values().map(|&v| v as u128).sum::<u128>()
                    + self.pool as u128
            }
            TokenKind::LZSP => free,
        }
    }

    pub fn supply(&self, token: TokenKind) -> u128 {
        self.minted(token) as u128 - self.burned(token) as u128
    }

    /// Returns the first token whose holdings differ from its net supply.
    pub fn conservation_violation(&self) -> Option<(TokenKind, u128, u128)> {
        TokenKind::ALL.into_iter().find_map(|t| {
            let (h, s) = (self.holdings(t), self.supply(t));
            (h != s).then_some((t, h, s))
        })
    }

    fn get(&self, b: &Bucket) -> u64 {
        match b {
            Bucket::External => u64::MAX,
            Bucket::Free(a, t) => self.free(a, *t),
            Bucket::Staked(a) => self.staked(a),
            Bucket::Escrow(t) => self.escrowed(*t),
            Bucket::Pool => self.pool,
        }
    }

    fn set(&mut self, b: &Bucket, v: u64) {
        match b {
            Bucket::External => {}
            Bucket::Free(a, t) => {
                let entry = self.free.entry(a.clone()).or_default();
                entry[t.index()] = v;
                if *entry == [0, 0] {
                    self.free.remove(a);
                }
            }
            Bucket::Staked(a) => set_or_remove(&mut self.staked, a.clone(), v),
            Bucket::Escrow(t) => set_or_remove(&mut self.escrowed, *t, v),
            Bucket::Pool => self.pool = v,
        }
    }

    /// Applies one event, leaving the sheet untouched on error.
    pub fn apply(&mut self, e: &LedgerEvent) -> Result<(), LedgerError> {
        e.check_shape()?;
        let (debit, credit) = buckets(e);
        let available = self.get(&debit);
        if available < e.amount {
            return Err(LedgerError::InsufficientFunds {
                bucket: debit.to_string(),
                available,
                needed: e.amount,
            });
        }
        let credited = match credit {
            Bucket::External => 0,
            _ => self
                .get(&credit)
                .checked_add(e.amount)
                .ok_or_else(|| LedgerError::MalformedEvent("balance overflow".into()))?,
        };
        let t = e.token.index();
        match e.kind {
            EventKind::Mint => {
                self.minted[t] = self.minted[t]
                    .checked_add(e.amount)
                    .ok_or_else(|| LedgerError::MalformedEvent("supply overflow".into()))?;
            }
            EventKind::Burn => self.burned[t] += e.amount,
            _ => {}
        }
        self.set(&debit, available - e.amount);
        self.set(&credit, credited);
        Ok(())
    }
}

fn set_or_remove<K: Ord>(map: &mut BTreeMap<K, u64>, k: K, v: u64) {
    if v == 0 {
        map.remove(&k);
    } else {
        map.insert(k, v);
    }
}

/// The single writer over the event log.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    events: Vec<LedgerEvent>,
    sheet: BalanceSheet,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn sheet(&self) -> &BalanceSheet {
        &self.sheet
    }

    pub fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn last_time(&self) -> u64 {
        self.events.last().map_or(0, |e| e.logical_time)
    }

    pub fn balance_of(&self, account: &AccountId, token: TokenKind) -> u64 {
        self.sheet.free(account, token)
    }

    pub fn staked_of(&self, account: &AccountId) -> u64 {
        self.sheet.staked(account)
    }

    pub fn escrowed_of(&self, trade: TradeId) -> u64 {
        self.sheet.escrowed(trade)
    }

    pub fn pool_balance(&self) -> u64 {
        self.sheet.pool()
    }

    /// Persists `event` at the next sequence number.
    pub fn append(&mut self, event: LedgerEvent) -> Result<u64, LedgerError> {
        if event.seq != self.next_seq() {
            return Err(LedgerError::MalformedEvent(format!(
                "seq {} does not follow {}",
                event.seq,
                self.events.len()
            )));
        }
        if event.logical_time < self.last_time() {
            return Err(LedgerError::MalformedEvent(format!(
                "logical time {} precedes {}",
                event.logical_time,
                self.last_time()
            )));
        }
        self.sheet.apply(&event)?;
        let seq = event.seq;
        self.events.push(event);
        Ok(seq)
    }

    pub fn record(
        &mut self,
        logical_time: u64,
        kind: EventKind,
        token: TokenKind,
        from: Option<Holder>,
        to: Option<Holder>,
        amount: u64,
    ) -> Result<u64, LedgerError> {
        self.append(LedgerEvent {
            seq: self.next_seq(),
            logical_time,
            kind,
            token,
            from,
            to,
            amount,
        })
    }

    pub fn mint(&mut self, t: u64, to: &AccountId, token: TokenKind, amount: u64) -> Result<u64, LedgerError> {
        self.record(t, EventKind::Mint, token, None, Some(to.into()), amount)
    }

    pub fn burn(&mut self, t: u64, from: &AccountId, token: TokenKind, amount: u64) -> Result<u64, LedgerError> {
        self.record(t, EventKind::Burn, token, Some(from.into()), None, amount)
    }

    pub fn transfer(
        &mut self,
        t: u64,
        from: Holder,
        to: Holder,
        token: TokenKind,
        amount: u64,
    ) -> Result<u64, LedgerError> {
        self.record(t, EventKind::Transfer, token, Some(from), Some(to), amount)
    }

    pub fn stake(&mut self, t: u64, account: &AccountId, amount: u64) -> Result<u64, LedgerError> {
        self.record(t, EventKind::Stake, TokenKind::LZS, Some(account.into()), None, amount)
    }

    pub fn unstake(&mut self, t: u64, account: &AccountId, amount: u64) -> Result<u64, LedgerError> {
        self.record(t, EventKind::Unstake, TokenKind::LZS, None, Some(account.into()), amount)
    }

    pub fn slash(&mut self, t: u64, staker: &AccountId, beneficiary: Holder, amount: u64) -> Result<u64, LedgerError> {
        self.record(t, EventKind::Slash, TokenKind::LZS, Some(staker.into()), Some(beneficiary), amount)
    }

    pub fn escrow_lock(&mut self, t: u64, from: &AccountId, trade: TradeId, amount: u64) -> Result<u64, LedgerError> {
        self.record(
            t,
            EventKind::EscrowLock,
            TokenKind::LZS,
            Some(from.into()),
            Some(Holder::Escrow(trade)),
            amount,
        )
    }

    pub fn escrow_release(&mut self, t: u64, trade: TradeId, to: Holder, amount: u64) -> Result<u64, LedgerError> {
        self.record(
            t,
            EventKind::EscrowRelease,
            TokenKind::LZS,
            Some(Holder::Escrow(trade)),
            Some(to),
            amount,
        )
    }

    pub fn escrow_refund(&mut self, t: u64, trade: TradeId, to: &AccountId, amount: u64) -> Result<u64, LedgerError> {
        self.record(
            t,
            EventKind::EscrowRefund,
            TokenKind::LZS,
            Some(Holder::Escrow(trade)),
            Some(to.into()),
            amount,
        )
    }

    /// Folds `events` into a fresh sheet. Pure: equal inputs give equal sheets.
    pub fn replay(events: &[LedgerEvent]) -> Result<BalanceSheet, LedgerError> {
        let mut sheet = BalanceSheet::default();
        let mut last_time = 0;
        for (i, e) in events.iter().enumerate() {
            if e.seq != i as u64 {
                return Err(LedgerError::GapInLog {
                    expected: i as u64,
                    found: e.seq,
                });
            }
            if e.logical_time < last_time {
                return Err(LedgerError::InvariantViolation {
                    seq: e.seq,
                    reason: "logical time went backwards".into(),
                });
            }
            last_time = e.logical_time;
            sheet.apply(e).map_err(|err| LedgerError::InvariantViolation {
                seq: e.seq,
                reason: err.to_string(),
            })?;
        }
        Ok(sheet)
    }

    /// Rebuilds a ledger from a log, validating every event.
    pub fn from_events(events: Vec<LedgerEvent>) -> Result<Self, LedgerError> {
        let sheet = Self::replay(&events)?;
        Ok(Ledger { events, sheet })
    }
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

pub fn export_jsonl<W: Write>(events: &[LedgerEvent], mut out: W) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn import_jsonl<R: BufRead>(input: R) -> Result<Vec<LedgerEvent>, JsonlError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: i + 1, source })?;
        events.push(e);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn acct(s: &str) -> AccountId {
        AccountId::new(s).unwrap()
    }

    /// Independent oracle: per-(holder, token) signed totals folded by hand.
    fn fold_free(events: &[LedgerEvent], who: &AccountId, token: TokenKind) -> i128 {
        let me = Holder::Account(who.clone());
        events
            .iter()
            .filter(|e| e.token == token)
            .map(|e| {
                let credit = e.to.as_ref() == Some(&me);
                // Slash debits the staked bucket, everything else debits free.
                let debit = e.from.as_ref() == Some(&me) && e.kind != EventKind::Slash;
                (credit as i128 - debit as i128) * e.amount as i128
            })
            .sum()
    }

    #[test]
    fn first_mint_gets_seq_zero() {
        let mut l = Ledger::new();
        let seq = l.mint(0, &acct("alice"), TokenKind::LZS, 1000).unwrap();
        assert_eq!(seq, 0);
        assert_eq!(l.balance_of(&acct("alice"), TokenKind::LZS), 1000);
    }

    #[test]
    fn overdraft_is_rejected_and_leaves_state() {
        let mut l = Ledger::new();
        l.mint(0, &acct("alice"), TokenKind::LZS, 1000).unwrap();
        let err = l
            .transfer(1, acct("alice").into(), acct("bob").into(), TokenKind::LZS, 1500)
            .unwrap_err();
        assert!(matches!(err, LedgerError::InsufficientFunds { available: 1000, needed: 1500, .. }));
        assert_eq!(l.events().len(), 1);
        assert_eq!(l.balance_of(&acct("alice"), TokenKind::LZS), 1000);
        assert_eq!(l.balance_of(&acct("bob"), TokenKind::LZS), 0);
    }

    #[test]
    fn stake_then_slash_routes_to_beneficiary() {
        let (alice, bob) = (acct("alice"), acct("bob"));
        let mut l = Ledger::new();
        l.mint(0, &alice, TokenKind::LZS, 50).unwrap();
        l.stake(0, &alice, 50).unwrap();
        l.slash(1, &alice, bob.clone().into(), 50).unwrap();
        assert_eq!(l.staked_of(&alice), 0);
        assert_eq!(l.balance_of(&bob, TokenKind::LZS), 50);
        assert_eq!(fold_free(l.events(), &bob, TokenKind::LZS), 50);
        assert_eq!(fold_free(l.events(), &alice, TokenKind::LZS), 0);
        assert_eq!(Ledger::replay(l.events()).unwrap(), *l.sheet());
    }

    #[test]
    fn balance_of_matches_fold() {
        let (a, b) = (acct("a"), acct("b"));
        let mut l = Ledger::new();
        assert_eq!(l.balance_of(&a, TokenKind::LZS), 0);
        l.mint(0, &a, TokenKind::LZS, 10).unwrap();
        l.transfer(0, a.clone().into(), b.clone().into(), TokenKind::LZS, 4).unwrap();
        assert_eq!(l.balance_of(&a, TokenKind::LZS), 6);
        assert_eq!(fold_free(l.events(), &a, TokenKind::LZS), 6);
        assert_eq!(l.balance_of(&a, TokenKind::LZSP), 0);
    }

    #[test]
    fn replay_of_empty_log_is_zero_sheet() {
        assert_eq!(Ledger::replay(&[]).unwrap(), BalanceSheet::default());
    }

    #[test]
    fn replay_detects_gap() {
        let mut l = Ledger::new();
        l.mint(0, &acct("a"), TokenKind::LZS, 10).unwrap();
        l.mint(0, &acct("a"), TokenKind::LZS, 10).unwrap();
        let mut events = l.events().to_vec();
        events.remove(0);
        assert_eq!(
            Ledger::replay(&events),
            Err(LedgerError::GapInLog { expected: 0, found: 1 })
        );
    }

    #[test]
    fn replay_flags_negative_history() {
        let mut l = Ledger::new();
        l.mint(0, &acct("a"), TokenKind::LZS, 10).unwrap();
        l.transfer(1, acct("a").into(), acct("b").into(), TokenKind::LZS, 10).unwrap();
        let mut events = l.events().to_vec();
        events[1].amount = 11;
        assert!(matches!(
            Ledger::replay(&events),
            Err(LedgerError::InvariantViolation { seq: 1, .. })
        ));
    }

    #[test]
    fn shape_rules() {
        let mut l = Ledger::new();
        let a = acct("a");
        assert!(matches!(
            l.record(0, EventKind::Mint, TokenKind::LZS, Some(a.clone().into()), Some(a.clone().into()), 1),
            Err(LedgerError::MalformedEvent(_))
        ));
        assert!(matches!(
            l.record(0, EventKind::Burn, TokenKind::LZS, Some(a.clone().into()), Some(a.clone().into()), 1),
            Err(LedgerError::MalformedEvent(_))
        ));
        assert!(matches!(l.mint(0, &a, TokenKind::LZS, 0), Err(LedgerError::MalformedEvent(_))));
        l.mint(0, &a, TokenKind::LZSP, 5).unwrap();
        assert!(matches!(
            l.record(0, EventKind::Stake, TokenKind::LZSP, Some(a.clone().into()), None, 1),
            Err(LedgerError::MalformedEvent(_))
        ));
        assert!(l.events().len() == 1);
    }

    #[test]
    fn out_of_order_seq_rejected() {
        let mut l = Ledger::new();
        let e = LedgerEvent {
            seq: 3,
            logical_time: 0,
            kind: EventKind::Mint,
            token: TokenKind::LZS,
            from: None,
            to: Some(acct("a").into()),
            amount: 1,
        };
        assert!(matches!(l.append(e), Err(LedgerError::MalformedEvent(_))));
    }

    #[test]
    fn time_cannot_go_backwards() {
        let mut l = Ledger::new();
        l.mint(5, &acct("a"), TokenKind::LZS, 1).unwrap();
        assert!(l.mint(4, &acct("a"), TokenKind::LZS, 1).is_err());
    }

    #[test]
    fn holder_wire_forms() {
        for s in ["alice", "@pool", "@escrow/12"] {
            let h: Holder = s.parse().unwrap();
            assert_eq!(h.to_string(), s);
        }
        assert!("@court".parse::<Holder>().is_err());
        assert!(AccountId::new("has space").is_err());
        assert!(AccountId::new("").is_err());
    }

    #[test]
    fn wire_field_order() {
        let mut l = Ledger::new();
        l.mint(3, &acct("alice"), TokenKind::LZS, 1000).unwrap();
        assert_eq!(
            l.events()[0].to_json_line(),
            r#"{"seq":0,"logical_time":3,"kind":"Mint","token":"LZS","from":null,"to":"alice","amount":1000}"#
        );
    }

    #[derive(Debug, Clone)]
    enum Op {
        Mint(usize, bool, u64),
        Burn(usize, bool, u64),
        Transfer(usize, usize, u64),
        Stake(usize, u64),
        Unstake(usize, u64),
        Slash(usize, Option<usize>, u64),
        Lock(usize, u64, u64),
        Release(u64, Option<usize>, u64),
    }

    fn op() -> impl Strategy<Value = Op> {
        let who = 0usize..4;
        prop_oneof![
            (who.clone(), any::<bool>(), 1u64..500).prop_map(|(a, p, n)| Op::Mint(a, p, n)),
            (who.clone(), any::<bool>(), 1u64..500).prop_map(|(a, p, n)| Op::Burn(a, p, n)),
            (who.clone(), who.clone(), 1u64..500).prop_map(|(a, b, n)| Op::Transfer(a, b, n)),
            (who.clone(), 1u64..500).prop_map(|(a, n)| Op::Stake(a, n)),
            (who.clone(), 1u64..500).prop_map(|(a, n)| Op::Unstake(a, n)),
            (who.clone(), proptest::option::of(who.clone()), 1u64..500).prop_map(|(a, b, n)| Op::Slash(a, b, n)),
            (who.clone(), 0u64..3, 1u64..500).prop_map(|(a, t, n)| Op::Lock(a, t, n)),
            (0u64..3, proptest::option::of(who), 1u64..500).prop_map(|(t, b, n)| Op::Release(t, b, n)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        /// Conservation, non-negativity (u64 + rejected overdrafts) and replay
        /// determinism over arbitrary operation sequences.
        #[test]
        fn conservation_and_replay(ops in proptest::collection::vec(op(), 1..60)) {
            let names: Vec<AccountId> = (0..4).map(|i| acct(&format!("u{i}"))).collect();
            let tok = |lzsp: bool| if lzsp { TokenKind::LZSP } else { TokenKind::LZS };
            let mut l = Ledger::new();
            for (t, op) in ops.into_iter().enumerate() {
                let t = t as u64;
                let _ = match op {
                    Op::Mint(a, p, n) => l.mint(t, &names[a], tok(p), n),
                    Op::Burn(a, p, n) => l.burn(t, &names[a], tok(p), n),
                    Op::Transfer(a, b, n) => l.transfer(t, names[a].clone().into(), names[b].clone().into(), TokenKind::LZS, n),
                    Op::Stake(a, n) => l.stake(t, &names[a], n),
                    Op::Unstake(a, n) => l.unstake(t, &names[a], n),
                    Op::Slash(a, b, n) => l.slash(t, &names[a], b.map_or(Holder::Pool, |b| names[b].clone().into()), n),
                    Op::Lock(a, tr, n) => l.escrow_lock(t, &names[a], tr, n),
                    Op::Release(tr, b, n) => l.escrow_release(t, tr, b.map_or(Holder::Pool, |b| names[b].clone().into()), n),
                };
                prop_assert_eq!(l.sheet().conservation_violation(), None);
            }
            let a = Ledger::replay(l.events()).unwrap();
            let b = Ledger::replay(l.events()).unwrap();
            prop_assert_eq!(&a, l.sheet());
            prop_assert_eq!(a, b);

            let mut buf = Vec::new();
            export_jsonl(l.events(), &mut buf).unwrap();
            let back = import_jsonl(&buf[..]).unwrap();
            prop_assert_eq!(&back[..], l.events());
            let mut again = Vec::new();
            export_jsonl(&back, &mut again).unwrap();
            prop_assert_eq!(buf, again);
        }
    }
}
