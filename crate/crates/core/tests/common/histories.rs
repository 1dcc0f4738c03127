//! Random operation histories against one trade, with the escrow safety
//! invariants checked after every step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybrid_market::court::{DisputeStatus, Party, Side};
use hybrid_market::escrow::TradeState;
use hybrid_market::ledger::{EventKind, Holder};
use hybrid_market::MarketConfig;

use super::{acct, Fixture};

#[derive(Debug, Clone, Copy)]
enum Op {
    Ship,
    ShipByBuyer,
    Receipt,
    ReceiptBySeller,
    Dispute(bool),
    DisputeByStranger,
    RequestCancel,
    ApproveCancel,
    Timeout,
    Vote(Side),
    Appeal,
    Advance(u64),
}

fn pick(rng: &mut ChaCha8Rng) -> Op {
    match rng.gen_range(0..14) {
        0 | 1 => Op::Ship,
        2 => Op::ShipByBuyer,
        3 | 4 => Op::Receipt,
        5 => Op::ReceiptBySeller,
        6 => Op::Dispute(rng.gen_bool(0.5)),
        7 => Op::DisputeByStranger,
        8 => Op::RequestCancel,
        9 => Op::ApproveCancel,
        10 => Op::Timeout,
        11 => Op::Vote(if rng.gen_bool(0.5) { Side::FavorsBuyer } else { Side::FavorsSeller }),
        12 => Op::Appeal,
        _ => Op::Advance(rng.gen_range(1..=12)),
    }
}

#[derive(Debug, Default)]
pub struct HistoryStats {
    pub histories: u64,
    pub steps: u64,
    pub terminal: u64,
    pub by_state: std::collections::BTreeMap<String, u64>,
}

/// Runs one seeded history of `steps` operations, then drains the clock.
/// Returns the final trade state, or a description of the first broken
/// invariant.
pub fn run_history(seed: u64, steps: usize) -> Result<TradeState, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = MarketConfig {
        unilateral_cancel_window: rng.gen_bool(0.3).then_some(2),
        max_rounds: 2,
        ..MarketConfig::default()
    };
    let mut f = Fixture::with_config(1000, config);
    for i in 5..16 {
        let j = acct(&format!("juror-{i}"));
        f.m.mint_lzs(&j, 100).unwrap();
        f.m.register_juror(&j, 100, 0.9).unwrap();
    }
    let id = f.order(1000);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    let stranger = acct("stranger");
    for _ in 0..steps {
        let before_seq = f.m.ledger().next_seq();
        let before = f.m.trade(id).unwrap().clone();
        let op = pick(&mut rng);
        let ok = match op {
            Op::Ship => f.m.confirm_shipment(id, &seller, "TRK-1").is_ok(),
            Op::ShipByBuyer => f.m.confirm_shipment(id, &buyer, "TRK-1").is_ok(),
            Op::Receipt => f.m.confirm_receipt(id, &buyer).is_ok(),
            Op::ReceiptBySeller => f.m.confirm_receipt(id, &seller).is_ok(),
            Op::Dispute(by_buyer) => {
                let who = if by_buyer { &buyer } else { &seller };
                let truth = if rng.gen_bool(0.5) { Side::FavorsBuyer } else { Side::FavorsSeller };
                f.m.raise_dispute(id, who, f.evidence(truth)).is_ok()
            }
            Op::DisputeByStranger => f.m.raise_dispute(id, &stranger, f.evidence(Side::FavorsBuyer)).is_ok(),
            Op::RequestCancel => f.m.request_cancel(id, &buyer).is_ok(),
            Op::ApproveCancel => f.m.approve_cancel(id, &seller).is_ok(),
            Op::Timeout => f.m.apply_timeout(id).is_ok_and(|o| o.is_some()),
            Op::Vote(side) => vote_round(&mut f, id, side),
            Op::Appeal => {
                let loser = f
                    .m
                    .trade(id)
                    .unwrap()
                    .dispute
                    .and_then(|d| f.m.verdict(d).map(|v| (d, v.winner.other())));
                match loser {
                    Some((d, p)) => {
                        let who = if p == Party::Buyer { &buyer } else { &seller };
                        f.m.appeal(d, who).is_ok()
                    }
                    None => false,
                }
            }
            Op::Advance(dt) => {
                let t = f.m.now() + dt;
                f.m.tick(t).map_err(|e| format!("tick failed: {e}"))?;
                true
            }
        };
        if !ok && f.m.ledger().next_seq() != before_seq {
            return Err(format!("{op:?} was rejected but wrote to the ledger"));
        }
        if !ok && *f.m.trade(id).unwrap() != before {
            return Err(format!("{op:?} was rejected but changed the trade"));
        }
        check(&f, id)?;
    }
    let mut t = f.m.now();
    for _ in 0..200 {
        if f.m.trade(id).unwrap().is_terminal() {
            break;
        }
        vote_round(&mut f, id, Side::FavorsBuyer);
        t += 5;
        f.m.tick(t).map_err(|e| format!("drain tick failed: {e}"))?;
        check(&f, id)?;
    }
    let trade = f.m.trade(id).unwrap();
    if !trade.is_terminal() {
        return Err(format!("trade stuck in {:?}", trade.state));
    }
    check_terminal(&f, id)?;
    Ok(trade.state)
}

fn vote_round(f: &mut Fixture, id: u64, side: Side) -> bool {
    let Some(d) = f.m.trade(id).unwrap().dispute else { return false };
    let dispute = f.m.court().dispute(d).unwrap().clone();
    if dispute.status != DisputeStatus::Voting {
        return false;
    }
    for j in dispute.jury() {
        f.m.cast_vote(d, &j.account, side).unwrap();
    }
    f.m.tally(d).is_ok()
}

fn escrow_out(f: &Fixture, id: u64) -> Vec<(u64, u64)> {
    f.m.ledger()
        .events()
        .iter()
        .filter(|e| e.from == Some(Holder::Escrow(id)))
        .map(|e| (e.logical_time, e.amount))
        .collect()
}

fn seller_paid(f: &Fixture, id: u64) -> bool {
    let seller = Holder::Account(f.seller.clone());
    f.m.ledger()
        .events()
        .iter()
        .any(|e| e.from == Some(Holder::Escrow(id)) && e.kind == EventKind::EscrowRelease && e.to == Some(seller.clone()))
}

fn check(f: &Fixture, id: u64) -> Result<(), String> {
    let t = f.m.trade(id).unwrap();
    for w in t.history.windows(2) {
        if w[0].to != w[1].from.unwrap() || !w[0].to.can_move_to(w[1].to) {
            return Err(format!("undeclared transition {:?} -> {:?}", w[0].to, w[1].to));
        }
    }
    let out: u64 = escrow_out(f, id).iter().map(|x| x.1).sum();
    if out > t.price_lzs {
        return Err(format!("escrow released {out} of {}", t.price_lzs));
    }
    if f.m.ledger().escrowed_of(id) + out != t.price_lzs {
        return Err("escrow balance and releases disagree".into());
    }
    let owner = &f.m.registry().get(t.nft_id).unwrap().owner;
    let paid = seller_paid(f, id);
    match t.state {
        TradeState::Completed if !(paid && *owner == t.buyer) => Err("Completed without payment and delivery".into()),
        TradeState::Funded | TradeState::Shipped | TradeState::TimedOut | TradeState::Cancelled
            if paid || *owner != t.seller =>
        {
            Err(format!("{:?} trade has paid={paid}, owner={owner}", t.state))
        }
        _ => Ok(()),
    }
}

fn check_terminal(f: &Fixture, id: u64) -> Result<(), String> {
    let t = f.m.trade(id).unwrap();
    let outs = escrow_out(f, id);
    let total: u64 = outs.iter().map(|x| x.1).sum();
    if total != t.price_lzs || f.m.ledger().escrowed_of(id) != 0 {
        return Err(format!("terminal trade released {total} of {}", t.price_lzs));
    }
    let mut times: Vec<u64> = outs.iter().map(|x| x.0).collect();
    times.dedup();
    if times.len() != 1 {
        return Err(format!("escrow released at {} separate times", times.len()));
    }
    if f.m.registry().is_locked(t.nft_id) {
        return Err("terminal trade left the NFT locked".into());
    }
    Ok(())
}

pub fn run_many(seeds: std::ops::Range<u64>, steps: usize) -> Result<HistoryStats, String> {
    let mut stats = HistoryStats::default();
    for s in seeds {
        let state = run_history(s, steps).map_err(|e| format!("seed {s}: {e}"))?;
        stats.histories += 1;
        stats.steps += steps as u64;
        stats.terminal += 1;
        *stats.by_state.entry(format!("{state:?}")).or_default() += 1;
    }
    Ok(stats)
}
