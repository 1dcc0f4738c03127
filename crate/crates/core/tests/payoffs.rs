mod common;

use common::{acct, Fixture};
use hybrid_market::escrow::{Resolution, TradeOutcome};
use hybrid_market::incentive::{IncentiveError, Strategy};
use hybrid_market::ledger::{EventKind, LedgerError, TokenKind};
use hybrid_market::MarketConfig;

fn manual() -> MarketConfig {
    MarketConfig {
        auto_payoffs: false,
        ..MarketConfig::default()
    }
}

#[test]
fn clean_completion_mints_eta_to_each_party() {
    let mut f = Fixture::with_config(1000, manual());
    let id = f.order(1000);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    f.m.confirm_shipment(id, &seller, "TRK").unwrap();
    let out = f.m.confirm_receipt(id, &buyer).unwrap();
    let app = f.m.apply_payoffs(&out).unwrap();
    assert_eq!(f.m.vote_weight(&buyer), 500);
    assert_eq!(f.m.vote_weight(&seller), 500);
    assert_eq!(app.lzsp.iter().map(|x| x.1).sum::<u64>(), 1000);
    assert_eq!((f.m.reputation(&buyer), f.m.reputation(&seller)), (10, 10));
    assert_eq!(app.slashed, 0);
    assert_eq!(f.m.apply_payoffs(&out), Err(IncentiveError::AlreadyApplied(id)));
}

#[test]
fn clean_completion_payoffs_wait_for_the_challenge_window() {
    let mut f = Fixture::new(1000);
    let id = f.order(1000);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    f.m.confirm_shipment(id, &seller, "TRK").unwrap();
    f.m.confirm_receipt(id, &buyer).unwrap();
    let closes = f.m.trade(id).unwrap().challenge_deadline.unwrap();
    f.m.tick(closes).unwrap();
    assert_eq!(f.m.vote_weight(&buyer), 0);
    f.m.tick(closes + 1).unwrap();
    assert_eq!(f.m.vote_weight(&buyer), 500);
    assert!(f.m.incentives().is_applied(id));
}

#[test]
fn seller_fraud_forfeits_stake_to_buyer() {
    let mut f = Fixture::with_config(1000, manual());
    let id = f.order(1000);
    let deadline = f.m.trade(id).unwrap().ship_deadline;
    f.m.tick(deadline + 1).unwrap();
    let out = f.m.trade(id).unwrap().outcome.unwrap();
    assert_eq!(out.resolution, Resolution::BuyerCompensated);
    let app = f.m.apply_payoffs(&out).unwrap();
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    assert_eq!(app.slashed, 50);
    assert_eq!(f.lzs(&buyer), 1050);
    assert_eq!(f.m.vote_weight(&buyer), 0);
    assert_eq!(f.m.reputation(&seller), -10);
    assert_eq!(f.m.reputation(&buyer), 0);
}

#[test]
fn mutual_fraud_sends_stake_to_pool() {
    let mut f = Fixture::with_config(1000, manual());
    let id = f.order(1000);
    let deadline = f.m.trade(id).unwrap().ship_deadline;
    f.m.tick(deadline + 1).unwrap();
    let mut out = f.m.trade(id).unwrap().outcome.unwrap();
    out.buyer_strategy = Strategy::Dishonest;
    out.resolution = Resolution::MutualFraud;
    let pool = f.m.pool_balance();
    let app = f.m.apply_payoffs(&out).unwrap();
    assert_eq!(app.slashed, 50);
    assert_eq!(f.m.pool_balance(), pool + 50);
    assert_eq!(f.lzs(&f.buyer), 1000);
}

#[test]
fn payoffs_need_a_terminal_trade() {
    let mut f = Fixture::with_config(1000, manual());
    let id = f.order(1000);
    let out = TradeOutcome::new(id, Resolution::CleanCompletion);
    assert_eq!(f.m.apply_payoffs(&out), Err(IncentiveError::NotTerminal(id)));
}

#[test]
fn redeem_is_one_burn_and_one_mint() {
    let mut f = Fixture::with_config(1000, manual());
    let id = f.order(1000);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    f.m.confirm_shipment(id, &seller, "TRK").unwrap();
    let out = f.m.confirm_receipt(id, &buyer).unwrap();
    f.m.apply_payoffs(&out).unwrap();
    let lzs = f.lzs(&buyer);
    let (burn, mint) = f.m.redeem_lzsp(&buyer, 100).unwrap();
    assert_eq!((burn.kind, burn.token, burn.amount), (EventKind::Burn, TokenKind::LZSP, 100));
    assert_eq!((mint.kind, mint.token, mint.amount), (EventKind::Mint, TokenKind::LZS, 100));
    assert_eq!(f.lzs(&buyer), lzs + 100);
    assert_eq!(f.m.vote_weight(&buyer), 400);
    assert!(f.m.ledger().sheet().conservation_violation().is_none());

    assert!(matches!(
        f.m.redeem_lzsp(&buyer, 0),
        Err(IncentiveError::Ledger(LedgerError::MalformedEvent(_)))
    ));
    assert!(matches!(
        f.m.redeem_lzsp(&buyer, 401),
        Err(IncentiveError::Ledger(LedgerError::InsufficientFunds { .. }))
    ));
    f.m.redeem_lzsp(&buyer, 400).unwrap();
    assert_eq!(f.m.vote_weight(&buyer), 0);
}

#[test]
fn vote_weight_is_lzsp_balance() {
    let mut f = Fixture::with_config(1000, manual());
    assert_eq!(f.m.vote_weight(&acct("nobody")), 0);
    let id = f.order(14);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    f.m.confirm_shipment(id, &seller, "TRK").unwrap();
    let out = f.m.confirm_receipt(id, &buyer).unwrap();
    f.m.apply_payoffs(&out).unwrap();
    assert_eq!(f.m.vote_weight(&buyer), 7);
    assert_eq!(f.m.vote_weight(&seller), 7);
}
