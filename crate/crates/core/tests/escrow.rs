mod common;

use common::{acct, histories, Fixture};
use hybrid_market::court::Side;
use hybrid_market::escrow::{EscrowError, Resolution, TradeState};
use hybrid_market::ledger::TokenKind;
use hybrid_market::registry::RegistryError;
use hybrid_market::verify::KycState;
use hybrid_market::MarketError;
use proptest::prelude::*;

#[test]
fn listing_needs_minimum_stake_and_one_open_listing() {
    let mut f = Fixture::new(1000);
    let (nft, _) = f.list(1000);
    let seller = f.seller.clone();
    assert_eq!(f.m.create_listing(&seller, nft, 900), Err(EscrowError::AlreadyListed(nft)));

    f.m.kyc_mut().set(acct("broke"), KycState::Passed);
    f.m.mint_lzs(&acct("broke"), 10).unwrap();
    let nft2 = f.mint_item();
    f.m.transfer_nft(nft2, &seller, &acct("broke")).unwrap();
    assert_eq!(
        f.m.create_listing(&acct("broke"), nft2, 1000),
        Err(EscrowError::InsufficientStake { have: 0, need: 50 })
    );
}

#[test]
fn failed_kyc_blocks_listing() {
    let mut f = Fixture::new(1000);
    let nft = f.mint_item();
    let seller = f.seller.clone();
    f.m.kyc_mut().set(seller.clone(), KycState::Failed);
    assert_eq!(f.m.create_listing(&seller, nft, 1000), Err(EscrowError::NotKycPassed(seller)));
}

#[test]
fn order_locks_the_price() {
    let mut f = Fixture::new(1000);
    let id = f.order(1000);
    let t = f.m.trade(id).unwrap();
    assert_eq!(t.state, TradeState::Funded);
    assert_eq!(f.m.ledger().escrowed_of(id), 1000);
    assert_eq!(f.lzs(&f.buyer), 0);

    let mut poor = Fixture::new(999);
    let (_, l) = poor.list(1000);
    let buyer = poor.buyer.clone();
    assert_eq!(
        poor.m.place_order(l, &buyer),
        Err(EscrowError::InsufficientFunds {
            available: 999,
            needed: 1000
        })
    );
    let seller = poor.seller.clone();
    assert_eq!(poor.m.place_order(l, &seller), Err(EscrowError::SelfTrade));
}

#[test]
fn shipping_deadline_is_inclusive() {
    let mut f = Fixture::new(2000);
    let id = f.order(1000);
    let deadline = f.m.trade(id).unwrap().ship_deadline;
    let buyer = f.buyer.clone();
    assert_eq!(f.m.confirm_shipment(id, &buyer, "TRK"), Err(EscrowError::NotSeller));
    f.m.set_clock(deadline).unwrap();
    let seller = f.seller.clone();
    assert_eq!(f.m.confirm_shipment(id, &seller, "TRK").unwrap().state, TradeState::Shipped);

    let late = f.order(500);
    let deadline = f.m.trade(late).unwrap().ship_deadline;
    f.m.set_clock(deadline + 1).unwrap();
    assert_eq!(
        f.m.confirm_shipment(late, &seller, "TRK"),
        Err(EscrowError::DeadlinePassed {
            deadline,
            now: deadline + 1
        })
    );
}

#[test]
fn receipt_pays_seller_and_delivers_nft() {
    let mut f = Fixture::new(1000);
    let id = f.order(1000);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    assert!(matches!(f.m.confirm_receipt(id, &buyer), Err(EscrowError::WrongState { .. })));
    f.m.confirm_shipment(id, &seller, "TRK").unwrap();
    let before = f.lzs(&seller);
    let out = f.m.confirm_receipt(id, &buyer).unwrap();
    assert_eq!(out.resolution, Resolution::CleanCompletion);
    let t = f.m.trade(id).unwrap();
    assert_eq!(t.state, TradeState::Completed);
    assert_eq!(f.lzs(&seller) - before, 1000 - t.fee);
    assert_eq!(f.m.pool_balance(), 10);
    assert_eq!(f.m.registry().get(t.nft_id).unwrap().owner, buyer);
    assert!(matches!(f.m.confirm_receipt(id, &buyer), Err(EscrowError::WrongState { .. })));
}

#[test]
fn dispute_rules() {
    let mut f = Fixture::new(2000);
    let id = f.order(1000);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    f.m.confirm_shipment(id, &seller, "TRK").unwrap();
    assert!(matches!(
        f.m.raise_dispute(id, &acct("carol"), f.evidence(Side::FavorsBuyer)),
        Err(EscrowError::NotParty)
    ));
    let d = f.m.raise_dispute(id, &buyer, f.evidence(Side::FavorsBuyer)).unwrap();
    assert_eq!(f.m.trade(id).unwrap().state, TradeState::Disputed);
    assert_eq!(f.m.ledger().escrowed_of(id), 1000);
    assert_eq!(d.jury().len(), 5);

    let late = f.order(500);
    f.m.tick(f.m.now() + 1).unwrap();
    f.m.confirm_shipment(late, &seller, "TRK").unwrap();
    f.m.confirm_receipt(late, &buyer).unwrap();
    let closes = f.m.trade(late).unwrap().challenge_deadline.unwrap();
    f.m.tick(closes + 1).unwrap();
    assert!(matches!(
        f.m.raise_dispute(late, &buyer, f.evidence(Side::FavorsBuyer)),
        Err(EscrowError::WrongState { .. })
    ));
}

#[test]
fn timeout_refunds_and_forfeits_stake() {
    let mut f = Fixture::new(1000);
    let id = f.order(1000);
    let deadline = f.m.trade(id).unwrap().ship_deadline;
    f.m.tick(deadline).unwrap();
    assert_eq!(f.m.apply_timeout(id), Ok(None));
    assert_eq!(f.m.trade(id).unwrap().state, TradeState::Funded);
    f.m.tick(deadline + 1).unwrap();
    assert_eq!(f.m.trade(id).unwrap().state, TradeState::TimedOut);
    assert_eq!(f.lzs(&f.buyer), 1050);
    assert_eq!(f.m.ledger().staked_of(&f.seller), 0);
    assert_eq!(f.m.provable_loss(id, &f.buyer), 0);
}

#[test]
fn shipped_trade_ignores_timeout_and_auto_completes() {
    let mut f = Fixture::new(1000);
    let id = f.order(1000);
    let seller = f.seller.clone();
    f.m.confirm_shipment(id, &seller, "TRK").unwrap();
    let ship_deadline = f.m.trade(id).unwrap().ship_deadline;
    f.m.set_clock(ship_deadline + 1).unwrap();
    assert_eq!(f.m.apply_timeout(id), Ok(None));
    let receipt = f.m.trade(id).unwrap().receipt_deadline.unwrap();
    f.m.tick(receipt + 1).unwrap();
    assert_eq!(f.m.trade(id).unwrap().state, TradeState::Completed);
}

#[test]
fn approved_cancellation_refunds() {
    let mut f = Fixture::new(1000);
    let id = f.order(1000);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    assert_eq!(f.m.approve_cancel(id, &seller), Err(EscrowError::NoCancelRequest));
    f.m.request_cancel(id, &buyer).unwrap();
    assert_eq!(f.m.trade(id).unwrap().state, TradeState::Funded);
    f.m.approve_cancel(id, &seller).unwrap();
    assert_eq!(f.m.trade(id).unwrap().state, TradeState::Cancelled);
    assert_eq!(f.lzs(&buyer), 1000);
    let nft = f.m.trade(id).unwrap().nft_id;
    assert!(!f.m.registry().is_locked(nft));
}

#[test]
fn locked_nft_cannot_be_moved_by_owner() {
    let mut f = Fixture::new(1000);
    let (nft, _) = f.list(1000);
    let seller = f.seller.clone();
    assert_eq!(
        f.m.transfer_nft(nft, &seller, &acct("bob")).map(|_| ()),
        Err(MarketError::Registry(RegistryError::Locked(nft)))
    );
}

#[test]
fn seller_win_before_completion_delivers_and_pays() {
    let mut f = Fixture::new(1000);
    let id = f.order(1000);
    let (buyer, seller) = (f.buyer.clone(), f.seller.clone());
    f.m.confirm_shipment(id, &seller, "TRK").unwrap();
    let d = f.m.raise_dispute(id, &buyer, f.evidence(Side::FavorsSeller)).unwrap();
    let before = f.lzs(&seller);
    f.decide(d.dispute_id, Side::FavorsSeller);
    let t = f.m.trade(id).unwrap();
    assert_eq!(t.state, TradeState::Resolved);
    assert_eq!(t.outcome.unwrap().resolution, Resolution::SellerCompensated);
    assert_eq!(f.lzs(&seller) - before, 990);
    assert_eq!(f.m.registry().get(t.nft_id).unwrap().owner, buyer);
    assert_eq!(f.m.ledger().balance_of(&buyer, TokenKind::LZS), 0);
}

#[test]
fn random_histories_respect_the_state_machine() {
    let stats = histories::run_many(0..300, 30).unwrap();
    assert_eq!(stats.terminal, 300);
    assert!(stats.by_state.len() >= 4, "{:?}", stats.by_state);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_seeded_history_is_sound(seed in any::<u64>(), steps in 1usize..40) {
        prop_assert!(histories::run_history(seed, steps).is_ok());
    }
}
