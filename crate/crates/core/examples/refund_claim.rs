//! A completed sale is later shown to be a fake. The buyer wins the dispute
//! and is made whole by the refund pool, first partially, then in full once
//! the pool is topped up.

use hybrid_market::court::{EvidencePacket, Side};
use hybrid_market::ledger::{AccountId, TokenKind};
use hybrid_market::registry::SneakerMeta;
use hybrid_market::verify::{Authenticity, KycState, SimulatedAuthenticator, StaticKyc};
use hybrid_market::{Market, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seller = AccountId::new("seller")?;
    let buyer = AccountId::new("buyer")?;
    let donor = AccountId::new("treasury")?;
    let kyc = StaticKyc::new()
        .with(seller.clone(), KycState::Passed)
        .with(buyer.clone(), KycState::Passed);
    let mut m = Market::new(MarketConfig::default(), SimulatedAuthenticator::new(8, 1.0), kyc)?;
    m.mint_lzs(&seller, 100)?;
    m.stake(&seller, 50)?;
    m.mint_lzs(&buyer, 1_000)?;
    m.mint_lzs(&donor, 2_000)?;
    m.fund_pool(&donor, 300)?;
    for i in 0..5 {
        let j = AccountId::new(format!("juror-{i}"))?;
        m.mint_lzs(&j, 100)?;
        m.register_juror(&j, 100, 0.9)?;
    }

    let meta = SneakerMeta::new("FAKE-01", "Travis Scott Low", "https://img.example/ts.jpg", "shelf-2", "cert-x");
    m.authenticator_mut().set_truth("FAKE-01", Authenticity::Genuine);
    let d = m.authenticate_asset(&meta, "photos")?;
    let nft = m.mint_nft(meta, &seller, &d)?.id;
    let l = m.create_listing(&seller, nft, 1_000)?;
    let tid = m.place_order(l.listing_id, &buyer)?.trade_id;
    m.confirm_shipment(tid, &seller, "TRK")?;
    m.confirm_receipt(tid, &buyer)?;
    m.tick(3)?;

    let dispute = m.raise_dispute(tid, &buyer, EvidencePacket::new("stitching is wrong", Side::FavorsBuyer))?;
    for j in dispute.jury() {
        m.cast_vote(dispute.dispute_id, &j.account, Side::FavorsBuyer)?;
    }
    m.tally(dispute.dispute_id)?;
    m.tick(m.now() + m.config().appeal_window + 1)?;
    let verdict = m.verdict(dispute.dispute_id).cloned().expect("final");

    let loss = m.provable_loss(tid, &buyer);
    println!("provable loss {loss}, pool {}", m.pool_balance());
    let claim = m.file_claim(&verdict, &buyer, loss)?;
    let paid = m.pay_claim(claim.claim_id)?;
    println!("paid {}, remainder {}", paid.paid, paid.remainder);
    m.fund_pool(&donor, 1_000)?;
    let t = m.trade(tid)?;
    println!(
        "after top-up: outstanding {}, buyer position {} vs counterfactual {}, buyer LZS {}",
        m.pool().outstanding(),
        t.value_position(&buyer),
        t.counterfactual(&buyer),
        m.ledger().balance_of(&buyer, TokenKind::LZS)
    );
    println!("{}", m.pool_statement());
    Ok(())
}
