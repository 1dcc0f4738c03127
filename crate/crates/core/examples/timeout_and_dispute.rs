//! A seller who never ships is timed out; a disputed shipment goes to a jury.

use hybrid_market::court::{EvidencePacket, Side};
use hybrid_market::ledger::TradeId;
use hybrid_market::ledger::{AccountId, TokenKind};
use hybrid_market::registry::SneakerMeta;
use hybrid_market::verify::{Authenticity, KycState, SimulatedAuthenticator, StaticKyc};
use hybrid_market::{Market, MarketConfig, SimMarket};

fn sale(m: &mut SimMarket, seller: &AccountId, buyer: &AccountId, id: &str) -> Result<TradeId, Box<dyn std::error::Error>> {
    let meta = SneakerMeta::new(id, "Yeezy 350", format!("https://img.example/{id}.jpg"), "shelf-1", "cert");
    m.authenticator_mut().set_truth(id, Authenticity::Genuine);
    let d = m.authenticate_asset(&meta, "photos")?;
    let nft = m.mint_nft(meta, seller, &d)?.id;
    let l = m.create_listing(seller, nft, 1_000)?;
    Ok(m.place_order(l.listing_id, buyer)?.trade_id)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seller = AccountId::new("seller")?;
    let buyer = AccountId::new("buyer")?;
    let kyc = StaticKyc::new()
        .with(seller.clone(), KycState::Passed)
        .with(buyer.clone(), KycState::Passed);
    let mut m = Market::new(MarketConfig::default(), SimulatedAuthenticator::new(5, 1.0), kyc)?;
    m.mint_lzs(&seller, 200)?;
    m.stake(&seller, 100)?;
    m.mint_lzs(&buyer, 2_000)?;
    for i in 0..7 {
        let j = AccountId::new(format!("juror-{i}"))?;
        m.mint_lzs(&j, 100)?;
        m.register_juror(&j, 100, 0.9)?;
    }

    let lazy = sale(&mut m, &seller, &buyer, "YZY-1")?;
    let deadline = m.trade(lazy)?.ship_deadline;
    m.tick(deadline + 1)?;
    println!(
        "timed out: buyer {} LZS (refund plus forfeited stake), seller stake {}",
        m.ledger().balance_of(&buyer, TokenKind::LZS),
        m.seller_stake(&seller)
    );

    let contested = sale(&mut m, &seller, &buyer, "YZY-2")?;
    m.confirm_shipment(contested, &seller, "TRK-2")?;
    let dispute = m.raise_dispute(contested, &buyer, EvidencePacket::new("box but no shoes", Side::FavorsBuyer))?;
    let jury: Vec<_> = dispute.jury().iter().map(|j| j.account.clone()).collect();
    println!("jury: {}", jury.iter().map(|a| a.as_str()).collect::<Vec<_>>().join(", "));
    for (i, j) in jury.iter().enumerate() {
        let vote = if i < 4 { Side::FavorsBuyer } else { Side::FavorsSeller };
        m.cast_vote(dispute.dispute_id, j, vote)?;
    }
    let verdict = m.tally(dispute.dispute_id)?;
    println!("verdict {:?} with tally {:?}", verdict.winner, verdict.tally);
    m.tick(m.now() + m.config().appeal_window + 1)?;
    let t = m.trade(contested)?;
    println!("trade {:?}, outcome {:?}", t.state, t.outcome.map(|o| o.resolution));
    for j in &jury {
        println!("  {j}: bond {}, free {}", m.court().bond_of(j), m.ledger().balance_of(j, TokenKind::LZS));
    }
    Ok(())
}
