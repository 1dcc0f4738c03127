//! One clean sale: list, order, ship, confirm, then wait out the challenge
//! window so the LZSP rewards land.

use hybrid_market::ledger::{AccountId, TokenKind};
use hybrid_market::registry::SneakerMeta;
use hybrid_market::verify::{Authenticity, KycState, SimulatedAuthenticator, StaticKyc};
use hybrid_market::{Market, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seller = AccountId::new("seller")?;
    let buyer = AccountId::new("buyer")?;
    let kyc = StaticKyc::new()
        .with(seller.clone(), KycState::Passed)
        .with(buyer.clone(), KycState::Passed);
    let mut m = Market::new(MarketConfig::default(), SimulatedAuthenticator::new(3, 1.0), kyc)?;
    m.mint_lzs(&seller, 100)?;
    m.stake(&seller, 50)?;
    m.mint_lzs(&buyer, 1_000)?;

    let meta = SneakerMeta::new("555088-134", "Jordan 1 High", "https://img.example/j1.jpg", "shelf-9", "receipt-77");
    m.authenticator_mut().set_truth("555088-134", Authenticity::Genuine);
    let d = m.authenticate_asset(&meta, "photos")?;
    let nft = m.mint_nft(meta, &seller, &d)?.id;
    let listing = m.create_listing(&seller, nft, 1_000)?;
    let trade = m.place_order(listing.listing_id, &buyer)?;
    println!("funded: escrow holds {}", m.ledger().escrowed_of(trade.trade_id));

    m.tick(1)?;
    m.confirm_shipment(trade.trade_id, &seller, "TRK-1")?;
    m.tick(2)?;
    let outcome = m.confirm_receipt(trade.trade_id, &buyer)?;
    let t = m.trade(trade.trade_id)?;
    println!("{:?}: seller free LZS {}, pool {}", outcome.resolution, m.ledger().balance_of(&seller, TokenKind::LZS), m.pool_balance());
    println!("NFT owner {}", m.registry().get(nft)?.owner);

    let closes = t.challenge_deadline.expect("completed trades have a challenge window");
    m.tick(closes + 1)?;
    println!(
        "after the challenge window: LZSP buyer {}, seller {}; reputation {} / {}",
        m.vote_weight(&buyer),
        m.vote_weight(&seller),
        m.reputation(&buyer),
        m.reputation(&seller)
    );
    Ok(())
}
