//! Authenticate a pair, mint its NFT, move it, and show what the public chain
//! view does and does not reveal.

use hybrid_market::ledger::AccountId;
use hybrid_market::registry::{Oracle, SneakerMeta};
use hybrid_market::verify::{Authenticity, KycState, SimulatedAuthenticator, StaticKyc};
use hybrid_market::{Market, MarketConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let owner = AccountId::new("collector")?;
    let friend = AccountId::new("friend")?;
    let kyc = StaticKyc::new().with(owner.clone(), KycState::Passed);
    let oracle = Oracle::new(AccountId::new("warehouse-oracle")?, "oracle-secret");
    let mut m = Market::new(MarketConfig::default(), SimulatedAuthenticator::new(1, 1.0), kyc)?.with_oracle(&oracle);

    let meta = SneakerMeta::new(
        "DD1391-100",
        "Dunk Low Panda",
        "https://img.example/dd1391.jpg",
        "vault-3/B12",
        "invoice-2291",
    );
    m.authenticator_mut().set_truth("DD1391-100", Authenticity::Genuine);
    let decision = m.authenticate_asset(&meta, "photo-set")?;
    println!("authentication: {:?}", decision.verdict());
    let nft = m.mint_nft(meta.clone(), &owner, &decision)?;
    println!("public view: {}", serde_json::to_string(&m.registry().public_view(nft.id)?)?);

    let again = m.authenticate_asset(&meta, "photo-set").and_then(|d| m.mint_nft(meta.clone(), &owner, &d));
    println!("second mint: {}", again.unwrap_err());

    let digest = nft.latest_digest();
    println!("stranger resolves: {:?}", m.registry().resolve_metadata(nft.id, &digest, &friend).unwrap_err());
    println!("owner resolves location: {}", m.registry().resolve_metadata(nft.id, &digest, &owner)?.location);

    let att = oracle.attest(nft.id, "vault-4/A01");
    let moved = m.update_location(nft.id, &att, "vault-4/A01")?;
    println!("metadata versions: {}", moved.metadata_versions.len());

    let rec = m.transfer_nft(nft.id, &owner, &friend)?;
    println!("new owner {}, history {:?}", rec.owner, rec.ownership_history);
    Ok(())
}
