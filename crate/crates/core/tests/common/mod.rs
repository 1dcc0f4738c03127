#![allow(dead_code)]

pub mod histories;

use hybrid_market::court::{EvidencePacket, Side};
use hybrid_market::escrow::ListingId;
use hybrid_market::ledger::{AccountId, TokenKind};
use hybrid_market::registry::{DisputeId, NftId, SneakerMeta};
use hybrid_market::verify::{Authenticity, KycState, SimulatedAuthenticator, StaticKyc};
use hybrid_market::{Market, MarketConfig, SimMarket};

pub fn acct(s: &str) -> AccountId {
    AccountId::new(s).unwrap()
}

pub fn meta(sneaker_id: &str) -> SneakerMeta {
    SneakerMeta::new(
        sneaker_id,
        "Air Force 1 '07",
        format!("https://img.example/{sneaker_id}.jpg"),
        "warehouse-A",
        format!("receipt-{sneaker_id}"),
    )
}

pub struct Fixture {
    pub m: SimMarket,
    pub seller: AccountId,
    pub buyer: AccountId,
    pub jurors: Vec<AccountId>,
    items: u64,
}

impl Fixture {
    /// Seller with 500 LZS (50 staked), buyer with `buyer_lzs`, five jurors
    /// bonded with 100 each.
    pub fn new(buyer_lzs: u64) -> Self {
        Self::with_config(buyer_lzs, MarketConfig::default())
    }

    pub fn with_config(buyer_lzs: u64, config: MarketConfig) -> Self {
        let seller = acct("seller");
        let buyer = acct("buyer");
        let kyc = StaticKyc::new()
            .with(seller.clone(), KycState::Passed)
            .with(buyer.clone(), KycState::Passed);
        let mut m = Market::new(config, SimulatedAuthenticator::new(11, 1.0), kyc).unwrap();
        m.mint_lzs(&seller, 500).unwrap();
        m.stake(&seller, 50).unwrap();
        if buyer_lzs > 0 {
            m.mint_lzs(&buyer, buyer_lzs).unwrap();
        }
        let jurors: Vec<_> = (0..5).map(|i| acct(&format!("juror-{i}"))).collect();
        for j in &jurors {
            m.mint_lzs(j, 100).unwrap();
            m.register_juror(j, 100, 0.9).unwrap();
        }
        Fixture {
            m,
            seller,
            buyer,
            jurors,
            items: 0,
        }
    }

    pub fn mint_item(&mut self) -> NftId {
        let id = format!("CT8532-{:03}", 104 + self.items);
        self.items += 1;
        self.m.authenticator_mut().set_truth(id.clone(), Authenticity::Genuine);
        let meta = meta(&id);
        let d = self.m.authenticate_asset(&meta, "photo-set-1").unwrap();
        let seller = self.seller.clone();
        self.m.mint_nft(meta, &seller, &d).unwrap().id
    }

    pub fn list(&mut self, price: u64) -> (NftId, ListingId) {
        let nft = self.mint_item();
        let seller = self.seller.clone();
        let l = self.m.create_listing(&seller, nft, price).unwrap();
        (nft, l.listing_id)
    }

    pub fn order(&mut self, price: u64) -> u64 {
        let (_, l) = self.list(price);
        let buyer = self.buyer.clone();
        self.m.place_order(l, &buyer).unwrap().trade_id
    }

    pub fn lzs(&self, a: &AccountId) -> u64 {
        self.m.ledger().balance_of(a, TokenKind::LZS)
    }

    pub fn evidence(&self, truth: Side) -> EvidencePacket {
        EvidencePacket::new("item not as agreed", truth)
    }

    /// Every drawn juror votes `side`; the verdict is tallied now and
    /// becomes final once the appeal window has passed.
    pub fn decide(&mut self, d: DisputeId, side: Side) {
        let jury: Vec<AccountId> = self.m.court().dispute(d).unwrap().jury().iter().map(|j| j.account.clone()).collect();
        for j in &jury {
            self.m.cast_vote(d, j, side).unwrap();
        }
        self.m.tally(d).unwrap();
        let t = self.m.now() + self.m.config().appeal_window + 1;
        self.m.tick(t).unwrap();
    }
}

pub fn scenario() -> hybrid_market::sim::ScenarioConfig {
    hybrid_market::sim::ScenarioConfig::from_json(include_str!("../../scenarios/default.json")).unwrap()
}
