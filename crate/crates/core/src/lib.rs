//! A deterministic peer-to-peer sneaker market: a two-token ledger,
//! non-tradable NFTs bound to physical pairs, escrowed trades, an honesty
//! game with LZSP rewards, a stake-weighted jury court and a refund pool,
//! plus a seeded agent-based simulation that exercises all of it.

pub mod court;
pub mod escrow;
pub mod hash;
pub mod incentive;
pub mod journal;
pub mod ledger;
pub mod market;
pub mod pool;
pub mod rational;
pub mod registry;
pub mod replay;
pub mod sim;
pub mod verify;

pub use market::{Market, MarketConfig, MarketError, SimMarket};
