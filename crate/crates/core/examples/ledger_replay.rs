//! Build a small ledger, export it as JSON Lines, read it back and re-derive
//! the balances.

use hybrid_market::ledger::{export_jsonl, import_jsonl, AccountId, Holder, Ledger, TokenKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alice = AccountId::new("alice")?;
    let bob = AccountId::new("bob")?;
    let mut ledger = Ledger::new();
    ledger.mint(1, &alice, TokenKind::LZS, 1_000)?;
    ledger.transfer(2, Holder::from(&alice), Holder::from(&bob), TokenKind::LZS, 250)?;
    ledger.stake(3, &bob, 50)?;
    ledger.escrow_lock(4, &alice, 1, 300)?;
    ledger.escrow_release(5, 1, Holder::from(&bob), 300)?;

    let mut buf = Vec::new();
    export_jsonl(ledger.events(), &mut buf)?;
    print!("{}", String::from_utf8_lossy(&buf));

    let events = import_jsonl(buf.as_slice())?;
    let sheet = Ledger::replay(&events)?;
    assert_eq!(&sheet, ledger.sheet());
    println!(
        "alice {} LZS, bob {} LZS free + {} staked, supply {}",
        sheet.free(&alice, TokenKind::LZS),
        sheet.free(&bob, TokenKind::LZS),
        sheet.staked(&bob),
        sheet.supply(TokenKind::LZS)
    );
    println!("conservation violation: {:?}", sheet.conservation_violation());

    let overdraw = ledger.transfer(6, Holder::from(&bob), Holder::from(&alice), TokenKind::LZS, 10_000);
    println!("overdraw rejected: {}", overdraw.unwrap_err());
    Ok(())
}
