//! Print the numeric payoff matrix for the default parameters and for a
//! variant without reputation, with equilibria and constraint checks.

use hybrid_market::incentive::{reward_amount, PayoffMatrix, UtilityParams};
use hybrid_market::rational::{display, int};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let defaults = UtilityParams::default();
    println!("{}", PayoffMatrix::new(&defaults)?.render());

    let no_reputation = UtilityParams {
        reputation_weight: int(0),
        ..defaults.clone()
    };
    println!("without reputation:\n{}", PayoffMatrix::new(&no_reputation)?.render());

    for alpha in [10, 50, 90, 100] {
        println!("eta(1000, {alpha}, 100) = {}", display(&reward_amount(int(1000), alpha, 100)?));
    }

    let broken = UtilityParams {
        reputation_weight: int(-100),
        ..defaults
    };
    match PayoffMatrix::new(&broken)?.check_honesty() {
        Ok(()) => println!("honesty holds"),
        Err(failed) => failed.iter().for_each(|c| println!("{c}")),
    }
    Ok(())
}
