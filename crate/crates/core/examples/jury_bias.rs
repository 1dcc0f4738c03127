//! Compare the empirical honest-win rate of simulated juries with the exact
//! binomial majority probability.

use hybrid_market::court::{derive_seed, honest_win_probability, simulated_vote, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let trials = 20_000u64;
    for (n, q) in [(1, 0.9), (3, 0.9), (5, 0.9), (7, 0.8), (5, 0.6)] {
        let mut wins = 0;
        for t in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[n as u64, t]));
            let right = (0..n)
                .filter(|_| simulated_vote(&mut rng, Side::FavorsBuyer, q) == Side::FavorsBuyer)
                .count();
            if 2 * right > n as usize {
                wins += 1;
            }
        }
        println!(
            "n={n} q={q}: empirical {:.4}, exact {:.5}",
            wins as f64 / trials as f64,
            honest_win_probability(n, q)
        );
    }
}
