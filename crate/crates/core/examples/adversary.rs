//! Mean local regret of time-smoothed OGD against the randomized adversary,
//! next to the lower bound `⌊T/(2w)⌋/(4w)`.

use localregret::adversary::{self, AdversarySequence, ADVERSARY_CONSTANTS};
use localregret::minimizers::{OnlineLearner, Tsogd, TsogdConfig};
use localregret::parallel::Execution;

fn main() -> localregret::Result<()> {
    let (horizon, seeds) = (200, 500);
    for w in [1, 2, 5, 10] {
        let regrets = Execution::default().try_map(seeds, |seed| {
            let seq = adversary::generate(horizon, w, seed as u64)?;
            let config = TsogdConfig::new(AdversarySequence::body(), w).eta(1.0).delta(1.0);
            let mut learner = Tsogd::new(config, ADVERSARY_CONSTANTS)?;
            for f in seq.to_losses() {
                learner.observe(f)?;
            }
            Ok(learner.ledger().regret())
        })?;
        let mean = regrets.iter().sum::<f64>() / seeds as f64;
        let bound = adversary::expected_lower_bound(horizon, w)?;
        println!("w={w:>2}: mean regret {mean:>8.4}, lower bound {bound:>8.4}");
    }
    Ok(())
}
