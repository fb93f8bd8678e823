//! Two time-smoothed learners play the one-dimensional toy GAN; prints the
//! best certified round for several window lengths.

use localregret::games::{simulate_tsogd, toy_gan_game, ToyGanParams};

fn main() -> localregret::Result<()> {
    let game = toy_gan_game(ToyGanParams::default())?;
    for w in [1, 5, 10, 20] {
        let outcome = simulate_tsogd(&game, w, 4 * w)?;
        let report = outcome.certify(&game)?;
        let last = outcome.history.last().expect("nonempty history");
        println!(
            "w={w:>2} T={:>2}: eps={:.4} at round {} (bound {:.4}), final (D, G) = ({:.3}, {:.3})",
            4 * w,
            report.epsilon,
            report.round,
            report.theorem_bound.unwrap_or(f64::NAN),
            last[0][0],
            last[1][0],
        );
    }
    Ok(())
}
