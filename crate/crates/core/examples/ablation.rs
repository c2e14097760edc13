//! Residual versus plain U-Net on the lesion task with identical data,
//! seeds and optimisation settings.
//!
//!     cargo run --release --example ablation -- 496

use wmhseg::cli::ablation::{run_ablation, AblationConfig};
use wmhseg::phantom::{generate_dataset, PhantomConfig};
use wmhseg::training::TrainConfig;

fn main() -> wmhseg::Result<()> {
    let budget: usize = std::env::args().nth(1).map_or(496, |s| s.parse().expect("iteration budget"));
    let cases = generate_dataset(&PhantomConfig::default(), 10, 0)?;
    let cfg = AblationConfig {
        train: TrainConfig { learning_rate: 0.02, epochs: 31, max_iterations: Some(budget), ..Default::default() },
        ..Default::default()
    };
    let outcome = run_ablation(&cases, &cfg)?;
    let r = &outcome.report;
    for v in [&r.plain, &r.residual] {
        println!(
            "{:<10} {:>7} params  dice {:.4}  f1 {:.4}  {} false-positive lesions",
            v.variant, v.parameter_count, v.validation.dice, v.validation.f1, v.false_positive_components
        );
    }
    println!("residual minus plain dice: {:+.4}", r.dice_gain);
    Ok(())
}
