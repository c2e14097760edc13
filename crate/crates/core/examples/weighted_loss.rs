//! Class-balanced cross-entropy: β from the label statistics, then the
//! loss of a few predictions under both weight placements.

use wmhseg::diff::{Array4, Shape4};
use wmhseg::training::{compute_beta, weighted_bce, LossConfig, WeightPlacement};
use wmhseg::volume::Plane;

fn main() -> wmhseg::Result<()> {
    // 25 lesion pixels in a 40x25 slice
    let slice = Plane::new(40, 25, (0..1000).map(|i| i < 25).collect())?;
    let beta = compute_beta([&slice])?;
    println!("beta = {beta}");

    let shape = Shape4::new(1, 1, 1, 4);
    let labels = Array4::from_vec(shape, vec![1.0, 1.0, 0.0, 0.0])?;
    let probs = Array4::from_vec(shape, vec![0.9, 0.4, 0.2, 0.6])?;
    for placement in [WeightPlacement::Paper, WeightPlacement::Swapped] {
        let cfg = LossConfig { placement, ..LossConfig::new(beta)? };
        let (loss, grad) = weighted_bce(&probs, &labels, &cfg)?;
        println!("{placement:?}: weights {:?}, loss {loss:.5}, logit gradient {:?}", cfg.class_weights(), grad.data());
    }
    Ok(())
}
