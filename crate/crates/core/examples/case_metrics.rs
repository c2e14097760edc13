//! The five challenge metrics for one prediction against its reference,
//! with a deliberately shifted and partly missed lesion set.

use wmhseg::metrics::{evaluate_case, lesion_counts};
use wmhseg::morphology::LESION_CONNECTIVITY;
use wmhseg::phantom::{generate_case, PhantomConfig};
use wmhseg::volume::Volume;

fn main() -> wmhseg::Result<()> {
    let case = generate_case(&PhantomConfig::default(), 7)?;
    let gt = &case.wmh_truth;
    let [nx, ny, nz] = gt.dims();

    // shift every lesion one voxel in x, drop the first lesion, add a false positive
    let mut pred = Volume::filled(*gt.grid(), false);
    for z in 0..nz {
        for y in 0..ny {
            for x in 1..nx {
                pred.set(x, y, z, gt.get(x - 1, y, z));
            }
        }
    }
    let [cx, cy, cz] = case.lesion_centres[0];
    for z in cz.saturating_sub(3)..(cz + 4).min(nz) {
        for y in cy.saturating_sub(8)..(cy + 9).min(ny) {
            for x in cx.saturating_sub(8)..(cx + 9).min(nx) {
                pred.set(x, y, z, false);
            }
        }
    }
    pred.set(2, 2, 0, true);

    let m = evaluate_case(&pred, gt)?;
    let c = lesion_counts(&pred, gt, LESION_CONNECTIVITY)?;
    println!("dice           {:.4}", m.dice);
    println!("h95            {} mm", m.h95.map_or("undefined".into(), |h| format!("{h:.3}")));
    println!("avd            {} %", m.avd.map_or("undefined".into(), |a| format!("{a:.2}")));
    println!("lesion recall  {:.4} ({} of {} detected)", m.recall, c.gt_detected, c.gt_components);
    println!("lesion f1      {:.4} ({} false-positive components)", m.f1, c.false_positive_components());
    Ok(())
}
