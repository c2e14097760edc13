//! Connected components, largest-component selection, dilation and border
//! extraction on a small hand-drawn mask.

use wmhseg::morphology::{border_voxels, connected_components, dilate, largest_component, Connectivity};
use wmhseg::volume::{Grid, Volume};

fn main() -> wmhseg::Result<()> {
    let grid = Grid::new([10, 8, 1], [1.0; 3])?;
    let mut m = Volume::filled(grid, false);
    // a 3x3 block, a diagonal pair and an isolated voxel
    for (x, y) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2), (1, 3), (2, 3), (3, 3), (6, 5), (7, 6), (8, 1)] {
        m.set(x, y, 0, true);
    }
    for conn in [Connectivity::Face6, Connectivity::Vertex26] {
        let labels = connected_components(&m, conn);
        println!("{conn:?}: {} components, sizes {:?}", labels.count, labels.sizes());
    }
    let core = largest_component(&m, Connectivity::Face6)?;
    let grown = dilate(&core, 1, Connectivity::Planar4);
    println!("largest component {} voxels, after one planar dilation {}", core.count(), grown.count());
    println!("border voxels of the grown component: {}", border_voxels(&grown).len());
    for y in 0..8 {
        let row: String = (0..10).map(|x| if grown.get(x, y, 0) { '#' } else if m.get(x, y, 0) { 'o' } else { '.' }).collect();
        println!("  {row}");
    }
    Ok(())
}
