//! Write a float volume and a mask as NIfTI-1, read them back, and show
//! what the header parser sees.

use wmhseg::volume::nifti::{encode, parse_header, read_mask, read_nifti, write_mask, write_nifti, Datatype};
use wmhseg::volume::{Grid, Volume};

fn main() -> wmhseg::Result<()> {
    let dir = tempfile::tempdir()?;
    let grid = Grid::new([8, 6, 3], [0.9375, 0.9375, 3.0])?;
    let ramp = Volume::from_vec(grid, (0..grid.len()).map(|i| i as f32 / 7.0).collect())?;

    let path = dir.path().join("ramp.nii");
    write_nifti(&ramp, &path, Datatype::Float32)?;
    let back = read_nifti(&path)?;
    let exact = back.data().iter().zip(ramp.data()).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("float32 round trip bit-exact: {exact}");

    let header = parse_header(&encode(&ramp, Datatype::Float32)?)?;
    println!("header: dims {:?}, spacing {:?} mm, datatype {:?}, data at byte {}", header.dims, header.pixdim, header.datatype, header.vox_offset);

    let mask = ramp.map(|v| v > 10.0);
    let mpath = dir.path().join("mask.nii");
    write_mask(&mask, &mpath)?;
    println!("mask of {} voxels stored in {} bytes", read_mask(&mpath)?.count(), std::fs::metadata(&mpath)?.len());

    let mut bad = std::fs::read(&path)?;
    bad[344..348].copy_from_slice(b"ni1\0");
    match wmhseg::volume::nifti::decode(&bad) {
        Err(e) => println!("two-file NIfTI rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
