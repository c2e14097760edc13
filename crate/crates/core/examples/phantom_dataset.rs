//! Generate a reproducible synthetic dataset and write it as NIfTI files.
//!
//!     cargo run --release --example phantom_dataset -- /tmp/phantoms 10

use std::path::PathBuf;

use wmhseg::phantom::{generate_dataset, write_dataset, PhantomConfig};

fn main() -> wmhseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "phantoms".into()));
    let n: usize = args.next().map_or(10, |s| s.parse().expect("case count"));

    let cfg = PhantomConfig::default();
    let cases = generate_dataset(&cfg, n, 0)?;
    for c in &cases {
        println!(
            "{}: {} lesions, {} lesion voxels, {} white-matter voxels",
            c.id,
            c.lesion_count,
            c.wmh_truth.count(),
            c.wm_truth.count()
        );
    }
    let manifest = write_dataset(&out, &cfg, 0, &cases)?;
    println!("wrote {} cases to {} (sha256 {})", manifest.cases.len(), out.display(), manifest.hash);
    Ok(())
}
