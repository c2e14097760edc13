//! A residual block with a zeroed residual path passes its input through
//! unchanged; the network builders report their sizes at full (64-channel) width.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmhseg::arch::{build_resunet, build_trimmed_unet, residual_block_forward, BlockKind, Network, ResidualBlock, ResidualBlockSpec, PAPER_BASE_WIDTH};
use wmhseg::diff::{Array4, ParamStore, Shape4};

fn main() -> wmhseg::Result<()> {
    let x = Array4::randn(Shape4::new(1, 4, 6, 6), 1.0, &mut ChaCha8Rng::seed_from_u64(0)).map(f64::abs);
    let mut store = ParamStore::new();
    let spec = ResidualBlockSpec { force_projection: false, ..ResidualBlockSpec::residual(4, 4) };
    let block = ResidualBlock::register(spec, &mut store, "demo");
    let y = residual_block_forward(&x, &block, &store)?;
    println!("zero residual path, identity skip: output == input is {}", y.bit_identical(&x));

    for (name, spec) in [
        ("ResU-Net (lesions)", build_resunet(2, PAPER_BASE_WIDTH, 4)?),
        ("plain U-Net (lesions)", build_resunet(2, PAPER_BASE_WIDTH, 4)?.with_block(BlockKind::Plain)),
        ("trimmed U-Net (white matter)", build_trimmed_unet(1, PAPER_BASE_WIDTH, 3)?),
    ] {
        let net = Network::new(spec)?;
        println!("{name:<30} channels {:?}, {} parameters", spec.channel_sequence(), net.parameter_count());
    }
    Ok(())
}
