//! The full two-stage workflow in-process: phantoms, white-matter network,
//! lesion network on the white-matter output, then segmentation and scoring.
//!
//!     cargo run --release --example train_and_segment            # ~2 min on one core
//!     cargo run --release --example train_and_segment -- 60      # iteration budget

use wmhseg::arch::{build_resunet, build_trimmed_unet, RESUNET_DEPTH, TRIMMED_UNET_DEPTH};
use wmhseg::metrics::summarize;
use wmhseg::phantom::{generate_dataset, PhantomConfig};
use wmhseg::pipeline::{run_pipeline, wm_training_case, wmh_training_cases, CaseInput, Models, PipelineConfig, WmSource};
use wmhseg::training::{train, TrainConfig, WeightPlacement};

fn main() -> wmhseg::Result<()> {
    let budget: usize = std::env::args().nth(1).map_or(500, |s| s.parse().expect("iteration budget"));
    let cases = generate_dataset(&PhantomConfig::default(), 10, 0)?;
    let cfg = TrainConfig { learning_rate: 0.02, epochs: 31, max_iterations: Some(budget), ..Default::default() };
    let pipeline = PipelineConfig::default();

    let wm_cases = cases.iter().map(wm_training_case).collect::<wmhseg::Result<Vec<_>>>()?;
    let (wm, h) = train(build_trimmed_unet(1, 4, TRIMMED_UNET_DEPTH)?, &wm_cases, &cfg, WeightPlacement::Paper, None)?;
    println!("white matter: {} iterations, validation dice {:.4}", h.iterations, h.final_validation_dice().unwrap_or(f64::NAN));

    let wmh_cases = wmh_training_cases(&cases, WmSource::Model(&wm), &pipeline)?;
    let (wmh, h) = train(build_resunet(2, 4, RESUNET_DEPTH)?, &wmh_cases, &cfg, WeightPlacement::Paper, None)?;
    println!("lesions:      {} iterations, validation dice {:.4} (beta {:.4})", h.iterations, h.final_validation_dice().unwrap_or(f64::NAN), h.beta);

    let models = Models { wm, wmh };
    let mut metrics = Vec::new();
    for id in &h.validation_cases {
        let case = cases.iter().find(|c| &c.id == id).expect("validation ids come from the dataset");
        let out = run_pipeline(&CaseInput::from(case), &models, &pipeline)?;
        let m = out.report.metrics.expect("phantoms carry a lesion truth");
        println!(
            "{id}: dice {:.3}, h95 {:?} mm, avd {:?} %, recall {:.2}, f1 {:.2}, {:.0} mm3 of lesion",
            m.dice, m.h95, m.avd, m.recall, m.f1, out.report.wmh_volume_mm3
        );
        metrics.push(m);
    }
    let s = summarize("phantom", &metrics)?;
    println!("validation mean: dice {:.4}, h95 {:.2}, avd {:.2}, recall {:.3}, f1 {:.3}", s.dice, s.h95, s.avd, s.recall, s.f1);
    Ok(())
}
