//! Compare analytic and finite-difference gradients for every operator and
//! for a small residual U-Net.

use wmhseg::selfcheck::{run_selfcheck, SelfCheckConfig};

fn main() -> wmhseg::Result<()> {
    let cfg = SelfCheckConfig::default();
    let report = run_selfcheck(&cfg)?;
    for c in &report.checks {
        println!("{:<36} {:>10.3e}  {}", c.name, c.report.max_rel_error, if c.report.passed { "ok" } else { "FAIL" });
    }
    println!("worst relative error {:.3e} (tolerance {:.0e}): {}", report.max_rel_error, report.tolerance, if report.passed { "passed" } else { "failed" });
    Ok(())
}
