//! Broken-line strip `h = 1 - |x|`: the width vanishes at both ends, so the
//! eigenvalues are squeezed between two strictly positive comparison strips.
//!
//!     cargo run --release --example airy_bracket

use thinstrip::asymptotics::{bracket_sweep, MeshPolicy};
use thinstrip::schrodinger1d::TruncationPolicy;
use thinstrip::WidthProfile;

fn main() -> thinstrip::Result<()> {
    let p = WidthProfile::broken_line(1.0, 1.0, 1.0, 1.0, 1.0)?;
    let reports = bracket_sweep(
        &p,
        &[0.2, 0.1, 0.05, 0.025],
        &MeshPolicy::default(),
        1,
        None,
        None,
        TruncationPolicy::default(),
        4,
    )?;
    for r in &reports {
        println!(
            "eps = {:<6} lambda+ = {:.6} <= lambda- = {:.6}  scaled {:.5} / {:.5}  mu_1 = {:.5}",
            r.eps, r.lambda_plus[0], r.lambda_minus[0], r.scaled_plus[0], r.scaled_minus[0], r.mu_ref[0]
        );
    }
    Ok(())
}
