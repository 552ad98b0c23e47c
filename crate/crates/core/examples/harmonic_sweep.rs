//! Two-term asymptotics along an eps sweep: the scaled residual of the
//! strip and of `Q_eps` both approach `mu_j`.
//!
//!     cargo run --release --example harmonic_sweep [-- jobs]

use thinstrip::asymptotics::{fit_rate, sweep, MeshPolicy};
use thinstrip::schrodinger1d::TruncationPolicy;
use thinstrip::WidthProfile;

fn main() -> thinstrip::Result<()> {
    let jobs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let p = WidthProfile::smooth_poly(2.0, 2.0, 1.0, 1.0, 1.0, 1.0)?;
    let eps = [0.2, 0.1, 0.05, 0.025];
    let table = sweep(&p, &eps, &[1, 2], &MeshPolicy::default(), TruncationPolicy::default(), jobs)?;
    println!("{:>6} {:>2} {:>12} {:>12} {:>12} {:>10}", "eps", "j", "scaled 2d", "scaled Q", "mu", "dist");
    for r in &table.records {
        println!(
            "{:>6} {:>2} {:>12.6} {:>12.6} {:>12.6} {:>10.2e}",
            r.eps,
            r.j,
            r.scaled_residual_2d,
            r.scaled_q,
            r.mu_ref,
            r.eigfun_dist.unwrap_or(f64::NAN)
        );
    }
    for j in [1, 2] {
        let recs = table.for_j(j);
        let xs: Vec<f64> = recs.iter().map(|r| r.eps).collect();
        let err: Vec<f64> = recs.iter().map(|r| (r.scaled_residual_2d - r.mu_ref).abs()).collect();
        let fit = fit_rate(&xs, &err)?;
        println!("j = {j}: |scaled - mu| ~ eps^{:.3} (r^2 = {:.5})", fit.slope, fit.r_squared);
    }
    Ok(())
}
