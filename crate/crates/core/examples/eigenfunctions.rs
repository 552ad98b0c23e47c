//! Eigenfunction comparisons: projected strip mode vs `Q_eps` mode, and
//! `Q_eps` mode vs the rescaled limit mode.
//!
//!     cargo run --release --example eigenfunctions

use thinstrip::asymptotics::{eigfun_distance_h, fit_rate, solve_at, MeshPolicy};
use thinstrip::schrodinger1d::{solve_h, TruncationPolicy};
use thinstrip::WidthProfile;

fn main() -> thinstrip::Result<()> {
    let p = WidthProfile::smooth_poly(2.0, 2.0, 1.0, 1.0, 1.0, 1.0)?;
    let policy = MeshPolicy::default();
    let solh = solve_h(&p, 1, TruncationPolicy::default(), policy.h_points)?;
    let eps = [0.2, 0.1, 0.05, 0.025];
    let mut dq = Vec::new();
    let mut dh = Vec::new();
    for &e in &eps {
        let s = solve_at(&p, e, 1, &policy)?;
        let d = s.eigfun_distance(0)?;
        let lim = eigfun_distance_h(&s.q_fine, &solh, &p, e, 0)?;
        println!("eps = {e:<6} strip vs Q {d:.3e}   Q vs limit {:.4e} (leak {:.1e})", lim.distance, lim.leak);
        dq.push(d);
        dh.push(lim.distance);
    }
    println!("rates: strip vs Q {:.2}, Q vs limit {:.2}", fit_rate(&eps, &dq)?.slope, fit_rate(&eps, &dh)?.slope);
    Ok(())
}
