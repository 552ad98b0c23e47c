//! Limit operator `H = -d^2 + q` against its closed forms, and the reduced
//! operator `Q_eps` drifting toward it as eps shrinks.
//!
//!     cargo run --example spectra_1d

use std::f64::consts::PI;

use thinstrip::asymptotics::MeshPolicy;
use thinstrip::schrodinger1d::{harmonic_oracle, scaled_q_spectrum, solve_h, TruncationPolicy};
use thinstrip::WidthProfile;

fn main() -> thinstrip::Result<()> {
    // c = 4 kappa / pi^2 with M = 2 makes q = kappa x^2
    for kappa in [1.0, PI * PI / 4.0, 4.0] {
        let p = WidthProfile::smooth_poly(2.0, 2.0, 4.0 * kappa / (PI * PI), 4.0 * kappa / (PI * PI), 1.0, 1.0)?;
        let sol = solve_h(&p, 5, TruncationPolicy::default(), 4000)?;
        print!("kappa = {kappa:.4}:");
        for j in 0..5 {
            let exact = harmonic_oracle(kappa, j + 1);
            print!(" {:.9} ({:+.1e})", sol.value(j), (sol.value(j) - exact) / exact);
        }
        println!();
    }

    let p = WidthProfile::smooth_poly(2.0, 2.0, 1.0, 1.0, 1.0, 1.0)?;
    let mu = solve_h(&p, 3, TruncationPolicy::default(), 4000)?.values();
    println!("\nmu = {mu:.6?}");
    println!("{:>8} {:>12} {:>12} {:>12}", "eps", "eps Q_1", "eps Q_2", "eps Q_3");
    let policy = MeshPolicy::default();
    for eps in [0.2, 0.1, 0.05, 0.025] {
        let n = policy.nx_for(&p, eps)? - 1;
        let s = scaled_q_spectrum(&p, eps, n, 3)?;
        println!("{eps:>8} {:>12.6} {:>12.6} {:>12.6}", s[0], s[1], s[2]);
    }
    Ok(())
}
