//! Lowest strip eigenvalues on two meshes, the extrapolated values, and the
//! separable oracle for a constant width.
//!
//!     cargo run --example strip_solve [-- out.csv]

use std::f64::consts::PI;

use thinstrip::asymptotics::scaled_residual;
use thinstrip::strip2d::solve_strip_extrapolated;
use thinstrip::WidthProfile;

fn main() -> thinstrip::Result<()> {
    let rect = WidthProfile::constant(1.0, 1.0, 1.0)?;
    let eps = 0.5;
    let s = solve_strip_extrapolated(&rect, eps, 40, 8, 4, 1e-10)?;
    println!("rectangle 2 x {eps}:");
    for (j, l) in s.values.iter().enumerate() {
        let exact = PI * PI * ((j + 1) as f64 / 2.0).powi(2) + (PI / eps).powi(2);
        println!("  lambda_{} = {l:.6} exact {exact:.6} rel {:+.1e}", j + 1, (l - exact) / exact);
    }

    let p = WidthProfile::smooth_poly(2.0, 2.0, 1.0, 1.0, 1.0, 1.0)?;
    let eps = 0.1;
    let s = solve_strip_extrapolated(&p, eps, 128, 24, 3, 1e-10)?;
    println!("\nharmonic profile, eps = {eps}, threshold {:.4}:", p.threshold(eps));
    for j in 0..3 {
        println!(
            "  j = {}: coarse {:.6} fine {:.6} extrapolated {:.6} scaled residual {:.5} (certified below {:.4})",
            j + 1,
            s.coarse.values()[j],
            s.fine.values()[j],
            s.values[j],
            scaled_residual(s.values[j], eps, &p),
            s.fine.certificates[j].shift
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        s.fine.write_csv(0, std::fs::File::create(&path)?)?;
        println!("first mode written to {path}");
    }
    Ok(())
}
