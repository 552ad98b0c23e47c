//! Check the width conditions for the bundled profiles and a bad one.
//!
//!     cargo run --example validate_profile

use thinstrip::profile::Piece;
use thinstrip::WidthProfile;

fn main() -> thinstrip::Result<()> {
    let profiles = [
        ("harmonic", WidthProfile::smooth_poly(2.0, 2.0, 1.0, 1.0, 1.0, 1.0)?),
        ("broken line", WidthProfile::broken_line(1.0, 1.0, 1.0, 1.0, 1.0)?),
        ("asymmetric", WidthProfile::smooth_poly(1.5, 2.0, 0.5, 2.0, 0.8, 1.5)?),
        // right piece dips to 7/16 at x = 1.5 and climbs back to M at x = 3
        (
            "two maxima",
            WidthProfile::custom(
                1.0,
                2.0,
                1.0,
                1.0,
                1.0,
                3.0,
                vec![
                    Piece { start: -1.0, end: 0.0, terms: vec![(1.0, 0.0), (-1.0, 2.0)] },
                    Piece { start: 0.0, end: 3.0, terms: vec![(1.0, 0.0), (-1.0, 2.0), (2.0 / 3.0, 3.0), (-1.0 / 9.0, 4.0)] },
                ],
            )?,
        ),
    ];
    for (name, p) in &profiles {
        let r = p.validate(2000);
        println!(
            "{name:12} passed={} positivity={:?} alpha={} sigma={:?} K={:.3e}",
            r.passed,
            r.positivity,
            p.alpha(),
            r.sigma,
            r.remainder_bound
        );
        for v in &r.violations {
            println!("    {v}");
        }
    }
    Ok(())
}
