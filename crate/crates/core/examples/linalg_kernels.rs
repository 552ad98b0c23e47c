//! The dense-free kernels underneath the solvers: tridiagonal bisection,
//! banded LDL^T inertia and shift-invert Lanczos on a generalized pencil.
//!
//!     cargo run --example linalg_kernels

use std::f64::consts::PI;

use thinstrip::linalg::{banded_ldlt, shift_invert_lanczos, tridiag_eigs, SymBanded, SymTridiagonal};

fn main() -> thinstrip::Result<()> {
    // -u'' on (0, pi) with n interior nodes
    let n = 200;
    let h = PI / (n + 1) as f64;
    let t = SymTridiagonal::new(vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1])?;
    let spec = tridiag_eigs(&t, 4)?;
    for j in 0..4 {
        let exact = 4.0 / (h * h) * (0.5 * (j + 1) as f64 * h).sin().powi(2);
        println!("tridiag  j = {} {:.12} exact {:.12}", j + 1, spec.value(j), exact);
    }
    println!("sturm count below 10: {}", t.sturm_count(10.0));

    let a = SymBanded::from_tridiagonal(&t);
    let f = banded_ldlt(&a, 10.0, None)?;
    println!("LDL^T inertia at 10: {}", f.inertia());

    // pencil (A, B) with a lumped mass B = h I
    let b = SymBanded::diagonal(&vec![h; n]);
    let a_scaled = SymBanded::from_tridiagonal(&SymTridiagonal::new(vec![2.0 / h; n], vec![-1.0 / h; n - 1])?);
    let pairs = shift_invert_lanczos(&a_scaled, &b, 0.5, 3, 1e-10)?;
    println!("lanczos {:.10?}", pairs.values());
    Ok(())
}
