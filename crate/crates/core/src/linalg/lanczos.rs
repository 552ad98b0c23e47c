use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::{banded_ldlt, SymBanded};
use super::tridiag::{tridiag_eigs, SymTridiagonal};
use super::{axpy, dot, EigenPair, Spectrum};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Upper bound on the Krylov dimension (also capped by `n`).
    pub max_iter: usize,
    /// Seed for the start vector and breakdown restarts.
    pub seed: u64,
    /// Ritz values are re-examined every `check_every` steps.
    pub check_every: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_iter: 400,
            seed: 0x5eed_1a2c,
            check_every: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOutcome {
    /// Eigenpairs above the shift, ascending, vectors with unit `B`-norm.
    pub spectrum: Spectrum,
    /// Relative residuals `||A v - lambda B v||_{B^-1} / |lambda|`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// The `k` generalized eigenvalues of `A v = lambda B v` closest above
/// `sigma`, via Lanczos on `(A - sigma B)^{-1} B` in the `B` inner product.
///
/// `B` must be positive definite. Convergence is declared on true residuals:
/// `||A v - lambda B v||_{B^-1} <= tol * |lambda|`.
pub fn shift_invert_lanczos(
    a: &SymBanded,
    b: &SymBanded,
    sigma: f64,
    k: usize,
    tol: f64,
) -> Result<Spectrum> {
    shift_invert_lanczos_with(a, b, sigma, k, tol, &LanczosOptions::default()).map(|o| o.spectrum)
}

pub fn shift_invert_lanczos_with(
    a: &SymBanded,
    b: &SymBanded,
    sigma: f64,
    k: usize,
    tol: f64,
    opts: &LanczosOptions,
) -> Result<LanczosOutcome> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::InvalidArgument(format!(
            "A is {n}x{n} but B is {0}x{0}",
            b.n()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= {n}, got {k}")));
    }
    let op = banded_ldlt(a, sigma, Some(b))?;
    let bfac = banded_ldlt(b, 0.0, None)?;
    if bfac.inertia() != 0 {
        return Err(Error::InvalidArgument("B is not positive definite".into()));
    }

    let max_iter = opts.max_iter.max(k + 2).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut bq: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let b_orthogonalize = |r: &mut Vec<f64>, q: &[Vec<f64>], bq: &[Vec<f64>]| {
        for _ in 0..2 {
            for (qi, bqi) in q.iter().zip(bq) {
                let c = dot(bqi, r);
                axpy(-c, qi, r);
            }
        }
    };

    let mut r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut scale = 0.0_f64;
    let mut last_ritz: Vec<(f64, f64)> = Vec::new();

    for j in 0..max_iter {
        let mut br = b.matvec(&r);
        let mut nrm = dot(&r, &br).max(0.0).sqrt();
        if j > 0 {
            if nrm <= 1e-12 * scale {
                // invariant subspace found: continue from a fresh direction
                r = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                b_orthogonalize(&mut r, &q, &bq);
                br = b.matvec(&r);
                let fresh = dot(&r, &br).max(0.0).sqrt();
                if fresh == 0.0 {
                    break;
                }
                beta.push(0.0);
                nrm = fresh;
            } else {
                beta.push(nrm);
            }
        }
        r.iter_mut().for_each(|v| *v /= nrm);
        br.iter_mut().for_each(|v| *v /= nrm);
        q.push(std::mem::take(&mut r));
        bq.push(br);

        let mut w = op.solve(&bq[j]);
        let aj = dot(&bq[j], &w);
        alpha.push(aj);
        axpy(-aj, &q[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &q[j - 1], &mut w);
        }
        b_orthogonalize(&mut w, &q, &bq);
        scale = scale.max(aj.abs());
        r = w;

        let m = j + 1;
        let exhausted = m == max_iter;
        if m < k || (!exhausted && (m - k) % opts.check_every.max(1) != 0) {
            continue;
        }
        let bnext = dot(&r, &b.matvec(&r)).max(0.0).sqrt();
        let neg = SymTridiagonal::new(
            alpha.iter().map(|v| -v).collect(),
            beta.iter().map(|v| -v).collect(),
        )?;
        let ritz = tridiag_eigs(&neg, m)?;
        let mut cand: Vec<(f64, Vec<f64>, f64)> = ritz
            .pairs
            .iter()
            .filter(|p| -p.value > 0.0)
            .take(k)
            .map(|p| {
                let theta = -p.value;
                let est = (bnext * p.vector[m - 1]).abs() / theta;
                (theta, p.vector.clone(), est)
            })
            .collect();
        last_ritz = cand.iter().map(|c| (sigma + 1.0 / c.0, c.2)).collect();
        if cand.len() < k {
            continue;
        }
        if !exhausted && cand.iter().any(|c| c.2 > tol) {
            continue;
        }

        let mut pairs = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        for (_, s, _) in cand.drain(..) {
            let mut v = vec![0.0; n];
            for (qi, si) in q.iter().zip(&s) {
                axpy(*si, qi, &mut v);
            }
            // One more application of the operator damps the rounding noise
            // that the small Ritz values leave in the stiff directions.
            let mut v = op.solve(&b.matvec(&v));
            let bv = b.matvec(&v);
            let vn = dot(&v, &bv).sqrt();
            v.iter_mut().for_each(|x| *x /= vn);
            let bv = b.matvec(&v);
            let av = a.matvec(&v);
            let lambda = dot(&v, &av);
            let mut res = av;
            axpy(-lambda, &bv, &mut res);
            let binv_res = bfac.solve(&res);
            let rnorm = dot(&res, &binv_res).max(0.0).sqrt();
            residuals.push(rnorm / lambda.abs().max(f64::MIN_POSITIVE));
            pairs.push(EigenPair { value: lambda, vector: v });
        }
        last_ritz = pairs
            .iter()
            .zip(&residuals)
            .map(|(p, r)| (p.value, *r))
            .collect();
        if residuals.iter().all(|&r| r <= tol) {
            log::debug!("lanczos converged: {m} steps, residuals {residuals:?}");
            let near_degenerate = (1..pairs.len())
                .filter(|&i| {
                    let (lo, hi) = (pairs[i - 1].value, pairs[i].value);
                    hi - lo <= 1e-10 * hi.abs().max(lo.abs())
                })
                .map(|i| i - 1)
                .collect();
            return Ok(LanczosOutcome {
                spectrum: Spectrum {
                    pairs,
                    near_degenerate,
                },
                residuals,
                iterations: m,
            });
        }
    }
    Err(Error::LanczosNoConvergence {
        iterations: q.len(),
        ritz: last_ritz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_lowest_modes() {
        let n = 300;
        let h = PI / (n as f64 + 1.0);
        let t = SymTridiagonal::new(vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1]).unwrap();
        let a = SymBanded::from_tridiagonal(&t);
        let b = SymBanded::identity(n);
        let out = shift_invert_lanczos_with(&a, &b, 0.0, 4, 1e-10, &LanczosOptions::default()).unwrap();
        for j in 1..=4 {
            let exact = 4.0 / (h * h) * (0.5 * j as f64 * h).sin().powi(2);
            assert!((out.spectrum.value(j - 1) - exact).abs() < 1e-9 * exact);
        }
        assert!(out.residuals.iter().all(|r| *r <= 1e-10));
    }

    #[test]
    fn diagonal_generalized_problem() {
        let n = 40;
        let ad: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
        let bd: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (i % 3) as f64).collect();
        let a = SymBanded::diagonal(&ad);
        let b = SymBanded::diagonal(&bd);
        let mut exact: Vec<f64> = ad.iter().zip(&bd).map(|(x, y)| x / y).collect();
        exact.sort_by(f64::total_cmp);
        let sigma = 0.1;
        let s = shift_invert_lanczos(&a, &b, sigma, 5, 1e-10).unwrap();
        for j in 0..5 {
            assert!((s.value(j) - exact[j]).abs() < 1e-8 * exact[j], "{j}: {} vs {}", s.value(j), exact[j]);
            let v = s.vector(j);
            let bn = dot(v, &b.matvec(v));
            assert!((bn - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn small_problem_exhausts_krylov_space() {
        let a = SymBanded::diagonal(&[3.0, 1.0, 2.0]);
        let b = SymBanded::identity(3);
        let s = shift_invert_lanczos(&a, &b, 0.0, 3, 1e-10).unwrap();
        let v = s.values();
        for (x, y) in v.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
