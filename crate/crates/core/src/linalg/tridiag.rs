use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, norm2, EigenPair, Spectrum};
use crate::error::{Error, Result};

const MAX_BISECTION_STEPS: usize = 256;
const MAX_INVERSE_ITERATIONS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("tridiagonal matrix needs n >= 1".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(format!(
                "offdiag has length {}, expected {}",
                offdiag.len(),
                diag.len() - 1
            )));
        }
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        Ok(SymTridiagonal { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.offdiag[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.offdiag[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.offdiag[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.offdiag[i - 1].abs();
            }
            if i + 1 < n {
                r += self.offdiag[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn pivmin(&self) -> f64 {
        let e2 = self.offdiag.iter().map(|e| e * e).fold(1.0, f64::max);
        f64::MIN_POSITIVE * e2
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn sturm_count(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut d = self.diag[0] - x;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.n() {
            let e = self.offdiag[i - 1];
            d = (self.diag[i] - x) - e * e / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection, starting
    /// from the bracket `[lo, hi]`.
    fn bisect(&self, index: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
        let floor = 2.0 * f64::EPSILON * self.norm_inf() + self.pivmin();
        for _ in 0..MAX_BISECTION_STEPS {
            let width = hi - lo;
            if width <= (4.0 * f64::EPSILON * lo.abs().max(hi.abs())).max(floor) {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::Bisection {
            index,
            lo,
            hi,
            iterations: MAX_BISECTION_STEPS,
        })
    }

    fn enclosure(&self) -> (f64, f64) {
        let (lo, hi) = self.gershgorin();
        let pad = 2.0 * f64::EPSILON * self.norm_inf() + 2.0 * self.pivmin();
        (lo - pad - f64::EPSILON * lo.abs(), hi + pad + f64::EPSILON * hi.abs())
    }

    /// The `k` smallest eigenvalues, ascending.
    pub fn eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        let n = self.n();
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!("need 1 <= k <= {n}, got {k}")));
        }
        let (mut lo, hi) = self.enclosure();
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let v = self.bisect(i, lo, hi)?;
            out.push(v);
            lo = lo.max(v - 4.0 * f64::EPSILON * v.abs().max(self.norm_inf()));
        }
        Ok(out)
    }

    /// Solve `(T - shift) x = rhs` by LU with partial pivoting; tiny pivots
    /// are replaced so nearly singular shifts still produce a direction.
    fn shifted_solver(&self, shift: f64) -> ShiftedLu {
        let n = self.n();
        let tiny = f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE);
        let mut d: Vec<f64> = self.diag.iter().map(|a| a - shift).collect();
        let mut du = self.offdiag.clone();
        let mut dl = self.offdiag.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < tiny {
                    d[i] = if d[i] < 0.0 { -tiny } else { tiny };
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1].abs() < tiny {
            d[n - 1] = if d[n - 1] < 0.0 { -tiny } else { tiny };
        }
        ShiftedLu {
            d,
            du,
            du2,
            dl,
            swapped,
        }
    }
}

struct ShiftedLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn solve(&self, x: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = x[i] - self.dl[i] * x[i + 1];
                x[i] = x[i + 1];
                x[i + 1] = temp;
            } else {
                x[i + 1] -= self.dl[i] * x[i];
            }
        }
        x[n - 1] /= self.d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
    }
}

/// The `k` smallest eigenpairs of `t`: Sturm bisection for the values,
/// inverse iteration for the vectors (unit Euclidean norm).
///
/// The count of eigenvalues below `(lambda_k + lambda_{k+1}) / 2` is checked
/// to equal `k`.
pub fn tridiag_eigs(t: &SymTridiagonal, k: usize) -> Result<Spectrum> {
    let n = t.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= {n}, got {k}")));
    }
    let want = if k < n { k + 1 } else { k };
    let mut values = t.eigenvalues(want)?;
    let next = if k < n { values.pop() } else { None };

    let norm = t.norm_inf().max(f64::MIN_POSITIVE);
    if let Some(next) = next {
        let last = values[k - 1];
        if next > last {
            let mid = 0.5 * (last + next);
            let found = t.sturm_count(mid);
            if found != k {
                return Err(Error::Inertia {
                    shift: mid,
                    found,
                    expected: k,
                });
            }
        }
    }

    let cluster_tol = 1e-3 * norm;
    let coincide = 1e3 * f64::EPSILON * norm;
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(k);
    let mut near_degenerate = Vec::new();
    let mut cluster_start = 0;
    let mut prev_shift = f64::NEG_INFINITY;
    for (i, &lambda) in values.iter().enumerate() {
        if i > 0 {
            if lambda - values[i - 1] > cluster_tol {
                cluster_start = i;
            }
            if lambda - values[i - 1] <= coincide {
                near_degenerate.push(i - 1);
            }
        }
        let mut shift = lambda;
        let sep = 10.0 * f64::EPSILON * norm;
        if shift - prev_shift < sep {
            shift = prev_shift + sep;
        }
        prev_shift = shift;

        let lu = t.shifted_solver(shift);
        let mut rng = ChaCha8Rng::seed_from_u64(0x7d1a_0000 + i as u64);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cluster = &pairs[cluster_start..i];
        for _ in 0..MAX_INVERSE_ITERATIONS {
            for p in cluster {
                let c = dot(&p.vector, &x);
                axpy(-c, &p.vector, &mut x);
            }
            let nrm = norm2(&x);
            x.iter_mut().for_each(|v| *v /= nrm);
            let mut y = x.clone();
            lu.solve(&mut y);
            for p in cluster {
                let c = dot(&p.vector, &y);
                axpy(-c, &p.vector, &mut y);
            }
            let nrm = norm2(&y);
            y.iter_mut().for_each(|v| *v /= nrm);
            x = y;
            let tx = t.matvec(&x);
            let rq = dot(&x, &tx);
            let res: f64 = tx
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - rq * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if res <= 1e3 * f64::EPSILON * norm {
                break;
            }
        }
        pairs.push(EigenPair {
            value: lambda,
            vector: x,
        });
    }
    Ok(Spectrum {
        pairs,
        near_degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_by_two() {
        let t = SymTridiagonal::new(vec![2.0, 2.0], vec![-1.0]).unwrap();
        let s = tridiag_eigs(&t, 2).unwrap();
        assert!((s.value(0) - 1.0).abs() < 1e-13);
        assert!((s.value(1) - 3.0).abs() < 1e-13);
        let v = s.vector(0);
        assert!((v[0].abs() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((v[0] - v[1]).abs() < 1e-12);
    }

    #[test]
    fn one_by_one() {
        let t = SymTridiagonal::new(vec![5.0], vec![]).unwrap();
        let s = tridiag_eigs(&t, 1).unwrap();
        assert!((s.value(0) - 5.0).abs() < 1e-14);
        assert_eq!(s.vector(0).len(), 1);
        assert!((s.vector(0)[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_k() {
        let t = SymTridiagonal::new(vec![1.0, 2.0], vec![0.5]).unwrap();
        assert!(tridiag_eigs(&t, 3).is_err());
        assert!(tridiag_eigs(&t, 0).is_err());
        assert!(SymTridiagonal::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn discrete_sine_spectrum() {
        let n = 200;
        let h = PI / (n as f64 + 1.0);
        let t = SymTridiagonal::new(vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1]).unwrap();
        let s = tridiag_eigs(&t, 6).unwrap();
        for j in 1..=6 {
            let exact = 4.0 / (h * h) * (0.5 * j as f64 * h).sin().powi(2);
            assert!((s.value(j - 1) - exact).abs() <= 1e-10 * exact);
            // eigenvector is the sampled sine mode
            let v = s.vector(j - 1);
            let mode: Vec<f64> = (1..=n).map(|i| (j as f64 * i as f64 * h).sin()).collect();
            let c = dot(v, &mode) / norm2(&mode);
            assert!((c.abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_diagonal_gets_orthogonal_vectors() {
        let t = SymTridiagonal::new(vec![1.0, 1.0, 1.0, 2.0], vec![0.0, 0.0, 0.0]).unwrap();
        let s = tridiag_eigs(&t, 3).unwrap();
        assert_eq!(s.near_degenerate, vec![0, 1]);
        for i in 0..3 {
            for j in 0..3 {
                let g = dot(s.vector(i), s.vector(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-12, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn sturm_count_brackets() {
        let t = SymTridiagonal::new(vec![2.0, 2.0], vec![-1.0]).unwrap();
        assert_eq!(t.sturm_count(0.5), 0);
        assert_eq!(t.sturm_count(2.0), 1);
        assert_eq!(t.sturm_count(3.5), 2);
    }
}
