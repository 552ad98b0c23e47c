use super::tridiag::SymTridiagonal;
use crate::error::{Error, Result};

/// Symmetric band matrix with half-bandwidth `p`.
///
/// Only the lower band is stored, column by column: `data[j * (p + 1) + d]`
/// holds `A[j + d][j]` for `0 <= d <= p`. Slots that fall past the last row
/// stay zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SymBanded {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, p: usize) -> Self {
        SymBanded {
            n,
            p,
            data: vec![0.0; n * (p + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), 0);
        m.data.copy_from_slice(values);
        m
    }

    pub fn from_tridiagonal(t: &SymTridiagonal) -> Self {
        let n = t.n();
        let mut m = Self::zeros(n, 1.min(n - 1));
        for i in 0..n {
            m.set(i, i, t.diag()[i]);
            if i + 1 < n {
                m.set(i + 1, i, t.offdiag()[i]);
            }
        }
        m
    }

    /// Build from a dense symmetric matrix, keeping the lower band.
    pub fn from_dense(a: &[Vec<f64>], p: usize) -> Self {
        let n = a.len();
        let mut m = Self::zeros(n, p);
        for j in 0..n {
            for i in j..(j + p + 1).min(n) {
                m.set(i, j, a[i][j]);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.p
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c <= self.p && r < self.n {
            Some(c * (self.p + 1) + (r - c))
        } else {
            None
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band of half-width {}", self.p));
        self.data[s] = v;
    }

    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band of half-width {}", self.p));
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let (n, p) = (self.n, self.p);
        let mut y = vec![0.0; n];
        for j in 0..n {
            let col = &self.data[j * (p + 1)..(j + 1) * (p + 1)];
            y[j] += col[0] * x[j];
            for d in 1..=p.min(n - 1 - j) {
                let a = col[d];
                y[j + d] += a * x[j];
                y[j] += a * x[j + d];
            }
        }
        y
    }

    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        for j in 0..self.n {
            for d in 0..=self.p.min(self.n - 1 - j) {
                let a = self.data[j * (self.p + 1) + d].abs();
                rows[j + d] += a;
                if d > 0 {
                    rows[j] += a;
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `self - shift * other` (or `self - shift * I`).
    pub fn shifted(&self, shift: f64, other: Option<&SymBanded>) -> Result<SymBanded> {
        let p = other.map_or(self.p, |b| self.p.max(b.p));
        if let Some(b) = other {
            if b.n != self.n {
                return Err(Error::InvalidArgument(format!(
                    "dimension mismatch: {} vs {}",
                    self.n, b.n
                )));
            }
        }
        let mut out = SymBanded::zeros(self.n, p);
        for j in 0..self.n {
            for d in 0..=self.p.min(self.n - 1 - j) {
                out.data[j * (p + 1) + d] = self.data[j * (self.p + 1) + d];
            }
            match other {
                Some(b) => {
                    for d in 0..=b.p.min(self.n - 1 - j) {
                        out.data[j * (p + 1) + d] -= shift * b.data[j * (b.p + 1) + d];
                    }
                }
                None => out.data[j * (p + 1)] -= shift,
            }
        }
        Ok(out)
    }
}

/// `A - shift B = L D L^T` within the band, no pivoting.
#[derive(Clone, Debug)]
pub struct LdltFactor {
    n: usize,
    p: usize,
    l: Vec<f64>,
    d: Vec<f64>,
    shift: f64,
}

impl LdltFactor {
    /// Number of negative pivots: by Sylvester's law, the number of
    /// (generalized) eigenvalues below the shift when `B` is positive definite.
    pub fn inertia(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, p) = (self.n, self.p);
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                let col = &self.l[j * (p + 1)..];
                for d in 1..=p.min(n - 1 - j) {
                    x[j + d] -= col[d] * xj;
                }
            }
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for j in (0..n).rev() {
            let col = &self.l[j * (p + 1)..];
            let mut s = x[j];
            for d in 1..=p.min(n - 1 - j) {
                s -= col[d] * x[j + d];
            }
            x[j] = s;
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Factor `A - shift * B` (or `A - shift * I` when `b` is `None`).
///
/// Fails when a pivot falls below `1e-14 * ||A - shift B||_inf`.
pub fn banded_ldlt(a: &SymBanded, shift: f64, b: Option<&SymBanded>) -> Result<LdltFactor> {
    let m = a.shifted(shift, b)?;
    let (n, p) = (m.n, m.p);
    let tol = 1e-14 * m.norm_inf();
    let mut w = m.data;
    let mut d = vec![0.0; n];
    let stride = p + 1;
    for j in 0..n {
        let dj = w[j * stride];
        if !(dj.abs() > tol) {
            return Err(Error::ShiftHitsSpectrum {
                shift,
                row: j,
                pivot: dj,
            });
        }
        d[j] = dj;
        let lim = p.min(n - 1 - j);
        for a_off in 1..=lim {
            let wa = w[j * stride + a_off];
            if wa == 0.0 {
                continue;
            }
            let f = wa / dj;
            let col = (j + a_off) * stride;
            for b_off in a_off..=lim {
                w[col + (b_off - a_off)] -= f * w[j * stride + b_off];
            }
        }
        for a_off in 1..=lim {
            w[j * stride + a_off] /= dj;
        }
    }
    Ok(LdltFactor {
        n,
        p,
        l: w,
        d,
        shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn laplacian(n: usize) -> (SymTridiagonal, f64) {
        let h = PI / (n as f64 + 1.0);
        let t = SymTridiagonal::new(vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1]).unwrap();
        (t, h)
    }

    #[test]
    fn identity_inertia() {
        let i = SymBanded::identity(7);
        assert_eq!(banded_ldlt(&i, 0.5, None).unwrap().inertia(), 0);
        assert_eq!(banded_ldlt(&i, 2.0, None).unwrap().inertia(), 7);
        assert!(matches!(
            banded_ldlt(&i, 1.0, None),
            Err(Error::ShiftHitsSpectrum { .. })
        ));
    }

    #[test]
    fn laplacian_inertia_between_first_two() {
        let (t, h) = laplacian(50);
        let l1 = 4.0 / (h * h) * (0.5 * h).sin().powi(2);
        let l2 = 4.0 / (h * h) * h.sin().powi(2);
        let a = SymBanded::from_tridiagonal(&t);
        let f = banded_ldlt(&a, 0.5 * (l1 + l2), None).unwrap();
        assert_eq!(f.inertia(), 1);
    }

    #[test]
    fn solve_matches_dense() {
        let n = 9;
        let p = 3;
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let d = i.abs_diff(j);
                if d <= p {
                    dense[i][j] = if d == 0 { 10.0 + i as f64 } else { 1.0 / (1.0 + d as f64 + (i + j) as f64) };
                }
            }
        }
        let a = SymBanded::from_dense(&dense, p);
        assert_eq!(a.to_dense(), dense);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = a.matvec(&x);
        let f = banded_ldlt(&a, 0.0, None).unwrap();
        let y = f.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn generalized_shift_uses_b() {
        let a = SymBanded::diagonal(&[2.0, 4.0]);
        let b = SymBanded::diagonal(&[2.0, 2.0]);
        // generalized eigenvalues are 1 and 2
        assert_eq!(banded_ldlt(&a, 1.5, Some(&b)).unwrap().inertia(), 1);
        assert_eq!(banded_ldlt(&a, 2.5, Some(&b)).unwrap().inertia(), 2);
    }

    #[test]
    #[should_panic]
    fn set_outside_band_panics() {
        let mut a = SymBanded::zeros(5, 1);
        a.set(3, 0, 1.0);
    }
}
