//! Symmetric tridiagonal and banded eigenvalue kernels.

mod banded;
mod lanczos;
mod tridiag;

pub use banded::{banded_ldlt, LdltFactor, SymBanded};
pub use lanczos::{shift_invert_lanczos, shift_invert_lanczos_with, LanczosOptions, LanczosOutcome};
pub use tridiag::{tridiag_eigs, SymTridiagonal};

/// Eigenvalue with its normalized eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Ascending list of eigenpairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    /// Indices `j` with `values[j]` and `values[j + 1]` numerically coincident.
    pub near_degenerate: Vec<usize>,
}

impl Spectrum {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn value(&self, j: usize) -> f64 {
        self.pairs[j].value
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.pairs[j].vector
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
