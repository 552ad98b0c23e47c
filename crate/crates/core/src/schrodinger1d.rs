//! Finite-difference solvers for `-u'' + V u` with Dirichlet ends: the
//! reduced operator `Q_eps` on `[-a, b]` and the limit operator `H` on a
//! truncated line.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{tridiag_eigs, Spectrum, SymTridiagonal};
use crate::profile::WidthProfile;

pub type Potential = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Uniform grid with `n` interior nodes `x_i = x_lo + (i + 1) dx`; the
/// endpoints carry the Dirichlet condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad interval [{x_lo}, {x_hi}]")));
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!("need n >= 3 interior nodes, got {n}")));
        }
        Ok(UniformGrid { x_lo, x_hi, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n as f64 + 1.0)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 1.0) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// The grid with half the spacing on the same interval.
    pub fn refined(&self) -> UniformGrid {
        UniformGrid {
            n: 2 * self.n + 1,
            ..*self
        }
    }
}

#[derive(Clone)]
pub struct Schrodinger1DProblem {
    potential: Potential,
    grid: UniformGrid,
}

impl fmt::Debug for Schrodinger1DProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Schrodinger1DProblem")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl Schrodinger1DProblem {
    pub fn new(potential: Potential, x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        Ok(Schrodinger1DProblem {
            potential,
            grid: UniformGrid::new(x_lo, x_hi, n)?,
        })
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn with_grid(&self, grid: UniformGrid) -> Self {
        Schrodinger1DProblem {
            potential: self.potential.clone(),
            grid,
        }
    }

    /// Reduced operator `Q_eps = -d^2/dx^2 + W_eps` on `[-a, b]`.
    ///
    /// Profiles with vanishing endpoints are refused: their potential blows
    /// up at the ends, and they are handled through bracket profiles.
    pub fn reduced(p: &WidthProfile, eps: f64, n: usize) -> Result<Self> {
        if p.has_vanishing_endpoints() {
            return Err(Error::RequiresBracketing);
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
        }
        let prof = p.clone();
        let potential: Potential = Arc::new(move |x| prof.w_potential_node(eps, x));
        Self::new(potential, -p.a(), p.b(), n)
    }

    /// Limit operator `H = -d^2/dx^2 + q` on `[-l, l]`.
    pub fn limit(p: &WidthProfile, l: f64, n: usize) -> Result<Self> {
        let prof = p.clone();
        let potential: Potential = Arc::new(move |x| Ok(prof.q_limit(x)));
        Self::new(potential, -l, l, n)
    }
}

/// Centered second-order stencil: `diag = 2/dx^2 + V(x_i)`, `offdiag = -1/dx^2`.
pub fn assemble(problem: &Schrodinger1DProblem) -> Result<SymTridiagonal> {
    let g = problem.grid;
    let dx = g.spacing();
    let inv = 1.0 / (dx * dx);
    let mut diag = Vec::with_capacity(g.n);
    for (i, x) in g.nodes().into_iter().enumerate() {
        let v = (problem.potential)(x).map_err(|e| e.context(format!("potential at node {i} (x = {x})")))?;
        if !v.is_finite() {
            return Err(Error::Singular { x });
        }
        diag.push(2.0 * inv + v);
    }
    SymTridiagonal::new(diag, vec![-inv; g.n - 1])
}

/// Eigenpairs of a 1D problem, vectors sampled on the interior grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSpectrum {
    pub grid: UniformGrid,
    /// Vectors normalized in `L^2` by the trapezoid rule, first significant
    /// sample positive.
    pub spectrum: Spectrum,
}

impl LineSpectrum {
    pub fn values(&self) -> Vec<f64> {
        self.spectrum.values()
    }

    pub fn value(&self, j: usize) -> f64 {
        self.spectrum.value(j)
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        self.spectrum.vector(j)
    }

    pub fn len(&self) -> usize {
        self.spectrum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectrum.is_empty()
    }

    /// Piecewise-linear interpolant of eigenfunction `j`, zero outside the
    /// grid interval.
    pub fn interpolate(&self, j: usize, x: f64) -> f64 {
        let g = self.grid;
        if !(x > g.x_lo && x < g.x_hi) {
            return 0.0;
        }
        let u = self.vector(j);
        let t = (x - g.x_lo) / g.spacing();
        let k = (t.floor() as usize).min(g.n);
        let frac = t - k as f64;
        let at = |i: usize| if i == 0 || i > g.n { 0.0 } else { u[i - 1] };
        (1.0 - frac) * at(k) + frac * at(k + 1)
    }
}

/// Trapezoid `L^2` norm of interior samples with zero end values.
pub fn trapezoid_norm(u: &[f64], dx: f64) -> f64 {
    (dx * u.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

fn normalize(u: &mut [f64], dx: f64) {
    let nrm = trapezoid_norm(u, dx);
    let peak = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sign = u
        .iter()
        .find(|v| v.abs() > 1e-8 * peak)
        .map_or(1.0, |v| v.signum());
    u.iter_mut().for_each(|v| *v *= sign / nrm);
}

/// The `k` lowest eigenpairs on the problem's own grid.
pub fn solve_line(problem: &Schrodinger1DProblem, k: usize) -> Result<LineSpectrum> {
    let t = assemble(problem)?;
    let mut spectrum = tridiag_eigs(&t, k)?;
    let dx = problem.grid.spacing();
    for pair in &mut spectrum.pairs {
        normalize(&mut pair.vector, dx);
    }
    if !spectrum.near_degenerate.is_empty() {
        log::warn!("numerically coincident eigenvalues at indices {:?}", spectrum.near_degenerate);
    }
    Ok(LineSpectrum {
        grid: problem.grid,
        spectrum,
    })
}

/// `k` lowest eigenpairs of `Q_eps` with `n` interior nodes on `[-a, b]`.
pub fn solve_q(p: &WidthProfile, eps: f64, n: usize, k: usize) -> Result<LineSpectrum> {
    let problem = Schrodinger1DProblem::reduced(p, eps, n)?;
    let sol = solve_line(&problem, k).map_err(|e| e.context(format!("Q operator at eps = {eps}")))?;
    if let Some(&l1) = sol.values().first() {
        if !(l1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda_1(Q) = {l1} is not positive at eps = {eps}"
            )));
        }
    }
    Ok(sol)
}

/// `eps^{2 alpha} lambda_j(Q_eps)` for `j = 1..k`.
pub fn scaled_q_spectrum(p: &WidthProfile, eps: f64, n: usize, k: usize) -> Result<Vec<f64>> {
    let scale = eps.powf(2.0 * p.alpha());
    Ok(solve_q(p, eps, n, k)?
        .values()
        .into_iter()
        .map(|l| scale * l)
        .collect())
}

/// Ground-state-ladder of `-u'' + kappa x^2`: `(2j - 1) sqrt(kappa)`.
pub fn harmonic_oracle(kappa: f64, j: usize) -> f64 {
    (2.0 * j as f64 - 1.0) * kappa.sqrt()
}

/// Truncation of the line for `H`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    /// Fixed half-length; chosen from the potential when `None`.
    pub half_length: Option<f64>,
    /// `q(+-L)` must reach `growth_factor` times the largest wanted eigenvalue.
    pub growth_factor: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            half_length: None,
            growth_factor: 10.0,
        }
    }
}

const MAX_DOUBLINGS: usize = 6;
const DOUBLING_TOL: f64 = 1e-8;

fn wall_height(p: &WidthProfile, l: f64) -> f64 {
    p.q_limit(l).min(p.q_limit(-l))
}

/// Smallest `L` with `min(q(L), q(-L)) >= target`.
fn half_length_for(p: &WidthProfile, target: f64) -> f64 {
    let c = p.c_plus().min(p.c_minus());
    let coef = 2.0 * std::f64::consts::PI.powi(2) * c / p.max_width().powi(3);
    (target / coef).powf(1.0 / p.order())
}

/// `k` lowest eigenpairs of `H` on a truncated line `[-L, L]`.
///
/// `n` interior nodes (rounded up to odd) are used on the initial `[-L, L]`.
/// Eigenvalues are the Richardson extrapolation of the `n` and `2n + 1`
/// grids; vectors come from the finer grid. The truncation is verified by
/// doubling `L` at fixed spacing until every eigenvalue moves by less than
/// `1e-8` relative.
pub fn solve_h(p: &WidthProfile, k: usize, policy: TruncationPolicy, n: usize) -> Result<LineSpectrum> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if !(policy.growth_factor > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "growth_factor must exceed 1, got {}",
            policy.growth_factor
        )));
    }

    // estimate mu_k on a coarse grid and size the box from it
    let coarse_n = (40 * k).max(200);
    let mut l = match policy.half_length {
        Some(l) => l,
        None => half_length_for(p, policy.growth_factor * (2.0 * k as f64)),
    };
    let mut mu_k = 0.0;
    for _ in 0..20 {
        let est = solve_line(&Schrodinger1DProblem::limit(p, l, coarse_n)?, k)?;
        mu_k = est.value(k - 1);
        let need = policy.growth_factor * mu_k;
        if wall_height(p, l) >= need {
            break;
        }
        if policy.half_length.is_some() {
            return Err(Error::Truncation(format!(
                "q(+-{l}) = {} is below {} x mu_{k} = {need}",
                wall_height(p, l),
                policy.growth_factor
            )));
        }
        l = half_length_for(p, need).max(1.05 * l);
    }
    if !l.is_finite() || wall_height(p, l) < policy.growth_factor * mu_k {
        return Err(Error::Truncation(format!("no half-length found for mu_{k} = {mu_k}")));
    }

    // odd n keeps x = 0 a node, so the doubled boxes reuse the same nodes
    let n = n | 1;
    let dx = 2.0 * l / (n as f64 + 1.0);
    let mut current = Schrodinger1DProblem::limit(p, l, n)?;
    let mut base = solve_line(&current, k)?;
    for _ in 0..MAX_DOUBLINGS {
        let l2 = 2.0 * current.grid.x_hi;
        let n2 = ((2.0 * l2 / dx).round() as usize).saturating_sub(1);
        let wider = Schrodinger1DProblem::limit(p, l2, n2)?;
        let wide = solve_line(&wider, k)?;
        let change = base
            .values()
            .iter()
            .zip(wide.values())
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        if change < DOUBLING_TOL {
            let fine = solve_line(&current.with_grid(current.grid.refined()), k)?;
            let mut out = fine;
            for (pair, coarse) in out.spectrum.pairs.iter_mut().zip(base.values()) {
                pair.value = (4.0 * pair.value - coarse) / 3.0;
            }
            return Ok(out);
        }
        log::info!("doubling truncation half-length to {l2}: eigenvalues moved by {change:e}");
        current = wider;
        base = wide;
    }
    Err(Error::Truncation(format!(
        "eigenvalues still move by more than {DOUBLING_TOL:e} at L = {}",
        current.grid.x_hi
    )))
}
