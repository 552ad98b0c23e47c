//! Epsilon sweeps: scaled residuals, rate fits, eigenfunction distances and
//! two-sided bracketing runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{bracket_profiles, WidthProfile};
use crate::schrodinger1d::{solve_h, solve_q, LineSpectrum, TruncationPolicy};
use crate::strip2d::{solve_strip_extrapolated, ExtrapolatedStrip, StripSolution};

/// `eps^{2 alpha} (lambda - pi^2 / (M eps)^2)`.
pub fn scaled_residual(lambda: f64, eps: f64, p: &WidthProfile) -> f64 {
    eps.powf(2.0 * p.alpha()) * (lambda - p.threshold(eps))
}

/// Resolution choices for sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshPolicy {
    /// Cells per well width `eps^alpha` in x (coarse level).
    pub cells_per_scale: usize,
    /// Transverse cells (coarse level).
    pub ns: usize,
    /// Interior nodes for the limit operator on its initial box.
    pub h_points: usize,
    /// Relative residual tolerance of the strip eigensolver.
    pub tol: f64,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        MeshPolicy {
            cells_per_scale: 16,
            ns: 24,
            h_points: 4000,
            tol: 1e-10,
        }
    }
}

impl MeshPolicy {
    /// `ceil((a + b) / eps^alpha) * cells_per_scale`, bumped up until
    /// `x = 0` is a node.
    pub fn nx_for(&self, p: &WidthProfile, eps: f64) -> Result<usize> {
        if self.cells_per_scale == 0 || self.ns < 2 {
            return Err(Error::InvalidArgument(format!("unusable mesh policy {self:?}")));
        }
        let len = p.a() + p.b();
        let base = (len / eps.powf(p.alpha())).ceil() as usize * self.cells_per_scale;
        (base..base + 10_000)
            .find(|&nx| {
                let t = p.a() * nx as f64 / len;
                (t - t.round()).abs() <= 1e-9 * t.max(1.0)
            })
            .ok_or_else(|| {
                Error::GridMismatch(format!(
                    "no mesh near {base} cells has a node at x = 0 on [{}, {}]",
                    -p.a(),
                    p.b()
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    /// 1-based eigenvalue index.
    pub j: usize,
    /// Mesh-extrapolated strip eigenvalue.
    pub lambda_2d: f64,
    /// Grid-extrapolated eigenvalue of `Q_eps`.
    #[serde(rename = "lambda_Q")]
    pub lambda_q: f64,
    pub scaled_residual_2d: f64,
    #[serde(rename = "scaled_Q")]
    pub scaled_q: f64,
    pub mu_ref: f64,
    pub eigfun_dist: Option<f64>,
    /// Strip eigenvalue on the coarse and the refined mesh.
    #[serde(skip)]
    pub lambda_2d_levels: [f64; 2],
    /// `Q_eps` eigenvalue on the coarse and the refined grid.
    #[serde(skip)]
    pub lambda_q_levels: [f64; 2],
}

/// Output of [`sweep`]: records ordered by the given eps order, then `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
    /// `mu_1 .. mu_k` of the limit operator.
    pub mu: Vec<f64>,
}

impl SweepTable {
    pub fn for_j(&self, j: usize) -> Vec<&SweepRecord> {
        self.records.iter().filter(|r| r.j == j).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_rate(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("xs and ys differ in length".into()));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs >= 3 points, got {}",
            xs.len()
        )));
    }
    if let Some((x, y)) = xs.iter().zip(ys).find(|(x, y)| !(**x > 0.0) || !(**y > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs positive data, got ({x}, {y})"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points_used: xs.len(),
    })
}

/// `min(||u - v||, ||u + v||)` in the trapezoid norm with spacing `dx`.
pub fn aligned_distance(u: &[f64], v: &[f64], dx: f64) -> f64 {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        minus += (a - b).powi(2);
        plus += (a + b).powi(2);
    }
    (dx * minus.min(plus)).sqrt()
}

/// Flip `v` so it points along `reference`.
pub fn align_sign(reference: &[f64], v: &mut [f64]) {
    let dot: f64 = reference.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    if dot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn check_shared_grid(sol2d: &StripSolution, solq: &LineSpectrum) -> Result<()> {
    let (m, g) = (&sol2d.mesh, &solq.grid);
    let same = g.n + 1 == m.nx
        && (g.x_lo - m.x_lo).abs() <= 1e-12 * (1.0 + m.x_lo.abs())
        && (g.x_hi - m.x_hi).abs() <= 1e-12 * (1.0 + m.x_hi.abs());
    if same {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "strip has {} x cells on [{}, {}], Q grid has {} cells on [{}, {}]; resample explicitly",
            m.nx,
            m.x_lo,
            m.x_hi,
            g.n + 1,
            g.x_lo,
            g.x_hi
        )))
    }
}

/// `min over sign ||P_eps Psi_j - sign Psi~_j||_{L^2(I)}` on the shared x grid
/// (`j` 0-based).
pub fn eigfun_distance_q(sol2d: &StripSolution, solq: &LineSpectrum, j: usize) -> Result<f64> {
    check_shared_grid(sol2d, solq)?;
    if j >= solq.len() {
        return Err(Error::InvalidArgument(format!("Q spectrum has no mode {j}")));
    }
    let chi = sol2d.transverse_project(j)?;
    Ok(aligned_distance(&chi, solq.vector(j), sol2d.mesh.dx()))
}

/// Richardson combination of a grid function and its refinement sampled on
/// the coarse nodes (fine node `2i + 1` sits on coarse node `i`).
pub fn extrapolate_nodal(coarse: &[f64], fine: &[f64]) -> Result<Vec<f64>> {
    if fine.len() != 2 * coarse.len() + 1 {
        return Err(Error::GridMismatch(format!(
            "fine grid has {} nodes, expected {}",
            fine.len(),
            2 * coarse.len() + 1
        )));
    }
    let mut f: Vec<f64> = (0..coarse.len()).map(|i| fine[2 * i + 1]).collect();
    align_sign(coarse, &mut f);
    Ok(coarse
        .iter()
        .zip(&f)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect())
}

/// [`eigfun_distance_q`] on extrapolated functions: both the projected strip
/// mode and the `Q` mode are Richardson-combined before comparing.
pub fn eigfun_distance_q_extrapolated(
    strip: &ExtrapolatedStrip,
    q_coarse: &LineSpectrum,
    q_fine: &LineSpectrum,
    j: usize,
) -> Result<f64> {
    check_shared_grid(&strip.coarse, q_coarse)?;
    check_shared_grid(&strip.fine, q_fine)?;
    let chi = strip.transverse_project(j)?;
    let psi = extrapolate_nodal(q_coarse.vector(j), q_fine.vector(j))?;
    Ok(aligned_distance(&chi, &psi, strip.coarse.mesh.dx()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitDistance {
    /// `min over sign ||Psi~_j - eps^{-alpha/2} X_j(x eps^{-alpha})||_{L^2(I)}`.
    pub distance: f64,
    /// `L^2` mass of `Psi~_j` at points whose rescaled image falls outside
    /// the truncated line.
    pub leak: f64,
}

/// Compare the `Q_eps` mode with the rescaled limit mode `X_j` (0-based `j`).
pub fn eigfun_distance_h(
    solq: &LineSpectrum,
    solh: &LineSpectrum,
    p: &WidthProfile,
    eps: f64,
    j: usize,
) -> Result<LimitDistance> {
    if j >= solq.len() || j >= solh.len() {
        return Err(Error::InvalidArgument(format!("mode {j} missing from an input spectrum")));
    }
    let scale = eps.powf(p.alpha());
    let amp = scale.powf(-0.5);
    let dx = solq.grid.spacing();
    let l = solh.grid.x_hi.min(-solh.grid.x_lo);
    let u = solq.vector(j);
    let mut leak = 0.0;
    let x_nodes = solq.grid.nodes();
    let v: Vec<f64> = x_nodes
        .iter()
        .zip(u)
        .map(|(&x, &ui)| {
            let t = x / scale;
            if t.abs() >= l {
                leak += dx * ui * ui;
            }
            amp * solh.interpolate(j, t)
        })
        .collect();
    let leak = leak.sqrt();
    if leak > 1e-8 {
        log::warn!("limit mode truncated: Q mode carries L2 mass {leak:e} beyond rescaled L = {l}");
    }
    Ok(LimitDistance {
        distance: aligned_distance(u, &v, dx),
        leak,
    })
}

/// `sqrt(2 (1 - <e, f>^2))`, the Hilbert-Schmidt norm of
/// `K = (., e) e - (., f) f` for unit `e`, `f`.
pub fn hs_rank2(e: &[f64], f: &[f64]) -> Result<f64> {
    if e.len() != f.len() {
        return Err(Error::InvalidArgument("vectors differ in length".into()));
    }
    for (name, v) in [("e", e), ("f", f)] {
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("{name} has norm {n}, expected 1")));
        }
    }
    let c: f64 = e.iter().zip(f).map(|(a, b)| a * b).sum();
    Ok(hs_rank2_overlap(c))
}

/// [`hs_rank2`] from the overlap `<e, f>` of two unit vectors.
pub fn hs_rank2_overlap(c: f64) -> f64 {
    (2.0 * (1.0 - c * c)).max(0.0).sqrt()
}

/// `min(||e - f||, ||e + f||)` in the Euclidean norm.
pub fn sign_distance(e: &[f64], f: &[f64]) -> f64 {
    aligned_distance(e, f, 1.0)
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs >= 3 eps values, got {}",
            eps_list.len()
        )));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("eps values must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps list must be strictly decreasing".into()));
    }
    Ok(())
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Map `f` over `items` on up to `jobs` threads; output keeps input order.
pub fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Copy + Sync,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    with_jobs(jobs, || items.par_iter().map(|&x| f(x)).collect())
}

/// Everything computed at one eps: extrapolated strip, `Q` on two grids.
#[derive(Clone, Debug)]
pub struct EpsSolve {
    pub eps: f64,
    pub strip: ExtrapolatedStrip,
    pub q_coarse: LineSpectrum,
    pub q_fine: LineSpectrum,
}

impl EpsSolve {
    pub fn lambda_q(&self, j: usize) -> f64 {
        (4.0 * self.q_fine.value(j) - self.q_coarse.value(j)) / 3.0
    }

    /// Richardson-combined `Q` mode on the coarse grid.
    pub fn q_mode(&self, j: usize) -> Result<Vec<f64>> {
        extrapolate_nodal(self.q_coarse.vector(j), self.q_fine.vector(j))
    }

    pub fn eigfun_distance(&self, j: usize) -> Result<f64> {
        eigfun_distance_q_extrapolated(&self.strip, &self.q_coarse, &self.q_fine, j)
    }
}

/// Strip and `Q` solves at one eps on the policy's meshes.
pub fn solve_at(p: &WidthProfile, eps: f64, k: usize, policy: &MeshPolicy) -> Result<EpsSolve> {
    let nx = policy.nx_for(p, eps)?;
    let strip = solve_strip_extrapolated(p, eps, nx, policy.ns, k, policy.tol)?;
    let q_coarse = solve_q(p, eps, nx - 1, k)?;
    let q_fine = solve_q(p, eps, 2 * nx - 1, k)?;
    Ok(EpsSolve {
        eps,
        strip,
        q_coarse,
        q_fine,
    })
}

/// Records for every `(eps, j)`, `j` 1-based; eps solves run on up to
/// `jobs` threads, output order is always that of `eps_list`.
pub fn sweep(
    p: &WidthProfile,
    eps_list: &[f64],
    j_list: &[usize],
    policy: &MeshPolicy,
    truncation: TruncationPolicy,
    jobs: usize,
) -> Result<SweepTable> {
    let (table, failure) = sweep_partial(p, eps_list, j_list, policy, truncation, jobs)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

/// Like [`sweep`], but a failing eps keeps the records of the eps values
/// before it and returns the error alongside.
pub fn sweep_partial(
    p: &WidthProfile,
    eps_list: &[f64],
    j_list: &[usize],
    policy: &MeshPolicy,
    truncation: TruncationPolicy,
    jobs: usize,
) -> Result<(SweepTable, Option<Error>)> {
    check_eps_list(eps_list)?;
    if j_list.is_empty() || j_list.contains(&0) {
        return Err(Error::InvalidArgument("j list must hold indices >= 1".into()));
    }
    let k = *j_list.iter().max().unwrap();
    let mu = solve_h(p, k, truncation, policy.h_points)?.values();
    let solves: Vec<Result<EpsSolve>> = with_jobs(jobs, || {
        eps_list
            .par_iter()
            .map(|&eps| solve_at(p, eps, k, policy).map_err(|e| e.context(format!("eps = {eps}"))))
            .collect()
    })?;
    let mut records = Vec::new();
    for s in solves {
        let s = match s {
            Ok(s) => s,
            Err(e) => return Ok((SweepTable { records, mu }, Some(e))),
        };
        let mut batch = Vec::with_capacity(j_list.len());
        for &j in j_list {
            let i = j - 1;
            let lambda_2d = s.strip.values[i];
            let lambda_q = s.lambda_q(i);
            let dist = match s.eigfun_distance(i) {
                Ok(d) => d,
                Err(e) => {
                    let e = e.context(format!("eps = {}, j = {j}", s.eps));
                    return Ok((SweepTable { records, mu }, Some(e)));
                }
            };
            batch.push(SweepRecord {
                eps: s.eps,
                j,
                lambda_2d,
                lambda_q,
                scaled_residual_2d: scaled_residual(lambda_2d, s.eps, p),
                scaled_q: s.eps.powf(2.0 * p.alpha()) * lambda_q,
                mu_ref: mu[i],
                eigfun_dist: Some(dist),
                lambda_2d_levels: [s.strip.coarse.values()[i], s.strip.fine.values()[i]],
                lambda_q_levels: [s.q_coarse.value(i), s.q_fine.value(i)],
            });
        }
        records.extend(batch);
    }
    Ok((SweepTable { records, mu }, None))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketReport {
    pub eps: f64,
    /// Extrapolated eigenvalues with the outer profile `h+` on `[-a, b]`.
    pub lambda_plus: Vec<f64>,
    /// Extrapolated eigenvalues with the inner profile `h-` on `[-eta, eta]`.
    pub lambda_minus: Vec<f64>,
    pub scaled_plus: Vec<f64>,
    pub scaled_minus: Vec<f64>,
    pub mu_ref: Vec<f64>,
    /// Mesh-error allowance used when checking `lambda_plus <= lambda_minus`.
    pub tolerance: Vec<f64>,
}

/// Bracket profiles for a profile with vanishing endpoints.
pub fn bracket_pair(
    p: &WidthProfile,
    k_bound: Option<f64>,
    eta_tilde: Option<f64>,
) -> Result<(WidthProfile, WidthProfile)> {
    if !p.has_vanishing_endpoints() {
        return Err(Error::InvalidArgument(
            "bracketing is meant for profiles with vanishing endpoints".into(),
        ));
    }
    let eta = eta_tilde.unwrap_or(0.5 * p.a().min(p.b()));
    bracket_profiles(p, k_bound, eta)
}

/// Cell counts for the outer and inner bracket profiles with one common
/// spacing, so the inner mesh nodes are outer mesh nodes.
pub fn matched_cells(upper: &WidthProfile, lower: &WidthProfile, eps: f64, policy: &MeshPolicy) -> Result<(usize, usize)> {
    let base = policy.nx_for(upper, eps)?;
    let len = upper.a() + upper.b();
    let whole = |v: f64| (v - v.round()).abs() <= 1e-9 * v.abs().max(1.0);
    (base..base + 10_000)
        .find_map(|nx| {
            let dx = len / nx as f64;
            let inner = (lower.a() + lower.b()) / dx;
            (whole(upper.a() / dx) && whole(lower.a() / dx) && whole(inner))
                .then(|| (nx, inner.round() as usize))
        })
        .ok_or_else(|| Error::GridMismatch("no common spacing fits both bracket intervals".into()))
}

/// Two-sided eigenvalue bounds at one eps; `mu` are the limit eigenvalues.
///
/// Both profiles are solved with a common mesh spacing on two levels. On
/// each level the inner problem lives on a subset of the outer nodes, so
/// `lambda_plus <= lambda_minus` is checked there up to rounding; the
/// extrapolated values are checked up to the mesh-error allowance.
pub fn bracket_check(
    upper: &WidthProfile,
    lower: &WidthProfile,
    eps: f64,
    policy: &MeshPolicy,
    k: usize,
    mu: &[f64],
) -> Result<BracketReport> {
    let (nx_plus, nx_minus) = matched_cells(upper, lower, eps, policy)?;
    let plus = solve_strip_extrapolated(upper, eps, nx_plus, policy.ns, k, policy.tol)
        .map_err(|e| e.context(format!("outer profile, eps = {eps}")))?;
    let minus = solve_strip_extrapolated(lower, eps, nx_minus, policy.ns, k, policy.tol)
        .map_err(|e| e.context(format!("inner profile, eps = {eps}")))?;
    let mesh_err = |s: &ExtrapolatedStrip, j: usize| (s.fine.values()[j] - s.coarse.values()[j]).abs() / 3.0;
    let tolerance: Vec<f64> = (0..k).map(|j| mesh_err(&plus, j) + mesh_err(&minus, j)).collect();
    let levels_ok = [(&plus.coarse, &minus.coarse), (&plus.fine, &minus.fine)]
        .iter()
        .all(|(p, m)| {
            p.values()
                .iter()
                .zip(m.values())
                .all(|(lp, lm)| *lp <= lm + 1e-12 * lm.abs())
        });
    let extrapolated_ok = (0..k).all(|j| plus.values[j] <= minus.values[j] + tolerance[j]);
    if !(levels_ok && extrapolated_ok) {
        return Err(Error::BracketOrder {
            plus: plus.values.clone(),
            minus: minus.values.clone(),
        });
    }
    Ok(BracketReport {
        eps,
        scaled_plus: plus.values.iter().map(|&l| scaled_residual(l, eps, upper)).collect(),
        scaled_minus: minus.values.iter().map(|&l| scaled_residual(l, eps, lower)).collect(),
        lambda_plus: plus.values,
        lambda_minus: minus.values,
        mu_ref: mu[..k].to_vec(),
        tolerance,
    })
}

/// [`bracket_check`] along an eps list, `mu` from the limit operator.
pub fn bracket_sweep(
    p: &WidthProfile,
    eps_list: &[f64],
    policy: &MeshPolicy,
    k: usize,
    k_bound: Option<f64>,
    eta_tilde: Option<f64>,
    truncation: TruncationPolicy,
    jobs: usize,
) -> Result<Vec<BracketReport>> {
    check_eps_list(eps_list)?;
    let (upper, lower) = bracket_pair(p, k_bound, eta_tilde)?;
    let mu = solve_h(p, k, truncation, policy.h_points)?.values();
    let out: Vec<Result<BracketReport>> = with_jobs(jobs, || {
        eps_list
            .par_iter()
            .map(|&eps| bracket_check(&upper, &lower, eps, policy, k, &mu))
            .collect()
    })?;
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn harmonic() -> WidthProfile {
        WidthProfile::smooth_poly(2.0, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn scaled_residual_arithmetic() {
        let p = harmonic();
        assert_eq!(scaled_residual(p.threshold(0.3), 0.3, &p), 0.0);
        let eps: f64 = 0.01;
        let v = scaled_residual(PI * PI / (4.0 * eps * eps) + 100.0, eps, &p);
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_power_law_fit() {
        let xs = [0.2, 0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let f = fit_rate(&xs, &ys).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.points_used, 4);
        assert!(fit_rate(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_rate(&xs[..2], &ys[..2]).is_err());
    }

    #[test]
    fn hs_rank2_corner_cases() {
        let e = [1.0, 0.0, 0.0];
        assert_eq!(hs_rank2(&e, &e).unwrap(), 0.0);
        let f = [0.0, 1.0, 0.0];
        assert!((hs_rank2(&e, &f).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(hs_rank2(&e, &[0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn nx_policy_puts_zero_on_a_node() {
        let pol = MeshPolicy::default();
        let p = harmonic();
        assert_eq!(pol.nx_for(&p, 0.25).unwrap(), 64);
        let q = WidthProfile::smooth_poly(2.0, 2.0, 0.25, 1.0, 1.0, 2.0).unwrap();
        let nx = pol.nx_for(&q, 0.1).unwrap();
        assert_eq!(nx % 3, 0);
    }

    #[test]
    fn distance_ignores_sign_and_checks_grid() {
        let p = harmonic();
        let s = solve_at(&p, 0.2, 1, &MeshPolicy { cells_per_scale: 8, ns: 8, ..Default::default() }).unwrap();
        let d = eigfun_distance_q(&s.strip.coarse, &s.q_coarse, 0).unwrap();
        let mut flipped = s.q_coarse.clone();
        flipped.spectrum.pairs[0].vector.iter_mut().for_each(|v| *v = -*v);
        assert_eq!(d, eigfun_distance_q(&s.strip.coarse, &flipped, 0).unwrap());
        assert!(matches!(
            eigfun_distance_q(&s.strip.coarse, &s.q_fine, 0),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn sweep_rejects_short_or_unordered_lists() {
        let p = harmonic();
        let pol = MeshPolicy::default();
        assert!(sweep(&p, &[0.2, 0.1], &[1], &pol, TruncationPolicy::default(), 1).is_err());
        assert!(sweep(&p, &[0.1, 0.2, 0.05], &[1], &pol, TruncationPolicy::default(), 1).is_err());
    }
}
