//! File-producing front ends, one per command-line subcommand.
//!
//! Every command takes a parsed [`RunConfig`], an output directory and a
//! thread bound, and returns the paths it wrote. Outputs are byte-identical
//! for a fixed config and build.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::asymptotics::{
    align_sign, bracket_pair, bracket_sweep, eigfun_distance_h, fit_rate, scaled_residual, solve_at,
    sweep_partial, BracketReport, RateFit, SweepRecord,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_loglog, write_sweep_csv, write_table, INCOMPLETE_MARKER};
use crate::profile::{Positivity, ValidationReport, WidthProfile};
use crate::schrodinger1d::{solve_h, solve_q, LineSpectrum};
use crate::strip2d::solve_strip_extrapolated;

/// Collects written paths; each file is created under `dir`.
struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(e).context(format!("creating {}", dir.display())))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Error::Io(e).context(format!("creating {}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

fn need_eps(cfg: &RunConfig, min: usize) -> Result<()> {
    if cfg.eps.len() < min {
        return Err(Error::Config(format!(
            "this command needs at least {min} eps value(s), got {}",
            cfg.eps.len()
        )));
    }
    Ok(())
}

/// Check the profile conditions; writes `validation.json`.
///
/// A profile vanishing at an endpoint passes with `positivity =
/// "vanishing_endpoints"`, which routes sweeps through bracketing.
pub fn cmd_validate(cfg: &RunConfig, out: &Path) -> Result<(ValidationReport, Vec<PathBuf>)> {
    let report = cfg.profile.validate(cfg.validation_points);
    let mut sink = Sink::new(out)?;
    sink.json("validation.json", &report)?;
    if !report.passed {
        return Err(Error::ValidationFailed(report.violations.clone()));
    }
    Ok((report, sink.written))
}

fn mode_rows(sol: &LineSpectrum, k: usize) -> Vec<Vec<f64>> {
    sol.grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &x)| std::iter::once(x).chain((0..k).map(|j| sol.vector(j)[i])).collect())
        .collect()
}

fn mode_header(k: usize, name: &str) -> Vec<String> {
    std::iter::once("x".to_string())
        .chain((1..=k).map(|j| format!("{name}_{j}")))
        .collect()
}

/// Spectra of the limit operator `H` and of the reduced operator `Q_eps`.
///
/// Writes `h_spectrum.csv`, `h_modes.csv` and, for strictly positive
/// profiles, `q_spectrum.csv`.
pub fn cmd_solve_1d(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let p = &cfg.profile;
    let k = cfg.k();
    let mut sink = Sink::new(out)?;
    let solh = solve_h(p, k, (&cfg.truncation).into(), cfg.mesh.h_points)?;
    sink.write("h_spectrum.csv", |w| {
        writeln!(w, "j,mu")?;
        for j in 0..k {
            writeln!(w, "{},{}", j + 1, fmt_f64(solh.value(j)))?;
        }
        Ok(())
    })?;
    let header = mode_header(k, "X");
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    sink.write("h_modes.csv", |w| write_table(w, &header, &mode_rows(&solh, k)))?;

    if cfg.eps.is_empty() {
        return Ok(sink.written);
    }
    if p.positivity() == Positivity::VanishingEndpoints {
        return Err(Error::RequiresBracketing.context("solve-1d with eps values"));
    }
    let mut rows = Vec::new();
    for &eps in &cfg.eps {
        let nx = cfg.mesh.nx_for(p, eps)?;
        let coarse = solve_q(p, eps, nx - 1, k)?;
        let fine = solve_q(p, eps, 2 * nx - 1, k)?;
        for j in 0..k {
            let lambda = (4.0 * fine.value(j) - coarse.value(j)) / 3.0;
            rows.push((eps, j + 1, coarse.value(j), fine.value(j), lambda, eps.powf(2.0 * p.alpha()) * lambda));
        }
    }
    sink.write("q_spectrum.csv", |w| {
        writeln!(w, "eps,j,lambda_Q_coarse,lambda_Q_fine,lambda_Q,scaled_Q")?;
        for (eps, j, c, f, l, s) in &rows {
            writeln!(w, "{},{j},{},{},{},{}", fmt_f64(*eps), fmt_f64(*c), fmt_f64(*f), fmt_f64(*l), fmt_f64(*s))?;
        }
        Ok(())
    })?;
    Ok(sink.written)
}

/// Strip eigenvalues on two mesh levels for every eps.
///
/// Writes `strip_spectrum.csv` and one nodal CSV per `(eps, j)` from the
/// finer mesh, named `strip_mode_e{eps index}_j{j}.csv`.
pub fn cmd_solve_2d(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Vec<PathBuf>> {
    need_eps(cfg, 1)?;
    let p = &cfg.profile;
    let k = cfg.k();
    let mut sink = Sink::new(out)?;
    let solves = crate::asymptotics::par_map(jobs, &cfg.eps, |eps| {
        let nx = cfg.mesh.nx_for(p, eps)?;
        solve_strip_extrapolated(p, eps, nx, cfg.mesh.ns, k, cfg.mesh.tol).map_err(|e| e.context(format!("eps = {eps}")))
    })?;
    let solves: Vec<_> = solves.into_iter().collect::<Result<_>>()?;
    sink.write("strip_spectrum.csv", |w| {
        writeln!(w, "eps,j,threshold,lambda_coarse,lambda_fine,lambda_2d,scaled_residual_2d")?;
        for (eps, s) in cfg.eps.iter().zip(&solves) {
            for j in 0..k {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    fmt_f64(*eps),
                    j + 1,
                    fmt_f64(p.threshold(*eps)),
                    fmt_f64(s.coarse.values()[j]),
                    fmt_f64(s.fine.values()[j]),
                    fmt_f64(s.values[j]),
                    fmt_f64(scaled_residual(s.values[j], *eps, p))
                )?;
            }
        }
        Ok(())
    })?;
    for (e, s) in solves.iter().enumerate() {
        for &j in &cfg.j {
            sink.write(&format!("strip_mode_e{e}_j{j}.csv"), |w| s.fine.write_csv(j - 1, w))?;
        }
    }
    Ok(sink.written)
}

/// Fits for one eigenvalue index; `None` where the data cannot be fitted
/// (fewer than three points or a nonpositive error).
#[derive(Clone, Debug, Default, Serialize)]
pub struct JRates {
    /// `|scaled_residual_2d - mu_ref|`.
    pub residual_2d: Option<RateFit>,
    /// `|scaled_Q - mu_ref|`.
    #[serde(rename = "scaled_Q")]
    pub scaled_q: Option<RateFit>,
    /// `|scaled_residual_2d - scaled_Q|`.
    pub gap: Option<RateFit>,
    pub eigfun_dist: Option<RateFit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSummary {
    pub alpha: f64,
    pub mu: Vec<f64>,
    /// Keyed by the 1-based index.
    pub fits: BTreeMap<usize, JRates>,
    pub complete: bool,
}

fn try_fit(xs: &[f64], ys: &[f64]) -> Option<RateFit> {
    match fit_rate(xs, ys) {
        Ok(f) => Some(f),
        Err(e) => {
            log::info!("rate fit skipped: {e}");
            None
        }
    }
}

type Series = (&'static str, fn(&SweepRecord) -> f64);

const SERIES: [Series; 4] = [
    ("residual_2d", |r| (r.scaled_residual_2d - r.mu_ref).abs()),
    ("scaled_Q", |r| (r.scaled_q - r.mu_ref).abs()),
    ("gap", |r| (r.scaled_residual_2d - r.scaled_q).abs()),
    ("eigfun_dist", |r| r.eigfun_dist.unwrap_or(f64::NAN)),
];

/// eps sweep with rate fits.
///
/// Writes `sweep.csv`, `sweep_levels.csv` (raw mesh levels), `rates.json`
/// and `plot_j{j}_{series}.dat`. A solver failure keeps the rows computed
/// before it, appends an `# incomplete:` line and returns the error.
/// Profiles with vanishing endpoints run [`cmd_bracket`] instead.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Vec<PathBuf>> {
    if cfg.profile.positivity() == Positivity::VanishingEndpoints {
        log::info!("profile vanishes at an endpoint: running the bracket sweep");
        return cmd_bracket(cfg, out, jobs);
    }
    need_eps(cfg, 3)?;
    let p = &cfg.profile;
    let mut sink = Sink::new(out)?;
    let (table, failure) = sweep_partial(p, &cfg.eps, &cfg.j, &cfg.mesh, (&cfg.truncation).into(), jobs)?;
    sink.write("sweep.csv", |w| {
        write_sweep_csv(&table.records, &mut *w)?;
        if let Some(e) = &failure {
            writeln!(w, "{INCOMPLETE_MARKER} {}", e.to_string().replace('\n', " "))?;
        }
        Ok(())
    })?;
    sink.write("sweep_levels.csv", |w| {
        writeln!(w, "eps,j,lambda_2d_coarse,lambda_2d_fine,lambda_Q_coarse,lambda_Q_fine")?;
        for r in &table.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(r.eps),
                r.j,
                fmt_f64(r.lambda_2d_levels[0]),
                fmt_f64(r.lambda_2d_levels[1]),
                fmt_f64(r.lambda_q_levels[0]),
                fmt_f64(r.lambda_q_levels[1])
            )?;
        }
        Ok(())
    })?;

    let mut fits = BTreeMap::new();
    for &j in &cfg.j {
        let recs = table.for_j(j);
        let xs: Vec<f64> = recs.iter().map(|r| r.eps).collect();
        let mut rates = JRates::default();
        for (name, f) in SERIES {
            let ys: Vec<f64> = recs.iter().map(|r| f(r)).collect();
            let fit = try_fit(&xs, &ys);
            match name {
                "residual_2d" => rates.residual_2d = fit,
                "scaled_Q" => rates.scaled_q = fit,
                "gap" => rates.gap = fit,
                _ => rates.eigfun_dist = fit,
            }
            sink.write(&format!("plot_j{j}_{name}.dat"), |w| {
                write_loglog(w, &format!("j = {j}, {name}"), &xs, &ys)
            })?;
        }
        fits.insert(j, rates);
    }
    sink.json(
        "rates.json",
        &RateSummary {
            alpha: p.alpha(),
            mu: table.mu.clone(),
            fits,
            complete: failure.is_none(),
        },
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(sink.written),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigfunRow {
    pub eps: f64,
    pub j: usize,
    /// Distance between the transverse projection of the strip mode and
    /// the `Q_eps` mode.
    #[serde(rename = "dist_Q")]
    pub dist_q: f64,
    /// Distance between the `Q_eps` mode and the rescaled limit mode.
    #[serde(rename = "dist_H")]
    pub dist_h: f64,
    pub leak: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EigfunRates {
    #[serde(rename = "dist_Q")]
    pub dist_q: Option<RateFit>,
    #[serde(rename = "dist_H")]
    pub dist_h: Option<RateFit>,
}

/// Eigenfunction comparisons along the eps list.
///
/// Writes `eigfun.csv`, `eigfun_rates.json` and, per `(eps, j)`,
/// `eigfun_e{eps index}_j{j}.csv` with the sign-aligned projected strip
/// mode, `Q_eps` mode and rescaled limit mode on the shared x nodes.
pub fn cmd_eigfun(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Vec<PathBuf>> {
    need_eps(cfg, 1)?;
    let p = &cfg.profile;
    if p.positivity() == Positivity::VanishingEndpoints {
        return Err(Error::RequiresBracketing.context("eigfun"));
    }
    let k = cfg.k();
    let mut sink = Sink::new(out)?;
    let solh = solve_h(p, k, (&cfg.truncation).into(), cfg.mesh.h_points)?;
    let solves = crate::asymptotics::par_map(jobs, &cfg.eps, |eps| {
        solve_at(p, eps, k, &cfg.mesh).map_err(|e| e.context(format!("eps = {eps}")))
    })?;
    let solves: Vec<_> = solves.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (e, s) in solves.iter().enumerate() {
        let scale = s.eps.powf(p.alpha());
        for &j in &cfg.j {
            let i = j - 1;
            let dist_q = s.eigfun_distance(i)?;
            let lim = eigfun_distance_h(&s.q_fine, &solh, p, s.eps, i)?;
            rows.push(EigfunRow {
                eps: s.eps,
                j,
                dist_q,
                dist_h: lim.distance,
                leak: lim.leak,
            });

            let chi = s.strip.transverse_project(i)?;
            let mut psi = s.q_mode(i)?;
            align_sign(&chi, &mut psi);
            let xs = s.q_coarse.grid.nodes();
            let mut lim_mode: Vec<f64> = xs.iter().map(|&x| scale.powf(-0.5) * solh.interpolate(i, x / scale)).collect();
            align_sign(&psi, &mut lim_mode);
            let table: Vec<Vec<f64>> = (0..xs.len()).map(|n| vec![xs[n], chi[n], psi[n], lim_mode[n]]).collect();
            sink.write(&format!("eigfun_e{e}_j{j}.csv"), |w| {
                write_table(w, &["x", "chi", "psi_Q", "X_rescaled"], &table)
            })?;
        }
    }
    sink.write("eigfun.csv", |w| {
        writeln!(w, "eps,j,dist_Q,dist_H,leak")?;
        for r in &rows {
            writeln!(w, "{},{},{},{},{}", fmt_f64(r.eps), r.j, fmt_f64(r.dist_q), fmt_f64(r.dist_h), fmt_f64(r.leak))?;
        }
        Ok(())
    })?;
    let mut fits = BTreeMap::new();
    for &j in &cfg.j {
        let sel: Vec<&EigfunRow> = rows.iter().filter(|r| r.j == j).collect();
        let xs: Vec<f64> = sel.iter().map(|r| r.eps).collect();
        let dq: Vec<f64> = sel.iter().map(|r| r.dist_q).collect();
        let dh: Vec<f64> = sel.iter().map(|r| r.dist_h).collect();
        fits.insert(
            j,
            EigfunRates {
                dist_q: try_fit(&xs, &dq),
                dist_h: try_fit(&xs, &dh),
            },
        );
    }
    sink.json("eigfun_rates.json", &fits)?;
    Ok(sink.written)
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketSummary {
    pub upper: WidthProfile,
    pub lower: WidthProfile,
    pub reports: Vec<BracketReport>,
}

/// Two-sided bounds through bracket profiles; writes `bracket.csv` and
/// `bracket.json`.
pub fn cmd_bracket(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Vec<PathBuf>> {
    need_eps(cfg, 3)?;
    let p = &cfg.profile;
    if p.positivity() != Positivity::VanishingEndpoints {
        return Err(Error::Config(
            "bracket needs a profile vanishing at an endpoint; use sweep for positive profiles".into(),
        ));
    }
    let k = cfg.k();
    let (upper, lower) = bracket_pair(p, cfg.bracket.k_bound, cfg.bracket.eta_tilde)?;
    let reports = bracket_sweep(
        p,
        &cfg.eps,
        &cfg.mesh,
        k,
        cfg.bracket.k_bound,
        cfg.bracket.eta_tilde,
        (&cfg.truncation).into(),
        jobs,
    )?;
    let mut sink = Sink::new(out)?;
    sink.write("bracket.csv", |w| {
        writeln!(w, "eps,j,lambda_plus,lambda_minus,scaled_plus,scaled_minus,mu_ref,tolerance")?;
        for r in &reports {
            for &j in &cfg.j {
                let i = j - 1;
                writeln!(
                    w,
                    "{},{j},{},{},{},{},{},{}",
                    fmt_f64(r.eps),
                    fmt_f64(r.lambda_plus[i]),
                    fmt_f64(r.lambda_minus[i]),
                    fmt_f64(r.scaled_plus[i]),
                    fmt_f64(r.scaled_minus[i]),
                    fmt_f64(r.mu_ref[i]),
                    fmt_f64(r.tolerance[i])
                )?;
            }
        }
        Ok(())
    })?;
    sink.json("bracket.json", &BracketSummary { upper, lower, reports })?;
    Ok(sink.written)
}
