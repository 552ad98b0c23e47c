//! Dirichlet eigenproblem on `{0 < y < eps h(x)}` mapped to the rectangle
//! `[-a, b] x [0, 1]` with `s = y / (eps h(x))`, bilinear elements.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{banded_ldlt, shift_invert_lanczos_with, LanczosOptions, Spectrum, SymBanded};
use crate::profile::{Side, WidthProfile};

/// Tensor-product mesh with `nx` by `ns` cells on `[-a, b] x [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripMesh {
    pub nx: usize,
    pub ns: usize,
    pub eps: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl StripMesh {
    /// `x = 0` must be a mesh line so no cell straddles the top of the profile.
    pub fn new(p: &WidthProfile, eps: f64, nx: usize, ns: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
        }
        if nx < 2 || ns < 2 {
            return Err(Error::InvalidArgument(format!("need nx, ns >= 2, got {nx}, {ns}")));
        }
        let mesh = StripMesh {
            nx,
            ns,
            eps,
            x_lo: -p.a(),
            x_hi: p.b(),
        };
        let t = p.a() / mesh.dx();
        if (t - t.round()).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "x = 0 is not a node of the {nx}-cell mesh on [{}, {}]",
                mesh.x_lo, mesh.x_hi
            )));
        }
        Ok(mesh)
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.nx as f64
    }

    pub fn ds(&self) -> f64 {
        1.0 / self.ns as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.dx()
        }
    }

    pub fn s(&self, j: usize) -> f64 {
        j as f64 * self.ds()
    }

    /// Interior x nodes `x_1 .. x_{nx-1}`.
    pub fn x_nodes(&self) -> Vec<f64> {
        (1..self.nx).map(|i| self.x(i)).collect()
    }

    /// Number of unknowns after Dirichlet elimination.
    pub fn unknowns(&self) -> usize {
        (self.nx - 1) * (self.ns - 1)
    }

    /// Unknown index of interior node `(i, j)`, `1 <= i < nx`, `1 <= j < ns`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        (i - 1) * (self.ns - 1) + (j - 1)
    }

    /// The mesh with both spacings halved.
    pub fn refined(&self) -> StripMesh {
        StripMesh {
            nx: 2 * self.nx,
            ns: 2 * self.ns,
            ..*self
        }
    }
}

/// Stiffness and mass matrices of the mapped Dirichlet form.
#[derive(Clone, Debug)]
pub struct FormPair {
    pub stiffness: SymBanded,
    pub mass: SymBanded,
}

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

fn assemble_with(p: &WidthProfile, mesh: &StripMesh, eliminate: bool) -> Result<FormPair> {
    if p.has_vanishing_endpoints() {
        return Err(Error::RequiresBracketing);
    }
    let (nx, ns, eps) = (mesh.nx, mesh.ns, mesh.eps);
    let (dx, ds) = (mesh.dx(), mesh.ds());
    let (dim, band) = if eliminate {
        (mesh.unknowns(), ns)
    } else {
        ((nx + 1) * (ns + 1), ns + 2)
    };
    let node = |i: usize, j: usize| -> Option<usize> {
        if eliminate {
            (i > 0 && i < nx && j > 0 && j < ns).then(|| mesh.index(i, j))
        } else {
            Some(i * (ns + 1) + j)
        }
    };
    let mut k = SymBanded::zeros(dim, band);
    let mut m = SymBanded::zeros(dim, band);

    for ci in 0..nx {
        let (x0, x1) = (mesh.x(ci), mesh.x(ci + 1));
        // coefficients depend on x only: evaluate once per Gauss abscissa
        let mut xq = [(0.0, 0.0, 0.0); 2];
        for (q, g) in GAUSS.iter().enumerate() {
            let x = 0.5 * (x0 + x1) + 0.5 * g * (x1 - x0);
            let h = p.eval_h(x)?;
            if !(h > 0.0) {
                return Err(Error::Singular { x });
            }
            let dh = p.eval_h_prime(x, Side::Right)?;
            let t = 0.5 * (1.0 + g);
            xq[q] = (t, h, dh / h);
        }
        for cj in 0..ns {
            let s0 = mesh.s(cj);
            let mut ke = [[0.0; 4]; 4];
            let mut me = [[0.0; 4]; 4];
            for &(tx, h, g) in &xq {
                for gs in GAUSS {
                    let ts = 0.5 * (1.0 + gs);
                    let s = s0 + ts * ds;
                    let w = 0.25 * dx * ds * eps * h;
                    // local nodes: (0,0), (1,0), (0,1), (1,1) in (x, s)
                    let nxv = [1.0 - tx, tx];
                    let dnx = [-1.0 / dx, 1.0 / dx];
                    let nsv = [1.0 - ts, ts];
                    let dns = [-1.0 / ds, 1.0 / ds];
                    let mut val = [0.0; 4];
                    let mut dxv = [0.0; 4];
                    let mut dsv = [0.0; 4];
                    for b in 0..2 {
                        for a in 0..2 {
                            let l = 2 * b + a;
                            val[l] = nxv[a] * nsv[b];
                            dxv[l] = dnx[a] * nsv[b];
                            dsv[l] = nxv[a] * dns[b];
                        }
                    }
                    let transverse = 1.0 / (eps * eps * h * h);
                    for r in 0..4 {
                        let dr = dxv[r] - s * g * dsv[r];
                        for c in 0..4 {
                            let dc = dxv[c] - s * g * dsv[c];
                            ke[r][c] += w * (dr * dc + transverse * dsv[r] * dsv[c]);
                            me[r][c] += w * val[r] * val[c];
                        }
                    }
                }
            }
            let ids = [
                node(ci, cj),
                node(ci + 1, cj),
                node(ci, cj + 1),
                node(ci + 1, cj + 1),
            ];
            for r in 0..4 {
                let Some(gr) = ids[r] else { continue };
                for c in 0..=r {
                    let Some(gc) = ids[c] else { continue };
                    k.add(gr, gc, ke[r][c]);
                    m.add(gr, gc, me[r][c]);
                }
            }
        }
    }
    Ok(FormPair {
        stiffness: k,
        mass: m,
    })
}

/// Assemble with Dirichlet nodes eliminated (unknown order as
/// [`StripMesh::index`], half-bandwidth `ns`).
pub fn assemble_strip(p: &WidthProfile, eps: f64, nx: usize, ns: usize) -> Result<FormPair> {
    let mesh = StripMesh::new(p, eps, nx, ns)?;
    assemble_with(p, &mesh, true)
}

/// Assemble over all `(nx + 1)(ns + 1)` nodes, boundary included; node
/// `(i, j)` has index `i (ns + 1) + j`.
pub fn assemble_strip_full(p: &WidthProfile, eps: f64, nx: usize, ns: usize) -> Result<FormPair> {
    let mesh = StripMesh::new(p, eps, nx, ns)?;
    assemble_with(p, &mesh, false)
}

/// Count of eigenvalues below a shift, from the LDL^T inertia.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaCertificate {
    pub shift: f64,
    pub below: usize,
}

#[derive(Clone, Debug)]
pub struct StripSolution {
    pub mesh: StripMesh,
    pub profile: WidthProfile,
    /// Vectors on the unknowns, normalized in the discrete `L^2(Omega_eps)`
    /// norm (trapezoid in x, exact linear-element mass in s).
    pub spectrum: Spectrum,
    pub residuals: Vec<f64>,
    pub shift: f64,
    pub certificates: Vec<InertiaCertificate>,
}

/// Exact `P1` mass on `[0, 1]` with `ns` cells, interior nodes only.
fn s_mass_apply(ns: usize, u: &[f64]) -> Vec<f64> {
    let ds = 1.0 / ns as f64;
    let n = u.len();
    (0..n)
        .map(|j| {
            let mut v = 4.0 * u[j];
            if j > 0 {
                v += u[j - 1];
            }
            if j + 1 < n {
                v += u[j + 1];
            }
            v * ds / 6.0
        })
        .collect()
}

/// Interior nodal values of `sin(pi s)` scaled so the exact `P1` integral of
/// the square is `1/2`, like the continuous mode.
fn discrete_mode(ns: usize) -> (Vec<f64>, Vec<f64>) {
    let phi: Vec<f64> = (1..ns).map(|j| (PI * j as f64 / ns as f64).sin()).collect();
    let mphi = s_mass_apply(ns, &phi);
    let q: f64 = phi.iter().zip(&mphi).map(|(a, b)| a * b).sum();
    let c = (0.5 / q).sqrt();
    (
        phi.iter().map(|v| v * c).collect(),
        mphi.iter().map(|v| v * c).collect(),
    )
}

impl StripSolution {
    /// Wrap nodal data (one vector per mode on the unknowns) as a solution,
    /// e.g. to project manufactured fields.
    pub fn from_nodal(p: &WidthProfile, mesh: StripMesh, values: Vec<f64>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != vectors.len() {
            return Err(Error::InvalidArgument("one value per vector required".into()));
        }
        if vectors.iter().any(|v| v.len() != mesh.unknowns()) {
            return Err(Error::GridMismatch(format!(
                "vectors must have {} entries",
                mesh.unknowns()
            )));
        }
        let pairs = values
            .into_iter()
            .zip(vectors)
            .map(|(value, vector)| crate::linalg::EigenPair { value, vector })
            .collect();
        Ok(StripSolution {
            mesh,
            profile: p.clone(),
            spectrum: Spectrum {
                pairs,
                near_degenerate: Vec::new(),
            },
            residuals: Vec::new(),
            shift: f64::NAN,
            certificates: Vec::new(),
        })
    }

    pub fn values(&self) -> Vec<f64> {
        self.spectrum.values()
    }

    pub fn len(&self) -> usize {
        self.spectrum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectrum.is_empty()
    }

    fn column(&self, j: usize, i: usize) -> &[f64] {
        let n = self.mesh.ns - 1;
        &self.spectrum.vector(j)[(i - 1) * n..i * n]
    }

    fn widths(&self) -> Result<Vec<f64>> {
        self.mesh
            .x_nodes()
            .into_iter()
            .map(|x| Ok(self.mesh.eps * self.profile.eval_h(x)?))
            .collect()
    }

    /// Discrete `L^2(Omega_eps)` norm squared of mode `j`.
    pub fn norm_sq(&self, j: usize) -> Result<f64> {
        let widths = self.widths()?;
        let mut total = 0.0;
        for (i, w) in (1..self.mesh.nx).zip(widths) {
            let u = self.column(j, i);
            let mu = s_mass_apply(self.mesh.ns, u);
            total += self.mesh.dx() * w * u.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(total)
    }

    /// `P_eps` applied to mode `j`: the coefficient `chi(x_i)` of the first
    /// transverse mode at every interior x node.
    pub fn transverse_project(&self, j: usize) -> Result<Vec<f64>> {
        if j >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {j} requested, {} available",
                self.len()
            )));
        }
        let (_, mphi) = discrete_mode(self.mesh.ns);
        let widths = self.widths()?;
        Ok((1..self.mesh.nx)
            .zip(widths)
            .map(|(i, w)| {
                let u = self.column(j, i);
                (2.0 * w).sqrt() * u.iter().zip(&mphi).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect())
    }

    /// `(||P Psi||^2, ||(I - P) Psi||^2)` in the discrete norm.
    pub fn norm_split(&self, j: usize) -> Result<(f64, f64)> {
        let chi = self.transverse_project(j)?;
        let proj: f64 = self.mesh.dx() * chi.iter().map(|c| c * c).sum::<f64>();
        Ok((proj, self.norm_sq(j)? - proj))
    }

    /// Nodal values of `chi(x) sqrt(2 / (eps h(x))) sin(pi s)` (discrete
    /// transverse mode), the element of the transverse subspace built on `chi`.
    pub fn lift(p: &WidthProfile, mesh: &StripMesh, chi: &[f64]) -> Result<Vec<f64>> {
        if chi.len() != mesh.nx - 1 {
            return Err(Error::GridMismatch(format!(
                "chi has {} samples, mesh has {} interior x nodes",
                chi.len(),
                mesh.nx - 1
            )));
        }
        let (phi, _) = discrete_mode(mesh.ns);
        let mut out = Vec::with_capacity(mesh.unknowns());
        for (x, c) in mesh.x_nodes().into_iter().zip(chi) {
            let scale = c * (2.0 / (mesh.eps * p.eval_h(x)?)).sqrt();
            out.extend(phi.iter().map(|f| scale * f));
        }
        Ok(out)
    }

    /// Write mode `j` as `x,s,value` rows over all mesh nodes (boundary
    /// zeros included), x-major, after `#` metadata lines.
    pub fn write_csv<W: Write>(&self, j: usize, mut w: W) -> Result<()> {
        let m = &self.mesh;
        writeln!(w, "# eps = {:.16e}", m.eps)?;
        writeln!(w, "# nx = {}, ns = {}", m.nx, m.ns)?;
        writeln!(w, "# mode = {}, lambda = {:.16e}", j + 1, self.spectrum.value(j))?;
        writeln!(w, "# profile = {}", serde_json::to_string(&self.profile)?)?;
        writeln!(w, "x,s,value")?;
        let v = self.spectrum.vector(j);
        for i in 0..=m.nx {
            for jj in 0..=m.ns {
                let val = if i == 0 || i == m.nx || jj == 0 || jj == m.ns {
                    0.0
                } else {
                    v[m.index(i, jj)]
                };
                writeln!(w, "{:.16e},{:.16e},{:.16e}", m.x(i), m.s(jj), val)?;
            }
        }
        Ok(())
    }
}

/// The `k` lowest eigenpairs of the strip, via shift-invert Lanczos at
/// `0.999 pi^2 / (M eps)^2`.
///
/// The shift must have inertia 0 (one retry at a lower shift), and the
/// count below the midpoint after every returned eigenvalue must equal its
/// index.
pub fn solve_strip(p: &WidthProfile, eps: f64, nx: usize, ns: usize, k: usize, tol: f64) -> Result<StripSolution> {
    let mesh = StripMesh::new(p, eps, nx, ns)?;
    let forms = assemble_with(p, &mesh, true)?;
    let n = mesh.unknowns();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= k < {n}, got {k}")));
    }
    let threshold = p.threshold(eps);
    let mut shift = 0.999 * threshold;
    let mut inertia = banded_ldlt(&forms.stiffness, shift, Some(&forms.mass))?.inertia();
    if inertia != 0 {
        log::warn!("inertia {inertia} at shift {shift}; retrying lower");
        shift = 0.9 * threshold;
        inertia = banded_ldlt(&forms.stiffness, shift, Some(&forms.mass))?.inertia();
        if inertia != 0 {
            return Err(Error::Inertia {
                shift,
                found: inertia,
                expected: 0,
            });
        }
    }
    let opts = LanczosOptions::default();
    let out = shift_invert_lanczos_with(&forms.stiffness, &forms.mass, shift, k + 1, tol, &opts)
        .map_err(|e| e.context(format!("strip solve at eps = {eps}, mesh {nx}x{ns}")))?;
    let values = out.spectrum.values();

    let mut certificates = Vec::with_capacity(k);
    for j in 0..k {
        let (lo, hi) = (values[j], values[j + 1]);
        if hi - lo <= 1e-10 * hi.abs() {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let below = banded_ldlt(&forms.stiffness, mid, Some(&forms.mass))?.inertia();
        if below != j + 1 {
            return Err(Error::Inertia {
                shift: mid,
                found: below,
                expected: j + 1,
            });
        }
        certificates.push(InertiaCertificate { shift: mid, below });
    }

    let mut spectrum = out.spectrum;
    spectrum.pairs.truncate(k);
    spectrum.near_degenerate.retain(|&i| i + 1 < k);
    let mut sol = StripSolution {
        mesh,
        profile: p.clone(),
        spectrum,
        residuals: out.residuals[..k].to_vec(),
        shift,
        certificates,
    };
    for j in 0..k {
        let nrm = sol.norm_sq(j)?.sqrt();
        let v = &mut sol.spectrum.pairs[j].vector;
        // fix the sign by the largest-magnitude sample
        let big = v.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if big < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / nrm);
    }
    if let Some(&l1) = sol.values().first() {
        if !(l1 > threshold) {
            return Err(Error::InvalidArgument(format!(
                "lambda_1 = {l1} is not above the threshold {threshold} at eps = {eps}"
            )));
        }
    }
    Ok(sol)
}

/// Solves on a mesh and its refinement with Richardson-extrapolated values.
#[derive(Clone, Debug)]
pub struct ExtrapolatedStrip {
    pub coarse: StripSolution,
    pub fine: StripSolution,
    /// `(4 lambda_fine - lambda_coarse) / 3`.
    pub values: Vec<f64>,
}

impl ExtrapolatedStrip {
    /// Richardson-extrapolated transverse projection of mode `j` on the
    /// coarse x nodes, fine-mesh sign convention.
    pub fn transverse_project(&self, j: usize) -> Result<Vec<f64>> {
        let c = self.coarse.transverse_project(j)?;
        let f = self.fine.transverse_project(j)?;
        let f_on_c: Vec<f64> = (0..c.len()).map(|i| f[2 * i + 1]).collect();
        let dot: f64 = c.iter().zip(&f_on_c).map(|(a, b)| a * b).sum();
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        Ok(c.iter()
            .zip(&f_on_c)
            .map(|(a, b)| (4.0 * b - sign * a) / 3.0)
            .collect())
    }
}

pub fn solve_strip_extrapolated(
    p: &WidthProfile,
    eps: f64,
    nx: usize,
    ns: usize,
    k: usize,
    tol: f64,
) -> Result<ExtrapolatedStrip> {
    let coarse = solve_strip(p, eps, nx, ns, k, tol)?;
    let fine = solve_strip(p, eps, 2 * nx, 2 * ns, k, tol)?;
    let values = coarse
        .values()
        .iter()
        .zip(fine.values())
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    Ok(ExtrapolatedStrip { coarse, fine, values })
}
