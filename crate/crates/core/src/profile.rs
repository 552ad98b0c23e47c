//! Width profiles `h(x)` on `[-a, b]` and the potentials derived from them.
//!
//! Every profile is stored as a list of pieces, each a finite sum of terms
//! `coef * |x|^power` in the distance from the maximum point `x = 0`. The two
//! closed-form families (`smooth_poly`, `broken_line`) are expanded into two
//! such pieces; `custom_piecewise` takes them verbatim. This keeps values and
//! one-sided derivatives exact everywhere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient of `h'^2 / h^2` in the transverse-mode potential `v`.
pub const V_COEFFICIENT: f64 = PI * PI / 3.0 + 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    SmoothPoly,
    BrokenLine,
    CustomPiecewise,
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    TwoSided,
}

/// Positivity of `h` on the closed interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Positivity {
    /// `h > 0` on `[-a, b]`.
    Strict,
    /// `h > 0` inside, `h = 0` at one or both endpoints.
    VanishingEndpoints,
}

/// One polynomial piece: `h(x) = sum coef * |x|^power` for `x` in `[start, end]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    /// `(coef, power)` pairs; powers are `0` or `>= 1`.
    pub terms: Vec<(f64, f64)>,
}

impl Piece {
    fn value(&self, x: f64) -> f64 {
        let r = x.abs();
        self.terms
            .iter()
            .map(|&(c, p)| if p == 0.0 { c } else { c * r.powf(p) })
            .sum()
    }

    /// Derivative in `x`; `dir` is the sign of `x` used at `x = 0`.
    fn derivative(&self, x: f64, dir: f64) -> f64 {
        let r = x.abs();
        let sgn = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            dir
        };
        self.terms
            .iter()
            .map(|&(c, p)| {
                if p == 0.0 {
                    0.0
                } else if p == 1.0 {
                    c * sgn
                } else {
                    c * p * r.powf(p - 1.0) * sgn
                }
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSpec {
    kind: ProfileKind,
    #[serde(rename = "M")]
    max_width: f64,
    #[serde(rename = "m", default, skip_serializing_if = "Option::is_none")]
    order: Option<f64>,
    c_plus: f64,
    c_minus: f64,
    #[serde(rename = "K_plus", default)]
    k_plus: f64,
    #[serde(rename = "K_minus", default)]
    k_minus: f64,
    a: f64,
    b: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pieces: Vec<Piece>,
}

/// Width profile of the strip `{0 < y < eps h(x)}` over `[-a, b]`.
///
/// `max_width`, `order`, `c_plus`, `c_minus` are the leading expansion
/// `h(x) = M - c_pm |x|^m + O(|x|^{m+1})` at the maximum point `x = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub struct WidthProfile {
    kind: ProfileKind,
    max_width: f64,
    order: f64,
    c_plus: f64,
    c_minus: f64,
    k_plus: f64,
    k_minus: f64,
    a: f64,
    b: f64,
    pieces: Vec<Piece>,
    positivity: Positivity,
}

impl TryFrom<ProfileSpec> for WidthProfile {
    type Error = Error;

    fn try_from(s: ProfileSpec) -> Result<Self> {
        match s.kind {
            ProfileKind::SmoothPoly => {
                let m = s
                    .order
                    .ok_or_else(|| Error::InvalidProfile("smooth_poly requires m".into()))?;
                if !s.pieces.is_empty() {
                    return Err(Error::InvalidProfile(
                        "pieces are only allowed for custom_piecewise".into(),
                    ));
                }
                Self::smooth_poly_with_correction(
                    s.max_width,
                    m,
                    s.c_plus,
                    s.c_minus,
                    s.k_plus,
                    s.k_minus,
                    s.a,
                    s.b,
                )
            }
            ProfileKind::BrokenLine => {
                if let Some(m) = s.order {
                    if m != 1.0 {
                        return Err(Error::InvalidProfile("broken_line has m = 1".into()));
                    }
                }
                if !s.pieces.is_empty() || s.k_plus != 0.0 || s.k_minus != 0.0 {
                    return Err(Error::InvalidProfile(
                        "broken_line takes only M, c_plus, c_minus, a, b".into(),
                    ));
                }
                Self::broken_line(s.max_width, s.c_plus, s.c_minus, s.a, s.b)
            }
            ProfileKind::CustomPiecewise => {
                let m = s
                    .order
                    .ok_or_else(|| Error::InvalidProfile("custom_piecewise requires m".into()))?;
                let mut p = Self::custom(s.max_width, m, s.c_plus, s.c_minus, s.a, s.b, s.pieces)?;
                p.k_plus = s.k_plus;
                p.k_minus = s.k_minus;
                Ok(p)
            }
        }
    }
}

impl From<WidthProfile> for ProfileSpec {
    fn from(p: WidthProfile) -> Self {
        ProfileSpec {
            kind: p.kind,
            max_width: p.max_width,
            order: match p.kind {
                ProfileKind::BrokenLine => None,
                _ => Some(p.order),
            },
            c_plus: p.c_plus,
            c_minus: p.c_minus,
            k_plus: p.k_plus,
            k_minus: p.k_minus,
            a: p.a,
            b: p.b,
            pieces: match p.kind {
                ProfileKind::CustomPiecewise => p.pieces,
                _ => Vec::new(),
            },
        }
    }
}

fn check_finite_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_finite_nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn two_sided_pieces(
    a: f64,
    b: f64,
    left_terms: Vec<(f64, f64)>,
    right_terms: Vec<(f64, f64)>,
) -> Vec<Piece> {
    vec![
        Piece {
            start: -a,
            end: 0.0,
            terms: left_terms,
        },
        Piece {
            start: 0.0,
            end: b,
            terms: right_terms,
        },
    ]
}

impl WidthProfile {
    /// `h(x) = M - c_pm |x|^m`.
    pub fn smooth_poly(m_width: f64, m: f64, c_plus: f64, c_minus: f64, a: f64, b: f64) -> Result<Self> {
        Self::smooth_poly_with_correction(m_width, m, c_plus, c_minus, 0.0, 0.0, a, b)
    }

    /// `h(x) = M - c_pm |x|^m + K_pm |x|^{m+1}`. The correction coefficients
    /// may carry either sign.
    #[allow(clippy::too_many_arguments)]
    pub fn smooth_poly_with_correction(
        m_width: f64,
        m: f64,
        c_plus: f64,
        c_minus: f64,
        k_plus: f64,
        k_minus: f64,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        if !(k_plus.is_finite() && k_minus.is_finite()) {
            return Err(Error::InvalidProfile("K_plus, K_minus must be finite".into()));
        }
        let pieces = two_sided_pieces(
            a,
            b,
            vec![(m_width, 0.0), (-c_minus, m), (k_minus, m + 1.0)],
            vec![(m_width, 0.0), (-c_plus, m), (k_plus, m + 1.0)],
        );
        let mut p = Self::build(ProfileKind::SmoothPoly, m_width, m, c_plus, c_minus, a, b, pieces)?;
        p.k_plus = k_plus;
        p.k_minus = k_minus;
        Ok(p)
    }

    /// `h(x) = M - c_pm |x|`, the `m = 1` corner profile.
    pub fn broken_line(m_width: f64, c_plus: f64, c_minus: f64, a: f64, b: f64) -> Result<Self> {
        let pieces = two_sided_pieces(
            a,
            b,
            vec![(m_width, 0.0), (-c_minus, 1.0)],
            vec![(m_width, 0.0), (-c_plus, 1.0)],
        );
        Self::build(ProfileKind::BrokenLine, m_width, 1.0, c_plus, c_minus, a, b, pieces)
    }

    /// Piecewise profile with explicit breakpoints. `x = 0` must be a breakpoint
    /// and the pieces must cover `[-a, b]` continuously.
    pub fn custom(
        m_width: f64,
        m: f64,
        c_plus: f64,
        c_minus: f64,
        a: f64,
        b: f64,
        pieces: Vec<Piece>,
    ) -> Result<Self> {
        Self::build(ProfileKind::CustomPiecewise, m_width, m, c_plus, c_minus, a, b, pieces)
    }

    /// Constant width `h = M`; expansion conditions do not hold, but the strip
    /// is a rectangle with a separable spectrum. Used for solver validation.
    pub fn constant(m_width: f64, a: f64, b: f64) -> Result<Self> {
        let pieces = two_sided_pieces(a, b, vec![(m_width, 0.0)], vec![(m_width, 0.0)]);
        Self::build(ProfileKind::CustomPiecewise, m_width, 2.0, 0.0, 0.0, a, b, pieces)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        kind: ProfileKind,
        max_width: f64,
        order: f64,
        c_plus: f64,
        c_minus: f64,
        a: f64,
        b: f64,
        pieces: Vec<Piece>,
    ) -> Result<Self> {
        check_finite_positive("M", max_width)?;
        check_finite_positive("a", a)?;
        check_finite_positive("b", b)?;
        check_finite_nonnegative("c_plus", c_plus)?;
        check_finite_nonnegative("c_minus", c_minus)?;
        if !(order.is_finite() && order >= 1.0) {
            return Err(Error::InvalidProfile(format!("m must be >= 1, got {order}")));
        }
        check_pieces(&pieces, a, b, max_width)?;
        let mut p = WidthProfile {
            kind,
            max_width,
            order,
            c_plus,
            c_minus,
            k_plus: 0.0,
            k_minus: 0.0,
            a,
            b,
            pieces,
            positivity: Positivity::Strict,
        };
        p.positivity = p.classify_positivity()?;
        Ok(p)
    }

    fn classify_positivity(&self) -> Result<Positivity> {
        let n = 4000;
        let zero_tol = 1e-12 * self.max_width;
        for i in 1..n {
            let x = -self.a + (self.a + self.b) * i as f64 / n as f64;
            let h = self.eval_h(x)?;
            if !(h > zero_tol) {
                return Err(Error::InvalidProfile(format!(
                    "h must be positive inside the interval; h({x}) = {h}"
                )));
            }
        }
        let ends = [self.eval_h(-self.a)?, self.eval_h(self.b)?];
        if ends.iter().any(|&h| h < -zero_tol) {
            return Err(Error::InvalidProfile("h is negative at an endpoint".into()));
        }
        if ends.iter().any(|&h| h <= zero_tol) {
            Ok(Positivity::VanishingEndpoints)
        } else {
            Ok(Positivity::Strict)
        }
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }
    /// `M`, the maximal width.
    pub fn max_width(&self) -> f64 {
        self.max_width
    }
    /// Contact order `m`.
    pub fn order(&self) -> f64 {
        self.order
    }
    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }
    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }
    pub fn k_plus(&self) -> f64 {
        self.k_plus
    }
    pub fn k_minus(&self) -> f64 {
        self.k_minus
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn interval(&self) -> (f64, f64) {
        (-self.a, self.b)
    }
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }
    pub fn positivity(&self) -> Positivity {
        self.positivity
    }
    pub fn has_vanishing_endpoints(&self) -> bool {
        self.positivity == Positivity::VanishingEndpoints
    }

    /// Interior breakpoints, including `x = 0`.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.start).collect()
    }

    fn check_domain(&self, x: f64) -> Result<f64> {
        let slack = 1e-12 * (self.a + self.b);
        if !x.is_finite() || x < -self.a - slack || x > self.b + slack {
            return Err(Error::Domain {
                x,
                lo: -self.a,
                hi: self.b,
            });
        }
        Ok(x.clamp(-self.a, self.b))
    }

    fn piece_index(&self, x: f64, side: Side) -> usize {
        let last = self.pieces.len() - 1;
        match side {
            Side::Right => self
                .pieces
                .iter()
                .position(|p| x < p.end)
                .unwrap_or(last),
            _ => self
                .pieces
                .iter()
                .position(|p| x <= p.end)
                .unwrap_or(last),
        }
    }

    pub fn eval_h(&self, x: f64) -> Result<f64> {
        let x = self.check_domain(x)?;
        Ok(self.pieces[self.piece_index(x, Side::Left)].value(x))
    }

    /// `h'(x)`; at breakpoints the side must be chosen unless both one-sided
    /// slopes agree.
    pub fn eval_h_prime(&self, x: f64, side: Side) -> Result<f64> {
        let x = self.check_domain(x)?;
        let left = || {
            let i = self.piece_index(x, Side::Left);
            self.pieces[i].derivative(x, -1.0)
        };
        let right = || {
            let i = self.piece_index(x, Side::Right);
            self.pieces[i].derivative(x, 1.0)
        };
        match side {
            Side::Left if x > -self.a => Ok(left()),
            Side::Right if x < self.b => Ok(right()),
            Side::Left | Side::Right => Ok(if x >= self.b { left() } else { right() }),
            Side::TwoSided => {
                if x <= -self.a {
                    return Ok(right());
                }
                if x >= self.b {
                    return Ok(left());
                }
                let (l, r) = (left(), right());
                let scale = l.abs().max(r.abs()).max(self.max_width);
                if (l - r).abs() <= 1e-10 * scale {
                    Ok(0.5 * (l + r))
                } else {
                    Err(Error::DerivativeUndefined { x })
                }
            }
        }
    }

    /// Whether `h'` jumps at `x`.
    pub fn is_kink(&self, x: f64) -> bool {
        matches!(
            self.eval_h_prime(x, Side::TwoSided),
            Err(Error::DerivativeUndefined { .. })
        )
    }

    fn positive_width(&self, x: f64) -> Result<f64> {
        let h = self.eval_h(x)?;
        if h <= 1e-12 * self.max_width {
            return Err(Error::Singular { x });
        }
        Ok(h)
    }

    /// `v(x) = (pi^2/3 + 1/4) h'^2 / h^2`.
    pub fn v_potential(&self, x: f64) -> Result<f64> {
        self.v_potential_sided(x, Side::TwoSided)
    }

    pub fn v_potential_sided(&self, x: f64, side: Side) -> Result<f64> {
        let h = self.positive_width(x)?;
        let dh = self.eval_h_prime(x, side)?;
        Ok(V_COEFFICIENT * dh * dh / (h * h))
    }

    /// `W_eps(x) = (pi^2/eps^2)(1/h^2 - 1/M^2) + v(x)`.
    pub fn w_potential(&self, eps: f64, x: f64) -> Result<f64> {
        self.w_potential_sided(eps, x, Side::TwoSided)
    }

    pub fn w_potential_sided(&self, eps: f64, x: f64, side: Side) -> Result<f64> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
        }
        let h = self.positive_width(x)?;
        let mw = self.max_width;
        let confining = PI * PI / (eps * eps) * (1.0 / (h * h) - 1.0 / (mw * mw));
        Ok(confining.max(0.0) + self.v_potential_sided(x, side)?)
    }

    /// `W_eps` as a grid potential: at a kink of `h` the two one-sided limits
    /// are averaged.
    pub fn w_potential_node(&self, eps: f64, x: f64) -> Result<f64> {
        match self.w_potential(eps, x) {
            Err(Error::DerivativeUndefined { .. }) => Ok(0.5
                * (self.w_potential_sided(eps, x, Side::Left)?
                    + self.w_potential_sided(eps, x, Side::Right)?)),
            other => other,
        }
    }

    /// Limit potential `q(x) = 2 pi^2 M^-3 c_pm |x|^m` on the whole line.
    pub fn q_limit(&self, x: f64) -> f64 {
        let c = if x > 0.0 {
            self.c_plus
        } else if x < 0.0 {
            self.c_minus
        } else {
            return 0.0;
        };
        2.0 * PI * PI * c * x.abs().powf(self.order) / self.max_width.powi(3)
    }

    /// Scaling exponent `alpha = 2 / (m + 2)`.
    pub fn alpha(&self) -> f64 {
        2.0 / (self.order + 2.0)
    }

    /// Transverse threshold `pi^2 / (M eps)^2`.
    pub fn threshold(&self, eps: f64) -> f64 {
        PI * PI / (self.max_width * eps).powi(2)
    }

    /// `min_x pi^2 (1/h^2 - 1/M^2) / |x|^m` over `grid`: the eps-independent
    /// constant in `W_eps >= sigma eps^-2 |x|^m`.
    pub fn sigma_diagnostic(&self, grid: &[f64]) -> Result<f64> {
        if grid.is_empty() {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        let mw2 = self.max_width * self.max_width;
        let mut sigma = f64::INFINITY;
        let mut worst = 0.0;
        for &x in grid {
            if x == 0.0 {
                return Err(Error::InvalidArgument("sigma grid must avoid x = 0".into()));
            }
            let h = self.positive_width(x)?;
            let val = PI * PI * (1.0 / (h * h) - 1.0 / mw2) / x.abs().powf(self.order);
            if val < sigma {
                sigma = val;
                worst = x;
            }
        }
        if sigma > 0.0 {
            Ok(sigma)
        } else {
            Err(Error::ValidationFailed(vec![format!(
                "sigma diagnostic {sigma:e} <= 0 at x = {worst}: h reaches M away from 0"
            )]))
        }
    }

    /// `max |h(x) - M + c_pm |x|^m| / |x|^{m+1}` over a fine grid of
    /// `0 < |x| <= reach * side_length` on both sides.
    pub fn remainder_bound(&self, reach: f64) -> f64 {
        let n = 2000;
        let mut k: f64 = 0.0;
        for (len, c, sgn) in [(self.b, self.c_plus, 1.0), (self.a, self.c_minus, -1.0)] {
            for i in 1..=n {
                let r = reach * len * i as f64 / n as f64;
                let h = self.eval_h(sgn * r).unwrap_or(0.0);
                let mut rem = (h - self.max_width + c * r.powf(self.order)).abs();
                if rem <= 8.0 * f64::EPSILON * self.max_width {
                    rem = 0.0;
                }
                k = k.max(rem / r.powf(self.order + 1.0));
            }
        }
        k
    }

    /// Uniform validation grid of `n + 1` points on `[-a, b]` with `x = 0` inserted.
    pub fn validation_grid(&self, n: usize) -> Vec<f64> {
        let mut g: Vec<f64> = (0..=n)
            .map(|i| -self.a + (self.a + self.b) * i as f64 / n as f64)
            .collect();
        if !g.contains(&0.0) {
            g.push(0.0);
            g.sort_by(|p, q| p.total_cmp(q));
        }
        g
    }

    /// Maximum of `h` on `[lo, hi]`: bisection on `h'` when it changes sign
    /// there, golden-section search otherwise.
    fn refine_maximum(&self, lo: f64, hi: f64) -> (f64, f64) {
        let f = |x: f64| self.eval_h(x).unwrap_or(f64::NEG_INFINITY);
        let slope = |x: f64, side: Side| self.eval_h_prime(x, side).ok();
        if let (Some(dl), Some(dh)) = (slope(lo, Side::Right), slope(hi, Side::Left)) {
            if dl > 0.0 && dh < 0.0 && !self.breakpoints().iter().any(|&z| lo < z && z < hi) {
                let (mut lo, mut hi) = (lo, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    match slope(mid, Side::Right) {
                        Some(d) if d > 0.0 => lo = mid,
                        _ => hi = mid,
                    }
                }
                let x = 0.5 * (lo + hi);
                return (x, f(x));
            }
        }
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
                break;
            }
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if f(x1) < f(x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        let x = 0.5 * (lo + hi);
        (x, f(x))
    }

    /// Check conditions (i)-(ii) on a fine grid.
    pub fn validate(&self, n: usize) -> ValidationReport {
        let mut violations = Vec::new();
        let mw = self.max_width;
        if self.c_plus <= 0.0 || self.c_minus <= 0.0 {
            violations.push(format!(
                "expansion coefficients must be positive (c_plus = {}, c_minus = {})",
                self.c_plus, self.c_minus
            ));
        }
        let grid = self.validation_grid(n.max(10));
        let h0 = self.eval_h(0.0).unwrap_or(f64::NAN);
        if (h0 - mw).abs() > 1e-12 * mw {
            violations.push(format!("h(0) = {h0} differs from M = {mw}"));
        }

        // Global maximum at 0 only: refine every interior local maximum of the
        // sampled h and flag those that reach M.
        let tie = 1e-12 * mw;
        let values: Vec<f64> = grid.iter().map(|&x| self.eval_h(x).unwrap_or(f64::NAN)).collect();
        let mut maxima = vec![0.0];
        for (i, (&x, &h)) in grid.iter().zip(&values).enumerate() {
            if h > mw + tie {
                violations.push(format!("h({x}) = {h} exceeds M = {mw}"));
            }
            if x == 0.0 {
                continue;
            }
            let left_ok = i == 0 || values[i - 1] <= h;
            let right_ok = i + 1 == grid.len() || values[i + 1] <= h;
            if !(left_ok && right_ok) {
                continue;
            }
            let lo = if i == 0 { x } else { grid[i - 1] };
            let hi = if i + 1 == grid.len() { x } else { grid[i + 1] };
            let (xm, hm) = self.refine_maximum(lo, hi);
            if hm >= mw - tie && xm.abs() > 1e-9 && !maxima.iter().any(|&z: &f64| (z - xm).abs() < 1e-9) {
                maxima.push(xm);
            }
        }
        if maxima.len() > 1 {
            let locs: Vec<String> = maxima.iter().map(|x| format!("{x}")).collect();
            violations.push(format!(
                "maximum M = {mw} attained at several points: x = {}",
                locs.join(", ")
            ));
        }

        // Expansion consistency: (M - h)/|x|^m -> c_pm with an O(|x|) error.
        for (sgn, c, len, label) in [
            (1.0, self.c_plus, self.b, "right"),
            (-1.0, self.c_minus, self.a, "left"),
        ] {
            if c <= 0.0 {
                continue;
            }
            let r0 = (1e-6 * mw / c).powf(1.0 / self.order).min(0.25 * len);
            let est = |r: f64| (mw - self.eval_h(sgn * r).unwrap_or(f64::NAN)) / r.powf(self.order);
            let (e1, e2) = ((est(r0) - c).abs(), (est(0.5 * r0) - c).abs());
            if !(e1 <= 1e-2 * c && e2 <= 0.75 * e1 + 1e-8 * c) {
                violations.push(format!(
                    "{label} expansion inconsistent: (M - h)/|x|^m = {} at |x| = {r0}, expected {c}",
                    est(r0)
                ));
            }
        }

        let positivity = self.positivity;
        let sigma_grid: Vec<f64> = grid
            .iter()
            .chain(maxima.iter().skip(1))
            .copied()
            .filter(|&x| x != 0.0 && self.eval_h(x).map(|h| h > tie).unwrap_or(false))
            .collect();
        let sigma = match self.sigma_diagnostic(&sigma_grid) {
            Ok(s) => Some(s),
            Err(Error::ValidationFailed(v)) => {
                violations.extend(v);
                None
            }
            Err(e) => {
                violations.push(e.to_string());
                None
            }
        };
        ValidationReport {
            passed: violations.is_empty(),
            positivity,
            maxima,
            sigma,
            remainder_bound: self.remainder_bound(0.5),
            violations,
        }
    }
}

fn check_pieces(pieces: &[Piece], a: f64, b: f64, mw: f64) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidProfile(msg));
    if pieces.is_empty() {
        return bad("no pieces".into());
    }
    let tol = 1e-12 * (a + b);
    if (pieces[0].start + a).abs() > tol || (pieces[pieces.len() - 1].end - b).abs() > tol {
        return bad(format!("pieces must cover [{}, {b}]", -a));
    }
    let mut has_zero = false;
    for (i, p) in pieces.iter().enumerate() {
        if !(p.start < p.end) {
            return bad(format!("piece {i} has start >= end"));
        }
        if p.start < 0.0 && p.end > 0.0 {
            return bad(format!("piece {i} straddles x = 0; split it there"));
        }
        if p.terms.is_empty() {
            return bad(format!("piece {i} has no terms"));
        }
        for &(c, pow) in &p.terms {
            if !c.is_finite() || !(pow == 0.0 || pow >= 1.0) || !pow.is_finite() {
                return bad(format!(
                    "piece {i}: term ({c}, {pow}) needs a finite coefficient and power 0 or >= 1"
                ));
            }
        }
        if p.end == 0.0 {
            has_zero = true;
        }
        if i + 1 < pieces.len() {
            let q = &pieces[i + 1];
            if (q.start - p.end).abs() > tol {
                return bad(format!("gap between pieces {i} and {}", i + 1));
            }
            let jump = (p.value(p.end) - q.value(q.start)).abs();
            if jump > 1e-9 * mw {
                return bad(format!("h jumps by {jump} at x = {}", p.end));
            }
        }
    }
    if !has_zero {
        return bad("x = 0 must be a breakpoint".into());
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub positivity: Positivity,
    /// Points where `h` attains `M` (always starts with `0`).
    pub maxima: Vec<f64>,
    pub sigma: Option<f64>,
    /// Fitted remainder constant `K` of the expansion on half of each side.
    pub remainder_bound: f64,
    pub violations: Vec<String>,
}

/// Sandwich profiles `h_minus <= h <= h_plus` sharing `(M, m, c_pm)`.
///
/// `h_plus` lives on `[-a, b]` and is strictly positive; `h_minus` lives on
/// `[-eta_tilde, eta_tilde]`. Near `0` they are `M - c_pm |x|^m +- K |x|^{m+1}`.
/// With `k_bound = None` the remainder constant is fitted on a fine grid.
pub fn bracket_profiles(
    p: &WidthProfile,
    k_bound: Option<f64>,
    eta_tilde: f64,
) -> Result<(WidthProfile, WidthProfile)> {
    let mw = p.max_width;
    let m = p.order;
    if p.c_plus <= 0.0 || p.c_minus <= 0.0 {
        return Err(Error::Bracket("expansion coefficients must be positive".into()));
    }
    if !(eta_tilde > 0.0 && eta_tilde <= p.a.min(p.b)) {
        return Err(Error::InvalidArgument(format!(
            "eta_tilde must lie in (0, {}], got {eta_tilde}",
            p.a.min(p.b)
        )));
    }
    let k = match k_bound {
        Some(k) if k.is_finite() && k >= 0.0 => k,
        Some(k) => return Err(Error::InvalidArgument(format!("K must be >= 0, got {k}"))),
        None => p.remainder_bound(0.5) * (1.0 + 1e-9) + 1e-14,
    };

    // Lower profile on [-eta_tilde, eta_tilde].
    let lower_terms = |c: f64| vec![(mw, 0.0), (-c, m), (-k, m + 1.0)];
    let lower_pieces = two_sided_pieces(eta_tilde, eta_tilde, lower_terms(p.c_minus), lower_terms(p.c_plus));
    let n = 1000;
    for i in 0..=n {
        let x = -eta_tilde + 2.0 * eta_tilde * i as f64 / n as f64;
        let piece = if x <= 0.0 { &lower_pieces[0] } else { &lower_pieces[1] };
        let lo = piece.value(x);
        if lo <= 0.0 {
            return Err(Error::ShrinkEtaTilde { x });
        }
        let h = p.eval_h(x)?;
        if lo > h + 1e-12 * mw {
            return Err(Error::Bracket(format!(
                "remainder bound K = {k} too small: h_minus({x}) = {lo} > h({x}) = {h}"
            )));
        }
    }
    let mut lower = WidthProfile::custom(mw, m, p.c_plus, p.c_minus, eta_tilde, eta_tilde, lower_pieces)?;
    lower.k_plus = -k;
    lower.k_minus = -k;

    // Upper profile: M - c r^m + K r^{m+1} near 0, continued linearly down to a
    // positive floor, then max'ed with h.
    let mut g_pieces: Vec<Piece> = Vec::new();
    for (sgn, c, len) in [(-1.0, p.c_minus, p.a), (1.0, p.c_plus, p.b)] {
        let upper = |r: f64| mw - c * r.powf(m) + k * r.powf(m + 1.0);
        let upper_slope = |r: f64| -c * m * r.powf(m - 1.0) + k * (m + 1.0) * r.powf(m);
        // Region where the remainder bound holds.
        let steps = 4000;
        let mut reach = 0.0;
        for i in 1..=steps {
            let r = len * i as f64 / steps as f64;
            let rem = (p.eval_h(sgn * r)? - mw + c * r.powf(m)).abs();
            if rem > k * r.powf(m + 1.0) * (1.0 + 1e-9) + 1e-13 * mw {
                break;
            }
            reach = r;
        }
        if reach == 0.0 {
            return Err(Error::Bracket(format!("remainder bound K = {k} fails next to x = 0")));
        }
        let mut knee = reach;
        if k > 0.0 {
            knee = knee.min(0.9 * c * m / (k * (m + 1.0)));
        }
        if upper(knee) < 0.25 * mw {
            // upper is decreasing on [0, knee]; find where it crosses M/4.
            let (mut lo, mut hi) = (0.0, knee);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if upper(mid) >= 0.25 * mw {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            knee = lo;
        }
        let v0 = upper(knee);
        let slope = upper_slope(knee).min(-1e-3 * mw / len);
        let floor = 0.5 * v0;
        let r_floor = knee + (v0 - floor) / (-slope);
        let mut side = vec![(0.0, knee, vec![(mw, 0.0), (-c, m), (k, m + 1.0)])];
        if knee < len {
            let lin = vec![(v0 - slope * knee, 0.0), (slope, 1.0)];
            if r_floor < len {
                side.push((knee, r_floor, lin));
                side.push((r_floor, len, vec![(floor, 0.0)]));
            } else {
                side.push((knee, len, lin));
            }
        }
        let pieces: Vec<Piece> = side
            .into_iter()
            .filter(|(r0, r1, _)| r1 > r0)
            .map(|(r0, r1, terms)| {
                if sgn > 0.0 {
                    Piece { start: r0, end: r1, terms }
                } else {
                    Piece { start: -r1, end: -r0, terms }
                }
            })
            .collect();
        if sgn < 0.0 {
            g_pieces.extend(pieces.into_iter().rev());
        } else {
            g_pieces.extend(pieces);
        }
    }
    let upper_pieces = envelope_max(&p.pieces, &g_pieces, mw);
    let mut upper = WidthProfile::custom(mw, m, p.c_plus, p.c_minus, p.a, p.b, upper_pieces)?;
    upper.k_plus = k;
    upper.k_minus = k;
    Ok((upper, lower))
}

fn piece_at(pieces: &[Piece], x: f64) -> &Piece {
    pieces
        .iter()
        .find(|p| p.start <= x && x <= p.end)
        .unwrap_or(&pieces[pieces.len() - 1])
}

/// Pointwise maximum of two piecewise functions on the same interval.
fn envelope_max(f: &[Piece], g: &[Piece], scale: f64) -> Vec<Piece> {
    let mut cuts: Vec<f64> = f
        .iter()
        .chain(g.iter())
        .flat_map(|p| [p.start, p.end])
        .collect();
    cuts.sort_by(|p, q| p.total_cmp(q));
    cuts.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * scale.max(1.0));
    let tol = 1e-13 * scale;
    let mut out: Vec<Piece> = Vec::new();
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let mid = 0.5 * (u + v);
        let (pf, pg) = (piece_at(f, mid), piece_at(g, mid));
        let diff = |x: f64| pf.value(x) - pg.value(x);
        let sign = |x: f64| {
            let d = diff(x);
            if d > tol {
                1
            } else if d < -tol {
                -1
            } else {
                0
            }
        };
        let samples = 256;
        let mut sub = vec![u];
        let mut prev = (u, sign(u));
        for i in 1..=samples {
            let x = u + (v - u) * i as f64 / samples as f64;
            let s = sign(x);
            if s != 0 && prev.1 != 0 && s != prev.1 {
                let (mut lo, mut hi) = (prev.0, x);
                for _ in 0..200 {
                    let c = 0.5 * (lo + hi);
                    if sign(c) == prev.1 {
                        lo = c;
                    } else {
                        hi = c;
                    }
                }
                sub.push(0.5 * (lo + hi));
            }
            if s != 0 {
                prev = (x, s);
            }
        }
        sub.push(v);
        for sw in sub.windows(2) {
            let c = 0.5 * (sw[0] + sw[1]);
            let terms = if diff(c) > tol { pf.terms.clone() } else { pg.terms.clone() };
            match out.last_mut() {
                Some(last) if last.terms == terms && !(last.start < 0.0 && sw[1] > 0.0) => {
                    last.end = sw[1];
                }
                _ => out.push(Piece {
                    start: sw[0],
                    end: sw[1],
                    terms,
                }),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> WidthProfile {
        WidthProfile::smooth_poly(2.0, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn corner() -> WidthProfile {
        WidthProfile::broken_line(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn eval_h_closed_forms() {
        let p = harmonic();
        assert_eq!(p.eval_h(0.0).unwrap(), 2.0);
        assert_eq!(p.eval_h(1.0).unwrap(), 1.0);
        assert_eq!(corner().eval_h(-0.5).unwrap(), 0.5);
        assert!(matches!(p.eval_h(1.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn derivatives_and_kinks() {
        let p = harmonic();
        assert_eq!(p.eval_h_prime(1.0, Side::TwoSided).unwrap(), -2.0);
        assert_eq!(p.eval_h_prime(0.0, Side::TwoSided).unwrap(), 0.0);
        let c = corner();
        assert_eq!(c.eval_h_prime(0.0, Side::Right).unwrap(), -1.0);
        assert_eq!(c.eval_h_prime(0.0, Side::Left).unwrap(), 1.0);
        assert!(matches!(
            c.eval_h_prime(0.0, Side::TwoSided),
            Err(Error::DerivativeUndefined { .. })
        ));
        assert!(c.is_kink(0.0));
        assert!(!p.is_kink(0.0));
    }

    #[test]
    fn v_and_w_potentials() {
        let p = harmonic();
        assert_eq!(p.v_potential(0.0).unwrap(), 0.0);
        let expect = 4.0 * PI * PI / 3.0 + 1.0;
        assert!((p.v_potential(1.0).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 14.159_472_534_785_811).abs() < 1e-12);
        assert!((corner().v_potential(0.5).unwrap() - expect).abs() < 1e-12);
        assert!(matches!(corner().v_potential(0.0), Err(Error::DerivativeUndefined { .. })));
        assert_eq!(p.w_potential(0.1, 0.0).unwrap(), 0.0);
        let w = p.w_potential(0.1, 1.0).unwrap();
        assert!((w - (PI * PI * 100.0 * 0.75 + expect)).abs() < 1e-9);
        // broken line: symmetric kink, both one-sided limits coincide
        let c = corner();
        assert!((c.w_potential_node(0.1, 0.0).unwrap() - V_COEFFICIENT).abs() < 1e-12);
    }

    #[test]
    fn w_vanishing_endpoint_is_singular() {
        assert!(matches!(corner().w_potential(0.1, 1.0), Err(Error::Singular { .. })));
    }

    #[test]
    fn q_limit_and_alpha() {
        let p = harmonic();
        assert!((p.q_limit(1.0) - PI * PI / 4.0).abs() < 1e-14);
        assert_eq!(p.q_limit(0.0), 0.0);
        assert!((corner().q_limit(-2.0) - 4.0 * PI * PI).abs() < 1e-12);
        assert_eq!(p.alpha(), 0.5);
        assert!((corner().alpha() - 2.0 / 3.0).abs() < 1e-15);
        let quartic = WidthProfile::smooth_poly(2.0, 4.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((quartic.alpha() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_diagnostic_values() {
        let p = harmonic();
        let s = p.sigma_diagnostic(&[-1.0, -0.5, 0.5, 1.0]).unwrap();
        // pi^2 (1/h^2 - 1/4) / x^2 is increasing in |x| for h = 2 - x^2; the
        // limit at 0 is 2 pi^2 c / M^3 = pi^2 / 4.
        let at_half = PI * PI * (1.0 / (1.75f64 * 1.75) - 0.25) / 0.25;
        assert!((s - at_half).abs() < 1e-12);
        assert!(s > PI * PI / 4.0);
        let c = corner();
        assert!(c.sigma_diagnostic(&[-0.75, -0.25, 0.25, 0.75]).unwrap() > 0.0);
    }

    fn double_hump() -> WidthProfile {
        // h = 1 - 4x^2(1-2|x|)^2 ... reaches 1 again at |x| = 0.5
        let left = Piece {
            start: -1.0,
            end: 0.0,
            terms: vec![(1.0, 0.0), (-4.0, 2.0), (16.0, 3.0), (-16.0, 4.0)],
        };
        let right = Piece {
            start: 0.0,
            end: 1.0,
            terms: vec![(1.0, 0.0), (-4.0, 2.0), (16.0, 3.0), (-16.0, 4.0)],
        };
        WidthProfile::custom(1.0, 2.0, 4.0, 4.0, 0.8, 0.8, {
            let mut l = left;
            l.start = -0.8;
            let mut r = right;
            r.end = 0.8;
            vec![l, r]
        })
        .unwrap()
    }

    #[test]
    fn second_maximum_fails_validation() {
        let p = double_hump();
        assert!((p.eval_h(0.5).unwrap() - 1.0).abs() < 1e-14);
        assert!(p.sigma_diagnostic(&[0.25, 0.5]).is_err());
        let rep = p.validate(1000);
        assert!(!rep.passed);
        assert_eq!(rep.maxima.len(), 3, "{:?}", rep.maxima);
        assert!(rep.maxima.iter().any(|x| (x - 0.5).abs() < 1e-9));
        assert!(rep.maxima.iter().any(|x| (x + 0.5).abs() < 1e-9));
    }

    #[test]
    fn validate_canonical_profiles() {
        let rep = harmonic().validate(1000);
        assert!(rep.passed, "{:?}", rep.violations);
        assert_eq!(rep.positivity, Positivity::Strict);
        let rep = corner().validate(1000);
        assert!(rep.passed, "{:?}", rep.violations);
        assert_eq!(rep.positivity, Positivity::VanishingEndpoints);
        let wrong_c = WidthProfile::custom(
            2.0,
            2.0,
            3.0,
            1.0,
            1.0,
            1.0,
            harmonic().pieces().to_vec(),
        )
        .unwrap();
        assert!(!wrong_c.validate(1000).passed);
    }

    #[test]
    fn zero_remainder_for_pure_power() {
        let p = harmonic();
        for i in 0..=100 {
            let x = -1.0 + 0.02 * i as f64;
            let h = p.eval_h(x).unwrap();
            assert_eq!(h, 2.0 - x.abs().powf(2.0));
        }
        assert_eq!(p.remainder_bound(0.5), 0.0);
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let js = r#"{"kind":"smooth_poly","M":2.0,"m":2.0,"c_plus":1.0,"c_minus":1.0,"a":1.0,"b":1.0}"#;
        let p: WidthProfile = serde_json::from_str(js).unwrap();
        assert_eq!(p, harmonic());
        let back: WidthProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"kind":"smooth_poly","M":2.0,"m":2.0,"c_plus":1.0,"c_minus":1.0,"a":1.0,"b":1.0,"z":1}"#;
        assert!(serde_json::from_str::<WidthProfile>(bad).is_err());
        let neg = r#"{"kind":"broken_line","M":1.0,"c_plus":1.0,"c_minus":1.0,"a":2.0,"b":1.0}"#;
        assert!(serde_json::from_str::<WidthProfile>(neg).is_err());
    }

    #[test]
    fn custom_pieces_are_checked() {
        let gap = vec![
            Piece { start: -1.0, end: 0.0, terms: vec![(1.0, 0.0)] },
            Piece { start: 0.0, end: 1.0, terms: vec![(0.5, 0.0)] },
        ];
        assert!(WidthProfile::custom(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, gap).is_err());
        let straddle = vec![Piece { start: -1.0, end: 1.0, terms: vec![(1.0, 0.0)] }];
        assert!(WidthProfile::custom(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, straddle).is_err());
    }

    #[test]
    fn bracket_exact_power_law() {
        let p = corner();
        let (up, lo) = bracket_profiles(&p, Some(0.0), 0.5).unwrap();
        for i in 0..=1000 {
            let x = -0.5 + i as f64 / 1000.0;
            assert!((lo.eval_h(x).unwrap() - p.eval_h(x).unwrap()).abs() < 1e-15);
        }
        for i in 0..=1000 {
            let x = -0.7 + 1.4 * i as f64 / 1000.0;
            assert!((up.eval_h(x).unwrap() - p.eval_h(x).unwrap()).abs() < 1e-14);
        }
        assert_eq!(up.positivity(), Positivity::Strict);
        assert!(up.validate(1000).passed);
        assert!(lo.validate(1000).passed);
    }

    #[test]
    fn bracket_with_cubic_correction() {
        // h = 2 - x^2 + 0.1 |x|^3
        let p = WidthProfile::smooth_poly_with_correction(2.0, 2.0, 1.0, 1.0, 0.1, 0.1, 1.0, 1.0).unwrap();
        let (up, lo) = bracket_profiles(&p, Some(0.1), 0.8).unwrap();
        for i in 0..=1000 {
            let x = -0.8 + 1.6 * i as f64 / 1000.0;
            let expect = 2.0 - x * x - 0.1 * x.abs().powi(3);
            assert!((lo.eval_h(x).unwrap() - expect).abs() < 1e-13);
            assert!(lo.eval_h(x).unwrap() <= p.eval_h(x).unwrap());
        }
        for i in 0..=1000 {
            let x = -1.0 + 2.0 * i as f64 / 1000.0;
            assert!(up.eval_h(x).unwrap() >= p.eval_h(x).unwrap() - 1e-14);
            if x.abs() < 0.5 {
                assert!((up.eval_h(x).unwrap() - p.eval_h(x).unwrap()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn bracket_rejects_oversized_eta() {
        let p = WidthProfile::smooth_poly(1.0, 2.0, 4.0, 4.0, 1.0, 1.0);
        // h = 1 - 4x^2 is negative for |x| > 1/2: not a profile at all.
        assert!(p.is_err());
        let p = WidthProfile::smooth_poly(1.0, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            bracket_profiles(&p, Some(0.5), 1.0),
            Err(Error::ShrinkEtaTilde { .. })
        ));
    }
}
