//! Boundary-localized probes with the singular potential `Γ_ε = |x − εN|^{-1}`.
//!
//! The domain is the unit ball tangent to the origin with outward normal `N`
//! there, so the pole `εN` sits just outside. For constant `γ` the potential
//! is an exact solution, and
//! `ε ∫ Σ_{k≤l} c^j_{kl} ∂_kΓ_ε ∂_lΓ_ε dx → Σ_{k≤l} c^j_{kl} I_{kl}` with
//! `I_{kl} = ∫_{ℝ³₊} w_k w_l / |w|⁶ dη` and
//! `w = η₁T₁ + η₂T₂ − (η₃ + 1)N`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::extrapolate::richardson;
use crate::grid::Point;
use crate::material::{pairs, QuadCoeffs};
use crate::quadrature::{gauss_legendre_on, scale, BallRule};

/// `∫ η₁² / |w|⁶ dη` over the half space.
pub const MOMENT_A: f64 = PI / 4.0;
/// `∫ (η₃ + 1)² / |w|⁶ dη` over the half space.
pub const MOMENT_B: f64 = PI / 2.0;

/// Truncation radius for the half-space quadrature; the discarded tail is
/// at most `2π/R`.
pub const HALF_SPACE_RADIUS: f64 = 1e6;

/// Largest condition number accepted by [`assemble_and_recover`].
pub const MAX_CONDITION: f64 = 1e6;

/// Orthonormal probe frame. Axes are 0-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeFrame {
    pub s: usize,
    pub t: usize,
    pub alpha: f64,
    pub beta: f64,
    pub n: Point,
    pub t1: Point,
    pub t2: Point,
}

fn e(axis: usize) -> Point {
    let mut v = [0.0; 3];
    v[axis] = 1.0;
    v
}

pub fn probe_frame(s: usize, t: usize, alpha: f64, beta: f64) -> Result<ProbeFrame> {
    if s > t || t >= 3 {
        return Err(Error::BadIndices(s, t));
    }
    if s == t {
        let rest: Vec<usize> = (0..3).filter(|&a| a != s).collect();
        return Ok(ProbeFrame { s, t, alpha: 1.0, beta: 0.0, n: e(s), t1: e(rest[0]), t2: e(rest[1]) });
    }
    if !(alpha > 0.0 && beta > 0.0) || (alpha * alpha + beta * beta - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(alpha, beta));
    }
    let k = 3 - s - t;
    let mut n = [0.0; 3];
    let mut t2 = [0.0; 3];
    n[s] = alpha;
    n[t] = beta;
    t2[s] = beta;
    t2[t] = -alpha;
    Ok(ProbeFrame { s, t, alpha, beta, n, t1: e(k), t2 })
}

/// The six frames used for recovery: `(s,s)` for every axis and `(s,t)` with
/// `α = β = 1/√2`.
pub fn standard_frames() -> Vec<ProbeFrame> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    pairs(3)
        .into_iter()
        .map(|(s, t)| probe_frame(s, t, a, a).expect("standard frames are valid"))
        .collect()
}

/// Half-space moment by quadrature.
///
/// Spherical coordinates about the origin of `w`, with polar axis `−N`: the
/// region is `w·(−N) ≥ 1`, i.e. `ρ ≥ 1/cos θ`. The radius is mapped through
/// `ρ = tan τ` and truncated at [`HALF_SPACE_RADIUS`]; the azimuthal
/// dependence is a trigonometric polynomial of degree two, so eight
/// equispaced angles integrate it exactly.
pub fn half_space_moment(frame: &ProbeFrame, k: usize, l: usize) -> f64 {
    half_space_moment_with(frame, k, l, 48, 64)
}

pub fn half_space_moment_with(frame: &ProbeFrame, k: usize, l: usize, n_polar: usize, n_radial: usize) -> f64 {
    let r_max = HALF_SPACE_RADIUS;
    let theta_max = (1.0 / r_max).acos();
    let n_phi = 8;
    let (th, wth) = gauss_legendre_on(n_polar, 0.0, theta_max);
    let down = scale(frame.n, -1.0);
    let mut total = 0.0;
    for (&theta, &wt) in th.iter().zip(&wth) {
        let (st, ct) = theta.sin_cos();
        let (tau, wtau) = gauss_legendre_on(n_radial, (1.0 / ct).atan(), r_max.atan());
        // ∫ ρ² · ρ^{-4} dρ with ρ = tan τ, dρ = sec²τ dτ.
        let radial: f64 = tau.iter().zip(&wtau).map(|(&t, &w)| w / t.sin().powi(2)).sum();
        let mut angular = 0.0;
        for p in 0..n_phi {
            let phi = 2.0 * PI * p as f64 / n_phi as f64;
            let (sp, cp) = phi.sin_cos();
            let om: Point = std::array::from_fn(|c| ct * down[c] + st * (cp * frame.t1[c] + sp * frame.t2[c]));
            angular += om[k] * om[l];
        }
        total += wt * st * radial * angular * 2.0 * PI / n_phi as f64;
    }
    total
}

/// Exact moments from `I = F diag(A, A, B) Fᵀ` with `F = [T₁ T₂ N]`.
pub fn closed_form_moment(frame: &ProbeFrame, k: usize, l: usize) -> f64 {
    MOMENT_A * (frame.t1[k] * frame.t1[l] + frame.t2[k] * frame.t2[l]) + MOMENT_B * frame.n[k] * frame.n[l]
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    pub frame: ProbeFrame,
    pub k: usize,
    pub l: usize,
    pub quadrature: f64,
    pub closed_form: f64,
    /// Relative error, or absolute error when the closed form vanishes.
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
}

impl MomentTable {
    /// All `(k ≤ l)` moments for each frame.
    pub fn compute(frames: &[ProbeFrame]) -> Self {
        let mut rows = Vec::new();
        for frame in frames {
            for (k, l) in pairs(3) {
                let quadrature = half_space_moment(frame, k, l);
                let closed_form = closed_form_moment(frame, k, l);
                let diff = (quadrature - closed_form).abs();
                let rel_err = if closed_form.abs() > 1e-14 { diff / closed_form.abs() } else { diff };
                rows.push(MomentRow { frame: *frame, k, l, quadrature, closed_form, rel_err });
            }
        }
        Self { rows }
    }

    pub fn max_rel_err(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_err).fold(0.0, f64::max)
    }

    /// CSV with 1-based axis labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_s,frame_t,alpha,beta,k,l,quadrature,closed_form,rel_err\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.12e},{:.12e},{},{},{:.12e},{:.12e},{:.12e}",
                r.frame.s + 1,
                r.frame.t + 1,
                r.frame.alpha,
                r.frame.beta,
                r.k + 1,
                r.l + 1,
                r.quadrature,
                r.closed_form,
                r.rel_err
            );
        }
        out
    }
}

/// Node counts for the probe quadrature about the pole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeQuadrature {
    pub n_radial: usize,
    pub n_polar: usize,
    pub n_azimuth: usize,
    /// Relative accuracy demanded of the moment matrix.
    pub target: f64,
}

impl Default for ProbeQuadrature {
    fn default() -> Self {
        Self { n_radial: 12, n_polar: 48, n_azimuth: 8, target: 1e-4 }
    }
}

fn probe_moments_with(frame: &ProbeFrame, eps: f64, q: &ProbeQuadrature, refine: usize) -> [f64; 6] {
    let center = scale(frame.n, -1.0);
    let pole = scale(frame.n, eps);
    let rule = BallRule::focused(center, 1.0, pole, q.n_radial * refine, q.n_polar * refine, q.n_azimuth);
    let mut m = [0.0; 6];
    for (x, w) in rule.points().iter().zip(rule.weights()) {
        let y: Point = std::array::from_fn(|c| x[c] - pole[c]);
        let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        let inv6 = 1.0 / (r2 * r2 * r2);
        for (idx, (k, l)) in pairs(3).into_iter().enumerate() {
            m[idx] += w * y[k] * y[l] * inv6;
        }
    }
    m.map(|v| v * eps)
}

/// `ε ∫_ball y_k y_l / |y|⁶ dx` with `y = x − εN`, for every `k ≤ l`.
///
/// The rule is run at the requested size and at twice the polar and radial
/// node counts; their disagreement is the error estimate.
pub fn probe_moments(frame: &ProbeFrame, eps: f64, quad: &ProbeQuadrature) -> Result<[f64; 6]> {
    if !(eps > 0.0 && eps <= 0.2) {
        return Err(Error::InvalidParam(format!("eps must lie in (0, 0.2], got {eps}")));
    }
    let coarse = probe_moments_with(frame, eps, quad, 1);
    let fine = probe_moments_with(frame, eps, quad, 2);
    let size = fine.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let estimate = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / size;
    if !(estimate <= quad.target) {
        return Err(Error::QuadratureBudget { estimate, target: quad.target });
    }
    Ok(fine)
}

/// `ε Σ_{k≤l} c^j_{kl} ∫_ball ∂_kΓ_ε ∂_lΓ_ε dx` for constant coefficients.
pub fn scaled_probe_integral(quad: &QuadCoeffs, frame: &ProbeFrame, j: usize, eps: f64, rule: &ProbeQuadrature) -> Result<f64> {
    if quad.dim() != 3 || !quad.is_constant() {
        return Err(Error::InvalidParam("singular probes need constant 3-D coefficients".into()));
    }
    let m = probe_moments(frame, eps, rule)?;
    Ok(contract(quad, j, &m))
}

fn contract(quad: &QuadCoeffs, j: usize, m: &[f64; 6]) -> f64 {
    pairs(3).into_iter().zip(m).map(|((k, l), v)| quad.get(j, k, l, 0) * v).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsLimit {
    pub limit: f64,
    /// Error exponent used in the extrapolation.
    pub order: f64,
}

/// Extrapolates samples at geometrically decreasing `ε` to `ε = 0`.
///
/// The exponent comes from the last three samples; with two samples it is 1.
pub fn eps_limit(eps_values: &[f64], values: &[f64]) -> Result<EpsLimit> {
    let n = eps_values.len();
    if n < 2 || n != values.len() {
        return Err(Error::InvalidParam("eps_limit needs at least two (eps, value) pairs".into()));
    }
    if eps_values.windows(2).any(|w| !(w[0] > w[1] && w[1] > 0.0)) {
        return Err(Error::InvalidParam("eps values must decrease and stay positive".into()));
    }
    let (e2, e3) = (eps_values[n - 2], eps_values[n - 1]);
    let (v2, v3) = (values[n - 2], values[n - 1]);
    let order = if n >= 3 {
        let (e1, v1) = (eps_values[n - 3], values[n - 3]);
        let ratio = e1 / e2;
        if ((e2 / e3) - ratio).abs() > 1e-9 * ratio {
            return Err(Error::InvalidParam("eps values must form a geometric sequence".into()));
        }
        let (d1, d2) = (v1 - v2, v2 - v3);
        if d1 == 0.0 && d2 == 0.0 {
            return Ok(EpsLimit { limit: v3, order: f64::INFINITY });
        }
        if d1 * d2 <= 0.0 {
            return Err(Error::NonMonotone(format!("successive differences {d1:e} and {d2:e} change sign")));
        }
        let p = (d1 / d2).ln() / ratio.ln();
        if !(p > 0.0) {
            return Err(Error::NonMonotone(format!("fitted exponent {p} is not positive")));
        }
        p
    } else {
        1.0
    };
    Ok(EpsLimit { limit: richardson(e2, v2, e3, v3, order), order })
}

/// Extrapolates with the model `L + a ε ln ε + b ε` through the last three
/// samples.
///
/// Near the pole the ball departs from its tangent plane by a sliver of
/// depth `ε r²/2` in scaled units; against the tangential integrand `r^{-4}`
/// this gives an `ε ln ε` term that a single power law cannot follow.
pub fn eps_limit_log(eps_values: &[f64], values: &[f64]) -> Result<f64> {
    let n = eps_values.len();
    if n < 3 || n != values.len() {
        return Err(Error::InvalidParam("log-linear extrapolation needs at least three (eps, value) pairs".into()));
    }
    if eps_values.windows(2).any(|w| !(w[0] > w[1] && w[1] > 0.0)) {
        return Err(Error::InvalidParam("eps values must decrease and stay positive".into()));
    }
    let e = &eps_values[n - 3..];
    let a = Matrix3::from_fn(|r, c| match c {
        0 => 1.0,
        1 => e[r] * e[r].ln(),
        _ => e[r],
    });
    let b = Vector3::from_column_slice(&values[n - 3..]);
    let x = a.lu().solve(&b).ok_or_else(|| Error::InvalidParam("eps values are degenerate".into()))?;
    Ok(x[0])
}

/// Extrapolation model for the ε sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EpsModel {
    /// [`eps_limit`].
    PowerLaw,
    /// [`eps_limit_log`].
    #[default]
    LogLinear,
}

/// One extrapolated probe value for a frame and component `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub frame: ProbeFrame,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub coeffs: QuadCoeffs,
    /// 2-norm condition number of the system for each component.
    pub condition: [f64; 3],
    /// Least-squares residual norm for each component.
    pub residual: [f64; 3],
}

/// Solves `Σ_{k≤l} c^j_{kl} I_{kl}(frame) = measurement` for each `j`.
pub fn assemble_and_recover(measurements: &[Measurement], frames: &[ProbeFrame]) -> Result<Recovery> {
    let np = pairs(3).len();
    let mut a = DMatrix::zeros(frames.len(), np);
    for (row, frame) in frames.iter().enumerate() {
        for (col, (k, l)) in pairs(3).into_iter().enumerate() {
            a[(row, col)] = closed_form_moment(frame, k, l);
        }
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cond = if frames.len() < np || smin == 0.0 { f64::INFINITY } else { smax / smin };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let qr = a.clone().qr();
    let qt = qr.q().transpose();
    let r = qr.r();
    let mut coeffs = QuadCoeffs::zeros(3);
    let mut residual = [0.0; 3];
    for j in 0..3 {
        let mut b = DVector::zeros(frames.len());
        for (row, frame) in frames.iter().enumerate() {
            let m = measurements
                .iter()
                .find(|m| m.j == j && m.frame == *frame)
                .ok_or(Error::MissingProbe { s: frame.s + 1, t: frame.t + 1, j: j + 1 })?;
            b[row] = m.value;
        }
        let x = r
            .solve_upper_triangular(&(&qt * &b))
            .ok_or(Error::IllConditioned(f64::INFINITY))?;
        residual[j] = (&a * &x - &b).norm();
        for (col, (k, l)) in pairs(3).into_iter().enumerate() {
            coeffs.set(j, k, l, x[col]);
        }
    }
    Ok(Recovery { coeffs, condition: [cond; 3], residual })
}

/// Measurements generated from the closed-form moments.
pub fn closed_form_measurements(quad: &QuadCoeffs, frames: &[ProbeFrame]) -> Vec<Measurement> {
    let mut out = Vec::new();
    for frame in frames {
        let m: [f64; 6] = std::array::from_fn(|idx| {
            let (k, l) = pairs(3)[idx];
            closed_form_moment(frame, k, l)
        });
        for j in 0..3 {
            out.push(Measurement { frame: *frame, j, value: contract(quad, j, &m) });
        }
    }
    out
}

/// Per-`ε` probe values and their extrapolated limits.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSweep {
    pub eps_values: Vec<f64>,
    /// `values[f][j][e]` for frame `f`, component `j`, `ε` index `e`.
    pub values: Vec<[Vec<f64>; 3]>,
    pub measurements: Vec<Measurement>,
    /// Power-law exponent fitted to the last three samples, where one exists.
    pub observed_orders: Vec<[Option<f64>; 3]>,
}

/// Runs every frame through the ε sweep and extrapolates each component.
pub fn probe_sweep(quad: &QuadCoeffs, frames: &[ProbeFrame], eps_values: &[f64], rule: &ProbeQuadrature, model: EpsModel) -> Result<ProbeSweep> {
    if quad.dim() != 3 || !quad.is_constant() {
        return Err(Error::InvalidParam("singular probes need constant 3-D coefficients".into()));
    }
    let mut values = Vec::new();
    let mut measurements = Vec::new();
    let mut observed_orders = Vec::new();
    for frame in frames {
        let moments = eps_values.iter().map(|&e| probe_moments(frame, e, rule)).collect::<Result<Vec<_>>>()?;
        let per_j: [Vec<f64>; 3] = std::array::from_fn(|j| moments.iter().map(|m| contract(quad, j, m)).collect());
        let mut ord = [None; 3];
        for j in 0..3 {
            let fit = eps_limit(eps_values, &per_j[j]);
            ord[j] = fit.as_ref().ok().map(|f| f.order).filter(|p| p.is_finite());
            let value = match model {
                EpsModel::PowerLaw => fit?.limit,
                EpsModel::LogLinear => eps_limit_log(eps_values, &per_j[j])?,
            };
            measurements.push(Measurement { frame: *frame, j, value });
        }
        values.push(per_j);
        observed_orders.push(ord);
    }
    Ok(ProbeSweep { eps_values: eps_values.to_vec(), values, measurements, observed_orders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2 as H;

    #[test]
    fn frame_examples() {
        let f = probe_frame(0, 0, 0.3, 0.1).unwrap();
        assert_eq!((f.n, f.t1, f.t2), (e(0), e(1), e(2)));
        let f = probe_frame(0, 1, H, H).unwrap();
        assert_eq!(f.n, [H, H, 0.0]);
        assert_eq!(f.t2, [H, -H, 0.0]);
        assert_eq!(f.t1, e(2));
        assert_eq!(probe_frame(1, 0, H, H), Err(Error::BadIndices(1, 0)));
        assert_eq!(probe_frame(0, 3, H, H), Err(Error::BadIndices(0, 3)));
        assert!(matches!(probe_frame(0, 2, 0.6, 0.7), Err(Error::NotNormalized(..))));
        assert!(matches!(probe_frame(0, 2, -0.6, 0.8), Err(Error::NotNormalized(..))));
        for f in standard_frames() {
            let v = [f.n, f.t1, f.t2];
            for a in 0..3 {
                for b in 0..3 {
                    let d: f64 = (0..3).map(|c| v[a][c] * v[b][c]).sum();
                    assert!((d - if a == b { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let f = probe_frame(0, 1, H, H).unwrap();
        assert!((closed_form_moment(&f, 0, 0) - 3.0 * PI / 8.0).abs() < 1e-15);
        assert!((closed_form_moment(&f, 0, 1) - PI / 8.0).abs() < 1e-15);
        assert!(closed_form_moment(&f, 0, 2).abs() < 1e-16);
        assert!(closed_form_moment(&f, 1, 2).abs() < 1e-16);
        let d = probe_frame(2, 2, 1.0, 0.0).unwrap();
        assert_eq!(closed_form_moment(&d, 2, 2), PI / 2.0);
        assert_eq!(closed_form_moment(&d, 0, 0), PI / 4.0);
        assert_eq!(closed_form_moment(&d, 0, 2), 0.0);
    }

    #[test]
    fn base_integrals_by_quadrature() {
        // For the (3,3) frame, w = (η₁, η₂, −(η₃+1)).
        let f = probe_frame(2, 2, 1.0, 0.0).unwrap();
        let a = half_space_moment(&f, 0, 0);
        let b = half_space_moment(&f, 2, 2);
        assert!((a - MOMENT_A).abs() < 1e-3 * MOMENT_A, "{a}");
        assert!((b - MOMENT_B).abs() < 1e-3 * MOMENT_B, "{b}");
    }

    #[test]
    fn moment_table_matches_closed_form() {
        let table = MomentTable::compute(&standard_frames());
        assert_eq!(table.rows.len(), 36);
        assert!(table.max_rel_err() < 1e-3, "{}", table.max_rel_err());
        let csv = table.to_csv();
        assert_eq!(csv.lines().count(), 37);
        assert!(csv.starts_with("frame_s,frame_t,alpha,beta,k,l,quadrature,closed_form,rel_err\n1,1,"));
    }

    /// `ε ∫ y_k y_l/|y|⁶` with the radial integral done analytically:
    /// `∫ ω_k ω_l (1/r_in − 1/r_out) dΩ`.
    fn radial_oracle(frame: &ProbeFrame, eps: f64, k: usize, l: usize) -> f64 {
        let d = 1.0 + eps;
        let theta_max = (1.0 / d).asin();
        let n = 4000;
        let (th, wth) = gauss_legendre_on(n, 0.0, theta_max.sqrt());
        let axis = scale(frame.n, -1.0);
        let (a, b) = (frame.t1, frame.t2);
        let mut total = 0.0;
        for (&sq, &w) in th.iter().zip(&wth) {
            let theta = sq * sq;
            let (st, ct) = theta.sin_cos();
            let disc = (1.0 - d * d * st * st).max(0.0).sqrt();
            let radial = 1.0 / (d * ct - disc) - 1.0 / (d * ct + disc);
            let mut ang = 0.0;
            for p in 0..8 {
                let phi = 2.0 * PI * p as f64 / 8.0;
                let om: Point = std::array::from_fn(|c| ct * axis[c] + st * (phi.cos() * a[c] + phi.sin() * b[c]));
                ang += om[k] * om[l];
            }
            total += w * 2.0 * sq * st * radial * ang * 2.0 * PI / 8.0;
        }
        total * eps
    }

    #[test]
    fn probe_moments_match_radial_oracle() {
        let rule = ProbeQuadrature::default();
        for frame in [probe_frame(0, 0, 1.0, 0.0).unwrap(), probe_frame(1, 2, H, H).unwrap()] {
            for eps in [0.1, 0.025] {
                let m = probe_moments(&frame, eps, &rule).unwrap();
                for (idx, (k, l)) in pairs(3).into_iter().enumerate() {
                    let want = radial_oracle(&frame, eps, k, l);
                    assert!((m[idx] - want).abs() < 1e-4 * (1.0 + want.abs()), "{eps} ({k},{l}): {} vs {want}", m[idx]);
                }
            }
        }
    }

    #[test]
    fn scaled_integral_examples() {
        let rule = ProbeQuadrature::default();
        let f = probe_frame(0, 0, 1.0, 0.0).unwrap();
        assert_eq!(scaled_probe_integral(&QuadCoeffs::zeros(3), &f, 0, 0.1, &rule).unwrap(), 0.0);
        let mut q1 = QuadCoeffs::zeros(3);
        q1.set(0, 0, 0, 1.0);
        let eps = [0.1, 0.05, 0.025];
        let vals: Vec<f64> = eps.iter().map(|&e| scaled_probe_integral(&q1, &f, 0, e, &rule).unwrap()).collect();
        let errs: Vec<f64> = vals.iter().map(|v| (v - PI / 2.0).abs()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{vals:?}");
        let lim = eps_limit(&eps, &vals).unwrap();
        assert!((lim.limit - PI / 2.0).abs() < 0.02 * PI / 2.0, "{lim:?}");
        let mut q2 = QuadCoeffs::zeros(3);
        q2.set(0, 1, 2, -0.7);
        q2.set(0, 0, 1, 0.4);
        let sum = q1.add(&q2).unwrap();
        let g = probe_frame(0, 1, H, H).unwrap();
        let a = scaled_probe_integral(&q1, &g, 0, 0.05, &rule).unwrap();
        let b = scaled_probe_integral(&q2, &g, 0, 0.05, &rule).unwrap();
        let c = scaled_probe_integral(&sum, &g, 0, 0.05, &rule).unwrap();
        assert!((a + b - c).abs() < 1e-13 * c.abs().max(1.0));
        assert!(matches!(scaled_probe_integral(&q1, &f, 0, 0.5, &rule), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn quadrature_budget_reported() {
        let rule = ProbeQuadrature { n_radial: 2, n_polar: 2, n_azimuth: 8, target: 1e-6 };
        let f = probe_frame(0, 0, 1.0, 0.0).unwrap();
        assert!(matches!(probe_moments(&f, 0.01, &rule), Err(Error::QuadratureBudget { .. })));
    }

    #[test]
    fn eps_limit_examples() {
        let lin = eps_limit(&[0.1, 0.05], &[3.0 + 0.2, 3.0 + 0.1]).unwrap();
        assert!((lin.limit - 3.0).abs() < 1e-14);
        assert_eq!(eps_limit(&[0.1, 0.05, 0.025], &[2.0; 3]).unwrap().limit, 2.0);
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let vals: Vec<f64> = eps.iter().map(|e: &f64| 1.5 + 0.8 * e.sqrt()).collect();
        let r = eps_limit(&eps, &vals).unwrap();
        assert!((r.order - 0.5).abs() < 0.1);
        assert!((r.limit - 1.5).abs() < 0.01 * 1.5);
        assert!(matches!(eps_limit(&[0.1, 0.05, 0.025], &[1.0, 2.0, 1.0]), Err(Error::NonMonotone(_))));
        assert!(eps_limit(&[0.1], &[1.0]).is_err());
    }

    #[test]
    fn log_linear_limit_examples() {
        let eps = [0.1, 0.05, 0.025];
        let vals: Vec<f64> = eps.iter().map(|e: &f64| 0.7 - 1.3 * e * e.ln() + 0.4 * e).collect();
        assert!((eps_limit_log(&eps, &vals).unwrap() - 0.7).abs() < 1e-13);
        assert!((eps_limit_log(&eps, &[2.0; 3]).unwrap() - 2.0).abs() < 1e-13);
        assert!(eps_limit_log(&eps[..2], &vals[..2]).is_err());
    }

    #[test]
    fn tangential_moment_has_log_term() {
        let f = probe_frame(2, 2, 1.0, 0.0).unwrap();
        let rule = ProbeQuadrature::default();
        let eps = [0.1, 0.05, 0.025];
        let a: Vec<f64> = eps.iter().map(|&e| probe_moments(&f, e, &rule).unwrap()[0]).collect();
        let log = eps_limit_log(&eps, &a).unwrap();
        let pow = eps_limit(&eps, &a).unwrap().limit;
        assert!((log - MOMENT_A).abs() < 0.01 * MOMENT_A, "{log}");
        assert!((pow - MOMENT_A).abs() > 0.05 * MOMENT_A, "{pow}");
    }

    fn sample() -> QuadCoeffs {
        let mut q = QuadCoeffs::zeros(3);
        q.set(0, 0, 0, 2.0);
        q.set(0, 0, 1, -1.0);
        q
    }

    #[test]
    fn recovery_examples() {
        let frames = standard_frames();
        let zero = assemble_and_recover(&closed_form_measurements(&QuadCoeffs::zeros(3), &frames), &frames).unwrap();
        assert!(zero.coeffs.is_zero());
        let rec = assemble_and_recover(&closed_form_measurements(&sample(), &frames), &frames).unwrap();
        for i in 0..3 {
            for (k, l) in pairs(3) {
                assert!((rec.coeffs.get(i, k, l, 0) - sample().get(i, k, l, 0)).abs() < 1e-10);
            }
        }
        assert!(rec.condition[0] < 20.0, "{}", rec.condition[0]);
        let mut partial = closed_form_measurements(&sample(), &frames);
        partial.retain(|m| !(m.frame.s == 1 && m.frame.t == 2 && m.j == 2));
        assert_eq!(assemble_and_recover(&partial, &frames).unwrap_err(), Error::MissingProbe { s: 2, t: 3, j: 3 });
        let few = &frames[..3];
        assert!(matches!(assemble_and_recover(&closed_form_measurements(&sample(), few), few), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn diagonal_block_spectrum() {
        let m: DMatrix<f64> = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0]);
        assert!((m.determinant() - 4.0).abs() < 1e-14);
        let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([1.0, 1.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        for s in 0..3 {
            let f = probe_frame(s, s, 1.0, 0.0).unwrap();
            for k in 0..3 {
                assert!((closed_form_moment(&f, k, k) - PI / 4.0 * m[(s, k)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn recovery_is_equivariant_under_axis_permutation() {
        let perm = [2, 0, 1];
        let q = QuadCoeffs::from_constants(3, |i, k, l| 0.1 * (i + 1) as f64 + 0.37 * k as f64 - 0.21 * (l * l) as f64);
        let moved = QuadCoeffs::from_constants(3, |i, k, l| {
            let inv = |a: usize| perm.iter().position(|&p| p == a).unwrap();
            let (a, b) = (inv(k).min(inv(l)), inv(k).max(inv(l)));
            q.get(inv(i), a, b, 0)
        });
        let frames = standard_frames();
        let r1 = assemble_and_recover(&closed_form_measurements(&q, &frames), &frames).unwrap();
        let r2 = assemble_and_recover(&closed_form_measurements(&moved, &frames), &frames).unwrap();
        for i in 0..3 {
            for (k, l) in pairs(3) {
                let (a, b) = (perm[k].min(perm[l]), perm[k].max(perm[l]));
                assert!((r2.coeffs.get(perm[i], a, b, 0) - r1.coeffs.get(i, k, l, 0)).abs() < 1e-12);
            }
        }
    }
}
