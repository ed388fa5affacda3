//! Complex exponential probes for constant conductivity.
//!
//! For `ρ ∈ ℂ³` with `ρ·ρ = 0`, `γ^{-1/2} e^{ρ·x}` solves `∇·(γ∇u) = 0`
//! when `γ` is constant. Pairs `ρ₁ = tη + i(k/2 + sξ)` and
//! `ρ₂ = −tη + i(k/2 − sξ)` with `t² = |k|²/4 + s²` multiply to
//! `γ^{-1} e^{ik·x}`, and `ρ₁/s → ζ = η + iξ` as `s → ∞`. Plugging such pairs
//! into the polarized quadratic form isolates `Σ_{j≤l} ζ_j ζ_l c^i_{jl}` at
//! frequency `k`.

use crate::asymptotics::trilinear_form_grad;
use crate::error::{Error, Result};
use crate::extrapolate::{fit_order, richardson};
use crate::grid::{dot, gradient, integrate_volume, CVec, GridSpec, Point, ScalarField, VectorField, C64};
use crate::material::{pairs, QuadCoeffs};
use crate::quadrature::{cross, dot3, norm, scale, sub};

const I: C64 = C64::new(0.0, 1.0);

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn cdot(a: &CVec, b: &CVec) -> C64 {
    dot(a, b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgoPair {
    pub k: Point,
    pub xi: Point,
    pub eta: Point,
    pub s: f64,
    pub t: f64,
    pub rho1: CVec,
    pub rho2: CVec,
}

impl CgoPair {
    /// `ζ = η + iξ`, the limit of `ρ₁/s`.
    pub fn zeta(&self) -> CVec {
        std::array::from_fn(|d| C64::new(self.eta[d], self.xi[d]))
    }

    /// Largest violation among the defining identities.
    pub fn invariant_error(&self) -> f64 {
        let orth = dot3(self.k, self.xi).abs().max(dot3(self.k, self.eta).abs()).max(dot3(self.xi, self.eta).abs());
        let t2 = (self.t * self.t - dot3(self.k, self.k) / 4.0 - self.s * self.s).abs();
        let null = cdot(&self.rho1, &self.rho1).norm().max(cdot(&self.rho2, &self.rho2).norm());
        let sum = (0..3).map(|d| (self.rho1[d] + self.rho2[d] - I * self.k[d]).norm()).fold(0.0, f64::max);
        orth.max(t2).max(null).max(sum)
    }
}

/// Unit vectors `(ξ, η)` orthogonal to `k` and to each other.
///
/// `a` is the first standard basis vector not parallel to `k`;
/// `ξ = normalize(a − (a·k̂)k̂)` and `η = k̂ × ξ`. For `k = 0`, `ξ = e₂` and
/// `η = e₃`.
pub fn complete_frame(k: Point) -> (Point, Point) {
    let kn = norm(k);
    if kn == 0.0 {
        return ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
    }
    let khat = scale(k, 1.0 / kn);
    let a = (0..3)
        .map(|d| {
            let mut e = [0.0; 3];
            e[d] = 1.0;
            e
        })
        .find(|e| norm(cross(*e, khat)) > 1e-8)
        .expect("some basis vector is not parallel to k");
    let proj = sub(a, scale(khat, dot3(a, khat)));
    let xi = scale(proj, 1.0 / norm(proj));
    let eta = cross(khat, xi);
    (xi, eta)
}

pub fn make_cgo_pair(k: Point, s: f64) -> Result<CgoPair> {
    let (xi, eta) = complete_frame(k);
    make_cgo_pair_with_frame(k, s, xi, eta)
}

/// Builds a pair from an explicit orthonormal frame orthogonal to `k`.
pub fn make_cgo_pair_with_frame(k: Point, s: f64, xi: Point, eta: Point) -> Result<CgoPair> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParam(format!("s must be positive, got {s}")));
    }
    let tol = 1e-12;
    let orth = [dot3(k, xi), dot3(k, eta), dot3(xi, eta)];
    if orth.iter().any(|v| v.abs() > tol * (1.0 + norm(k))) || (norm(xi) - 1.0).abs() > tol || (norm(eta) - 1.0).abs() > tol {
        return Err(Error::InvalidParam("xi and eta must be orthonormal and orthogonal to k".into()));
    }
    let t = (dot3(k, k) / 4.0 + s * s).sqrt();
    let rho1 = std::array::from_fn(|d| C64::new(t * eta[d], k[d] / 2.0 + s * xi[d]));
    let rho2 = std::array::from_fn(|d| C64::new(-t * eta[d], k[d] / 2.0 - s * xi[d]));
    Ok(CgoPair { k, xi, eta, s, t, rho1, rho2 })
}

/// A vector of the null cone with `|ζ| = √2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullVector(CVec);

impl NullVector {
    pub fn new(zeta: CVec) -> Result<Self> {
        let zz = cdot(&zeta, &zeta).norm();
        if zz > 1e-12 {
            return Err(Error::NotNull(zz));
        }
        let len: f64 = zeta.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if (len - 2f64.sqrt()).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!("null vectors must have length sqrt(2), got {len}")));
        }
        Ok(Self(zeta))
    }

    pub fn zeta(&self) -> CVec {
        self.0
    }
}

/// The three null vectors `(0,1,i)`, `(1,0,i)`, `(1,i,0)`.
pub fn stage1_zetas() -> [CVec; 3] {
    let (o, z) = (c(1.0), c(0.0));
    [[z, o, I], [o, z, I], [o, I, z]]
}

fn check_null(rho: &CVec) -> Result<()> {
    let rr = cdot(rho, rho).norm();
    let scale = rho.iter().map(|v| v.norm_sqr()).sum::<f64>();
    if rr > 1e-10 * scale.max(1.0) {
        return Err(Error::NotNull(rr));
    }
    Ok(())
}

fn check_gamma_const(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::NotPositive { min: gamma, max_imag: 0.0 });
    }
    Ok(())
}

fn rho_dot_x(rho: &CVec, p: Point) -> C64 {
    rho[0] * p[0] + rho[1] * p[1] + rho[2] * p[2]
}

/// Largest value of `Re(ρ·x)` over the closed unit cube.
fn peak_exponent(rho: &CVec, dim: usize) -> f64 {
    (0..dim).map(|d| rho[d].re.max(0.0)).sum()
}

/// Nodal samples of `γ^{-1/2} e^{ρ·x}`.
pub fn cgo_field(gamma: f64, rho: &CVec, grid: GridSpec) -> Result<ScalarField> {
    check_null(rho)?;
    check_gamma_const(gamma)?;
    grid.require_cube()?;
    let a = gamma.powf(-0.5);
    Ok(ScalarField::from_fn(grid, |p| a * rho_dot_x(rho, p).exp()))
}

/// `γ^{-1/2} e^{ρ·x − m}` with `m` the peak of `Re(ρ·x)`; returns the field and `m`.
fn shifted_field(gamma: f64, rho: &CVec, grid: GridSpec) -> (ScalarField, f64) {
    let m = peak_exponent(rho, grid.dim());
    let a = gamma.powf(-0.5);
    (ScalarField::from_fn(grid, |p| a * (rho_dot_x(rho, p) - m).exp()), m)
}

/// `∫_Ω q_i(ζ,x) γ^{-1} e^{ik·x} dx` with `q_i(ζ,x) = Σ_{j≤l} ζ_j ζ_l c^i_{jl}(x)`.
pub fn fourier_sample(quad: &QuadCoeffs, gamma: f64, zeta: &NullVector, k: Point, i: usize, grid: GridSpec) -> Result<C64> {
    check_gamma_const(gamma)?;
    grid.require_cube()?;
    if grid.dim() != 3 || quad.dim() != 3 {
        return Err(Error::InvalidDim(grid.dim()));
    }
    let z = zeta.zeta();
    let mut w = ScalarField::zeros(grid);
    let pts = grid.node_positions();
    for (idx, slot) in w.values_mut().iter_mut().enumerate() {
        let phase = C64::new(0.0, dot3(k, pts[idx])).exp();
        *slot = quad.eval_p(idx, &z)[i] * phase / gamma;
    }
    Ok(integrate_volume(&w))
}

/// How gradients of the probe fields enter the trilinear form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    /// `∇(e^{ρ·x}) = ρ e^{ρ·x}` exactly.
    Analytic,
    /// Nodal finite differences of the sampled fields.
    FiniteDifference,
}

/// `T(s)/(−2s²)` where `T(s)` is the trilinear form of the pair fields with
/// `v = x_i`.
pub fn cgo_normalized_form(quad: &QuadCoeffs, gamma: f64, pair: &CgoPair, i: usize, grid: GridSpec, mode: GradientMode) -> Result<C64> {
    check_gamma_const(gamma)?;
    grid.require_cube()?;
    if grid.dim() != 3 || quad.dim() != 3 {
        return Err(Error::InvalidDim(grid.dim()));
    }
    check_null(&pair.rho1)?;
    check_null(&pair.rho2)?;
    let (u1, m1) = shifted_field(gamma, &pair.rho1, grid);
    let (u2, m2) = shifted_field(gamma, &pair.rho2, grid);
    let shift = m1 + m2;
    if shift > f64::MAX_EXP as f64 * std::f64::consts::LN_2 {
        return Err(Error::InvalidParam(format!("probe exponent {shift} overflows")));
    }
    let (g1, g2) = match mode {
        GradientMode::Analytic => {
            let mut g1 = VectorField::zeros(grid);
            let mut g2 = VectorField::zeros(grid);
            for idx in 0..grid.node_count() {
                let (a, b) = (u1.get(idx), u2.get(idx));
                g1.set(idx, pair.rho1.map(|r| r * a));
                g2.set(idx, pair.rho2.map(|r| r * b));
            }
            (g1, g2)
        }
        GradientMode::FiniteDifference => (gradient(&u1), gradient(&u2)),
    };
    let mut ei = [c(0.0); 3];
    ei[i] = c(1.0);
    let gv = VectorField::from_fn(grid, |_| ei);
    let form = trilinear_form_grad(quad, &g1, &g2, &gv)?;
    Ok(form * shift.exp() / (-2.0 * pair.s * pair.s))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgoLimit {
    pub s_values: Vec<f64>,
    /// `T(s)/(−2s²)` for each `s`.
    pub values: Vec<C64>,
    /// Richardson limit in `1/s` from the two largest `s`, second order.
    pub extrapolated: C64,
    /// `|value − extrapolated|` for each `s`.
    pub deviations: Vec<f64>,
    /// Log-log slope of the deviations against `1/s`.
    pub fitted_order: Option<f64>,
}

/// Sweeps `s` and extrapolates `T(s)/(−2s²)` to `s = ∞`.
///
/// Writing `ρ₁ = a + b`, `ρ₂ = −a + b` with `a = tη + isξ` and `b = ik/2`,
/// the polarized product is `−2a_j a_l + 2b_j b_l` and `a = sζ + O(1/s)`, so
/// the error is `O(1/s²)`.
pub fn cgo_limit_form(quad: &QuadCoeffs, gamma: f64, k: Point, s_list: &[f64], i: usize, grid: GridSpec) -> Result<CgoLimit> {
    let (xi, eta) = complete_frame(k);
    cgo_limit_form_with_frame(quad, gamma, k, xi, eta, s_list, i, grid, GradientMode::Analytic)
}

#[allow(clippy::too_many_arguments)]
pub fn cgo_limit_form_with_frame(
    quad: &QuadCoeffs,
    gamma: f64,
    k: Point,
    xi: Point,
    eta: Point,
    s_list: &[f64],
    i: usize,
    grid: GridSpec,
    mode: GradientMode,
) -> Result<CgoLimit> {
    if s_list.len() < 2 || s_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParam("s values must be increasing, at least two".into()));
    }
    let mut values = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let pair = make_cgo_pair_with_frame(k, s, xi, eta)?;
        values.push(cgo_normalized_form(quad, gamma, &pair, i, grid, mode)?);
    }
    let n = values.len();
    let (p1, p2) = (1.0 / s_list[n - 2], 1.0 / s_list[n - 1]);
    let (a, b) = (values[n - 2], values[n - 1]);
    let extrapolated = C64::new(richardson(p1, a.re, p2, b.re, 2.0), richardson(p1, a.im, p2, b.im, 2.0));
    let deviations: Vec<f64> = values.iter().map(|v| (v - extrapolated).norm()).collect();
    let inv: Vec<f64> = s_list.iter().map(|s| 1.0 / s).collect();
    let fitted_order = fit_order(&inv[..n - 1], &deviations[..n - 1]);
    Ok(CgoLimit { s_values: s_list.to_vec(), values, extrapolated, deviations, fitted_order })
}

/// Output of the first reduction: off-diagonal coefficients and diagonal
/// differences. The common diagonal shift is invisible on the null cone.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage1Result {
    /// `[c^i_{12}, c^i_{13}, c^i_{23}]` per component `i`.
    pub offdiag: [[f64; 3]; 3],
    /// `[c^i_{11} − c^i_{22}, c^i_{11} − c^i_{33}]` per component `i`.
    pub diag_diffs: [[f64; 2]; 3],
    pub residual_kernel: bool,
}

/// `q_i(ζ) = Σ_{j≤l} ζ_j ζ_l c^i_{jl}` at the three null vectors of
/// [`stage1_zetas`]; `samples[i][m]` pairs component `i` with the `m`-th vector.
pub fn stage1_samples(quad: &QuadCoeffs) -> [[C64; 3]; 3] {
    let zs = stage1_zetas();
    std::array::from_fn(|i| std::array::from_fn(|m| quad.eval_p(0, &zs[m])[i]))
}

/// Reads off-diagonals from imaginary parts and diagonal differences from
/// real parts of `q((0,1,i)) = c₂₂−c₃₃+ic₂₃`, `q((1,0,i)) = c₁₁−c₃₃+ic₁₃`,
/// `q((1,i,0)) = c₁₁−c₂₂+ic₁₂`.
pub fn stage1_reduce(samples: &[[C64; 3]; 3], tol: f64) -> Result<Stage1Result> {
    let mut offdiag = [[0.0; 3]; 3];
    let mut diag_diffs = [[0.0; 2]; 3];
    for i in 0..3 {
        let [q23, q13, q12] = samples[i];
        let mismatch = (q12.re + q23.re) - q13.re;
        let scale = 1.0 + q12.re.abs() + q23.re.abs() + q13.re.abs();
        if mismatch.abs() > tol * scale {
            return Err(Error::InconsistentSamples(format!(
                "component {}: (c11-c22) + (c22-c33) differs from (c11-c33) by {mismatch:e}",
                i + 1
            )));
        }
        offdiag[i] = [q12.im, q13.im, q23.im];
        diag_diffs[i] = [q12.re, q13.re];
    }
    Ok(Stage1Result { offdiag, diag_diffs, residual_kernel: true })
}

/// `d₁(ζ) = ζ₁ Σ_i ζ_i c^i_{11}` at `ζ = (1,i,0)` and `ζ = (1,0,i)`.
pub fn stage2_samples(quad: &QuadCoeffs) -> (C64, C64) {
    let d = |z: CVec| z[0] * (0..3).map(|i| z[i] * quad.get(i, 0, 0, 0)).sum::<C64>();
    let (o, zr) = (c(1.0), c(0.0));
    (d([o, I, zr]), d([o, zr, I]))
}

/// `λ = (c¹₁₁, c²₁₁, c³₁₁)` from `d₁((1,i,0)) = λ¹ + iλ²` and `d₁((1,0,i)) = λ¹ + iλ³`.
pub fn stage2_recover(d_1i0: C64, d_10i: C64, tol: f64) -> Result<[f64; 3]> {
    let mismatch = d_1i0.re - d_10i.re;
    if mismatch.abs() > tol * (1.0 + d_1i0.re.abs()) {
        return Err(Error::InconsistentSamples(format!("real parts of the two stage-2 samples differ by {mismatch:e}")));
    }
    Ok([0.5 * (d_1i0.re + d_10i.re), d_1i0.im, d_10i.im])
}

/// Combines both stages into the full coefficient set.
pub fn assemble_coefficients(stage1: &Stage1Result, lambda: [f64; 3]) -> QuadCoeffs {
    let mut q = QuadCoeffs::zeros(3);
    for i in 0..3 {
        let [c12, c13, c23] = stage1.offdiag[i];
        let [d12, d13] = stage1.diag_diffs[i];
        q.set(i, 0, 0, lambda[i]);
        q.set(i, 1, 1, lambda[i] - d12);
        q.set(i, 2, 2, lambda[i] - d13);
        q.set(i, 0, 1, c12);
        q.set(i, 0, 2, c13);
        q.set(i, 1, 2, c23);
    }
    q
}

/// Recovers all 18 constant coefficients from exact stage samples.
pub fn recover_from_exact_samples(quad: &QuadCoeffs, tol: f64) -> Result<QuadCoeffs> {
    let s1 = stage1_reduce(&stage1_samples(quad), tol)?;
    let (a, b) = stage2_samples(quad);
    let lambda = stage2_recover(a, b, tol)?;
    Ok(assemble_coefficients(&s1, lambda))
}

/// Smallest `|det(∂v_j/∂x_i)|` over grid nodes for `v_j = γ^{-1/2} e^{t ζ^{(j)}·x}`.
pub fn independence_min_det(zetas: &[CVec; 3], t: f64, gamma: f64, grid: GridSpec) -> Result<f64> {
    check_gamma_const(gamma)?;
    grid.require_cube()?;
    if grid.dim() != 3 {
        return Err(Error::InvalidDim(grid.dim()));
    }
    let a = gamma.powf(-0.5);
    let mut min = f64::INFINITY;
    for p in grid.node_positions() {
        let rows: [CVec; 3] = std::array::from_fn(|j| {
            let v = a * (t * rho_dot_x(&zetas[j], p)).exp();
            zetas[j].map(|z| t * z * v)
        });
        min = min.min(det3(&rows).norm());
    }
    Ok(min)
}

pub(crate) fn det3(m: &[CVec; 3]) -> C64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The triplet `(1,i,0)`, `(1,0,i)`, `(0,1,i)`.
pub fn canonical_triplet() -> [CVec; 3] {
    let (o, z) = (c(1.0), c(0.0));
    [[o, I, z], [o, z, I], [z, o, I]]
}

/// Constant coefficients as a dense `c[i][k][l]` array, for comparisons.
pub fn dense(quad: &QuadCoeffs) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..quad.dim() {
        for (k, l) in pairs(quad.dim()) {
            out.push(quad.get(i, k, l, 0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(m: usize) -> GridSpec {
        GridSpec::cube(3, m).unwrap()
    }

    #[test]
    fn pair_example() {
        let p = make_cgo_pair([2.0, 0.0, 0.0], 3f64.sqrt()).unwrap();
        assert_eq!(p.xi, [0.0, 1.0, 0.0]);
        assert_eq!(p.eta, [0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(p.t, 2.0, epsilon = 1e-15);
        let want = [I, I * 3f64.sqrt(), c(2.0)];
        for d in 0..3 {
            assert!((p.rho1[d] - want[d]).norm() < 1e-15);
            assert!((p.rho1[d] + p.rho2[d] - I * p.k[d]).norm() < 1e-15);
        }
        assert!(cdot(&p.rho1, &p.rho1).norm() < 1e-14);
    }

    #[test]
    fn rho_over_s_tends_to_zeta() {
        let k = [1.0, -2.0, 0.5];
        let errs: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&s| {
                let p = make_cgo_pair(k, s).unwrap();
                let z = p.zeta();
                (0..3).map(|d| (p.rho1[d] / s - z[d]).norm()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] / errs[1] > 1.9 && errs[1] / errs[2] > 1.9, "{errs:?}");
    }

    #[test]
    fn zero_frequency_frame() {
        let p = make_cgo_pair([0.0; 3], 2.0).unwrap();
        assert!(p.invariant_error() < 1e-14);
        assert!(NullVector::new(p.zeta()).is_ok());
    }

    #[test]
    fn cgo_field_examples() {
        let g = grid(4);
        let f = cgo_field(4.0, &[c(0.0); 3], g).unwrap();
        assert!(f.values().iter().all(|v| (v - 0.5).norm() < 1e-15));
        assert!(matches!(cgo_field(1.0, &[c(1.0), c(0.0), c(0.0)], g), Err(Error::NotNull(_))));
        let p = make_cgo_pair([1.0, 2.0, -1.0], 1.5).unwrap();
        let gamma = 2.5;
        let prod = cgo_field(gamma, &p.rho1, g).unwrap().zip_with(&cgo_field(gamma, &p.rho2, g).unwrap(), |a, b| a * b * gamma).unwrap();
        let want = ScalarField::from_fn(g, |x| C64::new(0.0, dot3(p.k, x)).exp());
        assert!(prod.max_abs_diff(&want).unwrap() < 1e-13);
    }

    #[test]
    fn cgo_field_discrete_laplacian_is_second_order() {
        let p = make_cgo_pair([1.0, 0.0, 0.0], 1.0).unwrap();
        let res = |m: usize| {
            let g = grid(m);
            let u = cgo_field(1.0, &p.rho1, g).unwrap();
            let op = crate::elliptic::EllipticOperator::new(&ScalarField::constant(g, c(1.0))).unwrap();
            let h2 = g.spacing().powi(2);
            op.interior().iter().map(|&q| (op.apply_at_c(u.values(), q) / h2).norm()).fold(0.0, f64::max)
        };
        let r = res(8) / res(16);
        assert!((3.5..4.5).contains(&r), "{r}");
    }

    #[test]
    fn fourier_examples() {
        let g = grid(16);
        let mut q = QuadCoeffs::zeros(3);
        q.set(0, 0, 0, 1.0);
        let z1 = NullVector::new(stage1_zetas()[0]).unwrap();
        assert_eq!(fourier_sample(&q, 1.0, &z1, [0.3, 0.0, 1.0], 0, g).unwrap(), c(0.0));
        let z3 = NullVector::new(stage1_zetas()[2]).unwrap();
        let gamma = 2.0;
        let v = fourier_sample(&q, gamma, &z3, [0.0; 3], 0, g).unwrap();
        assert!((v - 0.5).norm() < 1e-14);
        let full = fourier_sample(&q, gamma, &z3, [2.0 * PI, 0.0, 0.0], 0, g).unwrap();
        assert!(full.norm() < 1e-14);
        let g64 = grid(64);
        let half = fourier_sample(&q, gamma, &z3, [PI, 0.0, 0.0], 0, g64).unwrap();
        assert!((half - C64::new(0.0, 2.0 / PI) / gamma).norm() < 1e-3, "{half}");
    }

    #[test]
    fn limit_form_examples() {
        let g = grid(8);
        let k = [PI, 0.0, 0.0];
        let zero = cgo_limit_form(&QuadCoeffs::zeros(3), 1.0, k, &[8.0, 16.0, 32.0], 0, g).unwrap();
        assert!(zero.values.iter().all(|v| v.norm() == 0.0));
        // At k = (π,0,0) the frame gives ζ = (0, i, 1), so c²²₁ is visible.
        let mut q = QuadCoeffs::zeros(3);
        q.set(0, 1, 1, 1.0);
        let lim = cgo_limit_form(&q, 1.0, k, &[8.0, 16.0, 32.0], 0, g).unwrap();
        let pair = make_cgo_pair(k, 1.0).unwrap();
        let oracle = fourier_sample(&q, 1.0, &NullVector::new(pair.zeta()).unwrap(), k, 0, g).unwrap();
        assert!((lim.values[2] - oracle).norm() < 0.02 * oracle.norm());
        assert!((lim.extrapolated - oracle).norm() < 1e-6 * oracle.norm());
    }

    #[test]
    fn limit_form_generic_decay() {
        let g = grid(8);
        let k = [1.3, -0.7, 2.1];
        let q = QuadCoeffs::from_constants(3, |i, k, l| 0.3 * (i + 1) as f64 - 0.2 * k as f64 + 0.45 * (l * l) as f64);
        let lim = cgo_limit_form(&q, 1.7, k, &[4.0, 8.0, 16.0, 32.0], 1, g).unwrap();
        let pair = make_cgo_pair(k, 1.0).unwrap();
        let oracle = fourier_sample(&q, 1.7, &NullVector::new(pair.zeta()).unwrap(), k, 1, g).unwrap();
        assert!((lim.values[3] - oracle).norm() < 0.02 * oracle.norm());
        assert!((lim.extrapolated - oracle).norm() < 1e-5 * oracle.norm());
        let order = lim.fitted_order.unwrap();
        assert!((1.8..2.2).contains(&order), "{order}");
    }

    #[test]
    fn finite_difference_gradients_underresolve_large_s() {
        let g = grid(8);
        let k = [PI, 0.0, 0.0];
        let mut q = QuadCoeffs::zeros(3);
        q.set(0, 1, 1, 1.0);
        let pair = make_cgo_pair(k, 32.0).unwrap();
        let exact = cgo_normalized_form(&q, 1.0, &pair, 0, g, GradientMode::Analytic).unwrap();
        let fd = cgo_normalized_form(&q, 1.0, &pair, 0, g, GradientMode::FiniteDifference).unwrap();
        assert!((fd - exact).norm() > 0.1 * exact.norm());
    }

    #[test]
    fn stage1_examples() {
        let zero = stage1_reduce(&[[c(0.0); 3]; 3], 1e-12).unwrap();
        assert_eq!(zero.offdiag, [[0.0; 3]; 3]);
        assert_eq!(zero.diag_diffs, [[0.0; 2]; 3]);
        assert!(zero.residual_kernel);
        let mut q = QuadCoeffs::zeros(3);
        q.set(0, 1, 2, 7.0);
        let s = stage1_samples(&q);
        assert_eq!(s[0][0], C64::new(0.0, 7.0));
        assert_eq!(stage1_reduce(&s, 1e-12).unwrap().offdiag[0], [0.0, 0.0, 7.0]);
        let ident = QuadCoeffs::from_constants(3, |_, k, l| if k == l { 1.0 } else { 0.0 });
        assert!(stage1_samples(&ident).iter().flatten().all(|v| v.norm() == 0.0));
        let mut bad = [[c(0.0); 3]; 3];
        bad[1][0] = c(1.0);
        assert!(matches!(stage1_reduce(&bad, 1e-12), Err(Error::InconsistentSamples(_))));
    }

    #[test]
    fn stage2_examples() {
        assert_eq!(stage2_recover(c(0.0), c(0.0), 1e-12).unwrap(), [0.0; 3]);
        assert_eq!(stage2_recover(c(5.0), c(5.0), 1e-12).unwrap(), [5.0, 0.0, 0.0]);
        assert_eq!(stage2_recover(C64::new(1.0, 2.0), C64::new(1.0, 3.0), 1e-12).unwrap(), [1.0, 2.0, 3.0]);
        assert!(stage2_recover(c(1.0), c(2.0), 1e-12).is_err());
        let lam = QuadCoeffs::from_constants(3, |i, k, l| if k == l { [5.0, 0.0, 0.0][i] } else { 0.0 });
        assert_eq!(stage2_samples(&lam).0, c(5.0));
    }

    #[test]
    fn independence_examples() {
        let g = grid(8);
        let d1 = independence_min_det(&canonical_triplet(), 1.0, 1.0, g).unwrap();
        assert!((d1 - 2f64.sqrt()).abs() < 1e-12, "{d1}");
        let d2 = independence_min_det(&canonical_triplet(), 2.0, 1.0, g).unwrap();
        assert!((d2 / d1 - 8.0).abs() < 1e-10);
        let z = canonical_triplet();
        assert_eq!(independence_min_det(&[z[0], z[0], z[1]], 1.0, 1.0, g).unwrap(), 0.0);
    }

    fn kvec() -> impl Strategy<Value = Point> {
        proptest::array::uniform3(-10.0..10.0f64)
    }

    proptest! {
        #[test]
        fn pair_invariants(k in kvec(), s in 0.1..100.0f64) {
            let p = make_cgo_pair(k, s).unwrap();
            prop_assert!(p.invariant_error() < 1e-12 * (1.0 + s * s + dot3(k, k)));
            prop_assert!(cdot(&p.rho1, &p.rho1).norm() < 1e-12 * (1.0 + s * s + dot3(k, k)));
            prop_assert!(NullVector::new(p.zeta()).is_ok());
        }

        #[test]
        fn round_trip(v in proptest::collection::vec(-3.0..3.0f64, 18)) {
            let q = QuadCoeffs::from_constants(3, |i, k, l| v[i * 6 + pairs(3).iter().position(|&p| p == (k, l)).unwrap()]);
            let rec = recover_from_exact_samples(&q, 1e-12).unwrap();
            for (a, b) in dense(&rec).iter().zip(dense(&q)) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
