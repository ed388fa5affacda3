//! Browser bindings for three small experiments.
//!
//! Every export returns a flat `Float64Array`; the layouts are documented on
//! the inner functions, which are plain Rust and tested natively.

use wasm_bindgen::prelude::*;

use nldtn::cgo::{cgo_limit_form, fourier_sample, make_cgo_pair, NullVector};
use nldtn::forward::{ForwardSolver, NonlinearOptions};
use nldtn::material::pairs;
use nldtn::singular::{closed_form_measurements, probe_frame, probe_sweep, EpsModel, ProbeQuadrature};
use nldtn::{BoundaryTrace, GridSpec, MaterialLaw, QuadCoeffs, ResidualSpec, ScalarField, C64};

fn err(e: nldtn::Error) -> String {
    e.to_string()
}

/// 18 numbers, `c^i_{kl}` for `i = 1..3` and `k ≤ l` in row-major order.
fn quad_from_slice(c: &[f64]) -> Result<QuadCoeffs, String> {
    if c.len() != 18 {
        return Err(format!("expected 18 coefficients, got {}", c.len()));
    }
    let order = pairs(3);
    Ok(QuadCoeffs::from_constants(3, |i, k, l| c[i * 6 + order.iter().position(|&p| p == (k, l)).unwrap()]))
}

/// Solves `∇·(γ∇u + c₁₁ (∂₁u)² e₁) = 0` on the unit square with `γ = 1 + b x`
/// and data `t (x + y²/2)`.
///
/// Layout: `[iterations, final_update, n, u (n·n values, x fastest),
/// boundary count m, Λ_C (m values), t·Λ_γ f (m values)]`.
pub fn forward_field(cells: usize, c11: f64, amplitude: f64, gamma_slope: f64) -> Result<Vec<f64>, String> {
    let grid = GridSpec::cube(2, cells).map_err(err)?;
    let mut q = QuadCoeffs::zeros(2);
    q.set(0, 0, 0, c11);
    let gamma = ScalarField::from_real_fn(grid, |p| 1.0 + gamma_slope * p[0]);
    let law = MaterialLaw::new(gamma, q, ResidualSpec::Zero).map_err(err)?;
    let solver = ForwardSolver::new(law).map_err(err)?;
    let f = BoundaryTrace::from_real_fn(grid, |p| p[0] + 0.5 * p[1] * p[1]);
    let opts = NonlinearOptions::default();
    let (u, report) = solver.solve(&f.scale(C64::new(amplitude, 0.0)), &opts).map_err(err)?;
    let dn = solver.flux_of(&u);
    let lin = solver.dn_linear(&f, &opts.linear).map_err(err)?;
    let n = grid.points_per_axis();
    let mut out = vec![report.picard_iterations as f64, report.final_update_norm, n as f64];
    out.extend(u.values().iter().map(|v| v.re));
    out.push(dn.len() as f64);
    out.extend(dn.values().iter().map(|v| v.re));
    out.extend(lin.values().iter().map(|v| amplitude * v.re));
    Ok(out)
}

/// Normalized probe form against `s` on the unit cube with `γ = 1`.
///
/// Layout: `[count, s (count), |form(s) − sample| (count), extrapolated gap,
/// Re sample, Im sample]`.
pub fn cgo_convergence(cells: usize, coeffs: &[f64], k: [f64; 3], component: usize, s_values: &[f64]) -> Result<Vec<f64>, String> {
    if !(1..=3).contains(&component) {
        return Err("component must be 1, 2 or 3".into());
    }
    let quad = quad_from_slice(coeffs)?;
    let grid = GridSpec::cube(3, cells).map_err(err)?;
    let i = component - 1;
    let lim = cgo_limit_form(&quad, 1.0, k, s_values, i, grid).map_err(err)?;
    let zeta = NullVector::new(make_cgo_pair(k, 1.0).map_err(err)?.zeta()).map_err(err)?;
    let sample = fourier_sample(&quad, 1.0, &zeta, k, i, grid).map_err(err)?;
    let mut out = vec![s_values.len() as f64];
    out.extend_from_slice(s_values);
    out.extend(lim.values.iter().map(|v| (v - sample).norm()));
    out.push((lim.extrapolated - sample).norm());
    out.push(sample.re);
    out.push(sample.im);
    Ok(out)
}

/// Singular-probe values for one frame as `ε` shrinks.
///
/// `s` and `t` are one-based. Layout: `[count, eps (count), then for
/// j = 1..3: values (count), extrapolated limit, closed-form limit]`.
pub fn singular_sweep(coeffs: &[f64], s: usize, t: usize, eps_values: &[f64]) -> Result<Vec<f64>, String> {
    if !(1..=3).contains(&s) || !(1..=3).contains(&t) {
        return Err("s and t must be 1, 2 or 3".into());
    }
    let quad = quad_from_slice(coeffs)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (alpha, beta) = if s == t { (1.0, 0.0) } else { (h, h) };
    let frame = probe_frame(s - 1, t - 1, alpha, beta).map_err(err)?;
    let sweep = probe_sweep(&quad, &[frame], eps_values, &ProbeQuadrature::default(), EpsModel::LogLinear).map_err(err)?;
    let exact = closed_form_measurements(&quad, &[frame]);
    let mut out = vec![eps_values.len() as f64];
    out.extend_from_slice(eps_values);
    for j in 0..3 {
        out.extend_from_slice(&sweep.values[0][j]);
        out.push(sweep.measurements[j].value);
        out.push(exact[j].value);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = forwardField)]
pub fn forward_field_js(cells: usize, c11: f64, amplitude: f64, gamma_slope: f64) -> Result<Vec<f64>, JsError> {
    forward_field(cells, c11, amplitude, gamma_slope).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = cgoConvergence)]
pub fn cgo_convergence_js(cells: usize, coeffs: &[f64], k1: f64, k2: f64, k3: f64, component: usize, s_values: &[f64]) -> Result<Vec<f64>, JsError> {
    cgo_convergence(cells, coeffs, [k1, k2, k3], component, s_values).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = singularSweep)]
pub fn singular_sweep_js(coeffs: &[f64], s: usize, t: usize, eps_values: &[f64]) -> Result<Vec<f64>, JsError> {
    singular_sweep(coeffs, s, t, eps_values).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs() -> Vec<f64> {
        (0..18).map(|n| ((n * 7 % 11) as f64 - 5.0) / 5.0).collect()
    }

    #[test]
    fn forward_layout_and_linear_collapse() {
        let out = forward_field(6, 0.0, 0.2, 0.3).unwrap();
        let n = out[2] as usize;
        assert_eq!(n, 7);
        let m = out[3 + n * n] as usize;
        assert_eq!(out.len(), 4 + n * n + 2 * m);
        let dn = &out[4 + n * n..4 + n * n + m];
        let lin = &out[4 + n * n + m..];
        let gap = dn.iter().zip(lin).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-10, "{gap}");
    }

    #[test]
    fn forward_nonlinear_differs_at_second_order() {
        let out = forward_field(6, 1.0, 0.1, 0.0).unwrap();
        let n = out[2] as usize;
        let m = out[3 + n * n] as usize;
        let dn = &out[4 + n * n..4 + n * n + m];
        let lin = &out[4 + n * n + m..];
        let gap = dn.iter().zip(lin).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap > 1e-4 && gap < 0.1, "{gap}");
        assert!(out[0] >= 2.0);
    }

    #[test]
    fn cgo_gap_shrinks() {
        let out = cgo_convergence(6, &coeffs(), [1.0, -0.5, 0.3], 2, &[4.0, 8.0, 16.0]).unwrap();
        let gaps = &out[4..7];
        assert!(gaps[2] < gaps[0] / 8.0, "{gaps:?}");
        assert!(out[7] < gaps[2]);
    }

    #[test]
    fn singular_limit_matches_closed_form() {
        let out = singular_sweep(&coeffs(), 1, 2, &[0.1, 0.05, 0.025]).unwrap();
        assert_eq!(out.len(), 4 + 3 * 5);
        for j in 0..3 {
            let base = 4 + j * 5;
            let (limit, exact) = (out[base + 3], out[base + 4]);
            assert!((limit - exact).abs() < 0.02 * exact.abs().max(1.0), "j={j}: {limit} vs {exact}");
        }
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(quad_from_slice(&[0.0; 5]).is_err());
        assert!(cgo_convergence(6, &coeffs(), [0.0; 3], 4, &[4.0, 8.0]).is_err());
        assert!(singular_sweep(&coeffs(), 0, 1, &[0.1, 0.05, 0.025]).is_err());
    }
}
