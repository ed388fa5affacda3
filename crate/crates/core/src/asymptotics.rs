//! Small-data expansion of the nonlinear problem and the second-order
//! boundary fingerprint.
//!
//! For data `tf` the solution expands as `u = t u₁ + t² u₂ + O(t³)` where
//! `u₁` solves the linear problem and `∇·(γ∇u₂) = −∇·P(x,∇u₁)` with zero
//! boundary values. The fingerprint `(Λ_C(tf) − tΛ_γ f)/t²` tends to
//! `ν·(γ∇u₂ + P(x,∇u₁))`, and pairing it with the trace of a second linear
//! solution `v` gives `∫_Ω P(x,∇u₁)·∇v dx`.

use crate::elliptic::{EllipticOperator, SolverOptions};
use crate::error::{Error, Result};
use crate::extrapolate::{fit_order, richardson};
use crate::forward::{boundary_flux, ForwardSolver, NonlinearOptions};
use crate::grid::{
    divergence, dot, gradient, h1_norm, integrate_boundary, integrate_volume, BoundaryTrace, ScalarField, VectorField, C64,
};
use crate::material::{pairs, MaterialLaw, QuadCoeffs};

/// Default sweep `t = 2^{-3}, …, 2^{-7}`.
pub fn default_t_sweep() -> Vec<f64> {
    (3..=7).map(|m| 2f64.powi(-m)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionResult {
    /// Strictly decreasing values of `t` that were solved successfully.
    pub t_values: Vec<f64>,
    /// `D(t) = (Λ_C(tf) − tΛ_γ f)/t²` for each `t`.
    pub traces: Vec<BoundaryTrace>,
    /// Richardson limit from the two smallest `t`, assuming first-order error.
    pub extrapolated: BoundaryTrace,
    /// `ν·(γ∇u₂ + P(x,∇u₁))` computed from the linearized problems.
    pub reference: BoundaryTrace,
    /// `‖D(t) − reference‖_∞` for each `t`.
    pub deviations: Vec<f64>,
    /// Log-log slope of the deviations; `None` when they vanish.
    pub fitted_order: Option<f64>,
    /// Leading values of `t` dropped because the iteration did not contract.
    pub skipped: Vec<f64>,
}

/// `u₂` from `∇·(γ∇u₂) = −∇·P(x,∇u₁)`, `u₂ = 0` on the boundary.
pub fn solve_u2(gamma: &ScalarField, quad: &QuadCoeffs, u1: &ScalarField) -> Result<ScalarField> {
    let op = EllipticOperator::new(gamma)?;
    solve_u2_with(&op, quad, u1, &SolverOptions::default())
}

pub fn solve_u2_with(op: &EllipticOperator, quad: &QuadCoeffs, u1: &ScalarField, opts: &SolverOptions) -> Result<ScalarField> {
    if u1.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let h2 = op.grid().spacing().powi(2);
    let p = quad.p_field(&gradient(u1));
    let rhs: Vec<C64> = divergence(&p).values().iter().map(|&v| h2 * v).collect();
    Ok(op.source_scaled(&rhs, opts)?.0)
}

/// `ν·(γ∇u₂ + P(x,∇u₁))` on the boundary.
pub fn second_order_reference(gamma: &ScalarField, quad: &QuadCoeffs, f: &BoundaryTrace) -> Result<BoundaryTrace> {
    let op = EllipticOperator::new(gamma)?;
    let opts = SolverOptions::default();
    let (u1, _) = op.dirichlet(f, &opts)?;
    reference_from_u1(&op, quad, &u1, &opts)
}

fn reference_from_u1(op: &EllipticOperator, quad: &QuadCoeffs, u1: &ScalarField, opts: &SolverOptions) -> Result<BoundaryTrace> {
    let u2 = solve_u2_with(op, quad, u1, opts)?;
    let p = quad.p_field(&gradient(u1));
    Ok(boundary_flux(op, &u2, Some(&p)))
}

/// Fingerprint sweep with default solver settings.
pub fn second_order_from_data(law: &MaterialLaw, f: &BoundaryTrace, t_list: &[f64]) -> Result<ExpansionResult> {
    second_order_from_data_with(law, f, t_list, &NonlinearOptions::default())
}

/// Fingerprint sweep. The Picard threshold for data `tf` is `opts.tol·t²`,
/// which keeps the iteration error below the `t²` signal at every `t`.
pub fn second_order_from_data_with(
    law: &MaterialLaw,
    f: &BoundaryTrace,
    t_list: &[f64],
    opts: &NonlinearOptions,
) -> Result<ExpansionResult> {
    if t_list.len() < 2 {
        return Err(Error::InvalidParam("need at least two values of t".into()));
    }
    if t_list.windows(2).any(|w| !(w[0] > w[1])) || t_list.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParam("t values must be positive and strictly decreasing".into()));
    }
    let solver = ForwardSolver::new(law.clone())?;
    let (u1, _) = solver.solve_linear(f, &opts.linear)?;
    let lin = boundary_flux(solver.operator(), &u1, None);
    let reference = reference_from_u1(solver.operator(), law.quad(), &u1, &opts.linear)?;
    let mut t_values = Vec::new();
    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    for &t in t_list {
        let tf = f.scale(C64::new(t, 0.0));
        let local = NonlinearOptions { tol: opts.tol * t * t, ..*opts };
        match solver.dn(&tf, &local) {
            Ok(dn) => {
                let d = dn.zip_with(&lin, |a, b| (a - t * b) / (t * t))?;
                t_values.push(t);
                traces.push(d);
            }
            Err(e @ Error::NonContraction { .. }) => {
                if t_values.is_empty() {
                    skipped.push(t);
                } else {
                    return Err(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
    let n = traces.len();
    if n < 2 {
        return Err(Error::NonContraction {
            iterations: 0,
            last_update: f64::NAN,
            reason: "fewer than two values of t contract",
        });
    }
    let (t1, t2) = (t_values[n - 2], t_values[n - 1]);
    let extrapolated = traces[n - 2].zip_with(&traces[n - 1], |a, b| {
        C64::new(richardson(t1, a.re, t2, b.re, 1.0), richardson(t1, a.im, t2, b.im, 1.0))
    })?;
    let deviations: Vec<f64> = traces.iter().map(|d| d.max_abs_diff(&reference)).collect::<Result<_>>()?;
    let fitted_order = fit_order(&t_values, &deviations);
    Ok(ExpansionResult { t_values, traces, extrapolated, reference, deviations, fitted_order, skipped })
}

/// Discrete `H¹` norm of `v^{(t)} − u₂` with `v^{(t)} = (u(tf)/t − u₁)/t`.
pub fn expansion_remainder(law: &MaterialLaw, f: &BoundaryTrace, t: f64) -> Result<f64> {
    let solver = ForwardSolver::new(law.clone())?;
    let opts = NonlinearOptions::default();
    let (u1, _) = solver.solve_linear(f, &opts.linear)?;
    let u2 = solve_u2_with(solver.operator(), law.quad(), &u1, &opts.linear)?;
    let local = NonlinearOptions { tol: opts.tol * t * t, ..opts };
    let (u, _) = solver.solve(&f.scale(C64::new(t, 0.0)), &local)?;
    let vt = u.zip_with(&u1, |a, b| (a / t - b) / t)?;
    Ok(h1_norm(&vt.sub(&u2)?))
}

/// `∫_Ω P(x,∇u₁)·∇v dx`.
pub fn volume_form(quad: &QuadCoeffs, u1: &ScalarField, v: &ScalarField) -> Result<C64> {
    if u1.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let g1 = gradient(u1);
    let gv = gradient(v);
    let mut w = ScalarField::zeros(u1.grid());
    for (idx, slot) in w.values_mut().iter_mut().enumerate() {
        *slot = dot(&quad.eval_p(idx, &g1.at(idx)), &gv.at(idx));
    }
    Ok(integrate_volume(&w))
}

/// `∫_Ω Σ_i Σ_{k≤l} c^i_{kl}(∂_k u₁ ∂_l u₂ + ∂_l u₁ ∂_k u₂) ∂_i v dx`.
pub fn trilinear_form(quad: &QuadCoeffs, u1: &ScalarField, u2: &ScalarField, v: &ScalarField) -> Result<C64> {
    if u1.grid() != u2.grid() || u1.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    trilinear_form_grad(quad, &gradient(u1), &gradient(u2), &gradient(v))
}

/// [`trilinear_form`] from nodal gradients (e.g. known analytically).
pub fn trilinear_form_grad(quad: &QuadCoeffs, g1: &VectorField, g2: &VectorField, gv: &VectorField) -> Result<C64> {
    if g1.grid() != g2.grid() || g1.grid() != gv.grid() {
        return Err(Error::GridMismatch);
    }
    let mut w = ScalarField::zeros(g1.grid());
    for (idx, slot) in w.values_mut().iter_mut().enumerate() {
        *slot = dot(&quad.polarized_p(idx, &g1.at(idx), &g2.at(idx)), &gv.at(idx));
    }
    Ok(integrate_volume(&w))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityGap {
    /// `∫_{∂Ω} (lim D(t)) g dσ`.
    pub boundary_side: C64,
    /// `∫_Ω P(x,∇u₁)·∇v dx` with `v` the linear solution with data `g`.
    pub volume_side: C64,
    pub gap: f64,
}

/// Compares the measured fingerprint paired with `g` against the volume form.
pub fn divergence_identity_gap(law: &MaterialLaw, f: &BoundaryTrace, g: &BoundaryTrace, t_list: &[f64]) -> Result<IdentityGap> {
    let exp = second_order_from_data(law, f, t_list)?;
    let op = EllipticOperator::new(law.gamma())?;
    let opts = SolverOptions::default();
    let (u1, _) = op.dirichlet(f, &opts)?;
    let (v, _) = op.dirichlet(g, &opts)?;
    let boundary_side = integrate_boundary(&exp.extrapolated, g)?;
    let volume_side = volume_form(law.quad(), &u1, &v)?;
    Ok(IdentityGap { boundary_side, volume_side, gap: (boundary_side - volume_side).norm() })
}

/// Recovers constant quadratic coefficients from affine Dirichlet probes.
///
/// For constant `γ` and constant coefficients, `f = a·x` produces the exact
/// solution `u = t a·x`, so the fingerprint equals `ν·P(a)` at every sample
/// and `P_i(a)` can be read on the face with outward normal `e_i`. Probing
/// `a = e_k` and `a = e_k + e_l` separates every coefficient.
pub fn affine_probe_coefficients(law: &MaterialLaw, t: f64) -> Result<QuadCoeffs> {
    let grid = law.grid();
    let dim = grid.dim();
    let solver = ForwardSolver::new(law.clone())?;
    let opts = NonlinearOptions { tol: NonlinearOptions::default().tol * t * t, ..NonlinearOptions::default() };
    let probe = |a: [f64; 3]| -> Result<[f64; 3]> {
        let f = BoundaryTrace::from_real_fn(grid, |p| a[0] * p[0] + a[1] * p[1] + a[2] * p[2]);
        let lin = solver.dn_linear(&f, &opts.linear)?;
        let dn = solver.dn(&f.scale(C64::new(t, 0.0)), &opts)?;
        let d = dn.zip_with(&lin, |x, y| (x - t * y) / (t * t))?;
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(dim) {
            // Sample at the centre of the face x_i = 1 (or the nearest node).
            let mut ijk = [grid.cells() / 2; 3];
            ijk[i] = grid.cells();
            let node = grid.index(ijk);
            let pos = d
                .samples()
                .iter()
                .position(|s| s.node == node && s.axis == i && s.upper)
                .expect("face centre sample exists");
            *o = d.values()[pos].re;
        }
        Ok(out)
    };
    let unit = |k: usize| {
        let mut a = [0.0; 3];
        a[k] = 1.0;
        a
    };
    let mut diag = vec![[0.0; 3]; dim];
    for (k, slot) in diag.iter_mut().enumerate() {
        *slot = probe(unit(k))?;
    }
    let mut quad = QuadCoeffs::zeros(dim);
    for (k, l) in pairs(dim) {
        if k == l {
            for i in 0..dim {
                quad.set(i, k, k, diag[k][i]);
            }
        } else {
            let mut a = unit(k);
            a[l] = 1.0;
            let both = probe(a)?;
            for i in 0..dim {
                quad.set(i, k, l, both[i] - diag[k][i] - diag[l][i]);
            }
        }
    }
    Ok(quad)
}
