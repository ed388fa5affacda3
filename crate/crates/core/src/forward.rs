//! Nonlinear Dirichlet problem `∇·C(x,∇u) = 0` by Picard iteration and the
//! Dirichlet-to-Neumann maps `Λ_C` and `Λ_γ`.
//!
//! With `u₀` the linear solution for the data `f`, the correction `φ`
//! is the fixed point of `φ ↦ −L_γ⁻¹ ∇·Q(x, ∇u₀ + ∇φ)` where `Q = P + R`
//! and `L_γ⁻¹` solves `∇·(γ∇w) = g` with zero boundary values.
//!
//! Boundary fluxes come from a finite-volume balance over the dual cell of
//! each boundary node, using the same link fluxes as the interior equations.
//! The sum of all boundary fluxes therefore equals the sum of interior
//! residuals, and a field with constant gradient gives exact fluxes.

use crate::elliptic::{EllipticOperator, LinearSolveReport, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{divergence, gradient, BoundaryTrace, GridSpec, ScalarField, VectorField, C64};
use crate::material::MaterialLaw;

/// Default Picard stopping threshold on the L∞ norm of successive updates.
pub const DEFAULT_PICARD_TOL: f64 = 1e-12;
pub const DEFAULT_PICARD_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub linear: SolverOptions,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_PICARD_TOL, max_iter: DEFAULT_PICARD_MAX_ITER, linear: SolverOptions::default() }
    }
}

impl NonlinearOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub picard_iterations: usize,
    pub final_update_norm: f64,
    pub diverged: bool,
    /// L∞ norm of every update, in order.
    pub updates: Vec<f64>,
    pub linear: LinearSolveReport,
}

/// Solver for one material law; caches the linear operator across solves.
#[derive(Clone, Debug)]
pub struct ForwardSolver {
    law: MaterialLaw,
    op: EllipticOperator,
}

impl ForwardSolver {
    pub fn new(law: MaterialLaw) -> Result<Self> {
        let op = EllipticOperator::new(law.gamma())?;
        Ok(Self { law, op })
    }

    pub fn law(&self) -> &MaterialLaw {
        &self.law
    }

    pub fn operator(&self) -> &EllipticOperator {
        &self.op
    }

    pub fn grid(&self) -> GridSpec {
        self.op.grid()
    }

    /// Solution `u₁` of the linear problem.
    pub fn solve_linear(&self, f: &BoundaryTrace, opts: &SolverOptions) -> Result<(ScalarField, LinearSolveReport)> {
        self.op.dirichlet(f, opts)
    }

    pub fn solve(&self, f: &BoundaryTrace, opts: &NonlinearOptions) -> Result<(ScalarField, ContractionReport)> {
        let (u0, rep0) = self.op.dirichlet(f, &opts.linear)?;
        self.solve_from(&u0, rep0, opts)
    }

    /// Picard iteration started from a precomputed linear solution.
    pub fn solve_from(
        &self,
        u0: &ScalarField,
        rep0: LinearSolveReport,
        opts: &NonlinearOptions,
    ) -> Result<(ScalarField, ContractionReport)> {
        let grid = self.grid();
        let h2 = grid.spacing().powi(2);
        let mut phi = ScalarField::zeros(grid);
        let mut updates = Vec::new();
        let mut linear = rep0;
        let mut growing = 0;
        for it in 1..=opts.max_iter {
            let u = u0.add(&phi)?;
            let q = self.law.q_field(&gradient(&u));
            let rhs: Vec<C64> = divergence(&q).values().iter().map(|&v| h2 * v).collect();
            let (next, rep) = self.op.source_scaled(&rhs, &opts.linear)?;
            linear = linear.merge(rep);
            let update = next.max_abs_diff(&phi)?;
            if !update.is_finite() {
                return Err(Error::NonContraction { iterations: it, last_update: update, reason: "non-finite iterate" });
            }
            if let Some(&prev) = updates.last() {
                growing = if update > prev { growing + 1 } else { 0 };
            }
            updates.push(update);
            phi = next;
            if update <= opts.tol {
                let u = u0.add(&phi)?;
                let report = ContractionReport {
                    picard_iterations: it,
                    final_update_norm: update,
                    diverged: false,
                    updates,
                    linear,
                };
                return Ok((u, report));
            }
            if growing >= 3 {
                return Err(Error::NonContraction { iterations: it, last_update: update, reason: "update norms grew three times in a row" });
            }
        }
        Err(Error::NonContraction {
            iterations: opts.max_iter,
            last_update: updates.last().copied().unwrap_or(f64::NAN),
            reason: "iteration limit reached",
        })
    }

    /// `Λ_C(f)`.
    pub fn dn(&self, f: &BoundaryTrace, opts: &NonlinearOptions) -> Result<BoundaryTrace> {
        let (u, _) = self.solve(f, opts)?;
        Ok(self.flux_of(&u))
    }

    /// `Λ_γ(f)`.
    pub fn dn_linear(&self, f: &BoundaryTrace, opts: &SolverOptions) -> Result<BoundaryTrace> {
        let (u, _) = self.op.dirichlet(f, opts)?;
        Ok(boundary_flux(&self.op, &u, None))
    }

    /// `ν·C(x,∇u)` on the boundary for a solution `u` of the nonlinear problem.
    pub fn flux_of(&self, u: &ScalarField) -> BoundaryTrace {
        if self.law.is_linear() {
            return boundary_flux(&self.op, u, None);
        }
        let q = self.law.q_field(&gradient(u));
        boundary_flux(&self.op, u, Some(&q))
    }
}

/// Solves the nonlinear problem with data `f`.
pub fn solve_nonlinear(law: &MaterialLaw, f: &BoundaryTrace, tol: f64, max_iter: usize) -> Result<(ScalarField, ContractionReport)> {
    ForwardSolver::new(law.clone())?.solve(f, &NonlinearOptions::new(tol, max_iter))
}

/// `Λ_γ(f) = ν·γ∇u₁`.
pub fn dn_linear(gamma: &ScalarField, f: &BoundaryTrace) -> Result<BoundaryTrace> {
    let op = EllipticOperator::new(gamma)?;
    let (u, _) = op.dirichlet(f, &SolverOptions::default())?;
    Ok(boundary_flux(&op, &u, None))
}

/// `Λ_C(f) = ν·C(x,∇u)`.
pub fn dn_nonlinear(law: &MaterialLaw, f: &BoundaryTrace, tol: f64, max_iter: usize) -> Result<BoundaryTrace> {
    ForwardSolver::new(law.clone())?.dn(f, &NonlinearOptions::new(tol, max_iter))
}

/// Outward flux density of `γ∇u + q` at every boundary sample.
///
/// The flux along the link `i → i + e_d` is
/// `γ_face (u_{i+e_d} − u_i)/h + (q_i + q_{i+e_d})_d / 2`; a link on a
/// boundary plane of another axis carries half (or a quarter of) the full
/// link area `h^{n−1}`. The boundary part of a node's dual cell receives
/// minus the net outflow through its interior links. Outflow along a face
/// normal goes to that face's sample; outflow along the remaining axes is
/// shared among the node's samples in proportion to their weights.
pub fn boundary_flux(op: &EllipticOperator, u: &ScalarField, q: Option<&VectorField>) -> BoundaryTrace {
    let grid = op.grid();
    let dim = grid.dim();
    let m = grid.cells();
    let h = grid.spacing();
    let full = h.powi(dim as i32 - 1);
    let uv = u.values();
    let link_flux = |d: usize, i: usize| -> C64 {
        let j = i + grid.stride(d);
        let mut f = op.face(d, i) * (uv[j] - uv[i]) / h;
        if let Some(q) = q {
            f += 0.5 * (q.component(d)[i] + q.component(d)[j]);
        }
        f
    };
    let mut trace = BoundaryTrace::zeros(grid);
    let samples = trace.samples().to_vec();
    // Samples of a node are not contiguous; gather per node first.
    let mut node_out: Vec<Option<([C64; 3], C64, f64)>> = vec![None; grid.node_count()];
    for s in &samples {
        if node_out[s.node].is_some() {
            continue;
        }
        let ijk = grid.multi_index(s.node);
        let on_plane = |d: usize| ijk[d] == 0 || ijk[d] == m;
        let area = |d: usize| {
            (0..dim).filter(|&e| e != d && on_plane(e)).fold(full, |a, _| 0.5 * a)
        };
        let mut out = [C64::new(0.0, 0.0); 3];
        let mut tangential = C64::new(0.0, 0.0);
        let mut weight = 0.0;
        for d in 0..dim {
            let st = grid.stride(d);
            let a = area(d);
            let mut o = C64::new(0.0, 0.0);
            if ijk[d] < m {
                o += a * link_flux(d, s.node);
            }
            if ijk[d] > 0 {
                o -= a * link_flux(d, s.node - st);
            }
            out[d] = o;
            if on_plane(d) {
                weight += a;
            } else {
                tangential += o;
            }
        }
        node_out[s.node] = Some((out, tangential, weight));
    }
    for (v, s) in trace.values_mut().iter_mut().zip(&samples) {
        let (out, tangential, weight) = node_out[s.node].expect("every sample node was visited");
        *v = -(out[s.axis] + tangential * (s.weight / weight)) / s.weight;
    }
    trace
}
