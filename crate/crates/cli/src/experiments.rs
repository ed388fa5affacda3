//! The six experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nldtn::asymptotics::{affine_probe_coefficients, divergence_identity_gap, second_order_from_data_with, second_order_reference};
use nldtn::cgo::{
    cgo_limit_form, cgo_limit_form_with_frame, fourier_sample, make_cgo_pair, stage1_reduce, stage1_zetas, GradientMode,
    NullVector,
};
use nldtn::elliptic::SolverOptions;
use nldtn::extrapolate::fit_order;
use nldtn::forward::{ForwardSolver, NonlinearOptions};
use nldtn::material::{pairs, GammaDoc, LawDocument};
use nldtn::singular::{
    assemble_and_recover, probe_sweep, standard_frames, EpsModel, MomentTable, ProbeQuadrature, MAX_CONDITION,
};
use nldtn::{BoundaryTrace, GridSpec, MaterialLaw, QuadCoeffs, ResidualSpec, ScalarField, C64};

use crate::config::{
    eval_terms, AsymptoticsProbes, CgoProbes, ExperimentConfig, ForwardProbes, IdentityProbes, ModelName, MomentProbes,
    Probes, RecoverProbes, SolverConfig, Term,
};
use crate::output::{Check, Outcome, Plot, Row, Series};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] nldtn::Error),
}

type Run<T> = Result<T, RunError>;

fn bind(doc: &LawDocument, grid: GridSpec) -> Run<MaterialLaw> {
    doc.bind(grid).map_err(|e| RunError::Config(format!("law: {e}")))
}

fn trace(grid: GridSpec, terms: &[Term]) -> BoundaryTrace {
    let terms = terms.to_vec();
    BoundaryTrace::from_real_fn(grid, move |p| eval_terms(&terms, p))
}

fn nonlinear_options(s: &SolverConfig) -> NonlinearOptions {
    NonlinearOptions { tol: s.picard_tol, max_iter: s.picard_max_iter, linear: SolverOptions { rel_tol: s.linear_tol, max_iter: None } }
}

fn c11_document() -> LawDocument {
    let mut q = QuadCoeffs::zeros(1);
    q.set(0, 0, 0, 1.0);
    LawDocument::from_constant_law(1.0, &q, ResidualSpec::Zero)
}

fn random_quad(seed: u64, scale: f64) -> QuadCoeffs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..18).map(|_| rng.gen_range(-scale..scale)).collect();
    QuadCoeffs::from_constants(3, |i, k, l| v[i * 6 + pairs(3).iter().position(|&p| p == (k, l)).unwrap()])
}

fn constant_gamma(doc: &LawDocument) -> Run<f64> {
    match doc.gamma {
        GammaDoc::Constant(g) => Ok(g),
        _ => Err(RunError::Config("this experiment needs a constant gamma".into())),
    }
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn run(cfg: &ExperimentConfig) -> Run<Outcome> {
    match &cfg.probes {
        Probes::Forward(p) => forward(cfg, p),
        Probes::Asymptotics(p) => asymptotics(cfg, p),
        Probes::Identity(p) => identity(cfg, p),
        Probes::Cgo(p) => cgo(cfg, p),
        Probes::Moments(p) => moments(p),
        Probes::Recover(p) => recover(cfg, p),
    }
}

fn forward(cfg: &ExperimentConfig, p: &ForwardProbes) -> Run<Outcome> {
    let grid = GridSpec::cube(cfg.grid.dim, cfg.grid.cells)?;
    let doc = cfg.law.clone().unwrap_or_else(c11_document);
    let law = bind(&doc, grid)?;
    let linear = law.quad().is_zero() && law.residual().is_zero();
    let solver = ForwardSolver::new(law.clone())?;
    let opts = nonlinear_options(&p.solver);
    let f = trace(grid, &p.data);
    let lin = solver.dn_linear(&f, &opts.linear)?;
    let second = second_order_reference(law.gamma(), law.quad(), &f)?;
    let mut out = Outcome::default();
    let mut collapse: f64 = 0.0;
    let mut imbalance: f64 = 0.0;
    let mut series = Vec::new();
    for &t in &p.amplitudes {
        let (u, report) = solver.solve(&f.scale(C64::new(t, 0.0)), &opts)?;
        let dn = solver.flux_of(&u);
        let expansion = lin.zip_with(&second, |a, b| t * a + t * t * b)?;
        for (idx, (v, r)) in dn.values().iter().zip(expansion.values()).enumerate() {
            out.rows.push(Row::new("dn", "t", t, "lambda_C", idx, v.re).with_reference(r.re));
        }
        let lin_t = lin.scale(C64::new(t, 0.0));
        collapse = collapse.max(dn.max_abs_diff(&lin_t)?);
        imbalance = imbalance.max(dn.integral().norm());
        for (n, u) in report.updates.iter().enumerate() {
            out.rows.push(Row::new("picard", "t", t, "update_norm", n + 1, *u));
        }
        out.notes.push(format!(
            "t = {t}: {} Picard iterations, last update {}, max |DN - second-order expansion| {}",
            report.picard_iterations,
            sci(report.final_update_norm),
            sci(dn.max_abs_diff(&expansion)?)
        ));
        series.push(Series { label: format!("t = {t}"), points: report.updates.iter().enumerate().map(|(n, u)| ((n + 1) as f64, *u)).collect() });
    }
    if linear {
        out.checks.push(Check::at_most("max |Lambda_C - Lambda_gamma| (linear law)", collapse, p.collapse_tol));
    } else {
        out.notes.push(format!("max |Lambda_C(tf) - t Lambda_gamma(f)| over all t: {}", sci(collapse)));
    }
    out.checks.push(Check::at_most("max |boundary integral of Lambda_C|", imbalance, p.conservation_tol));
    out.plot = Some(Plot { title: "Picard update norms".into(), x_label: "iteration".into(), y_label: "max |update|".into(), series });
    Ok(out)
}

fn asymptotics(cfg: &ExperimentConfig, p: &AsymptoticsProbes) -> Run<Outcome> {
    let grid = GridSpec::cube(cfg.grid.dim, cfg.grid.cells)?;
    let doc = cfg.law.clone().unwrap_or_else(c11_document);
    let law = bind(&doc, grid)?;
    let f = trace(grid, &p.data);
    let res = second_order_from_data_with(&law, &f, &p.t_values, &nonlinear_options(&p.solver))?;
    let mut out = Outcome::default();
    for (&t, &d) in res.t_values.iter().zip(&res.deviations) {
        out.rows.push(Row::new("sweep", "t", t, "deviation", 0, d));
    }
    for (idx, (v, r)) in res.extrapolated.values().iter().zip(res.reference.values()).enumerate() {
        out.rows.push(Row::new("limit", "t", 0.0, "extrapolated", idx, v.re).with_reference(r.re));
    }
    let worst = res.deviations.iter().copied().fold(0.0, f64::max);
    if worst <= p.exact_tol {
        out.checks.push(Check::at_most("max deviation (exact case)", worst, p.exact_tol));
    } else {
        let order = res.fitted_order.unwrap_or(f64::NAN);
        out.checks.push(Check::at_least("fitted decay order, lower bound", order, p.order_min));
        out.checks.push(Check::at_most("fitted decay order, upper bound", order, p.order_max));
    }
    if !res.skipped.is_empty() {
        out.notes.push(format!("skipped t values (no contraction): {:?}", res.skipped));
    }
    out.notes.push(format!("max |extrapolated - reference|: {}", sci(res.extrapolated.max_abs_diff(&res.reference)?)));
    out.plot = Some(Plot {
        title: "fingerprint deviation".into(),
        x_label: "t".into(),
        y_label: "max |D(t) - reference|".into(),
        series: vec![Series { label: "deviation".into(), points: res.t_values.iter().copied().zip(res.deviations.iter().copied()).collect() }],
    });
    Ok(out)
}

fn default_identity_law(grid: GridSpec) -> Run<MaterialLaw> {
    let mut q = QuadCoeffs::zeros(grid.dim());
    q.set(0, 0, 0, 1.0);
    q.set(1, 0, 1, 0.5);
    let gamma = ScalarField::from_real_fn(grid, |p| 1.0 + 0.3 * p[0] * p[1]);
    Ok(MaterialLaw::new(gamma, q, ResidualSpec::Zero)?)
}

fn identity(cfg: &ExperimentConfig, p: &IdentityProbes) -> Run<Outcome> {
    let mut out = Outcome::default();
    let mut hs = Vec::new();
    let mut gaps = Vec::new();
    for &m in &p.m_values {
        let grid = GridSpec::cube(cfg.grid.dim, m)?;
        let law = match &cfg.law {
            Some(doc) => bind(doc, grid)?,
            None => default_identity_law(grid)?,
        };
        let gap = divergence_identity_gap(&law, &trace(grid, &p.f), &trace(grid, &p.g), &p.t_values)?;
        let h = 1.0 / m as f64;
        out.rows.push(Row::new("identity", "M", m as f64, "boundary_side", 0, gap.boundary_side.re).with_reference(gap.volume_side.re));
        out.rows.push(Row::new("identity", "M", m as f64, "gap", 0, gap.gap));
        hs.push(h);
        gaps.push(gap.gap);
    }
    let order = fit_order(&hs, &gaps).unwrap_or(f64::NAN);
    out.checks.push(Check::at_least("fitted order of the gap in h", order, p.order_min));
    out.checks.push(Check::at_most(format!("|gap| at M = {}", p.m_values.last().unwrap()), *gaps.last().unwrap(), p.gap_max));
    if cfg.law.is_none() {
        out.notes.push("law: gamma = 1 + 0.3 x y, c^1_11 = 1, c^2_12 = 0.5".into());
    }
    out.plot = Some(Plot {
        title: "boundary-volume identity gap".into(),
        x_label: "h".into(),
        y_label: "|gap|".into(),
        series: vec![Series { label: "gap".into(), points: hs.into_iter().zip(gaps).collect() }],
    });
    Ok(out)
}

fn cgo(cfg: &ExperimentConfig, p: &CgoProbes) -> Run<Outcome> {
    let grid = GridSpec::cube(3, cfg.grid.cells)?;
    let (gamma, quad) = match &cfg.law {
        Some(doc) => (constant_gamma(doc)?, bind(doc, grid)?.quad().clone()),
        None => (1.0, random_quad(cfg.seed, 1.0)),
    };
    let mut out = Outcome::default();
    let mut series = Vec::new();
    for (n, case) in p.cases.iter().enumerate() {
        let i = case.component - 1;
        let lim = cgo_limit_form(&quad, gamma, case.k, &p.s_values, i, grid)?;
        let zeta = NullVector::new(make_cgo_pair(case.k, 1.0)?.zeta())?;
        let reference = fourier_sample(&quad, gamma, &zeta, case.k, i, grid)?;
        let name = format!("case{}", n + 1);
        for (&s, v) in lim.s_values.iter().zip(&lim.values) {
            out.rows.push(Row::new(&name, "s", s, "form_re", i + 1, v.re).with_reference(reference.re));
            out.rows.push(Row::new(&name, "s", s, "form_im", i + 1, v.im).with_reference(reference.im));
        }
        let last = *lim.values.last().unwrap();
        let scale = reference.norm();
        let rel = if scale > 1e-12 { (last - reference).norm() / scale } else { (last - reference).norm() };
        out.checks.push(Check::at_most(format!("{name}: relative gap to Fourier sample at s = {}", lim.s_values.last().unwrap()), rel, p.rel_tol));
        let order = lim.fitted_order.map_or("undefined".to_string(), |o| format!("{o:.2}"));
        out.notes.push(format!("{name}: k = {:?}, component {}, extrapolated gap {}, fitted order in 1/s {order}", case.k, case.component, sci((lim.extrapolated - reference).norm())));
        series.push(Series { label: name, points: lim.s_values.iter().copied().zip(lim.values.iter().map(|v| (v - reference).norm())).collect() });
    }
    if quad.is_constant() {
        let zs = stage1_zetas();
        let mut samples = [[C64::new(0.0, 0.0); 3]; 3];
        for (m, z) in zs.iter().enumerate() {
            let eta = z.map(|v| v.re);
            let xi = z.map(|v| v.im);
            for (i, row) in samples.iter_mut().enumerate() {
                let lim = cgo_limit_form_with_frame(&quad, gamma, [0.0; 3], xi, eta, &p.s_values, i, grid, GradientMode::Analytic)?;
                row[m] = lim.extrapolated * gamma;
            }
        }
        let s1 = stage1_reduce(&samples, p.stage_tol)?;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            let truth_off = [quad.get(i, 0, 1, 0), quad.get(i, 0, 2, 0), quad.get(i, 1, 2, 0)];
            let truth_diff = [quad.get(i, 0, 0, 0) - quad.get(i, 1, 1, 0), quad.get(i, 0, 0, 0) - quad.get(i, 2, 2, 0)];
            for (n, (&v, &r)) in s1.offdiag[i].iter().zip(&truth_off).enumerate() {
                out.rows.push(Row::new("stage1", "component", (i + 1) as f64, ["c12", "c13", "c23"][n], i + 1, v).with_reference(r));
                worst = worst.max((v - r).abs());
            }
            for (n, (&v, &r)) in s1.diag_diffs[i].iter().zip(&truth_diff).enumerate() {
                out.rows.push(Row::new("stage1", "component", (i + 1) as f64, ["c11-c22", "c11-c33"][n], i + 1, v).with_reference(r));
                worst = worst.max((v - r).abs());
            }
        }
        out.checks.push(Check::at_most("stage-1 reduction from zero-frequency probes, max error", worst, p.stage_tol));
    } else {
        out.notes.push("stage-1 reduction skipped: coefficients vary in space".into());
    }
    out.plot = Some(Plot { title: "probe form vs Fourier sample".into(), x_label: "s".into(), y_label: "|form(s) - sample|".into(), series });
    Ok(out)
}

fn moments(p: &MomentProbes) -> Run<Outcome> {
    let table = MomentTable::compute(&standard_frames());
    let mut out = Outcome::default();
    let (mut rel, mut abs): (f64, f64) = (0.0, 0.0);
    for (n, r) in table.rows.iter().enumerate() {
        let case = format!("frame_{}{}", r.frame.s + 1, r.frame.t + 1);
        out.rows.push(Row::new(case, "alpha", r.frame.alpha, format!("I_{}{}", r.k + 1, r.l + 1), n, r.quadrature).with_reference(r.closed_form));
        if r.closed_form.abs() > 1e-14 {
            rel = rel.max(r.rel_err);
        } else {
            abs = abs.max(r.rel_err);
        }
    }
    out.checks.push(Check::at_most("max relative error, nonzero moments", rel, p.rel_tol));
    out.checks.push(Check::at_most("max absolute error, vanishing moments", abs, p.zero_tol));
    out.extra.push(("moment_table.csv".into(), table.to_csv()));
    Ok(out)
}

fn recover(cfg: &ExperimentConfig, p: &RecoverProbes) -> Run<Outcome> {
    let oracle_grid = GridSpec::cube(3, p.oracle_cells)?;
    let (gamma, quad) = match &cfg.law {
        Some(doc) => {
            let law = bind(doc, oracle_grid)?;
            if !law.quad().is_constant() {
                return Err(RunError::Config("recovery needs constant coefficients".into()));
            }
            (constant_gamma(doc)?, law.quad().clone())
        }
        None => (1.0, random_quad(cfg.seed, p.draw_scale)),
    };
    let frames = standard_frames();
    let rule = ProbeQuadrature { n_radial: p.quadrature.n_radial, n_polar: p.quadrature.n_polar, n_azimuth: p.quadrature.n_azimuth, target: p.quadrature.target };
    let model = match p.model {
        ModelName::LogLinear => EpsModel::LogLinear,
        ModelName::PowerLaw => EpsModel::PowerLaw,
    };
    let sweep = probe_sweep(&quad, &frames, &p.eps_values, &rule, model)?;
    let rec = assemble_and_recover(&sweep.measurements, &frames)?;
    let law = MaterialLaw::new(ScalarField::constant(oracle_grid, C64::new(gamma, 0.0)), quad.clone(), ResidualSpec::Zero)?;
    let oracle = affine_probe_coefficients(&law, 0.05)?;

    let mut out = Outcome::default();
    let mut series = Vec::new();
    for (f, frame) in frames.iter().enumerate() {
        let case = format!("frame_{}{}", frame.s + 1, frame.t + 1);
        for j in 0..3 {
            let limit = sweep.measurements[f * 3 + j].value;
            for (&e, &v) in sweep.eps_values.iter().zip(&sweep.values[f][j]) {
                out.rows.push(Row::new(&case, "eps", e, "probe", j + 1, v).with_reference(limit));
            }
            out.rows.push(Row::new(&case, "eps", 0.0, "limit", j + 1, limit));
        }
        series.push(Series {
            label: format!("{case}, j=1"),
            points: sweep.eps_values.iter().copied().zip(sweep.values[f][0].iter().map(|v| (v - sweep.measurements[f * 3].value).abs())).collect(),
        });
    }
    let (mut worst, mut cross): (f64, f64) = (0.0, 0.0);
    let mut counted = 0;
    for i in 0..3 {
        for (k, l) in pairs(3) {
            let truth = quad.get(i, k, l, 0);
            let got = rec.coeffs.get(i, k, l, 0);
            let dn = oracle.get(i, k, l, 0);
            let idx = i * 6 + pairs(3).iter().position(|&q| q == (k, l)).unwrap();
            let name = format!("c{}_{}{}", i + 1, k + 1, l + 1);
            out.rows.push(Row::new("recovered", "coefficient", idx as f64, &name, idx, got).with_reference(truth));
            out.rows.push(Row::new("dn_oracle", "coefficient", idx as f64, &name, idx, dn).with_reference(truth));
            if truth.abs() > p.component_floor {
                counted += 1;
                worst = worst.max((got - truth).abs() / truth.abs());
                cross = cross.max((got - dn).abs() / dn.abs());
            }
        }
    }
    out.checks.push(Check::at_most(format!("max relative error over {counted} components above {}", p.component_floor), worst, p.rel_tol));
    out.checks.push(Check::at_most("max relative gap to the affine-probe oracle", cross, p.rel_tol));
    out.checks.push(Check::at_most("condition number of the moment system", rec.condition[0], MAX_CONDITION));
    let orders: Vec<String> = sweep
        .observed_orders
        .iter()
        .flatten()
        .map(|o| o.map_or("-".to_string(), |v| format!("{v:.2}")))
        .collect();
    out.notes.push(format!("observed power-law exponents per (frame, j): {}", orders.join(" ")));
    out.notes.push(format!("coefficient source: {}", if cfg.law.is_some() { "config law".to_string() } else { format!("seeded draw, seed {}", cfg.seed) }));
    out.plot = Some(Plot { title: "probe values vs eps".into(), x_label: "eps".into(), y_label: "|value - limit|".into(), series });
    Ok(out)
}
