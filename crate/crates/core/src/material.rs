//! The constitutive law `C(x,q) = γ(x) q + P(x,q) + R(x,q)`.
//!
//! `P` is quadratic, `P_i = Σ_{k≤l} c^i_{kl} q_k q_l`, and `R` is a cubic
//! residual. Complex arguments use the bilinear extension `q_k q_l`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CVec, GridSpec, ScalarField, VectorField, C64, CZERO3, ZERO};

/// Number of unordered index pairs `k ≤ l` in dimension `dim`.
pub fn pair_count(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Unordered pairs `(k, l)`, `k ≤ l`, in lexicographic order.
pub fn pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(pair_count(dim));
    for k in 0..dim {
        for l in k..dim {
            out.push((k, l));
        }
    }
    out
}

fn pair_index(dim: usize, k: usize, l: usize) -> usize {
    let (k, l) = if k <= l { (k, l) } else { (l, k) };
    k * dim - k * k.saturating_sub(1) / 2 + (l - k)
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoeffValue {
    Constant(f64),
    /// One value per grid node.
    Nodal(Vec<f64>),
}

impl CoeffValue {
    fn at(&self, node: usize) -> f64 {
        match self {
            CoeffValue::Constant(c) => *c,
            CoeffValue::Nodal(v) => v[node],
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            CoeffValue::Constant(c) => *c == 0.0,
            CoeffValue::Nodal(v) => v.iter().all(|&c| c == 0.0),
        }
    }
}

/// Quadratic coefficients `c^i_{kl}` stored once per unordered pair.
///
/// Axis indices are zero-based. Spatially varying entries hold one value per
/// node of the grid they were built for; evaluation takes a node index, which
/// constant entries ignore.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadCoeffs {
    dim: usize,
    entries: Vec<CoeffValue>,
}

impl QuadCoeffs {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![CoeffValue::Constant(0.0); dim * pair_count(dim)] }
    }

    /// Builds constant coefficients from `c[i][k][l]`; only `k ≤ l` is read.
    pub fn from_constants(dim: usize, c: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut q = Self::zeros(dim);
        for i in 0..dim {
            for (k, l) in pairs(dim) {
                q.set(i, k, l, c(i, k, l));
            }
        }
        q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot(&self, i: usize, k: usize, l: usize) -> usize {
        assert!(i < self.dim && k < self.dim && l < self.dim, "coefficient index out of range");
        i * pair_count(self.dim) + pair_index(self.dim, k, l)
    }

    pub fn set(&mut self, i: usize, k: usize, l: usize, value: f64) {
        let s = self.slot(i, k, l);
        self.entries[s] = CoeffValue::Constant(value);
    }

    pub fn set_nodal(&mut self, i: usize, k: usize, l: usize, values: Vec<f64>) {
        let s = self.slot(i, k, l);
        self.entries[s] = CoeffValue::Nodal(values);
    }

    pub fn entry(&self, i: usize, k: usize, l: usize) -> &CoeffValue {
        &self.entries[self.slot(i, k, l)]
    }

    /// `c^i_{kl}` at node `node` (`k > l` reads the `(l, k)` slot).
    pub fn get(&self, i: usize, k: usize, l: usize, node: usize) -> f64 {
        self.entries[self.slot(i, k, l)].at(node)
    }

    /// Value of a constant entry; `None` for spatially varying entries.
    pub fn constant(&self, i: usize, k: usize, l: usize) -> Option<f64> {
        match self.entry(i, k, l) {
            CoeffValue::Constant(c) => Some(*c),
            CoeffValue::Nodal(_) => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|e| matches!(e, CoeffValue::Constant(_)))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(CoeffValue::is_zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidParam("coefficient sets differ in dimension".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| match (a, b) {
                (CoeffValue::Constant(x), CoeffValue::Constant(y)) => CoeffValue::Constant(x + y),
                (CoeffValue::Nodal(x), CoeffValue::Constant(y)) | (CoeffValue::Constant(y), CoeffValue::Nodal(x)) => {
                    CoeffValue::Nodal(x.iter().map(|v| v + y).collect())
                }
                (CoeffValue::Nodal(x), CoeffValue::Nodal(y)) => {
                    CoeffValue::Nodal(x.iter().zip(y).map(|(a, b)| a + b).collect())
                }
            })
            .collect();
        Ok(Self { dim: self.dim, entries })
    }

    /// `P_i(x, q) = Σ_{k≤l} c^i_{kl}(x) q_k q_l`.
    pub fn eval_p(&self, node: usize, q: &CVec) -> CVec {
        let mut out = CZERO3;
        let np = pair_count(self.dim);
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let mut acc = ZERO;
            for (p, (k, l)) in pairs(self.dim).into_iter().enumerate() {
                let c = self.entries[i * np + p].at(node);
                if c != 0.0 {
                    acc += c * q[k] * q[l];
                }
            }
            *o = acc;
        }
        out
    }

    /// Polarization `Σ_{k≤l} c^i_{kl}(x) (a_k b_l + a_l b_k)`.
    pub fn polarized_p(&self, node: usize, a: &CVec, b: &CVec) -> CVec {
        let mut out = CZERO3;
        let np = pair_count(self.dim);
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let mut acc = ZERO;
            for (p, (k, l)) in pairs(self.dim).into_iter().enumerate() {
                let c = self.entries[i * np + p].at(node);
                if c != 0.0 {
                    acc += c * (a[k] * b[l] + a[l] * b[k]);
                }
            }
            *o = acc;
        }
        out
    }

    /// `P(x, ∇u)` at every node of a gradient field.
    pub fn p_field(&self, grad: &VectorField) -> VectorField {
        let mut out = VectorField::zeros(grad.grid());
        if self.is_zero() {
            return out;
        }
        for idx in 0..grad.grid().node_count() {
            out.set(idx, self.eval_p(idx, &grad.at(idx)));
        }
        out
    }
}

/// C² smoothstep: 1 on `[0, ½]`, 0 on `[1, ∞)`.
pub fn smoothstep_cutoff(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let s = 2.0 * r - 1.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ResidualSpec {
    #[default]
    Zero,
    /// `R(q) = (C₂ χ + 1 − χ) |q|² q` with `χ = smoothstep(|q| / h_cut)`.
    CubicCutoff { c2: f64, h_cut: f64 },
}

/// Residual equal to `C₂|q|²q` for `|q| ≤ h_cut/2` and `|q|²q` beyond `h_cut`.
pub fn make_cutoff_residual(c2: f64, h_cut: f64) -> Result<ResidualSpec> {
    if !(c2 >= 0.0) || !c2.is_finite() {
        return Err(Error::InvalidParam(format!("C2 must be a finite non-negative number, got {c2}")));
    }
    if !(h_cut > 0.0) || !h_cut.is_finite() {
        return Err(Error::InvalidParam(format!("h_cut must be positive, got {h_cut}")));
    }
    Ok(ResidualSpec::CubicCutoff { c2, h_cut })
}

impl ResidualSpec {
    pub fn eval(&self, q: &CVec) -> CVec {
        match *self {
            ResidualSpec::Zero => CZERO3,
            ResidualSpec::CubicCutoff { c2, h_cut } => {
                let n2: f64 = q.iter().map(|v| v.norm_sqr()).sum();
                if n2 == 0.0 {
                    return CZERO3;
                }
                let chi = smoothstep_cutoff(n2.sqrt() / h_cut);
                let a = (c2 * chi + 1.0 - chi) * n2;
                [q[0] * a, q[1] * a, q[2] * a]
            }
        }
    }

    /// A constant `K` with `|R(q)| ≤ K |q|³` for all `q`.
    pub fn growth_constant(&self) -> f64 {
        match *self {
            ResidualSpec::Zero => 0.0,
            ResidualSpec::CubicCutoff { c2, .. } => c2.max(1.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ResidualSpec::Zero)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialLaw {
    gamma: ScalarField,
    quad: QuadCoeffs,
    residual: ResidualSpec,
}

impl MaterialLaw {
    /// Validates `γ` (real and bounded below by a positive constant).
    pub fn new(gamma: ScalarField, quad: QuadCoeffs, residual: ResidualSpec) -> Result<Self> {
        check_gamma(&gamma)?;
        if quad.dim() != gamma.grid().dim() {
            return Err(Error::InvalidParam(format!(
                "quadratic coefficients are {}-dimensional but the grid is {}-dimensional",
                quad.dim(),
                gamma.grid().dim()
            )));
        }
        for e in &quad.entries {
            if let CoeffValue::Nodal(v) = e {
                if v.len() != gamma.grid().node_count() {
                    return Err(Error::GridMismatch);
                }
            }
        }
        Ok(Self { gamma, quad, residual })
    }

    /// Linear law `C = γ q`.
    pub fn linear(gamma: ScalarField) -> Result<Self> {
        let dim = gamma.grid().dim();
        Self::new(gamma, QuadCoeffs::zeros(dim), ResidualSpec::Zero)
    }

    pub fn grid(&self) -> GridSpec {
        self.gamma.grid()
    }

    pub fn gamma(&self) -> &ScalarField {
        &self.gamma
    }

    pub fn quad(&self) -> &QuadCoeffs {
        &self.quad
    }

    pub fn residual(&self) -> ResidualSpec {
        self.residual
    }

    /// Whether the nonlinear part `Q = P + R` vanishes identically.
    pub fn is_linear(&self) -> bool {
        self.quad.is_zero() && self.residual.is_zero()
    }

    /// `Q(x, q) = P(x, q) + R(x, q)`.
    pub fn eval_q(&self, node: usize, q: &CVec) -> CVec {
        let p = self.quad.eval_p(node, q);
        let r = self.residual.eval(q);
        [p[0] + r[0], p[1] + r[1], p[2] + r[2]]
    }

    /// `C(x, q) = γ(x) q + Q(x, q)`.
    pub fn eval_c(&self, node: usize, q: &CVec) -> CVec {
        let g = self.gamma.get(node).re;
        let nq = self.eval_q(node, q);
        [g * q[0] + nq[0], g * q[1] + nq[1], g * q[2] + nq[2]]
    }

    /// `Q(x, ∇u)` at every node.
    pub fn q_field(&self, grad: &VectorField) -> VectorField {
        let mut out = VectorField::zeros(grad.grid());
        if self.is_linear() {
            return out;
        }
        for idx in 0..grad.grid().node_count() {
            out.set(idx, self.eval_q(idx, &grad.at(idx)));
        }
        out
    }
}

pub(crate) fn check_gamma(gamma: &ScalarField) -> Result<()> {
    let min = gamma.values().iter().fold(f64::INFINITY, |m, v| m.min(v.re));
    let max_imag = gamma.max_imag();
    if !(min > 0.0) || !min.is_finite() || max_imag != 0.0 {
        return Err(Error::NotPositive { min, max_imag });
    }
    Ok(())
}

/// `γ` in a law document: a constant, nodal values, or an affine function
/// `c₀ + g·x` given as `[c₀, g₁, …, g_n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaDoc {
    Constant(f64),
    Values {
        values: Vec<f64>,
    },
    Affine {
        affine: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadEntryDoc {
    /// One-based component index.
    pub i: usize,
    pub k: usize,
    pub l: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResidualDoc {
    #[default]
    Zero,
    CubicCutoff {
        #[serde(rename = "C2")]
        c2: f64,
        h_cut: f64,
    },
}

/// Serializable description of a material law, bound to a grid on use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawDocument {
    pub gamma: GammaDoc,
    #[serde(default)]
    pub quad: Vec<QuadEntryDoc>,
    #[serde(default)]
    pub residual: ResidualDoc,
}

impl LawDocument {
    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("law documents always serialize")
    }

    /// Describes a law with constant coefficients.
    pub fn from_constant_law(gamma: f64, quad: &QuadCoeffs, residual: ResidualSpec) -> Self {
        let mut entries = Vec::new();
        for i in 0..quad.dim() {
            for (k, l) in pairs(quad.dim()) {
                if let Some(c) = quad.constant(i, k, l) {
                    if c != 0.0 {
                        entries.push(QuadEntryDoc { i: i + 1, k: k + 1, l: l + 1, value: Some(c), field: None });
                    }
                }
            }
        }
        let residual = match residual {
            ResidualSpec::Zero => ResidualDoc::Zero,
            ResidualSpec::CubicCutoff { c2, h_cut } => ResidualDoc::CubicCutoff { c2, h_cut },
        };
        Self { gamma: GammaDoc::Constant(gamma), quad: entries, residual }
    }

    pub fn bind(&self, grid: GridSpec) -> Result<MaterialLaw> {
        let dim = grid.dim();
        let n = grid.node_count();
        let gamma = match &self.gamma {
            GammaDoc::Constant(g) => ScalarField::constant(grid, C64::new(*g, 0.0)),
            GammaDoc::Values { values } => {
                if values.len() != n {
                    return Err(Error::InvalidParam(format!(
                        "gamma has {} values but the grid has {n} nodes",
                        values.len()
                    )));
                }
                ScalarField::from_values(grid, values.iter().map(|&v| C64::new(v, 0.0)).collect())?
            }
            GammaDoc::Affine { affine } => {
                if affine.len() != dim + 1 {
                    return Err(Error::InvalidParam(format!(
                        "affine gamma needs {} numbers, got {}",
                        dim + 1,
                        affine.len()
                    )));
                }
                let a = affine.clone();
                ScalarField::from_real_fn(grid, move |p| a[0] + (0..dim).map(|d| a[d + 1] * p[d]).sum::<f64>())
            }
        };
        let mut quad = QuadCoeffs::zeros(dim);
        for e in &self.quad {
            for idx in [e.i, e.k, e.l] {
                if idx == 0 || idx > dim {
                    return Err(Error::InvalidParam(format!(
                        "coefficient index {idx} outside 1..={dim}"
                    )));
                }
            }
            match (e.value, &e.field) {
                (Some(v), None) => quad.set(e.i - 1, e.k - 1, e.l - 1, v),
                (None, Some(f)) => {
                    if f.len() != n {
                        return Err(Error::InvalidParam(format!(
                            "coefficient field has {} values but the grid has {n} nodes",
                            f.len()
                        )));
                    }
                    quad.set_nodal(e.i - 1, e.k - 1, e.l - 1, f.clone())
                }
                _ => {
                    return Err(Error::InvalidParam(
                        "each coefficient needs exactly one of `value` or `field`".into(),
                    ))
                }
            }
        }
        let residual = match self.residual {
            ResidualDoc::Zero => ResidualSpec::Zero,
            ResidualDoc::CubicCutoff { c2, h_cut } => make_cutoff_residual(c2, h_cut)?,
        };
        MaterialLaw::new(gamma, quad, residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn cv(a: f64, b: f64, z: f64) -> CVec {
        [c(a), c(b), c(z)]
    }

    #[test]
    fn pair_slots_are_distinct() {
        for dim in [2, 3] {
            let mut seen: Vec<usize> = pairs(dim).iter().map(|&(k, l)| pair_index(dim, k, l)).collect();
            seen.sort();
            assert_eq!(seen, (0..pair_count(dim)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn eval_p_examples() {
        let mut q = QuadCoeffs::zeros(2);
        q.set(0, 0, 0, 1.0);
        assert_eq!(q.eval_p(0, &cv(3.0, 0.0, 0.0)), cv(9.0, 0.0, 0.0));
        assert_eq!(q.eval_p(0, &CZERO3), CZERO3);
        let mut q = QuadCoeffs::zeros(2);
        q.set(0, 0, 1, 2.0);
        assert_eq!(q.eval_p(0, &cv(1.0, 5.0, 0.0)), cv(10.0, 0.0, 0.0));
    }

    #[test]
    fn reverse_index_reads_same_slot() {
        let mut q = QuadCoeffs::zeros(3);
        q.set(1, 2, 0, 4.5);
        assert_eq!(q.get(1, 0, 2, 0), 4.5);
        assert_eq!(q.get(1, 2, 0, 0), 4.5);
    }

    #[test]
    fn polarized_examples() {
        let mut q = QuadCoeffs::zeros(2);
        q.set(0, 0, 1, 1.0);
        let e1 = cv(1.0, 0.0, 0.0);
        let e2 = cv(0.0, 1.0, 0.0);
        assert_eq!(q.polarized_p(0, &e1, &e2), cv(1.0, 0.0, 0.0));
    }

    fn law(gamma: f64, quad: QuadCoeffs, r: ResidualSpec) -> MaterialLaw {
        let g = GridSpec::cube(quad.dim(), 4).unwrap();
        MaterialLaw::new(ScalarField::constant(g, c(gamma)), quad, r).unwrap()
    }

    #[test]
    fn eval_c_examples() {
        let l = law(2.0, QuadCoeffs::zeros(2), ResidualSpec::Zero);
        assert_eq!(l.eval_c(3, &cv(1.0, 1.0, 0.0)), cv(2.0, 2.0, 0.0));
        assert_eq!(l.eval_c(3, &CZERO3), CZERO3);
        let mut q = QuadCoeffs::zeros(2);
        q.set(0, 0, 0, 1.0);
        let l = law(1.0, q, ResidualSpec::Zero);
        let t = 0.3;
        let v = l.eval_c(0, &cv(t, 0.0, 0.0));
        assert!((v[0] - c(t + t * t)).norm() < 1e-15 && v[1] == ZERO);
    }

    #[test]
    fn cutoff_residual_plateau() {
        let r = make_cutoff_residual(2.5, 0.8).unwrap();
        let q = [C64::new(0.1, 0.05), C64::new(-0.1, 0.0), C64::new(0.0, 0.1)];
        let n2: f64 = q.iter().map(|v| v.norm_sqr()).sum();
        let n = n2.sqrt();
        let scale = 0.2 / n;
        let q = [q[0] * scale, q[1] * scale, q[2] * scale];
        let v = r.eval(&q);
        for d in 0..3 {
            assert!((v[d] - 2.5 * 0.04 * q[d]).norm() < 1e-16);
        }
        assert_eq!(r.eval(&CZERO3), CZERO3);
        let far = cv(3.0, 0.0, 0.0);
        assert_eq!(r.eval(&far), cv(27.0, 0.0, 0.0));
    }

    #[test]
    fn cutoff_residual_rejects_bad_params() {
        assert!(make_cutoff_residual(-1.0, 1.0).is_err());
        assert!(make_cutoff_residual(1.0, 0.0).is_err());
        assert!(make_cutoff_residual(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn smoothstep_is_c2_at_joins() {
        let h = 1e-4;
        for r0 in [0.5, 1.0] {
            let d1 = |r: f64| (smoothstep_cutoff(r + h) - smoothstep_cutoff(r - h)) / (2.0 * h);
            assert!(d1(r0).abs() < 1e-6);
            let d2 = (smoothstep_cutoff(r0 + h) - 2.0 * smoothstep_cutoff(r0) + smoothstep_cutoff(r0 - h)) / (h * h);
            assert!(d2.abs() < 1e-2, "{d2}");
        }
        assert!((smoothstep_cutoff(0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn residual_growth_bound_sampled() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let c2 = 1.7;
        let r = make_cutoff_residual(c2, 0.5).unwrap();
        for _ in 0..10_000 {
            let scale: f64 = 10f64.powf(rng.gen_range(-3.0..1.0));
            let q: CVec = std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale);
            let nq: f64 = q.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let rv: f64 = r.eval(&q).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(rv <= (c2 + 1.0) * nq.powi(3) * (1.0 + 1e-12));
            assert!(rv <= r.growth_constant() * nq.powi(3) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn jacobian_at_zero_is_gamma() {
        let mut q = QuadCoeffs::zeros(3);
        q.set(0, 0, 1, 3.0);
        q.set(2, 2, 2, -1.0);
        let l = law(1.7, q, make_cutoff_residual(1.0, 1.0).unwrap());
        let h = 1e-6;
        for a in 0..3 {
            let mut e = CZERO3;
            e[a] = c(h);
            let mut m = CZERO3;
            m[a] = c(-h);
            let (p, n) = (l.eval_c(0, &e), l.eval_c(0, &m));
            for b in 0..3 {
                let jac = (p[b] - n[b]) / (2.0 * h);
                let want = if a == b { 1.7 } else { 0.0 };
                assert!((jac - c(want)).norm() < 1e-9, "{a}{b}: {jac}");
            }
        }
    }

    #[test]
    fn gamma_must_be_positive_and_real() {
        let g = GridSpec::cube(2, 4).unwrap();
        let bad = ScalarField::from_real_fn(g, |p| p[0] - 0.5);
        assert!(matches!(MaterialLaw::linear(bad), Err(Error::NotPositive { .. })));
        let cplx = ScalarField::constant(g, C64::new(1.0, 0.1));
        assert!(matches!(MaterialLaw::linear(cplx), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn law_document_round_trip() {
        let json = r#"{
            "gamma": {"affine": [1.0, 0.5, 0.0]},
            "quad": [{"i": 1, "k": 1, "l": 1, "value": 1.0}, {"i": 2, "k": 2, "l": 1, "value": -0.5}],
            "residual": {"kind": "cubic_cutoff", "C2": 1.0, "h_cut": 2.0}
        }"#;
        let doc = LawDocument::from_json(json).unwrap();
        let again = LawDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(doc, again);
        let g = GridSpec::cube(2, 4).unwrap();
        let law = doc.bind(g).unwrap();
        assert_eq!(law.quad().get(1, 0, 1, 0), -0.5);
        assert_eq!(law.gamma().get(g.index([4, 0, 0])).re, 1.5);
        assert_eq!(law.residual(), ResidualSpec::CubicCutoff { c2: 1.0, h_cut: 2.0 });
    }

    #[test]
    fn law_document_rejects_unknown_fields() {
        assert!(LawDocument::from_json(r#"{"gamma": 1.0, "extra": 2}"#).is_err());
        assert!(LawDocument::from_json(r#"{"gamma": 1.0, "quad": [{"i":1,"k":1,"l":1,"value":1,"x":0}]}"#).is_err());
        let doc = LawDocument::from_json(r#"{"gamma": 1.0, "quad": [{"i":3,"k":1,"l":1,"value":1}]}"#).unwrap();
        assert!(doc.bind(GridSpec::cube(2, 4).unwrap()).is_err());
        let doc = LawDocument::from_json(r#"{"gamma": -1.0}"#).unwrap();
        assert!(matches!(doc.bind(GridSpec::cube(2, 4).unwrap()), Err(Error::NotPositive { .. })));
    }

    fn cvec3() -> impl Strategy<Value = CVec> {
        proptest::array::uniform3((-3.0..3.0f64, -3.0..3.0f64)).prop_map(|a| a.map(|(r, i)| C64::new(r, i)))
    }

    fn quad3() -> impl Strategy<Value = QuadCoeffs> {
        proptest::collection::vec(-2.0..2.0f64, 18).prop_map(|v| {
            QuadCoeffs::from_constants(3, |i, k, l| v[i * 6 + pair_index(3, k, l)])
        })
    }

    proptest! {
        #[test]
        fn homogeneity(quad in quad3(), q in cvec3(), ar in -2.0..2.0f64, ai in -2.0..2.0f64) {
            let a = C64::new(ar, ai);
            let lhs = quad.eval_p(0, &q.map(|v| a * v));
            let rhs = quad.eval_p(0, &q);
            for d in 0..3 {
                prop_assert!((lhs[d] - a * a * rhs[d]).norm() <= 1e-11 * (1.0 + rhs[d].norm() * a.norm_sqr()));
            }
        }

        #[test]
        fn polarization_identity(quad in quad3(), q in cvec3(), r in cvec3()) {
            let pp = quad.polarized_p(0, &q, &q);
            let p = quad.eval_p(0, &q);
            let sw1 = quad.polarized_p(0, &q, &r);
            let sw2 = quad.polarized_p(0, &r, &q);
            for d in 0..3 {
                prop_assert!((pp[d] - 2.0 * p[d]).norm() <= 1e-12 * (1.0 + p[d].norm()));
                prop_assert!((sw1[d] - sw2[d]).norm() <= 1e-12 * (1.0 + sw1[d].norm()));
            }
        }

        #[test]
        fn canonical_storage(i in 0..3usize, k in 0..3usize, l in 0..3usize, v in -5.0..5.0f64) {
            let mut q = QuadCoeffs::zeros(3);
            q.set(i, l, k, v);
            prop_assert_eq!(q.get(i, k, l, 0), v);
        }

        #[test]
        fn linear_in_coefficients(a in quad3(), b in quad3(), q in cvec3()) {
            let s = a.add(&b).unwrap();
            let (pa, pb, ps) = (a.eval_p(0, &q), b.eval_p(0, &q), s.eval_p(0, &q));
            for d in 0..3 {
                prop_assert!((ps[d] - pa[d] - pb[d]).norm() <= 1e-11 * (1.0 + ps[d].norm()));
            }
        }
    }
}
