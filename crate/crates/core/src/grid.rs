//! Uniform node-centred grids on `[0,1]^n` and the unit ball, nodal fields,
//! discrete calculus and quadrature.
//!
//! Cube nodes are numbered lexicographically with the first axis fastest:
//! `idx = i + (M+1) j + (M+1)^2 k`. The unit ball carries no PDE solve; its
//! "nodes" are the points of a graded spherical product rule.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::BallRule;

pub type C64 = Complex64;

/// A point in space. Two-dimensional grids leave the third coordinate at zero.
pub type Point = [f64; 3];

/// A complex vector with up to three components (unused components are zero).
pub type CVec = [C64; 3];

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const CZERO3: CVec = [ZERO; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainKind {
    UnitCube,
    UnitBall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    dim: usize,
    cells: usize,
    kind: DomainKind,
}

/// Builds a grid with `cells` cells per axis (`h = 1/cells`).
pub fn make_grid(dim: usize, cells: usize, kind: DomainKind) -> Result<GridSpec> {
    GridSpec::new(dim, cells, kind)
}

impl GridSpec {
    pub fn new(dim: usize, cells: usize, kind: DomainKind) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidDim(dim));
        }
        if kind == DomainKind::UnitBall && dim != 3 {
            return Err(Error::InvalidDim(dim));
        }
        if cells < 4 {
            return Err(Error::InvalidResolution(cells));
        }
        Ok(Self { dim, cells, kind })
    }

    pub fn cube(dim: usize, cells: usize) -> Result<Self> {
        Self::new(dim, cells, DomainKind::UnitCube)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn points_per_axis(&self) -> usize {
        self.cells + 1
    }

    pub fn is_cube(&self) -> bool {
        self.kind == DomainKind::UnitCube
    }

    pub(crate) fn require_cube(&self) -> Result<()> {
        if self.is_cube() {
            Ok(())
        } else {
            Err(Error::NotCubeGrid)
        }
    }

    pub fn node_count(&self) -> usize {
        match self.kind {
            DomainKind::UnitCube => self.points_per_axis().pow(self.dim as u32),
            DomainKind::UnitBall => self.ball_rule().len(),
        }
    }

    /// Quadrature rule backing a `UnitBall` grid.
    pub fn ball_rule(&self) -> BallRule {
        BallRule::centered(self.cells)
    }

    /// Index stride of axis `d`.
    pub fn stride(&self, d: usize) -> usize {
        self.points_per_axis().pow(d as u32)
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        let n = self.points_per_axis();
        match self.dim {
            2 => ijk[0] + n * ijk[1],
            _ => ijk[0] + n * (ijk[1] + n * ijk[2]),
        }
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.points_per_axis();
        let i = idx % n;
        let j = (idx / n) % n;
        let k = if self.dim == 3 { idx / (n * n) } else { 0 };
        [i, j, k]
    }

    /// Coordinates of cube node `idx`.
    pub fn coords(&self, idx: usize) -> Point {
        let m = self.cells as f64;
        let ijk = self.multi_index(idx);
        let mut p = [0.0; 3];
        for d in 0..self.dim {
            p[d] = ijk[d] as f64 / m;
        }
        p
    }

    fn on_face(&self, ijk: &[usize; 3], d: usize) -> bool {
        ijk[d] == 0 || ijk[d] == self.cells
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let ijk = self.multi_index(idx);
        (0..self.dim).any(|d| self.on_face(&ijk, d))
    }

    pub fn boundary_node_count(&self) -> usize {
        let n = self.points_per_axis();
        let interior = (n - 2).pow(self.dim as u32);
        n.pow(self.dim as u32) - interior
    }

    /// Weight of the cube-node patch orthogonal to axis `normal_axis`:
    /// `h^{n-1}` halved once per tangential axis on which the node is extremal.
    pub(crate) fn transverse_weight(&self, ijk: &[usize; 3], normal_axis: usize) -> f64 {
        let h = self.spacing();
        let mut w = h.powi(self.dim as i32 - 1);
        for d in 0..self.dim {
            if d != normal_axis && self.on_face(ijk, d) {
                w *= 0.5;
            }
        }
        w
    }

    /// One sample per (boundary node, incident face). Corner and edge nodes
    /// carry one sample per face they belong to, each with that face's normal.
    pub fn boundary_samples(&self) -> Vec<BoundarySample> {
        let mut out = Vec::new();
        if !self.is_cube() {
            return out;
        }
        for axis in 0..self.dim {
            for upper in [false, true] {
                let target = if upper { self.cells } else { 0 };
                for idx in 0..self.node_count() {
                    let ijk = self.multi_index(idx);
                    if ijk[axis] != target {
                        continue;
                    }
                    let mut normal = [0.0; 3];
                    normal[axis] = if upper { 1.0 } else { -1.0 };
                    out.push(BoundarySample {
                        node: idx,
                        axis,
                        upper,
                        normal,
                        weight: self.transverse_weight(&ijk, axis),
                    });
                }
            }
        }
        out
    }

    /// Trapezoid weights on the cube; product-rule weights on the ball.
    pub fn volume_weights(&self) -> Vec<f64> {
        match self.kind {
            DomainKind::UnitCube => {
                let h = self.spacing();
                (0..self.node_count())
                    .map(|idx| {
                        let ijk = self.multi_index(idx);
                        (0..self.dim).fold(1.0, |w, d| {
                            w * if self.on_face(&ijk, d) { 0.5 * h } else { h }
                        })
                    })
                    .collect()
            }
            DomainKind::UnitBall => self.ball_rule().weights().to_vec(),
        }
    }

    /// Positions of all nodes (grid points on the cube, quadrature points on the ball).
    pub fn node_positions(&self) -> Vec<Point> {
        match self.kind {
            DomainKind::UnitCube => (0..self.node_count()).map(|i| self.coords(i)).collect(),
            DomainKind::UnitBall => self.ball_rule().points().to_vec(),
        }
    }
}

/// A boundary quadrature sample attached to one face of the cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    pub node: usize,
    pub axis: usize,
    pub upper: bool,
    pub normal: [f64; 3],
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![ZERO; grid.node_count()] }
    }

    pub fn constant(grid: GridSpec, value: C64) -> Self {
        Self { grid, values: vec![value; grid.node_count()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> C64) -> Self {
        let values = grid.node_positions().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(Point) -> f64) -> Self {
        Self::from_fn(grid, |p| C64::new(f(p), 0.0))
    }

    pub fn from_values(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> C64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|v| a * v)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Largest imaginary part in magnitude.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    /// Restriction to the boundary samples of a cube grid.
    pub fn trace(&self) -> BoundaryTrace {
        let mut tr = BoundaryTrace::zeros(self.grid);
        for (v, s) in tr.values.iter_mut().zip(tr.samples.iter()) {
            *v = self.values[s.node];
        }
        tr
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<Vec<C64>>,
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, components: vec![vec![ZERO; grid.node_count()]; grid.dim()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> CVec) -> Self {
        let mut out = Self::zeros(grid);
        for (idx, p) in grid.node_positions().into_iter().enumerate() {
            let v = f(p);
            for d in 0..grid.dim() {
                out.components[d][idx] = v[d];
            }
        }
        out
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn component(&self, d: usize) -> &[C64] {
        &self.components[d]
    }

    pub fn component_mut(&mut self, d: usize) -> &mut [C64] {
        &mut self.components[d]
    }

    /// Vector at node `idx`, zero-padded to three components.
    pub fn at(&self, idx: usize) -> CVec {
        let mut v = CZERO3;
        for (d, c) in self.components.iter().enumerate() {
            v[d] = c[idx];
        }
        v
    }

    pub fn set(&mut self, idx: usize, v: CVec) {
        for (d, c) in self.components.iter_mut().enumerate() {
            c[idx] = v[d];
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Values on the boundary samples of a cube grid (see [`GridSpec::boundary_samples`]).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    grid: GridSpec,
    samples: Arc<[BoundarySample]>,
    values: Vec<C64>,
}

impl BoundaryTrace {
    pub fn zeros(grid: GridSpec) -> Self {
        let samples: Arc<[BoundarySample]> = grid.boundary_samples().into();
        let values = vec![ZERO; samples.len()];
        Self { grid, samples, values }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> C64) -> Self {
        let mut tr = Self::zeros(grid);
        for (v, s) in tr.values.iter_mut().zip(tr.samples.iter()) {
            *v = f(grid.coords(s.node));
        }
        tr
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(Point) -> f64) -> Self {
        Self::from_fn(grid, |p| C64::new(f(p), 0.0))
    }

    /// Builds a trace whose value at each sample depends on the sample itself
    /// (e.g. on its normal).
    pub fn from_sample_fn(grid: GridSpec, f: impl Fn(&BoundarySample, Point) -> C64) -> Self {
        let mut tr = Self::zeros(grid);
        for (v, s) in tr.values.iter_mut().zip(tr.samples.iter()) {
            *v = f(s, grid.coords(s.node));
        }
        tr
    }

    pub(crate) fn with_values(&self, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), self.samples.len());
        Self { grid: self.grid, samples: self.samples.clone(), values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn samples(&self) -> &[BoundarySample] {
        &self.samples
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn normals(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.samples.iter().map(|s| s.normal)
    }

    pub fn face_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.weight)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|v| a * v)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Nodal Dirichlet values. Samples of the same node must agree.
    pub fn node_values(&self) -> Result<Vec<(usize, C64)>> {
        let n = self.grid.node_count();
        let mut seen: Vec<Option<C64>> = vec![None; n];
        for (s, &v) in self.samples.iter().zip(&self.values) {
            match seen[s.node] {
                None => seen[s.node] = Some(v),
                Some(prev) => {
                    if (prev - v).norm() > 1e-12 * (1.0 + prev.norm()) {
                        return Err(Error::InconsistentBoundaryData {
                            node: s.node,
                            first: prev.to_string(),
                            second: v.to_string(),
                        });
                    }
                }
            }
        }
        Ok(seen.into_iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect())
    }

    /// Surface integral `∫ b dσ` by the face trapezoid rule.
    pub fn integral(&self) -> C64 {
        self.samples.iter().zip(&self.values).map(|(s, &v)| v * s.weight).sum()
    }
}

fn one_sided_low(u0: C64, u1: C64, u2: C64, h: f64) -> C64 {
    (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h)
}

fn one_sided_high(u0: C64, u1: C64, u2: C64, h: f64) -> C64 {
    (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * h)
}

/// Nodal gradient: centred differences in the interior, second-order
/// one-sided differences on the boundary.
pub fn gradient(u: &ScalarField) -> VectorField {
    let grid = u.grid();
    assert!(grid.is_cube(), "gradient needs a unit-cube grid");
    let h = grid.spacing();
    let m = grid.cells();
    let vals = u.values();
    let mut out = VectorField::zeros(grid);
    for d in 0..grid.dim() {
        let st = grid.stride(d);
        let comp = out.component_mut(d);
        for (idx, slot) in comp.iter_mut().enumerate() {
            let i = grid.multi_index(idx)[d];
            *slot = if i == 0 {
                one_sided_low(vals[idx], vals[idx + st], vals[idx + 2 * st], h)
            } else if i == m {
                one_sided_high(vals[idx], vals[idx - st], vals[idx - 2 * st], h)
            } else {
                (vals[idx + st] - vals[idx - st]) / (2.0 * h)
            };
        }
    }
    out
}

/// Centred divergence at interior nodes; boundary entries are zero.
///
/// Equivalent to the flux-form divergence of face values obtained by
/// averaging adjacent nodal values.
pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    assert!(grid.is_cube(), "divergence needs a unit-cube grid");
    let h = grid.spacing();
    let mut out = ScalarField::zeros(grid);
    for idx in 0..grid.node_count() {
        if grid.is_boundary(idx) {
            continue;
        }
        let mut acc = ZERO;
        for d in 0..grid.dim() {
            let st = grid.stride(d);
            let c = v.component(d);
            acc += (c[idx + st] - c[idx - st]) / (2.0 * h);
        }
        out.values_mut()[idx] = acc;
    }
    out
}

/// `∫_Ω w dx`: tensor trapezoid rule on the cube, graded product rule on the ball.
pub fn integrate_volume(w: &ScalarField) -> C64 {
    w.grid().volume_weights().iter().zip(w.values()).map(|(&wt, &v)| v * wt).sum()
}

/// `∫_{∂Ω} b g dσ`.
pub fn integrate_boundary(b: &BoundaryTrace, g: &BoundaryTrace) -> Result<C64> {
    if b.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(b.samples().iter().zip(b.values()).zip(g.values()).map(|((s, &x), &y)| x * y * s.weight).sum())
}

/// Discrete `H^1` norm `(∫|v|² + ∫|∇v|²)^{1/2}`.
pub fn h1_norm(v: &ScalarField) -> f64 {
    let w = v.grid().volume_weights();
    let g = gradient(v);
    let mut acc = 0.0;
    for (idx, &wt) in w.iter().enumerate() {
        let mut s = v.get(idx).norm_sqr();
        for d in 0..v.grid().dim() {
            s += g.component(d)[idx].norm_sqr();
        }
        acc += wt * s;
    }
    acc.sqrt()
}

/// Bilinear dot product without conjugation.
pub fn dot(a: &CVec, b: &CVec) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn node_counts() {
        let g = make_grid(2, 8, DomainKind::UnitCube).unwrap();
        assert_eq!(g.node_count(), 81);
        assert_eq!(g.boundary_node_count(), 32);
        assert_eq!((0..81).filter(|&i| g.is_boundary(i)).count(), 32);
        let g3 = make_grid(3, 4, DomainKind::UnitCube).unwrap();
        assert_eq!(g3.node_count(), 125);
    }

    #[test]
    fn invalid_grids() {
        assert_eq!(make_grid(2, 2, DomainKind::UnitCube), Err(Error::InvalidResolution(2)));
        assert_eq!(make_grid(4, 8, DomainKind::UnitCube), Err(Error::InvalidDim(4)));
        assert_eq!(make_grid(1, 8, DomainKind::UnitCube), Err(Error::InvalidDim(1)));
    }

    #[test]
    fn spacing_times_cells_is_one() {
        for m in [4, 7, 16, 33, 128] {
            let g = GridSpec::cube(2, m).unwrap();
            assert_eq!(g.spacing() * m as f64, 1.0);
        }
    }

    #[test]
    fn boundary_weights_partition_surface() {
        for (dim, m) in [(2, 4), (2, 9), (3, 4), (3, 7)] {
            let g = GridSpec::cube(dim, m).unwrap();
            let tr = BoundaryTrace::zeros(g);
            let total: f64 = tr.face_weights().sum();
            assert!((total - 2.0 * dim as f64).abs() < 1e-13, "{dim} {m}: {total}");
            for nrm in tr.normals() {
                let len: f64 = nrm.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert_eq!(len, 1.0);
            }
        }
    }

    #[test]
    fn gradient_of_affine_is_exact() {
        let g = GridSpec::cube(3, 5).unwrap();
        let u = ScalarField::from_real_fn(g, |p| 0.5 + 2.0 * p[0] - 3.0 * p[1] + 0.25 * p[2]);
        let gr = gradient(&u);
        for idx in 0..g.node_count() {
            let v = gr.at(idx);
            assert!((v[0] - 2.0).norm() < 1e-12);
            assert!((v[1] + 3.0).norm() < 1e-12);
            assert!((v[2] - 0.25).norm() < 1e-12);
        }
        let g2 = GridSpec::cube(2, 8).unwrap();
        let x = ScalarField::from_real_fn(g2, |p| p[0]);
        let gx = gradient(&x);
        for idx in 0..g2.node_count() {
            assert!((gx.at(idx)[0] - 1.0).norm() < 1e-13);
            assert!(gx.at(idx)[1].norm() < 1e-13);
        }
    }

    #[test]
    fn gradient_exact_on_quadratics() {
        let g = GridSpec::cube(2, 8).unwrap();
        let u = ScalarField::from_real_fn(g, |p| p[0] * p[0]);
        let gr = gradient(&u);
        for idx in 0..g.node_count() {
            let x = g.coords(idx)[0];
            assert!((gr.at(idx)[0] - c(2.0 * x)).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_second_order() {
        let err = |m: usize| {
            let g = GridSpec::cube(2, m).unwrap();
            let u = ScalarField::from_real_fn(g, |p| (PI * p[0]).sin());
            let gr = gradient(&u);
            (0..g.node_count())
                .map(|i| (gr.at(i)[0] - c(PI * (PI * g.coords(i)[0]).cos())).norm())
                .fold(0.0, f64::max)
        };
        for m in [16, 32] {
            let ratio = err(m) / err(2 * m);
            assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn volume_quadrature() {
        let g = GridSpec::cube(2, 8).unwrap();
        assert!((integrate_volume(&ScalarField::constant(g, c(1.0))) - 1.0).norm() < 1e-14);
        let x = ScalarField::from_real_fn(g, |p| p[0]);
        assert!((integrate_volume(&x) - 0.5).norm() < 1e-14);
        let g64 = GridSpec::cube(2, 64).unwrap();
        let s = ScalarField::from_real_fn(g64, |p| (PI * p[0]).sin() * (PI * p[1]).sin());
        assert!((integrate_volume(&s) - 4.0 / (PI * PI)).norm() < 1e-3);
    }

    #[test]
    fn volume_quadrature_is_second_order() {
        let err = |m: usize| {
            let g = GridSpec::cube(2, m).unwrap();
            let s = ScalarField::from_real_fn(g, |p| (p[0] + 2.0 * p[1]).exp());
            let exact = (std::f64::consts::E - 1.0) * (std::f64::consts::E.powi(2) - 1.0) / 2.0;
            (integrate_volume(&s) - exact).norm()
        };
        let order = (err(16) / err(32)).log2();
        assert!((1.8..=2.2).contains(&order), "order {order}");
    }

    #[test]
    fn boundary_quadrature() {
        let g = GridSpec::cube(2, 8).unwrap();
        let one = BoundaryTrace::from_real_fn(g, |_| 1.0);
        assert!((integrate_boundary(&one, &one).unwrap() - 4.0).norm() < 1e-14);
        let nx = BoundaryTrace::from_sample_fn(g, |s, _| c(s.normal[0]));
        assert!(integrate_boundary(&nx, &one).unwrap().norm() < 1e-14);
        let x = BoundaryTrace::from_real_fn(g, |p| p[0]);
        assert!((integrate_boundary(&nx, &x).unwrap() - 1.0).norm() < 1e-14);
        let other = BoundaryTrace::zeros(GridSpec::cube(2, 16).unwrap());
        assert_eq!(integrate_boundary(&nx, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn corner_nodes_have_one_sample_per_face() {
        let g = GridSpec::cube(2, 4).unwrap();
        let tr = BoundaryTrace::zeros(g);
        assert_eq!(tr.len(), 4 * 5);
        let corner = g.index([0, 0, 0]);
        assert_eq!(tr.samples().iter().filter(|s| s.node == corner).count(), 2);
    }

    #[test]
    fn inconsistent_corner_data_is_rejected() {
        let g = GridSpec::cube(2, 4).unwrap();
        let tr = BoundaryTrace::from_sample_fn(g, |s, _| c(s.normal[0]));
        assert!(matches!(tr.node_values(), Err(Error::InconsistentBoundaryData { .. })));
    }

    #[test]
    fn ball_volume() {
        let g = make_grid(3, 16, DomainKind::UnitBall).unwrap();
        let one = ScalarField::constant(g, c(1.0));
        assert!((integrate_volume(&one) - 4.0 * PI / 3.0).norm() < 1e-10);
        let r2 = ScalarField::from_real_fn(g, |p| p.iter().map(|x| x * x).sum());
        assert!((integrate_volume(&r2) - 4.0 * PI / 5.0).norm() < 1e-10);
    }
}
