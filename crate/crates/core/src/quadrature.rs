//! Gauss-Legendre rules and graded spherical product rules on balls.

use std::f64::consts::PI;

use crate::grid::Point;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// A product quadrature rule on a ball, stored as points and weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BallRule {
    points: Vec<Point>,
    weights: Vec<f64>,
}

/// Radial grading exponent: `r = ρ^κ`.
pub const RADIAL_GRADING: i32 = 2;

impl BallRule {
    /// Unit ball centred at the origin with `n` radial and polar nodes and
    /// `2n` azimuthal nodes.
    pub fn centered(n: usize) -> Self {
        let (tr, wr) = gauss_legendre_on(n, 0.0, 1.0);
        let (mu, wmu) = gauss_legendre(n);
        let nphi = 2 * n;
        let mut points = Vec::with_capacity(n * n * nphi);
        let mut weights = Vec::with_capacity(n * n * nphi);
        let kappa = RADIAL_GRADING as f64;
        for (&t, &wt) in tr.iter().zip(&wr) {
            let r = t.powi(RADIAL_GRADING);
            let dr = kappa * t.powi(RADIAL_GRADING - 1) * wt;
            for (&m, &wm) in mu.iter().zip(&wmu) {
                let sin = (1.0 - m * m).sqrt();
                for p in 0..nphi {
                    let phi = 2.0 * PI * p as f64 / nphi as f64;
                    points.push([r * sin * phi.cos(), r * sin * phi.sin(), r * m]);
                    weights.push(r * r * dr * wm * 2.0 * PI / nphi as f64);
                }
            }
        }
        Self { points, weights }
    }

    /// Ball of radius `radius` about `center`, in spherical coordinates about
    /// an exterior `focus`. Every ray from the focus enters and leaves the ball
    /// once; nodes are graded toward the entry point and toward the grazing
    /// cone.
    pub fn focused(center: Point, radius: f64, focus: Point, n_radial: usize, n_polar: usize, n_azimuth: usize) -> Self {
        let axis_raw = sub(center, focus);
        let d = norm(axis_raw);
        assert!(d > radius, "focus must lie outside the ball");
        let axis = scale(axis_raw, 1.0 / d);
        let (e1, e2) = complete(axis);
        let theta_max = (radius / d).asin();
        let (tp, wp) = gauss_legendre_on(n_polar, 0.0, 1.0);
        let (tr, wr) = gauss_legendre_on(n_radial, 0.0, 1.0);
        let kappa = RADIAL_GRADING as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (&tau, &wtau) in tp.iter().zip(&wp) {
            let theta = theta_max * (1.0 - tau * tau);
            let dtheta = 2.0 * theta_max * tau * wtau;
            let (st, ct) = theta.sin_cos();
            let disc = (radius * radius - d * d * st * st).max(0.0).sqrt();
            let r_in = d * ct - disc;
            let r_out = d * ct + disc;
            for (&u, &wu) in tr.iter().zip(&wr) {
                let r = r_in + (r_out - r_in) * u.powi(RADIAL_GRADING);
                let dr = (r_out - r_in) * kappa * u.powi(RADIAL_GRADING - 1) * wu;
                for p in 0..n_azimuth {
                    let phi = 2.0 * PI * p as f64 / n_azimuth as f64;
                    let (sp, cp) = phi.sin_cos();
                    let mut x = focus;
                    for c in 0..3 {
                        x[c] += r * (ct * axis[c] + st * (cp * e1[c] + sp * e2[c]));
                    }
                    points.push(x);
                    weights.push(r * r * dr * st * dtheta * 2.0 * PI / n_azimuth as f64);
                }
            }
        }
        Self { points, weights }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn dot3(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: Point) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn cross(a: Point, b: Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Two unit vectors completing `axis` to an orthonormal basis.
fn complete(axis: Point) -> (Point, Point) {
    let pick = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let a = cross(axis, pick);
    let e1 = scale(a, 1.0 / norm(a));
    let e2 = cross(axis, e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        for n in [1, 2, 5, 12, 40] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let (x, w) = gauss_legendre(7);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(x[3].abs() < 1e-15);
        for i in 0..7 {
            assert!((x[i] + x[6 - i]).abs() < 1e-15);
            assert_eq!(w[i], w[6 - i]);
        }
    }

    #[test]
    fn centered_ball_moments() {
        let rule = BallRule::centered(8);
        assert!((rule.integrate(|_| 1.0) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((rule.integrate(|p| p[2] * p[2]) - 4.0 * PI / 15.0).abs() < 1e-12);
        assert!(rule.integrate(|p| p[0] * p[1]).abs() < 1e-13);
    }

    #[test]
    fn focused_ball_volume_and_centroid() {
        let center = [0.2, -0.1, 0.3];
        let rule = BallRule::focused(center, 1.0, [0.2, -0.1, 1.35], 24, 48, 8);
        let vol = rule.integrate(|_| 1.0);
        assert!((vol - 4.0 * PI / 3.0).abs() < 1e-8, "{vol}");
        let cz = rule.integrate(|p| p[2]) / vol;
        assert!((cz - 0.3).abs() < 1e-8, "{cz}");
    }

    #[test]
    fn focused_ball_with_tilted_axis() {
        let dir = scale([1.0, 2.0, -2.0], 1.0 / 3.0);
        let rule = BallRule::focused([0.0; 3], 1.0, scale(dir, 1.1), 24, 48, 8);
        let i2 = rule.integrate(|p| dot3(p, p));
        assert!((i2 - 4.0 * PI / 5.0).abs() < 1e-8, "{i2}");
    }
}
