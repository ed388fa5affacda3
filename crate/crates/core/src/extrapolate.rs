//! Richardson extrapolation and convergence-order fits.

/// Limit estimate from values at parameters `p1 > p2` assuming the error
/// behaves like `a·p^order`.
pub fn richardson(p1: f64, v1: f64, p2: f64, v2: f64, order: f64) -> f64 {
    let factor = (p1 / p2).powf(order) - 1.0;
    v2 + (v2 - v1) / factor
}

/// Least-squares slope of `log e` against `log p`.
///
/// Returns `None` with fewer than two points or when some error is zero or
/// not finite (the slope is then undefined).
pub fn fit_order(params: &[f64], errors: &[f64]) -> Option<f64> {
    if params.len() != errors.len() || params.len() < 2 {
        return None;
    }
    if errors.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = params.iter().map(|p| p.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Observed orders between consecutive refinements, `log(e_i/e_{i+1}) / log(p_i/p_{i+1})`.
pub fn pairwise_orders(params: &[f64], errors: &[f64]) -> Vec<f64> {
    params
        .windows(2)
        .zip(errors.windows(2))
        .map(|(p, e)| (e[0] / e[1]).ln() / (p[0] / p[1]).ln())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_leading_term() {
        let f = |t: f64| 3.0 + 2.0 * t;
        assert!((richardson(0.1, f(0.1), 0.05, f(0.05), 1.0) - 3.0).abs() < 1e-14);
        let g = |t: f64| -1.0 + 5.0 * t * t;
        assert!((richardson(0.2, g(0.2), 0.1, g(0.1), 2.0) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn order_fit_on_power_law() {
        let ps = [0.1, 0.05, 0.025, 0.0125];
        let es: Vec<f64> = ps.iter().map(|p: &f64| 7.0 * p.powf(1.7)).collect();
        assert!((fit_order(&ps, &es).unwrap() - 1.7).abs() < 1e-12);
        for o in pairwise_orders(&ps, &es) {
            assert!((o - 1.7).abs() < 1e-12);
        }
        assert_eq!(fit_order(&ps, &[1.0, 0.0, 1.0, 1.0]), None);
        assert_eq!(fit_order(&ps[..1], &es[..1]), None);
    }
}
