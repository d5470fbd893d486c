//! Fixed-node quadrature rules on a finite interval.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Largest order used for a single Gauss–Legendre panel.
pub const MAX_PANEL_ORDER: usize = 64;

/// Composite Gauss–Legendre nodes/weights on [lo, hi] with `n_points` total
/// nodes (rounded up to whole panels of at most [`MAX_PANEL_ORDER`] nodes).
pub fn composite_gauss_legendre(lo: f64, hi: f64, n_points: usize) -> Vec<(f64, f64)> {
    let order = n_points.clamp(1, MAX_PANEL_ORDER);
    let panels = n_points.div_ceil(order).max(1);
    let (x, w) = gauss_legendre(order);
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(order * panels);
    for p in 0..panels {
        let left = lo + p as f64 * width;
        let mid = left + 0.5 * width;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * width * xi, 0.5 * width * wi));
        }
    }
    out
}

/// Composite Simpson nodes/weights on [lo, hi] with an even number of
/// intervals (`n_points` rounded up to odd node count).
pub fn composite_simpson(lo: f64, hi: f64, n_points: usize) -> Vec<(f64, f64)> {
    let mut intervals = n_points.max(3) - 1;
    if intervals % 2 == 1 {
        intervals += 1;
    }
    let h = (hi - lo) / intervals as f64;
    (0..=intervals)
        .map(|i| {
            let c = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (lo + i as f64 * h, c * h / 3.0)
        })
        .collect()
}

/// Panel edges 0, 1, 2, 4, ... up to `hi`, for integrands concentrated near 0
/// with a long tail.
pub fn geometric_edges(hi: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut e = 1.0_f64.min(hi);
    loop {
        edges.push(e);
        if e >= hi {
            return edges;
        }
        e = (2.0 * e).min(hi);
    }
}

/// Applies a composite `rule(lo, hi, n)` on geometrically growing panels,
/// spreading `n_points` evenly across them.
pub fn graded<R>(hi: f64, n_points: usize, rule: R) -> Vec<(f64, f64)>
where
    R: Fn(f64, f64, usize) -> Vec<(f64, f64)>,
{
    let edges = geometric_edges(hi);
    let per_panel = n_points.div_ceil(edges.len() - 1);
    edges
        .windows(2)
        .flat_map(|w| rule(w[0], w[1], per_panel))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // degree 2n-1 monomial integrates exactly
            let deg = 2 * n - 2;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = 2.0 / (deg as f64 + 1.0);
            assert!((approx - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn graded_panels_resolve_peak() {
        assert_eq!(geometric_edges(5.0), vec![0.0, 1.0, 2.0, 4.0, 5.0]);
        // ∫_0^L 1/(1+v²) dv = atan L
        let f = |v: f64| 1.0 / (1.0 + v * v);
        let nodes = graded(2000.0, 256, composite_gauss_legendre);
        let approx: f64 = nodes.iter().map(|(x, w)| w * f(*x)).sum();
        assert!((approx - 2000f64.atan()).abs() < 1e-13);
    }

    #[test]
    fn composite_rules_on_smooth_integrand() {
        let f = |x: f64| (-x * x).exp() * x.cos();
        let gl: f64 = composite_gauss_legendre(0.0, 6.0, 256)
            .iter()
            .map(|(x, w)| w * f(*x))
            .sum();
        let si: f64 = composite_simpson(0.0, 6.0, 4001)
            .iter()
            .map(|(x, w)| w * f(*x))
            .sum();
        // ∫_0^∞ e^{-x²} cos x dx = √π/2 · e^{-1/4}; the tail beyond 6 is < 1e-16.
        let exact = PI.sqrt() / 2.0 * (-0.25f64).exp();
        assert!((gl - exact).abs() < 1e-14);
        assert!((si - exact).abs() < 1e-12);
    }
}
