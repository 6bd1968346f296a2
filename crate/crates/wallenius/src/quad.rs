//! Adaptive quadrature on [0, 1] with a fixed-order Gauss-Legendre rule per
//! panel.
//!
//! Panels are bisected until refining a panel changes its contribution by less
//! than a relative tolerance. Nodes are strictly interior, so integrands may
//! blow up (or be defined by a log-space formula that hits -inf) at the
//! endpoints themselves.

use std::sync::OnceLock;

const GL_ORDER: usize = 16;
const REL_TOL: f64 = 1e-10;
const ABS_FLOOR: f64 = 1e-16;
const MIN_WIDTH: f64 = 1e-13;
/// Hard cap on panel refinements; beyond it panels are accepted as-is.
const MAX_PANELS: usize = 1 << 16;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], computed
/// by Newton iteration on the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

fn panel_estimate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Integrate `f` over [0, 1] by adaptive bisection.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F) -> f64 {
    let mut stack = vec![(0.0f64, 1.0f64, panel_estimate(&f, 0.0, 1.0))];
    let mut total = 0.0;
    let mut splits = 0usize;
    while let Some((a, b, whole)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let left = panel_estimate(&f, a, mid);
        let right = panel_estimate(&f, mid, b);
        let refined = left + right;
        let converged = (refined - whole).abs() <= REL_TOL * refined.abs() + ABS_FLOOR;
        if converged || b - a < MIN_WIDTH || splits >= MAX_PANELS {
            total += refined;
        } else {
            splits += 1;
            stack.push((a, mid, left));
            stack.push((mid, b, right));
        }
    }
    total
}
