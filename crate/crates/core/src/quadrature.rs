//! Quadrature helpers: composite Gauss-Legendre and cumulative trapezoid.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Composite rule on `[lo, hi]` split into `panels` equal panels.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64, panels: usize) -> f64 {
        let width = (hi - lo) / panels as f64;
        let half = 0.5 * width;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * width;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(mid + half * x);
            }
            total += acc * half;
        }
        total
    }
}

// P_n(x) and P_n'(x)
fn legendre(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let d = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Running trapezoid integral of `f` sampled at nondecreasing `x`.
/// Repeated abscissae (zero-width intervals) contribute nothing, which lets
/// callers encode a jump by duplicating a node.
pub fn cumulative_trapezoid(x: &[f64], f: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), f.len());
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

/// Trapezoid weights for nondecreasing abscissae.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; x.len()];
    for i in 1..x.len() {
        let half = 0.5 * (x[i] - x[i - 1]);
        w[i - 1] += half;
        w[i] += half;
    }
    w
}

/// Per-interval weights `(∫ ρ^m φ_left, ∫ ρ^m φ_right)` of the two linear
/// hat pieces on `[x_{i-1}, x_i]`, exact for any power `m`.
fn moment_pieces(x: &[f64], m: u32) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(m as usize / 2 + 2);
    x.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            if len <= 0.0 {
                return (0.0, 0.0);
            }
            let left = gl.integrate(|p| p.powi(m as i32) * (b - p) / len, a, b, 1);
            let right = gl.integrate(|p| p.powi(m as i32) * (p - a) / len, a, b, 1);
            (left, right)
        })
        .collect()
}

/// Running `∫ ρ^m f dρ` with `f` linear between nodes and the weight
/// integrated exactly. Repeated abscissae contribute nothing.
pub fn cumulative_moment(x: &[f64], f: &[f64], m: u32) -> Vec<f64> {
    debug_assert_eq!(x.len(), f.len());
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (i, (l, r)) in moment_pieces(x, m).into_iter().enumerate() {
        acc += l * f[i] + r * f[i + 1];
        out.push(acc);
    }
    out
}

/// Node weights of [`cumulative_moment`]'s total.
pub fn moment_weights(x: &[f64], m: u32) -> Vec<f64> {
    let mut w = vec![0.0; x.len()];
    for (i, (l, r)) in moment_pieces(x, m).into_iter().enumerate() {
        w[i] += l;
        w[i + 1] += r;
    }
    w
}
