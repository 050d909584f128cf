//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 32-point Gauss–Legendre rule and compared
//! against the sum over its two halves. Panels whose estimates disagree by
//! more than their share of the tolerance are halved again.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 32;
const MAX_DEPTH: u32 = 48;

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        let n = ORDER as f64;
        for i in 0..ORDER / 2 {
            // Newton iteration on P_n starting from the Tricomi approximation.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(ORDER, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(ORDER, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[ORDER - 1 - i] = x;
            weights[i] = w;
            weights[ORDER - 1 - i] = w;
        }
        Rule { nodes, weights }
    })
}

/// Value and derivative of the Legendre polynomial of degree `n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Single-panel 32-point Gauss–Legendre estimate of `∫_a^b f`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in r.nodes.iter().zip(r.weights.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Fixed composite rule: `panels` equal 32-point panels on each interval
/// between consecutive `breaks`. Suited to integrands that are smooth but
/// carry evaluation noise, where adaptive halving cannot converge.
pub fn composite_gauss_legendre<F: Fn(f64) -> f64>(f: F, breaks: &[f64], panels: usize) -> f64 {
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let step = (w[1] - w[0]) / panels as f64;
        for i in 0..panels {
            let a = w[0] + step * i as f64;
            acc += gauss_legendre(&f, a, a + step);
        }
    }
    acc
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the panels
/// delimited by `breaks`. Put known kinks or support edges in `breaks`.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> Result<f64> {
    if breaks.len() < 2 {
        return Err(Error::InvalidParameter("quadrature needs at least two break points".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("quadrature tolerance {tol} must be positive")));
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    let lo = pts[0];
    let hi = *pts.last().unwrap();
    let total = hi - lo;
    if total <= 0.0 {
        return Ok(0.0);
    }

    let mut sum = 0.0;
    let mut stack: Vec<(f64, f64, f64, u32)> = Vec::new();
    for w in pts.windows(2).rev() {
        stack.push((w[0], w[1], gauss_legendre(&f, w[0], w[1]), 0));
    }
    while let Some((a, b, whole, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let left = gauss_legendre(&f, a, m);
        let right = gauss_legendre(&f, m, b);
        let halves = left + right;
        let change = (halves - whole).abs();
        let local_tol = (tol * (b - a) / total).max(64.0 * f64::EPSILON * halves.abs());
        // A jump inside a panel at the resolution limit contributes at most
        // jump * width, far below any meaningful tolerance.
        let unresolvable = (b - a) <= 1024.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0);
        if change <= local_tol || (unresolvable && change <= tol) {
            sum += halves;
        } else if depth >= MAX_DEPTH || m <= a || m >= b {
            return Err(Error::QuadratureNonConvergence { a, b, change });
        } else {
            stack.push((m, b, right, depth + 1));
            stack.push((a, m, left, depth + 1));
        }
    }
    Ok(sum)
}
