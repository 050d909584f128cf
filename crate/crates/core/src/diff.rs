//! Nine-point central finite-difference stencils for derivatives of order 0–4.

const D1: [f64; 9] =
    [1.0 / 280.0, -4.0 / 105.0, 1.0 / 5.0, -4.0 / 5.0, 0.0, 4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D2: [f64; 9] =
    [-1.0 / 560.0, 8.0 / 315.0, -1.0 / 5.0, 8.0 / 5.0, -205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
const D3: [f64; 9] =
    [-7.0 / 240.0, 3.0 / 10.0, -169.0 / 120.0, 61.0 / 30.0, 0.0, -61.0 / 30.0, 169.0 / 120.0, -3.0 / 10.0, 7.0 / 240.0];
const D4: [f64; 9] = [
    7.0 / 240.0,
    -2.0 / 5.0,
    169.0 / 60.0,
    -122.0 / 15.0,
    91.0 / 8.0,
    -122.0 / 15.0,
    169.0 / 60.0,
    -2.0 / 5.0,
    7.0 / 240.0,
];

/// Stencil offsets, in units of the step.
pub const OFFSETS: [i32; 9] = [-4, -3, -2, -1, 0, 1, 2, 3, 4];

/// Estimates the `order`-th derivative of `f` at `x` (order 0 returns `f(x)`).
///
/// Panics if `order > 4`.
pub fn central_derivative<F: Fn(f64) -> f64>(f: F, x: f64, order: usize, step: f64) -> f64 {
    let coeffs = match order {
        0 => return f(x),
        1 => &D1,
        2 => &D2,
        3 => &D3,
        4 => &D4,
        _ => panic!("central_derivative supports orders 0..=4, got {order}"),
    };
    let mut acc = 0.0;
    for (k, c) in OFFSETS.iter().zip(coeffs.iter()) {
        if *c != 0.0 {
            acc += c * f(x + *k as f64 * step);
        }
    }
    acc / step.powi(order as i32)
}
