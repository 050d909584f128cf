#![allow(dead_code)]

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Writes a verdict line straight to the process stdout so it survives
/// test-output capture.
pub fn verdict(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    let line = format!("criterion {id:>2} [{}] {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    pass
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Finite-difference weights for derivatives `0..=max_order` at `x0` on
/// arbitrary nodes (Fornberg's recursion), exact in rational arithmetic.
/// `w[m][j]` multiplies `f(nodes[j])` for the `m`-th derivative.
pub fn fornberg(x0: &BigRational, nodes: &[BigRational], max_order: usize) -> Vec<Vec<BigRational>> {
    let n = nodes.len();
    let mut w = vec![vec![BigRational::zero(); n]; max_order + 1];
    w[0][0] = BigRational::one();
    let mut c1 = BigRational::one();
    let mut c4 = &nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = BigRational::one();
        let c5 = c4.clone();
        c4 = &nodes[i] - x0;
        for j in 0..i {
            let c3 = &nodes[i] - &nodes[j];
            c2 = &c2 * &c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    let kk = BigRational::from_integer(BigInt::from(k));
                    w[k][i] = &c1 * (&kk * &w[k - 1][i - 1] - &c5 * &w[k][i - 1]) / &c2;
                }
                w[0][i] = -(&c1 * &c5 * &w[0][i - 1]) / &c2;
            }
            for k in (1..=mn).rev() {
                let kk = BigRational::from_integer(BigInt::from(k));
                w[k][j] = (&c4 * &w[k][j] - &kk * &w[k - 1][j]) / &c3;
            }
            w[0][j] = &c4 * &w[0][j] / &c3;
        }
        c1 = c2;
    }
    w
}

/// `order`-th derivative estimate of `f` at `x0` from the given nodes.
pub fn exact_derivative<F>(f: F, x0: &BigRational, nodes: &[BigRational], order: usize) -> BigRational
where
    F: Fn(BigRational) -> BigRational,
{
    let w = fornberg(x0, nodes, order);
    nodes.iter().zip(&w[order]).fold(BigRational::zero(), |acc, (x, c)| acc + c * f(x.clone()))
}

/// Nodes `x0 + k·step` for `k` in `offsets`.
pub fn nodes(x0: &BigRational, step: &BigRational, offsets: impl IntoIterator<Item = i64>) -> Vec<BigRational> {
    offsets.into_iter().map(|k| x0 + step * BigRational::from_integer(BigInt::from(k))).collect()
}

pub fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
