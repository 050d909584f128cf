//! Leave-one-out cross-validated bandwidth for the Nadaraya–Watson baseline.

use crate::error::{Error, Result};
use crate::estimators::{Sample, DENOM_FLOOR};
use crate::kernels::Kernel;

/// `size` log-spaced bandwidths from `0.05·s·n^{-1/5}` to `2·s·n^{-1/5}`, where
/// `s = min(sd, IQR/1.349)` of the design points.
pub fn cv_grid(sample: &Sample, size: usize) -> Vec<f64> {
    let n = sample.len() as f64;
    let base = robust_scale(sample.x()) * n.powf(-0.2);
    let (lo, hi) = (0.05f64.ln(), 2f64.ln());
    match size {
        0 => vec![],
        1 => vec![base * (0.5 * (lo + hi)).exp()],
        _ => (0..size).map(|i| base * (lo + (hi - lo) * i as f64 / (size - 1) as f64).exp()).collect(),
    }
}

/// `min(sd, IQR/1.349)`, falling back to whichever is positive, then to 1.
pub fn robust_scale(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd =
        if x.len() > 1 { (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = (quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)) / 1.349;
    match (sd > 0.0 && sd.is_finite(), iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 1.0,
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let pos = p * (s.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < s.len() {
        s[i] + frac * (s[i + 1] - s[i])
    } else {
        s[i]
    }
}

/// Leave-one-out squared prediction error of Nadaraya–Watson at bandwidth
/// `h`, together with the number of observations whose leave-one-out window
/// is empty. Those are predicted by the mean of the other responses.
pub fn loo_score(sample: &Sample, kernel: Kernel, h: f64) -> (f64, usize) {
    let n = sample.len();
    let total_y: f64 = sample.y().iter().sum();
    let k0 = kernel.eval(0.0);
    let reach = kernel.support() * h;
    let floor = DENOM_FLOOR * (n.saturating_sub(1)) as f64 * h;
    let mut score = 0.0;
    let mut empty = 0;
    for (&xi, &yi) in sample.x().iter().zip(sample.y()) {
        let (xs, ys) = sample.window(xi - reach, xi + reach);
        let mut f = 0.0;
        let mut g = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            let k = kernel.eval((xi - x) / h);
            f += k;
            g += k * y;
        }
        f -= k0;
        g -= k0 * yi;
        let pred = if f >= floor && f > 0.0 {
            g / f
        } else {
            empty += 1;
            if n > 1 {
                (total_y - yi) / (n - 1) as f64
            } else {
                yi
            }
        };
        score += (yi - pred) * (yi - pred);
    }
    (score, empty)
}

/// The bandwidth in `h_grid` with the smallest leave-one-out error; ties go to
/// the smaller bandwidth. Bandwidths at which every window is empty are skipped.
pub fn nw_cv_bandwidth(sample: &Sample, kernel: Kernel, h_grid: &[f64]) -> Result<f64> {
    if h_grid.is_empty() {
        return Err(Error::InvalidParameter("bandwidth grid is empty".into()));
    }
    let mut grid: Vec<f64> = h_grid.to_vec();
    for &h in &grid {
        crate::estimators::check_bandwidth(h)?;
    }
    grid.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for h in grid {
        let (score, empty) = loo_score(sample, kernel, h);
        if empty == sample.len() {
            continue;
        }
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((h, score));
        }
    }
    best.map(|(h, _)| h)
        .ok_or_else(|| Error::Simulation("every candidate bandwidth leaves all leave-one-out windows empty".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::distributions::{rep_rng, Distribution};

    #[test]
    fn grid_is_log_spaced() {
        let s = Sample::new((0..100).map(|i| i as f64 / 10.0).collect(), vec![0.0; 100]).unwrap();
        let g = cv_grid(&s, 20);
        assert_eq!(g.len(), 20);
        let r = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
        assert!((g[19] / g[0] - 40.0).abs() < 1e-10);
    }

    #[test]
    fn robust_scale_examples() {
        assert!((robust_scale(&[1.0, 2.0, 3.0, 4.0, 5.0]) - 2.0 / 1.349).abs() < 1e-12);
        assert_eq!(robust_scale(&[2.0, 2.0]), 1.0);
    }

    #[test]
    fn noise_prefers_wide_bandwidth() {
        let mut rng = rep_rng(5, 0);
        let u = Distribution::Uniform { a: -1.0, b: 1.0 };
        let z = Distribution::Normal { mu: 0.0, sd: 3.0 };
        let x: Vec<f64> = (0..300).map(|_| u.draw(&mut rng)).collect();
        let y: Vec<f64> = (0..300).map(|_| z.draw(&mut rng)).collect();
        let s = Sample::new(x, y).unwrap();
        let grid = cv_grid(&s, 20);
        let h = nw_cv_bandwidth(&s, Kernel::GAUSSIAN_TRUNCATED, &grid).unwrap();
        assert!(h >= grid[12], "{h} vs {:?}", grid);
    }

    #[test]
    fn all_empty_bandwidth_is_skipped() {
        let s = Sample::from_pairs(&[(0.0, 1.0), (10.0, 2.0), (20.0, 0.0)]).unwrap();
        let h = nw_cv_bandwidth(&s, Kernel::TRICUBE, &[0.5, 15.0]).unwrap();
        assert_eq!(h, 15.0);
        assert!(nw_cv_bandwidth(&s, Kernel::TRICUBE, &[0.5, 1.0]).is_err());
        assert!(nw_cv_bandwidth(&s, Kernel::TRICUBE, &[]).is_err());
    }

    #[test]
    fn smooth_noiseless_data_has_interior_minimum() {
        let n = 400;
        let x: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * (i as f64 + 0.5) / n as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (2.0 * v).sin()).collect();
        let s = Sample::new(x, y).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| 0.01 * 1.3f64.powi(i)).collect();
        let scores: Vec<f64> = grid.iter().map(|&h| loo_score(&s, Kernel::TRICUBE, h).0).collect();
        let h = nw_cv_bandwidth(&s, Kernel::TRICUBE, &grid).unwrap();
        let i = grid.iter().position(|&g| g == h).unwrap();
        assert!(i > 0 && i < grid.len() - 1, "{scores:?}");
        assert!(scores[0] > scores[i] && scores[19] > scores[i]);
    }

    #[test]
    fn ties_go_to_smaller_bandwidth() {
        // Constant responses: every bandwidth predicts exactly.
        let s = Sample::new(vec![0.0, 0.1, 0.2, 0.3], vec![1.0; 4]).unwrap();
        let h = nw_cv_bandwidth(&s, Kernel::TRICUBE, &[1.0, 0.5, 2.0]).unwrap();
        assert_eq!(h, 0.5);
    }
}
