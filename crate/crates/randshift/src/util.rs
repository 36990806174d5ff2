//! Small numeric helpers shared across the crate.

/// Compensated (Kahan) summation accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sum a slice with compensated summation.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Wilson score interval for a binomial proportion at ~95% confidence.
/// Returns (lower, upper).
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64; // 97.5% normal quantile
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = phat + z2 / (2.0 * n);
    let margin = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - margin) / denom).max(0.0),
        ((center + margin) / denom).min(1.0),
    )
}

/// Least-squares slope of y against x. Returns 0.0 for fewer than two points
/// or degenerate x.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Geometric checkpoint grid: base, base*ratio, ... while <= horizon, with the
/// horizon itself appended if not already present.
pub fn geometric_grid(base: usize, ratio: usize, horizon: usize) -> Vec<usize> {
    assert!(base >= 1 && ratio >= 2 && horizon >= base);
    let mut grid = Vec::new();
    let mut n = base;
    while n <= horizon {
        grid.push(n);
        match n.checked_mul(ratio) {
            Some(next) => n = next,
            None => break,
        }
    }
    if *grid.last().unwrap() != horizon {
        grid.push(horizon);
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kahan_beats_naive_on_ill_conditioned_sum() {
        // 1 + 1e-16 added many times: naive f64 loses every increment.
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert_abs_diff_eq!(acc.value(), 1.0 + 1e-12, epsilon = 1e-15);
    }

    #[test]
    fn wilson_interval_contains_point_estimate() {
        let (lo, hi) = wilson_interval(70, 100);
        assert!(lo < 0.7 && 0.7 < hi);
        assert!(hi - lo < 0.2);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn slope_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        assert_abs_diff_eq!(least_squares_slope(&x, &y), 2.0, epsilon = 1e-12);
        assert_eq!(least_squares_slope(&[1.0], &[2.0]), 0.0);
    }

    #[test]
    fn geometric_grid_appends_horizon() {
        assert_eq!(geometric_grid(64, 2, 256), vec![64, 128, 256]);
        assert_eq!(geometric_grid(64, 2, 300), vec![64, 128, 256, 300]);
        assert_eq!(geometric_grid(1, 10, 1), vec![1]);
    }
}
