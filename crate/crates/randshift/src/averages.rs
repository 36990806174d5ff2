//! Weighted ergodic averages: Birkhoff means, centered Birkhoff sums,
//! Nörlund means, and the L²/uniform-convergence/CLT experiments.

use crate::error::{Error, Result};
use crate::ergodic::{
    sample_point, sample_rng, symbol_stream, ErgodicSystem, Partition,
};
use crate::exec::map_samples;
use crate::fft;
use crate::util::{kahan_sum, KahanSum};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Back-weight families p = (p_n) for Nörlund means
/// M_n = (1/P_n) sum_{l<n} p_{n-l} f(tau^l omega).
#[derive(Debug, Clone, PartialEq)]
pub enum NorlundWeights {
    /// p_n = 1: the Cesàro / Birkhoff mean.
    Cesaro,
    /// p_n = 1/n.
    Harmonic,
    /// p_n = log n, so p_1 = 0 and M_1 is undefined.
    Log,
    /// Tabulated nonnegative weights (p_1, p_2, ...), repeated-last tail.
    Custom(Vec<f64>),
}

impl NorlundWeights {
    pub fn custom(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("custom weights must be nonnegative finite"));
        }
        if p.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("custom weights cannot be all zero"));
        }
        Ok(NorlundWeights::Custom(p))
    }

    /// Parse "cesaro" | "harmonic" | "log" | "custom:<p1,p2,...>".
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "cesaro" => return Ok(NorlundWeights::Cesaro),
            "harmonic" => return Ok(NorlundWeights::Harmonic),
            "log" => return Ok(NorlundWeights::Log),
            _ => {}
        }
        if let Some(ps) = spec.strip_prefix("custom:") {
            let p = ps
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad weight {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return NorlundWeights::custom(p);
        }
        Err(Error::Parse(format!("unknown averaging weights {spec:?}")))
    }

    pub fn weight(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match self {
            NorlundWeights::Cesaro => 1.0,
            NorlundWeights::Harmonic => 1.0 / n as f64,
            NorlundWeights::Log => (n as f64).ln(),
            NorlundWeights::Custom(p) => p[(n - 1).min(p.len() - 1)],
        }
    }

    /// (p_1..p_N, prefix sums P_1..P_N).
    pub fn weights_up_to(&self, n_max: usize) -> (Vec<f64>, Vec<f64>) {
        let p: Vec<f64> = (1..=n_max).map(|n| self.weight(n)).collect();
        let mut prefix = Vec::with_capacity(n_max);
        let mut acc = KahanSum::new();
        for &v in &p {
            acc.add(v);
            prefix.push(acc.value());
        }
        (p, prefix)
    }

    /// Numeric check of the regularity hypotheses over the first `n` terms:
    /// P_n -> infinity, p_{n+1}/P_n -> 0, sum |p_{j+1}-p_j| / P_n -> 0.
    /// Built-in kinds satisfy them analytically; Custom kinds get this
    /// desk check, a warning signal rather than an error.
    pub fn regularity_check(&self, n: usize) -> bool {
        match self {
            NorlundWeights::Cesaro | NorlundWeights::Harmonic | NorlundWeights::Log => true,
            NorlundWeights::Custom(_) => {
                let (p, prefix) = self.weights_up_to(n + 1);
                let pn = prefix[n - 1];
                if pn <= 0.0 {
                    return false;
                }
                let variation: f64 = p.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
                // Heuristic finite-horizon thresholds for "-> 0".
                p[n] / pn < 0.1 && variation / pn < 0.5 && pn > 10.0 * p[0].max(1e-300)
            }
        }
    }
}

/// Nörlund means on a grid; entries with P_n = 0 are undefined (e.g. Log
/// weights at n = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageSeries {
    pub checkpoints: Vec<usize>,
    pub values: Vec<Option<f64>>,
}

/// (1/n) sum_{l<n} values[l], compensated.
pub fn birkhoff_mean(values: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("birkhoff mean needs n >= 1"));
    }
    if n > values.len() {
        return Err(Error::invalid(format!(
            "n = {n} exceeds {} available values",
            values.len()
        )));
    }
    Ok(kahan_sum(values[..n].iter().cloned()) / n as f64)
}

/// Running centered sums S_n = sum_{l<n} (values[l] - mean) at checkpoints.
pub fn centered_birkhoff_sums(
    values: &[f64],
    mean: f64,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    if checkpoints.iter().any(|&n| n > values.len()) {
        return Err(Error::invalid("checkpoint exceeds available values"));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut acc = KahanSum::new();
    let mut pos = 0usize;
    for &n in checkpoints {
        if n < pos {
            return Err(Error::invalid("checkpoints must be nondecreasing"));
        }
        for &v in &values[pos..n] {
            acc.add(v - mean);
        }
        pos = n;
        out.push(acc.value());
    }
    Ok(out)
}

/// Nörlund means for every n in 1..=N via one FFT convolution. The kernel
/// is centered before the transform; the mean is restored through exact
/// prefix sums of the values.
pub fn norlund_mean_series(
    p: &NorlundWeights,
    values: &[f64],
    n_max: usize,
) -> Result<AverageSeries> {
    if n_max == 0 || n_max > values.len() {
        return Err(Error::invalid(format!(
            "grid horizon {n_max} out of range 1..={}",
            values.len()
        )));
    }
    let (pw, prefix_p) = p.weights_up_to(n_max);
    let kernel_mean = pw.iter().sum::<f64>() / n_max as f64;
    let centered: Vec<f64> = pw.iter().map(|v| v - kernel_mean).collect();
    let conv = fft::convolve(&values[..n_max], &centered);
    let mut value_prefix = KahanSum::new();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        value_prefix.add(values[n - 1]);
        let pn = prefix_p[n - 1];
        if pn <= 0.0 {
            out.push(None);
        } else {
            out.push(Some((conv[n - 1] + kernel_mean * value_prefix.value()) / pn));
        }
    }
    Ok(AverageSeries {
        checkpoints: (1..=n_max).collect(),
        values: out,
    })
}

/// Direct O(n) definition of a single Nörlund mean; oracle for the FFT path.
pub fn norlund_mean_naive(p: &NorlundWeights, values: &[f64], n: usize) -> Result<Option<f64>> {
    if n == 0 || n > values.len() {
        return Err(Error::invalid("norlund mean needs 1 <= n <= len"));
    }
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for l in 0..n {
        let w = p.weight(n - l);
        num.add(w * values[l]);
        den.add(w);
    }
    if den.value() <= 0.0 {
        Ok(None)
    } else {
        Ok(Some(num.value() / den.value()))
    }
}

/// Mean of the cell-1 indicator under the driver's invariant measure.
pub fn cell1_mean(system: &ErgodicSystem, partition: &Partition) -> Result<f64> {
    if let Some(m) = partition.measures() {
        return Ok(m[0]);
    }
    match system {
        ErgodicSystem::Bernoulli { probs } => Ok(probs[0]),
        _ => Err(Error::NotApplicable(
            "cell measure unknown for implicit partitions of this driver".into(),
        )),
    }
}

/// Empirical L² errors of Nörlund means of the cell-1 indicator:
/// e(n) = sqrt(mean over samples of (M_n - mu(A1))^2).
pub fn norlund_l2_experiment(
    system: &ErgodicSystem,
    partition: &Partition,
    p: &NorlundWeights,
    grid: &[usize],
    samples: usize,
    master_seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("grid must be strictly increasing and nonempty"));
    }
    let target = cell1_mean(system, partition)?;
    let horizon = *grid.last().unwrap();
    let per_sample: Vec<Result<Vec<f64>>> = map_samples(samples, |i| {
        let mut rng = sample_rng(master_seed, i as u64);
        let pt = sample_point(system, &mut rng);
        let s = symbol_stream(system, partition, &pt, horizon)?;
        let f = s.indicator(1);
        let means = norlund_mean_series(p, &f, horizon)?;
        Ok(grid
            .iter()
            .map(|&n| means.values[n - 1].unwrap_or(f64::NAN))
            .collect())
    });
    let mut sq = vec![KahanSum::new(); grid.len()];
    for r in per_sample {
        let ms = r?;
        for (j, m) in ms.into_iter().enumerate() {
            let d = m - target;
            sq[j].add(d * d);
        }
    }
    Ok(grid
        .iter()
        .zip(sq.iter())
        .map(|(&n, acc)| (n, (acc.value() / samples as f64).sqrt()))
        .collect())
}

/// A finite cosine/sine series f(x) = constant + sum_j cos[j]*cos(2*pi*(j+1)*x)
/// + sin[j]*sin(2*pi*(j+1)*x); its integral over [0,1) is the constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn cos_wave() -> Self {
        TrigPoly { constant: 0.0, cos: vec![1.0], sin: vec![] }
    }

    pub fn eval_fixed(&self, x: u128) -> f64 {
        // Exact fixed-point position, evaluated in f64 for the trig call.
        let t = x as f64 / 2f64.powi(128);
        let mut v = self.constant;
        let tau = std::f64::consts::TAU;
        for (j, &c) in self.cos.iter().enumerate() {
            v += c * (tau * (j + 1) as f64 * t).cos();
        }
        for (j, &s) in self.sin.iter().enumerate() {
            v += s * (tau * (j + 1) as f64 * t).sin();
        }
        v
    }
}

/// Uniform-convergence probe for uniquely ergodic rotations: the max over
/// `grid_size` equispaced starting points of |M_n - integral of f|.
pub fn oxtoby_sup_experiment(
    system: &ErgodicSystem,
    f: &TrigPoly,
    p: &NorlundWeights,
    n: usize,
    grid_size: usize,
) -> Result<f64> {
    let alpha = match system {
        ErgodicSystem::Rotation { alpha } => *alpha,
        _ => {
            return Err(Error::NotApplicable(
                "uniform-convergence probe requires a rotation".into(),
            ))
        }
    };
    if n == 0 || grid_size == 0 {
        return Err(Error::invalid("need n >= 1 and at least one grid start"));
    }
    let (pw, prefix_p) = p.weights_up_to(n);
    let pn = prefix_p[n - 1];
    if pn <= 0.0 {
        return Err(Error::invalid("averaging weights sum to zero at this n"));
    }
    let target = f.constant;
    let devs = map_samples(grid_size, |g| {
        // Start g/grid_size as an exact 128-bit fraction.
        let start_big = (BigUint::from(g) << 128u32) / BigUint::from(grid_size);
        let mut start: u128 = 0;
        for (i, d) in start_big.to_u64_digits().iter().enumerate() {
            start |= (*d as u128) << (64 * i);
        }
        let mut pos = start;
        let mut acc = KahanSum::new();
        for l in 0..n {
            acc.add(pw[n - l - 1] * f.eval_fixed(pos));
            pos = pos.wrapping_add(alpha);
        }
        (acc.value() / pn - target).abs()
    });
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// Result of the CLT probe at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltPoint {
    pub n: usize,
    pub ks_distance: f64,
    pub degenerate: bool,
}

/// Standardized centered Birkhoff sums of the cell-1 indicator against the
/// standard normal: Kolmogorov-Smirnov distance per grid point. The
/// variance mu(1-mu) is exact, not estimated.
pub fn clt_experiment(
    system: &ErgodicSystem,
    partition: &Partition,
    grid: &[usize],
    samples: usize,
    master_seed: u64,
) -> Result<Vec<CltPoint>> {
    if samples < 100 {
        return Err(Error::invalid("CLT probe needs at least 100 samples"));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("grid must be strictly increasing and nonempty"));
    }
    let mu = cell1_mean(system, partition)?;
    let var = mu * (1.0 - mu);
    let horizon = *grid.last().unwrap();
    let sums: Vec<Result<Vec<f64>>> = map_samples(samples, |i| {
        let mut rng = sample_rng(master_seed, i as u64);
        let pt = sample_point(system, &mut rng);
        let s = symbol_stream(system, partition, &pt, horizon)?;
        let f = s.indicator(1);
        centered_birkhoff_sums(&f, mu, grid)
    });
    let mut per_n: Vec<Vec<f64>> = vec![Vec::with_capacity(samples); grid.len()];
    for r in sums {
        for (j, v) in r?.into_iter().enumerate() {
            per_n[j].push(v);
        }
    }
    let degenerate = var < 1e-12;
    Ok(grid
        .iter()
        .zip(per_n.into_iter())
        .map(|(&n, raw)| {
            let z: Vec<f64> = if degenerate {
                vec![0.0; raw.len()]
            } else {
                let scale = (n as f64 * var).sqrt();
                raw.into_iter().map(|s| s / scale).collect()
            };
            CltPoint {
                n,
                ks_distance: ks_normal_distance(&z),
                degenerate,
            }
        })
        .collect())
}

/// Kolmogorov-Smirnov distance of a sample to the standard normal.
pub fn ks_normal_distance(z: &[f64]) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = normal.cdf(x);
            (cdf - i as f64 / m).abs().max((cdf - (i as f64 + 1.0) / m).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergodic::{halves_partition, parse_alpha};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn birkhoff_basics() {
        assert_abs_diff_eq!(birkhoff_mean(&[3.0; 10], 10).unwrap(), 3.0);
        assert_abs_diff_eq!(birkhoff_mean(&[1.0, 0.0, 1.0], 3).unwrap(), 2.0 / 3.0);
        assert!(birkhoff_mean(&[1.0], 0).is_err());
        assert!(birkhoff_mean(&[1.0], 2).is_err());
    }

    #[test]
    fn centered_sums_vanish_on_constant() {
        let out = centered_birkhoff_sums(&[2.5; 20], 2.5, &[5, 10, 20]).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centered_sums_binomial_scale() {
        // i.i.d. +-1/2: |S_n| <= 4*sqrt(n/4) for >= 99% of seeds.
        let mut ok = 0;
        for seed in 0..200u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..4096)
                .map(|_| if rng.gen::<bool>() { 0.5 } else { -0.5 })
                .collect();
            let s = centered_birkhoff_sums(&vals, 0.0, &[4096]).unwrap()[0];
            if s.abs() <= 4.0 * (4096f64 / 4.0).sqrt() {
                ok += 1;
            }
        }
        assert!(ok >= 198, "only {ok}/200 within the binomial envelope");
    }

    #[test]
    fn sign_changes_occur_for_most_samples() {
        // Centered sums of the doubling half-indicator change sign by 1e4
        // for >= 90% of 200 samples.
        let sys = ErgodicSystem::Doubling;
        let p = halves_partition();
        let grid: Vec<usize> = (1..=10_000).collect();
        let mut changed = 0;
        for i in 0..200u64 {
            let mut rng = sample_rng(13, i);
            let pt = sample_point(&sys, &mut rng);
            let s = symbol_stream(&sys, &p, &pt, 10_000).unwrap();
            let sums = centered_birkhoff_sums(&s.indicator(1), 0.5, &grid).unwrap();
            let has_pos = sums.iter().any(|&v| v > 0.0);
            let has_neg = sums.iter().any(|&v| v < 0.0);
            if has_pos && has_neg {
                changed += 1;
            }
        }
        assert!(changed >= 180, "only {changed}/200 changed sign");
    }

    #[test]
    fn cesaro_matches_birkhoff_bitwise_on_naive_path() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let vals: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for n in [1usize, 7, 100, 500] {
            let m = norlund_mean_naive(&NorlundWeights::Cesaro, &vals, n)
                .unwrap()
                .unwrap();
            // Same Kahan kernel, same order: bit-identical.
            assert_eq!(m, kahan_sum(vals[..n].iter().cloned()) / n as f64);
        }
    }

    #[test]
    fn norlund_fft_matches_naive_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let vals: Vec<f64> = (0..4096).map(|_| rng.gen_range(0.0..1.0)).collect();
        for kind in [
            NorlundWeights::Cesaro,
            NorlundWeights::Harmonic,
            NorlundWeights::Log,
            NorlundWeights::custom(vec![0.5, 2.0, 1.0]).unwrap(),
        ] {
            let series = norlund_mean_series(&kind, &vals, 4096).unwrap();
            for n in [1usize, 2, 3, 64, 1000, 4096] {
                let naive = norlund_mean_naive(&kind, &vals, n).unwrap();
                let fast = series.values[n - 1];
                match (naive, fast) {
                    (None, None) => {}
                    (Some(a), Some(b)) => {
                        assert!((a - b).abs() <= 1e-7, "{kind:?} n={n}: {a} vs {b}")
                    }
                    other => panic!("{kind:?} n={n}: definedness mismatch {other:?}"),
                }
            }
        }
    }

    #[test]
    fn log_weights_undefined_at_one() {
        let series = norlund_mean_series(&NorlundWeights::Log, &[1.0; 10], 10).unwrap();
        assert!(series.values[0].is_none());
        assert!(series.values[1].is_some());
    }

    #[test]
    fn constant_values_average_to_constant() {
        let series = norlund_mean_series(&NorlundWeights::Harmonic, &[2.5; 100], 100).unwrap();
        for v in series.values.iter().flatten() {
            assert_abs_diff_eq!(*v, 2.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn range_preservation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..500).map(|_| rng.gen_range(-2.0..3.0)).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let series = norlund_mean_series(&NorlundWeights::Harmonic, &vals, 500).unwrap();
        for v in series.values.iter().flatten() {
            assert!(lo - 1e-9 <= *v && *v <= hi + 1e-9);
        }
    }

    #[test]
    fn regularity_checks() {
        assert!(NorlundWeights::Harmonic.regularity_check(10_000));
        assert!(NorlundWeights::custom(vec![1.0]).unwrap().regularity_check(10_000));
        // Geometric growth concentrates all mass at the newest term.
        let geo: Vec<f64> = (0..60).map(|i| 2f64.powi(i)).collect();
        assert!(!NorlundWeights::custom(geo).unwrap().regularity_check(50));
    }

    #[test]
    fn l2_experiment_constant_and_trend() {
        let sys = ErgodicSystem::bernoulli(vec![0.5, 0.5]).unwrap();
        let part = sys.implicit_partition().unwrap();
        let errs = norlund_l2_experiment(
            &sys,
            &part,
            &NorlundWeights::Harmonic,
            &[100, 1000, 10_000],
            30,
            5,
        )
        .unwrap();
        assert!(errs[2].1 < errs[0].1, "errors should shrink: {errs:?}");
        assert!(errs[2].1 < 0.2);
    }

    #[test]
    fn oxtoby_trivial_and_guards() {
        let rot = ErgodicSystem::rotation(parse_alpha("golden").unwrap()).unwrap();
        let one = TrigPoly { constant: 1.0, cos: vec![], sin: vec![] };
        let dev =
            oxtoby_sup_experiment(&rot, &one, &NorlundWeights::Harmonic, 1000, 16).unwrap();
        assert!(dev < 1e-12);
        assert!(matches!(
            oxtoby_sup_experiment(
                &ErgodicSystem::Doubling,
                &one,
                &NorlundWeights::Harmonic,
                10,
                4
            ),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn oxtoby_cosine_deviation_shrinks() {
        let rot = ErgodicSystem::rotation(parse_alpha("golden").unwrap()).unwrap();
        let f = TrigPoly::cos_wave();
        let d3 = oxtoby_sup_experiment(&rot, &f, &NorlundWeights::Cesaro, 1000, 64).unwrap();
        let d5 = oxtoby_sup_experiment(&rot, &f, &NorlundWeights::Cesaro, 100_000, 64).unwrap();
        assert!(d5 <= d3 * 1.1, "d3 = {d3}, d5 = {d5}");
        assert!(d5 < 0.01, "Cesàro deviation at 1e5 should be tiny: {d5}");
    }

    #[test]
    fn ks_distance_of_zeros_is_half() {
        let z = vec![0.0; 100];
        assert_abs_diff_eq!(ks_normal_distance(&z), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn clt_degenerate_partition_flagged() {
        let sys = ErgodicSystem::bernoulli(vec![1.0 - 1e-13, 1e-13]);
        // Probabilities that extreme still sum to 1 within tolerance.
        let sys = sys.unwrap();
        let part = sys.implicit_partition().unwrap();
        let pts = clt_experiment(&sys, &part, &[100], 100, 1).unwrap();
        assert!(pts[0].degenerate);
        assert_abs_diff_eq!(pts[0].ks_distance, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn clt_doubling_ks_is_small() {
        let sys = ErgodicSystem::Doubling;
        let part = halves_partition();
        let pts = clt_experiment(&sys, &part, &[1024], 500, 42).unwrap();
        assert!(!pts[0].degenerate);
        assert!(pts[0].ks_distance < 0.1, "ks = {}", pts[0].ks_distance);
    }

    #[test]
    fn norlund_parse() {
        assert_eq!(NorlundWeights::parse("cesaro").unwrap(), NorlundWeights::Cesaro);
        assert_eq!(NorlundWeights::parse("log").unwrap(), NorlundWeights::Log);
        assert!(NorlundWeights::parse("custom:1,2,3").is_ok());
        assert!(NorlundWeights::parse("custom:-1").is_err());
        assert!(NorlundWeights::parse("zeta").is_err());
    }
}
