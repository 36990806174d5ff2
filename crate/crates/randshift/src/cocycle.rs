//! The random product of weighted backward shifts and its growth series
//! V_n = sum_{i<n} log|w^{(s_i)}_{n-i}|.
//!
//! Everything lives in natural-log space: with w_l = l the plain product
//! overflows f64 near n = 170, so coefficients are carried as
//! (log-magnitude, sign).

use crate::error::{Error, Result};
use crate::ergodic::SymbolStream;
use crate::fft;
use crate::util::KahanSum;
use crate::weights::WeightSequence;

/// One weight family per partition cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cocycle {
    pub weights: Vec<WeightSequence>,
}

impl Cocycle {
    pub fn new(weights: Vec<WeightSequence>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("cocycle needs at least one weight family"));
        }
        Ok(Cocycle { weights })
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    fn check_stream(&self, s: &SymbolStream) -> Result<()> {
        if s.k != self.arity() {
            return Err(Error::invalid(format!(
                "stream has {} cells but cocycle has {} weight families",
                s.k,
                self.arity()
            )));
        }
        Ok(())
    }
}

/// V_n sampled on a checkpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProductSeries {
    pub checkpoints: Vec<usize>,
    pub values: Vec<f64>,
}

impl LogProductSeries {
    pub fn new(checkpoints: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if checkpoints.is_empty() || checkpoints.len() != values.len() {
            return Err(Error::invalid("series needs matching nonempty grids"));
        }
        if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("checkpoints must be strictly increasing, >= 1"));
        }
        Ok(LogProductSeries { checkpoints, values })
    }
}

fn validate_checkpoints(checkpoints: &[usize], limit: usize) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::invalid("checkpoint grid is empty"));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be strictly increasing, >= 1"));
    }
    let max = *checkpoints.last().unwrap();
    if max > limit {
        return Err(Error::invalid(format!(
            "checkpoint {max} exceeds symbol stream length {limit}"
        )));
    }
    Ok(())
}

/// Exact triangular evaluation of V at the checkpoints, O(sum of n_j).
pub fn log_product_series_naive(
    c: &Cocycle,
    s: &SymbolStream,
    checkpoints: &[usize],
) -> Result<LogProductSeries> {
    c.check_stream(s)?;
    validate_checkpoints(checkpoints, s.len())?;
    let values = checkpoints
        .iter()
        .map(|&n| {
            let mut acc = KahanSum::new();
            for i in 0..n {
                let l = s.symbols[i] as usize - 1;
                acc.add(c.weights[l].log_weight(n - i).unwrap());
            }
            acc.value()
        })
        .collect();
    LogProductSeries::new(checkpoints.to_vec(), values)
}

/// V_n for every n in 1..=N at once, for two-family cocycles.
///
/// Uses the identity V_n = P2(n) + (dg * x)(n) with P2 the prefix sums of
/// the second family, dg = g1 - g2 and x the cell-1 indicator; the
/// convolution runs through the FFT in O(N log N). dg is centered before the
/// transform to bound round-off, with the mean restored through the exact
/// occupation counts.
pub fn log_product_full_fast(c: &Cocycle, s: &SymbolStream, n_max: usize) -> Result<Vec<f64>> {
    if c.arity() != 2 {
        return Err(Error::UnsupportedArity(c.arity()));
    }
    c.check_stream(s)?;
    if n_max == 0 || n_max > s.len() {
        return Err(Error::invalid(format!(
            "full-grid horizon {n_max} out of range 1..={}",
            s.len()
        )));
    }
    let g1 = &c.weights[0];
    let g2 = &c.weights[1];
    let dg: Vec<f64> = (1..=n_max)
        .map(|m| g1.log_weight(m).unwrap() - g2.log_weight(m).unwrap())
        .collect();
    let mean = dg.iter().sum::<f64>() / n_max as f64;
    let centered: Vec<f64> = dg.iter().map(|v| v - mean).collect();
    let x: Vec<f64> = s.symbols[..n_max]
        .iter()
        .map(|&sym| if sym == 1 { 1.0 } else { 0.0 })
        .collect();
    let conv = fft::convolve(&x, &centered);
    let mut out = Vec::with_capacity(n_max);
    let mut a1 = 0.0; // occupation count of cell 1 among i < n
    for n in 1..=n_max {
        a1 += x[n - 1];
        out.push(g2.prefix_log_sum(n) + conv[n - 1] + mean * a1);
    }
    Ok(out)
}

/// Fast evaluator restricted to a checkpoint grid.
pub fn log_product_series_fast(
    c: &Cocycle,
    s: &SymbolStream,
    checkpoints: &[usize],
) -> Result<LogProductSeries> {
    validate_checkpoints(checkpoints, s.len())?;
    let n_max = *checkpoints.last().unwrap();
    let full = log_product_full_fast(c, s, n_max)?;
    let values = checkpoints.iter().map(|&n| full[n - 1]).collect();
    LogProductSeries::new(checkpoints.to_vec(), values)
}

/// Closed form for the commuting case w = c*v:
/// V_n = a1(n) * log c + prefix_log_sum(v, n).
pub fn log_product_commuting(
    c_ratio: f64,
    v: &WeightSequence,
    s: &SymbolStream,
    checkpoints: &[usize],
) -> Result<LogProductSeries> {
    if !(c_ratio > 0.0) || !c_ratio.is_finite() {
        return Err(Error::invalid("commuting ratio must be positive finite"));
    }
    validate_checkpoints(checkpoints, s.len())?;
    let log_c = c_ratio.ln();
    let mut values = Vec::with_capacity(checkpoints.len());
    let mut a1 = 0usize;
    let mut prev = 0usize;
    for &n in checkpoints {
        a1 += s.symbols[prev..n].iter().filter(|&&sym| sym == 1).count();
        prev = n;
        values.push(a1 as f64 * log_c + v.prefix_log_sum(n));
    }
    LogProductSeries::new(checkpoints.to_vec(), values)
}

/// A finitely supported vector with coefficients stored as
/// (log-magnitude, sign).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    /// (index, log|coefficient|, negative) with distinct indices.
    pub entries: Vec<(usize, f64, bool)>,
}

impl SparseVector {
    pub fn basis(j: usize) -> Self {
        SparseVector { entries: vec![(j, 0.0, false)] }
    }

    pub fn sorted(mut self) -> Self {
        self.entries.sort_by_key(|e| e.0);
        self
    }
}

/// Apply the n-fold random product to a finite-support vector: indices
/// j < n vanish and j >= n maps to j - n with the log-coefficient bumped by
/// the weight product along the orbit.
pub fn apply_product(
    c: &Cocycle,
    s: &SymbolStream,
    x: &SparseVector,
    n: usize,
) -> Result<SparseVector> {
    c.check_stream(s)?;
    if n > s.len() {
        return Err(Error::invalid(format!(
            "product length {n} exceeds symbol stream length {}",
            s.len()
        )));
    }
    let mut entries = Vec::new();
    for &(j, log_mag, neg) in &x.entries {
        if j < n {
            continue;
        }
        let mut acc = KahanSum::new();
        acc.add(log_mag);
        for m in 1..=n {
            let l = s.symbols[n - m] as usize - 1;
            acc.add(c.weights[l].log_weight(j - n + m).unwrap());
        }
        entries.push((j - n, acc.value(), neg));
    }
    Ok(SparseVector { entries }.sorted())
}

/// Single application of the backward shift with the given weight family:
/// e_0 -> 0, e_j -> w_j e_{j-1}. Stepwise test oracle for apply_product.
pub fn apply_shift_once(w: &WeightSequence, x: &SparseVector) -> SparseVector {
    let entries = x
        .entries
        .iter()
        .filter(|&&(j, _, _)| j >= 1)
        .map(|&(j, log_mag, neg)| (j - 1, log_mag + w.log_weight(j).unwrap(), neg))
        .collect();
    SparseVector { entries }.sorted()
}

/// Sufficient non-universality test: true iff
/// sum_l mu(A_l) * sup_n log|w^{(l)}_n| < 0.
pub fn non_universality_quickcheck(c: &Cocycle, measures: &[f64]) -> Result<bool> {
    if measures.len() != c.arity() {
        return Err(Error::invalid("one measure per weight family required"));
    }
    let mut drift = 0.0;
    for (w, &mu) in c.weights.iter().zip(measures) {
        match w.sup_log() {
            Some(s) => drift += mu * s,
            None => {
                return Err(Error::NotApplicable(
                    "unbounded weight family: sup-norm test undefined".into(),
                ))
            }
        }
    }
    Ok(drift < 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergodic::{sample_point, sample_rng, symbol_stream, ErgodicSystem};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn stream(symbols: Vec<u8>, k: usize) -> SymbolStream {
        SymbolStream { symbols, k }
    }

    fn two_const(a: f64, b: f64) -> Cocycle {
        Cocycle::new(vec![
            WeightSequence::constant(a).unwrap(),
            WeightSequence::constant(b).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn hand_triangular_oracle() {
        // k=2, w=2, v=1, s=[1,2,1] -> V = [ln2, ln2, 2 ln2].
        let c = two_const(2.0, 1.0);
        let s = stream(vec![1, 2, 1], 2);
        let v = log_product_series_naive(&c, &s, &[1, 2, 3]).unwrap();
        let ln2 = 2f64.ln();
        assert_abs_diff_eq!(v.values[0], ln2, epsilon = 1e-14);
        assert_abs_diff_eq!(v.values[1], ln2, epsilon = 1e-14);
        assert_abs_diff_eq!(v.values[2], 2.0 * ln2, epsilon = 1e-14);
    }

    #[test]
    fn single_family_degeneracy() {
        // k=1: V_n = prefix_log_sum for any symbol stream.
        let c = Cocycle::new(vec![WeightSequence::Poly]).unwrap();
        let s = stream(vec![1; 50], 1);
        let v = log_product_series_naive(&c, &s, &[1, 10, 50]).unwrap();
        for (i, &n) in [1usize, 10, 50].iter().enumerate() {
            assert_abs_diff_eq!(
                v.values[i],
                WeightSequence::Poly.prefix_log_sum(n),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn fast_matches_naive_small_and_constant_stream() {
        let c = two_const(2.0, 1.0);
        let s = stream(vec![1, 2, 1], 2);
        let naive = log_product_series_naive(&c, &s, &[1, 2, 3]).unwrap();
        let fast = log_product_series_fast(&c, &s, &[1, 2, 3]).unwrap();
        for (a, b) in naive.values.iter().zip(fast.values.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // All-ones stream: V_n = prefix of the first family.
        let c = Cocycle::new(vec![WeightSequence::HarmonicUp, WeightSequence::HarmonicDown])
            .unwrap();
        let s = stream(vec![1; 100], 2);
        let full = log_product_full_fast(&c, &s, 100).unwrap();
        for n in [1usize, 17, 100] {
            assert_abs_diff_eq!(
                full[n - 1],
                WeightSequence::HarmonicUp.prefix_log_sum(n),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn fast_matches_naive_on_random_inputs() {
        let mut rng = sample_rng(11, 0);
        for trial in 0..5 {
            let n = 4096;
            let symbols: Vec<u8> = (0..n).map(|_| rng.gen_range(1..=2)).collect();
            let s = stream(symbols, 2);
            let c = Cocycle::new(vec![
                WeightSequence::constant(rng.gen_range(0.5..2.0)).unwrap(),
                WeightSequence::HarmonicDown,
            ])
            .unwrap();
            let grid: Vec<usize> = vec![1, 2, 100, 1000, 4096];
            let naive = log_product_series_naive(&c, &s, &grid).unwrap();
            let fast = log_product_series_fast(&c, &s, &grid).unwrap();
            let max_err = naive
                .values
                .iter()
                .zip(fast.values.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(max_err <= 1e-7, "trial {trial}: max_err = {max_err}");
        }
    }

    #[test]
    fn commuting_closed_form_agrees_with_naive() {
        // w = 2*v with v = harmonic-down.
        let v = WeightSequence::HarmonicDown;
        let w = WeightSequence::scaled(v.clone(), 2.0).unwrap();
        let c = Cocycle::new(vec![w, v.clone()]).unwrap();
        let mut rng = sample_rng(5, 1);
        let symbols: Vec<u8> = (0..2000).map(|_| rng.gen_range(1..=2)).collect();
        let s = stream(symbols, 2);
        let grid = [1usize, 7, 100, 2000];
        let naive = log_product_series_naive(&c, &s, &grid).unwrap();
        let closed = log_product_commuting(2.0, &v, &s, &grid).unwrap();
        for (a, b) in naive.values.iter().zip(closed.values.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        // c = 1: V_n = prefix(v, n) regardless of symbols.
        let trivial = log_product_commuting(1.0, &v, &s, &grid).unwrap();
        for (i, &n) in grid.iter().enumerate() {
            assert_abs_diff_eq!(trivial.values[i], v.prefix_log_sum(n), epsilon = 1e-12);
        }
    }

    #[test]
    fn harmonic_example_closed_form() {
        // Weights of the harmonic example: V_n =
        // -log(n+1) + sum_{i<n} log(1 + 2/(n-i)) [s_i = 1].
        let c = Cocycle::new(vec![WeightSequence::HarmonicUp, WeightSequence::HarmonicDown])
            .unwrap();
        let sys = ErgodicSystem::bernoulli(vec![0.5, 0.5]).unwrap();
        let p = sys.implicit_partition().unwrap();
        let mut rng = sample_rng(42, 3);
        let pt = sample_point(&sys, &mut rng);
        let s = symbol_stream(&sys, &p, &pt, 4096).unwrap();
        let v = log_product_series_naive(&c, &s, &[4096]).unwrap();
        let n = 4096usize;
        let mut expect = -((n as f64 + 1.0).ln());
        for i in 0..n {
            if s.symbols[i] == 1 {
                let m = (n - i) as f64;
                // (1+1/(m+1)) / (1-1/(m+1)) = (m+2)/m = 1 + 2/m.
                expect += (1.0 + 2.0 / m).ln();
            }
        }
        assert_abs_diff_eq!(v.values[0], expect, epsilon = 1e-9);
    }

    #[test]
    fn apply_product_annihilates_low_indices() {
        let c = two_const(2.0, 3.0);
        let s = stream(vec![1, 2, 1, 2], 2);
        let out = apply_product(&c, &s, &SparseVector::basis(3), 4).unwrap();
        assert!(out.entries.is_empty());
        let unchanged = apply_product(&c, &s, &SparseVector::basis(3), 0).unwrap();
        assert_eq!(unchanged.entries, vec![(3, 0.0, false)]);
    }

    #[test]
    fn apply_product_known_value() {
        // k=1, w_n = n, e_3 through two steps: coefficient w_3 * w_2 = 6.
        let c = Cocycle::new(vec![WeightSequence::Poly]).unwrap();
        let s = stream(vec![1, 1], 1);
        let out = apply_product(&c, &s, &SparseVector::basis(3), 2).unwrap();
        assert_eq!(out.entries.len(), 1);
        assert_eq!(out.entries[0].0, 1);
        assert_abs_diff_eq!(out.entries[0].1, 6f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn apply_product_matches_stepwise_oracle() {
        let c = Cocycle::new(vec![WeightSequence::HarmonicUp, WeightSequence::Poly]).unwrap();
        let mut rng = sample_rng(2, 0);
        let symbols: Vec<u8> = (0..64).map(|_| rng.gen_range(1..=2)).collect();
        let s = stream(symbols.clone(), 2);
        let x = SparseVector {
            entries: vec![(5, 0.25, false), (70, -1.0, true), (200, 0.0, false)],
        };
        for n in [0usize, 1, 3, 17, 64] {
            let closed = apply_product(&c, &s, &x, n).unwrap();
            // Stepwise: apply the shift for s_0, then s_1, ...
            let mut step = x.clone();
            for m in 0..n {
                step = apply_shift_once(&c.weights[symbols[m] as usize - 1], &step);
            }
            let step = step.sorted();
            assert_eq!(closed.entries.len(), step.entries.len(), "n = {n}");
            for (a, b) in closed.entries.iter().zip(step.entries.iter()) {
                assert_eq!(a.0, b.0);
                assert!((a.1 - b.1).abs() <= 1e-10, "n = {n}: {} vs {}", a.1, b.1);
                assert_eq!(a.2, b.2);
            }
        }
    }

    #[test]
    fn scaling_both_families_shifts_v_linearly() {
        let base = Cocycle::new(vec![WeightSequence::HarmonicUp, WeightSequence::HarmonicDown])
            .unwrap();
        let scaled = Cocycle::new(vec![
            WeightSequence::scaled(WeightSequence::HarmonicUp, 3.0).unwrap(),
            WeightSequence::scaled(WeightSequence::HarmonicDown, 3.0).unwrap(),
        ])
        .unwrap();
        let mut rng = sample_rng(8, 0);
        let symbols: Vec<u8> = (0..500).map(|_| rng.gen_range(1..=2)).collect();
        let s = stream(symbols, 2);
        let grid = [1usize, 50, 500];
        let v0 = log_product_series_naive(&base, &s, &grid).unwrap();
        let v1 = log_product_series_naive(&scaled, &s, &grid).unwrap();
        for (i, &n) in grid.iter().enumerate() {
            assert_abs_diff_eq!(
                v1.values[i] - v0.values[i],
                n as f64 * 3f64.ln(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn quickcheck_arithmetic() {
        // sup|w| = 0.9, sup|v| = 1.05, mu = (0.8, 0.2): drift < 0.
        let c = two_const(0.9, 1.05);
        assert!(non_universality_quickcheck(&c, &[0.8, 0.2]).unwrap());
        // k=1 expanding: false.
        let c1 = Cocycle::new(vec![WeightSequence::constant(2.0).unwrap()]).unwrap();
        assert!(!non_universality_quickcheck(&c1, &[1.0]).unwrap());
        // Boundary: drift exactly 0 is not < 0.
        let cb = two_const(1.0, 1.0);
        assert!(!non_universality_quickcheck(&cb, &[0.5, 0.5]).unwrap());
        // Unbounded family: not applicable.
        let cu = Cocycle::new(vec![WeightSequence::Poly, WeightSequence::InvPoly]).unwrap();
        assert!(matches!(
            non_universality_quickcheck(&cu, &[0.5, 0.5]),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn fast_rejects_wrong_arity() {
        let c = Cocycle::new(vec![WeightSequence::Poly]).unwrap();
        let s = stream(vec![1; 10], 1);
        assert!(matches!(
            log_product_full_fast(&c, &s, 10),
            Err(Error::UnsupportedArity(1))
        ));
    }

    #[test]
    fn checkpoint_validation() {
        let c = two_const(2.0, 1.0);
        let s = stream(vec![1, 2, 1], 2);
        assert!(log_product_series_naive(&c, &s, &[]).is_err());
        assert!(log_product_series_naive(&c, &s, &[2, 2]).is_err());
        assert!(log_product_series_naive(&c, &s, &[4]).is_err());
        assert!(log_product_series_naive(&c, &s, &[0, 1]).is_err());
    }
}
