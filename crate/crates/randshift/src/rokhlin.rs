//! Explicit Rokhlin towers over the binary shift, and the "bad set" whose
//! harmonic averages have a large limsup while the ambient cocycle still
//! shows weak-mixing growth.
//!
//! Towers come from marker words: the word "1 0^{m-1}" cannot overlap
//! itself, so "first marker position in the next n bits" is well defined
//! and levels are indexed by distance to the tower top. If the first
//! marker of x starts at q < n, then x sits on level n-1-q; the shifted
//! point has its first marker at q-1 and so sits one level higher. This
//! makes disjointness and shift-consistency structural.

use crate::error::{Error, Result};
use crate::exec::map_samples;
use crate::fft;
use crate::util::{wilson_interval, KahanSum};
use crate::ergodic::{sample_rng, BitStream};
use serde::{Deserialize, Serialize};

/// A marker-word Rokhlin tower of the given height over the binary shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub height: usize,
    /// Marker word is 1 followed by marker_len - 1 zeros.
    pub marker_len: usize,
    pub coverage_target: f64,
    pub measured_coverage: f64,
}

/// Number of leading bits a level query needs.
pub fn tower_bit_budget(height: usize, marker_len: usize) -> usize {
    height + marker_len - 1
}

/// Whether the marker word starts at bit position `pos`.
fn marker_at(bits: &BitStream, pos: usize, marker_len: usize) -> bool {
    if !bits.bit(pos) {
        return false;
    }
    (1..marker_len).all(|j| !bits.bit(pos + j))
}

/// Position of the first marker start in [from, from + span), if any.
/// Needs bits up to from + span + marker_len - 1.
pub fn first_marker_in(bits: &BitStream, from: usize, span: usize, marker_len: usize) -> Option<usize> {
    (from..from + span).find(|&p| marker_at(bits, p, marker_len))
}

impl Tower {
    /// Level of the point with the given leading bits: n-1-q where q is the
    /// first marker start within the next n positions; None when the point
    /// falls outside the tower.
    pub fn level_of(&self, bits: &BitStream) -> Option<usize> {
        assert!(bits.len() >= tower_bit_budget(self.height, self.marker_len));
        first_marker_in(bits, 0, self.height, self.marker_len).map(|q| self.height - 1 - q)
    }

    /// Theoretical coverage 1 - (1 - 2^{-m})^n of a height-n tower with
    /// marker length m (exact for the i.i.d.-position heuristic; the true
    /// coverage is certified by sampling).
    pub fn heuristic_coverage(height: usize, marker_len: usize) -> f64 {
        1.0 - (1.0 - 0.5f64.powi(marker_len as i32)).powi(height as i32)
    }
}

/// Build a tower of the given height whose sampled coverage is at least
/// 1 - epsilon: pick the largest marker length whose heuristic coverage
/// keeps a 20% margin on epsilon, then certify by sampling 1e4 points.
pub fn build_tower(height: usize, epsilon: f64, master_seed: u64) -> Result<Tower> {
    if height < 1 {
        return Err(Error::invalid("tower height must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("coverage slack must lie in (0,1)"));
    }
    let marker_len = (1..=64)
        .rev()
        .find(|&m| Tower::heuristic_coverage(height, m) >= 1.0 - 0.8 * epsilon)
        .ok_or_else(|| {
            Error::ConstructionFailed(format!(
                "no marker length reaches coverage 1 - {epsilon} at height {height}"
            ))
        })?;
    let tower = Tower {
        height,
        marker_len,
        coverage_target: 1.0 - epsilon,
        measured_coverage: f64::NAN,
    };
    let trials = 10_000usize;
    let budget = tower_bit_budget(height, marker_len);
    let hits: usize = map_samples(trials, |i| {
        let mut rng = sample_rng(master_seed, i as u64);
        let bits = BitStream::random(&mut rng, budget);
        usize::from(tower.level_of(&bits).is_some())
    })
    .into_iter()
    .sum();
    let measured = hits as f64 / trials as f64;
    let (lo, _) = wilson_interval(hits as u64, trials as u64);
    if lo < 1.0 - epsilon - 0.02 {
        return Err(Error::ConstructionFailed(format!(
            "sampled coverage {measured} below target {}",
            1.0 - epsilon
        )));
    }
    Ok(Tower { measured_coverage: measured, ..tower })
}

/// One tower of the bad set: marker gap tied to the height (marker length
/// log2(height)) so the bad slab keeps small measure, with the top
/// ceil(height^{2/3}) levels marked bad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadTower {
    pub height: usize,
    pub marker_len: usize,
    /// Number of top levels in the bad slab: ceil(height^{2/3}).
    pub cutoff: usize,
}

/// Union of the top slabs of a family of towers with strictly increasing
/// heights and sum of height^{-1/3} below 1/3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadSet {
    pub towers: Vec<BadTower>,
}

/// Exact integer cube root, if the argument is a perfect cube.
fn exact_cbrt(n: usize) -> Option<usize> {
    let r = (n as f64).cbrt().round() as usize;
    for c in r.saturating_sub(1)..=r + 1 {
        if c * c * c == n {
            return Some(c);
        }
    }
    None
}

/// Check sum 1/cbrt(n_j) < 1/3, exactly in integers when every height is a
/// perfect cube, in floats (strict) otherwise.
pub fn admissible(heights: &[usize]) -> bool {
    if heights.is_empty() {
        return false;
    }
    let roots: Option<Vec<usize>> = heights.iter().map(|&h| exact_cbrt(h)).collect();
    if let Some(roots) = roots {
        // sum 1/r_j < 1/3  <=>  3 * sum L/r_j < L with L = product of roots.
        let l: u128 = roots.iter().map(|&r| r as u128).product();
        let total: u128 = roots.iter().map(|&r| l / r as u128).sum();
        3 * total < l
    } else {
        heights.iter().map(|&h| (h as f64).powf(-1.0 / 3.0)).sum::<f64>() < 1.0 / 3.0
    }
}

impl BadSet {
    pub fn max_bit_budget(&self) -> usize {
        self.towers
            .iter()
            .map(|t| t.cutoff + t.marker_len)
            .max()
            .unwrap_or(0)
    }

    /// Membership of the point with the given leading bits: in the bad slab
    /// of tower j iff some marker-j word starts within the first cutoff_j
    /// positions (equivalently, the level is at least height - cutoff).
    pub fn contains(&self, bits: &BitStream) -> bool {
        self.towers
            .iter()
            .any(|t| first_marker_in(bits, 0, t.cutoff, t.marker_len).is_some())
    }

    /// Indicator of the bad set along an orbit: b_i = 1 iff the shift of
    /// the stream by i bits lands in the bad set. Computed for all
    /// i < horizon with per-tower marker prefix counts, O(horizon * towers).
    pub fn orbit_indicator(&self, bits: &BitStream, horizon: usize) -> Vec<f64> {
        assert!(bits.len() >= horizon + self.max_bit_budget());
        let mut out = vec![0.0; horizon];
        for t in &self.towers {
            // marker_starts[p] = 1 iff a marker starts at position p;
            // prefix sums turn slab membership into a range query.
            let span = horizon + t.cutoff;
            let mut prefix = vec![0u32; span + 1];
            for p in 0..span {
                prefix[p + 1] = prefix[p] + u32::from(marker_at(bits, p, t.marker_len));
            }
            for (i, o) in out.iter_mut().enumerate() {
                if prefix[i + t.cutoff] > prefix[i] {
                    *o = 1.0;
                }
            }
        }
        out
    }
}

/// Build the bad set from tower heights (power-of-two heights recommended;
/// marker length is log2(height) rounded up).
pub fn build_bad_set(heights: &[usize]) -> Result<BadSet> {
    if heights.is_empty() || heights.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("heights must be strictly increasing and nonempty"));
    }
    if heights[0] < 2 {
        return Err(Error::invalid("tower heights must be at least 2"));
    }
    if !admissible(heights) {
        return Err(Error::invalid(
            "inadmissible heights: sum of height^(-1/3) must stay below 1/3",
        ));
    }
    let towers = heights
        .iter()
        .map(|&h| {
            let marker_len = (usize::BITS - (h - 1).leading_zeros()) as usize; // ceil(log2 h)
            let cutoff = (h as f64).powf(2.0 / 3.0).ceil() as usize;
            BadTower { height: h, marker_len, cutoff }
        })
        .collect();
    Ok(BadSet { towers })
}

/// Sampled measure of the bad set with a 95% Wilson interval:
/// (point estimate, lower, upper).
pub fn estimate_bad_measure(bad: &BadSet, samples: usize, master_seed: u64) -> (f64, f64, f64) {
    let budget = bad.max_bit_budget();
    let hits: usize = map_samples(samples, |i| {
        let mut rng = sample_rng(master_seed, i as u64);
        let bits = BitStream::random(&mut rng, budget);
        usize::from(bad.contains(&bits))
    })
    .into_iter()
    .sum();
    let (lo, hi) = wilson_interval(hits as u64, samples as u64);
    (hits as f64 / samples as f64, lo, hi)
}

/// Per-sample outcome of the harmonic-average probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSample {
    /// max over 2 <= n <= horizon of H_n 1_B =
    /// (1/log n) sum_{i<n} 1_B(tau^i omega)/(n-i).
    pub h_max: f64,
    /// Running max of V_n for the two-cell harmonic cocycle with
    /// A1 = complement of B.
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicExperiment {
    pub samples: Vec<HarmonicSample>,
    pub measure_estimate: f64,
    pub measure_ci: (f64, f64),
}

/// Run the probe: per sample, the full-grid harmonic averages of the bad
/// indicator and the cocycle growth with A1 = complement of B.
pub fn harmonic_sum_experiment(
    bad: &BadSet,
    samples: usize,
    horizon: usize,
    master_seed: u64,
) -> Result<HarmonicExperiment> {
    let max_height = bad.towers.iter().map(|t| t.height).max().unwrap_or(0);
    if horizon < max_height {
        return Err(Error::invalid(format!(
            "horizon {horizon} below tallest tower height {max_height}"
        )));
    }
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let budget = horizon + bad.max_bit_budget();
    // Kernels shared across samples.
    let inv: Vec<f64> = (1..=horizon).map(|m| 1.0 / m as f64).collect();
    let glog: Vec<f64> = (1..=horizon).map(|m| (1.0 + 2.0 / m as f64).ln()).collect();
    let per_sample = map_samples(samples, |i| {
        let mut rng = sample_rng(master_seed, i as u64);
        let bits = BitStream::random(&mut rng, budget);
        let b = bad.orbit_indicator(&bits, horizon);
        // H_n: convolution of the indicator with 1/m, normalized by log n.
        let conv_h = fft::convolve(&b, &inv);
        let mut h_max = 0.0f64;
        for n in 2..=horizon {
            h_max = h_max.max(conv_h[n - 1] / (n as f64).ln());
        }
        // V_n = -log(n+1) + sum_{i<n} log(1 + 2/(n-i)) * (1 - b_i).
        let a1: Vec<f64> = b.iter().map(|&v| 1.0 - v).collect();
        let conv_v = fft::convolve(&a1, &glog);
        let mut v_max = f64::NEG_INFINITY;
        for n in 1..=horizon {
            v_max = v_max.max(conv_v[n - 1] - ((n + 1) as f64).ln());
        }
        HarmonicSample { h_max, v_max }
    });
    let (est, lo, hi) = estimate_bad_measure(bad, 100_000, master_seed ^ 0x51a5_21e5);
    Ok(HarmonicExperiment {
        samples: per_sample,
        measure_estimate: est,
        measure_ci: (lo, hi),
    })
}

/// Direct evaluation of H_n 1_B from an indicator (test oracle).
pub fn harmonic_average_naive(b: &[f64], n: usize) -> f64 {
    let mut acc = KahanSum::new();
    for i in 0..n {
        acc.add(b[i] / (n - i) as f64);
    }
    acc.value() / (n as f64).ln()
}
