//! Named reproduction recipes: pinned experiment configurations whose
//! thresholds turn each studied growth and averaging phenomenon into a
//! one-command PASS/FAIL run.

use crate::averages::{
    clt_experiment, norlund_l2_experiment, norlund_mean_series, oxtoby_sup_experiment,
    NorlundWeights, TrigPoly,
};
use crate::cocycle::{log_product_commuting, log_product_series_naive, Cocycle};
use crate::config::{CheckpointSpec, ExperimentConfig, run_config};
use crate::ergodic::{
    halves_partition, parse_alpha, sample_point, sample_rng, symbol_stream, ErgodicSystem,
};
use crate::error::{Error, Result};
use crate::exec::map_samples;
use crate::report::ExperimentReport;
use crate::rokhlin::{admissible, build_bad_set, harmonic_sum_experiment};
use crate::spaces::{ClassifyPolicy, VerdictLabel};
use crate::util::KahanSum;
use crate::weights::WeightSequence;

pub const RECIPE_NAMES: &[&str] = &[
    "commuting-ladder",
    "lp-harmonic",
    "entire-poly",
    "entire-half",
    "norlund-l2",
    "oxtoby",
    "clt-doubling",
    "rokhlin-badset",
];

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct RecipeOutcome {
    pub recipe: String,
    pub checks: Vec<CheckResult>,
    pub report: Option<ExperimentReport>,
}

impl RecipeOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One PASS/FAIL line per check plus an overall line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {}: {} ({})\n",
                if c.passed { "PASS" } else { "FAIL" },
                self.recipe,
                c.name,
                c.detail
            ));
        }
        out.push_str(&format!(
            "{} {}\n",
            if self.passed() { "PASS" } else { "FAIL" },
            self.recipe
        ));
        out
    }
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.into(), passed, detail }
}

/// Run a named recipe with the given master seed (42 reproduces the pinned
/// acceptance numbers).
pub fn reproduce(name: &str, seed: u64) -> Result<RecipeOutcome> {
    match name {
        "commuting-ladder" => commuting_ladder(seed),
        "lp-harmonic" => lp_harmonic(seed),
        "entire-poly" => entire_poly(seed),
        "entire-half" => entire_half(seed),
        "norlund-l2" => norlund_l2(seed),
        "oxtoby" => oxtoby(seed),
        "clt-doubling" => clt_doubling(seed),
        "rokhlin-badset" => rokhlin_badset(seed),
        other => Err(Error::UnknownRecipe {
            name: other.into(),
            valid: RECIPE_NAMES.join(", "),
        }),
    }
}

/// Commuting pair w = 2v with v = 1 over the doubling map: the closed form
/// a1(n) log 2 must agree with the generic evaluator, and V_n/n must settle
/// at mu(A1) log 2 (the Birkhoff mean of the log-weight ratio).
fn commuting_ladder(seed: u64) -> Result<RecipeOutcome> {
    let horizon = 100_000usize;
    let samples = 64usize;
    let sys = ErgodicSystem::Doubling;
    let part = halves_partition();
    let v = WeightSequence::constant(1.0)?;
    let w = WeightSequence::scaled(v.clone(), 2.0)?;
    let cocycle = Cocycle::new(vec![w, v.clone()])?;
    let grid = CheckpointSpec::default().resolve(horizon)?;

    let per_sample: Vec<Result<(f64, f64)>> = map_samples(samples, |i| {
        let mut rng = sample_rng(seed, i as u64);
        let pt = sample_point(&sys, &mut rng);
        let s = symbol_stream(&sys, &part, &pt, horizon)?;
        let naive = log_product_series_naive(&cocycle, &s, &grid)?;
        let closed = log_product_commuting(2.0, &v, &s, &grid)?;
        let max_gap = naive
            .values
            .iter()
            .zip(closed.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let final_rate = naive.values.last().unwrap() / horizon as f64;
        Ok((max_gap, final_rate))
    });
    let results = per_sample.into_iter().collect::<Result<Vec<_>>>()?;
    let worst_gap = results.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let target = 0.5 * 2f64.ln();
    let in_band = results
        .iter()
        .filter(|r| (r.1 - target).abs() <= 0.01)
        .count();

    let checks = vec![
        check(
            "closed form agrees with triangular evaluator (<= 1e-9)",
            worst_gap <= 1e-9,
            format!("max gap {worst_gap:.3e} over {samples} samples"),
        ),
        check(
            "V_n/n within 0.01 of 0.5*ln 2 at n=1e5 for >= 90%",
            in_band * 10 >= samples * 9,
            format!("{in_band}/{samples} in band around {target:.6}"),
        ),
    ];
    Ok(RecipeOutcome { recipe: "commuting-ladder".into(), checks, report: None })
}

/// The pinned configuration behind the lp-harmonic recipe; public so the
/// determinism contract can be exercised end to end.
pub fn lp_harmonic_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        space: "lp:2".into(),
        system: "bernoulli:0.7,0.3".into(),
        partition: vec![],
        weights: vec!["harmonic-up".into(), "harmonic-down".into()],
        checkpoints: CheckpointSpec::default(),
        horizon: 100_000,
        samples: 64,
        master_seed: seed,
        full_grid: false,
        policy: None,
    }
}

/// Harmonic two-cell example at mu(A1) = 0.7: weak-mixing-or-better growth
/// evidence, harmonic-average concentration at 0.7, and the termwise
/// logarithm sandwich around V_n.
fn lp_harmonic(seed: u64) -> Result<RecipeOutcome> {
    let cfg = lp_harmonic_config(seed);
    let report = run_config(&cfg)?;
    let frac_wm = report.label_fraction(&[
        VerdictLabel::WeakMixingEvidence,
        VerdictLabel::MixingEvidence,
    ]);

    // Per sample: harmonic-weighted average of the cell-1 indicator at the
    // horizon, plus the sandwich bounds at every checkpoint.
    let rc = cfg.resolve()?;
    let per_sample: Vec<Result<(f64, f64)>> = map_samples(rc.samples, |i| {
        let mut rng = sample_rng(rc.master_seed, i as u64);
        let pt = sample_point(&rc.system, &mut rng);
        let s = symbol_stream(&rc.system, &rc.partition, &pt, rc.horizon)?;
        let f = s.indicator(1);
        let means = norlund_mean_series(&NorlundWeights::Harmonic, &f, rc.horizon)?;
        let m_final = means.values[rc.horizon - 1].unwrap();

        // V_n = -log(n+1) + sum_{i<n} log(1 + 2/(n-i)) 1_{A1}(tau^i omega);
        // log(1+x) in [x - x^2/2, x] termwise gives the sandwich.
        let mut worst_violation = 0.0f64;
        for &n in &rc.checkpoints {
            let mut v = KahanSum::new();
            let mut upper = KahanSum::new();
            let mut lower = KahanSum::new();
            for i in 0..n {
                if s.symbols[i] == 1 {
                    let x = 2.0 / (n - i) as f64;
                    v.add(x.ln_1p());
                    upper.add(x);
                    lower.add(x - x * x / 2.0);
                }
            }
            let base = -((n as f64 + 1.0).ln());
            let vn = base + v.value();
            let hi = base + upper.value();
            let lo = base + lower.value();
            worst_violation = worst_violation.max(vn - hi).max(lo - vn);
        }
        Ok((m_final, worst_violation))
    });
    let results = per_sample.into_iter().collect::<Result<Vec<_>>>()?;
    let n_band = results.iter().filter(|r| (r.0 - 0.7).abs() <= 0.05).count();
    let worst = results.iter().map(|r| r.1).fold(0.0f64, f64::max);

    let checks = vec![
        check(
            "weak-mixing-or-mixing evidence >= 90%",
            frac_wm >= 0.9,
            format!("{:.1}% of {} samples", frac_wm * 100.0, cfg.samples),
        ),
        check(
            "harmonic average of indicator within 0.05 of 0.7 at n=1e5 for >= 90%",
            n_band * 10 >= cfg.samples * 9,
            format!("{n_band}/{} in band", cfg.samples),
        ),
        check(
            "sandwich bounds hold at every checkpoint (<= 1e-9 slack)",
            worst <= 1e-9,
            format!("worst violation {worst:.3e}"),
        ),
    ];
    Ok(RecipeOutcome { recipe: "lp-harmonic".into(), checks, report: Some(report) })
}

fn entire_poly_config(mu1: f64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        space: "entire".into(),
        system: format!("bernoulli:{mu1},{}", 1.0 - mu1),
        partition: vec![],
        weights: vec!["poly".into(), "inv-poly".into()],
        checkpoints: CheckpointSpec::default(),
        horizon: 100_000,
        samples: 64,
        master_seed: seed,
        full_grid: false,
        policy: None,
    }
}

fn band_fraction(report: &ExperimentReport, center_scale: f64, tol: f64) -> (usize, usize) {
    let mut hits = 0;
    for s in &report.samples {
        let m = s.checkpoints.len();
        let ok = (m - 3..m).all(|j| {
            let n = s.checkpoints[j] as f64;
            (s.d[j] - center_scale * (n.ln() - 1.0)).abs() <= tol
        });
        if ok {
            hits += 1;
        }
    }
    (hits, report.samples.len())
}

/// Factorial-growth example on entire functions: at mu(A1) = 0.6 the
/// diagnostic V_n/n tracks 0.2(ln n - 1) and the verdict is mixing; the
/// mirrored mu(A1) = 0.4 run tracks the negative band and is non-universal.
fn entire_poly(seed: u64) -> Result<RecipeOutcome> {
    let up = run_config(&entire_poly_config(0.6, seed))?;
    let down = run_config(&entire_poly_config(0.4, seed))?;
    let (up_hits, n) = band_fraction(&up, 0.2, 0.15);
    let (down_hits, _) = band_fraction(&down, -0.2, 0.15);
    let frac_mix = up.label_fraction(&[VerdictLabel::MixingEvidence]);
    let frac_non = down.label_fraction(&[VerdictLabel::NonUniversalEvidence]);
    let checks = vec![
        check(
            "mu=0.6: D_n within 0.15 of 0.2(ln n - 1) at last 3 checkpoints for >= 90%",
            up_hits * 10 >= n * 9,
            format!("{up_hits}/{n} in band"),
        ),
        check(
            "mu=0.6: mixing evidence >= 90%",
            frac_mix >= 0.9,
            format!("{:.1}%", frac_mix * 100.0),
        ),
        check(
            "mu=0.4: D_n within 0.15 of -0.2(ln n - 1) at last 3 checkpoints for >= 90%",
            down_hits * 10 >= n * 9,
            format!("{down_hits}/{n} in band"),
        ),
        check(
            "mu=0.4: non-universal evidence >= 90%",
            frac_non >= 0.9,
            format!("{:.1}%", frac_non * 100.0),
        ),
    ];
    Ok(RecipeOutcome { recipe: "entire-poly".into(), checks, report: Some(up) })
}

fn entire_half_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        space: "entire".into(),
        system: "doubling".into(),
        partition: vec!["1:[0,0.5)".into(), "2:[0.5,1)".into()],
        weights: vec!["poly".into(), "inv-poly".into()],
        // Early checkpoints carry noise of scale ln(n)/sqrt(n); starting at
        // 1024 keeps the running max of honest non-universal samples below
        // the boundedness threshold.
        checkpoints: CheckpointSpec::Geometric("geo:1024:2".into()),
        horizon: 100_000,
        samples: 200,
        master_seed: seed,
        full_grid: false,
        policy: None,
    }
}

/// The balanced mu = 1/2 doubling-map case: the diagnostic collapses to
/// noise of scale ln(n)/sqrt(n) (~0.036 at n = 1e5) and the verdict is
/// non-universal.
fn entire_half(seed: u64) -> Result<RecipeOutcome> {
    let cfg = entire_half_config(seed);
    let report = run_config(&cfg)?;
    let small = report
        .samples
        .iter()
        .filter(|s| s.d.last().unwrap().abs() <= 0.15)
        .count();
    let frac_non = report.label_fraction(&[VerdictLabel::NonUniversalEvidence]);
    let checks = vec![
        check(
            "|D_1e5| <= 0.15 for >= 95%",
            small * 20 >= cfg.samples * 19,
            format!("{small}/{} small", cfg.samples),
        ),
        check(
            "non-universal evidence >= 90%",
            frac_non >= 0.9,
            format!("{:.1}%", frac_non * 100.0),
        ),
    ];
    Ok(RecipeOutcome { recipe: "entire-half".into(), checks, report: Some(report) })
}

/// Harmonic Nörlund means of a balanced indicator converge in L²: the
/// empirical RMS error must be small at n = 1e5 and non-increasing (with
/// 10% slack) across the decade grid.
fn norlund_l2(seed: u64) -> Result<RecipeOutcome> {
    let sys = ErgodicSystem::bernoulli(vec![0.5, 0.5])?;
    let part = sys.implicit_partition().unwrap();
    let errs = norlund_l2_experiment(
        &sys,
        &part,
        &NorlundWeights::Harmonic,
        &[1_000, 10_000, 100_000],
        100,
        seed,
    )?;
    let final_err = errs.last().unwrap().1;
    let monotone = errs.windows(2).all(|w| w[1].1 <= 1.1 * w[0].1);
    let detail: Vec<String> = errs.iter().map(|(n, e)| format!("e({n})={e:.4}")).collect();
    let checks = vec![
        check(
            "L2 error <= 0.05 at n=1e5",
            final_err <= 0.05,
            detail.join(", "),
        ),
        check(
            "L2 error non-increasing across decades (10% slack)",
            monotone,
            detail.join(", "),
        ),
    ];
    Ok(RecipeOutcome { recipe: "norlund-l2".into(), checks, report: None })
}

/// Uniform convergence over all starting points for the golden-mean
/// rotation, cos(2 pi x), harmonic weights: the sup over 512 grid starts
/// must be small. Deterministic; the seed is unused.
fn oxtoby(_seed: u64) -> Result<RecipeOutcome> {
    let sys = ErgodicSystem::rotation(parse_alpha("golden")?)?;
    let dev = oxtoby_sup_experiment(
        &sys,
        &TrigPoly::cos_wave(),
        &NorlundWeights::Harmonic,
        100_000,
        512,
    )?;
    let checks = vec![check(
        "sup deviation over 512 starts <= 0.05 at n=1e5",
        dev <= 0.05,
        format!("sup deviation {dev:.5}"),
    )];
    Ok(RecipeOutcome { recipe: "oxtoby".into(), checks, report: None })
}

/// Standardized centered sums of the half-indicator under the doubling map
/// approach the standard normal: KS distance small at n = 4096 and
/// non-increasing (20% slack) along the grid.
fn clt_doubling(seed: u64) -> Result<RecipeOutcome> {
    let sys = ErgodicSystem::Doubling;
    let part = halves_partition();
    let pts = clt_experiment(&sys, &part, &[256, 1024, 4096], 2000, seed)?;
    let final_ks = pts.last().unwrap().ks_distance;
    let monotone = pts.windows(2).all(|w| w[1].ks_distance <= 1.2 * w[0].ks_distance);
    let detail: Vec<String> = pts
        .iter()
        .map(|p| format!("ks({})={:.4}", p.n, p.ks_distance))
        .collect();
    let checks = vec![
        check("KS distance <= 0.08 at n=4096", final_ks <= 0.08, detail.join(", ")),
        check(
            "KS non-increasing along the grid (20% slack)",
            monotone,
            detail.join(", "),
        ),
    ];
    Ok(RecipeOutcome { recipe: "clt-doubling".into(), checks, report: None })
}

/// The marker-tower bad set: admissible heights, measure below 1/3, large
/// harmonic averages on most samples, and simultaneous weak-mixing growth
/// of the two-cell harmonic cocycle with A1 = complement of B.
fn rokhlin_badset(seed: u64) -> Result<RecipeOutcome> {
    let heights = [512usize, 4096, 32768];
    let admissible_ok = admissible(&heights);
    let bad = build_bad_set(&heights)?;
    let out = harmonic_sum_experiment(&bad, 200, 32768, seed)?;
    let theta_up = ClassifyPolicy::default().theta_up;
    let h_hits = out.samples.iter().filter(|s| s.h_max >= 0.6).count();
    let v_hits = out.samples.iter().filter(|s| s.v_max >= theta_up).count();
    let n = out.samples.len();
    let checks = vec![
        check(
            "heights admissible: sum of height^(-1/3) = 0.21875 < 1/3",
            admissible_ok,
            format!("heights {heights:?}"),
        ),
        check(
            "sampled measure of B below 1/3 (Wilson 95% upper bound)",
            out.measure_ci.1 < 1.0 / 3.0,
            format!(
                "estimate {:.4}, CI ({:.4}, {:.4})",
                out.measure_estimate, out.measure_ci.0, out.measure_ci.1
            ),
        ),
        check(
            "harmonic average max >= 0.6 on >= 70% of samples",
            h_hits * 10 >= n * 7,
            format!("{h_hits}/{n}"),
        ),
        check(
            "cocycle running max >= threshold on >= 60% of samples",
            v_hits * 10 >= n * 6,
            format!("{v_hits}/{n} with threshold {theta_up}"),
        ),
    ];
    Ok(RecipeOutcome { recipe: "rokhlin-badset".into(), checks, report: None })
}
