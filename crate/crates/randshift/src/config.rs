//! Experiment configuration: TOML schema, validation, and the
//! ergodic -> cocycle -> spaces -> verdict pipeline.

use crate::cocycle::{
    log_product_full_fast, log_product_series_naive, Cocycle, LogProductSeries,
};
use crate::ergodic::{sample_point, sample_rng, symbol_stream, ErgodicSystem, Partition};
use crate::error::{Error, Result};
use crate::exec::map_samples;
use crate::report::{ExperimentReport, SampleRecord};
use crate::spaces::{classify_series, diagnostic_series, ClassifyPolicy, SpaceKind};
use crate::util::geometric_grid;
use crate::weights::WeightSequence;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Checkpoint grid: an explicit list or a geometric spec "geo:<base>:<ratio>"
/// filled up to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckpointSpec {
    Geometric(String),
    List(Vec<usize>),
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        CheckpointSpec::Geometric("geo:64:2".into())
    }
}

impl CheckpointSpec {
    pub fn resolve(&self, horizon: usize) -> Result<Vec<usize>> {
        match self {
            CheckpointSpec::Geometric(spec) => {
                let rest = spec.strip_prefix("geo:").ok_or_else(|| {
                    Error::Parse(format!("geometric grid spec must be \"geo:<base>:<ratio>\", got {spec:?}"))
                })?;
                let (base_s, ratio_s) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bad grid spec {spec:?}")))?;
                let base: usize = base_s
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad grid base {base_s:?}")))?;
                let ratio: usize = ratio_s
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad grid ratio {ratio_s:?}")))?;
                if base < 1 || ratio < 2 {
                    return Err(Error::invalid("grid needs base >= 1 and ratio >= 2"));
                }
                Ok(geometric_grid(base.min(horizon), ratio, horizon))
            }
            CheckpointSpec::List(list) => {
                if list.is_empty()
                    || list[0] == 0
                    || list.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::invalid(
                        "checkpoint list must be strictly increasing, >= 1",
                    ));
                }
                if *list.last().unwrap() > horizon {
                    return Err(Error::invalid("checkpoint exceeds horizon"));
                }
                Ok(list.clone())
            }
        }
    }
}

/// Declarative experiment description, deserialized from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// "lp:<p>" | "c0" | "entire" | "full".
    pub space: String,
    /// "doubling" | "rotation:<alpha>" | "bernoulli:<p1,..>" | "explicit:<path>".
    pub system: String,
    /// Cells "l:[a,b)+..."; omitted when the driver implies the partition.
    #[serde(default)]
    pub partition: Vec<String>,
    /// One weight-family spec per cell.
    pub weights: Vec<String>,
    #[serde(default)]
    pub checkpoints: CheckpointSpec,
    pub horizon: usize,
    pub samples: usize,
    pub master_seed: u64,
    /// Evaluate V on the full grid 1..=horizon (two-cell cocycles only) and
    /// classify on it, instead of the checkpoint grid.
    #[serde(default)]
    pub full_grid: bool,
    #[serde(default)]
    pub policy: Option<ClassifyPolicy>,
}

/// Everything parsed and cross-validated, ready to run.
pub struct ResolvedConfig {
    pub space: SpaceKind,
    pub system: ErgodicSystem,
    pub partition: Partition,
    pub cocycle: Cocycle,
    pub checkpoints: Vec<usize>,
    pub horizon: usize,
    pub samples: usize,
    pub master_seed: u64,
    pub full_grid: bool,
    pub policy: ClassifyPolicy,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let space = SpaceKind::parse(&self.space)?;
        let system = ErgodicSystem::parse(&self.system)?;
        let partition = if self.partition.is_empty() {
            system.implicit_partition().ok_or_else(|| {
                Error::invalid("this driver needs an explicit partition")
            })?
        } else {
            if system.implicit_partition().is_some() {
                return Err(Error::invalid(
                    "driver carries its own partition; drop the partition field",
                ));
            }
            Partition::parse(&self.partition)?
        };
        let weights = self
            .weights
            .iter()
            .map(|w| WeightSequence::parse(w))
            .collect::<Result<Vec<_>>>()?;
        if weights.len() != partition.cell_count() {
            return Err(Error::invalid(format!(
                "{} weight families for {} cells",
                weights.len(),
                partition.cell_count()
            )));
        }
        for w in &weights {
            if !space.continuity_on(w) {
                return Err(Error::DiscontinuousShift {
                    space: space.name(),
                    reason: "a weight family violates the continuity criterion".into(),
                });
            }
        }
        let cocycle = Cocycle::new(weights)?;
        if self.samples == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        let checkpoints = self.checkpoints.resolve(self.horizon)?;
        if self.full_grid && cocycle.arity() != 2 {
            return Err(Error::UnsupportedArity(cocycle.arity()));
        }
        let policy = self.policy.unwrap_or_default();
        policy.validate()?;
        Ok(ResolvedConfig {
            space,
            system,
            partition,
            cocycle,
            checkpoints,
            horizon: self.horizon,
            samples: self.samples,
            master_seed: self.master_seed,
            full_grid: self.full_grid,
            policy,
        })
    }
}

/// Run one sample end to end; used by the fan-out below.
fn run_sample(rc: &ResolvedConfig, index: usize) -> Result<SampleRecord> {
    let mut rng = sample_rng(rc.master_seed, index as u64);
    let pt = sample_point(&rc.system, &mut rng);
    let s = symbol_stream(&rc.system, &rc.partition, &pt, rc.horizon)?;
    let (series, classify_on) = if rc.full_grid {
        let full = log_product_full_fast(&rc.cocycle, &s, rc.horizon)?;
        let values = rc.checkpoints.iter().map(|&n| full[n - 1]).collect();
        let at_checkpoints = LogProductSeries::new(rc.checkpoints.clone(), values)?;
        let full_series = LogProductSeries::new((1..=rc.horizon).collect(), full)?;
        (at_checkpoints, full_series)
    } else {
        let series = log_product_series_naive(&rc.cocycle, &s, &rc.checkpoints)?;
        (series.clone(), series)
    };
    let d_full = diagnostic_series(rc.space, &classify_on)?;
    let verdict = classify_series(&d_full, &rc.policy)?;
    let d = diagnostic_series(rc.space, &series)?;
    Ok(SampleRecord {
        sample_id: index,
        checkpoints: series.checkpoints,
        v: series.values,
        d: d.values,
        verdict,
    })
}

/// Run the whole experiment: per-sample simulation in parallel, deterministic
/// index-ordered aggregation.
pub fn run_config(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rc = cfg.resolve()?;
    let start = std::time::Instant::now();
    let samples: Vec<Result<SampleRecord>> =
        map_samples(rc.samples, |i| run_sample(&rc, i));
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::assemble(
        cfg.clone(),
        samples,
        start.elapsed().as_millis() as u64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::VerdictLabel;

    const BASIC: &str = r#"
space = "lp:2"
system = "bernoulli:0.5,0.5"
weights = ["const:2", "const:2"]
horizon = 4096
samples = 8
master_seed = 7
"#;

    #[test]
    fn parse_and_run_basic_config() {
        let cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        let report = run_config(&cfg).unwrap();
        assert_eq!(report.samples.len(), 8);
        // w = 2 on both cells: V_n = n ln 2, mixing everywhere.
        assert!(report
            .samples
            .iter()
            .all(|s| s.verdict.label == VerdictLabel::MixingEvidence));
    }

    #[test]
    fn checkpoint_specs() {
        let spec = CheckpointSpec::Geometric("geo:64:2".into());
        assert_eq!(spec.resolve(256).unwrap(), vec![64, 128, 256]);
        let list = CheckpointSpec::List(vec![10, 20, 30]);
        assert_eq!(list.resolve(30).unwrap(), vec![10, 20, 30]);
        assert!(list.resolve(25).is_err());
        assert!(CheckpointSpec::Geometric("geo:0:2".into()).resolve(10).is_err());
        assert!(CheckpointSpec::List(vec![]).resolve(10).is_err());
    }

    #[test]
    fn validation_failures() {
        // Wrong number of weight families.
        let bad = BASIC.replace(
            "weights = [\"const:2\", \"const:2\"]",
            "weights = [\"const:2\"]",
        );
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        assert!(cfg.resolve().is_err());
        // Discontinuous shift on lp.
        let bad = BASIC.replace("const:2\", \"const:2", "poly\", \"const:2");
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::DiscontinuousShift { .. })));
        // Redundant explicit partition for a Bernoulli driver.
        let mut cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        cfg.partition = vec!["1:[0,0.5)".into(), "2:[0.5,1)".into()];
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn full_grid_matches_checkpoint_values() {
        let mut cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        cfg.samples = 2;
        let plain = run_config(&cfg).unwrap();
        cfg.full_grid = true;
        let full = run_config(&cfg).unwrap();
        for (a, b) in plain.samples.iter().zip(full.samples.iter()) {
            assert_eq!(a.checkpoints, b.checkpoints);
            for (x, y) in a.v.iter().zip(b.v.iter()) {
                assert!((x - y).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn determinism_across_runs() {
        let cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        let r1 = run_config(&cfg).unwrap();
        let r2 = run_config(&cfg).unwrap();
        assert_eq!(r1.samples, r2.samples);
    }
}
