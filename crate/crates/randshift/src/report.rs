//! Experiment reports: JSON and CSV emission with reproducible bytes.

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::spaces::{SpaceVerdict, VerdictLabel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One Monte Carlo sample: V and D at the checkpoints plus the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub checkpoints: Vec<usize>,
    pub v: Vec<f64>,
    pub d: Vec<f64>,
    pub verdict: SpaceVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub samples: Vec<SampleRecord>,
    /// label -> count over samples.
    pub verdict_histogram: BTreeMap<String, usize>,
    /// Wall time is environment noise: excluded from byte comparisons.
    pub wall_time_ms: u64,
}

impl ExperimentReport {
    pub fn assemble(
        config: ExperimentConfig,
        mut samples: Vec<SampleRecord>,
        wall_time_ms: u64,
    ) -> Self {
        samples.sort_by_key(|s| s.sample_id);
        let mut verdict_histogram = BTreeMap::new();
        for s in &samples {
            *verdict_histogram
                .entry(s.verdict.label.to_string())
                .or_insert(0) += 1;
        }
        ExperimentReport {
            version: ARTIFACT_VERSION.into(),
            config,
            samples,
            verdict_histogram,
            wall_time_ms,
        }
    }

    pub fn label_fraction(&self, accept: &[VerdictLabel]) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let hits = self
            .samples
            .iter()
            .filter(|s| accept.contains(&s.verdict.label))
            .count();
        hits as f64 / self.samples.len() as f64
    }

    /// JSON with the wall-time field zeroed, for byte-identical comparisons.
    pub fn to_json_stable(&self) -> String {
        let mut clone = self.clone();
        clone.wall_time_ms = 0;
        // serde_json floats use the shortest round-trip representation,
        // which is deterministic across runs and platforms.
        let mut s = serde_json::to_string_pretty(&clone).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// CSV rows sample_id,n,V,D,label with 17-significant-digit floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample_id,n,V,D,label\n");
        for s in &self.samples {
            for (j, &n) in s.checkpoints.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{:.16e},{:.16e},{}\n",
                    s.sample_id, n, s.v[j], s.d[j], s.verdict.label
                ));
            }
        }
        out
    }

    pub fn emit(&self, format: OutputFormat, path: &Path) -> Result<()> {
        let bytes = match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json_stable(),
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(bytes.as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}
