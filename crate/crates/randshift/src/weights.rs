//! Weight families w = (w_n) for backward shifts, accessed only through
//! log-magnitudes and prefix log-sums.

use crate::error::{Error, Result};
use crate::util::kahan_sum;
use statrs::function::gamma::ln_gamma;
use std::path::Path;

/// Tail behaviour of a tabulated weight family beyond the stored entries.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    /// log|w_n| repeats the last tabulated value.
    RepeatLast,
    /// log|w_n| equals the given constant.
    Constant(f64),
}

/// A nonvanishing weight family. Only |w_n| matters for every criterion in
/// use, so signs and phases are dropped at construction.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSequence {
    /// w_n = c, c != 0.
    Constant(f64),
    /// w_n = c * base_n.
    Scaled { base: Box<WeightSequence>, factor: f64 },
    /// w_n = 1 + 1/(n+1).
    HarmonicUp,
    /// w_n = 1 - 1/(n+1).
    HarmonicDown,
    /// w_n = n.
    Poly,
    /// w_n = 1/n.
    InvPoly,
    /// Explicit table of log-magnitudes with a total tail rule.
    Tabulated {
        logs: Vec<f64>,
        /// Cached prefix sums of `logs` (cum[i] = sum of logs[..=i]).
        cum: Vec<f64>,
        tail: TailRule,
    },
}

impl WeightSequence {
    pub fn constant(c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::invalid(format!("constant weight must be nonzero finite, got {c}")));
        }
        Ok(WeightSequence::Constant(c))
    }

    pub fn scaled(base: WeightSequence, factor: f64) -> Result<Self> {
        if factor == 0.0 || !factor.is_finite() {
            return Err(Error::invalid(format!("scale factor must be nonzero finite, got {factor}")));
        }
        Ok(WeightSequence::Scaled { base: Box::new(base), factor })
    }

    pub fn tabulated(logs: Vec<f64>, tail: TailRule) -> Result<Self> {
        if logs.is_empty() {
            return Err(Error::invalid("tabulated weights need at least one entry"));
        }
        if logs.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated log-magnitudes must be finite"));
        }
        if let TailRule::Constant(v) = tail {
            if !v.is_finite() {
                return Err(Error::invalid("tail log-magnitude must be finite"));
            }
        }
        let mut cum = Vec::with_capacity(logs.len());
        let mut acc = crate::util::KahanSum::new();
        for &v in &logs {
            acc.add(v);
            cum.push(acc.value());
        }
        Ok(WeightSequence::Tabulated { logs, cum, tail })
    }

    /// log|w_n|, n >= 1.
    pub fn log_weight(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("weight index starts at 1"));
        }
        Ok(match self {
            WeightSequence::Constant(c) => c.abs().ln(),
            WeightSequence::Scaled { base, factor } => {
                factor.abs().ln() + base.log_weight(n)?
            }
            WeightSequence::HarmonicUp => (1.0 + 1.0 / (n as f64 + 1.0)).ln(),
            WeightSequence::HarmonicDown => (1.0 - 1.0 / (n as f64 + 1.0)).ln(),
            WeightSequence::Poly => (n as f64).ln(),
            WeightSequence::InvPoly => -(n as f64).ln(),
            WeightSequence::Tabulated { logs, tail, .. } => {
                if n <= logs.len() {
                    logs[n - 1]
                } else {
                    match tail {
                        TailRule::RepeatLast => *logs.last().unwrap(),
                        TailRule::Constant(v) => *v,
                    }
                }
            }
        })
    }

    /// Sum_{l=1..n} log|w_l|, via closed forms where the kind admits one.
    pub fn prefix_log_sum(&self, n: usize) -> f64 {
        match self {
            WeightSequence::Constant(c) => n as f64 * c.abs().ln(),
            WeightSequence::Scaled { base, factor } => {
                n as f64 * factor.abs().ln() + base.prefix_log_sum(n)
            }
            // prod_{l=1..n} (l+2)/(l+1) telescopes to (n+2)/2.
            WeightSequence::HarmonicUp => ((n as f64 + 2.0) / 2.0).ln(),
            // prod_{l=1..n} l/(l+1) telescopes to 1/(n+1).
            WeightSequence::HarmonicDown => -(n as f64 + 1.0).ln(),
            WeightSequence::Poly => ln_gamma(n as f64 + 1.0),
            WeightSequence::InvPoly => -ln_gamma(n as f64 + 1.0),
            WeightSequence::Tabulated { logs, cum, tail } => {
                if n == 0 {
                    0.0
                } else if n <= logs.len() {
                    cum[n - 1]
                } else {
                    let tail_log = match tail {
                        TailRule::RepeatLast => *logs.last().unwrap(),
                        TailRule::Constant(v) => *v,
                    };
                    cum[logs.len() - 1] + (n - logs.len()) as f64 * tail_log
                }
            }
        }
    }

    /// Naive O(n) prefix sum; test oracle for the closed forms.
    pub fn prefix_log_sum_naive(&self, n: usize) -> f64 {
        kahan_sum((1..=n).map(|l| self.log_weight(l).unwrap()))
    }

    /// sup_n log|w_n|, or None when the family is unbounded.
    pub fn sup_log(&self) -> Option<f64> {
        match self {
            WeightSequence::Constant(c) => Some(c.abs().ln()),
            WeightSequence::Scaled { base, factor } => {
                base.sup_log().map(|s| s + factor.abs().ln())
            }
            // Maximum at n = 1: w_1 = 3/2.
            WeightSequence::HarmonicUp => Some(1.5f64.ln()),
            // w_n increases to 1; sup log = 0, not attained.
            WeightSequence::HarmonicDown => Some(0.0),
            WeightSequence::Poly => None,
            // Maximum at n = 1: w_1 = 1.
            WeightSequence::InvPoly => Some(0.0),
            WeightSequence::Tabulated { logs, tail, .. } => {
                let mut m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if let TailRule::Constant(v) = tail {
                    m = m.max(*v);
                }
                Some(m)
            }
        }
    }

    /// Whether (w_n) is a bounded sequence.
    pub fn bounded(&self) -> bool {
        self.sup_log().is_some()
    }

    /// Whether sup_n |w_n|^{1/n} < infinity. True for every built-in kind:
    /// even w_n = n satisfies n^{1/n} -> 1.
    pub fn root_bounded(&self) -> bool {
        match self {
            WeightSequence::Scaled { base, .. } => base.root_bounded(),
            _ => true,
        }
    }

    /// Parse the config mini-grammar: "const:<c>", "harmonic-up",
    /// "harmonic-down", "poly", "inv-poly", "scale:<c>:<kind>",
    /// "table:<path>".
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "harmonic-up" => return Ok(WeightSequence::HarmonicUp),
            "harmonic-down" => return Ok(WeightSequence::HarmonicDown),
            "poly" => return Ok(WeightSequence::Poly),
            "inv-poly" => return Ok(WeightSequence::InvPoly),
            _ => {}
        }
        if let Some(rest) = spec.strip_prefix("const:") {
            let c: f64 = rest
                .parse()
                .map_err(|_| Error::Parse(format!("bad constant weight {rest:?}")))?;
            return WeightSequence::constant(c);
        }
        if let Some(rest) = spec.strip_prefix("scale:") {
            let (c_str, inner) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("scale needs \"scale:<c>:<kind>\", got {spec:?}")))?;
            let c: f64 = c_str
                .parse()
                .map_err(|_| Error::Parse(format!("bad scale factor {c_str:?}")))?;
            return WeightSequence::scaled(WeightSequence::parse(inner)?, c);
        }
        if let Some(path) = spec.strip_prefix("table:") {
            return WeightSequence::from_table_file(Path::new(path));
        }
        Err(Error::Parse(format!("unknown weight kind {spec:?}")))
    }

    /// Load a tabulated family: first line "tail: repeat-last" or
    /// "tail: const:<v>", then one log-magnitude per line.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty weight table".into()))?;
        let tail_spec = header
            .trim()
            .strip_prefix("tail:")
            .ok_or_else(|| Error::Parse("weight table must start with a \"tail:\" header".into()))?
            .trim();
        let tail = if tail_spec == "repeat-last" {
            TailRule::RepeatLast
        } else if let Some(v) = tail_spec.strip_prefix("const:") {
            TailRule::Constant(
                v.parse()
                    .map_err(|_| Error::Parse(format!("bad tail constant {v:?}")))?,
            )
        } else {
            return Err(Error::Parse(format!("unknown tail rule {tail_spec:?}")));
        };
        let logs = lines
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad log-magnitude line {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        WeightSequence::tabulated(logs, tail)
    }
}
