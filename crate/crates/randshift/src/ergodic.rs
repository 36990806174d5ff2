//! Ergodic drivers producing exact symbol streams s_i = cell(tau^i x).
//!
//! The doubling map is iterated on explicit bit streams and the rotation on
//! 128-bit fixed-point fractions, so iterating tau loses no precision over
//! the simulation horizon. Floating point is never used for orbits.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;

/// Fractional part of the golden mean conjugate (sqrt(5)-1)/2 as a 128-bit
/// fixed-point fraction (floor(frac * 2^128)).
pub const GOLDEN_FRAC: u128 = 0x9e3779b97f4a7c15f39cc0605cedc834;
/// sqrt(2) - 1 as a 128-bit fixed-point fraction.
pub const SQRT2M1_FRAC: u128 = 0x6a09e667f3bcc908b2fb1366ea957d3e;

/// Doubling-map bit budget: horizons above this would make single orbits
/// unreasonably large in memory.
pub const MAX_DOUBLING_HORIZON: usize = 1 << 22;

/// Build the per-sample rng stream: one master seed, one independent
/// counter-based stream per sample index. Bit-reproducible across platforms
/// and worker counts.
pub fn sample_rng(master_seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(sample_index);
    rng
}

/// Half-open dyadic interval [start, end) of [0,1) in 128-bit fixed point.
/// `end == 0` encodes the endpoint 1.0 (i.e. 2^128).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: u128,
    pub end: u128,
}

impl Interval {
    pub fn contains(&self, x: u128) -> bool {
        if self.end == 0 {
            // [start, 1)
            x >= self.start
        } else {
            self.start <= x && x < self.end
        }
    }

    /// Lebesgue measure as f64 (reporting only; membership stays exact).
    pub fn measure(&self) -> f64 {
        let len = if self.end == 0 {
            if self.start == 0 {
                return 1.0;
            }
            0u128.wrapping_sub(self.start)
        } else {
            self.end - self.start
        };
        len as f64 / 2f64.powi(128)
    }
}

/// Parse a fraction in [0,1] to 128-bit fixed point. Accepts decimals
/// ("0.5", "1", ".25") and the named constants "golden" and "sqrt2m1".
/// Returns (value, is_one): the endpoint 1.0 is reported via the flag
/// because it is not representable as a u128 fraction.
pub fn parse_fraction(s: &str) -> Result<(u128, bool)> {
    let s = s.trim();
    match s {
        "golden" => return Ok((GOLDEN_FRAC, false)),
        "sqrt2m1" => return Ok((SQRT2M1_FRAC, false)),
        _ => {}
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if !int_part.chars().all(|c| c.is_ascii_digit()) && !int_part.is_empty()
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || (int_part.is_empty() && frac_part.is_empty())
    {
        return Err(Error::Parse(format!("bad fraction {s:?}")));
    }
    let int_val: u32 = if int_part.is_empty() {
        0
    } else {
        int_part
            .parse()
            .map_err(|_| Error::Parse(format!("bad fraction {s:?}")))?
    };
    if int_val > 1 || (int_val == 1 && frac_part.chars().any(|c| c != '0')) {
        return Err(Error::Parse(format!("fraction {s:?} exceeds 1")));
    }
    if int_val == 1 {
        return Ok((0, true));
    }
    if frac_part.is_empty() {
        return Ok((0, false));
    }
    // floor(digits / 10^d * 2^128), exactly in big integers.
    let digits = BigUint::parse_bytes(frac_part.as_bytes(), 10)
        .ok_or_else(|| Error::Parse(format!("bad fraction {s:?}")))?;
    let denom = BigUint::from(10u32).pow(frac_part.len() as u32);
    let scaled = (digits << 128u32) / denom;
    let mut val: u128 = 0;
    for (i, d) in scaled.to_u64_digits().iter().enumerate() {
        if i >= 2 {
            return Err(Error::Parse(format!("fraction {s:?} exceeds 1")));
        }
        val |= (*d as u128) << (64 * i);
    }
    Ok((val, false))
}

/// Rotation parameter: parsed fraction forced odd so the orbit of the
/// wrap-around addition has exact period 2^128 (no dyadic-rational alpha
/// can slip in).
pub fn parse_alpha(s: &str) -> Result<u128> {
    let (v, is_one) = parse_fraction(s)?;
    if is_one || v == 0 {
        return Err(Error::invalid("rotation parameter must lie strictly in (0,1)"));
    }
    Ok(v | 1)
}

/// A finite partition of [0,1) into k cells, each a finite union of
/// half-open intervals — or implicit when the driver emits symbols directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Partition {
    Explicit { cells: Vec<Vec<Interval>> },
    Implicit { k: usize },
}

impl Partition {
    /// Validate disjointness and full coverage of [0,1), then construct.
    pub fn explicit(cells: Vec<Vec<Interval>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::invalid("partition needs at least one cell"));
        }
        let mut pieces: Vec<(u128, u128, usize)> = Vec::new();
        for (ci, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::invalid(format!("cell {} is empty", ci + 1)));
            }
            for iv in cell {
                if iv.end != 0 && iv.start >= iv.end {
                    return Err(Error::invalid(format!(
                        "cell {} has an empty or inverted interval",
                        ci + 1
                    )));
                }
                pieces.push((iv.start, iv.end, ci));
            }
        }
        pieces.sort_by_key(|p| p.0);
        if pieces[0].0 != 0 {
            return Err(Error::invalid("partition does not cover 0"));
        }
        for w in pieces.windows(2) {
            if w[0].1 == 0 || w[0].1 != w[1].0 {
                return Err(Error::invalid(
                    "partition cells must tile [0,1) with no gaps or overlaps",
                ));
            }
        }
        if pieces.last().unwrap().1 != 0 {
            return Err(Error::invalid("partition does not reach 1"));
        }
        Ok(Partition::Explicit { cells })
    }

    pub fn implicit(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("partition needs at least one cell"));
        }
        Ok(Partition::Implicit { k })
    }

    pub fn cell_count(&self) -> usize {
        match self {
            Partition::Explicit { cells } => cells.len(),
            Partition::Implicit { k } => *k,
        }
    }

    /// Cell index (1-based) of the fixed-point fraction x.
    pub fn cell_of(&self, x: u128) -> u8 {
        match self {
            Partition::Explicit { cells } => {
                for (ci, cell) in cells.iter().enumerate() {
                    if cell.iter().any(|iv| iv.contains(x)) {
                        return (ci + 1) as u8;
                    }
                }
                unreachable!("validated partition covers [0,1)")
            }
            Partition::Implicit { .. } => {
                panic!("implicit partition has no interval structure")
            }
        }
    }

    /// Lebesgue measures of the cells (explicit partitions only).
    pub fn measures(&self) -> Option<Vec<f64>> {
        match self {
            Partition::Explicit { cells } => Some(
                cells
                    .iter()
                    .map(|cell| cell.iter().map(Interval::measure).sum())
                    .collect(),
            ),
            Partition::Implicit { .. } => None,
        }
    }

    /// Parse a list of cell specs "l:[a,b)+[c,d)+..."; cells must be
    /// numbered 1..k in some order.
    pub fn parse(specs: &[String]) -> Result<Self> {
        let k = specs.len();
        let mut cells: Vec<Option<Vec<Interval>>> = vec![None; k];
        for spec in specs {
            let (idx_str, rest) = spec
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("cell spec needs \"l:[a,b)\", got {spec:?}")))?;
            let idx: usize = idx_str
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad cell index {idx_str:?}")))?;
            if idx == 0 || idx > k {
                return Err(Error::Parse(format!("cell index {idx} out of range 1..{k}")));
            }
            if cells[idx - 1].is_some() {
                return Err(Error::Parse(format!("cell {idx} specified twice")));
            }
            let mut ivs = Vec::new();
            for part in rest.split('+') {
                let part = part.trim();
                let inner = part
                    .strip_prefix('[')
                    .and_then(|p| p.strip_suffix(')'))
                    .ok_or_else(|| {
                        Error::Parse(format!("interval must be half-open \"[a,b)\", got {part:?}"))
                    })?;
                let (a_str, b_str) = inner
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("interval needs two endpoints: {part:?}")))?;
                let (a, a_one) = parse_fraction(a_str)?;
                let (b, b_one) = parse_fraction(b_str)?;
                if a_one {
                    return Err(Error::Parse("interval cannot start at 1".into()));
                }
                let end = if b_one { 0 } else { b };
                ivs.push(Interval { start: a, end });
            }
            cells[idx - 1] = Some(ivs);
        }
        let cells = cells
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| Error::Parse(format!("cell {} missing", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Partition::explicit(cells)
    }
}

/// An ergodic system driving the random product.
#[derive(Debug, Clone, PartialEq)]
pub enum ErgodicSystem {
    /// tau x = 2x mod 1, points as explicit binary bit streams.
    Doubling,
    /// tau x = x + alpha mod 1 in 128-bit fixed point; alpha odd by
    /// construction, so the orbit period is exactly 2^128.
    Rotation { alpha: u128 },
    /// i.i.d. symbols with the given cell probabilities.
    Bernoulli { probs: Vec<f64> },
    /// User-supplied symbol stream.
    Explicit { symbols: Vec<u8>, k: usize },
}

impl ErgodicSystem {
    pub fn bernoulli(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::invalid("bernoulli probabilities must be positive"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "bernoulli probabilities sum to {total}, expected 1"
            )));
        }
        Ok(ErgodicSystem::Bernoulli { probs })
    }

    pub fn rotation(alpha: u128) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::invalid("rotation parameter must be nonzero"));
        }
        Ok(ErgodicSystem::Rotation { alpha })
    }

    /// Parse "doubling" | "rotation:<alpha>" | "bernoulli:<p1,..,pk>" |
    /// "explicit:<path>".
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "doubling" {
            return Ok(ErgodicSystem::Doubling);
        }
        if let Some(a) = spec.strip_prefix("rotation:") {
            return ErgodicSystem::rotation(parse_alpha(a)?);
        }
        if let Some(ps) = spec.strip_prefix("bernoulli:") {
            let probs = ps
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad probability {p:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return ErgodicSystem::bernoulli(probs);
        }
        if let Some(path) = spec.strip_prefix("explicit:") {
            let (symbols, k) = read_symbol_file(Path::new(path))?;
            return Ok(ErgodicSystem::Explicit { symbols, k });
        }
        Err(Error::Parse(format!("unknown system {spec:?}")))
    }

    /// The partition implied by the driver itself, when the cells are not
    /// interval unions (Bernoulli/Explicit).
    pub fn implicit_partition(&self) -> Option<Partition> {
        match self {
            ErgodicSystem::Bernoulli { probs } => {
                Some(Partition::Implicit { k: probs.len() })
            }
            ErgodicSystem::Explicit { k, .. } => Some(Partition::Implicit { k: *k }),
            _ => None,
        }
    }
}

/// A sampled starting point omega; representation depends on the driver.
#[derive(Debug, Clone)]
pub enum Point {
    /// Doubling/Bernoulli: the stream of randomness the orbit is read from.
    Rng(ChaCha8Rng),
    /// Rotation: the fixed-point starting position.
    Fixed(u128),
    /// Explicit stream: orbits start at index 0.
    Start,
}

/// Draw omega ~ mu for the given system.
pub fn sample_point(system: &ErgodicSystem, rng: &mut ChaCha8Rng) -> Point {
    match system {
        ErgodicSystem::Doubling | ErgodicSystem::Bernoulli { .. } => {
            // Hand the sample its own fork of the stream so repeated calls
            // with a cloned rng reproduce the same point.
            Point::Rng(rng.clone())
        }
        ErgodicSystem::Rotation { .. } => Point::Fixed(rng.gen::<u128>()),
        ErgodicSystem::Explicit { .. } => Point::Start,
    }
}

/// The orbit trace: s_i = cell index (1-based) of tau^i omega.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub symbols: Vec<u8>,
    pub k: usize,
}

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Occupation counts a_l(n) = #{i < n : s_i = l}.
    pub fn cell_counts(&self, n: usize) -> Result<Vec<usize>> {
        if n > self.symbols.len() {
            return Err(Error::invalid(format!(
                "count horizon {n} exceeds stream length {}",
                self.symbols.len()
            )));
        }
        let mut counts = vec![0usize; self.k];
        for &s in &self.symbols[..n] {
            counts[s as usize - 1] += 1;
        }
        Ok(counts)
    }

    /// 0/1 indicator of cell l over the whole stream.
    pub fn indicator(&self, l: u8) -> Vec<f64> {
        self.symbols
            .iter()
            .map(|&s| if s == l { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Explicit bit stream for the doubling map, with 128-bit sliding windows.
pub struct BitStream {
    words: Vec<u64>,
    len: usize,
}

impl BitStream {
    /// Draw `len` uniform bits from the rng.
    pub fn random(rng: &mut ChaCha8Rng, len: usize) -> Self {
        let nwords = len.div_ceil(64);
        let words = (0..nwords).map(|_| rng.next_u64()).collect();
        BitStream { words, len }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                words[i / 64] |= 1 << (63 - (i % 64));
            }
        }
        BitStream { words, len: bits.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (63 - (i % 64))) & 1 == 1
    }

    /// The 128 bits starting at position i, as a fixed-point fraction:
    /// the truncation of tau^i x to 128 binary digits.
    pub fn window128(&self, i: usize) -> u128 {
        debug_assert!(i + 128 <= self.len);
        let hi = self.word_at(i) as u128;
        let lo = self.word_at(i + 64) as u128;
        (hi << 64) | lo
    }

    /// 64 bits starting at an arbitrary bit offset.
    fn word_at(&self, i: usize) -> u64 {
        let w = i / 64;
        let off = i % 64;
        if off == 0 {
            self.words[w]
        } else {
            let hi = self.words[w] << off;
            let lo = self
                .words
                .get(w + 1)
                .map_or(0, |&next| next >> (64 - off));
            hi | lo
        }
    }
}

/// Compute the symbol stream s_0..s_{n-1} for the orbit of `point`.
///
/// Membership tests are exact: doubling orbits compare the 128-bit
/// truncation of the shifted bit stream against interval endpoints with the
/// strictly-less rule; rotations use wrap-around 128-bit addition.
pub fn symbol_stream(
    system: &ErgodicSystem,
    partition: &Partition,
    point: &Point,
    n: usize,
) -> Result<SymbolStream> {
    if n == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let k = partition.cell_count();
    let symbols = match (system, point) {
        (ErgodicSystem::Doubling, Point::Rng(rng)) => {
            if n > MAX_DOUBLING_HORIZON {
                return Err(Error::HorizonTooLarge {
                    requested: n,
                    budget: MAX_DOUBLING_HORIZON,
                });
            }
            let mut rng = rng.clone();
            let bits = BitStream::random(&mut rng, n + 128);
            doubling_symbols(&bits, partition, n)
        }
        (ErgodicSystem::Rotation { alpha }, Point::Fixed(x0)) => {
            let mut pos = *x0;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(partition.cell_of(pos));
                pos = pos.wrapping_add(*alpha);
            }
            out
        }
        (ErgodicSystem::Bernoulli { probs }, Point::Rng(rng)) => {
            let mut rng = rng.clone();
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut sym = probs.len() as u8;
                for (ci, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        sym = (ci + 1) as u8;
                        break;
                    }
                }
                out.push(sym);
            }
            out
        }
        (ErgodicSystem::Explicit { symbols, .. }, Point::Start) => {
            if n > symbols.len() {
                return Err(Error::invalid(format!(
                    "horizon {n} exceeds explicit stream length {}",
                    symbols.len()
                )));
            }
            symbols[..n].to_vec()
        }
        _ => return Err(Error::invalid("point representation does not match system")),
    };
    Ok(SymbolStream { symbols, k })
}

/// Symbols of a doubling orbit given its bit stream (needs n + 128 bits).
pub fn doubling_symbols(bits: &BitStream, partition: &Partition, n: usize) -> Vec<u8> {
    assert!(bits.len() >= n + 128);
    let mut window = bits.window128(0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(partition.cell_of(window));
        window = (window << 1) | (bits.bit(i + 128) as u128);
    }
    out
}

const SYMBOL_MAGIC: &[u8; 4] = b"RSYM";

/// Write symbols as a byte-per-symbol binary file with a 16-byte header
/// (magic, k as u32 LE, N as u64 LE).
pub fn write_symbol_file(path: &Path, symbols: &[u8], k: usize) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(SYMBOL_MAGIC)?;
    f.write_all(&(k as u32).to_le_bytes())?;
    f.write_all(&(symbols.len() as u64).to_le_bytes())?;
    f.write_all(symbols)?;
    Ok(())
}

pub fn read_symbol_file(path: &Path) -> Result<(Vec<u8>, usize)> {
    let mut f = std::fs::File::open(path)?;
    let mut header = [0u8; 16];
    f.read_exact(&mut header)?;
    if &header[0..4] != SYMBOL_MAGIC {
        return Err(Error::Parse("bad symbol file magic".into()));
    }
    let k = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    if k == 0 {
        return Err(Error::Parse("symbol file declares zero cells".into()));
    }
    let mut symbols = vec![0u8; n];
    f.read_exact(&mut symbols)?;
    if symbols.iter().any(|&s| s == 0 || s as usize > k) {
        return Err(Error::Parse("symbol file contains out-of-range symbols".into()));
    }
    Ok((symbols, k))
}

/// The standard two-cell partition A1 = [0, 1/2), A2 = [1/2, 1).
pub fn halves_partition() -> Partition {
    Partition::explicit(vec![
        vec![Interval { start: 0, end: 1u128 << 127 }],
        vec![Interval { start: 1u128 << 127, end: 0 }],
    ])
    .unwrap()
}

/// Two-cell partition A1 = [0, t), A2 = [t, 1) for t given as a fraction.
pub fn split_partition(t: &str) -> Result<Partition> {
    let (v, is_one) = parse_fraction(t)?;
    if is_one || v == 0 {
        return Err(Error::invalid("split point must lie strictly in (0,1)"));
    }
    Partition::explicit(vec![
        vec![Interval { start: 0, end: v }],
        vec![Interval { start: v, end: 0 }],
    ])
}
