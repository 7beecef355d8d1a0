//! Sentence length histograms and their summary statistics.
//!
//! Lengths are token counts (punctuation counts as whatever the tokenization
//! of the input made of it). A [`LengthHistogram`] only ever stores lengths in
//! `1..=cutoff` with positive counts; everything else is tallied by the
//! ingestion helpers in [`IngestStats`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::math::ln;

/// Maximum admitted sentence length when nothing else is configured.
pub const DEFAULT_CUTOFF: u32 = 1000;

/// Lower bin used for the short-utterance mass (lengths `1..=LOW_BIN_MAX`).
pub const LOW_BIN_MAX: u32 = 4;
/// Upper bin used for the long-sentence mass (lengths `>= HIGH_BIN_MIN`).
pub const HIGH_BIN_MIN: u32 = 71;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistogramError {
    #[error("histogram is empty")]
    Empty,
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: &'static str },
    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("need at least 5 distinct lengths at or above {tail_start}, found {found}")]
    InsufficientTail { tail_start: u32, found: usize },
}

/// Multiset of sentence lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthHistogram {
    counts: BTreeMap<u32, u64>,
    cutoff: u32,
}

impl LengthHistogram {
    pub fn new(cutoff: u32) -> Result<Self, HistogramError> {
        if cutoff == 0 {
            return Err(HistogramError::ZeroCutoff);
        }
        Ok(Self {
            counts: BTreeMap::new(),
            cutoff,
        })
    }

    /// Builds a histogram from raw lengths, silently dropping anything outside
    /// `1..=cutoff`.
    pub fn from_lengths(lengths: &[u32], cutoff: u32) -> Result<Self, HistogramError> {
        let mut h = Self::new(cutoff)?;
        for &x in lengths {
            h.add(x, 1);
        }
        Ok(h)
    }

    /// Adds `count` observations of `length`. Returns `false` (and changes
    /// nothing) when the length is outside `1..=cutoff` or the count is zero.
    pub fn add(&mut self, length: u32, count: u64) -> bool {
        if length == 0 || length > self.cutoff || count == 0 {
            return false;
        }
        *self.counts.entry(length).or_insert(0) += count;
        true
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// Total number of sentences `n`.
    pub fn size(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, length: u32) -> u64 {
        self.counts.get(&length).copied().unwrap_or(0)
    }

    /// `(length, count)` pairs in ascending length order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.counts.iter().map(|(&x, &c)| (x, c))
    }

    /// Number of distinct lengths.
    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn min_length(&self) -> Option<u32> {
        self.counts.keys().next().copied()
    }

    pub fn max_length(&self) -> Option<u32> {
        self.counts.keys().next_back().copied()
    }

    /// The observed distribution `p_x = n_x / n`.
    pub fn empirical(&self) -> Result<EmpiricalDistribution, HistogramError> {
        if self.is_empty() {
            return Err(HistogramError::Empty);
        }
        let n = self.size() as f64;
        Ok(EmpiricalDistribution {
            probs: self.iter().map(|(x, c)| (x, c as f64 / n)).collect(),
        })
    }

    pub fn summary(&self) -> Result<SummaryStats, HistogramError> {
        if self.is_empty() {
            return Err(HistogramError::Empty);
        }
        let n = self.size();
        let nf = n as f64;
        let mean = self.iter().map(|(x, c)| x as f64 * c as f64).sum::<f64>() / nf;
        let low = self
            .iter()
            .filter(|&(x, _)| x <= LOW_BIN_MAX)
            .map(|(_, c)| c)
            .sum::<u64>();
        let high = self
            .iter()
            .filter(|&(x, _)| x >= HIGH_BIN_MIN)
            .map(|(_, c)| c)
            .sum::<u64>();
        Ok(SummaryStats {
            size: n,
            mean,
            p999: self.quantile(999, 1000),
            max: self.max_length().unwrap_or(0),
            low_bin_mass: low as f64 / nf,
            high_bin_mass: high as f64 / nf,
        })
    }

    /// Smallest length whose cumulative count reaches `num/den` of the total.
    /// Exact integer arithmetic, no interpolation.
    fn quantile(&self, num: u64, den: u64) -> u32 {
        let n = self.size() as u128;
        let mut cum: u128 = 0;
        for (x, c) in self.iter() {
            cum += c as u128;
            if cum * den as u128 >= num as u128 * n {
                return x;
            }
        }
        self.max_length().unwrap_or(0)
    }

    /// Upper boundaries of the ten decile bins: boundary `j` is the smallest
    /// length whose cumulative count reaches `j·n/10`.
    pub fn deciles(&self) -> Result<[u32; 10], HistogramError> {
        if self.is_empty() {
            return Err(HistogramError::Empty);
        }
        let mut out = [0u32; 10];
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = self.quantile(j as u64 + 1, 10);
        }
        Ok(out)
    }

    /// Default start of the tail: the 99th-percentile length.
    pub fn default_tail_start(&self) -> Result<u32, HistogramError> {
        if self.is_empty() {
            return Err(HistogramError::Empty);
        }
        Ok(self.quantile(99, 100))
    }

    /// Power-law decay exponent of the upper tail.
    ///
    /// Unweighted least squares of `ln count` on `ln length` over lengths
    /// `>= tail_start`; the exponent is the negated slope.
    pub fn tail_exponent(&self, tail_start: u32) -> Result<TailFit, HistogramError> {
        let pts: Vec<(f64, f64)> = self
            .iter()
            .filter(|&(x, _)| x >= tail_start)
            .map(|(x, c)| (ln(x as f64), ln(c as f64)))
            .collect();
        if pts.len() < 5 {
            return Err(HistogramError::InsufficientTail {
                tail_start,
                found: pts.len(),
            });
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let r_squared = if syy > 0.0 {
            (sxy * sxy) / (sxx * syy)
        } else {
            1.0
        };
        Ok(TailFit {
            exponent: -slope,
            r_squared,
            points: pts.len(),
        })
    }
}

/// Result of [`LengthHistogram::tail_exponent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// `C` in `count ∝ length^-C`; positive for a decaying tail.
    pub exponent: f64,
    /// Coefficient of determination of the log-log line. Low values mean the
    /// tail is not a power law (e.g. exponential decay).
    pub r_squared: f64,
    pub points: usize,
}

/// The observed length distribution. All stored probabilities are positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    probs: BTreeMap<u32, f64>,
}

impl EmpiricalDistribution {
    /// Wraps raw probabilities, dropping non-positive entries. The caller is
    /// responsible for normalization; [`crate::divergence::gkl`] checks it.
    pub fn from_probs(probs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        Self {
            probs: probs.into_iter().filter(|&(_, p)| p > 0.0).collect(),
        }
    }

    pub fn prob(&self, length: u32) -> f64 {
        self.probs.get(&length).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs.iter().map(|(&x, &p)| (x, p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn min_length(&self) -> Option<u32> {
        self.probs.keys().next().copied()
    }

    pub fn max_length(&self) -> Option<u32> {
        self.probs.keys().next_back().copied()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| x as f64 * p).sum()
    }
}

/// One row of the corpus statistics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub size: u64,
    pub mean: f64,
    pub p999: u32,
    pub max: u32,
    /// Fraction of sentences with length `<= 4`.
    pub low_bin_mass: f64,
    /// Fraction of sentences with length `>= 71`.
    pub high_bin_mass: f64,
}

/// Tallies of what ingestion left out of the histogram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Records longer than the cutoff.
    pub skipped_long: u64,
    /// Empty lines (zero tokens).
    pub skipped_empty: u64,
    /// Sum of the lengths of the records dropped for exceeding the cutoff.
    pub skipped_long_tokens: u64,
}

impl IngestStats {
    /// Mean length over everything that was read, including sentences above
    /// the cutoff (empty lines excluded).
    pub fn mean_before_cutoff(&self, h: &LengthHistogram) -> Option<f64> {
        let n = h.size() + self.skipped_long;
        if n == 0 {
            return None;
        }
        let tokens: f64 = h.iter().map(|(x, c)| x as f64 * c as f64).sum::<f64>()
            + self.skipped_long_tokens as f64;
        Some(tokens / n as f64)
    }
}

/// Number of whitespace-separated tokens in a sentence.
pub fn token_count(line: &str) -> usize {
    line.split_whitespace().count()
}

/// Streaming histogram builder over one-sentence-per-line text.
#[derive(Debug, Clone)]
pub struct TextIngest {
    hist: LengthHistogram,
    stats: IngestStats,
}

impl TextIngest {
    pub fn new(cutoff: u32) -> Result<Self, HistogramError> {
        Ok(Self {
            hist: LengthHistogram::new(cutoff)?,
            stats: IngestStats::default(),
        })
    }

    /// Adds one sentence; returns its token count.
    pub fn push_line(&mut self, line: &str) -> usize {
        let n = token_count(line);
        if n == 0 {
            self.stats.skipped_empty += 1;
        } else if n > self.hist.cutoff as usize {
            self.stats.skipped_long += 1;
            self.stats.skipped_long_tokens += n as u64;
        } else {
            self.hist.add(n as u32, 1);
        }
        n
    }

    pub fn finish(self) -> (LengthHistogram, IngestStats) {
        (self.hist, self.stats)
    }
}

/// Histogram of the whitespace token counts of `lines`.
pub fn ingest_text<'a>(
    lines: impl IntoIterator<Item = &'a str>,
    cutoff: u32,
) -> Result<(LengthHistogram, IngestStats), HistogramError> {
    let mut ing = TextIngest::new(cutoff)?;
    for line in lines {
        ing.push_line(line);
    }
    Ok(ing.finish())
}

/// Parses one `length<TAB>count` record.
pub fn parse_tsv_row(row: usize, line: &str) -> Result<(u32, u64), HistogramError> {
    let malformed = |reason| HistogramError::MalformedRow { row, reason };
    let mut fields = line.trim_end_matches(['\r', '\n']).split('\t');
    let len = fields.next().ok_or(malformed("missing length"))?.trim();
    let count = fields.next().ok_or(malformed("missing count"))?.trim();
    if fields.next().is_some() {
        return Err(malformed("expected exactly two fields"));
    }
    let len: i64 = len
        .parse()
        .map_err(|_| malformed("length is not an integer"))?;
    let count: i64 = count
        .parse()
        .map_err(|_| malformed("count is not an integer"))?;
    if len <= 0 || len > u32::MAX as i64 {
        return Err(malformed("length must be a positive integer"));
    }
    if count <= 0 {
        return Err(malformed("count must be a positive integer"));
    }
    Ok((len as u32, count as u64))
}

/// Histogram from `length<TAB>count` rows (1-based row numbers in errors).
/// Blank rows are ignored; repeated lengths are merged.
pub fn ingest_tsv<'a>(
    rows: impl IntoIterator<Item = &'a str>,
    cutoff: u32,
) -> Result<(LengthHistogram, IngestStats), HistogramError> {
    let mut hist = LengthHistogram::new(cutoff)?;
    let mut stats = IngestStats::default();
    for (i, row) in rows.into_iter().enumerate() {
        if row.trim().is_empty() {
            continue;
        }
        let (len, count) = parse_tsv_row(i + 1, row)?;
        if !hist.add(len, count) {
            stats.skipped_long += count;
            stats.skipped_long_tokens += len as u64 * count;
        }
    }
    Ok((hist, stats))
}

/// First `ceil(N/2)` records versus the rest.
pub fn split_halves(
    lengths: &[u32],
    cutoff: u32,
) -> Result<(LengthHistogram, LengthHistogram), HistogramError> {
    if lengths.len() < 2 {
        return Err(HistogramError::TooFewRecords {
            needed: 2,
            got: lengths.len(),
        });
    }
    let mid = lengths.len().div_ceil(2);
    Ok((
        LengthHistogram::from_lengths(&lengths[..mid], cutoff)?,
        LengthHistogram::from_lengths(&lengths[mid..], cutoff)?,
    ))
}

/// Like [`split_halves`], after a seeded shuffle of the records.
pub fn split_halves_random(
    lengths: &[u32],
    cutoff: u32,
    seed: u64,
) -> Result<(LengthHistogram, LengthHistogram), HistogramError> {
    let mut shuffled = lengths.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    split_halves(&shuffled, cutoff)
}
