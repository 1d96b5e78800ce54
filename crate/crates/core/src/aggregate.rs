//! Mergeable per-object distributions and the table file format.
//!
//! Values are binned into sign-aware geometric buckets: `B` buckets per decade over
//! `|v|` in `[v_min, v_min * 10^24)`, a zero bucket for `|v| < v_min`, and a mirrored
//! negative side. Out-of-range magnitudes are clamped into the outermost bucket.
//! Up to `exact_cap` samples are also kept verbatim so small distributions answer
//! quantile queries exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::pipeline::records::parse_settings;
use crate::pipeline::{BuildSettings, CooccurrenceRecord, ObjectKey, Pos};
use crate::textfmt::{fmt_distance, fmt_real, header_fields, header_get};
use crate::units::Dimension;

const MAGIC: &str = "doq-table";
const VERSION: &str = "1";
const DECADES: i32 = 24;
/// Fixed-point scale of the running sum, so merging adds integers.
const SUM_SCALE: f64 = (1u64 << 50) as f64;

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("cannot observe non-finite value {0}")]
    NonFinite(f64),
    #[error("configuration mismatch on `{0}`")]
    ConfigMismatch(&'static str),
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("quantile {0} outside [0, 1]")]
    Quantile(f64),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_error(line: usize, message: impl Into<String>) -> AggregateError {
    AggregateError::Format {
        line,
        message: message.into(),
    }
}

/// Bucket geometry and the exact-sample budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Binning {
    pub buckets_per_decade: u32,
    pub v_min: f64,
    pub exact_cap: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Binning {
            buckets_per_decade: 10,
            v_min: 1e-12,
            exact_cap: 4096,
        }
    }
}

impl Binning {
    pub fn max_bucket(&self) -> i32 {
        self.buckets_per_decade as i32 * DECADES
    }

    /// Lower magnitude bound of positive bucket `k` (`k >= 1`).
    pub fn lower(&self, k: i32) -> f64 {
        self.v_min * 10f64.powf(f64::from(k - 1) / f64::from(self.buckets_per_decade))
    }

    pub fn upper(&self, k: i32) -> f64 {
        self.lower(k + 1)
    }

    pub fn bucket_of(&self, v: f64) -> i32 {
        let a = v.abs();
        if a < self.v_min {
            return 0;
        }
        let max = self.max_bucket();
        let guess = ((a / self.v_min).log10() * f64::from(self.buckets_per_decade)).floor();
        let mut k = (guess as i64 + 1).clamp(1, i64::from(max)) as i32;
        // the logarithm can be off by one ulp near a boundary; settle against the bounds
        while k > 1 && a < self.lower(k) {
            k -= 1;
        }
        while k < max && a >= self.upper(k) {
            k += 1;
        }
        if v < 0.0 {
            -k
        } else {
            k
        }
    }

    /// Value range covered by bucket `k` as `(low, high)` in ascending order.
    pub fn bounds(&self, k: i32) -> (f64, f64) {
        match k {
            0 => (-self.v_min, self.v_min),
            k if k > 0 => (self.lower(k), self.upper(k)),
            k => (-self.upper(-k), -self.lower(-k)),
        }
    }

    /// Geometric midpoint of a bucket; 0 for the zero bucket.
    pub fn center(&self, k: i32) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let (lo, hi) = (self.lower(k.abs()), self.upper(k.abs()));
        (lo * hi).sqrt().copysign(f64::from(k))
    }
}

/// Interpolates between neighbouring order statistics: geometric when both share
/// a strict sign, linear otherwise.
fn interpolate(a: f64, b: f64, f: f64) -> f64 {
    if f == 0.0 || a == b {
        a
    } else if a > 0.0 && b > 0.0 {
        a * (b / a).powf(f)
    } else if a < 0.0 && b < 0.0 {
        -(-a * (b / a).powf(f))
    } else {
        a + (b - a) * f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub p5: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramPoint {
    pub bucket: i32,
    pub center: f64,
    pub low: f64,
    pub high: f64,
    pub count: u64,
    /// Fraction of the mass per unit of log10 magnitude; the zero bucket reports its plain fraction.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    binning: Binning,
    count: u64,
    buckets: BTreeMap<i32, u64>,
    samples: Option<Vec<f64>>,
    min: f64,
    max: f64,
    sum: i128,
}

impl Distribution {
    pub fn new(binning: Binning) -> Self {
        Distribution {
            binning,
            count: 0,
            buckets: BTreeMap::new(),
            samples: Some(Vec::new()),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            sum: 0,
        }
    }

    pub fn from_values(
        binning: Binning,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Self, AggregateError> {
        let mut d = Distribution::new(binning);
        for v in values {
            d.observe(v)?;
        }
        Ok(d)
    }

    pub fn binning(&self) -> &Binning {
        &self.binning
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn buckets(&self) -> &BTreeMap<i32, u64> {
        &self.buckets
    }

    /// Sorted retained samples, `None` once the distribution outgrew `exact_cap`.
    pub fn samples(&self) -> Option<&[f64]> {
        self.samples.as_deref()
    }

    pub fn min(&self) -> Option<f64> {
        (self.count > 0).then_some(self.min)
    }

    pub fn max(&self) -> Option<f64> {
        (self.count > 0).then_some(self.max)
    }

    pub fn sum(&self) -> f64 {
        self.sum as f64 / SUM_SCALE
    }

    pub fn observe(&mut self, v: f64) -> Result<(), AggregateError> {
        if !v.is_finite() {
            return Err(AggregateError::NonFinite(v));
        }
        let v = if v == 0.0 { 0.0 } else { v };
        self.count += 1;
        *self.buckets.entry(self.binning.bucket_of(v)).or_insert(0) += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.sum = self.sum.saturating_add((v * SUM_SCALE).round() as i128);
        if let Some(s) = &mut self.samples {
            if s.len() >= self.binning.exact_cap {
                self.samples = None;
            } else {
                let at = s.partition_point(|x| x.total_cmp(&v).is_le());
                s.insert(at, v);
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Distribution) -> Result<(), AggregateError> {
        if self.binning != other.binning {
            return Err(AggregateError::ConfigMismatch("binning"));
        }
        self.count += other.count;
        for (&k, &c) in &other.buckets {
            *self.buckets.entry(k).or_insert(0) += c;
        }
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.sum = self.sum.saturating_add(other.sum);
        self.samples = match (self.samples.take(), &other.samples) {
            (Some(a), Some(b)) if a.len() + b.len() <= self.binning.exact_cap => {
                let mut merged = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    if a[i].total_cmp(&b[j]).is_le() {
                        merged.push(a[i]);
                        i += 1;
                    } else {
                        merged.push(b[j]);
                        j += 1;
                    }
                }
                merged.extend_from_slice(&a[i..]);
                merged.extend_from_slice(&b[j..]);
                Some(merged)
            }
            _ => None,
        };
        Ok(())
    }

    fn check_quantile(&self, q: f64) -> Result<(), AggregateError> {
        if self.count == 0 {
            return Err(AggregateError::EmptyDistribution);
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(AggregateError::Quantile(q));
        }
        Ok(())
    }

    fn interpolate_ranks(&self, q: f64, order_stat: impl Fn(u64) -> f64) -> f64 {
        let h = q * (self.count - 1) as f64;
        let lo = h.floor();
        let (a, b) = (order_stat(lo as u64), order_stat(h.ceil() as u64));
        interpolate(a, b, h - lo).clamp(self.min, self.max)
    }

    /// Quantile from retained samples when available, else from the histogram.
    pub fn quantile(&self, q: f64) -> Result<f64, AggregateError> {
        self.check_quantile(q)?;
        match &self.samples {
            Some(s) => Ok(self.interpolate_ranks(q, |j| s[j as usize])),
            None => self.histogram_quantile(q),
        }
    }

    /// Quantile estimated from bucket counts alone.
    pub fn histogram_quantile(&self, q: f64) -> Result<f64, AggregateError> {
        self.check_quantile(q)?;
        Ok(self.interpolate_ranks(q, |j| self.estimate_rank(j)))
    }

    /// Estimate of the `j`-th smallest value (0-based): positioned geometrically
    /// inside its bucket by rank.
    fn estimate_rank(&self, j: u64) -> f64 {
        if j == 0 {
            return self.min;
        }
        if j + 1 == self.count {
            return self.max;
        }
        let mut before = 0;
        for (&k, &c) in &self.buckets {
            if j < before + c {
                let f = ((j - before) as f64 + 0.5) / c as f64;
                let est = match k {
                    0 => 0.0,
                    k if k > 0 => {
                        let (lo, hi) = (self.binning.lower(k), self.binning.upper(k));
                        lo * (hi / lo).powf(f)
                    }
                    k => {
                        let (lo, hi) = (self.binning.lower(-k), self.binning.upper(-k));
                        -(hi * (lo / hi).powf(f))
                    }
                };
                return est.clamp(self.min, self.max);
            }
            before += c;
        }
        self.max
    }

    pub fn median(&self) -> Result<f64, AggregateError> {
        self.quantile(0.5)
    }

    pub fn stats(&self) -> Result<Stats, AggregateError> {
        Ok(Stats {
            count: self.count,
            min: self.min().ok_or(AggregateError::EmptyDistribution)?,
            max: self.max,
            mean: self.sum() / self.count as f64,
            median: self.quantile(0.5)?,
            p5: self.quantile(0.05)?,
            p95: self.quantile(0.95)?,
        })
    }

    pub fn histogram(&self) -> Vec<HistogramPoint> {
        let n = self.count.max(1) as f64;
        let width = 1.0 / f64::from(self.binning.buckets_per_decade);
        self.buckets
            .iter()
            .map(|(&k, &c)| {
                let (low, high) = self.binning.bounds(k);
                let fraction = c as f64 / n;
                HistogramPoint {
                    bucket: k,
                    center: self.binning.center(k),
                    low,
                    high,
                    count: c,
                    density: if k == 0 { fraction } else { fraction / width },
                }
            })
            .collect()
    }
}

/// Everything that must agree for two tables to merge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableConfig {
    pub binning: Binning,
    pub settings: BuildSettings,
    /// Largest threshold applied by `finalize`, `None` for a partial table.
    pub min_count: Option<u64>,
}

impl TableConfig {
    pub fn new(settings: BuildSettings) -> Self {
        TableConfig {
            binning: Binning::default(),
            settings,
            min_count: None,
        }
    }

    fn check_compatible(&self, other: &TableConfig) -> Result<(), AggregateError> {
        let b = (&self.binning, &other.binning);
        let s = (&self.settings, &other.settings);
        if b.0.buckets_per_decade != b.1.buckets_per_decade {
            Err(AggregateError::ConfigMismatch("buckets_per_decade"))
        } else if b.0.v_min != b.1.v_min {
            Err(AggregateError::ConfigMismatch("v_min"))
        } else if b.0.exact_cap != b.1.exact_cap {
            Err(AggregateError::ConfigMismatch("exact_cap"))
        } else if s.0.registry_version != s.1.registry_version {
            Err(AggregateError::ConfigMismatch("registry"))
        } else if s.0.max_distance != s.1.max_distance {
            Err(AggregateError::ConfigMismatch("max_distance"))
        } else if s.0.max_phrase_len != s.1.max_phrase_len {
            Err(AggregateError::ConfigMismatch("max_phrase_len"))
        } else if s.0.min_phrase_count != s.1.min_phrase_count {
            Err(AggregateError::ConfigMismatch("min_phrase_count"))
        } else if self.min_count != other.min_count {
            Err(AggregateError::ConfigMismatch("min_count"))
        } else {
            Ok(())
        }
    }
}

pub type EntryKey = (ObjectKey, Dimension);

/// Distributions keyed by object and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DoQTable {
    config: TableConfig,
    entries: BTreeMap<EntryKey, Distribution>,
}

impl DoQTable {
    pub fn new(config: TableConfig) -> Self {
        DoQTable {
            config,
            entries: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &TableConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&EntryKey, &Distribution)> {
        self.entries.iter()
    }

    pub fn get(&self, object: &ObjectKey, dimension: Dimension) -> Option<&Distribution> {
        self.entries.get(&(object.clone(), dimension))
    }

    fn add(&mut self, key: EntryKey, v: f64) -> Result<(), AggregateError> {
        let binning = self.config.binning;
        self.entries
            .entry(key)
            .or_insert_with(|| Distribution::new(binning))
            .observe(v)
    }

    /// Counts the record under its key and, when it has a head, under the head-free key too.
    pub fn observe(&mut self, record: &CooccurrenceRecord) -> Result<(), AggregateError> {
        let v = record.quantity.value_std;
        if !v.is_finite() {
            return Err(AggregateError::NonFinite(v));
        }
        let dim = record.quantity.dimension;
        if record.object.head.is_some() {
            self.add((record.object.without_head(), dim), v)?;
        }
        self.add((record.object.clone(), dim), v)
    }

    pub fn merge(&mut self, other: &DoQTable) -> Result<(), AggregateError> {
        self.config.check_compatible(&other.config)?;
        for (key, d) in &other.entries {
            match self.entries.get_mut(key) {
                Some(mine) => mine.merge(d)?,
                None => {
                    self.entries.insert(key.clone(), d.clone());
                }
            }
        }
        Ok(())
    }

    /// Drops entries seen fewer than `min_count` times, and noun phrases seen fewer
    /// than the configured phrase threshold.
    pub fn finalize(&mut self, min_count: u64) {
        let min_count = min_count.max(1);
        let phrase_min = self.config.settings.min_phrase_count;
        self.entries.retain(|(object, _), d| {
            d.count() >= min_count && !(object.surface.contains(' ') && d.count() < phrase_min)
        });
        self.config.min_count = Some(
            self.config
                .min_count
                .map_or(min_count, |m| m.max(min_count)),
        );
    }

    /// All entries for a surface form, ignoring case, in key order.
    pub fn entries_for_surface<'a>(
        &'a self,
        surface: &str,
    ) -> impl Iterator<Item = (&'a EntryKey, &'a Distribution)> {
        let surface = surface.to_lowercase();
        let start = ObjectKey {
            surface: surface.clone(),
            pos: Pos::Noun,
            head: None,
        };
        self.entries
            .range((start, Dimension::ALL[0])..)
            .take_while(move |((k, _), _)| k.surface == surface)
    }

    pub fn write_to<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        let b = &self.config.binning;
        let s = &self.config.settings;
        writeln!(
            w,
            "{MAGIC}\t{VERSION}\tbuckets_per_decade={}\tv_min={}\texact_cap={}\tregistry={}\tmax_distance={}\tmax_phrase_len={}\tmin_phrase_count={}\tmin_count={}",
            b.buckets_per_decade,
            fmt_real(b.v_min),
            b.exact_cap,
            s.registry_version,
            fmt_distance(s.max_distance),
            s.max_phrase_len,
            s.min_phrase_count,
            self.config.min_count.map_or("-".to_string(), |m| m.to_string()),
        )?;
        for ((object, dim), d) in &self.entries {
            let buckets: Vec<String> = d.buckets.iter().map(|(k, c)| format!("{k}:{c}")).collect();
            let samples = match &d.samples {
                Some(s) => s.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(","),
                None => "-".to_string(),
            };
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                object.surface,
                object.head.as_deref().unwrap_or(""),
                object.pos,
                dim,
                d.count,
                fmt_real(d.min),
                fmt_real(d.max),
                d.sum,
                buckets.join(","),
                samples
            )?;
        }
        writeln!(w, "end\t{}", self.entries.len())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), AggregateError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, AggregateError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| format_error(1, "empty table file"))?;
        let mut parts = header.trim_end_matches('\r').split('\t');
        if parts.next() != Some(MAGIC) {
            return Err(format_error(1, "not a table file"));
        }
        if parts.next() != Some(VERSION) {
            return Err(format_error(1, "unsupported table version"));
        }
        let fields = header_fields(parts);
        let get = |key: &str| {
            header_get(&fields, key).ok_or_else(|| format_error(1, format!("header lacks `{key}`")))
        };
        let bad = |key: &str| format_error(1, format!("bad header value for `{key}`"));
        let binning = Binning {
            buckets_per_decade: get("buckets_per_decade")?
                .parse()
                .ok()
                .filter(|&b| b > 0)
                .ok_or_else(|| bad("buckets_per_decade"))?,
            v_min: get("v_min")?
                .parse()
                .ok()
                .filter(|v: &f64| *v > 0.0 && v.is_finite())
                .ok_or_else(|| bad("v_min"))?,
            exact_cap: get("exact_cap")?.parse().map_err(|_| bad("exact_cap"))?,
        };
        let settings = parse_settings(&fields, 1).map_err(|e| format_error(1, e.to_string()))?;
        let min_count = match get("min_count")? {
            "-" => None,
            m => Some(m.parse().map_err(|_| bad("min_count"))?),
        };
        let mut table = DoQTable::new(TableConfig {
            binning,
            settings,
            min_count,
        });
        let mut line_no = 1;
        for line in lines {
            let line = line?;
            line_no += 1;
            let line = line.trim_end_matches('\r');
            if let Some(n) = line.strip_prefix("end\t") {
                if n.parse::<usize>().ok() != Some(table.entries.len()) {
                    return Err(format_error(
                        line_no,
                        "entry count in trailer does not match",
                    ));
                }
                return Ok(table);
            }
            let (key, d) = parse_entry(line, line_no, binning)?;
            if table.entries.insert(key, d).is_some() {
                return Err(format_error(line_no, "duplicate entry"));
            }
        }
        Err(format_error(line_no, "missing trailer; file is truncated"))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, AggregateError> {
        DoQTable::read_from(BufReader::new(File::open(path)?))
    }
}

fn parse_entry(
    line: &str,
    line_no: usize,
    binning: Binning,
) -> Result<(EntryKey, Distribution), AggregateError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(format_error(
            line_no,
            format!("expected 10 columns, found {}", cols.len()),
        ));
    }
    let bad = |what: &str| format_error(line_no, format!("bad {what}"));
    let real = |s: &str, what: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(what))
    };
    if cols[0].is_empty() {
        return Err(bad("object"));
    }
    let object = ObjectKey {
        surface: cols[0].to_string(),
        head: (!cols[1].is_empty()).then(|| cols[1].to_string()),
        pos: cols[2].parse().map_err(|_| bad("part of speech"))?,
    };
    let dim: Dimension = cols[3].parse().map_err(|_| bad("dimension"))?;
    let count: u64 = cols[4].parse().map_err(|_| bad("count"))?;
    let mut buckets = BTreeMap::new();
    for pair in cols[8].split(',').filter(|p| !p.is_empty()) {
        let (k, c) = pair.split_once(':').ok_or_else(|| bad("bucket"))?;
        let k: i32 = k.parse().map_err(|_| bad("bucket index"))?;
        let c: u64 = c.parse().map_err(|_| bad("bucket count"))?;
        if k.abs() > binning.max_bucket() || c == 0 || buckets.insert(k, c).is_some() {
            return Err(bad("bucket"));
        }
    }
    let samples = match cols[9] {
        "-" => None,
        s => Some(
            s.split(',')
                .filter(|p| !p.is_empty())
                .map(|p| real(p, "sample"))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    if count == 0 || buckets.values().sum::<u64>() != count {
        return Err(bad("count"));
    }
    if let Some(s) = &samples {
        if s.len() as u64 != count || s.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("samples"));
        }
    }
    let d = Distribution {
        binning,
        count,
        buckets,
        samples,
        min: real(cols[5], "min")?,
        max: real(cols[6], "max")?,
        sum: cols[7].parse().map_err(|_| bad("sum"))?,
    };
    if d.min > d.max {
        return Err(bad("min/max"));
    }
    Ok(((object, dim), d))
}
