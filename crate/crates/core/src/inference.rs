//! Queries over a finalized table: lookups, comparisons and range relaxation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::aggregate::{Distribution, DoQTable};
use crate::pipeline::{ObjectKey, Pos};
use crate::units::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ComparisonLabel {
    Less,
    Equal,
    Greater,
}

impl ComparisonLabel {
    pub fn inverse(self) -> Self {
        match self {
            ComparisonLabel::Less => ComparisonLabel::Greater,
            ComparisonLabel::Equal => ComparisonLabel::Equal,
            ComparisonLabel::Greater => ComparisonLabel::Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ComparisonLabel::Less => "<",
            ComparisonLabel::Equal => "=",
            ComparisonLabel::Greater => ">",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ComparisonLabel::Less => "LESS",
            ComparisonLabel::Equal => "EQUAL",
            ComparisonLabel::Greater => "GREATER",
        }
    }
}

impl fmt::Display for ComparisonLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown comparison label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for ComparisonLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "<" | "LESS" => Ok(ComparisonLabel::Less),
            "=" | "EQUAL" => Ok(ComparisonLabel::Equal),
            ">" | "GREATER" => Ok(ComparisonLabel::Greater),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("equality ratio must be a finite number >= 1, got {0}")]
    Ratio(f64),
    #[error("no shared heads between the two adjectives")]
    NoEvidence,
    #[error("cannot relax non-positive value {0} to a decade")]
    NonPositive(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareConfig {
    /// Medians within this ratio of each other compare as equal.
    pub tau: f64,
    /// Entries seen fewer times are treated as missing.
    pub min_count: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            tau: 1.1,
            min_count: 1,
        }
    }
}

impl CompareConfig {
    pub fn new(tau: f64, min_count: u64) -> Result<Self, InferenceError> {
        if !(tau.is_finite() && tau >= 1.0) {
            return Err(InferenceError::Ratio(tau));
        }
        Ok(CompareConfig { tau, min_count })
    }
}

pub fn query_distribution<'t>(
    table: &'t DoQTable,
    object: &ObjectKey,
    dim: Dimension,
) -> Option<&'t Distribution> {
    table.get(object, dim)
}

/// Head-free entry for a surface form; when several parts of speech exist the
/// most frequent wins, ties going to key order.
pub fn resolve_object<'t>(
    table: &'t DoQTable,
    surface: &str,
    dim: Dimension,
) -> Option<(&'t ObjectKey, &'t Distribution)> {
    let mut best: Option<(&ObjectKey, &Distribution)> = None;
    for ((key, d), dist) in table.entries_for_surface(surface) {
        if *d != dim || key.head.is_some() {
            continue;
        }
        if best.is_none_or(|(_, b)| dist.count() > b.count()) {
            best = Some((key, dist));
        }
    }
    best
}

fn usable_median(d: Option<&Distribution>, cfg: &CompareConfig) -> f64 {
    d.filter(|d| d.count() >= cfg.min_count.max(1))
        .and_then(|d| d.median().ok())
        .unwrap_or(0.0)
}

/// Three-way comparison of two medians.
pub fn compare_medians(m1: f64, m2: f64, tau: f64) -> ComparisonLabel {
    if m1 > 0.0 && m2 > 0.0 {
        if m1.max(m2) / m1.min(m2) <= tau {
            return ComparisonLabel::Equal;
        }
    } else if m1 == m2 {
        return ComparisonLabel::Equal;
    }
    if m1 < m2 {
        ComparisonLabel::Less
    } else {
        ComparisonLabel::Greater
    }
}

/// Compares objects by median; a missing object counts as median 0.
pub fn compare_nouns(
    table: &DoQTable,
    o1: &str,
    o2: &str,
    dim: Dimension,
    cfg: &CompareConfig,
) -> ComparisonLabel {
    let m1 = usable_median(resolve_object(table, o1, dim).map(|(_, d)| d), cfg);
    let m2 = usable_median(resolve_object(table, o2, dim).map(|(_, d)| d), cfg);
    compare_medians(m1, m2, cfg.tau)
}

fn adjective_heads<'t>(
    table: &'t DoQTable,
    adj: &str,
    dim: Dimension,
    cfg: &CompareConfig,
) -> BTreeMap<&'t str, &'t Distribution> {
    table
        .entries_for_surface(adj)
        .filter(|((key, d), dist)| {
            *d == dim && key.pos == Pos::Adj && dist.count() >= cfg.min_count.max(1)
        })
        .filter_map(|((key, _), dist)| key.head.as_deref().map(|h| (h, dist)))
        .collect()
}

/// Per-head labels for the heads both adjectives modify in `dim`.
pub fn adjective_votes(
    table: &DoQTable,
    x: &str,
    z: &str,
    dim: Dimension,
    cfg: &CompareConfig,
) -> BTreeMap<String, ComparisonLabel> {
    let hx = adjective_heads(table, x, dim, cfg);
    let hz = adjective_heads(table, z, dim, cfg);
    hx.iter()
        .filter_map(|(h, dx)| {
            let dz = hz.get(h)?;
            let label = compare_medians(
                usable_median(Some(dx), cfg),
                usable_median(Some(dz), cfg),
                cfg.tau,
            );
            Some((h.to_string(), label))
        })
        .collect()
}

/// Majority label over shared heads; ties resolve to EQUAL.
pub fn compare_adjectives(
    table: &DoQTable,
    x: &str,
    z: &str,
    dim: Dimension,
    cfg: &CompareConfig,
) -> Result<ComparisonLabel, InferenceError> {
    let votes = adjective_votes(table, x, z, dim, cfg);
    if votes.is_empty() {
        return Err(InferenceError::NoEvidence);
    }
    Ok(majority(votes.values().copied()))
}

/// The label with the strictly highest count, EQUAL when the top is shared.
pub fn majority(labels: impl IntoIterator<Item = ComparisonLabel>) -> ComparisonLabel {
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l as usize] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    let winners: Vec<usize> = (0..3).filter(|&i| counts[i] == top).collect();
    match winners.as_slice() {
        [0] => ComparisonLabel::Less,
        [2] => ComparisonLabel::Greater,
        _ => ComparisonLabel::Equal,
    }
}

/// Dimension in which the two adjectives share the most heads, if any.
pub fn most_populated_shared_dimension(
    table: &DoQTable,
    x: &str,
    z: &str,
    cfg: &CompareConfig,
) -> Option<Dimension> {
    let heads = |adj: &str, dim| -> BTreeSet<String> {
        adjective_heads(table, adj, dim, cfg)
            .into_keys()
            .map(str::to_string)
            .collect()
    };
    Dimension::ALL
        .into_iter()
        .map(|dim| (heads(x, dim).intersection(&heads(z, dim)).count(), dim))
        .filter(|(n, _)| *n > 0)
        .fold(None, |best: Option<(usize, Dimension)>, cur| match best {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        })
        .map(|(_, dim)| dim)
}

fn power_of_ten(e: i32) -> f64 {
    format!("1e{e}").parse().expect("valid float literal")
}

/// Brackets a positive value between powers of ten; an exact power `m` becomes `(m/10, 10m)`.
pub fn relax_to_decade(m: f64) -> Result<(f64, f64), InferenceError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(InferenceError::NonPositive(m));
    }
    let mut e = m.log10().floor() as i32;
    while power_of_ten(e) > m {
        e -= 1;
    }
    while power_of_ten(e + 1) <= m {
        e += 1;
    }
    if power_of_ten(e) == m {
        Ok((power_of_ten(e - 1), power_of_ten(e + 1)))
    } else {
        Ok((power_of_ten(e), power_of_ten(e + 1)))
    }
}

/// Hour-of-day window of one hour either side, wrapped into `[0, 24)`.
pub fn relax_time_of_day(hour: f64) -> (f64, f64) {
    ((hour - 1.0).rem_euclid(24.0), (hour + 1.0).rem_euclid(24.0))
}
