//! Measurement dimensions, the unit lexicon, and normalization into standard units.
//!
//! A [`UnitRegistry`] is loaded from a plain-text lexicon (one unit per line) plus a
//! currency rate file, and is immutable afterwards. Every recognized unit maps a raw
//! `(value, unit)` pair onto its dimension's standard unit through an affine map
//! `value_std = scale * value + offset`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../data/units.tsv");
/// Currency rates shipped with the crate.
pub const DEFAULT_RATES: &str = include_str!("../data/currency.tsv");

/// The ten measurement domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Dimension {
    Time,
    Currency,
    Length,
    Area,
    Volume,
    Mass,
    Temperature,
    Duration,
    Speed,
    Voltage,
}

impl Dimension {
    pub const ALL: [Dimension; 10] = [
        Dimension::Time,
        Dimension::Currency,
        Dimension::Length,
        Dimension::Area,
        Dimension::Volume,
        Dimension::Mass,
        Dimension::Temperature,
        Dimension::Duration,
        Dimension::Speed,
        Dimension::Voltage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Time => "TIME",
            Dimension::Currency => "CURRENCY",
            Dimension::Length => "LENGTH",
            Dimension::Area => "AREA",
            Dimension::Volume => "VOLUME",
            Dimension::Mass => "MASS",
            Dimension::Temperature => "TEMPERATURE",
            Dimension::Duration => "DURATION",
            Dimension::Speed => "SPEED",
            Dimension::Voltage => "VOLTAGE",
        }
    }

    /// Name of the unit all values of this dimension are stored in.
    pub fn standard_unit_name(self) -> &'static str {
        match self {
            Dimension::Time => "hour of day",
            Dimension::Currency => "US dollar",
            Dimension::Length => "meter",
            Dimension::Area => "square meter",
            Dimension::Volume => "cubic meter",
            Dimension::Mass => "kilogram",
            Dimension::Temperature => "kelvin",
            Dimension::Duration => "second",
            Dimension::Speed => "meter per second",
            Dimension::Voltage => "volt",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown dimension `{0}`")]
pub struct UnknownDimension(pub String);

impl FromStr for Dimension {
    type Err = UnknownDimension;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Dimension::ALL
            .into_iter()
            .find(|d| d.name() == upper)
            .ok_or_else(|| UnknownDimension(s.to_string()))
    }
}

/// One lexicon entry.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDef {
    pub surface_forms: Vec<String>,
    pub dimension: Dimension,
    pub scale: f64,
    pub offset: f64,
    /// Bare letters such as `C` or `F` only count with a degree sign or "degrees".
    pub requires_marker: bool,
}

impl UnitDef {
    /// Canonical name: the first alias.
    pub fn name(&self) -> &str {
        &self.surface_forms[0]
    }
}

/// A measurement normalized into its dimension's standard unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub dimension: Dimension,
    pub value_std: f64,
    pub source_value: f64,
    pub source_unit: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("unit `{0}` not found")]
    NotFound(String),
    #[error("normalized value for {value} {unit} is not finite")]
    Range { value: f64, unit: String },
    #[error("cannot express a {found} quantity in {expected} unit `{unit}`")]
    DimensionMismatch {
        expected: Dimension,
        found: Dimension,
        unit: String,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexiconError {
    #[error("line {line}: expected {expected} tab-separated columns, found {found}")]
    Columns {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: alias `{alias}` already defined on line {first}")]
    DuplicateAlias {
        line: usize,
        alias: String,
        first: usize,
    },
    #[error("line {line}: no rate for currency `{code}`")]
    MissingRate { line: usize, code: String },
}

/// Immutable unit lexicon with alias indexes.
#[derive(Debug, Clone)]
pub struct UnitRegistry {
    units: Vec<UnitDef>,
    exact: HashMap<String, usize>,
    folded: HashMap<String, usize>,
    max_alias_words: usize,
    version: String,
}

fn parse_real(field: &str, line: usize) -> Result<f64, LexiconError> {
    let field = field.trim();
    let value = match field.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| invalid(line, field))?;
            let den: f64 = den.trim().parse().map_err(|_| invalid(line, field))?;
            num / den
        }
        None => field.parse().map_err(|_| invalid(line, field))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(line, field))
    }
}

fn invalid(line: usize, field: &str) -> LexiconError {
    LexiconError::Invalid {
        line,
        message: format!("`{field}` is not a number"),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// Parses a currency rate file: `code <TAB> rate_to_usd` per line.
pub fn parse_rates(text: &str) -> Result<BTreeMap<String, f64>, LexiconError> {
    let mut rates = BTreeMap::new();
    for (line, raw) in content_lines(text) {
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 2 {
            return Err(LexiconError::Columns {
                line,
                expected: 2,
                found: cols.len(),
            });
        }
        let rate = parse_real(cols[1], line)?;
        if rate <= 0.0 {
            return Err(LexiconError::Invalid {
                line,
                message: "rate must be positive".into(),
            });
        }
        rates.insert(cols[0].trim().to_string(), rate);
    }
    Ok(rates)
}

fn normalize_alias(alias: &str) -> String {
    alias.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn folds(alias: &str) -> bool {
    alias.chars().count() > 2
}

impl UnitRegistry {
    /// Registry built from the shipped lexicon and rates.
    pub fn builtin() -> Self {
        Self::from_sources(DEFAULT_LEXICON, DEFAULT_RATES).expect("shipped lexicon is valid")
    }

    pub fn from_sources(lexicon: &str, rates: &str) -> Result<Self, LexiconError> {
        let rate_table = parse_rates(rates)?;
        let mut units = Vec::new();
        let mut exact: HashMap<String, usize> = HashMap::new();
        let mut folded: HashMap<String, usize> = HashMap::new();
        let mut alias_lines: HashMap<String, usize> = HashMap::new();
        let mut max_alias_words = 1;

        for (line, raw) in content_lines(lexicon) {
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 5 {
                return Err(LexiconError::Columns {
                    line,
                    expected: 5,
                    found: cols.len(),
                });
            }
            let dimension: Dimension =
                cols[1]
                    .parse()
                    .map_err(|e: UnknownDimension| LexiconError::Invalid {
                        line,
                        message: e.to_string(),
                    })?;
            let scale = match cols[2].trim().strip_prefix('@') {
                Some(code) => *rate_table
                    .get(code)
                    .ok_or_else(|| LexiconError::MissingRate {
                        line,
                        code: code.to_string(),
                    })?,
                None => parse_real(cols[2], line)?,
            };
            let offset = parse_real(cols[3], line)?;
            let requires_marker = match cols[4].trim() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(LexiconError::Invalid {
                        line,
                        message: format!("marker flag must be true or false, got `{other}`"),
                    })
                }
            };
            if scale <= 0.0 {
                return Err(LexiconError::Invalid {
                    line,
                    message: "scale must be positive".into(),
                });
            }
            if offset != 0.0 && dimension != Dimension::Temperature {
                return Err(LexiconError::Invalid {
                    line,
                    message: "only temperature units may carry an offset".into(),
                });
            }
            let surface_forms: Vec<String> = cols[0]
                .split('|')
                .map(normalize_alias)
                .filter(|a| !a.is_empty())
                .collect();
            if surface_forms.is_empty() {
                return Err(LexiconError::Invalid {
                    line,
                    message: "no aliases".into(),
                });
            }

            let idx = units.len();
            for alias in &surface_forms {
                let mut claim = |map: &mut HashMap<String, usize>, key: String| match map.get(&key)
                {
                    Some(&other) if other != idx => Err(LexiconError::DuplicateAlias {
                        line,
                        alias: alias.clone(),
                        first: alias_lines.get(&key).copied().unwrap_or(0),
                    }),
                    _ => {
                        map.insert(key.clone(), idx);
                        alias_lines.entry(key).or_insert(line);
                        Ok(())
                    }
                };
                claim(&mut exact, alias.clone())?;
                if folds(alias) {
                    claim(&mut folded, alias.to_lowercase())?;
                }
                max_alias_words = max_alias_words.max(alias.split(' ').count());
            }
            units.push(UnitDef {
                surface_forms,
                dimension,
                scale,
                offset,
                requires_marker,
            });
        }

        let mut hasher = Sha256::new();
        hasher.update(lexicon.as_bytes());
        hasher.update([0u8]);
        hasher.update(rates.as_bytes());
        let digest = hasher.finalize();
        let version = digest[..8].iter().map(|b| format!("{b:02x}")).collect();

        Ok(UnitRegistry {
            units,
            exact,
            folded,
            max_alias_words,
            version,
        })
    }

    pub fn units(&self) -> &[UnitDef] {
        &self.units
    }

    /// Content hash of the lexicon and rate sources.
    pub fn version(&self) -> &str {
        &self.version
    }

    /// Longest alias, in whitespace-separated words.
    pub fn max_alias_words(&self) -> usize {
        self.max_alias_words
    }

    /// Resolves a surface form. A leading degree sign counts as a marker.
    pub fn lookup_unit(&self, surface: &str, marker_present: bool) -> Result<&UnitDef, UnitError> {
        let trimmed = surface.trim();
        let (body, marker) = match trimmed.strip_prefix(['°', 'º']) {
            Some(rest) if !rest.is_empty() => (rest, true),
            _ => (trimmed, marker_present),
        };
        let key = normalize_alias(body);
        let idx = self.exact.get(&key).copied().or_else(|| {
            if folds(&key) {
                self.folded.get(&key.to_lowercase()).copied()
            } else {
                None
            }
        });
        match idx.map(|i| &self.units[i]) {
            Some(def) if !def.requires_marker || marker => Ok(def),
            _ => Err(UnitError::NotFound(surface.to_string())),
        }
    }

    /// Whether `surface` is a currency symbol that precedes its amount (`$`, `£`, `€`).
    pub fn is_currency_prefix(&self, surface: &str) -> bool {
        let looks_prefix = !surface.chars().any(char::is_alphanumeric)
            || (surface.len() == 3 && surface.chars().all(|c| c.is_ascii_uppercase()));
        looks_prefix
            && self
                .exact
                .get(surface)
                .is_some_and(|&i| self.units[i].dimension == Dimension::Currency)
    }

    /// Unit used for clock readings.
    pub fn time_of_day_unit(&self) -> Option<&UnitDef> {
        self.units.iter().find(|u| u.dimension == Dimension::Time)
    }
}

/// Applies the unit's affine map. Clock values wrap into `[0, 24)`.
pub fn normalize(value: f64, unit: &UnitDef) -> Result<Quantity, UnitError> {
    let mut value_std = unit.scale * value + unit.offset;
    if unit.dimension == Dimension::Time {
        value_std = value_std.rem_euclid(24.0);
        // rem_euclid can round up to exactly 24 for tiny negative inputs
        if value_std >= 24.0 {
            value_std = 0.0;
        }
    }
    if !value_std.is_finite() {
        return Err(UnitError::Range {
            value,
            unit: unit.name().to_string(),
        });
    }
    Ok(Quantity {
        dimension: unit.dimension,
        value_std,
        source_value: value,
        source_unit: unit.name().to_string(),
    })
}

/// Expresses a normalized quantity in `target` units.
pub fn denormalize(q: &Quantity, target: &UnitDef) -> Result<f64, UnitError> {
    if q.dimension != target.dimension {
        return Err(UnitError::DimensionMismatch {
            expected: target.dimension,
            found: q.dimension,
            unit: target.name().to_string(),
        });
    }
    Ok((q.value_std - target.offset) / target.scale)
}
