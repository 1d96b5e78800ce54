//! Measurement grammar over tokenized sentences.
//!
//! ```text
//! MENTION -> NUM UNIT | CURR NUM | CLOCK
//! NUM     -> DIGITS[.DIGITS] [MAG]
//! CLOCK   -> H[.MM|:MM] (am|pm)
//! RANGE   -> [between] MENTION (and|to|-) MENTION
//! ```
//!
//! A unit must directly follow its number (an optional hyphen, degree sign or the
//! word "degrees" may sit between them); multiword units are matched longest first.
//! Spelled-out numerals are not parsed. Numbers without a resolvable unit produce
//! nothing.

use thiserror::Error;

use crate::units::{normalize, Quantity, UnitDef, UnitRegistry};

/// A normalized measurement and the inclusive token span it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMention {
    pub quantity: Quantity,
    pub span: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no number at this position")]
pub struct NoNumber;

const MARKER_WORDS: [&str; 5] = ["degrees", "degree", "deg", "°", "º"];
const RANGE_JOINERS: [&str; 4] = ["to", "-", "–", "—"];

/// Parses one numeral token: optional sign, digits with optional comma grouping
/// and an optional decimal part.
fn parse_numeral(token: &str) -> Option<f64> {
    let (negative, body) = match token.strip_prefix(['-', '−']) {
        Some(rest) => (true, rest),
        None => (false, token),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    if let Some(f) = frac_part {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    let digits = if int_part.contains(',') {
        let mut groups = int_part.split(',');
        let first = groups.next()?;
        if first.is_empty() || first.len() > 3 || !first.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut joined = first.to_string();
        for g in groups {
            if g.len() != 3 || !g.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            joined.push_str(g);
        }
        joined
    } else {
        if !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        int_part.to_string()
    };
    if digits.is_empty() && frac_part.is_none() {
        return None;
    }
    let text = match frac_part {
        Some(f) => format!("{}.{f}", if digits.is_empty() { "0" } else { &digits }),
        None => digits,
    };
    let v: f64 = text.parse().ok()?;
    Some(if negative { -v } else { v })
}

fn magnitude(token: &str) -> Option<f64> {
    match token {
        "K" => return Some(1e3),
        "M" => return Some(1e6),
        "B" => return Some(1e9),
        _ => {}
    }
    match token.to_ascii_lowercase().as_str() {
        "thousand" => Some(1e3),
        "million" => Some(1e6),
        "billion" => Some(1e9),
        "trillion" => Some(1e12),
        _ => None,
    }
}

/// Reads a number with an optional magnitude word at the start of `tokens`.
/// Returns the scaled value and how many tokens it used.
pub fn parse_number<S: AsRef<str>>(tokens: &[S]) -> Result<(f64, usize), NoNumber> {
    let first = tokens.first().ok_or(NoNumber)?;
    let value = parse_numeral(first.as_ref()).ok_or(NoNumber)?;
    match tokens.get(1).and_then(|t| magnitude(t.as_ref())) {
        Some(mag) => Ok((value * mag, 2)),
        None => Ok((value, 1)),
    }
}

/// Value of a clock reading such as `7.30` + `am`, in hours.
fn clock_hours(time: &str, meridiem: &str) -> Option<f64> {
    let pm = match meridiem.to_ascii_lowercase().as_str() {
        "am" | "a.m." => false,
        "pm" | "p.m." => true,
        _ => return None,
    };
    let (h, m) = match time.split_once(['.', ':']) {
        Some((h, m)) => (h, Some(m)),
        None => (time, None),
    };
    if h.is_empty() || h.len() > 2 || !h.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let hour: u32 = h.parse().ok()?;
    if hour > 12 {
        return None;
    }
    let minute: u32 = match m {
        Some(m) if m.len() == 2 && m.bytes().all(|b| b.is_ascii_digit()) => m.parse().ok()?,
        Some(_) => return None,
        None => 0,
    };
    if minute >= 60 {
        return None;
    }
    let base = if pm { 12 } else { 0 };
    Some(f64::from(hour % 12 + base) + f64::from(minute) / 60.0)
}

struct Scanner<'a, S> {
    tokens: &'a [S],
    registry: &'a UnitRegistry,
}

impl<'a, S: AsRef<str>> Scanner<'a, S> {
    fn tok(&self, i: usize) -> Option<&str> {
        self.tokens.get(i).map(AsRef::as_ref)
    }

    /// Longest alias starting at `j`; returns the unit and the last token it covers.
    fn unit_at(&self, j: usize, marker: bool) -> Option<(&'a UnitDef, usize)> {
        let n = self.tokens.len();
        let max = self.registry.max_alias_words().min(n.saturating_sub(j));
        (1..=max).rev().find_map(|w| {
            let surface = self.tokens[j..j + w]
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" ");
            self.registry
                .lookup_unit(&surface, marker)
                .ok()
                .map(|u| (u, j + w - 1))
        })
    }

    /// Unit following a number at `j`, allowing a hyphen or degree marker in between.
    fn unit_after_number(&self, j: usize) -> Option<(&'a UnitDef, usize)> {
        let t = self.tok(j)?;
        if let Some(found) = self.unit_at(j, false) {
            return Some(found);
        }
        if t == "-" {
            return self.unit_at(j + 1, false);
        }
        if MARKER_WORDS.iter().any(|m| t.eq_ignore_ascii_case(m)) {
            return self.unit_at(j + 1, true);
        }
        None
    }

    fn mention(
        &self,
        value: f64,
        unit: &UnitDef,
        span: (usize, usize),
    ) -> Option<MeasurementMention> {
        normalize(value, unit)
            .ok()
            .map(|quantity| MeasurementMention { quantity, span })
    }

    /// `NUM UNIT` at `i`, retrying without a single-letter magnitude when that
    /// leaves no unit. Returns value, unit, number span end, mention end.
    fn number_unit(&self, i: usize) -> Option<(f64, &'a UnitDef, usize, usize)> {
        let rest = &self.tokens[i..];
        let (value, used) = parse_number(rest).ok()?;
        if let Some((u, end)) = self.unit_after_number(i + used) {
            return Some((value, u, i + used - 1, end));
        }
        if used == 2 && self.tok(i + 1).is_some_and(|t| t.chars().count() == 1) {
            let (bare, _) = parse_number(&rest[..1]).ok()?;
            if let Some((u, end)) = self.unit_after_number(i + 1) {
                return Some((bare, u, i, end));
            }
        }
        None
    }

    fn match_at(&self, i: usize) -> Option<(Vec<MeasurementMention>, usize)> {
        let t = self.tok(i)?;

        if self.registry.is_currency_prefix(t) {
            if let Ok((value, used)) = parse_number(&self.tokens[i + 1..]) {
                let unit = self.registry.lookup_unit(t, false).ok()?;
                let end = i + used;
                return Some((
                    self.mention(value, unit, (i, end)).into_iter().collect(),
                    end + 1,
                ));
            }
        }

        if let (Some(meridiem), Some(unit)) = (self.tok(i + 1), self.registry.time_of_day_unit()) {
            if let Some(hours) = clock_hours(t, meridiem) {
                return Some((
                    self.mention(hours, unit, (i, i + 1)).into_iter().collect(),
                    i + 2,
                ));
            }
        }

        let (value, used) = parse_number(&self.tokens[i..]).ok()?;
        if let Some((value, unit, _, end)) = self.number_unit(i) {
            return Some((
                self.mention(value, unit, (i, end)).into_iter().collect(),
                end + 1,
            ));
        }

        // bare first endpoint of a range borrows the unit of the second
        let joiner = i + used;
        let joined = self.tok(joiner).is_some_and(|j| {
            RANGE_JOINERS.contains(&j)
                || (j.eq_ignore_ascii_case("and")
                    && i > 0
                    && self
                        .tok(i - 1)
                        .is_some_and(|p| p.eq_ignore_ascii_case("between")))
        });
        if joined {
            if let Some((second, unit, _, end)) = self.number_unit(joiner + 1) {
                let mentions = [
                    self.mention(value, unit, (i, joiner - 1)),
                    self.mention(second, unit, (joiner + 1, end)),
                ];
                return Some((mentions.into_iter().flatten().collect(), end + 1));
            }
        }
        None
    }
}

/// Greedy left-to-right scan for measurement mentions in one sentence.
pub fn scan_measurements<S: AsRef<str>>(
    tokens: &[S],
    registry: &UnitRegistry,
) -> Vec<MeasurementMention> {
    let scanner = Scanner { tokens, registry };
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        match scanner.match_at(i) {
            Some((mentions, next)) => {
                out.extend(mentions);
                i = next;
            }
            None => i += 1,
        }
    }
    out
}
