#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use doq_core::Dimension;

pub const OBJECTS: [&str; 6] = ["ant", "mouse", "cat", "dog", "horse", "elephant"];
pub const DIMENSIONS: [Dimension; 3] = [Dimension::Mass, Dimension::Speed, Dimension::Length];

/// Conversion factors to the standard unit, written out from the unit definitions.
pub fn oracle_units(dim: Dimension) -> &'static [(&'static str, f64)] {
    match dim {
        Dimension::Mass => &[("g", 0.001), ("kg", 1.0), ("lb", 0.45359237)],
        Dimension::Speed => &[
            ("km/h", 1000.0 / 3600.0),
            ("mph", 1609.344 / 3600.0),
            ("m/s", 1.0),
        ],
        Dimension::Length => &[("cm", 0.01), ("m", 1.0), ("ft", 0.3048)],
        _ => unreachable!("planted corpora only use three dimensions"),
    }
}

fn verb(dim: Dimension) -> &'static str {
    match dim {
        Dimension::Mass => "weighs",
        Dimension::Speed => "runs at",
        Dimension::Length => "measures",
        _ => unreachable!(),
    }
}

/// Planted median of object `i` in `dim`, in the standard unit. Objects are a decade
/// apart and ordered differently in each dimension.
pub fn planted_median(i: usize, dim: Dimension) -> f64 {
    let (base, shift) = match dim {
        Dimension::Mass => (0.001, 0),
        Dimension::Speed => (0.05, 2),
        Dimension::Length => (0.005, 5),
        _ => unreachable!(),
    };
    base * 10f64.powi(((i + shift) % OBJECTS.len()) as i32)
}

fn round_sig(v: f64, digits: i32) -> f64 {
    let mag = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (v * factor).round() / factor
}

pub struct Planted {
    pub sentences: Vec<String>,
    /// Number of measured, non-negated mentions per object and dimension.
    pub counts: BTreeMap<(String, Dimension), u64>,
}

impl Planted {
    pub fn text(&self) -> String {
        self.sentences.join("\n")
    }
}

/// `n` sentences: 80% measurements scattered within 0.3 decades of the planted median,
/// 10% negated measurements with absurd values, 10% without any measurement.
pub fn planted_corpus(n: usize, seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(n);
    let mut counts = BTreeMap::new();
    for _ in 0..n {
        let i = rng.gen_range(0..OBJECTS.len());
        let obj = OBJECTS[i];
        let dim = DIMENSIONS[rng.gen_range(0..DIMENSIONS.len())];
        let units = oracle_units(dim);
        let (unit, scale) = units[rng.gen_range(0..units.len())];
        let kind = rng.gen_range(0..10);
        if kind == 0 {
            sentences.push(format!("The {obj} was seen near the river."));
            continue;
        }
        let spread = if kind == 1 {
            6.0
        } else {
            rng.gen_range(-0.3..0.3)
        };
        let value = round_sig(planted_median(i, dim) * 10f64.powf(spread) / scale, 4);
        if kind == 1 {
            sentences.push(format!("The {obj} is not {value} {unit}."));
        } else {
            sentences.push(format!("The {obj} {} about {value} {unit}.", verb(dim)));
            *counts.entry((obj.to_string(), dim)).or_insert(0) += 1;
        }
    }
    Planted { sentences, counts }
}

/// Random short sentences mixing objects, modifiers, numbers and units.
pub fn random_corpus(rng: &mut ChaCha8Rng, sentences: usize) -> Vec<String> {
    const WORDS: [&str; 14] = [
        "the", "truck", "small", "river", "carried", "about", "near", "boat", "old", "bridge",
        "was", "heavy", "and", "a",
    ];
    const UNITS: [&str; 8] = ["kg", "mph", "m", "feet", "volts", "days", "°C", "litres"];
    (0..sentences)
        .map(|_| {
            let len = rng.gen_range(3..18);
            let mut words: Vec<String> = Vec::with_capacity(len + 1);
            for _ in 0..len {
                match rng.gen_range(0..30) {
                    0..=2 => words.push(format!(
                        "{} {}",
                        rng.gen_range(1..5000),
                        UNITS[rng.gen_range(0..UNITS.len())]
                    )),
                    3 => words.push("not".to_string()),
                    _ => words.push(WORDS[rng.gen_range(0..WORDS.len())].to_string()),
                }
            }
            let mut s = words.join(" ");
            s.push('.');
            let mut chars = s.chars();
            chars.next().map_or(String::new(), |c| {
                c.to_uppercase().collect::<String>() + chars.as_str()
            })
        })
        .collect()
}
