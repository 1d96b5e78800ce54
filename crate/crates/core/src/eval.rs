//! Comparison datasets: loading, scoring, leakage audits and leakage-free splits.
//!
//! Datasets are TSV files with columns `object1 object2 dimension label`, labels in
//! `<`, `=`, `>`, `NA`, and at most one header line.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::aggregate::DoQTable;
use crate::inference::{
    compare_adjectives, compare_nouns, resolve_object, CompareConfig, ComparisonLabel,
};
use crate::units::Dimension;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("the object graph has a single component; no leakage-free split exists")]
    Infeasible,
}

/// Dimension column of a dataset row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DatasetDimension {
    Native(Dimension),
    /// A scale with no corresponding dimension, kept for reporting.
    Uncovered(String),
}

impl DatasetDimension {
    pub fn parse(s: &str) -> Option<Self> {
        let lower = s.trim().to_lowercase();
        match lower.as_str() {
            "size" => Some(DatasetDimension::Native(Dimension::Length)),
            "weight" => Some(DatasetDimension::Native(Dimension::Mass)),
            "speed" => Some(DatasetDimension::Native(Dimension::Speed)),
            "strength" | "rigidity" => Some(DatasetDimension::Uncovered(lower)),
            _ => s.parse().ok().map(DatasetDimension::Native),
        }
    }

    pub fn native(&self) -> Option<Dimension> {
        match self {
            DatasetDimension::Native(d) => Some(*d),
            DatasetDimension::Uncovered(_) => None,
        }
    }
}

impl fmt::Display for DatasetDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetDimension::Native(d) => write!(f, "{d}"),
            DatasetDimension::Uncovered(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Gold {
    Label(ComparisonLabel),
    NotComparable,
}

impl Gold {
    pub fn label(self) -> Option<ComparisonLabel> {
        match self {
            Gold::Label(l) => Some(l),
            Gold::NotComparable => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Gold::Label(l) => l.symbol(),
            Gold::NotComparable => "NA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonExample {
    pub object1: String,
    pub object2: String,
    pub dimension: DatasetDimension,
    pub gold: Gold,
}

impl ComparisonExample {
    /// Same fact with the objects swapped.
    pub fn swapped(&self) -> Self {
        ComparisonExample {
            object1: self.object2.clone(),
            object2: self.object1.clone(),
            dimension: self.dimension.clone(),
            gold: match self.gold {
                Gold::Label(l) => Gold::Label(l.inverse()),
                Gold::NotComparable => Gold::NotComparable,
            },
        }
    }

    /// True when the example has a directed label in a dimension the table covers.
    pub fn is_scoreable(&self) -> bool {
        self.gold.label().is_some() && self.dimension.native().is_some()
    }

    pub fn to_tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.object1,
            self.object2,
            self.dimension,
            self.gold.symbol()
        )
    }
}

fn format_error(line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Format {
        line,
        message: message.into(),
    }
}

pub fn parse_dataset(text: &str) -> Result<Vec<ComparisonExample>, EvalError> {
    let mut out = Vec::new();
    let mut seen_row = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(format_error(
                line_no,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let first = !seen_row;
        seen_row = true;
        let gold = match cols[3] {
            "NA" | "N.A." => Gold::NotComparable,
            l => match l.parse() {
                Ok(label) => Gold::Label(label),
                Err(_) if first && l.chars().all(char::is_alphabetic) => continue,
                Err(_) => return Err(format_error(line_no, format!("bad label `{l}`"))),
            },
        };
        let dimension = DatasetDimension::parse(cols[2])
            .ok_or_else(|| format_error(line_no, format!("unknown dimension `{}`", cols[2])))?;
        if cols[0].is_empty() || cols[1].is_empty() {
            return Err(format_error(line_no, "empty object"));
        }
        if cols[0].to_lowercase() == cols[1].to_lowercase()
            && gold != Gold::Label(ComparisonLabel::Equal)
        {
            return Err(format_error(
                line_no,
                "an object compared with itself must be labelled `=`",
            ));
        }
        out.push(ComparisonExample {
            object1: cols[0].to_string(),
            object2: cols[1].to_string(),
            dimension,
            gold,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<ComparisonExample>, EvalError> {
    parse_dataset(&fs::read_to_string(path)?)
}

pub fn write_dataset(examples: &[ComparisonExample]) -> String {
    let mut s = String::from("object1\tobject2\tdimension\tlabel\n");
    for e in examples {
        s.push_str(&e.to_tsv_line());
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Nouns,
    Adjectives,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Score {
    pub scoreable: usize,
    pub correct: usize,
    pub accuracy: f64,
}

impl Score {
    fn add(&mut self, correct: bool) {
        self.scoreable += 1;
        self.correct += usize::from(correct);
        self.accuracy = self.correct as f64 / self.scoreable as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub examples: usize,
    pub not_comparable: usize,
    pub out_of_coverage: usize,
    pub overall: Score,
    pub per_dimension: BTreeMap<String, Score>,
    /// Fraction of scoreable examples answered from table evidence.
    pub coverage: f64,
    pub majority_label: Option<ComparisonLabel>,
    pub majority_baseline: f64,
}

fn has_evidence(table: &DoQTable, object: &str, dim: Dimension, cfg: &CompareConfig) -> bool {
    resolve_object(table, object, dim).is_some_and(|(_, d)| d.count() >= cfg.min_count.max(1))
}

/// Predicted label for one example in a covered dimension.
pub fn predict(
    table: &DoQTable,
    o1: &str,
    o2: &str,
    dim: Dimension,
    mode: EvalMode,
    cfg: &CompareConfig,
) -> (ComparisonLabel, bool) {
    match mode {
        EvalMode::Nouns => {
            let found = has_evidence(table, o1, dim, cfg) && has_evidence(table, o2, dim, cfg);
            (compare_nouns(table, o1, o2, dim, cfg), found)
        }
        EvalMode::Adjectives => match compare_adjectives(table, o1, o2, dim, cfg) {
            Ok(label) => (label, true),
            Err(_) => (compare_nouns(table, o1, o2, dim, cfg), false),
        },
    }
}

pub fn evaluate(
    table: &DoQTable,
    data: &[ComparisonExample],
    mode: EvalMode,
    cfg: &CompareConfig,
) -> EvalReport {
    let mut overall = Score::default();
    let mut per_dimension: BTreeMap<String, Score> = BTreeMap::new();
    let mut gold_counts: BTreeMap<ComparisonLabel, usize> = BTreeMap::new();
    let (mut not_comparable, mut out_of_coverage, mut found) = (0, 0, 0);
    for e in data {
        let Some(gold) = e.gold.label() else {
            not_comparable += 1;
            continue;
        };
        let Some(dim) = e.dimension.native() else {
            out_of_coverage += 1;
            continue;
        };
        let (predicted, evidence) = predict(table, &e.object1, &e.object2, dim, mode, cfg);
        found += usize::from(evidence);
        overall.add(predicted == gold);
        per_dimension
            .entry(e.dimension.to_string())
            .or_default()
            .add(predicted == gold);
        *gold_counts.entry(gold).or_insert(0) += 1;
    }
    // most frequent gold label; ties go to the first in LESS, EQUAL, GREATER order
    let majority = gold_counts.iter().fold(
        None,
        |best: Option<(ComparisonLabel, usize)>, (&l, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((l, c)),
        },
    );
    let ratio = |n: usize| {
        if overall.scoreable == 0 {
            0.0
        } else {
            n as f64 / overall.scoreable as f64
        }
    };
    EvalReport {
        examples: data.len(),
        not_comparable,
        out_of_coverage,
        coverage: ratio(found),
        majority_label: majority.map(|(l, _)| l),
        majority_baseline: ratio(majority.map_or(0, |(_, c)| c)),
        per_dimension,
        overall,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    pub eval_examples: usize,
    pub transitive_flags: BTreeSet<usize>,
    pub object_flags: BTreeSet<usize>,
    pub transitive_rate: f64,
    pub object_rate: f64,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: usize,
    strict: bool,
    example: usize,
}

/// Directed train facts for one dimension: `a -> b` means a > b; equalities go both ways.
#[derive(Debug, Default)]
struct FactGraph {
    nodes: HashMap<String, usize>,
    edges: Vec<Vec<Edge>>,
}

impl FactGraph {
    fn node(&mut self, name: &str) -> usize {
        let n = self.nodes.len();
        let id = *self.nodes.entry(name.to_lowercase()).or_insert(n);
        if id == self.edges.len() {
            self.edges.push(Vec::new());
        }
        id
    }

    fn add(&mut self, from: &str, to: &str, strict: bool, example: usize) {
        let (a, b) = (self.node(from), self.node(to));
        self.edges[a].push(Edge {
            to: b,
            strict,
            example,
        });
        if !strict {
            self.edges[b].push(Edge {
                to: a,
                strict,
                example,
            });
        }
    }

    /// Train example indices along a path from `from` to `to` of length at least one,
    /// containing a strict edge when `strict` is requested and only equalities otherwise.
    fn path(&self, from: &str, to: &str, strict: bool) -> Option<Vec<usize>> {
        let (&s, &t) = (
            self.nodes.get(&from.to_lowercase())?,
            self.nodes.get(&to.to_lowercase())?,
        );
        // state = node * 2 + (strict edge used)
        let mut parent: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::new();
        let start = s * 2;
        let goal = t * 2 + usize::from(strict);
        queue.push_back(start);
        let mut seen = BTreeSet::from([start]);
        while let Some(state) = queue.pop_front() {
            let (node, used) = (state / 2, state % 2 == 1);
            for e in &self.edges[node] {
                if e.strict && !strict {
                    continue;
                }
                let next = e.to * 2 + usize::from(used || e.strict);
                if next == goal {
                    let mut path = vec![e.example];
                    let mut cur = state;
                    while cur != start {
                        let (prev, ex) = parent[&cur];
                        path.push(ex);
                        cur = prev;
                    }
                    path.reverse();
                    return Some(path);
                }
                if seen.insert(next) {
                    parent.insert(next, (state, e.example));
                    queue.push_back(next);
                }
            }
        }
        None
    }
}

fn fact_graphs(train: &[ComparisonExample]) -> HashMap<&DatasetDimension, FactGraph> {
    let mut graphs: HashMap<&DatasetDimension, FactGraph> = HashMap::new();
    for (i, e) in train.iter().enumerate() {
        let Some(label) = e.gold.label() else {
            continue;
        };
        let g = graphs.entry(&e.dimension).or_default();
        match label {
            ComparisonLabel::Greater => g.add(&e.object1, &e.object2, true, i),
            ComparisonLabel::Less => g.add(&e.object2, &e.object1, true, i),
            ComparisonLabel::Equal => g.add(&e.object1, &e.object2, false, i),
        }
    }
    graphs
}

fn derivation(
    graphs: &HashMap<&DatasetDimension, FactGraph>,
    e: &ComparisonExample,
) -> Option<Vec<usize>> {
    let g = graphs.get(&e.dimension)?;
    match e.gold.label()? {
        ComparisonLabel::Greater => g.path(&e.object1, &e.object2, true),
        ComparisonLabel::Less => g.path(&e.object2, &e.object1, true),
        ComparisonLabel::Equal => g.path(&e.object1, &e.object2, false),
    }
}

/// Train examples chaining into `example`, if its fact follows from the train set.
pub fn leakage_path(
    train: &[ComparisonExample],
    example: &ComparisonExample,
) -> Option<Vec<usize>> {
    derivation(&fact_graphs(train), example)
}

pub fn detect_leakage(train: &[ComparisonExample], eval: &[ComparisonExample]) -> LeakageReport {
    let graphs = fact_graphs(train);
    let train_objects: BTreeSet<String> = train
        .iter()
        .flat_map(|e| [e.object1.to_lowercase(), e.object2.to_lowercase()])
        .collect();
    let mut transitive_flags = BTreeSet::new();
    let mut object_flags = BTreeSet::new();
    for (i, e) in eval.iter().enumerate() {
        if derivation(&graphs, e).is_some() {
            transitive_flags.insert(i);
        }
        if train_objects.contains(&e.object1.to_lowercase())
            || train_objects.contains(&e.object2.to_lowercase())
        {
            object_flags.insert(i);
        }
    }
    let rate = |n: usize| {
        if eval.is_empty() {
            0.0
        } else {
            n as f64 / eval.len() as f64
        }
    };
    LeakageReport {
        eval_examples: eval.len(),
        transitive_rate: rate(transitive_flags.len()),
        object_rate: rate(object_flags.len()),
        transitive_flags,
        object_flags,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanSplit {
    pub train: Vec<ComparisonExample>,
    pub dev: Vec<ComparisonExample>,
    pub test: Vec<ComparisonExample>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Assigns whole connected components of the object graph to train, dev and test,
/// largest first, each to the split furthest below its target share.
pub fn make_clean_split(
    examples: &[ComparisonExample],
    ratios: [f64; 3],
    seed: u64,
) -> Result<CleanSplit, SplitError> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0))
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(SplitError::InvalidRatios(ratios));
    }
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut id = |s: &str| {
        let n = ids.len();
        *ids.entry(s.to_lowercase()).or_insert(n)
    };
    let pairs: Vec<(usize, usize)> = examples
        .iter()
        .map(|e| (id(&e.object1), id(&e.object2)))
        .collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    for &(a, b) in &pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &(a, _)) in pairs.iter().enumerate() {
        members.entry(find(&mut parent, a)).or_default().push(i);
    }
    if members.len() <= 1 {
        return Err(SplitError::Infeasible);
    }
    let mut components: Vec<Vec<usize>> = members.into_values().collect();
    components.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    components.sort_by_key(|c| std::cmp::Reverse(c.len()));

    let total = examples.len() as f64;
    let mut sizes = [0usize; 3];
    let mut assignment = vec![0usize; examples.len()];
    for comp in &components {
        let deficit = |i: usize| ratios[i] * total - sizes[i] as f64;
        let target = (0..3).fold(
            0,
            |best, i| if deficit(i) > deficit(best) { i } else { best },
        );
        sizes[target] += comp.len();
        for &e in comp {
            assignment[e] = target;
        }
    }
    let pick = |split: usize| {
        examples
            .iter()
            .zip(&assignment)
            .filter(|(_, &a)| a == split)
            .map(|(e, _)| e.clone())
            .collect()
    };
    Ok(CleanSplit {
        train: pick(0),
        dev: pick(1),
        test: pick(2),
    })
}
