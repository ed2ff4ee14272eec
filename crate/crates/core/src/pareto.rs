//! Dominance, strong and weak Pareto sets, rescaling and weighted-sum
//! preference ranking. All criteria are minimized.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    None,
    /// `a ≤ b` componentwise with at least one strict inequality.
    Dominates,
    /// `a < b` in every component.
    StrictlyDominates,
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "objective vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// How `a` relates to `b`.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<Dominance> {
    check_lengths(a, b)?;
    Ok(relation(a, b))
}

fn relation(a: &[f64], b: &[f64]) -> Dominance {
    let mut all_strict = true;
    let mut any_strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return Dominance::None;
        }
        if x < y {
            any_strict = true;
        } else {
            all_strict = false;
        }
    }
    match (any_strict, all_strict) {
        (true, true) => Dominance::StrictlyDominates,
        (true, false) => Dominance::Dominates,
        _ => Dominance::None,
    }
}

fn weakly_dominates(a: &[f64], b: &[f64]) -> bool {
    relation(a, b) != Dominance::None
}

fn strictly_dominates(a: &[f64], b: &[f64]) -> bool {
    relation(a, b) == Dominance::StrictlyDominates
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Labelled objective vectors of a common dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveTable {
    n_criteria: usize,
    ids: Vec<String>,
    points: Vec<Vec<f64>>,
}

impl ObjectiveTable {
    pub fn new(n_criteria: usize) -> Self {
        Self {
            n_criteria,
            ids: Vec::new(),
            points: Vec::new(),
        }
    }

    /// Builds a table from `(id, vector)` rows; the dimension is taken from
    /// the first row.
    pub fn from_rows<I, S>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut rows = rows.into_iter().peekable();
        let n = rows.peek().map_or(0, |(_, v)| v.len());
        let mut t = Self::new(n);
        for (id, v) in rows {
            t.push(id, v)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, id: impl Into<String>, point: Vec<f64>) -> Result<()> {
        if point.len() != self.n_criteria {
            return Err(Error::DimensionMismatch(format!(
                "table has {} criteria, point has {}",
                self.n_criteria,
                point.len()
            )));
        }
        if let Some(v) = point.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite objective value {v}")));
        }
        self.ids.push(id.into());
        self.points.push(point);
        Ok(())
    }

    pub fn n_criteria(&self) -> usize {
        self.n_criteria
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.points.iter().map(Vec::as_slice))
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index_of(id).map(|i| self.points[i].as_slice())
    }

    /// Rows whose id is in `ids`, in table order.
    pub fn restrict(&self, ids: &[String]) -> Self {
        let keep: std::collections::HashSet<&str> = ids.iter().map(String::as_str).collect();
        let mut t = Self::new(self.n_criteria);
        for (id, p) in self.rows().filter(|(id, _)| keep.contains(id)) {
            t.ids.push(id.to_string());
            t.points.push(p.to_vec());
        }
        t
    }

    /// Ids of rows whose vectors coincide with an earlier row.
    pub fn duplicate_vectors(&self) -> Vec<(String, String)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| lex_cmp(&self.points[i], &self.points[j]).then(i.cmp(&j)));
        order
            .windows(2)
            .filter(|w| self.points[w[0]] == self.points[w[1]])
            .map(|w| (self.ids[w[0]].clone(), self.ids[w[1]].clone()))
            .collect()
    }
}

/// Strong set (dominated by no point) and weak set (strictly dominated by
/// no point). `weak` contains `strong`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParetoResult {
    pub strong: Vec<(String, Vec<f64>)>,
    pub weak: Vec<(String, Vec<f64>)>,
    /// Pairs of points with identical objective vectors.
    pub warnings: Vec<String>,
}

impl ParetoResult {
    pub fn strong_ids(&self) -> Vec<String> {
        self.strong.iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn weak_ids(&self) -> Vec<String> {
        self.weak.iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn front(&self) -> Vec<Vec<f64>> {
        self.strong.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn front_table(&self) -> ObjectiveTable {
        let n = self.strong.first().map_or(0, |(_, v)| v.len());
        let mut t = ObjectiveTable::new(n);
        for (id, v) in &self.strong {
            t.ids.push(id.clone());
            t.points.push(v.clone());
        }
        t
    }

    pub fn is_strong(&self, id: &str) -> bool {
        self.strong.iter().any(|(i, _)| i == id)
    }
}

fn duplicate_warnings(table: &ObjectiveTable) -> Vec<String> {
    table
        .duplicate_vectors()
        .into_iter()
        .map(|(a, b)| format!("points `{a}` and `{b}` have identical objective vectors"))
        .collect()
}

/// Strong and weak Pareto sets, each listed in table order.
///
/// Points are visited in lexicographic order; any dominator of a point
/// precedes it, and by transitivity some strong point dominates it, so only
/// the strong points found so far need checking.
pub fn pareto_set(table: &ObjectiveTable) -> Result<ParetoResult> {
    if table.is_empty() {
        return Err(Error::InvalidArgument("Pareto set of an empty table".into()));
    }
    let pts = table.points();
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&i, &j| lex_cmp(&pts[i], &pts[j]).then(i.cmp(&j)));
    let mut strong: Vec<usize> = Vec::new();
    for &i in &order {
        if !strong.iter().any(|&s| weakly_dominates(&pts[s], &pts[i])) {
            strong.push(i);
        }
    }
    let mut is_strong = vec![false; table.len()];
    strong.iter().for_each(|&s| is_strong[s] = true);
    let weak: Vec<usize> = (0..table.len())
        .filter(|&i| is_strong[i] || !strong.iter().any(|&s| strictly_dominates(&pts[s], &pts[i])))
        .collect();
    let row = |i: usize| (table.ids()[i].clone(), pts[i].clone());
    Ok(ParetoResult {
        strong: (0..table.len()).filter(|&i| is_strong[i]).map(row).collect(),
        weak: weak.into_iter().map(row).collect(),
        warnings: duplicate_warnings(table),
    })
}

/// Pareto sets of the union of the table behind `existing` and `new_points`,
/// comparing new points only with the existing sets and each other.
pub fn merge_monotone(existing: &ParetoResult, new_points: &ObjectiveTable) -> Result<ParetoResult> {
    if new_points.is_empty() {
        return Ok(existing.clone());
    }
    let n = new_points.n_criteria();
    let mut candidates = ObjectiveTable::new(n);
    for (id, v) in &existing.strong {
        candidates.push(id.clone(), v.clone())?;
    }
    for (id, v) in new_points.rows() {
        candidates.push(id, v.to_vec())?;
    }
    let mut merged = pareto_set(&candidates)?;

    let mut pool = ObjectiveTable::new(n);
    for (id, v) in &existing.weak {
        pool.push(id.clone(), v.clone())?;
    }
    for (id, v) in new_points.rows() {
        pool.push(id, v.to_vec())?;
    }
    merged.weak = pool
        .rows()
        .filter(|(_, p)| !merged.strong.iter().any(|(_, s)| strictly_dominates(s, p)))
        .map(|(id, p)| (id.to_string(), p.to_vec()))
        .collect();
    let mut warnings = existing.warnings.clone();
    warnings.extend(duplicate_warnings(&pool));
    warnings.sort();
    warnings.dedup();
    merged.warnings = warnings;
    Ok(merged)
}

/// A table mapped affinely to `[0, 1]` per criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub table: ObjectiveTable,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Criteria with `max = min`; these are mapped to 0.
    pub degenerate: Vec<bool>,
}

impl Rescaled {
    pub fn degenerate_criteria(&self) -> Vec<usize> {
        self.degenerate.iter().enumerate().filter(|(_, d)| **d).map(|(i, _)| i).collect()
    }
}

/// `(v - min) / (max - min)` per criterion.
pub fn rescale(table: &ObjectiveTable) -> Result<Rescaled> {
    if table.is_empty() {
        return Err(Error::InvalidArgument("cannot rescale an empty table".into()));
    }
    let n = table.n_criteria();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in table.points() {
        for k in 0..n {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let degenerate: Vec<bool> = (0..n).map(|k| hi[k] == lo[k]).collect();
    let mut out = ObjectiveTable::new(n);
    for (id, p) in table.rows() {
        let v = (0..n)
            .map(|k| {
                if degenerate[k] {
                    0.0
                } else {
                    ((p[k] - lo[k]) / (hi[k] - lo[k])).clamp(0.0, 1.0)
                }
            })
            .collect();
        out.push(id, v)?;
    }
    Ok(Rescaled {
        table: out,
        lo,
        hi,
        degenerate,
    })
}

/// Weights of a weighted-sum preference: nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceWeights(Vec<f64>);

/// Allowed deviation of the weight sum from one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl PreferenceWeights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        if let Some(w) = lambda.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidWeights(format!("weight {w} outside [0, 1]")));
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(lambda))
    }

    /// Equal weights.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Unit weight on criterion `k`.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        Self(w)
    }

    /// Average of the seven rescaled criteria.
    pub fn p1() -> Self {
        Self::uniform(7)
    }

    /// Time and error weighted 0.4 each, the other five 0.04 each.
    pub fn p2() -> Self {
        Self(vec![0.4, 0.4, 0.04, 0.04, 0.04, 0.04, 0.04])
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "p1" => Ok(Self::p1()),
            "p2" => Ok(Self::p2()),
            other => Err(Error::InvalidWeights(format!("unknown preset `{other}`"))),
        }
    }

    /// Parses `w1,w2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let lambda = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidWeights(format!("`{}` is not a number", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(lambda)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether every weight is positive, the case where ranking is
    /// guaranteed to favour Pareto-optimal points.
    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|w| *w > 0.0)
    }

    pub fn score(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(w, x)| w * x).sum()
    }
}

impl TryFrom<Vec<f64>> for PreferenceWeights {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PreferenceWeights> for Vec<f64> {
    fn from(w: PreferenceWeights) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    pub id: String,
    pub score: f64,
}

/// Ids sorted ascending by weighted sum. Equal scores fall back to the
/// lexicographic order of the vectors, then to the id.
pub fn discover(table: &ObjectiveTable, weights: &PreferenceWeights) -> Result<Vec<Ranked>> {
    if weights.len() != table.n_criteria() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} criteria",
            weights.len(),
            table.n_criteria()
        )));
    }
    let mut ranked: Vec<(f64, &str, &[f64])> = table.rows().map(|(id, p)| (weights.score(p), id, p)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex_cmp(a.2, b.2)).then_with(|| a.1.cmp(b.1)));
    Ok(ranked
        .into_iter()
        .map(|(score, id, _)| Ranked {
            id: id.to_string(),
            score,
        })
        .collect())
}

/// Number of front members taking each distinct value of a labelled
/// coordinate, e.g. how many Pareto solvers use each smoother.
pub fn composition_counts<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    out.sort();
    out
}
