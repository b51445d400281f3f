//! Degree-count ingestion: KONECT-style edge lists and degree-count CSVs.
//!
//! Degree counts are the sufficient statistic for inference, so everything
//! downstream consumes the sparse `DegreeCounts` map. Edge lists reduce to
//! counts in one pass; which notion of degree applies (in-degree of a
//! directed edge list, or total incident edges read as undirected) is an
//! explicit per-dataset flag because datasets in the wild are a mix.

use std::collections::HashMap;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Which degree an edge list contributes to each vertex.
///
/// Multi-edges count multiply. A self-loop adds 1 under `DirectedIn` and 2
/// under `UndirectedTotal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegreeMode {
    /// In-degree of the target vertex; sources still count as degree-0
    /// vertices when they never appear as targets.
    DirectedIn,
    /// Number of incident edge endpoints, ignoring direction.
    UndirectedTotal,
}

impl std::str::FromStr for DegreeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "directed-in" => Ok(DegreeMode::DirectedIn),
            "undirected-total" => Ok(DegreeMode::UndirectedTotal),
            other => Err(Error::Data(format!(
                "unknown degree mode {other:?}; expected directed-in or undirected-total"
            ))),
        }
    }
}

impl std::fmt::Display for DegreeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DegreeMode::DirectedIn => "directed-in",
            DegreeMode::UndirectedTotal => "undirected-total",
        })
    }
}

/// Sparse degree → vertex-count map with a truncation level.
///
/// Counts below the truncation level `l` stay in the map (they are reported
/// as excluded mass) but are not part of the modeled data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeCounts {
    counts: BTreeMap<u64, u64>,
    l: u64,
}

impl DegreeCounts {
    pub fn new(counts: BTreeMap<u64, u64>) -> Result<Self> {
        let counts: BTreeMap<u64, u64> = counts.into_iter().filter(|&(_, n)| n > 0).collect();
        if counts.is_empty() {
            return Err(Error::Data("degree counts are empty".into()));
        }
        Ok(Self { counts, l: 0 })
    }

    pub fn from_pairs<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> Result<Self> {
        Self::new(pairs.into_iter().collect())
    }

    /// All counts including any below the truncation level.
    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    /// Truncation level: the minimum degree included in modeling.
    pub fn truncation(&self) -> u64 {
        self.l
    }

    /// Largest degree with a positive count.
    pub fn max_degree(&self) -> u64 {
        *self.counts.keys().next_back().expect("counts are never empty")
    }

    pub fn total_vertices(&self) -> u64 {
        self.counts.values().sum()
    }

    /// (degree, count) pairs at or above the truncation level.
    pub fn modeled(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.range(self.l..).map(|(&k, &n)| (k, n))
    }

    pub fn modeled_vertices(&self) -> u64 {
        self.modeled().map(|(_, n)| n).sum()
    }

    /// Vertex count below the truncation level.
    pub fn excluded_vertices(&self) -> u64 {
        self.counts.range(..self.l).map(|(_, &n)| n).sum()
    }

    /// Return a copy truncated at `l`. Errors when nothing would remain.
    pub fn truncate(&self, l: u64) -> Result<Self> {
        if l > self.max_degree() {
            return Err(Error::Data(format!(
                "truncation level {l} exceeds the maximum observed degree {}",
                self.max_degree()
            )));
        }
        let mut out = self.clone();
        out.l = l;
        if out.modeled_vertices() == 0 {
            return Err(Error::Data(format!("no vertices with degree >= {l} to model")));
        }
        Ok(out)
    }

    /// Empirical survival F̂(k) = (# vertices with degree > k) / total, for
    /// k = −1 and every observed degree. F̂(−1) = 1 by construction.
    pub fn empirical_survival(&self) -> BTreeMap<i64, f64> {
        let total = self.total_vertices() as f64;
        let mut out = BTreeMap::new();
        out.insert(-1, 1.0);
        let mut above = self.total_vertices();
        for (&k, &n) in &self.counts {
            above -= n;
            out.insert(k as i64, above as f64 / total);
        }
        out
    }

    /// Degree-count CSV with header (degree, count).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "degree,count")?;
        for (&k, &n) in &self.counts {
            writeln!(w, "{k},{n}")?;
        }
        Ok(())
    }
}

/// Parse a whitespace-delimited edge list into degree counts.
///
/// Lines starting with '%' or '#' are comments, blank lines are skipped, and
/// any columns beyond the two vertex ids (weights, timestamps) are ignored.
/// Vertex ids are opaque tokens.
pub fn parse_edge_list<R: BufRead>(reader: R, mode: DegreeMode) -> Result<DegreeCounts> {
    let mut degrees: HashMap<String, u64> = HashMap::new();
    let mut saw_edge = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(src), Some(dst)) = (tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected at least two vertex ids, got {trimmed:?}"),
            });
        };
        saw_edge = true;
        match mode {
            DegreeMode::DirectedIn => {
                degrees.entry(src.to_string()).or_insert(0);
                *degrees.entry(dst.to_string()).or_insert(0) += 1;
            }
            DegreeMode::UndirectedTotal => {
                *degrees.entry(src.to_string()).or_insert(0) += 1;
                *degrees.entry(dst.to_string()).or_insert(0) += 1;
            }
        }
    }
    if !saw_edge {
        return Err(Error::Data("edge list contains no edges".into()));
    }
    let mut counts = BTreeMap::new();
    for deg in degrees.into_values() {
        *counts.entry(deg).or_insert(0) += 1;
    }
    DegreeCounts::new(counts)
}

/// Load a degree-count CSV with header (degree, count).
pub fn load_counts<R: BufRead>(reader: R) -> Result<DegreeCounts> {
    let mut counts = BTreeMap::new();
    let mut lines = reader.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::Data("empty degree-count file".into()));
    };
    let header = header?;
    let norm: Vec<String> =
        header.split(',').map(|t| t.trim().to_ascii_lowercase()).collect();
    if norm != ["degree", "count"] {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header \"degree,count\", got {header:?}"),
        });
    }
    for (idx, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected two columns, got {trimmed:?}"),
            });
        }
        let degree: u64 = parts[0].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("degree must be a nonnegative integer, got {:?}", parts[0]),
        })?;
        let count: u64 = parts[1].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("count must be a nonnegative integer, got {:?}", parts[1]),
        })?;
        if counts.insert(degree, count).is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("duplicate row for degree {degree}"),
            });
        }
    }
    DegreeCounts::new(counts)
}
