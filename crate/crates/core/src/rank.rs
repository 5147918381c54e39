//! Ranks of divisors, Riemann-Roch, specialness, Clifford index and base
//! points.
//!
//! `rk(D) >= r` needs `D - E` to have an effective representative for every
//! effective `E` of degree `r`. Letting `E` range over a rank-determining
//! set suffices; by default that set is the vertex set of a loopless model
//! (the graph vertices plus one midpoint per loop). Removing the points of
//! `E` one at a time, each step keeps an effective representative: `D - P`
//! has one exactly when the `P`-reduced divisor of `D` is positive at `P`.

use std::sync::Arc;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{canonical_divisor, MetricGraph, Point};
use crate::rational::{common_denominator, format_rational, int, Rational};
use crate::reduction::{equivalent_effective, reduced_divisor_at};

/// Points the effective divisors `E` of the rank definition are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSet {
    /// Graph vertices and loop midpoints.
    RankDetermining,
    /// Every point of the uniform lattice of spacing `1/(q * resolution)`,
    /// `q` the common denominator of the edge lengths and the support.
    /// Spacing is halved until every loop has at least two segments.
    /// Reductions run on the matching lattice.
    Lattice { resolution: u32 },
}

impl CandidateSet {
    fn points(&self, d: &Divisor) -> Result<Vec<Point>> {
        let graph = d.graph();
        match *self {
            CandidateSet::RankDetermining => {
                let mut points: Vec<Point> = graph.vertices().map(Point::Vertex).collect();
                for (e, edge) in graph.edges() {
                    if edge.is_loop() {
                        points.push(Point::Interior { edge: e, offset: &edge.length / int(2) });
                    }
                }
                Ok(points)
            }
            CandidateSet::Lattice { resolution } => {
                let mut unit = lattice_unit(d, resolution)?;
                while graph.edges().any(|(_, e)| e.is_loop() && e.length < &unit * int(2)) {
                    unit /= int(2);
                }
                Ok(graph.lattice_points(&unit))
            }
        }
    }

    fn resolution(&self) -> u32 {
        match *self {
            CandidateSet::RankDetermining => 1,
            CandidateSet::Lattice { resolution } => resolution,
        }
    }
}

/// `1/(q * resolution)` with `q` the common denominator of the edge lengths
/// and the offsets in the support of `d`.
pub fn lattice_unit(d: &Divisor, resolution: u32) -> Result<Rational> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let graph = d.graph();
    let q = common_denominator(graph.edges().map(|(_, e)| &e.length).chain(d.support().filter_map(Point::offset)));
    Ok(Rational::new(BigInt::from(1), q * BigInt::from(resolution)))
}

/// A rank together with an effective divisor `E` of degree `rank + 1` such
/// that `D - E` has no effective representative. For rank `-1`, `E` is zero.
#[derive(Debug, Clone)]
pub struct RankResult {
    pub rank: i64,
    pub failing: Divisor,
}

impl Serialize for RankResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RankResult", 2)?;
        st.serialize_field("rank", &self.rank)?;
        st.serialize_field("failing_e", &self.failing.to_string())?;
        st.end()
    }
}

struct Search<'a> {
    candidates: &'a [Point],
    resolution: u32,
}

enum Expansion {
    Children(Vec<(Vec<usize>, Divisor)>),
    Failure(Vec<usize>),
}

impl Search<'_> {
    /// An effective representative of `cur - p`, given effective `cur`.
    fn remove(&self, cur: &Divisor, p: &Point) -> Result<Option<Divisor>> {
        let mut r = if cur.get(p) >= 1 { cur.clone() } else { reduced_divisor_at(cur, p, self.resolution)? };
        if r.get(p) < 1 {
            return Ok(None);
        }
        r.add_unchecked(p.clone(), -1);
        Ok(Some(r))
    }

    fn fails(&self, start: &Divisor, seq: &[usize]) -> Result<bool> {
        let mut cur = start.clone();
        for &i in seq {
            match self.remove(&cur, &self.candidates[i])? {
                Some(next) => cur = next,
                None => return Ok(true),
            }
        }
        Ok(false)
    }

    /// Lexicographically smallest non-decreasing index sequence of the
    /// shortest failing length, searching lengths up to `max_len`.
    fn find_failure(&self, start: &Divisor, max_len: usize) -> Result<Option<Vec<usize>>> {
        let n = self.candidates.len();
        let mut frontier = vec![(Vec::new(), start.clone())];
        for level in 1..=max_len {
            let last = level == max_len;
            let expansions: Vec<Result<Expansion>> = frontier
                .par_iter()
                .map(|(seq, cur)| {
                    let lo = seq.last().copied().unwrap_or(0);
                    let mut kids = Vec::new();
                    for i in lo..n {
                        let mut next_seq = seq.clone();
                        next_seq.push(i);
                        match self.remove(cur, &self.candidates[i])? {
                            None => return Ok(Expansion::Failure(next_seq)),
                            Some(next) if !last => kids.push((next_seq, next)),
                            Some(_) => {}
                        }
                    }
                    Ok(Expansion::Children(kids))
                })
                .collect();
            let mut next = Vec::new();
            for e in expansions {
                match e? {
                    Expansion::Failure(seq) => return Ok(Some(seq)),
                    Expansion::Children(kids) => next.extend(kids),
                }
            }
            frontier = next;
        }
        Ok(None)
    }

    fn divisor_of(&self, graph: &Arc<MetricGraph>, seq: &[usize]) -> Divisor {
        let mut e = Divisor::zero(graph);
        for &i in seq {
            e.add_unchecked(self.candidates[i].clone(), 1);
        }
        e
    }
}

/// Rank with `E` drawn from the rank-determining set.
pub fn rank(d: &Divisor) -> Result<RankResult> {
    rank_with(d, CandidateSet::RankDetermining)
}

pub fn rank_with(d: &Divisor, candidates: CandidateSet) -> Result<RankResult> {
    let graph = d.graph();
    let Some(start) = equivalent_effective(d)? else {
        return Ok(RankResult { rank: -1, failing: Divisor::zero(graph) });
    };
    let points = candidates.points(d)?;
    let search = Search { candidates: &points, resolution: candidates.resolution() };
    // rk(D) <= deg(D), so a failure shows up by length deg(D) + 1.
    let max_len = usize::try_from(d.degree() + 1).expect("effective class has non-negative degree");
    let seq = search.find_failure(&start, max_len)?.expect("degree bounds the rank");
    Ok(RankResult { rank: seq.len() as i64 - 1, failing: search.divisor_of(graph, &seq) })
}

/// Whether `rk(d) >= k`, stopping at the first failing `E`.
pub fn rank_at_least(d: &Divisor, k: i64) -> Result<bool> {
    if k < 0 {
        return Ok(true);
    }
    if d.degree() < k {
        return Ok(false);
    }
    let Some(start) = equivalent_effective(d)? else {
        return Ok(false);
    };
    let points = CandidateSet::RankDetermining.points(d)?;
    let search = Search { candidates: &points, resolution: 1 };
    Ok(search.find_failure(&start, k as usize)?.is_none())
}

/// Computes `rk(D)` and `rk(K - D)` independently and compares their
/// difference with `deg(D) - g + 1`.
pub fn riemann_roch_check(d: &Divisor) -> Result<bool> {
    let graph = d.graph();
    let k = canonical_divisor(graph);
    let lhs = rank(d)?.rank - rank(&(&k - d))?.rank;
    Ok(lhs == d.degree() - graph.genus() as i64 + 1)
}

/// `rk(D) > 0` and `rk(K - D) > 0`.
pub fn is_very_special(d: &Divisor) -> Result<bool> {
    let graph = d.graph();
    let k = canonical_divisor(graph);
    let very = rank_at_least(d, 1)? && rank_at_least(&(&k - d), 1)?;
    if very {
        let deg = d.degree();
        assert!(
            2 <= deg && deg <= 2 * graph.genus() as i64 - 4,
            "very special divisor of degree {deg} on genus {}",
            graph.genus()
        );
    }
    Ok(very)
}

/// `deg(D) - 2 rk(D)` for a very special divisor.
pub fn clifford_index(d: &Divisor) -> Result<i64> {
    if !is_very_special(d)? {
        return Err(Error::NotVerySpecial);
    }
    Ok(d.degree() - 2 * rank(d)?.rank)
}

/// Result of scanning a lattice for base points.
#[derive(Debug, Clone)]
pub struct FreenessCertificate {
    pub graph: Arc<MetricGraph>,
    pub resolution: u32,
    /// Spacing of the scanned lattice.
    pub segment: Rational,
    pub checked_points: usize,
    /// Lattice points `P` with `rk(D - P) = rk(D)`.
    pub violations: Vec<Point>,
}

impl FreenessCertificate {
    /// No base point on the scanned lattice.
    pub fn is_free(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Serialize for FreenessCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let violations: Vec<String> = self.violations.iter().map(|p| self.graph.format_point(p)).collect();
        let mut st = s.serialize_struct("FreenessCertificate", 5)?;
        st.serialize_field("resolution", &self.resolution)?;
        st.serialize_field("segment", &format_rational(&self.segment))?;
        st.serialize_field("checked_points", &self.checked_points)?;
        st.serialize_field("free", &self.is_free())?;
        st.serialize_field("violations", &violations)?;
        st.end()
    }
}

const CHUNK: usize = 32;
const CACHE: usize = 8;

/// Scans the lattice of spacing `1/(q * resolution)` for points `P` with
/// `rk(D - P) >= r`, where `r = rk(D) >= 1` is given. With `first_only` the
/// scan stops at the first violation in lattice order.
pub(crate) fn scan_base_points(d: &Divisor, r: i64, resolution: u32, first_only: bool) -> Result<FreenessCertificate> {
    let graph = d.graph();
    let unit = lattice_unit(d, resolution)?;
    let lattice = graph.lattice_points(&unit);
    let start = equivalent_effective(d)?.ok_or(Error::RankNotPositive)?;
    let candidates = CandidateSet::RankDetermining.points(d)?;
    let search = Search { candidates: &candidates, resolution: 1 };
    let depth = usize::try_from(r).map_err(|_| Error::RankNotPositive)?;

    let is_base_point = |p: &Point, cache: &mut Vec<Vec<usize>>| -> Result<bool> {
        let Some(rest) = search.remove(&start, p)? else {
            return Ok(false);
        };
        for seq in cache.iter() {
            if search.fails(&rest, seq)? {
                return Ok(false);
            }
        }
        match search.find_failure(&rest, depth)? {
            Some(seq) => {
                cache.insert(0, seq);
                cache.truncate(CACHE);
                Ok(false)
            }
            None => Ok(true),
        }
    };

    let window = if first_only { CHUNK * rayon::current_num_threads().max(1) } else { lattice.len().max(1) };
    let mut violations = Vec::new();
    let mut checked = 0;
    for block in lattice.chunks(window) {
        let found: Vec<Result<Vec<Point>>> = block
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut cache = Vec::new();
                let mut out = Vec::new();
                for p in chunk {
                    if is_base_point(p, &mut cache)? {
                        out.push(p.clone());
                    }
                }
                Ok(out)
            })
            .collect();
        checked += block.len();
        for f in found {
            violations.extend(f?);
        }
        if first_only && !violations.is_empty() {
            violations.truncate(1);
            break;
        }
    }
    Ok(FreenessCertificate { graph: graph.clone(), resolution, segment: unit, checked_points: checked, violations })
}

/// Lattice points `P` at the given resolution with `rk(D - P) = rk(D)`.
pub fn base_points(d: &Divisor, resolution: u32) -> Result<Vec<Point>> {
    Ok(is_free(d, resolution)?.violations)
}

/// Scans the whole lattice at the given resolution for base points.
pub fn is_free(d: &Divisor, resolution: u32) -> Result<FreenessCertificate> {
    let r = rank(d)?.rank;
    if r < 1 {
        return Err(Error::RankNotPositive);
    }
    scan_base_points(d, r, resolution, false)
}

/// Summary of a divisor's invariants.
#[derive(Debug, Clone, Serialize)]
pub struct DivisorReport {
    pub degree: i64,
    pub genus: usize,
    pub rank: i64,
    pub failing_e: String,
    /// Rank of `K - D`.
    pub dual_rank: i64,
    pub special: bool,
    pub very_special: bool,
    pub clifford_index: Option<i64>,
    pub riemann_roch: bool,
    /// Set when a base-point scan ran and found nothing.
    pub free_at_resolution: Option<u32>,
    pub violations: Vec<String>,
}

impl DivisorReport {
    /// Scans for base points only when `resolution` is given and the rank is
    /// positive.
    pub fn compute(d: &Divisor, resolution: Option<u32>) -> Result<Self> {
        let graph = d.graph();
        let k = canonical_divisor(graph);
        let r = rank(d)?;
        let dual = rank(&(&k - d))?;
        let very_special = r.rank > 0 && dual.rank > 0;
        let (free_at_resolution, violations) = if let (Some(resolution), true) = (resolution, r.rank >= 1) {
            let cert = scan_base_points(d, r.rank, resolution, false)?;
            let v = cert.violations.iter().map(|p| graph.format_point(p)).collect();
            (cert.is_free().then_some(resolution), v)
        } else {
            (None, Vec::new())
        };
        Ok(DivisorReport {
            degree: d.degree(),
            genus: graph.genus(),
            rank: r.rank,
            failing_e: r.failing.to_string(),
            special: dual.rank >= 0,
            very_special,
            clifford_index: very_special.then(|| d.degree() - 2 * r.rank),
            dual_rank: dual.rank,
            riemann_roch: r.rank - dual.rank == d.degree() - graph.genus() as i64 + 1,
            free_at_resolution,
            violations,
        })
    }
}
