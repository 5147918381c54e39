//! Continuous piecewise-linear functions with integer slopes, their
//! divisors, and subset firing.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::divisor::{same_graph, Divisor};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, Point};
use crate::model::Model;
use crate::rational::{exact_quotient, format_rational, gcd_all, int, rational_gcd, to_usize, Rational};

/// A continuous function that is linear with integer slope on each piece of
/// a uniform subdivision of segment length `segment`.
///
/// Slopes are stored per edge in the tail-to-head direction, one per
/// segment; the value at the first vertex fixes the additive constant.
#[derive(Debug, Clone)]
pub struct PLFunction {
    graph: Arc<MetricGraph>,
    segment: Rational,
    slopes: Vec<Vec<i64>>,
    base_value: Rational,
}

fn pieces(graph: &MetricGraph, e: EdgeId, segment: &Rational) -> Result<usize> {
    exact_quotient(&graph.edge(e).length, segment)
        .and_then(|n| to_usize(&n))
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidFunction(format!("segment does not divide edge {}", graph.edge(e).name)))
}

impl PLFunction {
    pub fn constant(graph: &Arc<MetricGraph>, value: Rational) -> Self {
        let segment = gcd_all(graph.edges().map(|(_, e)| &e.length)).expect("graph has an edge or is a point");
        let slopes = graph
            .edges()
            .map(|(_, e)| vec![0; to_usize(&exact_quotient(&e.length, &segment).unwrap()).unwrap()])
            .collect();
        PLFunction { graph: graph.clone(), segment, slopes, base_value: value }
    }

    /// Checks shape and continuity: integrating the slopes along every edge
    /// must give consistent vertex values.
    pub fn new(graph: &Arc<MetricGraph>, segment: Rational, slopes: Vec<Vec<i64>>, base_value: Rational) -> Result<Self> {
        if !segment.is_positive() {
            return Err(Error::InvalidFunction("segment must be positive".into()));
        }
        if slopes.len() != graph.edge_count() {
            return Err(Error::InvalidFunction(format!("expected slopes for {} edges", graph.edge_count())));
        }
        for (e, _) in graph.edges() {
            if slopes[e.0].len() != pieces(graph, e, &segment)? {
                return Err(Error::InvalidFunction(format!("wrong slope count on edge {}", graph.edge(e).name)));
            }
        }
        let f = PLFunction { graph: graph.clone(), segment, slopes, base_value };
        f.vertex_values()?;
        Ok(f)
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        &self.graph
    }

    pub fn segment(&self) -> &Rational {
        &self.segment
    }

    pub fn slopes(&self, e: EdgeId) -> &[i64] {
        &self.slopes[e.0]
    }

    pub fn base_value(&self) -> &Rational {
        &self.base_value
    }

    fn rise(&self, e: EdgeId) -> Rational {
        &self.segment * int(self.slopes[e.0].iter().sum())
    }

    fn vertex_values(&self) -> Result<Vec<Rational>> {
        let n = self.graph.vertex_count();
        let mut values: Vec<Option<Rational>> = vec![None; n];
        values[0] = Some(self.base_value.clone());
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            let here = values[v].clone().unwrap();
            for &(e, _) in self.graph.incident(crate::graph::VertexId(v)) {
                let edge = self.graph.edge(e);
                let rise = self.rise(e);
                let (other, value) = if edge.tail.0 == v { (edge.head.0, &here + &rise) } else { (edge.tail.0, &here - &rise) };
                match &values[other] {
                    Some(existing) if *existing != value => {
                        return Err(Error::InvalidFunction(format!("discontinuous along edge {}", edge.name)));
                    }
                    Some(_) => {}
                    None => {
                        values[other] = Some(value);
                        stack.push(other);
                    }
                }
            }
        }
        Ok(values.into_iter().map(|v| v.expect("graph is connected")).collect())
    }

    pub fn value_at(&self, p: &Point) -> Result<Rational> {
        self.graph.check_point(p)?;
        let values = self.vertex_values()?;
        Ok(match p {
            Point::Vertex(v) => values[v.0].clone(),
            Point::Interior { edge, offset } => {
                let start = &values[self.graph.edge(*edge).tail.0];
                let mut acc = start.clone();
                let mut pos = Rational::zero();
                for &s in &self.slopes[edge.0] {
                    let next = &pos + &self.segment;
                    let step = if &next <= offset { self.segment.clone() } else { offset - &pos };
                    acc += step * int(s);
                    if &next >= offset {
                        break;
                    }
                    pos = next;
                }
                acc
            }
        })
    }

    /// The same function on a finer subdivision; `segment` must divide the
    /// current one.
    pub fn refine(&self, segment: &Rational) -> Result<Self> {
        let k = exact_quotient(&self.segment, segment)
            .and_then(|k| to_usize(&k))
            .filter(|&k| k > 0)
            .ok_or_else(|| Error::InvalidFunction("refinement must divide the segment".into()))?;
        let slopes = self.slopes.iter().map(|s| s.iter().flat_map(|&x| std::iter::repeat_n(x, k)).collect()).collect();
        Ok(PLFunction { graph: self.graph.clone(), segment: segment.clone(), slopes, base_value: self.base_value.clone() })
    }

    fn common(&self, other: &Self) -> Result<(Self, Self)> {
        if !same_graph(&self.graph, &other.graph) {
            return Err(Error::GraphMismatch);
        }
        let h = rational_gcd(&self.segment, &other.segment);
        Ok((self.refine(&h)?, other.refine(&h)?))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.common(other)?;
        for (sa, sb) in a.slopes.iter_mut().zip(&b.slopes) {
            for (x, y) in sa.iter_mut().zip(sb) {
                *x += y;
            }
        }
        a.base_value += b.base_value;
        Ok(a)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.negated())
    }

    pub fn negated(&self) -> Self {
        PLFunction {
            graph: self.graph.clone(),
            segment: self.segment.clone(),
            slopes: self.slopes.iter().map(|s| s.iter().map(|x| -x).collect()).collect(),
            base_value: -self.base_value.clone(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.slopes.iter().flatten().all(|&s| s == 0)
    }

    /// Sum of outgoing slopes at every point, so firing a set adds the
    /// divisor of a function that decreases away from it.
    pub fn div(&self) -> Divisor {
        let mut d = Divisor::zero(&self.graph);
        for (e, edge) in self.graph.edges() {
            let s = &self.slopes[e.0];
            d.add_unchecked(Point::Vertex(edge.tail), s[0]);
            d.add_unchecked(Point::Vertex(edge.head), -s[s.len() - 1]);
            for k in 1..s.len() {
                let p = Point::Interior { edge: e, offset: &self.segment * int(k as i64) };
                d.add_unchecked(p, s[k] - s[k - 1]);
            }
        }
        d
    }
}

/// Divisor of a piecewise-linear function.
pub fn div(f: &PLFunction) -> Divisor {
    f.div()
}

impl PartialEq for PLFunction {
    fn eq(&self, other: &Self) -> bool {
        match self.common(other) {
            Ok((a, b)) => a.slopes == b.slopes && a.base_value == b.base_value,
            Err(_) => false,
        }
    }
}

impl Serialize for PLFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let slopes: std::collections::BTreeMap<&str, &Vec<i64>> =
            self.graph.edges().map(|(e, edge)| (edge.name.as_str(), &self.slopes[e.0])).collect();
        let mut st = s.serialize_struct("PLFunction", 3)?;
        st.serialize_field("segment", &format_rational(&self.segment))?;
        st.serialize_field("base_value", &format_rational(&self.base_value))?;
        st.serialize_field("slopes", &slopes)?;
        st.end()
    }
}

/// A set of vertices of the uniform subdivision with segment length
/// `segment`. Its closure adds every segment with both ends in the set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedSet {
    pub segment: Rational,
    pub points: BTreeSet<Point>,
}

impl ClosedSet {
    pub fn new(segment: Rational, points: impl IntoIterator<Item = Point>) -> Self {
        ClosedSet { segment, points: points.into_iter().collect() }
    }

    fn mask(&self, model: &Model) -> Result<Vec<bool>> {
        let mut mask = vec![false; model.len()];
        for p in &self.points {
            let n = model
                .node(p)
                .ok_or_else(|| Error::XNotClosed(format!("{} is not a subdivision vertex", model.graph().format_point(p))))?;
            mask[n] = true;
        }
        Ok(mask)
    }
}

/// The function that is 0 on the closure of `mask`, decreases with slope
/// one for distance `eps` along each leaving segment, and is `-eps` on the
/// rest of the graph.
fn firing_function(model: &Model, mask: &[bool], eps: &Rational) -> Result<PLFunction> {
    let graph = model.graph();
    let segment = model.segment().expect("uniform model");
    let h = rational_gcd(segment, eps);
    let per = to_usize(&exact_quotient(segment, &h).unwrap()).unwrap();
    let near = to_usize(&exact_quotient(eps, &h).unwrap()).unwrap();
    let mut slopes = Vec::with_capacity(graph.edge_count());
    for (e, _) in graph.edges() {
        let chain = model.chain(e);
        let mut s = Vec::with_capacity((chain.len() - 1) * per);
        for w in chain.windows(2) {
            let (a, b) = (mask[w[0]], mask[w[1]]);
            for j in 0..per {
                s.push(match (a, b) {
                    (true, false) if j < near => -1,
                    (false, true) if per - j <= near => 1,
                    _ => 0,
                });
            }
        }
        slopes.push(s);
    }
    let base = if mask[0] { Rational::zero() } else { -eps.clone() };
    PLFunction::new(graph, h, slopes, base)
}

fn check_eps(eps: &Rational, segment: &Rational) -> Result<()> {
    if !eps.is_positive() {
        return Err(Error::NonPositiveDistance);
    }
    if eps > segment {
        return Err(Error::EpsTooLarge);
    }
    Ok(())
}

/// Moves one chip from each boundary point of `x` a distance `eps` along
/// every segment leaving the closure of `x`. Returns the new divisor and the
/// function `f` with `D + div(f)` equal to it.
pub fn fire(d: &Divisor, x: &ClosedSet, eps: &Rational) -> Result<(Divisor, PLFunction)> {
    if !x.segment.is_positive() {
        return Err(Error::XNotClosed("segment must be positive".into()));
    }
    check_eps(eps, &x.segment)?;
    let graph = d.graph();
    let model = Model::uniform(graph, &x.segment)?;
    let mask = x.mask(&model)?;
    let mut out = d.clone();
    for (e, _) in graph.edges() {
        let chain = model.chain(e);
        let offsets = model.chain_offsets(e);
        for k in 0..chain.len() - 1 {
            let (a, b) = (mask[chain[k]], mask[chain[k + 1]]);
            if a == b {
                continue;
            }
            let (from, to) = if a {
                (offsets[k].clone(), &offsets[k] + eps)
            } else {
                (offsets[k + 1].clone(), &offsets[k + 1] - eps)
            };
            let (lo, hi) = if from < to { (&from, &to) } else { (&to, &from) };
            let blocked = d.support().any(|p| match p {
                Point::Interior { edge, offset } if *edge == e => {
                    offset > lo && offset < hi && *offset != to
                }
                _ => false,
            });
            if blocked {
                return Err(Error::EpsTooLarge);
            }
            out.add_unchecked(graph.point_on_edge(e, from)?, -1);
            out.add_unchecked(graph.point_on_edge(e, to)?, 1);
        }
    }
    let f = firing_function(&model, &mask, eps)?;
    debug_assert_eq!(&(d + &f.div()), &out);
    Ok((out, f))
}

/// One step of a firing script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub set: Arc<BTreeSet<Point>>,
    pub distance: Rational,
}

/// A sequence of subset firings on the uniform subdivision with segment
/// length `segment`.
#[derive(Debug, Clone)]
pub struct FiringScript {
    pub graph: Arc<MetricGraph>,
    pub segment: Rational,
    pub moves: Vec<Firing>,
}

impl FiringScript {
    pub fn new(graph: &Arc<MetricGraph>, segment: Rational) -> Self {
        FiringScript { graph: graph.clone(), segment, moves: Vec::new() }
    }

    pub fn push(&mut self, set: Arc<BTreeSet<Point>>, distance: Rational, times: usize) {
        for _ in 0..times {
            self.moves.push(Firing { set: set.clone(), distance: distance.clone() });
        }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Consecutive identical moves, as `(move, repeat)` pairs.
    pub fn runs(&self) -> Vec<(&Firing, usize)> {
        let mut out: Vec<(&Firing, usize)> = Vec::new();
        for m in &self.moves {
            match out.last_mut() {
                Some((last, n)) if Arc::ptr_eq(&last.set, &m.set) && last.distance == m.distance => *n += 1,
                _ => out.push((m, 1)),
            }
        }
        out
    }
}

impl Serialize for FiringScript {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Run {
            set: Vec<String>,
            distance: String,
            repeat: usize,
        }
        let runs: Vec<Run> = self
            .runs()
            .into_iter()
            .map(|(m, repeat)| Run {
                set: m.set.iter().map(|p| self.graph.format_point(p)).collect(),
                distance: format_rational(&m.distance),
                repeat,
            })
            .collect();
        let mut st = s.serialize_struct("FiringScript", 2)?;
        st.serialize_field("segment", &format_rational(&self.segment))?;
        st.serialize_field("moves", &runs)?;
        st.end()
    }
}

impl fmt::Display for FiringScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

/// The function whose divisor is the total change made by the script.
///
/// Full-segment moves are combined through per-vertex firing counts; other
/// moves contribute their own firing functions.
pub fn compose_script(script: &FiringScript) -> Result<PLFunction> {
    let model = Model::uniform(&script.graph, &script.segment)?;
    let mut counts = vec![0i64; model.len()];
    let mut full = 0i64;
    let mut total = PLFunction::constant(&script.graph, Rational::zero());
    for m in &script.moves {
        check_eps(&m.distance, &script.segment)?;
        let mask = ClosedSet { segment: script.segment.clone(), points: (*m.set).clone() }.mask(&model)?;
        if m.distance == script.segment {
            full += 1;
            for (c, inside) in counts.iter_mut().zip(&mask) {
                *c += *inside as i64;
            }
        } else {
            total = total.checked_add(&firing_function(&model, &mask, &m.distance)?)?;
        }
    }
    let slopes = script
        .graph
        .edges()
        .map(|(e, _)| model.chain(e).windows(2).map(|w| counts[w[1]] - counts[w[0]]).collect())
        .collect();
    let base = &script.segment * int(counts[0] - full);
    let f = PLFunction::new(&script.graph, script.segment.clone(), slopes, base)?;
    total.checked_add(&f)
}

/// Runs the script move by move, checking that each move is a legal firing
/// of the current divisor.
pub fn apply_script(d: &Divisor, script: &FiringScript) -> Result<(Divisor, PLFunction)> {
    if !same_graph(d.graph(), &script.graph) {
        return Err(Error::GraphMismatch);
    }
    let mut cur = d.clone();
    let mut total = PLFunction::constant(d.graph(), Rational::zero());
    let mut sets: Option<(Arc<BTreeSet<Point>>, ClosedSet)> = None;
    for m in &script.moves {
        let x = match &sets {
            Some((key, x)) if Arc::ptr_eq(key, &m.set) => x.clone(),
            _ => {
                let x = ClosedSet { segment: script.segment.clone(), points: (*m.set).clone() };
                sets = Some((m.set.clone(), x.clone()));
                x
            }
        };
        let (next, f) = fire(&cur, &x, &m.distance)?;
        cur = next;
        total = total.checked_add(&f)?;
    }
    Ok((cur, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexId;
    use crate::rational::ratio;

    fn graph(text: &str) -> Arc<MetricGraph> {
        Arc::new(MetricGraph::parse(text).unwrap())
    }

    #[test]
    fn rejects_discontinuous_functions() {
        let g = graph("vertex u\nvertex v\nedge a u v 1\nedge b u v 1\n");
        assert!(PLFunction::new(&g, int(1), vec![vec![1], vec![0]], int(0)).is_err());
        let f = PLFunction::new(&g, ratio(1, 2), vec![vec![1, 1], vec![2, 0]], int(0)).unwrap();
        assert_eq!(f.value_at(&Point::Vertex(VertexId(1))).unwrap(), int(1));
        let mid = g.point_on_edge(EdgeId(1), ratio(1, 4)).unwrap();
        assert_eq!(f.value_at(&mid).unwrap(), ratio(1, 2));
    }

    #[test]
    fn divisor_of_function_has_degree_zero() {
        let g = graph("vertex u\nvertex v\nedge a u v 1\nedge b u v 1\n");
        let f = PLFunction::new(&g, ratio(1, 2), vec![vec![1, 1], vec![2, 0]], int(0)).unwrap();
        let d = f.div();
        assert_eq!(d.degree(), 0);
        assert_eq!(d.get(&Point::Vertex(VertexId(0))), 3);
        assert_eq!(d.get(&Point::Vertex(VertexId(1))), -1);
        assert_eq!(d.get(&g.point_on_edge(EdgeId(1), ratio(1, 2)).unwrap()), -2);
    }

    #[test]
    fn refinement_preserves_equality() {
        let g = graph("vertex u\nedge l u u 2\n");
        let f = PLFunction::new(&g, int(1), vec![vec![1, -1]], int(3)).unwrap();
        assert_eq!(f, f.refine(&ratio(1, 3)).unwrap());
        assert_eq!(f.div(), f.refine(&ratio(1, 3)).unwrap().div());
    }

    #[test]
    fn fire_on_unit_loop() {
        let g = graph("vertex v\nedge l v v 1\n");
        let v = Point::Vertex(VertexId(0));
        let d = Divisor::parse(&g, "2v").unwrap();
        let x = ClosedSet::new(ratio(1, 2), [v.clone()]);
        let (out, f) = fire(&d, &x, &ratio(1, 4)).unwrap();
        assert_eq!(out, Divisor::parse(&g, "e:l@1/4 + e:l@3/4").unwrap());
        assert_eq!(&d + &f.div(), out);
        assert!(matches!(fire(&d, &x, &int(1)), Err(Error::EpsTooLarge)));
        assert!(matches!(fire(&d, &x, &int(0)), Err(Error::NonPositiveDistance)));
        let bad = ClosedSet::new(ratio(1, 2), [g.point_on_edge(EdgeId(0), ratio(1, 3)).unwrap()]);
        assert!(matches!(fire(&d, &bad, &ratio(1, 4)), Err(Error::XNotClosed(_))));
    }

    #[test]
    fn fire_stops_before_support() {
        let g = graph("vertex u\nvertex v\nedge a u v 1\n");
        let d = Divisor::parse(&g, "u + e:a@1/4").unwrap();
        let x = ClosedSet::new(int(1), [Point::Vertex(VertexId(0))]);
        assert!(matches!(fire(&d, &x, &ratio(1, 2)), Err(Error::EpsTooLarge)));
        let (out, _) = fire(&d, &x, &ratio(1, 4)).unwrap();
        assert_eq!(out, Divisor::parse(&g, "2 e:a@1/4").unwrap());
    }

    #[test]
    fn composed_script_matches_application() {
        let g = graph("vertex u\nvertex v\nedge a u v 1\nedge b u v 1\nedge c u v 1\n");
        let d = Divisor::parse(&g, "3u").unwrap();
        let mut s = FiringScript::new(&g, ratio(1, 2));
        s.push(Arc::new([Point::Vertex(VertexId(0))].into_iter().collect()), ratio(1, 4), 1);
        let all_but_v: BTreeSet<Point> =
            Model::uniform(&g, &ratio(1, 2)).unwrap().points().into_iter().filter(|p| *p != Point::Vertex(VertexId(1))).collect();
        s.push(Arc::new(all_but_v), ratio(1, 2), 1);
        let (out, f) = apply_script(&d, &s).unwrap();
        assert_eq!(&d + &compose_script(&s).unwrap().div(), out);
        assert_eq!(compose_script(&s).unwrap(), f);
    }
}
