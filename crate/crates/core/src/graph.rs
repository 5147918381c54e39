//! Compact metric graphs with rational edge lengths.
//!
//! A [`MetricGraph`] is a finite connected multigraph (loops and parallel
//! edges allowed) whose edges carry positive rational lengths. Points of the
//! metric space are [`Point`]s: either a vertex, or a position strictly inside
//! an edge measured from the edge's tail. Boundary offsets are always folded
//! into the corresponding vertex, so structural equality of points is metric
//! equality.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::rational::{common_denominator, format_rational, int, parse_rational, serde_rational, to_usize, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    pub tail: VertexId,
    pub head: VertexId,
    pub length: Rational,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

/// Serializable description of a graph, as read from a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    #[serde(with = "serde_rational")]
    pub length: Rational,
}

impl EdgeSpec {
    pub fn new(id: impl Into<String>, tail: impl Into<String>, head: impl Into<String>, length: Rational) -> Self {
        EdgeSpec { id: id.into(), tail: tail.into(), head: head.into(), length }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    TowardHead,
    TowardTail,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TangentDirection {
    pub base: Point,
    pub edge: EdgeId,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Vertex(VertexId),
    /// Strictly inside `edge`, `offset` from its tail.
    Interior { edge: EdgeId, offset: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricGraph {
    names: Vec<String>,
    edges: Vec<Edge>,
    incident: Vec<Vec<(EdgeId, Orientation)>>,
    genus: usize,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '~' | '\''))
}

/// Validates `spec` and builds the graph.
pub fn build_graph(spec: &GraphSpec) -> Result<MetricGraph> {
    MetricGraph::new(spec)
}

impl MetricGraph {
    pub fn new(spec: &GraphSpec) -> Result<Self> {
        if spec.vertices.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut index = BTreeMap::new();
        for (i, name) in spec.vertices.iter().enumerate() {
            if !valid_name(name) {
                return Err(Error::InvalidName(name.clone()));
            }
            if index.insert(name.as_str(), VertexId(i)).is_some() {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(spec.edges.len());
        let mut incident = vec![Vec::new(); spec.vertices.len()];
        for (i, e) in spec.edges.iter().enumerate() {
            if !valid_name(&e.id) {
                return Err(Error::InvalidName(e.id.clone()));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateName(e.id.clone()));
            }
            if !e.length.is_positive() {
                return Err(Error::NonPositiveLength(e.id.clone()));
            }
            let lookup = |v: &str| {
                index.get(v).copied().ok_or_else(|| Error::DanglingEndpoint {
                    edge: e.id.clone(),
                    vertex: v.to_string(),
                })
            };
            let (tail, head) = (lookup(&e.tail)?, lookup(&e.head)?);
            incident[tail.0].push((EdgeId(i), Orientation::TowardHead));
            incident[head.0].push((EdgeId(i), Orientation::TowardTail));
            edges.push(Edge { name: e.id.clone(), tail, head, length: e.length.clone() });
        }

        let n = spec.vertices.len();
        let mut reached = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        reached[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(e, _) in &incident[v] {
                let edge = &edges[e.0];
                for w in [edge.tail.0, edge.head.0] {
                    if !reached[w] {
                        reached[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return Err(Error::DisconnectedGraph);
        }

        Ok(MetricGraph {
            names: spec.vertices.clone(),
            genus: edges.len() + 1 - n,
            edges,
            incident,
        })
    }

    pub fn spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec::new(&e.name, &self.names[e.tail.0], &self.names[e.head.0], e.length.clone()))
                .collect(),
        }
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.names.len()).map(VertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeId(i), e))
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name).map(VertexId)
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.name == name).map(EdgeId)
    }

    /// Edge ends at `v`; a loop appears twice.
    pub fn incident(&self, v: VertexId) -> &[(EdgeId, Orientation)] {
        &self.incident[v.0]
    }

    pub fn total_length(&self) -> Rational {
        self.edges.iter().map(|e| e.length.clone()).sum()
    }

    /// Canonical point at `offset` along `edge`.
    pub fn point_on_edge(&self, edge: EdgeId, offset: Rational) -> Result<Point> {
        let e = self
            .edges
            .get(edge.0)
            .ok_or_else(|| Error::PointNotOnGraph(format!("edge #{}", edge.0)))?;
        if offset.is_negative() || offset > e.length {
            return Err(Error::PointNotOnGraph(format!("e:{}@{}", e.name, format_rational(&offset))));
        }
        Ok(if offset.is_zero() {
            Point::Vertex(e.tail)
        } else if offset == e.length {
            Point::Vertex(e.head)
        } else {
            Point::Interior { edge, offset }
        })
    }

    pub fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Vertex(v) => v.0 < self.names.len(),
            Point::Interior { edge, offset } => self
                .edges
                .get(edge.0)
                .is_some_and(|e| offset.is_positive() && *offset < e.length),
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointNotOnGraph(format!("{p:?}")))
        }
    }

    pub fn valence(&self, p: &Point) -> Result<usize> {
        self.check_point(p)?;
        Ok(match p {
            Point::Vertex(v) => self.incident[v.0].len(),
            Point::Interior { .. } => 2,
        })
    }

    pub fn tangent_directions(&self, p: &Point) -> Result<Vec<TangentDirection>> {
        self.check_point(p)?;
        Ok(match p {
            Point::Vertex(v) => self.incident[v.0]
                .iter()
                .map(|&(edge, orientation)| TangentDirection { base: p.clone(), edge, orientation })
                .collect(),
            Point::Interior { edge, .. } => [Orientation::TowardHead, Orientation::TowardTail]
                .into_iter()
                .map(|orientation| TangentDirection { base: p.clone(), edge: *edge, orientation })
                .collect(),
        })
    }

    /// Every point whose offsets are multiples of `unit`, each listed once.
    /// `unit` must divide every edge length.
    pub fn lattice_points(&self, unit: &Rational) -> Vec<Point> {
        let mut points: Vec<Point> = self.vertices().map(Point::Vertex).collect();
        for (id, e) in self.edges() {
            let n = to_usize(&(&e.length / unit).ceil().to_integer()).expect("lattice too fine");
            for k in 1..n {
                points.push(Point::Interior { edge: id, offset: unit * int(k as i64) });
            }
        }
        points
    }

    pub fn format_point(&self, p: &Point) -> String {
        match p {
            Point::Vertex(v) => format!("v:{}", self.names[v.0]),
            Point::Interior { edge, offset } => {
                format!("e:{}@{}", self.edges[edge.0].name, format_rational(offset))
            }
        }
    }

    /// Parses `v:<name>`, `e:<id>@<p>/<q>`, or a bare vertex name.
    pub fn parse_point(&self, s: &str) -> Result<Point> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("e:") {
            let (edge, offset) = rest
                .split_once('@')
                .ok_or_else(|| Error::Parse(format!("expected e:<id>@<p>/<q>, got {s:?}")))?;
            let offset = parse_rational(offset)?;
            let id = self
                .edge_by_name(edge)
                .ok_or_else(|| Error::PointNotOnGraph(s.to_string()))?;
            return self.point_on_edge(id, offset);
        }
        let name = s.strip_prefix("v:").unwrap_or(s);
        if !valid_name(name) {
            return Err(Error::Parse(format!("malformed point {s:?}")));
        }
        self.vertex_by_name(name)
            .map(Point::Vertex)
            .ok_or_else(|| Error::PointNotOnGraph(s.to_string()))
    }

    /// Line format: `vertex <name>` and `edge <id> <tail> <head> <p>/<q>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for name in &self.names {
            out.push_str(&format!("vertex {name}\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "edge {} {} {} {}\n",
                e.name,
                self.names[e.tail.0],
                self.names[e.head.0],
                format_rational(&e.length)
            ));
        }
        out
    }

    /// Parses the line format, or the JSON form of [`GraphSpec`] when the
    /// input starts with `{`. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let spec: GraphSpec =
                serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
            return Self::new(&spec);
        }
        let mut spec = GraphSpec { vertices: Vec::new(), edges: Vec::new() };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["vertex", name] => spec.vertices.push(name.to_string()),
                ["edge", id, tail, head, length] => {
                    spec.edges.push(EdgeSpec::new(*id, *tail, *head, parse_rational(length)?))
                }
                _ => {
                    return Err(Error::Parse(format!("line {}: unrecognized {line:?}", lineno + 1)));
                }
            }
        }
        Self::new(&spec)
    }

    /// Common denominator of all edge lengths.
    pub fn length_denominator(&self) -> num_bigint::BigInt {
        common_denominator(self.edges.iter().map(|e| &e.length))
    }
}

impl fmt::Display for MetricGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `K = sum over points of (val(P) - 2) P`. Only vertices can have valence
/// other than 2.
pub fn canonical_divisor(graph: &Arc<MetricGraph>) -> Divisor {
    let mut k = Divisor::zero(graph);
    for v in graph.vertices() {
        let c = graph.incident(v).len() as i64 - 2;
        k.add_unchecked(Point::Vertex(v), c);
    }
    k
}

/// A graph obtained from `source` by promoting interior points to vertices
/// (and possibly appending new edges), with the point correspondence.
#[derive(Debug, Clone)]
pub struct Refinement {
    source: Arc<MetricGraph>,
    target: Arc<MetricGraph>,
    /// Per source edge: (start offset, target edge) for each piece, in order.
    pieces: Vec<Vec<(Rational, EdgeId)>>,
    /// Per target edge: source edge and start offset, if it came from one.
    origin: Vec<Option<(EdgeId, Rational)>>,
    vertex_origin: Vec<Option<Point>>,
}

impl Refinement {
    /// Splits `source` at `cuts` (each named for its new vertex) and appends
    /// `extra` edges, which may reference the new vertex names.
    pub fn new(source: &Arc<MetricGraph>, cuts: &[(Point, String)], extra: Vec<EdgeSpec>) -> Result<Self> {
        let mut by_edge: BTreeMap<EdgeId, BTreeMap<Rational, String>> = BTreeMap::new();
        for (p, name) in cuts {
            source.check_point(p)?;
            if let Point::Interior { edge, offset } = p {
                by_edge.entry(*edge).or_default().entry(offset.clone()).or_insert_with(|| name.clone());
            }
        }

        let mut spec = GraphSpec { vertices: source.names.clone(), edges: Vec::new() };
        let mut vertex_origin: Vec<Option<Point>> = source.vertices().map(|v| Some(Point::Vertex(v))).collect();
        let mut pieces = Vec::with_capacity(source.edge_count());
        let mut origin = Vec::new();
        for (id, e) in source.edges() {
            let cuts = by_edge.get(&id);
            let mut list = Vec::new();
            match cuts {
                None => {
                    list.push((Rational::zero(), EdgeId(spec.edges.len())));
                    origin.push(Some((id, Rational::zero())));
                    spec.edges.push(EdgeSpec::new(
                        &e.name,
                        &source.names[e.tail.0],
                        &source.names[e.head.0],
                        e.length.clone(),
                    ));
                }
                Some(cuts) => {
                    let mut prev_name = source.names[e.tail.0].clone();
                    let mut prev_offset = Rational::zero();
                    let stops = cuts
                        .iter()
                        .map(|(o, n)| (o.clone(), n.clone()))
                        .chain(std::iter::once((e.length.clone(), source.names[e.head.0].clone())));
                    for (i, (offset, name)) in stops.enumerate() {
                        if offset != e.length {
                            spec.vertices.push(name.clone());
                            vertex_origin.push(Some(Point::Interior { edge: id, offset: offset.clone() }));
                        }
                        list.push((prev_offset.clone(), EdgeId(spec.edges.len())));
                        origin.push(Some((id, prev_offset.clone())));
                        spec.edges.push(EdgeSpec::new(
                            format!("{}.{}", e.name, i + 1),
                            prev_name,
                            name.clone(),
                            &offset - &prev_offset,
                        ));
                        prev_name = name;
                        prev_offset = offset;
                    }
                }
            }
            pieces.push(list);
        }
        for e in extra {
            origin.push(None);
            spec.edges.push(e);
        }
        let target = Arc::new(MetricGraph::new(&spec)?);
        vertex_origin.resize(target.vertex_count(), None);
        Ok(Refinement { source: source.clone(), target, pieces, origin, vertex_origin })
    }

    pub fn source(&self) -> &Arc<MetricGraph> {
        &self.source
    }

    pub fn target(&self) -> &Arc<MetricGraph> {
        &self.target
    }

    /// Source point to the same metric location in the target.
    pub fn lift(&self, p: &Point) -> Point {
        match p {
            Point::Vertex(v) => Point::Vertex(*v),
            Point::Interior { edge, offset } => {
                let list = &self.pieces[edge.0];
                let idx = list.partition_point(|(start, _)| start <= offset) - 1;
                let (start, target_edge) = &list[idx];
                self.target
                    .point_on_edge(*target_edge, offset - start)
                    .expect("refinement preserves edge length")
            }
        }
    }

    /// Target point back to the source, or `None` for points on added edges.
    pub fn project(&self, p: &Point) -> Option<Point> {
        match p {
            Point::Vertex(v) => self.vertex_origin[v.0].clone(),
            Point::Interior { edge, offset } => {
                let (src, start) = self.origin[edge.0].as_ref()?;
                Some(Point::Interior { edge: *src, offset: start + offset })
            }
        }
    }

    pub fn lift_divisor(&self, d: &Divisor) -> Divisor {
        let mut out = Divisor::zero(&self.target);
        for (p, c) in d.iter() {
            out.add_unchecked(self.lift(p), c);
        }
        out
    }

    /// Divisor of the target restricted to points coming from the source.
    pub fn project_divisor(&self, d: &Divisor) -> Divisor {
        let mut out = Divisor::zero(&self.source);
        for (p, c) in d.iter() {
            if let Some(q) = self.project(p) {
                out.add_unchecked(q, c);
            }
        }
        out
    }
}

/// Subdivides so every mark is a vertex and every edge is cut into equal
/// segments of length `1/(q * resolution)`, `q` being the common denominator
/// of the edge lengths and the mark offsets.
pub fn subdivide(graph: &Arc<MetricGraph>, marks: &[Point], resolution: u32) -> Result<Refinement> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    for m in marks {
        graph.check_point(m)?;
    }
    let q = graph.length_denominator() * common_denominator(marks.iter().filter_map(Point::offset));
    let unit = Rational::new(1.into(), q * resolution);
    let cuts: Vec<(Point, String)> = graph
        .lattice_points(&unit)
        .into_iter()
        .filter_map(|p| match &p {
            Point::Interior { edge, offset } => {
                let k = (offset / &unit).to_integer();
                let name = format!("{}~{}", graph.edge(*edge).name, k);
                Some((p, name))
            }
            Point::Vertex(_) => None,
        })
        .collect();
    Refinement::new(graph, &cuts, Vec::new())
}

#[derive(Debug, Clone)]
pub struct LoopAttachment {
    pub refinement: Refinement,
    pub vertex: VertexId,
    pub loop_edge: EdgeId,
}

impl LoopAttachment {
    pub fn graph(&self) -> &Arc<MetricGraph> {
        self.refinement.target()
    }

    /// A point strictly inside the new loop.
    pub fn loop_point(&self, offset: Rational) -> Result<Point> {
        match self.graph().point_on_edge(self.loop_edge, offset)? {
            p @ Point::Interior { .. } => Ok(p),
            Point::Vertex(_) => Err(Error::PointNotOnGraph("loop base is not interior".into())),
        }
    }
}

/// Attaches a loop of `length` at `at`, promoting it to a vertex first when
/// it is interior. Genus grows by one.
pub fn attach_loop(graph: &Arc<MetricGraph>, at: &Point, length: Rational) -> Result<LoopAttachment> {
    let fresh = |prefix: &str| {
        (0..)
            .map(|i| format!("{prefix}{i}"))
            .find(|n| graph.vertex_by_name(n).is_none() && graph.edge_by_name(n).is_none())
            .unwrap()
    };
    attach_loop_named(graph, at, length, &fresh("p"), &fresh("loop"))
}

pub fn attach_loop_named(
    graph: &Arc<MetricGraph>,
    at: &Point,
    length: Rational,
    vertex_name: &str,
    loop_name: &str,
) -> Result<LoopAttachment> {
    graph.check_point(at)?;
    if !length.is_positive() {
        return Err(Error::NonPositiveLength(loop_name.to_string()));
    }
    let base_name = match at {
        Point::Vertex(v) => graph.vertex_name(*v).to_string(),
        Point::Interior { .. } => vertex_name.to_string(),
    };
    let cuts = [(at.clone(), vertex_name.to_string())];
    let extra = vec![EdgeSpec::new(loop_name, &base_name, &base_name, length)];
    let refinement = Refinement::new(graph, &cuts, extra)?;
    let target = refinement.target();
    let vertex = target.vertex_by_name(&base_name).expect("base vertex exists");
    let loop_edge = EdgeId(target.edge_count() - 1);
    Ok(LoopAttachment { refinement, vertex, loop_edge })
}

impl Point {
    pub fn offset(&self) -> Option<&Rational> {
        match self {
            Point::Vertex(_) => None,
            Point::Interior { offset, .. } => Some(offset),
        }
    }

    pub fn is_vertex(&self) -> bool {
        matches!(self, Point::Vertex(_))
    }
}
