//! Tropical Jacobian coordinates.
//!
//! The space of harmonic one-forms is identified with the cycle space: the
//! form attached to a cycle `c` integrates along a path to its signed overlap
//! with `c`. In the coordinates given by a fundamental cycle basis the period
//! lattice is spanned by the columns of the Gram matrix, so linear
//! equivalence reduces to exact integer solvability of `M x = v`.

use std::collections::VecDeque;
use std::ops::{Add, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::ser::{SerializeSeq, SerializeStruct, Serializer};
use serde::Serialize;

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, Point, VertexId};
use crate::rational::{format_rational, int, Rational};

/// A spanning tree with the signed tree path from the first vertex to every
/// vertex, as an edge-coefficient vector.
#[derive(Debug, Clone)]
pub struct SpanningTree {
    pub edges: Vec<EdgeId>,
    paths: Vec<Vec<i64>>,
}

impl SpanningTree {
    /// Kruskal's algorithm taking edges in the given order. Loops never
    /// enter the tree.
    pub fn kruskal(graph: &MetricGraph, order: impl IntoIterator<Item = EdgeId>) -> Self {
        let n = graph.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut edges = Vec::new();
        for e in order {
            let edge = graph.edge(e);
            let (a, b) = (find(&mut parent, edge.tail.0), find(&mut parent, edge.head.0));
            if a != b {
                parent[a] = b;
                edges.push(e);
            }
        }
        edges.sort();
        let mut in_tree = vec![false; graph.edge_count()];
        for e in &edges {
            in_tree[e.0] = true;
        }
        let mut paths: Vec<Option<Vec<i64>>> = vec![None; n];
        paths[0] = Some(vec![0; graph.edge_count()]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &(e, _) in graph.incident(VertexId(v)) {
                if !in_tree[e.0] {
                    continue;
                }
                let edge = graph.edge(e);
                let (w, sign) = if edge.tail.0 == v { (edge.head.0, 1) } else { (edge.tail.0, -1) };
                if paths[w].is_none() {
                    let mut p = paths[v].clone().unwrap();
                    p[e.0] += sign;
                    paths[w] = Some(p);
                    queue.push_back(w);
                }
            }
        }
        SpanningTree { edges, paths: paths.into_iter().map(|p| p.expect("graph is connected")).collect() }
    }

    /// Signed tree path from the first vertex to `v`.
    pub fn path(&self, v: VertexId) -> &[i64] {
        &self.paths[v.0]
    }
}

/// Fundamental cycles of a spanning tree and their Gram matrix.
#[derive(Debug, Clone)]
pub struct CycleBasis {
    graph: Arc<MetricGraph>,
    pub tree: SpanningTree,
    /// One edge-coefficient vector per cycle, entries in {-1, 0, 1}.
    pub cycles: Vec<Vec<i64>>,
    pub gram: Vec<Vec<Rational>>,
}

/// Coordinates in the dual of the space of one-forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JacVector(pub Vec<Rational>);

impl JacVector {
    pub fn zero(dim: usize) -> Self {
        JacVector(vec![Rational::zero(); dim])
    }

    fn add_scaled(&mut self, other: &JacVector, k: i64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b * int(k);
        }
    }
}

impl Add for &JacVector {
    type Output = JacVector;

    fn add(self, other: &JacVector) -> JacVector {
        let mut out = self.clone();
        out.add_scaled(other, 1);
        out
    }
}

impl Sub for &JacVector {
    type Output = JacVector;

    fn sub(self, other: &JacVector) -> JacVector {
        let mut out = self.clone();
        out.add_scaled(other, -1);
        out
    }
}

impl Serialize for JacVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for x in &self.0 {
            seq.serialize_element(&format_rational(x))?;
        }
        seq.end()
    }
}

impl Serialize for CycleBasis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let tree: Vec<&str> = self.tree.edges.iter().map(|&e| self.graph.edge(e).name.as_str()).collect();
        let gram: Vec<JacVector> = self.gram.iter().map(|row| JacVector(row.clone())).collect();
        let mut st = s.serialize_struct("CycleBasis", 3)?;
        st.serialize_field("tree", &tree)?;
        st.serialize_field("cycles", &self.cycles)?;
        st.serialize_field("gram", &gram)?;
        st.end()
    }
}

/// Fundamental cycles of the Kruskal tree taken in edge order.
pub fn cycle_basis(graph: &Arc<MetricGraph>) -> CycleBasis {
    CycleBasis::from_tree(graph, SpanningTree::kruskal(graph, graph.edges().map(|(e, _)| e)))
}

impl CycleBasis {
    pub fn from_tree(graph: &Arc<MetricGraph>, tree: SpanningTree) -> Self {
        let mut in_tree = vec![false; graph.edge_count()];
        for e in &tree.edges {
            in_tree[e.0] = true;
        }
        let mut cycles = Vec::new();
        for (e, edge) in graph.edges() {
            if in_tree[e.0] {
                continue;
            }
            let mut c: Vec<i64> = tree.path(edge.tail).iter().zip(tree.path(edge.head)).map(|(t, h)| t - h).collect();
            c[e.0] += 1;
            cycles.push(c);
        }
        let lengths: Vec<&Rational> = graph.edges().map(|(_, e)| &e.length).collect();
        let gram = cycles
            .iter()
            .map(|ci| {
                cycles
                    .iter()
                    .map(|cj| {
                        ci.iter().zip(cj).zip(&lengths).fold(Rational::zero(), |acc, ((a, b), l)| acc + *l * int(a * b))
                    })
                    .collect()
            })
            .collect();
        CycleBasis { graph: graph.clone(), tree, cycles, gram }
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        &self.graph
    }

    pub fn genus(&self) -> usize {
        self.cycles.len()
    }

    /// Integral of every basis form along `path`, an edge-coefficient vector.
    fn pair(&self, path: &[i64]) -> JacVector {
        JacVector(
            self.cycles
                .iter()
                .map(|c| {
                    self.graph
                        .edges()
                        .filter(|(e, _)| path[e.0] != 0 && c[e.0] != 0)
                        .fold(Rational::zero(), |acc, (e, edge)| acc + &edge.length * int(path[e.0] * c[e.0]))
                })
                .collect(),
        )
    }

    /// Integrals from the first vertex to `p`, following the paths of `tree`
    /// and then the edge containing `p` from its tail.
    pub fn integral_along(&self, tree: &SpanningTree, p: &Point) -> JacVector {
        match p {
            Point::Vertex(v) => self.pair(tree.path(*v)),
            Point::Interior { edge, offset } => {
                let mut out = self.pair(tree.path(self.graph.edge(*edge).tail));
                for (x, c) in out.0.iter_mut().zip(&self.cycles) {
                    *x += offset * int(c[edge.0]);
                }
                out
            }
        }
    }

    /// Abel-Jacobi image of `d` based at `p0`, along the paths of `tree`.
    pub fn abel_jacobi_along(&self, tree: &SpanningTree, d: &Divisor, p0: &Point) -> Result<JacVector> {
        self.graph.check_point(p0)?;
        let base = self.integral_along(tree, p0);
        let mut out = JacVector::zero(self.genus());
        for (p, c) in d.iter() {
            out.add_scaled(&self.integral_along(tree, p), c);
            out.add_scaled(&base, -c);
        }
        Ok(out)
    }

    pub fn abel_jacobi(&self, d: &Divisor, p0: &Point) -> Result<JacVector> {
        self.abel_jacobi_along(&self.tree, d, p0)
    }
}

/// Abel-Jacobi image of `d` based at `p0`, in the coordinates of
/// [`cycle_basis`].
pub fn abel_jacobi(d: &Divisor, p0: &Point) -> Result<JacVector> {
    cycle_basis(d.graph()).abel_jacobi(d, p0)
}

/// Whether `v` lies in the period lattice, that is whether `M x = v` has an
/// integer solution.
pub fn lattice_member(v: &JacVector, basis: &CycleBasis) -> Result<bool> {
    let n = basis.genus();
    if v.0.len() != n {
        return Err(Error::InvalidArgument(format!("vector has {} coordinates, expected {n}", v.0.len())));
    }
    let mut a: Vec<Vec<Rational>> = basis
        .gram
        .iter()
        .zip(&v.0)
        .map(|(row, b)| row.iter().cloned().chain([b.clone()]).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(Error::SingularGram)?;
        a.swap(col, pivot);
        let inv = Rational::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= &factor * p;
                }
            }
        }
    }
    Ok(a.iter().all(|row| row[n].is_integer()))
}

/// Linear equivalence decided through the Jacobian.
pub fn aj_equivalent(d1: &Divisor, d2: &Divisor, p0: &Point) -> Result<bool> {
    if d1.degree() != d2.degree() {
        return Err(Error::DegreeMismatch);
    }
    let basis = cycle_basis(d1.graph());
    let v = basis.abel_jacobi(&d1.checked_sub(d2)?, p0)?;
    lattice_member(&v, &basis)
}
