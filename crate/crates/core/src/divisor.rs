//! Divisors: finitely supported integer combinations of points.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, Point};

#[derive(Debug, Clone)]
pub struct Divisor {
    graph: Arc<MetricGraph>,
    coeffs: BTreeMap<Point, i64>,
}

impl PartialEq for Divisor {
    fn eq(&self, other: &Self) -> bool {
        same_graph(&self.graph, &other.graph) && self.coeffs == other.coeffs
    }
}

impl Eq for Divisor {}

pub(crate) fn same_graph(a: &Arc<MetricGraph>, b: &Arc<MetricGraph>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Divisor {
    pub fn zero(graph: &Arc<MetricGraph>) -> Self {
        Divisor { graph: graph.clone(), coeffs: BTreeMap::new() }
    }

    pub fn point(graph: &Arc<MetricGraph>, p: Point) -> Result<Self> {
        Self::from_pairs(graph, [(p, 1)])
    }

    pub fn from_pairs(graph: &Arc<MetricGraph>, pairs: impl IntoIterator<Item = (Point, i64)>) -> Result<Self> {
        let mut d = Self::zero(graph);
        for (p, c) in pairs {
            graph.check_point(&p)?;
            d.add_unchecked(p, c);
        }
        Ok(d)
    }

    pub(crate) fn add_unchecked(&mut self, p: Point, c: i64) {
        if c == 0 {
            return;
        }
        match self.coeffs.entry(p) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    /// Adds `c` copies of `p`.
    pub fn add_point(&mut self, p: Point, c: i64) -> Result<()> {
        self.graph.check_point(&p)?;
        self.add_unchecked(p, c);
        Ok(())
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        &self.graph
    }

    pub fn get(&self, p: &Point) -> i64 {
        self.coeffs.get(p).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.values().sum()
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.values().all(|&c| c >= 0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.coeffs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, i64)> {
        self.coeffs.iter().map(|(p, &c)| (p, c))
    }

    pub fn checked_add(&self, other: &Divisor) -> Result<Divisor> {
        if !same_graph(&self.graph, &other.graph) {
            return Err(Error::GraphMismatch);
        }
        let mut out = self.clone();
        for (p, c) in other.iter() {
            out.add_unchecked(p.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Divisor) -> Result<Divisor> {
        self.checked_add(&-other)
    }

    pub fn scaled(&self, k: i64) -> Divisor {
        let mut out = Divisor::zero(&self.graph);
        for (p, c) in self.iter() {
            out.add_unchecked(p.clone(), c * k);
        }
        out
    }

    /// Part of the divisor lying on the closed subgraph spanned by `edges`.
    pub fn restrict_to_edges(&self, edges: &BTreeSet<EdgeId>) -> Divisor {
        let vertices: BTreeSet<_> = edges
            .iter()
            .flat_map(|&e| {
                let edge = self.graph.edge(e);
                [edge.tail, edge.head]
            })
            .collect();
        let keep = |p: &Point| match p {
            Point::Vertex(v) => vertices.contains(v),
            Point::Interior { edge, .. } => edges.contains(edge),
        };
        Divisor {
            graph: self.graph.clone(),
            coeffs: self.coeffs.iter().filter(|(p, _)| keep(p)).map(|(p, &c)| (p.clone(), c)).collect(),
        }
    }

    /// Parses either the pair list `(v:u, 2), (e:1@1/2, -1)` or the
    /// expression form `2u - v + 3 e:1@1/2`. `0` and the empty string are the
    /// zero divisor.
    pub fn parse(graph: &Arc<MetricGraph>, text: &str) -> Result<Divisor> {
        let text = text.trim();
        if text.is_empty() || text == "0" {
            return Ok(Divisor::zero(graph));
        }
        if text.starts_with('(') {
            return Self::parse_pairs(graph, text);
        }
        let mut d = Divisor::zero(graph);
        let mut rest = text;
        let mut first = true;
        while !rest.trim().is_empty() {
            rest = rest.trim_start();
            let sign = if let Some(r) = rest.strip_prefix('-') {
                rest = r;
                -1
            } else if let Some(r) = rest.strip_prefix('+') {
                rest = r;
                1
            } else if first {
                1
            } else {
                return Err(Error::Parse(format!("expected '+' or '-' before {rest:?}")));
            };
            first = false;
            rest = rest.trim_start();
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = rest[..end].trim();
            rest = &rest[end..];
            let digits = term.chars().take_while(|c| c.is_ascii_digit()).count();
            let (coeff, point) = term.split_at(digits);
            if digits > 0 && point.starts_with(['.', '/']) {
                return Err(Error::Parse(format!("coefficients must be integers: {term:?}")));
            }
            let coeff: i64 = if coeff.is_empty() {
                1
            } else {
                coeff.parse().map_err(|_| Error::Parse(format!("bad coefficient in {term:?}")))?
            };
            let point = point.trim().trim_start_matches('*').trim();
            if point.is_empty() {
                return Err(Error::Parse(format!("missing point in term {term:?}")));
            }
            d.add_point(graph.parse_point(point)?, sign * coeff)?;
        }
        Ok(d)
    }

    fn parse_pairs(graph: &Arc<MetricGraph>, text: &str) -> Result<Divisor> {
        let mut d = Divisor::zero(graph);
        let mut rest = text;
        loop {
            rest = rest.trim_start().trim_start_matches(',').trim_start();
            if rest.is_empty() {
                return Ok(d);
            }
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.split_once(')'))
                .ok_or_else(|| Error::Parse(format!("expected '(<point>, <coeff>)' at {rest:?}")))?;
            let (pair, tail) = inner;
            let (point, coeff) = pair
                .rsplit_once(',')
                .ok_or_else(|| Error::Parse(format!("pair {pair:?} lacks a coefficient")))?;
            let coeff: i64 = coeff
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient in {pair:?}")))?;
            d.add_point(graph.parse_point(point)?, coeff)?;
            rest = tail;
        }
    }
}

impl fmt::Display for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(p, c)| format!("({}, {})", self.graph.format_point(p), c))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

impl Add for &Divisor {
    type Output = Divisor;

    /// Panics when the operands live on different graphs; see
    /// [`Divisor::checked_add`].
    fn add(self, rhs: &Divisor) -> Divisor {
        self.checked_add(rhs).expect("divisors on different graphs")
    }
}

impl Sub for &Divisor {
    type Output = Divisor;

    fn sub(self, rhs: &Divisor) -> Divisor {
        self.checked_sub(rhs).expect("divisors on different graphs")
    }
}

impl Neg for &Divisor {
    type Output = Divisor;

    fn neg(self) -> Divisor {
        self.scaled(-1)
    }
}
