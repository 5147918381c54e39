//! Chains of circles with attached loops, and a search for free divisors
//! of prescribed rank and Clifford index on them.
//!
//! The base graph `Γ_0` is a chain of `a` circles `γ_1, ..., γ_a`, where
//! consecutive circles meet at cut points `w_1, ..., w_{a-1}`. Loops
//! `γ_{a+1}, ..., γ_g` are attached at marked points `v_{a+1}, ..., v_g` of
//! `Γ_0`, giving a graph `Γ` of genus `g`. Effective divisors of degree
//! `a + 2r` on `Γ_0` have rank at least `r` on `Γ`; for generic choices the
//! rank is exactly `r` and the divisor is free.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{canonical_divisor, EdgeId, EdgeSpec, GraphSpec, MetricGraph, Point, Refinement, VertexId};
use crate::jacobian::aj_equivalent;
use crate::rank::{rank, rank_at_least, scan_base_points, FreenessCertificate, RankResult};
use crate::rational::{int, ratio, Rational};

/// Lengths of one circle of the chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CircleLengths {
    /// An end circle: a loop of the given length at its gluing point.
    Loop(Rational),
    /// A middle circle: the two arcs between its gluing points.
    Arcs(Rational, Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSpec {
    pub circles: Vec<CircleLengths>,
}

impl ChainSpec {
    /// Unit end circles; middle circles with arcs 1 and 2.
    pub fn standard(a: usize) -> Self {
        let circles = (1..=a)
            .map(|i| if i == 1 || i == a { CircleLengths::Loop(int(1)) } else { CircleLengths::Arcs(int(1), int(2)) })
            .collect();
        ChainSpec { circles }
    }

    pub fn a(&self) -> usize {
        self.circles.len()
    }
}

/// A built chain of circles.
#[derive(Debug, Clone)]
pub struct Chain {
    pub graph: Arc<MetricGraph>,
    /// Gluing points `w_1, ..., w_{a-1}`.
    pub w: Vec<VertexId>,
    /// Edges of each circle `γ_1, ..., γ_a`.
    pub circles: Vec<Vec<EdgeId>>,
}

/// Builds the chain, requiring distinct arc lengths on every middle circle.
pub fn build_chain(spec: &ChainSpec) -> Result<Chain> {
    for (i, c) in spec.circles.iter().enumerate() {
        if let CircleLengths::Arcs(x, y) = c {
            if x == y {
                return Err(Error::ArcLengthClash(i + 1));
            }
        }
    }
    build_chain_unchecked(spec)
}

fn build_chain_unchecked(spec: &ChainSpec) -> Result<Chain> {
    let a = spec.a();
    if a == 0 {
        return Err(Error::InvalidArgument("a chain needs at least one circle".into()));
    }
    let mut gs = GraphSpec { vertices: Vec::new(), edges: Vec::new() };
    if a == 1 {
        let CircleLengths::Loop(len) = &spec.circles[0] else {
            return Err(Error::InvalidArgument("a single circle is a loop".into()));
        };
        gs.vertices.push("o".into());
        gs.edges.push(EdgeSpec::new("c1", "o", "o", len.clone()));
    } else {
        gs.vertices = (1..a).map(|i| format!("w{i}")).collect();
        for (i, c) in spec.circles.iter().enumerate() {
            let k = i + 1;
            let end = k == 1 || k == a;
            match (c, end) {
                (CircleLengths::Loop(len), true) => {
                    let at = if k == 1 { "w1".to_string() } else { format!("w{}", a - 1) };
                    gs.edges.push(EdgeSpec::new(format!("c{k}"), at.clone(), at, len.clone()));
                }
                (CircleLengths::Arcs(x, y), false) => {
                    let (from, to) = (format!("w{}", k - 1), format!("w{k}"));
                    gs.edges.push(EdgeSpec::new(format!("c{k}a"), from.clone(), to.clone(), x.clone()));
                    gs.edges.push(EdgeSpec::new(format!("c{k}b"), from, to, y.clone()));
                }
                _ => return Err(Error::InvalidArgument(format!("circle {k} has the wrong shape"))),
            }
        }
    }
    let graph = Arc::new(MetricGraph::new(&gs)?);
    let w = (1..a).map(|i| graph.vertex_by_name(&format!("w{i}")).unwrap()).collect();
    let circles = (1..=a)
        .map(|k| {
            graph
                .edges()
                .filter(|(_, e)| e.name == format!("c{k}") || e.name.strip_prefix(&format!("c{k}")).is_some_and(|s| s == "a" || s == "b"))
                .map(|(id, _)| id)
                .collect()
        })
        .collect();
    Ok(Chain { graph, w, circles })
}

/// Positions of the marks `v_{a+1}, ..., v_g` on the chain, in order, and
/// the lengths of the loops attached there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub marks: Vec<Point>,
    pub loop_lengths: Vec<Rational>,
}

/// The genus-`g` graph obtained by attaching loops to a chain of `a`
/// circles.
#[derive(Debug, Clone)]
pub struct TheoremGraph {
    pub g: usize,
    pub a: usize,
    pub chain: Chain,
    pub placement: Placement,
    /// `Γ_0` inside `Γ`; `target()` is `Γ`.
    pub embedding: Refinement,
    /// Vertices of `Γ` at `v_{a+1}, ..., v_g`.
    pub mark_vertices: Vec<VertexId>,
    /// Loops `γ_{a+1}, ..., γ_g` in `Γ`.
    pub loops: Vec<EdgeId>,
}

impl TheoremGraph {
    pub fn graph(&self) -> &Arc<MetricGraph> {
        self.embedding.target()
    }

    pub fn base(&self) -> &Arc<MetricGraph> {
        &self.chain.graph
    }

    /// A divisor on `Γ_0` viewed on `Γ`.
    pub fn lift(&self, d: &Divisor) -> Divisor {
        self.embedding.lift_divisor(d)
    }

    /// The mark `v_i`, for `a < i <= g`, as a point of `Γ_0`.
    pub fn mark(&self, i: usize) -> &Point {
        &self.placement.marks[i - self.a - 1]
    }
}

fn on_circle(chain: &Chain, k: usize, p: &Point) -> bool {
    match p {
        Point::Interior { edge, .. } => chain.circles[k - 1].contains(edge),
        Point::Vertex(_) => false,
    }
}

fn check_placement(chain: &Chain, g: usize, a: usize, placement: &Placement) -> Result<()> {
    let base = &chain.graph;
    let violated = |m: String| Err(Error::MarkConstraintViolated(m));
    if placement.marks.len() != g - a || placement.loop_lengths.len() != g - a {
        return violated(format!("expected {} marks and loop lengths", g - a));
    }
    for p in &placement.marks {
        base.check_point(p)?;
    }
    let distinct: BTreeSet<&Point> = placement.marks.iter().collect();
    if distinct.len() != placement.marks.len() {
        return violated("marks are not distinct".into());
    }
    for &w in &chain.w {
        if distinct.contains(&Point::Vertex(w)) {
            return violated(format!("a mark sits on {}", base.vertex_name(w)));
        }
    }
    let vg = &placement.marks[g - a - 1];
    let vg1 = &placement.marks[g - a - 2];
    let twice = |p: &Point| Divisor::from_pairs(base, [(p.clone(), 2)]);
    let p0 = Point::Vertex(VertexId(0));
    if !on_circle(chain, 1, vg) {
        return violated("v_g must lie on the first circle away from w_1".into());
    }
    if !on_circle(chain, a, vg1) {
        return violated("v_{g-1} must lie on the last circle away from w_{a-1}".into());
    }
    if a == 1 {
        if aj_equivalent(&twice(vg)?, &twice(vg1)?, &p0)? {
            return violated("2 v_g is equivalent to 2 v_{g-1}".into());
        }
    } else {
        let w1 = twice(&Point::Vertex(chain.w[0]))?;
        let wa = twice(&Point::Vertex(chain.w[a - 2]))?;
        if aj_equivalent(&twice(vg)?, &w1, &p0)? {
            return violated("2 v_g is equivalent to 2 w_1".into());
        }
        if aj_equivalent(&twice(vg1)?, &wa, &p0)? {
            return violated("2 v_{g-1} is equivalent to 2 w_{a-1}".into());
        }
    }
    Ok(())
}

/// Attaches loops of the given lengths at the marks of `placement`.
pub fn build_theorem_graph(g: usize, spec: &ChainSpec, placement: Placement) -> Result<TheoremGraph> {
    let a = spec.a();
    if a == 0 || g < a + 3 {
        return Err(Error::GenusTooSmall { g, a });
    }
    let chain = build_chain(spec)?;
    check_placement(&chain, g, a, &placement)?;
    let base = &chain.graph;
    let mut cuts = Vec::new();
    let mut extra = Vec::new();
    for (j, (p, len)) in placement.marks.iter().zip(&placement.loop_lengths).enumerate() {
        let i = a + 1 + j;
        let name = match p {
            Point::Vertex(v) => base.vertex_name(*v).to_string(),
            Point::Interior { .. } => {
                let name = format!("v{i}");
                cuts.push((p.clone(), name.clone()));
                name
            }
        };
        extra.push(EdgeSpec::new(format!("gamma{i}"), name.clone(), name, len.clone()));
    }
    let embedding = Refinement::new(base, &cuts, extra)?;
    let graph = embedding.target().clone();
    debug_assert_eq!(graph.genus(), g);
    let mark_vertices = placement
        .marks
        .iter()
        .map(|p| match embedding.lift(p) {
            Point::Vertex(v) => v,
            Point::Interior { .. } => unreachable!("marks become vertices"),
        })
        .collect();
    let loops = (a + 1..=g).map(|i| graph.edge_by_name(&format!("gamma{i}")).unwrap()).collect();
    Ok(TheoremGraph { g, a, chain, placement, embedding, mark_vertices, loops })
}

fn interior_lattice(graph: &MetricGraph, unit: &Rational) -> Vec<Point> {
    graph.lattice_points(unit).into_iter().filter(|p| !p.is_vertex()).collect()
}

/// Random marks on the `1/8` lattice satisfying the placement constraints,
/// with unit loops.
pub fn sample_placement<R: Rng>(g: usize, spec: &ChainSpec, rng: &mut R) -> Result<Placement> {
    let a = spec.a();
    if a == 0 || g < a + 3 {
        return Err(Error::GenusTooSmall { g, a });
    }
    let chain = build_chain(spec)?;
    let lattice = interior_lattice(&chain.graph, &ratio(1, 8));
    let first: Vec<&Point> = lattice.iter().filter(|p| on_circle(&chain, 1, p)).collect();
    let last: Vec<&Point> = lattice.iter().filter(|p| on_circle(&chain, a, p)).collect();
    for _ in 0..1000 {
        let mut marks: Vec<Point> = lattice.choose_multiple(rng, g - a - 2).cloned().collect();
        marks.push((*last.choose(rng).unwrap()).clone());
        marks.push((*first.choose(rng).unwrap()).clone());
        let placement = Placement { marks, loop_lengths: vec![int(1); g - a] };
        match check_placement(&chain, g, a, &placement) {
            Ok(()) => return Ok(placement),
            Err(Error::MarkConstraintViolated(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::MarkConstraintViolated("no valid placement found".into()))
}

fn check_rank_range(g: usize, a: usize, r: i64) -> Result<()> {
    let max = g as i64 - a as i64 - 2;
    if r < 1 || r > max {
        return Err(Error::RankOutOfRange(format!("r = {r} outside [1, {max}]")));
    }
    Ok(())
}

fn sample_divisor_with<R: Rng>(t: &TheoremGraph, r: i64, rng: &mut R) -> Result<Divisor> {
    check_rank_range(t.g, t.a, r)?;
    let base = t.base();
    let avoid: BTreeSet<Point> =
        t.placement.marks.iter().cloned().chain(t.chain.w.iter().map(|&w| Point::Vertex(w))).collect();
    let pool: Vec<Point> =
        base.lattice_points(&ratio(1, 16)).into_iter().filter(|p| !avoid.contains(p)).collect();
    let degree = t.a as i64 + 2 * r;
    let mut d = Divisor::zero(base);
    for _ in 0..degree {
        d.add_unchecked(pool.choose(rng).unwrap().clone(), 1);
    }
    Ok(t.lift(&d))
}

/// A random effective divisor of degree `a + 2r` on the `1/16` lattice of
/// `Γ_0`, away from every mark, as a divisor on `Γ`.
pub fn sample_divisor(t: &TheoremGraph, r: i64, seed: u64) -> Result<Divisor> {
    sample_divisor_with(t, r, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Search parameters for [`find_free_divisor`].
#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub budget: usize,
    pub resolution: u32,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { budget: 50, resolution: 4, seed: 0, jobs: 1 }
    }
}

/// A sampled divisor that was not certified, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NearMiss {
    pub attempt: usize,
    pub divisor: String,
    pub reason: String,
}

/// A certified free divisor.
#[derive(Debug, Clone)]
pub struct Theorem2Witness {
    pub g: usize,
    pub a: usize,
    pub r: i64,
    pub seed: u64,
    /// Number of samples up to and including the certified one.
    pub attempts: usize,
    /// `None` for the hyperelliptic construction used when `a = 0`.
    pub theorem_graph: Option<TheoremGraph>,
    pub graph: Arc<MetricGraph>,
    pub divisor: Divisor,
    pub rank: RankResult,
    pub very_special: bool,
    pub clifford_index: i64,
    pub freeness: FreenessCertificate,
}

impl Theorem2Witness {
    pub fn degree(&self) -> i64 {
        self.divisor.degree()
    }
}

impl Serialize for Theorem2Witness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Theorem2Witness", 12)?;
        st.serialize_field("g", &self.g)?;
        st.serialize_field("a", &self.a)?;
        st.serialize_field("r", &self.r)?;
        st.serialize_field("d", &self.degree())?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("attempts", &self.attempts)?;
        st.serialize_field("graph", &self.graph.to_text())?;
        st.serialize_field("divisor", &self.divisor.to_string())?;
        st.serialize_field("rank", &self.rank)?;
        st.serialize_field("very_special", &self.very_special)?;
        st.serialize_field("clifford_index", &self.clifford_index)?;
        st.serialize_field("freeness", &self.freeness)?;
        st.end()
    }
}

enum Outcome {
    Certified(Box<Theorem2Witness>),
    Miss(NearMiss),
}

fn attempt(g: usize, spec: &ChainSpec, r: i64, opts: &SearchOptions, index: usize) -> Result<Outcome> {
    let a = spec.a();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let placement = sample_placement(g, spec, &mut rng)?;
    let t = build_theorem_graph(g, spec, placement)?;
    let d = sample_divisor_with(&t, r, &mut rng)?;
    let miss = |reason: String| Ok(Outcome::Miss(NearMiss { attempt: index, divisor: d.to_string(), reason }));

    // Every sample has rank at least r; anything else is a defect.
    if !rank_at_least(&d, r)? {
        return Err(Error::RankLowerBoundViolated { divisor: d.to_string(), expected: r });
    }
    let rk = rank(&d)?;
    if rk.rank > r {
        return miss(format!("rank {} exceeds {r}", rk.rank));
    }
    let k = canonical_divisor(t.graph());
    if !rank_at_least(&(&k - &d), 1)? {
        return miss("K - D has rank below 1".into());
    }
    let cert = scan_base_points(&d, r, opts.resolution, true)?;
    if let Some(p) = cert.violations.first() {
        return miss(format!("base point at {}", t.graph().format_point(p)));
    }
    let graph = t.graph().clone();
    Ok(Outcome::Certified(Box::new(Theorem2Witness {
        g,
        a,
        r,
        seed: opts.seed,
        attempts: index + 1,
        theorem_graph: Some(t),
        graph,
        clifford_index: d.degree() - 2 * r,
        divisor: d,
        rank: rk,
        very_special: true,
        freeness: cert,
    })))
}

/// Samples divisors of degree `2r + a` until one has rank exactly `r`, is
/// very special and has no base point at the given resolution.
///
/// Attempt `i` draws its marks and divisor from the stream `i` of a ChaCha8
/// generator seeded with `opts.seed`, so the outcome does not depend on
/// `opts.jobs`. For `a = 0` the hyperelliptic witness `rE` is certified
/// instead.
pub fn find_free_divisor(g: usize, a: usize, r: i64, opts: &SearchOptions) -> Result<Theorem2Witness> {
    if opts.budget == 0 {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    if a == 0 {
        return certify_hyperelliptic(g, r, opts);
    }
    check_rank_range(g, a, r)?;
    if g < a + 3 {
        return Err(Error::GenusTooSmall { g, a });
    }
    let spec = ChainSpec::standard(a);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let batch = opts.jobs.max(1);
    let mut near_misses = Vec::new();
    let mut next = 0;
    while next < opts.budget {
        let end = (next + batch).min(opts.budget);
        let outcomes: Vec<Result<Outcome>> =
            pool.install(|| (next..end).into_par_iter().map(|i| attempt(g, &spec, r, opts, i)).collect());
        for o in outcomes {
            match o? {
                Outcome::Certified(w) => return Ok(*w),
                Outcome::Miss(m) => near_misses.push(m),
            }
        }
        next = end;
    }
    Err(Error::BudgetExhausted { attempts: opts.budget, near_misses })
}

fn certify_hyperelliptic(g: usize, r: i64, opts: &SearchOptions) -> Result<Theorem2Witness> {
    let w = hyperelliptic_witness(g, r, 0)?;
    let rk = rank(&w.divisor)?;
    let cert = scan_base_points(&w.divisor, r, opts.resolution, false)?;
    if !cert.is_free() {
        let p = w.graph.format_point(&cert.violations[0]);
        return Err(Error::BudgetExhausted {
            attempts: 1,
            near_misses: vec![NearMiss { attempt: 0, divisor: w.divisor.to_string(), reason: format!("base point at {p}") }],
        });
    }
    let k = canonical_divisor(&w.graph);
    let very_special = rank_at_least(&(&k - &w.divisor), 1)?;
    Ok(Theorem2Witness {
        g,
        a: 0,
        r,
        seed: opts.seed,
        attempts: 1,
        theorem_graph: None,
        graph: w.graph.clone(),
        clifford_index: w.divisor.degree() - 2 * rk.rank,
        divisor: w.divisor,
        rank: rk,
        very_special,
        freeness: cert,
    })
}

/// `rE + F` on a hyperelliptic chain of circles.
#[derive(Debug, Clone)]
pub struct HyperellipticWitness {
    pub graph: Arc<MetricGraph>,
    /// The degree-2 divisor `2 w_1` of rank 1.
    pub e: Divisor,
    pub f: Divisor,
    pub divisor: Divisor,
}

/// Chain of `g` unit circles glued at antipodal points, with `D = rE + F`
/// for `E = 2 w_1` and `F` consisting of `f` points on distinct circles
/// (cycling with shrinking offsets once every circle has one). The rank of
/// `D` is checked to be `r`.
pub fn hyperelliptic_witness(g: usize, r: i64, f: usize) -> Result<HyperellipticWitness> {
    let d = 2 * r + f as i64;
    let max = 2 * g as i64 - 4;
    if d < 2 || d > max {
        return Err(Error::DegreeWindowViolated { degree: d, max });
    }
    if r < 1 {
        return Err(Error::RankOutOfRange(format!("r = {r} must be at least 1")));
    }
    let spec = ChainSpec {
        circles: (1..=g)
            .map(|i| if i == 1 || i == g { CircleLengths::Loop(int(1)) } else { CircleLengths::Arcs(ratio(1, 2), ratio(1, 2)) })
            .collect(),
    };
    let chain = build_chain_unchecked(&spec)?;
    let graph = chain.graph.clone();
    let e = Divisor::from_pairs(&graph, [(Point::Vertex(chain.w[0]), 2)])?;
    let mut fd = Divisor::zero(&graph);
    for i in 0..f {
        let edge = chain.circles[i % g][0];
        let offset = Rational::new(1.into(), (4 + i / g).into());
        fd.add_point(graph.point_on_edge(edge, offset)?, 1)?;
    }
    let divisor = &e.scaled(r) + &fd;
    let found = rank(&divisor)?.rank;
    if found != r {
        return Err(Error::InvalidArgument(format!("hyperelliptic divisor has rank {found}, expected {r}")));
    }
    Ok(HyperellipticWitness { graph, e, f: fd, divisor })
}
