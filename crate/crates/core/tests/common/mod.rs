#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use freediv::rational::{int, ratio};
use freediv::*;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn parse(text: &str) -> Arc<MetricGraph> {
    Arc::new(MetricGraph::parse(text).unwrap())
}

pub fn unit_loop() -> Arc<MetricGraph> {
    parse("vertex v\nedge l v v 1\n")
}

pub fn theta() -> Arc<MetricGraph> {
    parse("vertex u\nvertex v\nedge a u v 1\nedge b u v 1\nedge c u v 1\n")
}

pub fn dumbbell() -> Arc<MetricGraph> {
    parse("vertex u\nvertex v\nedge lu u u 1\nedge bar u v 1\nedge lv v v 1\n")
}

pub fn chain3() -> Arc<MetricGraph> {
    build_chain(&ChainSpec::standard(3)).unwrap().graph
}

/// Three circles glued at antipodal points.
pub fn hyperelliptic_chain(g: usize) -> Arc<MetricGraph> {
    hyperelliptic_witness(g, 1, 0).unwrap().graph
}

pub fn k4() -> Arc<MetricGraph> {
    parse(
        "vertex a\nvertex b\nvertex c\nvertex d\n\
         edge ab a b 1\nedge ac a c 1/2\nedge ad a d 1\nedge bc b c 1\nedge bd b d 3/2\nedge cd c d 1\n",
    )
}

/// The genus-4 graph: one circle with three attached unit loops.
pub fn theorem_graph_4_1() -> TheoremGraph {
    let spec = ChainSpec::standard(1);
    let chain = build_chain(&spec).unwrap();
    let c1 = chain.graph.edge_by_name("c1").unwrap();
    let at = |p, q| chain.graph.point_on_edge(c1, ratio(p, q)).unwrap();
    let placement = Placement { marks: vec![at(1, 8), at(3, 8), at(3, 4)], loop_lengths: vec![int(1); 3] };
    build_theorem_graph(4, &spec, placement).unwrap()
}

pub fn family() -> Vec<(&'static str, Arc<MetricGraph>)> {
    vec![
        ("loop", unit_loop()),
        ("theta", theta()),
        ("dumbbell", dumbbell()),
        ("chain3", chain3()),
        ("k4", k4()),
        ("theorem(4,1)", theorem_graph_4_1().graph().clone()),
    ]
}

pub fn lattice(g: &Arc<MetricGraph>, denom: i64) -> Vec<Point> {
    g.lattice_points(&ratio(1, denom))
}

pub fn random_point<R: Rng>(g: &Arc<MetricGraph>, denom: i64, rng: &mut R) -> Point {
    lattice(g, denom).choose(rng).unwrap().clone()
}

/// Divisor of exactly `degree` on the `1/denom` lattice with `terms` random
/// support points and coefficients in `-spread..=spread` (non-negative when
/// `spread` is 0).
pub fn random_divisor<R: Rng>(g: &Arc<MetricGraph>, degree: i64, terms: usize, spread: i64, denom: i64, rng: &mut R) -> Divisor {
    let pts = lattice(g, denom);
    let mut d = Divisor::zero(g);
    for _ in 0..terms {
        let c = if spread == 0 { 1 } else { rng.gen_range(-spread..=spread) };
        d.add_point(pts.choose(rng).unwrap().clone(), c).unwrap();
    }
    let fix = degree - d.degree();
    d.add_point(pts.choose(rng).unwrap().clone(), fix).unwrap();
    d
}

pub fn random_effective<R: Rng>(g: &Arc<MetricGraph>, degree: usize, denom: i64, rng: &mut R) -> Divisor {
    let pts = lattice(g, denom);
    let mut d = Divisor::zero(g);
    for _ in 0..degree {
        d.add_point(pts.choose(rng).unwrap().clone(), 1).unwrap();
    }
    d
}

/// A random script of subset firings on the `1/denom` lattice.
pub fn random_script<R: Rng>(g: &Arc<MetricGraph>, denom: i64, moves: usize, rng: &mut R) -> FiringScript {
    let segment = ratio(1, denom);
    let pts = lattice(g, denom);
    let mut s = FiringScript::new(g, segment.clone());
    for _ in 0..moves {
        let set: BTreeSet<Point> = pts.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        let distance = if rng.gen_bool(0.7) { segment.clone() } else { &segment / int(rng.gen_range(2..=3)) };
        s.push(Arc::new(set), distance, rng.gen_range(1..=2));
    }
    s
}

/// A random connected graph on up to four vertices with half-integer
/// lengths; may contain leaves, loops and parallel edges.
pub fn random_graph<R: Rng>(rng: &mut R) -> Arc<MetricGraph> {
    let n = rng.gen_range(1..=4);
    let mut text: String = (0..n).map(|i| format!("vertex x{i}\n")).collect();
    let mut edges = 0;
    let mut edge = |text: &mut String, a: usize, b: usize, rng: &mut R| {
        let len = ["1/2", "1", "3/2"].choose(rng).unwrap();
        text.push_str(&format!("edge e{edges} x{a} x{b} {len}\n"));
        edges += 1;
    };
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edge(&mut text, j, i, rng);
    }
    let extra = rng.gen_range(usize::from(n == 1)..=2);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        edge(&mut text, a, b, rng);
    }
    parse(&text)
}
