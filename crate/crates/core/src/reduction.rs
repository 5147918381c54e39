//! Dhar's burning algorithm, reduced divisors and linear equivalence.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::divisor::{same_graph, Divisor};
use crate::error::{Error, Result};
use crate::function::{compose_script, FiringScript, PLFunction};
use crate::graph::{MetricGraph, Point, VertexId};
use crate::model::{Model, SetFiring};

/// Outcome of lighting a fire at a point.
///
/// `burned` and `unburned` list the vertices of the subdivision at the
/// support of the divisor and the base point; the open segments between
/// them burn exactly when one of their ends does. `survivors` gives, for
/// every support point other than the base, the fire-fighters still standing
/// when the fire stops.
#[derive(Debug, Clone)]
pub struct BurnReport {
    pub graph: Arc<MetricGraph>,
    pub base: Point,
    pub burned: BTreeSet<Point>,
    pub unburned: BTreeSet<Point>,
    pub survivors: BTreeMap<Point, i64>,
}

impl BurnReport {
    /// Whether the fire consumed the whole graph, that is whether the
    /// divisor is reduced at the base point.
    pub fn burns_everything(&self) -> bool {
        self.unburned.is_empty()
    }
}

impl Serialize for BurnReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let g = &self.graph;
        let fmt_set = |set: &BTreeSet<Point>| set.iter().map(|p| g.format_point(p)).collect::<Vec<_>>();
        let survivors: BTreeMap<String, i64> = self.survivors.iter().map(|(p, &c)| (g.format_point(p), c)).collect();
        let mut st = s.serialize_struct("BurnReport", 5)?;
        st.serialize_field("base", &g.format_point(&self.base))?;
        st.serialize_field("reduced", &self.burns_everything())?;
        st.serialize_field("burned", &fmt_set(&self.burned))?;
        st.serialize_field("unburned", &fmt_set(&self.unburned))?;
        st.serialize_field("survivors", &survivors)?;
        st.end()
    }
}

/// Lights a fire at `p`. Requires `D(Q) >= 0` for every `Q != p`.
pub fn burn(d: &Divisor, p: &Point) -> Result<BurnReport> {
    let graph = d.graph();
    graph.check_point(p)?;
    if d.iter().any(|(q, c)| q != p && c < 0) {
        return Err(Error::NegativeCoefficientAwayFromP);
    }
    let model = Model::marked(graph, d.support().chain([p]))?;
    let chips = model.chips(d);
    let base = model.node(p).expect("base is marked");
    let (burned, hits) = model.burn_with_hits(&chips, base);
    let mut report = BurnReport {
        graph: graph.clone(),
        base: p.clone(),
        burned: BTreeSet::new(),
        unburned: BTreeSet::new(),
        survivors: BTreeMap::new(),
    };
    for (n, &b) in burned.iter().enumerate() {
        let point = model.point(n);
        if b {
            report.burned.insert(point);
        } else {
            report.unburned.insert(point);
        }
    }
    for (q, c) in d.iter() {
        if q != p {
            let n = model.node(q).unwrap();
            report.survivors.insert(q.clone(), if burned[n] { 0 } else { c - hits[n] });
        }
    }
    Ok(report)
}

/// A reduced divisor together with the firings that produced it.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub divisor: Divisor,
    pub script: FiringScript,
}

impl Reduction {
    /// The function `f` with `D + div(f)` equal to the reduced divisor.
    pub fn function(&self) -> Result<PLFunction> {
        compose_script(&self.script)
    }
}

pub(crate) fn script_from_log(model: &Model, log: &[SetFiring]) -> FiringScript {
    let segment = model.segment().expect("uniform model").clone();
    let mut script = FiringScript::new(model.graph(), segment.clone());
    let points: Vec<Point> = (0..model.len()).map(|n| model.point(n)).collect();
    for firing in log {
        for (mask, times) in model.unit_firings(firing) {
            let set: BTreeSet<Point> = mask.iter().zip(&points).filter(|(&b, _)| b).map(|(_, p)| p.clone()).collect();
            script.push(Arc::new(set), segment.clone(), times as usize);
        }
    }
    script
}

/// The unique `p`-reduced divisor linearly equivalent to `d`.
pub fn reduce(d: &Divisor, p: &Point) -> Result<Reduction> {
    reduce_at_resolution(d, p, 1)
}

/// As [`reduce`], on a uniform subdivision `resolution` times finer than the
/// coarsest one containing the support and `p`. The result does not depend
/// on the resolution; only the recorded script does.
pub fn reduce_at_resolution(d: &Divisor, p: &Point, resolution: u32) -> Result<Reduction> {
    let graph = d.graph();
    graph.check_point(p)?;
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let model = Model::uniform_for(graph, d.support().chain([p]), resolution)?;
    let mut chips = model.chips(d);
    let base = model.node(p).expect("base lies on the model");
    let mut log = Vec::new();
    model.reduce(&mut chips, base, Some(&mut log));
    Ok(Reduction { divisor: model.divisor(&chips), script: script_from_log(&model, &log) })
}

/// Reduced divisor only, skipping the script.
pub fn reduced_divisor(d: &Divisor, p: &Point) -> Result<Divisor> {
    reduced_divisor_at(d, p, 1)
}

pub(crate) fn reduced_divisor_at(d: &Divisor, p: &Point, resolution: u32) -> Result<Divisor> {
    let graph = d.graph();
    graph.check_point(p)?;
    let model = Model::uniform_for(graph, d.support().chain([p]), resolution)?;
    let mut chips = model.chips(d);
    model.reduce(&mut chips, model.node(p).unwrap(), None);
    Ok(model.divisor(&chips))
}

/// Answer to a linear equivalence query.
#[derive(Debug, Clone)]
pub struct Equivalence {
    pub equivalent: bool,
    /// When equivalent, `f` with `d1 + div(f) = d2`.
    pub witness: Option<PLFunction>,
}

/// Decides whether `d1 - d2` is the divisor of a rational function by
/// comparing reduced divisors at the first vertex.
pub fn linearly_equivalent(d1: &Divisor, d2: &Divisor) -> Result<Equivalence> {
    if !same_graph(d1.graph(), d2.graph()) {
        return Err(Error::GraphMismatch);
    }
    if d1.degree() != d2.degree() {
        return Ok(Equivalence { equivalent: false, witness: None });
    }
    let p0 = Point::Vertex(VertexId(0));
    let r1 = reduce(d1, &p0)?;
    let r2 = reduce(d2, &p0)?;
    if r1.divisor != r2.divisor {
        return Ok(Equivalence { equivalent: false, witness: None });
    }
    let f = r1.function()?.checked_sub(&r2.function()?)?;
    debug_assert_eq!(&(d1 + &f.div()), d2);
    Ok(Equivalence { equivalent: true, witness: Some(f) })
}

/// Some effective divisor equivalent to `d`, if one exists.
pub fn equivalent_effective(d: &Divisor) -> Result<Option<Divisor>> {
    if d.is_effective() {
        return Ok(Some(d.clone()));
    }
    let p0 = Point::Vertex(VertexId(0));
    let r = reduced_divisor(d, &p0)?;
    Ok((r.get(&p0) >= 0).then_some(r))
}
