use std::fs;
use std::path::Path;
use std::sync::Arc;

use freediv::{
    abel_jacobi, aj_equivalent, burn, cycle_basis, find_free_divisor, hyperelliptic_witness, is_free,
    linearly_equivalent, rank, reduce, Divisor, DivisorReport, MetricGraph, Point, SearchOptions, VertexId,
};
use serde_json::{json, Value};

use crate::args::{Command, DivisorInput};
use crate::report::CliError;

pub struct Outcome {
    pub outputs: Value,
    /// False when the command answered a yes/no question with no.
    pub verified: bool,
}

impl Outcome {
    fn ok(outputs: Value) -> Self {
        Outcome { outputs, verified: true }
    }
}

pub fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Reduce { .. } => "reduce",
        Command::Burn { .. } => "burn",
        Command::Equivalent { .. } => "equivalent",
        Command::Rank { .. } => "rank",
        Command::FreeCheck { .. } => "free-check",
        Command::AbelJacobi { .. } => "abel-jacobi",
        Command::VerifyTheorem2 { .. } => "verify-theorem2",
        Command::Hyperelliptic { .. } => "hyperelliptic",
    }
}

/// The arguments as given, echoed into the report.
pub fn inputs(cmd: &Command) -> Value {
    let di = |i: &DivisorInput| json!({ "graph": i.graph.display().to_string(), "divisor": i.divisor });
    match cmd {
        Command::Reduce { input, point } | Command::Burn { input, point } => {
            let mut v = di(input);
            v["point"] = json!(point);
            v
        }
        Command::Equivalent { graph, d1, d2 } => json!({ "graph": graph.display().to_string(), "d1": d1, "d2": d2 }),
        Command::Rank { input } => di(input),
        Command::FreeCheck { input, resolution } => {
            let mut v = di(input);
            v["resolution"] = json!(resolution);
            v
        }
        Command::AbelJacobi { input, base } => {
            let mut v = di(input);
            v["base"] = json!(base);
            v
        }
        Command::VerifyTheorem2 { g, a, r, seed, budget, resolution, .. } => {
            json!({ "g": g, "a": a, "r": r, "seed": seed, "budget": budget, "resolution": resolution })
        }
        Command::Hyperelliptic { g, r, f, resolution } => json!({ "g": g, "r": r, "f": f, "resolution": resolution }),
    }
}

fn load_graph(path: &Path) -> Result<Arc<MetricGraph>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(Arc::new(MetricGraph::parse(&text)?))
}

fn load(input: &DivisorInput) -> Result<Divisor, CliError> {
    let g = load_graph(&input.graph)?;
    Ok(Divisor::parse(&g, &input.divisor)?)
}

fn point(g: &Arc<MetricGraph>, text: &str) -> Result<Point, CliError> {
    let p = g.parse_point(text)?;
    g.check_point(&p)?;
    Ok(p)
}

pub fn run(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Reduce { input, point: p } => {
            let d = load(input)?;
            let g = d.graph();
            let p = point(g, p)?;
            let r = reduce(&d, &p)?;
            Ok(Outcome::ok(json!({
                "divisor": d.to_string(),
                "point": g.format_point(&p),
                "reduced": r.divisor.to_string(),
                "script": r.script,
            })))
        }
        Command::Burn { input, point: p } => {
            let d = load(input)?;
            let p = point(d.graph(), p)?;
            Ok(Outcome::ok(json!(burn(&d, &p)?)))
        }
        Command::Equivalent { graph, d1, d2 } => {
            let g = load_graph(graph)?;
            let d1 = Divisor::parse(&g, d1)?;
            let d2 = Divisor::parse(&g, d2)?;
            let eq = linearly_equivalent(&d1, &d2)?;
            let aj = d1.degree() == d2.degree() && aj_equivalent(&d1, &d2, &Point::Vertex(VertexId(0)))?;
            Ok(Outcome {
                outputs: json!({
                    "equivalent": eq.equivalent,
                    "abel_jacobi_agrees": aj == eq.equivalent,
                    "witness": eq.witness,
                }),
                verified: eq.equivalent,
            })
        }
        Command::Rank { input } => {
            let d = load(input)?;
            Ok(Outcome::ok(json!(DivisorReport::compute(&d, None)?)))
        }
        Command::FreeCheck { input, resolution } => {
            let d = load(input)?;
            let cert = is_free(&d, *resolution)?;
            let free = cert.is_free();
            Ok(Outcome { outputs: json!({ "rank": rank(&d)?.rank, "free": free, "certificate": cert }), verified: free })
        }
        Command::AbelJacobi { input, base } => {
            let d = load(input)?;
            let g = d.graph();
            let p0 = match base {
                Some(b) => point(g, b)?,
                None => Point::Vertex(VertexId(0)),
            };
            Ok(Outcome::ok(json!({
                "base": g.format_point(&p0),
                "vector": abel_jacobi(&d, &p0)?,
                "cycle_basis": cycle_basis(g),
            })))
        }
        Command::VerifyTheorem2 { g, a, r, seed, budget, resolution, jobs } => {
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let opts = SearchOptions { budget: *budget, resolution: *resolution, seed: *seed, jobs };
            let w = find_free_divisor(*g, *a, *r, &opts)?;
            Ok(Outcome::ok(json!(w)))
        }
        Command::Hyperelliptic { g, r, f, resolution } => {
            let w = hyperelliptic_witness(*g, *r, *f)?;
            let cert = is_free(&w.divisor, *resolution)?;
            Ok(Outcome::ok(json!({
                "graph": w.graph.to_text(),
                "e": w.e.to_string(),
                "f": w.f.to_string(),
                "divisor": w.divisor.to_string(),
                "rank": rank(&w.divisor)?.rank,
                "free": cert.is_free(),
                "certificate": cert,
            })))
        }
    }
}
