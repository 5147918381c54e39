//! Acceptance suite. Each criterion prints one PASS or FAIL line; the
//! process exits non-zero if any criterion fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use freediv::rank::lattice_unit;
use freediv::rational::{int, ratio};
use freediv::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const CASES: [(usize, usize, i64); 6] = [(4, 1, 1), (5, 1, 1), (5, 2, 1), (6, 2, 1), (7, 1, 2), (8, 2, 2)];

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Recomputes `rk(D - P)` from scratch at every lattice point.
fn independent_free_check(d: &Divisor, r: i64, resolution: u32) -> Result<Vec<Point>, String> {
    use rayon::prelude::*;
    let unit = lattice_unit(d, resolution).map_err(err)?;
    let points = d.graph().lattice_points(&unit);
    let flags: Vec<Result<bool, String>> = points
        .par_iter()
        .map(|p| {
            let minus = d - &Divisor::point(d.graph(), p.clone()).map_err(err)?;
            Ok(rank(&minus).map_err(err)?.rank >= r)
        })
        .collect();
    let mut bad = Vec::new();
    for (p, f) in points.iter().zip(flags) {
        if f? {
            bad.push(p.clone());
        }
    }
    Ok(bad)
}

fn theorem2_reproduction() -> Outcome {
    let mut notes = Vec::new();
    for (g, a, r) in CASES {
        let start = Instant::now();
        let opts = SearchOptions { budget: 50, resolution: 4, seed: 2024, jobs: jobs() };
        let w = find_free_divisor(g, a, r, &opts).map_err(|e| format!("({g},{a},{r}): {e}"))?;
        let d = &w.divisor;
        let case = format!("({g},{a},{r})");
        ensure(d.degree() == 2 * r + a as i64, || format!("{case}: degree {}", d.degree()))?;
        ensure(d.is_effective(), || format!("{case}: not effective"))?;
        let rk = rank(d).map_err(err)?.rank;
        ensure(rk == r, || format!("{case}: rank {rk}"))?;
        ensure(is_very_special(d).map_err(err)?, || format!("{case}: not very special"))?;
        let c = clifford_index(d).map_err(err)?;
        ensure(c == a as i64, || format!("{case}: Clifford index {c}"))?;
        let cert = is_free(d, 4).map_err(err)?;
        ensure(cert.is_free(), || format!("{case}: base points {:?}", cert.violations))?;
        let bad = independent_free_check(d, r, 4)?;
        ensure(bad.is_empty(), || format!("{case}: recheck found base points {bad:?}"))?;
        let elapsed = start.elapsed();
        ensure(elapsed <= Duration::from_secs(300), || format!("{case}: took {elapsed:?}"))?;
        notes.push(format!("{case} d={} attempts={} points={} {:.1}s", d.degree(), w.attempts, cert.checked_points, elapsed.as_secs_f64()));
    }
    Ok(notes.join("; "))
}

fn lemma1_suite() -> Outcome {
    let mut total = 0;
    for (g, a, r) in CASES {
        let spec = ChainSpec::standard(a);
        for i in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
            let placement = construction::sample_placement(g, &spec, &mut rng).map_err(err)?;
            let t = build_theorem_graph(g, &spec, placement).map_err(err)?;
            let d = sample_divisor(&t, r, rng.gen()).map_err(err)?;
            ensure(d.degree() == a as i64 + 2 * r, || "wrong degree".into())?;
            ensure(rank_at_least(&d, r).map_err(err)?, || format!("({g},{a},{r}): rank of {d} below {r}"))?;
            total += 1;
        }
    }
    Ok(format!("{total} divisors, all of rank >= r"))
}

fn riemann_roch_identity() -> Outcome {
    let graphs = vec![
        ("loop", unit_loop()),
        ("theta", theta()),
        ("dumbbell", dumbbell()),
        ("chain3", chain3()),
        ("theorem(4,1)", theorem_graph_4_1().graph().clone()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = 0;
    let mut ranks = std::collections::BTreeMap::new();
    for (name, g) in &graphs {
        let genus = g.genus() as i64;
        for i in 0..45 {
            let degree = -2 + (i % (2 * genus + 3));
            let d = random_divisor(g, degree, rng.gen_range(1..=3), 2, 8, &mut rng);
            *ranks.entry(rank(&d).map_err(err)?.rank).or_insert(0) += 1;
            ensure(riemann_roch_check(&d).map_err(err)?, || format!("{name}: fails for {d}"))?;
            total += 1;
        }
    }
    Ok(format!("{total} divisors on {} graphs, rank histogram {ranks:?}", graphs.len()))
}

fn reduced_divisor_laws() -> Outcome {
    let graphs = family();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut maximality = 0;
    for i in 0..200 {
        let (name, g) = &graphs[i % graphs.len()];
        let d = random_divisor(g, rng.gen_range(-1..=4), 3, 2, 8, &mut rng);
        let p = random_point(g, 8, &mut rng);
        let script = random_script(g, 8, 3, &mut rng);
        let moved = &d + &compose_script(&script).map_err(err)?.div();
        let r1 = reduce(&d, &p).map_err(err)?;
        let r2 = reduce(&moved, &p).map_err(err)?;
        ensure(r1.divisor == r2.divisor, || format!("{name}: uniqueness fails for {d} at {p:?}"))?;
        ensure(&d + &r1.function().map_err(err)?.div() == r1.divisor, || format!("{name}: script mismatch"))?;
        let again = reduce(&r1.divisor, &p).map_err(err)?;
        ensure(again.divisor == r1.divisor && again.script.is_empty(), || format!("{name}: not idempotent"))?;
        ensure(burn(&r1.divisor, &p).map_err(err)?.burns_everything(), || format!("{name}: burn disagrees"))?;

        // Effective representatives: reduced divisors at other points that
        // are effective, moved further by legal random firings.
        if r1.divisor.get(&p) >= 0 {
            let best = r1.divisor.get(&p);
            let mut found = 0;
            let mut tries = 0;
            while found < 50 && tries < 400 {
                tries += 1;
                let q = random_point(g, 8, &mut rng);
                let mut rep = reduce(&d, &q).map_err(err)?.divisor;
                if !rep.is_effective() {
                    continue;
                }
                let seg = ratio(1, 16);
                let pts = lattice(g, 16);
                let set: Vec<Point> = pts.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
                let x = ClosedSet::new(seg.clone(), set);
                if let Ok((next, _)) = fire(&rep, &x, &seg) {
                    if next.is_effective() {
                        rep = next;
                    }
                }
                ensure(rep.get(&p) <= best, || format!("{name}: {rep} beats the reduced divisor at {p:?}"))?;
                found += 1;
            }
            maximality += found;
        }
    }
    Ok(format!("200 triples, {maximality} effective representatives compared"))
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agreed = 0;
    let mut equivalent = 0;
    for (name, g) in family() {
        let p0 = Point::Vertex(VertexId(0));
        for i in 0..200 {
            let deg = rng.gen_range(-1..=3);
            let d1 = random_divisor(&g, deg, 2, 2, 8, &mut rng);
            let d2 = if i % 2 == 0 {
                let s = random_script(&g, 8, 2, &mut rng);
                &d1 + &compose_script(&s).map_err(err)?.div()
            } else {
                random_divisor(&g, deg, 2, 2, 8, &mut rng)
            };
            let by_reduction = linearly_equivalent(&d1, &d2).map_err(err)?.equivalent;
            let by_jacobian = aj_equivalent(&d1, &d2, &p0).map_err(err)?;
            ensure(by_reduction == by_jacobian, || format!("{name}: {d1} vs {d2} disagree"))?;
            agreed += 1;
            equivalent += by_reduction as usize;
        }
    }
    Ok(format!("{agreed} pairs agree ({equivalent} equivalent)"))
}

fn lemma4_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bases = family();
    let mut rank_checks = 0;
    for i in 0..100 {
        let (name, g0) = &bases[i % bases.len()];
        let at = random_point(g0, 8, &mut rng);
        let len = [int(1), ratio(1, 2), int(2)].choose(&mut rng).unwrap().clone();
        let att = attach_loop(g0, &at, len.clone()).map_err(err)?;
        let g = att.graph();
        let emb = &att.refinement;
        let p = att.loop_point(&len * ratio(rng.gen_range(1..4), 4)).map_err(err)?;
        let pd = Divisor::point(g, p.clone()).map_err(err)?;
        let d = random_effective(g0, rng.gen_range(1..=3), 8, &mut rng);
        let q = random_point(g0, 8, &mut rng);

        let on_g = reduce(&(&emb.lift_divisor(&d) + &pd), &emb.lift(&q)).map_err(err)?.divisor;
        let on_g0 = reduce(&d, &q).map_err(err)?.divisor;
        ensure(on_g == &emb.lift_divisor(&on_g0) + &pd, || format!("{name}: transfer fails for {d} at {q:?}"))?;

        let other = random_effective(g0, d.degree() as usize - 1, 8, &mut rng);
        let target = &emb.lift_divisor(&other) + &pd;
        ensure(!linearly_equivalent(&emb.lift_divisor(&d), &target).map_err(err)?.equivalent, || {
            format!("{name}: {d} equivalent to a divisor through the new loop")
        })?;

        if g.genus() <= 4 {
            let r = rank(&(&emb.lift_divisor(&d) + &pd)).map_err(err)?.rank;
            ensure(rank_at_least(&d, r).map_err(err)?, || format!("{name}: rank drops for {d}"))?;
            rank_checks += 1;
        }
    }
    Ok(format!("100 attachments, {rank_checks} rank comparisons"))
}

fn clifford_sweep() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut graphs: Vec<(String, Arc<MetricGraph>)> = vec![
        ("chain3".into(), chain3()),
        ("k4".into(), k4()),
        ("theorem(4,1)".into(), theorem_graph_4_1().graph().clone()),
    ];
    for g in 3..=5 {
        graphs.push((format!("hyperelliptic{g}"), hyperelliptic_chain(g)));
    }
    let mut seen = 0;
    let mut very = 0;
    for i in 0..510 {
        let (name, g) = &graphs[i % graphs.len()];
        let genus = g.genus() as i64;
        let deg = rng.gen_range(2..=(2 * genus - 4).max(2)) as usize;
        // Mostly vertex-supported divisors, where special divisors are common.
        let denom = if rng.gen_bool(0.7) { 1 } else { 4 };
        let d = random_effective(g, deg, denom, &mut rng);
        seen += 1;
        if is_very_special(&d).map_err(err)? {
            very += 1;
            let r = rank(&d).map_err(err)?.rank;
            ensure(d.degree() >= 2 * r, || format!("{name}: {d} has rank {r}"))?;
        }
    }
    ensure(very > 0, || "no very special divisor encountered".into())?;
    let mut witnesses = 0;
    for g in 3..=5usize {
        for r in 1..=(g as i64 - 2) {
            for f in 0..=(2 * g as i64 - 4 - 2 * r) {
                let w = hyperelliptic_witness(g, r, f as usize).map_err(err)?;
                let free = is_free(&w.divisor, 4).map_err(err)?.is_free();
                ensure(free == (f == 0), || format!("g={g} r={r} f={f}: free = {free}"))?;
                witnesses += 1;
            }
        }
    }
    Ok(format!("{seen} divisors, {very} very special; {witnesses} hyperelliptic witnesses"))
}

fn subdivision_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let graphs = [unit_loop(), theta(), dumbbell()];
    let mut histogram = std::collections::BTreeMap::new();
    for i in 0..100 {
        let g = &graphs[i % graphs.len()];
        let d = random_divisor(g, rng.gen_range(-1..=3), 2, 1, 2, &mut rng);
        let ranks: Vec<i64> = (1..=3)
            .map(|res| rank_with(&d, CandidateSet::Lattice { resolution: res }).map(|r| r.rank))
            .collect::<Result<_>>()
            .map_err(err)?;
        let default = rank(&d).map_err(err)?.rank;
        ensure(ranks.iter().all(|&r| r == default), || format!("{d}: ranks {ranks:?} vs {default}"))?;
        *histogram.entry(default).or_insert(0) += 1;
    }
    Ok(format!("100 instances agree at resolutions 1, 2, 3, rank histogram {histogram:?}"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("theorem 2 reproduction", theorem2_reproduction),
        ("lemma 1 suite", lemma1_suite),
        ("riemann-roch identity", riemann_roch_identity),
        ("reduced divisor laws", reduced_divisor_laws),
        ("oracle agreement", oracle_agreement),
        ("loop attachment suite", lemma4_suite),
        ("clifford inequality", clifford_sweep),
        ("subdivision invariance", subdivision_invariance),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
