//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use fleetlab::guidepath::{GuidepathGraph, NodeId};
use fleetlab::predictor::SequenceModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every loopless `src -> dst` path with its cost, by depth-first search.
pub fn all_loopless_paths(g: &GuidepathGraph, src: NodeId, dst: NodeId) -> Vec<(f64, Vec<NodeId>)> {
    fn walk(
        g: &GuidepathGraph,
        at: NodeId,
        dst: NodeId,
        path: &mut Vec<NodeId>,
        cost: f64,
        out: &mut Vec<(f64, Vec<NodeId>)>,
    ) {
        if at == dst {
            out.push((cost, path.clone()));
            return;
        }
        for a in g.arcs().iter().filter(|a| a.from == at) {
            if !path.contains(&a.to) {
                path.push(a.to);
                walk(g, a.to, dst, path, cost + a.weight, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, src, dst, &mut vec![src], 0.0, &mut out);
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    out
}

/// Random simple digraph with integer weights in 1..=4 (ties are common).
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> GuidepathGraph {
    let n = rng.random_range(2..=max_nodes);
    let density = rng.random_range(0.2..0.7);
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(density) {
                arcs.push((u, v, rng.random_range(1..=4) as f64));
            }
        }
    }
    GuidepathGraph::new(n, arcs, None).expect("simple digraph")
}

/// Checks `k_shortest_paths` against enumeration. Returns a description of
/// the first mismatch.
pub fn check_k_shortest(
    g: &GuidepathGraph,
    src: NodeId,
    dst: NodeId,
    k: usize,
) -> Result<(), String> {
    let routes =
        fleetlab::guidepath::k_shortest_paths(g, src, dst, k).map_err(|e| e.to_string())?;
    let all = all_loopless_paths(g, src, dst);
    let expect = all.len().min(k);
    if routes.len() != expect {
        return Err(format!(
            "{src}->{dst} k={k}: {} routes, expected {expect}",
            routes.len()
        ));
    }
    for (i, r) in routes.iter().enumerate() {
        if (r.total_cost() - all[i].0).abs() > 1e-9 {
            return Err(format!(
                "{src}->{dst} k={k}: route {i} costs {}, expected {}",
                r.total_cost(),
                all[i].0
            ));
        }
        if !all.iter().any(|(_, p)| p.as_slice() == r.nodes()) {
            return Err(format!(
                "{src}->{dst}: {:?} is not a loopless path",
                r.nodes()
            ));
        }
        if routes[..i].iter().any(|q| q.nodes() == r.nodes()) {
            return Err(format!("{src}->{dst}: duplicate route {:?}", r.nodes()));
        }
    }
    // every path strictly cheaper than the last returned one must be present
    if let Some(last) = routes.last() {
        for (c, p) in all.iter().filter(|(c, _)| *c < last.total_cost() - 1e-9) {
            if !routes.iter().any(|r| r.nodes() == p.as_slice()) {
                return Err(format!("{src}->{dst} k={k}: missing {p:?} of cost {c}"));
            }
        }
    }
    Ok(())
}

/// Earliest start `s >= t0` with `[s, s + w)` clear of every occupied
/// interval, found by trying `t0` and every interval end in turn.
pub fn earliest_gap(occupied: &[(f64, f64)], t0: f64, w: f64) -> f64 {
    let mut candidates: Vec<f64> = std::iter::once(t0)
        .chain(occupied.iter().map(|o| o.1).filter(|e| *e >= t0))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates
        .into_iter()
        .find(|&s| occupied.iter().all(|&(a, b)| s + w <= a || b <= s))
        .expect("after the last interval is always free")
}

/// Disjoint half-open intervals on `[0, 100)`, unsorted.
pub fn random_occupancy(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let count = rng.random_range(0..8);
    let mut cuts: Vec<f64> = (0..2 * count)
        .map(|_| (rng.random_range(0..200) as f64) / 2.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<(f64, f64)> = cuts.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let len = out.len();
    for i in 0..len {
        out.swap(i, rng.random_range(i..len));
    }
    out
}

/// Central-difference derivative of the loss in parameter `index`.
pub fn numeric_gradient(
    model: &SequenceModel,
    window: &[usize],
    target: usize,
    index: usize,
    h: f64,
) -> f64 {
    let mut m = model.clone();
    let x = m.params()[index];
    m.params_mut()[index] = x + h;
    let up = m.loss(window, target).unwrap();
    m.params_mut()[index] = x - h;
    let down = m.loss(window, target).unwrap();
    (up - down) / (2.0 * h)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest relative error over `probes` random parameters of every block.
pub fn gradient_check(
    model: &SequenceModel,
    window: &[usize],
    target: usize,
    probes: usize,
    seed: u64,
) -> Vec<(&'static str, f64)> {
    let mut grad = vec![0.0; model.params().len()];
    model
        .accumulate_gradient(window, target, &mut grad)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model
        .blocks()
        .iter()
        .map(|b| {
            let worst = (0..probes)
                .map(|_| {
                    let i = b.offset + rng.random_range(0..b.len());
                    relative_error(grad[i], numeric_gradient(model, window, target, i, 1e-5))
                })
                .fold(0.0, f64::max);
            (b.name, worst)
        })
        .collect()
}

/// Mean creation-to-completion time of operator tasks `from..`, replayed
/// from an event log CSV (`task_created` and `completed` rows).
pub fn tau_from_event_log(csv: &str, from: usize) -> f64 {
    let mut created = std::collections::HashMap::new();
    let mut order = Vec::new();
    let mut done = std::collections::HashMap::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (time, kind, task) = (f[0].parse::<f64>().unwrap(), f[1], f[3]);
        match kind {
            "task_created" => {
                created.insert(task.to_string(), time);
                order.push(task.to_string());
            }
            "completed" => {
                done.insert(task.to_string(), time);
            }
            _ => {}
        }
    }
    let test = &order[from..];
    test.iter().map(|t| done[t] - created[t]).sum::<f64>() / test.len() as f64
}

pub mod branches;
