//! Two vehicles crossing a shared corridor: the second plan waits for the
//! first one's arc windows instead of colliding.
use fleetlab::dpstw::DpstwScheduler;
use fleetlab::fleet::VehicleId;
use fleetlab::guidepath::{GuidepathGraph, NodeId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 0 -> 2 and 1 -> 2 merge into the corridor 2 -> 3 -> 4
    let g = GuidepathGraph::new(
        5,
        [(0, 2, 2.0), (1, 2, 3.0), (2, 3, 4.0), (3, 4, 4.0)],
        None,
    )?;
    let mut scheduler = DpstwScheduler::new(&g, 0.1);
    for (v, start) in [(0, 0), (1, 1)] {
        let path = [NodeId(start), NodeId(2), NodeId(3), NodeId(4)];
        let plan = scheduler.plan(&g, VehicleId(v), &path, 0.0);
        for w in &plan.windows {
            let arc = g.arc(w.arc);
            println!(
                "v{v}: {} -> {} during [{:.1}, {:.1})",
                arc.from, arc.to, w.start, w.end
            );
        }
        scheduler.commit(&plan);
    }
    assert!(scheduler.arcs.is_consistent() && scheduler.nodes.is_consistent());
    Ok(())
}
