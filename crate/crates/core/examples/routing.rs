//! k shortest loopless routes on a 4x4 grid and the all-pairs distance table.
use fleetlab::guidepath::{k_shortest_paths, DistanceTable, NodeId};
use fleetlab::sim::{make_synthetic_guidepath, SyntheticKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = make_synthetic_guidepath(SyntheticKind::Grid {
        width: 4,
        height: 4,
    })?;
    let (from, to) = (NodeId(0), NodeId(15));
    for (i, route) in k_shortest_paths(&g, from, to, 4)?.iter().enumerate() {
        let nodes: Vec<String> = route.nodes().iter().map(|n| n.to_string()).collect();
        println!(
            "route {i}: cost {:>4} via {}",
            route.total_cost(),
            nodes.join(" ")
        );
    }
    let table = DistanceTable::build(&g);
    println!("distance {from} -> {to}: {:?}", table.distance(from, to));
    Ok(())
}
