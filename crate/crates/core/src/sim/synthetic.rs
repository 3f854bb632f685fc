use serde::{Deserialize, Serialize};

use super::SimError;
use crate::guidepath::GuidepathGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `width * height` nodes, 4-neighbour arcs in both directions
    Grid { width: usize, height: usize },
    /// `nodes` nodes on one directed cycle `i -> i + 1`
    Ring { nodes: usize },
}

/// Unit-weight grid or ring; node `y * width + x` sits at column `x`, row `y`.
pub fn make_synthetic_guidepath(kind: SyntheticKind) -> Result<GuidepathGraph, SimError> {
    let graph = match kind {
        SyntheticKind::Grid { width, height } => {
            if width < 2 || height < 2 {
                return Err(SimError::Config(format!(
                    "grid needs width, height >= 2, got {width}x{height}"
                )));
            }
            let mut arcs = Vec::new();
            for y in 0..height {
                for x in 0..width {
                    let i = y * width + x;
                    if x + 1 < width {
                        arcs.extend([(i, i + 1, 1.0), (i + 1, i, 1.0)]);
                    }
                    if y + 1 < height {
                        arcs.extend([(i, i + width, 1.0), (i + width, i, 1.0)]);
                    }
                }
            }
            GuidepathGraph::new(width * height, arcs, None)
        }
        SyntheticKind::Ring { nodes } => {
            if nodes < 3 {
                return Err(SimError::Config(format!(
                    "ring needs at least 3 nodes, got {nodes}"
                )));
            }
            GuidepathGraph::new(nodes, (0..nodes).map(|i| (i, (i + 1) % nodes, 1.0)), None)
        }
    };
    Ok(graph.expect("synthetic graphs are valid"))
}
