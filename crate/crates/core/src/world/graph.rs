use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::spec::WorldSpec;

/// Breadth-first distance from the start place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Depth {
    Reachable(u32),
    Unreachable,
}

impl Depth {
    pub fn get(self) -> Option<u32> {
        match self {
            Depth::Reachable(d) => Some(d),
            Depth::Unreachable => None,
        }
    }

    /// Unreachable places are never below a threshold.
    pub fn is_below(self, threshold: u32) -> bool {
        matches!(self, Depth::Reachable(d) if d < threshold)
    }
}

/// Distances over the exit graph, ignoring guard flags.
pub fn place_depths(world: &WorldSpec) -> BTreeMap<String, Depth> {
    let mut depths: BTreeMap<String, Depth> = world
        .places
        .iter()
        .map(|p| (p.id.clone(), Depth::Unreachable))
        .collect();
    let mut queue = VecDeque::new();
    depths.insert(world.start_place.clone(), Depth::Reachable(0));
    queue.push_back((world.start_place.as_str(), 0u32));
    while let Some((id, d)) = queue.pop_front() {
        let Some(place) = world.place(id) else { continue };
        for exit in place.exits.values() {
            let slot = depths.get_mut(exit.target()).expect("validated exit target");
            if *slot == Depth::Unreachable {
                *slot = Depth::Reachable(d + 1);
                queue.push_back((exit.target(), d + 1));
            }
        }
    }
    depths
}
