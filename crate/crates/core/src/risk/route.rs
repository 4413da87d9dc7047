use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fmt;

use super::RiskField;
use crate::error::{Error, Result};
use crate::grid::{GridModel, PointId};
use crate::numfmt::sig9;

/// Hazards are capped here before the log transform so that a certain-hazard
/// cell has a large finite weight instead of an infinite one.
pub const CERTAIN_HAZARD_CAP: f64 = 1.0 - 1e-12;

/// A simple path through adjacent cells with its aggregate risk.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub cells: Vec<PointId>,
    /// Product of `1 - p` over every cell, endpoints included.
    pub survival: f64,
    pub total_hazard: f64,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.cells.iter().map(ToString::to_string).collect();
        write!(
            f,
            "cells={}; survival={}; hazard={}",
            ids.join(","),
            sig9(self.survival),
            sig9(self.total_hazard)
        )
    }
}

fn cell_probability(field: &RiskField, id: PointId) -> Result<f64> {
    field
        .probability(id)
        .ok_or_else(|| Error::NotFound(format!("cell {id} has no hazard assessment")))
}

/// Node weight `-ln(1 - p)` with `p` capped at [`CERTAIN_HAZARD_CAP`].
pub(crate) fn node_weight(p: f64) -> f64 {
    -(-p.min(CERTAIN_HAZARD_CAP)).ln_1p()
}

/// Aggregate risk of a given path, assuming independent cells.
pub fn route_risk(grid: &GridModel, cells: &[PointId], field: &RiskField) -> Result<Route> {
    if cells.is_empty() {
        return Err(Error::Path("route has no cells".into()));
    }
    let mut seen = HashSet::with_capacity(cells.len());
    for (i, &id) in cells.iter().enumerate() {
        if !grid.contains(id) {
            return Err(Error::NotFound(format!("grid point {id}")));
        }
        if !seen.insert(id) {
            return Err(Error::Path(format!("cell {id} visited twice")));
        }
        if i > 0 && !grid.are_adjacent(cells[i - 1], id) {
            return Err(Error::Path(format!(
                "cells {} and {id} are not adjacent",
                cells[i - 1]
            )));
        }
    }
    let mut survival = 1.0;
    for &id in cells {
        survival *= 1.0 - cell_probability(field, id)?;
    }
    Ok(Route {
        cells: cells.to_vec(),
        survival,
        total_hazard: 1.0 - survival,
    })
}

/// Search label. Ordered by cost, then cell count, then the id sequence.
#[derive(Debug, Clone, PartialEq)]
struct Label {
    cost: f64,
    path: Vec<PointId>,
}

impl Label {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.path.len().cmp(&other.path.len()))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    // Reversed for the max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cmp_key(self)
    }
}

/// Maximum-survival route from `start` to `goal`.
///
/// Dijkstra over node weights `w = -ln(1 - p)`: each edge is charged its
/// destination's weight and the start weight is paid once, so a path's cost
/// is the sum of its node weights accumulated from the start. Ties on cost go
/// to the route with fewer cells, then to the lexicographically smallest id
/// sequence.
pub fn best_route(grid: &GridModel, field: &RiskField, start: PointId, goal: PointId) -> Result<Route> {
    for id in [start, goal] {
        if !grid.contains(id) {
            return Err(Error::NotFound(format!("grid point {id}")));
        }
    }
    let weight = |id: PointId| cell_probability(field, id).map(node_weight);

    let mut settled: BTreeMap<PointId, Label> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Label {
        cost: weight(start)?,
        path: vec![start],
    });
    while let Some(label) = heap.pop() {
        let here = *label.path.last().expect("labels are non-empty");
        if settled.contains_key(&here) {
            continue;
        }
        if here == goal {
            return route_risk(grid, &label.path, field);
        }
        for &next in grid.neighbors(here)? {
            if settled.contains_key(&next) || label.path.contains(&next) {
                continue;
            }
            let mut path = label.path.clone();
            path.push(next);
            heap.push(Label {
                cost: label.cost + weight(next)?,
                path,
            });
        }
        settled.insert(here, label);
    }
    Err(Error::Unreachable { start, goal })
}
