//! Observation mesh: cells at integer grid coordinates with 4-neighbour adjacency.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numfmt::sig9;

pub type PointId = u32;

/// Default cell footprint in square kilometres.
pub const DEFAULT_CELL_AREA_KM2: f64 = 25.0;

/// Header line of the grid text format.
pub const GRID_HEADER: &str = "#grid v1";

/// The four observation points along the route, in id order 1..=4.
pub const FIXTURE_COORDS: [(i64, i64); 4] = [(50, 80), (135, 85), (173, 95), (193, 132)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub id: PointId,
    pub gx: i64,
    pub gy: i64,
    pub cell_area_km2: f64,
}

impl GridPoint {
    pub fn new(id: PointId, gx: i64, gy: i64) -> Self {
        Self {
            id,
            gx,
            gy,
            cell_area_km2: DEFAULT_CELL_AREA_KM2,
        }
    }
}

/// An immutable set of grid points plus their adjacency relation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    points: BTreeMap<PointId, GridPoint>,
    adjacency: BTreeMap<PointId, Vec<PointId>>,
}

impl GridModel {
    /// Build a grid from points, deriving 4-neighbour adjacency.
    pub fn from_points(points: impl IntoIterator<Item = GridPoint>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        let mut by_coord: HashMap<(i64, i64), PointId> = HashMap::new();
        for p in points {
            if !(p.cell_area_km2 > 0.0) || !p.cell_area_km2.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "point {} has non-positive cell area {}",
                    p.id, p.cell_area_km2
                )));
            }
            if let Some(other) = by_coord.insert((p.gx, p.gy), p.id) {
                return Err(Error::InvalidArgument(format!(
                    "points {} and {} share coordinates ({}, {})",
                    other, p.id, p.gx, p.gy
                )));
            }
            if by_id.insert(p.id, p).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate point id {}", p.id)));
            }
        }

        let mut adjacency = BTreeMap::new();
        for p in by_id.values() {
            let mut ns: Vec<PointId> = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .filter_map(|(dx, dy)| by_coord.get(&(p.gx + dx, p.gy + dy)).copied())
                .collect();
            ns.sort_unstable();
            adjacency.insert(p.id, ns);
        }
        Ok(Self {
            points: by_id,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, id: PointId) -> Option<&GridPoint> {
        self.points.get(&id)
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.points.contains_key(&id)
    }

    /// Points in ascending id order.
    pub fn points(&self) -> impl Iterator<Item = &GridPoint> {
        self.points.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> + '_ {
        self.points.keys().copied()
    }

    /// Ids of the 4-adjacent points, ascending.
    pub fn neighbors(&self, id: PointId) -> Result<&[PointId]> {
        self.adjacency
            .get(&id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::NotFound(format!("grid point {id}")))
    }

    pub fn are_adjacent(&self, a: PointId, b: PointId) -> bool {
        self.adjacency
            .get(&a)
            .is_some_and(|ns| ns.binary_search(&b).is_ok())
    }

    /// Unordered adjacent pairs `(a, b)` with `a < b`.
    pub fn adjacent_pairs(&self) -> BTreeSet<(PointId, PointId)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    /// Serialize to the `#grid v1` line format.
    pub fn to_text(&self) -> String {
        let mut out = String::from(GRID_HEADER);
        out.push('\n');
        for p in self.points() {
            let _ = writeln!(out, "{},{},{},{}", p.id, p.gx, p.gy, sig9(p.cell_area_km2));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == GRID_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected header `{GRID_HEADER}`"))),
        }
        let mut points = Vec::new();
        for (i, raw) in lines {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::parse(lineno, "expected `id,gx,gy,area_km2`"));
            }
            let bad = |what: &str| Error::parse(lineno, format!("invalid {what}"));
            let id = fields[0].parse().map_err(|_| bad("id"))?;
            let gx = fields[1].parse().map_err(|_| bad("gx"))?;
            let gy = fields[2].parse().map_err(|_| bad("gy"))?;
            let area: f64 = fields[3].parse().map_err(|_| bad("area"))?;
            points.push(GridPoint {
                id,
                gx,
                gy,
                cell_area_km2: area,
            });
        }
        Self::from_points(points)
    }
}

/// The four-point observation grid along the route.
pub fn paper_fixture_grid() -> GridModel {
    let points = FIXTURE_COORDS
        .iter()
        .zip(1..)
        .map(|(&(gx, gy), id)| GridPoint::new(id, gx, gy));
    GridModel::from_points(points).expect("fixture grid is well-formed")
}

/// A `width` x `height` rectangular mesh with row-major ids starting at 1.
pub fn make_mesh(width: u32, height: u32) -> Result<GridModel> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "mesh dimensions must be positive, got {width}x{height}"
        )));
    }
    let points = (0..height).flat_map(|gy| {
        (0..width).map(move |gx| GridPoint::new(gy * width + gx + 1, gx as i64, gy as i64))
    });
    GridModel::from_points(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_points() {
        let g = paper_fixture_grid();
        assert_eq!(g.len(), 4);
        let p1 = g.get(1).unwrap();
        assert_eq!((p1.gx, p1.gy), (50, 80));
        let p4 = g.get(4).unwrap();
        assert_eq!((p4.gx, p4.gy), (193, 132));
        assert!(g.points().all(|p| p.cell_area_km2 == 25.0));
        assert!(g.adjacent_pairs().is_empty());
        assert_eq!(g.neighbors(1).unwrap(), &[] as &[PointId]);
    }

    #[test]
    fn mesh_edge_counts() {
        assert_eq!(make_mesh(1, 1).unwrap().adjacent_pairs().len(), 0);
        assert_eq!(make_mesh(2, 2).unwrap().adjacent_pairs().len(), 4);
        let m = make_mesh(3, 2).unwrap();
        assert_eq!(m.len(), 6);
        assert_eq!(m.adjacent_pairs().len(), 7);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(make_mesh(0, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_mesh(3, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn neighbors_examples() {
        assert_eq!(make_mesh(2, 2).unwrap().neighbors(1).unwrap(), &[2, 3]);
        assert_eq!(make_mesh(3, 3).unwrap().neighbors(5).unwrap(), &[2, 4, 6, 8]);
        assert!(matches!(
            make_mesh(2, 2).unwrap().neighbors(9),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn duplicate_coordinates_rejected() {
        let r = GridModel::from_points([GridPoint::new(1, 0, 0), GridPoint::new(2, 0, 0)]);
        assert!(r.is_err());
        let r = GridModel::from_points([GridPoint::new(1, 0, 0), GridPoint::new(1, 0, 1)]);
        assert!(r.is_err());
    }

    #[test]
    fn text_format() {
        let g = make_mesh(2, 1).unwrap();
        assert_eq!(g.to_text(), "#grid v1\n1,0,0,25\n2,1,0,25\n");
        assert_eq!(GridModel::from_text(&g.to_text()).unwrap(), g);
        assert!(GridModel::from_text("1,0,0,25\n").is_err());
        assert!(matches!(
            GridModel::from_text("#grid v1\n1,0,0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
