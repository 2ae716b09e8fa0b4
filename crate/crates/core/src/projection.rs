//! Projection of fracture cells onto coarse faces.
//!
//! The repaired path is the staircase of faces separating cells on either
//! side of the fracture line (centers exactly on the line count as lying
//! above, or left for vertical fractures). Every column crossed by a fracture
//! has one horizontal step face and every row one vertical step face; all
//! fracture cells of that column or row project onto it, so step faces are
//! fully covered between the tips.
//!
//! The neighbour-only path projects each fracture cell onto the nearer
//! horizontal and vertical face of its own host cell and drops faces shared
//! with another cut cell, which can leave holes.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{CoarseGrid, CutCell, Face};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathRule {
    /// Faces whose opposite cell is itself cut are discarded.
    NeighborOnly,
    /// Staircase between the two sides of the fracture line; faces shared by
    /// two cut cells are counted as repairs.
    Repaired,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub face: Face,
    /// Length of the projected sub-segment on the face.
    pub area: f64,
    /// Cell across the face, `None` on the domain boundary.
    pub target: Option<usize>,
    /// Distance from the target centroid to the fracture cell centroid.
    pub distance: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ProjectionPath {
    /// Projections per fracture cell, in the order of the cut-cell list.
    pub cells: Vec<Vec<Projection>>,
    pub repair_faces: usize,
}

impl ProjectionPath {
    /// Index of the first fracture cell after which node connectivity breaks.
    pub fn first_break(&self, cuts: &[CutCell]) -> Option<usize> {
        for (k, faces) in self.cells.iter().enumerate() {
            if faces.is_empty() {
                return Some(k);
            }
            if k + 1 < self.cells.len() && cuts[k].fracture == cuts[k + 1].fracture {
                let next = &self.cells[k + 1];
                let nodes: HashSet<(usize, usize)> =
                    faces.iter().flat_map(|p| p.face.nodes()).collect();
                if !next
                    .iter()
                    .flat_map(|p| p.face.nodes())
                    .any(|n| nodes.contains(&n))
                {
                    return Some(k);
                }
            }
        }
        None
    }

    pub fn is_continuous(&self, cuts: &[CutCell]) -> bool {
        self.first_break(cuts).is_none()
    }
}

/// Selects the projected faces without checking continuity.
pub fn select_projections(grid: &CoarseGrid, cuts: &[CutCell], rule: PathRule) -> ProjectionPath {
    match rule {
        PathRule::NeighborOnly => neighbor_only(grid, cuts),
        PathRule::Repaired => staircase(grid, cuts),
    }
}

fn neighbor_only(grid: &CoarseGrid, cuts: &[CutCell]) -> ProjectionPath {
    let cut_set: HashSet<usize> = cuts.iter().map(|c| c.cell).collect();
    let mut path = ProjectionPath::default();
    for cut in cuts {
        let (i, j) = grid.ij(cut.cell);
        let c = grid.center(cut.cell);
        let m = cut.midpoint();
        let wx = (cut.b.x - cut.a.x).abs();
        let wy = (cut.b.y - cut.a.y).abs();
        let ascending = (cut.b.x - cut.a.x) * (cut.b.y - cut.a.y) > 0.0;
        let tol_x = 1e-9 * grid.dx;
        let tol_y = 1e-9 * grid.dy;
        let mut faces = Vec::with_capacity(2);
        if wx > 1e-12 * grid.dx {
            let jf = if m.y > c.y + tol_y { j + 1 } else { j };
            faces.push((Face::Horizontal { i, j: jf }, wx.min(grid.dx)));
        }
        if wy > 1e-12 * grid.dy {
            let right = if ascending {
                m.x >= c.x - tol_x
            } else {
                m.x > c.x + tol_x
            };
            let ifc = if right { i + 1 } else { i };
            faces.push((Face::Vertical { i: ifc, j }, wy.min(grid.dy)));
        }
        let mut out = Vec::with_capacity(2);
        for (face, area) in faces {
            let (lo, hi) = grid.face_cells(face);
            let target = if lo == Some(cut.cell) { hi } else { lo };
            if target.is_some_and(|t| cut_set.contains(&t)) {
                continue;
            }
            let distance = target.map_or(0.0, |t| grid.center(t).dist(m));
            out.push(Projection {
                face,
                area,
                target,
                distance,
            });
        }
        path.cells.push(out);
    }
    path
}

/// Side of the fracture line through `a` with direction `t` (t.x > 0, or
/// t.x = 0 and t.y > 0); `true` above or on the line.
fn above(t: Point, a: Point, c: Point, tol: f64) -> bool {
    t.x * (c.y - a.y) - t.y * (c.x - a.x) >= -tol
}

fn staircase(grid: &CoarseGrid, cuts: &[CutCell]) -> ProjectionPath {
    let cut_set: HashSet<usize> = cuts.iter().map(|c| c.cell).collect();
    let tol = 1e-9 * grid.dx.max(grid.dy);
    // line of every fracture, from its longest piece
    let mut lines: HashMap<usize, (Point, Point)> = HashMap::new();
    for cut in cuts {
        let len = cut.a.dist(cut.b);
        let e = lines.entry(cut.fracture).or_insert((cut.a, cut.b));
        if len > e.0.dist(e.1) {
            *e = (cut.a, cut.b);
        }
    }
    let dir = |f: usize| {
        let (a, b) = lines[&f];
        let mut t = (b - a) * (1.0 / a.dist(b));
        if t.x < 0.0 || (t.x == 0.0 && t.y < 0.0) {
            t = -t;
        }
        (t, a)
    };
    let side = |f: usize, cell: usize| {
        let (t, a) = dir(f);
        above(t, a, grid.center(cell), tol)
    };
    let mut column_face: HashMap<(usize, usize), Option<Face>> = HashMap::new();
    let mut row_face: HashMap<(usize, usize), Option<Face>> = HashMap::new();
    let mut path = ProjectionPath::default();
    for cut in cuts {
        let f = cut.fracture;
        let (i, j) = grid.ij(cut.cell);
        let m = cut.midpoint();
        let wx = (cut.b.x - cut.a.x).abs();
        let wy = (cut.b.y - cut.a.y).abs();
        let mut faces = Vec::with_capacity(2);
        if wx > 1e-12 * grid.dx {
            let face = *column_face.entry((f, i)).or_insert_with(|| {
                (1..grid.ny)
                    .find(|&jj| side(f, grid.index(i, jj - 1)) != side(f, grid.index(i, jj)))
                    .map(|jj| Face::Horizontal { i, j: jj })
            });
            faces.extend(face.map(|fc| (fc, wx.min(grid.dx))));
        }
        if wy > 1e-12 * grid.dy {
            let face = *row_face.entry((f, j)).or_insert_with(|| {
                (1..grid.nx)
                    .find(|&ii| side(f, grid.index(ii - 1, j)) != side(f, grid.index(ii, j)))
                    .map(|ii| Face::Vertical { i: ii, j })
            });
            faces.extend(face.map(|fc| (fc, wy.min(grid.dy))));
        }
        let host = side(f, cut.cell);
        let mut out = Vec::with_capacity(2);
        for (face, area) in faces {
            let (lo, hi) = grid.face_cells(face);
            let (lo, hi) = (lo.unwrap(), hi.unwrap());
            let target = if side(f, lo) != host { lo } else { hi };
            if cut_set.contains(&target) {
                path.repair_faces += 1;
            }
            out.push(Projection {
                face,
                area,
                target: Some(target),
                distance: grid.center(target).dist(m),
            });
        }
        path.cells.push(out);
    }
    path
}

/// Builds the projection path and verifies node connectivity.
pub fn build_projection_path(
    grid: &CoarseGrid,
    cuts: &[CutCell],
    rule: PathRule,
) -> Result<ProjectionPath> {
    let path = select_projections(grid, cuts, rule);
    match path.first_break(cuts) {
        Some(k) => Err(Error::PathDiscontinuity(k)),
        None => Ok(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::grid::{intersect_fracture, FractureSegment};

    fn setup(n: usize, a: Point, b: Point) -> (CoarseGrid, Vec<CutCell>) {
        let g = CoarseGrid::uniform(n, n, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let f = FractureSegment::new(a, b, 1e-4, 1.0, 1.0).unwrap();
        let cuts = intersect_fracture(&g, &f, 0).unwrap();
        (g, cuts)
    }

    #[test]
    fn horizontal_projects_below() {
        let (g, cuts) = setup(5, Point::new(0.25, 0.5), Point::new(0.75, 0.5));
        let path = build_projection_path(&g, &cuts, PathRule::Repaired).unwrap();
        for (k, faces) in path.cells.iter().enumerate() {
            assert_eq!(faces.len(), 1);
            assert_eq!(faces[0].face, Face::Horizontal { i: k + 1, j: 2 });
            assert_eq!(faces[0].target, Some(g.index(k + 1, 1)));
        }
        assert_eq!(path.repair_faces, 0);
    }

    #[test]
    fn diagonal_through_nodes_needs_no_repair() {
        let (g, cuts) = setup(9, Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let path = build_projection_path(&g, &cuts, PathRule::NeighborOnly).unwrap();
        assert_eq!(path.repair_faces, 0);
        assert!(path.cells.iter().all(|f| f.len() == 2));
    }

    #[test]
    fn staircase_faces_are_covered() {
        let (g, cuts) = setup(19, Point::new(0.15, 0.63), Point::new(0.45, 0.09));
        let path = build_projection_path(&g, &cuts, PathRule::Repaired).unwrap();
        let mut cover: HashMap<Face, f64> = HashMap::new();
        for p in path.cells.iter().flatten() {
            *cover.entry(p.face).or_insert(0.0) += p.area;
        }
        // only the step faces at the two tips are partly covered
        let partial = cover
            .iter()
            .filter(|(f, a)| (**a - g.face_length(**f)).abs() > 1e-12)
            .count();
        assert!(partial <= 4, "{partial} partial faces");
        assert!(cover.values().all(|a| *a <= g.dx * (1.0 + 1e-12)));
    }
}
