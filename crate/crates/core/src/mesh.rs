//! Constrained Delaunay triangulations honoring fractures and interfaces.

use std::collections::HashMap;

use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, segment_intersection, Point, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FractureEdge {
    pub v: [usize; 2],
    pub fracture: usize,
}

#[derive(Clone, Debug, Default)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub fracture_edges: Vec<FractureEdge>,
}

impl TriMesh {
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Applies `f` to every vertex; orientation is restored if `f` reflects.
    pub fn map_vertices(&self, f: impl Fn(Point) -> Point) -> TriMesh {
        let vertices: Vec<Point> = self.vertices.iter().map(|p| f(*p)).collect();
        let triangles = self
            .triangles
            .iter()
            .map(|&[a, b, c]| {
                if (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]) < 0.0 {
                    [a, c, b]
                } else {
                    [a, b, c]
                }
            })
            .collect();
        TriMesh {
            vertices,
            triangles,
            fracture_edges: self.fracture_edges.clone(),
        }
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut m = 180.0f64;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let ang = (u.dot(v) / (u.norm() * v.norm()))
                    .clamp(-1.0, 1.0)
                    .acos()
                    .to_degrees();
                m = m.min(ang);
            }
        }
        m
    }
}

/// Input of the mesh generator.
#[derive(Clone, Debug)]
pub struct MeshSpec {
    pub domain: Rect,
    /// Fracture segments, already clipped to the domain.
    pub fractures: Vec<(Point, Point)>,
    /// Additional constrained segments (coarse faces, subinterfaces).
    pub interfaces: Vec<(Point, Point)>,
    /// Target edge length.
    pub h: f64,
    /// Extra vertices, e.g. for grading.
    pub points: Vec<Point>,
}

impl MeshSpec {
    pub fn new(domain: Rect, h: f64) -> Self {
        Self {
            domain,
            fractures: Vec::new(),
            interfaces: Vec::new(),
            h,
            points: Vec::new(),
        }
    }
}

struct VertexPool {
    points: Vec<Point>,
    lookup: HashMap<(i64, i64), usize>,
    quantum: f64,
}

impl VertexPool {
    fn new(quantum: f64) -> Self {
        Self {
            points: Vec::new(),
            lookup: HashMap::new(),
            quantum,
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        (
            (p.x / self.quantum).round() as i64,
            (p.y / self.quantum).round() as i64,
        )
    }

    fn insert(&mut self, p: Point) -> usize {
        let k = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&i) = self.lookup.get(&(k.0 + dx, k.1 + dy)) {
                    if self.points[i].dist(p) <= 1.5 * self.quantum {
                        return i;
                    }
                }
            }
        }
        self.points.push(p);
        self.lookup.insert(k, self.points.len() - 1);
        self.points.len() - 1
    }
}

/// Snaps points within `tol` of the rectangle boundary onto it.
fn snap(p: Point, r: &Rect, tol: f64) -> Point {
    let s = |v: f64, lo: f64, hi: f64| {
        if (v - lo).abs() <= tol {
            lo
        } else if (v - hi).abs() <= tol {
            hi
        } else {
            v
        }
    };
    Point::new(s(p.x, r.x0, r.x1), s(p.y, r.y0, r.y1))
}

pub fn generate(spec: &MeshSpec) -> Result<TriMesh> {
    let d = &spec.domain;
    let scale = d.width().max(d.height());
    let tol = 1e-10 * scale;
    if !(spec.h > 0.0) {
        return Err(Error::Mesh("target edge length must be positive".into()));
    }
    let mut segments: Vec<(Point, Point, Option<usize>)> = Vec::new();
    let c = d.corners();
    for k in 0..4 {
        segments.push((c[k], c[(k + 1) % 4], None));
    }
    for (a, b) in &spec.interfaces {
        segments.push((snap(*a, d, tol), snap(*b, d, tol), None));
    }
    for (id, (a, b)) in spec.fractures.iter().enumerate() {
        segments.push((snap(*a, d, tol), snap(*b, d, tol), Some(id)));
    }
    // split parameters of every segment at all mutual crossings and touching endpoints
    let mut splits: Vec<Vec<Point>> = segments.iter().map(|s| vec![s.0, s.1]).collect();
    for i in 0..segments.len() {
        for j in (i + 1)..segments.len() {
            let (a, b, _) = segments[i];
            let (p, q, _) = segments[j];
            if let Some((t, _)) = segment_intersection(a, b, p, q) {
                let x = a.lerp(b, t.clamp(0.0, 1.0));
                splits[i].push(x);
                splits[j].push(x);
            }
            for e in [p, q] {
                if point_segment_distance(e, a, b) <= tol {
                    splits[i].push(e);
                }
            }
            for e in [a, b] {
                if point_segment_distance(e, p, q) <= tol {
                    splits[j].push(e);
                }
            }
        }
    }
    let mut pool = VertexPool::new(tol);
    let mut pieces: Vec<(usize, usize)> = Vec::new();
    for ((a, b, _), pts) in segments.iter().zip(&splits) {
        let dir = *b - *a;
        let mut ids: Vec<(f64, usize)> = pts
            .iter()
            .map(|p| ((*p - *a).dot(dir), pool.insert(*p)))
            .collect();
        ids.sort_by(|x, y| x.0.total_cmp(&y.0));
        ids.dedup_by_key(|x| x.1);
        for w in ids.windows(2) {
            pieces.push((w[0].1, w[1].1));
        }
    }
    for p in &spec.points {
        if d.contains(*p, -tol) {
            pool.insert(*p);
        }
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(pool.points.len());
    for p in &pool.points {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Mesh(format!("{e:?}")))?;
        handles.push(h);
    }
    for (a, b) in pieces {
        if a == b {
            continue;
        }
        if !cdt.can_add_constraint(handles[a], handles[b])
            && !cdt.exists_constraint(handles[a], handles[b])
        {
            return Err(Error::Mesh("constraint segments intersect".into()));
        }
        cdt.add_constraint(handles[a], handles[b]);
    }
    let max_area = 3f64.sqrt() / 4.0 * spec.h * spec.h;
    let budget = (20.0 * d.area() / max_area) as usize + 100_000;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_allowed_area(max_area)
        .with_min_required_area(1e-9 * max_area)
        .with_max_additional_vertices(budget);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        log::warn!("mesh refinement hit its vertex budget");
    }

    let vertices: Vec<Point> = cdt
        .vertices()
        .map(|v| Point::new(v.position().x, v.position().y))
        .collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| v.fix().index());
        let area = (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]);
        if area > 0.0 {
            triangles.push([a, b, c]);
        } else if area < 0.0 {
            triangles.push([a, c, b]);
        }
    }
    let mut fracture_edges = Vec::new();
    for e in cdt.undirected_edges() {
        if !e.is_constraint_edge() {
            continue;
        }
        let [a, b] = e.vertices().map(|v| v.fix().index());
        let (pa, pb) = (vertices[a], vertices[b]);
        for (id, (fa, fb)) in spec.fractures.iter().enumerate() {
            let (fa, fb) = (snap(*fa, d, tol), snap(*fb, d, tol));
            if point_segment_distance(pa, fa, fb) <= 1e-9 * scale
                && point_segment_distance(pb, fa, fb) <= 1e-9 * scale
            {
                let v = if a < b { [a, b] } else { [b, a] };
                fracture_edges.push(FractureEdge { v, fracture: id });
                break;
            }
        }
    }
    fracture_edges.sort_by_key(|e| (e.fracture, e.v));
    Ok(TriMesh {
        vertices,
        triangles,
        fracture_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_with_fracture() {
        let mut s = MeshSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), 0.1);
        s.fractures
            .push((Point::new(0.2, 0.3), Point::new(0.7, 0.8)));
        s.interfaces
            .push((Point::new(0.5, 0.0), Point::new(0.5, 1.0)));
        let m = generate(&s).unwrap();
        let area: f64 = (0..m.triangles.len()).map(|t| m.area(t)).sum();
        assert!((area - 1.0).abs() < 1e-12);
        let flen: f64 = m
            .fracture_edges
            .iter()
            .map(|e| m.vertices[e.v[0]].dist(m.vertices[e.v[1]]))
            .sum();
        assert!((flen - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        assert!(m.min_angle_deg() > 20.0);
    }
}
