//! Conforming hybrid discrete fracture–matrix discretization on triangles.
//!
//! Matrix cells are triangles with their circumcenter as pressure point, so
//! that the two-point flux is consistent on Delaunay meshes; fracture cells are
//! the mesh edges lying on a fracture. Where a circumcenter falls behind a
//! constrained edge the centroid distance is used for that half instead.

use std::collections::HashMap;

use crate::fv::{harmonic, BoundaryFace, BoundaryValue, Connection, ConnectionKind, FlowProblem};
use crate::geometry::{circumcenter, Point};
use crate::mesh::TriMesh;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractureProps {
    pub aperture: f64,
    pub k_tau: f64,
    pub k_n: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub triangle: usize,
    pub v: [usize; 2],
    pub midpoint: Point,
    pub length: f64,
    /// Half-transmissibility from the triangle to the edge.
    pub trans: f64,
}

/// Discrete operator of the fine conforming model. Cells are triangles first,
/// then fracture edges in `mesh.fracture_edges` order.
#[derive(Clone, Debug)]
pub struct DfmSystem {
    pub n_triangles: usize,
    pub n_fracture: usize,
    pub volumes: Vec<f64>,
    pub centers: Vec<Point>,
    pub connections: Vec<Connection>,
    /// Mesh edge carrying each MM or MF connection.
    pub connection_edge: Vec<Option<[usize; 2]>>,
    pub boundary: Vec<BoundaryEdge>,
}

/// Signed distance from `c` to the edge `(a, b)`, positive on the side of `inner`,
/// and the edge length.
fn signed_edge_distance(c: Point, a: Point, b: Point, inner: Point) -> (f64, f64) {
    let e = b - a;
    let len = e.norm();
    let side = e.cross(inner - a).signum();
    (side * e.cross(c - a) / len, len)
}

fn centroid(p: &[Point; 3]) -> Point {
    Point::new(
        (p[0].x + p[1].x + p[2].x) / 3.0,
        (p[0].y + p[1].y + p[2].y) / 3.0,
    )
}

impl DfmSystem {
    /// `perm[t] = (k_x, k_y)` of triangle `t`; `fractures[id]` indexed by fracture id.
    pub fn new(mesh: &TriMesh, perm: &[(f64, f64)], fractures: &[FractureProps]) -> Self {
        let nt = mesh.triangles.len();
        let nf = mesh.fracture_edges.len();
        let mut centers: Vec<Point> = (0..nt)
            .map(|t| {
                let p = mesh.triangle_points(t);
                circumcenter(p[0], p[1], p[2])
            })
            .collect();
        let mut volumes: Vec<f64> = (0..nt).map(|t| mesh.area(t)).collect();
        let frac_of_edge: HashMap<[usize; 2], usize> = mesh
            .fracture_edges
            .iter()
            .enumerate()
            .map(|(k, e)| (e.v, k))
            .collect();
        for e in &mesh.fracture_edges {
            let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
            volumes.push(a.dist(b) * fractures[e.fracture].aperture);
            centers.push(a.midpoint(b));
        }

        let mut edge_tris: HashMap<[usize; 2], Vec<usize>> =
            HashMap::with_capacity(3 * nt / 2 + 16);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_tris
                    .entry(if a < b { [a, b] } else { [b, a] })
                    .or_default()
                    .push(t);
            }
        }
        let mut edges: Vec<_> = edge_tris.into_iter().collect();
        edges.sort_unstable_by_key(|e| e.0);

        // signed center distance of triangle t to edge e, and the normal permeability
        let signed = |t: usize, e: [usize; 2]| -> (f64, f64, f64) {
            let (pa, pb) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
            let p = mesh.triangle_points(t);
            let inner = centroid(&p);
            let (dist, len) = signed_edge_distance(centers[t], pa, pb, inner);
            let tang = (pb - pa) * (1.0 / len);
            let (kx, ky) = perm[t];
            (dist, len, kx * tang.y * tang.y + ky * tang.x * tang.x)
        };
        // half-transmissibility towards a constrained edge
        let half = |t: usize, e: [usize; 2]| -> (f64, f64) {
            let (mut dist, len, kn) = signed(t, e);
            if dist <= 1e-3 * len {
                let p = mesh.triangle_points(t);
                let (pa, pb) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
                dist = signed_edge_distance(centroid(&p), pa, pb, centroid(&p)).0;
            }
            (len * kn / dist, len)
        };

        let mut connections = Vec::with_capacity(edges.len() + 2 * nf);
        let mut connection_edge = Vec::with_capacity(edges.len() + 2 * nf);
        let mut boundary = Vec::new();
        for (e, tris) in &edges {
            match (tris.as_slice(), frac_of_edge.get(e)) {
                ([t1, t2], Some(&k)) => {
                    let f = fractures[mesh.fracture_edges[k].fracture];
                    let len = mesh.vertices[e[0]].dist(mesh.vertices[e[1]]);
                    let tf = 2.0 * f.k_n * len / f.aperture;
                    for t in [*t1, *t2] {
                        connections.push(Connection::new(
                            t,
                            nt + k,
                            harmonic(half(t, *e).0, tf),
                            ConnectionKind::MF,
                        ));
                        connection_edge.push(Some(*e));
                    }
                }
                ([t1, t2], None) => {
                    let (d1, len, k1) = signed(*t1, *e);
                    let (d2, _, k2) = signed(*t2, *e);
                    // near-cocircular pairs share their center; cap the coupling
                    let floor = 1e-2 * len;
                    let t = if d1 > 0.0 && d2 > 0.0 && d1 + d2 > floor {
                        len / (d1 / k1 + d2 / k2)
                    } else {
                        len * 2.0 * k1 * k2 / (k1 + k2) / (d1 + d2).max(floor)
                    };
                    let (a, b) = if t1 < t2 { (*t1, *t2) } else { (*t2, *t1) };
                    connections.push(Connection::new(a, b, t, ConnectionKind::MM));
                    connection_edge.push(Some(*e));
                }
                ([t], _) => {
                    let (trans, length) = half(*t, *e);
                    let midpoint = mesh.vertices[e[0]].midpoint(mesh.vertices[e[1]]);
                    boundary.push(BoundaryEdge {
                        triangle: *t,
                        v: *e,
                        midpoint,
                        length,
                        trans,
                    });
                }
                _ => log::warn!("non-manifold mesh edge {e:?}"),
            }
        }

        // fracture–fracture couplings at shared vertices (star–delta for junctions)
        let mut at_vertex: HashMap<usize, Vec<usize>> = HashMap::new();
        for (k, fe) in mesh.fracture_edges.iter().enumerate() {
            for v in fe.v {
                at_vertex.entry(v).or_default().push(k);
            }
        }
        let mut verts: Vec<_> = at_vertex
            .into_iter()
            .filter(|(_, ks)| ks.len() >= 2)
            .collect();
        verts.sort_unstable_by_key(|v| v.0);
        for (_, ks) in verts {
            let alpha: Vec<f64> = ks
                .iter()
                .map(|&k| {
                    let fe = mesh.fracture_edges[k];
                    let f = fractures[fe.fracture];
                    let len = mesh.vertices[fe.v[0]].dist(mesh.vertices[fe.v[1]]);
                    2.0 * f.k_tau * f.aperture / len
                })
                .collect();
            let sum: f64 = alpha.iter().sum();
            for i in 0..ks.len() {
                for j in (i + 1)..ks.len() {
                    connections.push(Connection::new(
                        nt + ks[i],
                        nt + ks[j],
                        alpha[i] * alpha[j] / sum,
                        ConnectionKind::FF,
                    ));
                    connection_edge.push(None);
                }
            }
        }
        centers.shrink_to_fit();
        Self {
            n_triangles: nt,
            n_fracture: nf,
            volumes,
            centers,
            connections,
            connection_edge,
            boundary,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.n_triangles + self.n_fracture
    }

    /// Flow problem with boundary data chosen per boundary edge (`None` = no flow).
    /// `Neumann` values are outward flux densities.
    pub fn flow_problem(
        &self,
        mut bc: impl FnMut(&BoundaryEdge) -> Option<BoundaryValue>,
    ) -> FlowProblem {
        let mut p = FlowProblem::new(self.n_cells());
        p.connections = self.connections.clone();
        for e in &self.boundary {
            match bc(e) {
                Some(BoundaryValue::Dirichlet(v)) => p.boundary.push(BoundaryFace {
                    cell: e.triangle,
                    trans: e.trans,
                    value: BoundaryValue::Dirichlet(v),
                }),
                Some(BoundaryValue::Neumann(g)) => p.boundary.push(BoundaryFace {
                    cell: e.triangle,
                    trans: e.trans,
                    value: BoundaryValue::Neumann(g * e.length),
                }),
                None => {}
            }
        }
        p
    }

    /// Sum of MM fluxes across mesh edges selected by `on_edge`, signed from the
    /// side where `side(center) < 0` to the other.
    pub fn interface_flux(
        &self,
        mesh: &TriMesh,
        fluxes: &[f64],
        on_edge: impl Fn(Point, Point) -> bool,
        side: impl Fn(Point) -> f64,
    ) -> f64 {
        let mut total = 0.0;
        for ((c, e), f) in self
            .connections
            .iter()
            .zip(&self.connection_edge)
            .zip(fluxes)
        {
            if c.kind != ConnectionKind::MM {
                continue;
            }
            let Some(e) = e else { continue };
            if !on_edge(mesh.vertices[e[0]], mesh.vertices[e[1]]) {
                continue;
            }
            let ca = mesh.centroid(c.a);
            total += if side(ca) < 0.0 { *f } else { -*f };
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::solve_flow;
    use crate::geometry::Rect;
    use crate::mesh::{generate, MeshSpec};
    use approx::assert_relative_eq;

    #[test]
    fn right_isoceles_hypotenuse() {
        // triangle (0,0),(1,0),(0,1): the centroid lies (1/3)/√2 from the hypotenuse
        let p = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let c = centroid(&p);
        let (d, len) = signed_edge_distance(c, p[1], p[2], c);
        assert_relative_eq!(d, (1.0 / 3.0) / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(len / d, 6.0, epsilon = 1e-12);
        // the circumcenter sits on the hypotenuse itself
        let cc = circumcenter(p[0], p[1], p[2]);
        assert!(signed_edge_distance(cc, p[1], p[2], c).0.abs() < 1e-15);
    }

    #[test]
    fn linear_field_converges() {
        let mut errors = Vec::new();
        for h in [0.05, 0.025] {
            let m = generate(&MeshSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), h)).unwrap();
            let sys = DfmSystem::new(&m, &vec![(1.0, 1.0); m.triangles.len()], &[]);
            let p = sys.flow_problem(|e| {
                if e.midpoint.y < 1e-12 {
                    Some(BoundaryValue::Dirichlet(1.0))
                } else if e.midpoint.y > 1.0 - 1e-12 {
                    Some(BoundaryValue::Dirichlet(0.0))
                } else {
                    None
                }
            });
            let s = solve_flow(&p).unwrap();
            let flux: f64 = s.boundary_flux.iter().filter(|f| **f > 0.0).sum();
            errors.push((flux - 1.0).abs());
        }
        assert!(
            errors[0] < 1e-2 && errors[1] < 0.5 * errors[0],
            "{errors:?}"
        );
    }
}
