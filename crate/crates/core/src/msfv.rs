//! Multiscale finite-volume modification of LEDFM: near-fracture faces get
//! multi-point fluxes from interaction-region basis solves with reduced
//! boundary conditions.

use std::collections::{BTreeMap, HashMap};

use crate::analytic1d::{analytic_profile, Profile};
use crate::dfm::{DfmSystem, FractureProps};
use crate::error::{Error, Result};
use crate::fv::{assemble, BoundaryValue, FlowProblem, FluxStencil};
use crate::geometry::{Point, Rect};
use crate::grid::{CoarseGrid, Face, FractureSegment};
use crate::ledfm::{build_ledfm, fracture_in, par_map, LocalFracture};
use crate::mesh::{generate, MeshSpec, TriMesh};
use crate::model::{DomainBoundary, EmbeddedModel};
use crate::sparse::Factorization;

/// Corner order of an interaction region.
pub const LL: usize = 0;
pub const LR: usize = 1;
pub const UL: usize = 2;
pub const UR: usize = 3;

/// Dual-grid square spanned by the centers of the four cells around an interior
/// grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionRegion {
    /// Grid node `(i, j)` at the region center.
    pub node: (usize, usize),
    pub rect: Rect,
    /// Coarse cells in `[LL, LR, UL, UR]` order.
    pub corners: [usize; 4],
    /// Fracture piece in physical coordinates and its fracture id.
    pub fracture: Option<(usize, Point, Point)>,
}

impl InteractionRegion {
    pub fn is_cut(&self) -> bool {
        self.fracture.is_some()
    }
}

/// Interaction regions of all interior nodes, row by row.
pub fn build_dual_grid(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
) -> Result<Vec<InteractionRegion>> {
    let mut out = Vec::new();
    for j in 1..grid.ny {
        for i in 1..grid.nx {
            let corners = [
                grid.index(i - 1, j - 1),
                grid.index(i, j - 1),
                grid.index(i - 1, j),
                grid.index(i, j),
            ];
            let (lo, hi) = (grid.center(corners[LL]), grid.center(corners[UR]));
            let rect = Rect::new(lo.x, lo.y, hi.x, hi.y);
            let fracture = fracture_in(&rect, fractures)?.filter(|(_, a, b)| {
                // pieces lying on the region boundary do not cut it
                let m = a.midpoint(*b);
                let tol = 1e-10 * rect.diagonal();
                m.x - rect.x0 > tol
                    && rect.x1 - m.x > tol
                    && m.y - rect.y0 > tol
                    && rect.y1 - m.y > tol
            });
            out.push(InteractionRegion {
                node: (i, j),
                rect,
                corners,
                fracture,
            });
        }
    }
    Ok(out)
}

/// Pressure along one region edge between its end corner values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeProfile {
    Linear {
        p_a: f64,
        p_b: f64,
    },
    /// Lower-dimensional fracture crossing the edge.
    Fractured(Profile),
}

impl EdgeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            EdgeProfile::Linear { p_a, p_b } => p_a + (p_b - p_a) * t,
            EdgeProfile::Fractured(p) => p.eval(t),
        }
    }
}

/// Fracture crossing of a normalized unit edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub x_f: f64,
    pub aperture: f64,
    pub k_f: f64,
}

pub fn reduced_boundary_profile(
    p_a: f64,
    p_b: f64,
    k_m: f64,
    crossing: Option<Crossing>,
) -> EdgeProfile {
    match crossing {
        None => EdgeProfile::Linear { p_a, p_b },
        Some(c) => {
            EdgeProfile::Fractured(analytic_profile(c.x_f, c.aperture, k_m, c.k_f, p_a, p_b))
        }
    }
}

/// Edge `e` of the unit square: `(start corner, end corner, is horizontal)`;
/// 0 bottom, 1 right, 2 top, 3 left.
const EDGES: [(usize, usize, bool); 4] = [
    (LL, LR, true),
    (LR, UR, false),
    (UL, UR, true),
    (LL, UL, false),
];

/// Subinterface `s`: the segment and whether it is vertical (flux `+x`) or
/// horizontal (flux `+y`). 0 lower vertical, 1 right horizontal, 2 upper
/// vertical, 3 left horizontal.
fn subinterface(s: usize) -> (Point, Point, bool) {
    let c = Point::new(0.5, 0.5);
    match s {
        0 => (Point::new(0.5, 0.0), c, true),
        1 => (c, Point::new(1.0, 0.5), false),
        2 => (c, Point::new(0.5, 1.0), true),
        _ => (Point::new(0.0, 0.5), c, false),
    }
}

/// Basis problem of a region normalized to the unit square.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionProblem {
    pub kx: f64,
    pub ky: f64,
    pub fracture: Option<LocalFracture>,
    /// Whether each end of the fracture piece continues beyond the region.
    pub through: [bool; 2],
    pub h_fine: f64,
}

impl RegionProblem {
    /// Crossing of each region edge, if any.
    pub fn crossings(&self) -> [Option<Crossing>; 4] {
        let mut out = [None; 4];
        let Some(f) = &self.fracture else { return out };
        let tol = 1e-10;
        for (p, through) in [(f.a, self.through[0]), (f.b, self.through[1])] {
            if !through {
                continue;
            }
            let on = [
                p.y.abs() < tol,
                (p.x - 1.0).abs() < tol,
                (p.y - 1.0).abs() < tol,
                p.x.abs() < tol,
            ];
            if on.iter().filter(|o| **o).count() != 1 {
                // corner crossings keep linear data on both edges
                continue;
            }
            let e = on.iter().position(|o| *o).unwrap();
            let x_f = if EDGES[e].2 { p.x } else { p.y };
            out[e] = Some(Crossing {
                x_f,
                aperture: f.aperture,
                k_f: f.k_n,
            });
        }
        out
    }

    pub fn mesh(&self) -> Result<TriMesh> {
        let mut spec = MeshSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), self.h_fine);
        spec.interfaces = vec![
            (Point::new(0.5, 0.0), Point::new(0.5, 1.0)),
            (Point::new(0.0, 0.5), Point::new(1.0, 0.5)),
        ];
        if let Some(f) = &self.fracture {
            spec.fractures.push((f.a, f.b));
        }
        generate(&spec)
    }

    pub fn solve(&self) -> Result<[[f64; 4]; 4]> {
        self.solve_on(&self.mesh()?)
    }

    /// Transmissibility matrix `T[s][c]`: flux across subinterface `s` for unit
    /// pressure at corner `c` and zero at the others.
    pub fn solve_on(&self, mesh: &TriMesh) -> Result<[[f64; 4]; 4]> {
        let props: Vec<FractureProps> = self
            .fracture
            .iter()
            .map(|f| FractureProps {
                aperture: f.aperture,
                k_tau: f.k_tau,
                k_n: f.k_n,
            })
            .collect();
        let sys = DfmSystem::new(
            mesh,
            &vec![(self.kx, self.ky); mesh.triangles.len()],
            &props,
        );
        let crossings = self.crossings();
        let tol = 1e-10;
        let problem_for = |corner: usize| -> FlowProblem {
            let mut values = [0.0; 4];
            values[corner] = 1.0;
            let profiles: Vec<EdgeProfile> = EDGES
                .iter()
                .zip(&crossings)
                .map(|(&(a, b, horizontal), c)| {
                    let k = if horizontal { self.kx } else { self.ky };
                    reduced_boundary_profile(values[a], values[b], k, *c)
                })
                .collect();
            sys.flow_problem(|e| {
                let m = e.midpoint;
                let (edge, t) = if m.y < tol {
                    (0, m.x)
                } else if m.x > 1.0 - tol {
                    (1, m.y)
                } else if m.y > 1.0 - tol {
                    (2, m.x)
                } else {
                    (3, m.y)
                };
                Some(BoundaryValue::Dirichlet(profiles[edge].eval(t)))
            })
        };
        let first = assemble(&problem_for(0))?;
        let lu = Factorization::new(&first.matrix)?;
        let mut t = [[0.0; 4]; 4];
        for corner in 0..4 {
            let problem = problem_for(corner);
            let rhs = if corner == 0 {
                first.rhs.clone()
            } else {
                assemble(&problem)?.rhs
            };
            let pressure = lu.solve(&rhs)?;
            let flow = crate::fv::recover_fluxes(&problem, &pressure, 0.0);
            for (s, row) in t.iter_mut().enumerate() {
                let (a, b, vertical) = subinterface(s);
                let on = |p: Point| {
                    if vertical {
                        (p.x - 0.5).abs() < tol
                            && p.y >= a.y.min(b.y) - tol
                            && p.y <= a.y.max(b.y) + tol
                    } else {
                        (p.y - 0.5).abs() < tol
                            && p.x >= a.x.min(b.x) - tol
                            && p.x <= a.x.max(b.x) + tol
                    }
                };
                row[corner] = sys.interface_flux(
                    mesh,
                    &flow.connection_flux,
                    |p, q| on(p) && on(q),
                    |c| if vertical { c.x - 0.5 } else { c.y - 0.5 },
                );
            }
        }
        Ok(t)
    }
}

/// Normalized basis problem of a region; the four corner cells must share
/// their permeability.
pub fn region_problem(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    region: &InteractionRegion,
    h_fine: f64,
) -> Result<RegionProblem> {
    let k0 = (grid.kx[region.corners[0]], grid.ky[region.corners[0]]);
    if region
        .corners
        .iter()
        .any(|c| (grid.kx[*c], grid.ky[*c]) != k0)
    {
        return Err(Error::Unsupported(format!(
            "interaction region at node {:?} is heterogeneous",
            region.node
        )));
    }
    let scale = region.rect.width();
    let origin = Point::new(region.rect.x0, region.rect.y0);
    let map = |p: Point| (p - origin) * (1.0 / scale);
    let (fracture, through) = match region.fracture {
        None => (None, [false; 2]),
        Some((id, a, b)) => {
            let f = &fractures[id];
            let tol = 1e-10 * scale;
            let through = [
                a.dist(f.a).min(a.dist(f.b)) > tol,
                b.dist(f.a).min(b.dist(f.b)) > tol,
            ];
            let lf = LocalFracture {
                a: map(a),
                b: map(b),
                aperture: f.aperture / scale,
                k_tau: f.k_tau,
                k_n: f.k_n,
            };
            (Some(lf), through)
        }
    };
    Ok(RegionProblem {
        kx: k0.0,
        ky: k0.1,
        fracture,
        through,
        h_fine,
    })
}

/// Row sums of a region matrix; zero for consistent basis solves.
pub fn row_sums(t: &[[f64; 4]; 4]) -> [f64; 4] {
    t.map(|row| row.iter().sum())
}

/// Replaces the two-point flux of every face between two near-fracture cells
/// whose two half-face regions exist by the sum of the regions' subinterface
/// fluxes.
pub fn apply_msfv_stencils(
    model: &mut EmbeddedModel,
    regions: &[InteractionRegion],
    h_fine: f64,
) -> Result<()> {
    let grid = model.grid.clone();
    let (nx, ny) = (grid.nx, grid.ny);
    let region_at = |i: usize, j: usize| -> Option<usize> {
        (i >= 1 && i < nx && j >= 1 && j < ny).then(|| (j - 1) * (nx - 1) + (i - 1))
    };
    let mut near = vec![false; grid.n_cells()];
    for r in regions.iter().filter(|r| r.is_cut()) {
        for c in r.corners {
            near[c] = true;
        }
    }
    // faces to replace, each with its two (region, subinterface) halves
    let mut faces: Vec<(Face, [(usize, usize); 2])> = Vec::new();
    for face in grid.interior_faces() {
        let (a, b) = grid.face_cells(face);
        if !(near[a.unwrap()] && near[b.unwrap()]) {
            continue;
        }
        let halves = match face {
            Face::Vertical { i, j } => (region_at(i, j), 2, region_at(i, j + 1), 0),
            Face::Horizontal { i, j } => (region_at(i, j), 1, region_at(i + 1, j), 3),
        };
        if let (Some(r0), s0, Some(r1), s1) = halves {
            faces.push((face, [(r0, s0), (r1, s1)]));
        }
    }
    if faces.is_empty() {
        return Ok(());
    }
    let mut needed: Vec<usize> = faces.iter().flat_map(|(_, h)| [h[0].0, h[1].0]).collect();
    needed.sort_unstable();
    needed.dedup();
    let problems: Vec<RegionProblem> = needed
        .iter()
        .map(|r| region_problem(&grid, &model.fractures, &regions[*r], h_fine))
        .collect::<Result<_>>()?;
    // uncut regions of equal permeability share one solve
    let mut unique: Vec<&RegionProblem> = Vec::new();
    let mut slot = Vec::with_capacity(problems.len());
    let mut uncut: HashMap<(u64, u64), usize> = HashMap::new();
    for p in &problems {
        let s = if p.fracture.is_none() {
            *uncut
                .entry((p.kx.to_bits(), p.ky.to_bits()))
                .or_insert_with(|| {
                    unique.push(p);
                    unique.len() - 1
                })
        } else {
            unique.push(p);
            unique.len() - 1
        };
        slot.push(s);
    }
    let solved: Vec<[[f64; 4]; 4]> = par_map(&unique, |p| p.solve())
        .into_iter()
        .collect::<Result<_>>()?;
    let matrix: HashMap<usize, [[f64; 4]; 4]> = needed
        .iter()
        .zip(slot)
        .map(|(r, s)| (*r, solved[s]))
        .collect();

    for (face, halves) in faces {
        let (a, b) = grid.face_cells(face);
        let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
        for (r, s) in halves {
            let t = &matrix[&r];
            for (k, cell) in regions[r].corners.iter().enumerate() {
                *terms.entry(*cell).or_insert(0.0) += t[s][k];
            }
        }
        let idx = model.face_connection[&face];
        model.problem.connections[idx].trans = 0.0;
        model
            .face_stencil
            .insert(face, model.problem.stencils.len());
        model.problem.stencils.push(FluxStencil {
            a: a.unwrap(),
            b: b.unwrap(),
            terms: terms.into_iter().collect(),
        });
    }
    Ok(())
}

pub fn build_ledfm_msfv(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    bc: &DomainBoundary,
    mu: f64,
    h_fine: f64,
) -> Result<EmbeddedModel> {
    let mut model = build_ledfm(grid, fractures, bc, mu, h_fine)?;
    let regions = build_dual_grid(grid, fractures)?;
    apply_msfv_stencils(&mut model, &regions, h_fine)?;
    Ok(model)
}
