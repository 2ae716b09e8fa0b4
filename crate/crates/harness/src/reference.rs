//! Fine reference solutions: a conforming lower-dimensional DFM triangulation,
//! and a graded tensor grid resolving a horizontal fracture as a thin layer.

use fracflow_core::dfm::{BoundaryEdge, DfmSystem, FractureProps};
use fracflow_core::fv::{
    solve_flow_with, BoundaryFace, BoundaryValue, Connection, ConnectionKind, FlowProblem,
    FlowSolution,
};
use fracflow_core::geometry::{polygon_area, Point, Rect};
use fracflow_core::mesh::{generate, MeshSpec, TriMesh};
use fracflow_core::model::{DomainBoundary, SideCondition};
use fracflow_core::sparse::SolverChoice;

use crate::error::{HarnessError, Result};
use crate::scenario::{ReferenceKind, ReferenceSpec, Scenario};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellShape {
    Tri([Point; 3]),
    Rect(Rect),
}

impl CellShape {
    pub fn polygon(&self) -> Vec<Point> {
        match self {
            CellShape::Tri(p) => p.to_vec(),
            CellShape::Rect(r) => r.corners().to_vec(),
        }
    }

    pub fn bbox(&self) -> Rect {
        match self {
            CellShape::Tri(p) => Rect::new(
                p[0].x.min(p[1].x).min(p[2].x),
                p[0].y.min(p[1].y).min(p[2].y),
                p[0].x.max(p[1].x).max(p[2].x),
                p[0].y.max(p[1].y).max(p[2].y),
            ),
            CellShape::Rect(r) => *r,
        }
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon())
    }
}

/// Piecewise-constant fine pressure on cell polygons.
#[derive(Clone, Debug, Default)]
pub struct ReferenceField {
    pub shapes: Vec<CellShape>,
    pub pressure: Vec<f64>,
    /// `false` for cells of an explicit fracture layer, excluded from the norm.
    pub matrix: Vec<bool>,
    /// Total unknowns of the fine solve, fracture cells included.
    pub unknowns: usize,
}

fn side_of(p: Point, lx: f64, ly: f64) -> usize {
    let tol = 1e-9 * lx.max(ly);
    // bottom, top, left, right
    if p.y <= tol {
        0
    } else if p.y >= ly - tol {
        1
    } else if p.x <= tol {
        2
    } else {
        3
    }
}

fn sides(bc: &DomainBoundary) -> [SideCondition; 4] {
    [bc.bottom, bc.top, bc.left, bc.right]
}

fn boundary_value(cond: SideCondition) -> Option<BoundaryValue> {
    match cond {
        SideCondition::Pressure(p) => Some(BoundaryValue::Dirichlet(p)),
        SideCondition::Flux(g) if g != 0.0 => Some(BoundaryValue::Neumann(g)),
        SideCondition::Flux(_) => None,
    }
}

/// A solved fine conforming model.
pub struct ConformingRun {
    pub mesh: TriMesh,
    pub system: DfmSystem,
    pub problem: FlowProblem,
    pub flow: FlowSolution,
    /// First endpoint of every fracture.
    pub fracture_start: Vec<Point>,
}

fn contains(tri: &[Point; 3], p: Point) -> bool {
    let s = |a: Point, b: Point| (b - a).cross(p - a);
    let (d0, d1, d2) = (s(tri[0], tri[1]), s(tri[1], tri[2]), s(tri[2], tri[0]));
    (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
}

/// Conforming DFM solve on a Delaunay mesh of target edge length `h`.
pub fn solve_conforming(sc: &Scenario, h: f64) -> Result<ConformingRun> {
    let (lx, ly) = (sc.domain.lx, sc.domain.ly);
    let mut spec = MeshSpec::new(Rect::new(0.0, 0.0, lx, ly), h);
    spec.fractures = sc
        .fracture
        .iter()
        .map(|f| (Point::new(f.x1, f.y1), Point::new(f.x2, f.y2)))
        .collect();
    let mesh = generate(&spec)?;
    let perm = vec![(sc.matrix.kx, sc.matrix.ky); mesh.triangles.len()];
    let props: Vec<FractureProps> = sc
        .fracture
        .iter()
        .map(|f| FractureProps {
            aperture: f.aperture,
            k_tau: f.k_tau,
            k_n: f.k_n,
        })
        .collect();
    let system = DfmSystem::new(&mesh, &perm, &props);
    let bc = sides(&sc.boundary());
    let mut problem =
        system.flow_problem(|e: &BoundaryEdge| boundary_value(bc[side_of(e.midpoint, lx, ly)]));
    problem.viscosity = sc.fluid.mu;
    for s in &sc.sources {
        let p = Point::new(s.x, s.y);
        let t = (0..mesh.triangles.len())
            .find(|&t| contains(&mesh.triangle_points(t), p))
            .ok_or_else(|| HarnessError::Validation("source outside the mesh".into()))?;
        problem.sources[t] += s.rate;
    }
    let flow = solve_flow_with(&problem, SolverChoice::Direct)?;
    Ok(ConformingRun {
        mesh,
        system,
        problem,
        flow,
        fracture_start: sc.fracture.iter().map(|f| Point::new(f.x1, f.y1)).collect(),
    })
}

impl ConformingRun {
    pub fn field(&self) -> ReferenceField {
        let nt = self.system.n_triangles;
        ReferenceField {
            shapes: (0..nt)
                .map(|t| CellShape::Tri(self.mesh.triangle_points(t)))
                .collect(),
            pressure: self.flow.pressure[..nt].to_vec(),
            matrix: vec![true; nt],
            unknowns: self.system.n_cells(),
        }
    }
}

/// Rectilinear grid with per-cell diagonal permeability.
#[derive(Clone, Debug)]
pub struct TensorGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub matrix: Vec<bool>,
}

impl TensorGrid {
    pub fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.ys.len() - 1
    }

    pub fn n_cells(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn rect(&self, c: usize) -> Rect {
        let (i, j) = (c % self.nx(), c / self.nx());
        Rect::new(self.xs[i], self.ys[j], self.xs[i + 1], self.ys[j + 1])
    }

    /// TPFA with harmonic face averages.
    pub fn flow_problem(&self, bc: &DomainBoundary, mu: f64) -> FlowProblem {
        let (nx, ny) = (self.nx(), self.ny());
        let dx = |i: usize| self.xs[i + 1] - self.xs[i];
        let dy = |j: usize| self.ys[j + 1] - self.ys[j];
        let mut p = FlowProblem::new(self.n_cells());
        p.viscosity = mu;
        for j in 0..ny {
            for i in 0..nx {
                let c = self.index(i, j);
                if i + 1 < nx {
                    let e = self.index(i + 1, j);
                    let t = dy(j)
                        / (0.5 * dx(i) / self.kx[c] + 0.5 * dx(i + 1) / self.kx[e]);
                    p.connections
                        .push(Connection::new(c, e, t, ConnectionKind::MM));
                }
                if j + 1 < ny {
                    let e = self.index(i, j + 1);
                    let t = dx(i)
                        / (0.5 * dy(j) / self.ky[c] + 0.5 * dy(j + 1) / self.ky[e]);
                    p.connections
                        .push(Connection::new(c, e, t, ConnectionKind::MM));
                }
            }
        }
        let mut side = |cond: SideCondition, c: usize, len: f64, half: f64| {
            let value = match cond {
                SideCondition::Pressure(v) => BoundaryValue::Dirichlet(v),
                SideCondition::Flux(g) if g != 0.0 => BoundaryValue::Neumann(g * len),
                SideCondition::Flux(_) => return,
            };
            p.boundary.push(BoundaryFace {
                cell: c,
                trans: half,
                value,
            });
        };
        for i in 0..nx {
            let (b, t) = (self.index(i, 0), self.index(i, ny - 1));
            side(bc.bottom, b, dx(i), 2.0 * self.ky[b] * dx(i) / dy(0));
            side(bc.top, t, dx(i), 2.0 * self.ky[t] * dx(i) / dy(ny - 1));
        }
        for j in 0..ny {
            let (l, r) = (self.index(0, j), self.index(nx - 1, j));
            side(bc.left, l, dy(j), 2.0 * self.kx[l] * dy(j) / dx(0));
            side(bc.right, r, dy(j), 2.0 * self.kx[r] * dy(j) / dx(nx - 1));
        }
        p
    }

    pub fn locate(&self, p: Point) -> usize {
        let find = |v: &[f64], x: f64| {
            v.partition_point(|t| *t <= x)
                .saturating_sub(1)
                .min(v.len() - 2)
        };
        self.index(find(&self.xs, p.x), find(&self.ys, p.y))
    }
}

/// Nodes on `[0, l]` with spacing about `h` that include every value of `fixed`.
fn uniform_with(l: f64, h: f64, fixed: &[f64]) -> Vec<f64> {
    let mut anchors = vec![0.0];
    anchors.extend(fixed.iter().copied().filter(|x| *x > 0.0 && *x < l));
    anchors.push(l);
    anchors.sort_by(f64::total_cmp);
    anchors.dedup();
    let mut out = vec![0.0];
    for w in anchors.windows(2) {
        let m = ((w[1] - w[0]) / h).round().max(1.0) as usize;
        for k in 1..=m {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / m as f64);
        }
    }
    *out.last_mut().unwrap() = l;
    out
}

/// Spacings growing geometrically from `first` by `ratio` up to `h`, then
/// uniform, covering a length `l`.
fn graded(l: f64, first: f64, ratio: f64, h: f64) -> Vec<f64> {
    let mut steps = Vec::new();
    let (mut s, mut pos) = (first, 0.0);
    while s < h && pos + s < l {
        steps.push(s);
        pos += s;
        s *= ratio;
    }
    let rest = l - pos;
    if rest > 0.0 {
        let m = (rest / h).ceil().max(1.0) as usize;
        steps.extend(std::iter::repeat(rest / m as f64).take(m));
    }
    steps
}

pub const GRADING_RATIO: f64 = 1.15;

/// Tensor grid with `n` columns per unit length, graded towards a single
/// horizontal fracture resolved as three rows of thickness `aperture / 3`.
pub fn equidim_grid(sc: &Scenario, n: usize) -> Result<TensorGrid> {
    let (lx, ly) = (sc.domain.lx, sc.domain.ly);
    let h = lx / n as f64;
    let layer = match sc.fracture.as_slice() {
        [] => None,
        [f] if f.y1 == f.y2 => Some(*f),
        _ => {
            return Err(HarnessError::Validation(
                "the equidimensional reference supports one horizontal fracture".into(),
            ))
        }
    };
    let xs = uniform_with(
        lx,
        h,
        &layer.map_or(vec![], |f| vec![f.x1.min(f.x2), f.x1.max(f.x2)]),
    );
    let ys = match layer {
        None => uniform_with(ly, h, &[]),
        Some(f) => {
            let (lo, hi) = (f.y1 - 0.5 * f.aperture, f.y1 + 0.5 * f.aperture);
            if lo <= 0.0 || hi >= ly {
                return Err(HarnessError::Validation(
                    "fracture layer must stay inside the domain".into(),
                ));
            }
            let first = f.aperture / 3.0;
            let mut ys: Vec<f64> = graded(lo, first * GRADING_RATIO, GRADING_RATIO, h)
                .iter()
                .scan(lo, |y, s| {
                    *y -= s;
                    Some(*y)
                })
                .collect();
            ys.reverse();
            ys[0] = 0.0;
            ys.extend([lo, lo + first, lo + 2.0 * first, hi]);
            let mut y = hi;
            for s in graded(ly - hi, first * GRADING_RATIO, GRADING_RATIO, h) {
                y += s;
                ys.push(y);
            }
            *ys.last_mut().unwrap() = ly;
            ys
        }
    };
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let mut g = TensorGrid {
        kx: vec![sc.matrix.kx; nx * ny],
        ky: vec![sc.matrix.ky; nx * ny],
        matrix: vec![true; nx * ny],
        xs,
        ys,
    };
    if let Some(f) = layer {
        let (x0, x1) = (f.x1.min(f.x2), f.x1.max(f.x2));
        let (lo, hi) = (f.y1 - 0.5 * f.aperture, f.y1 + 0.5 * f.aperture);
        for c in 0..g.n_cells() {
            let mid = g.rect(c).center();
            if mid.x > x0 && mid.x < x1 && mid.y > lo && mid.y < hi {
                g.kx[c] = f.k_tau;
                g.ky[c] = f.k_n;
                g.matrix[c] = false;
            }
        }
    }
    Ok(g)
}

pub fn solve_equidim(sc: &Scenario, n: usize) -> Result<(TensorGrid, FlowSolution)> {
    let g = equidim_grid(sc, n)?;
    let mut p = g.flow_problem(&sc.boundary(), sc.fluid.mu);
    for s in &sc.sources {
        p.sources[g.locate(Point::new(s.x, s.y))] += s.rate;
    }
    let flow = solve_flow_with(&p, SolverChoice::Direct)?;
    Ok((g, flow))
}

/// Equidimensional layer for a single horizontal fracture, conforming DFM otherwise;
/// `n` reference cells per unit length.
pub fn default_reference(sc: &Scenario, n: usize) -> ReferenceSpec {
    let kind = match sc.fracture.as_slice() {
        [f] if f.y1 == f.y2 => ReferenceKind::Equidim,
        _ => ReferenceKind::Dfm,
    };
    ReferenceSpec { kind, n }
}

pub fn reference_solution(sc: &Scenario, spec: ReferenceSpec) -> Result<ReferenceField> {
    let n = ((spec.n as f64) * sc.domain.lx).round().max(1.0) as usize;
    match spec.kind {
        ReferenceKind::Dfm => {
            let run = solve_conforming(sc, sc.domain.lx / n as f64)?;
            log::info!(
                "conforming reference: {} triangles, {} fracture cells",
                run.system.n_triangles,
                run.system.n_fracture
            );
            Ok(run.field())
        }
        ReferenceKind::Equidim => {
            let (g, flow) = solve_equidim(sc, n)?;
            log::info!("equidimensional reference: {} x {} cells", g.nx(), g.ny());
            Ok(ReferenceField {
                shapes: (0..g.n_cells()).map(|c| CellShape::Rect(g.rect(c))).collect(),
                pressure: flow.pressure,
                unknowns: g.n_cells(),
                matrix: g.matrix,
            })
        }
    }
}

/// Rejects references with fewer than 50 unknowns per coarse unknown.
pub fn check_resolution(reference: &ReferenceField, coarse_unknowns: usize) -> Result<()> {
    if reference.unknowns < 50 * coarse_unknowns {
        return Err(HarnessError::MeshTooCoarse {
            reference: reference.unknowns,
            coarse: coarse_unknowns,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{presets, MethodName};

    #[test]
    fn graded_covers_length() {
        let s = graded(0.5, 1e-4, 1.15, 0.01);
        assert!((s.iter().sum::<f64>() - 0.5).abs() < 1e-14);
        assert!(s.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    }

    #[test]
    fn layer_rows_are_flagged() {
        let sc = presets::test2(1e-8, MethodName::Edfm, 5);
        let g = equidim_grid(&sc, 40).unwrap();
        let layer = g.matrix.iter().filter(|m| !**m).count();
        assert_eq!(layer, 3 * 20);
        assert!(g.xs.contains(&0.25) && g.xs.contains(&0.75));
        assert!(g.ys.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g.ys.last().unwrap(), 1.0);
    }

    #[test]
    fn unfractured_tensor_grid_is_linear() {
        let mut sc = presets::test2(1.0, MethodName::Edfm, 5);
        sc.fracture.clear();
        let (g, flow) = solve_equidim(&sc, 10).unwrap();
        for c in 0..g.n_cells() {
            let y = g.rect(c).center().y;
            assert!((flow.pressure[c] - (1.0 - y)).abs() < 1e-12);
        }
    }
}
