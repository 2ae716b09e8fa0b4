//! Local embedded discrete fracture model: matrix–fracture and near-fracture
//! matrix–matrix transmissibilities upscaled from fine conforming local solves.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::dfm::{DfmSystem, FractureProps};
use crate::error::{Error, Result};
use crate::fv::{
    solve_flow_with, BoundaryValue, Connection, ConnectionKind, FlowProblem, FlowSolution,
};
use crate::geometry::{clip_segment, Point, Rect};
use crate::grid::{CoarseGrid, Face, FractureSegment};
use crate::mesh::{generate, MeshSpec, TriMesh};
use crate::model::{base_model, DomainBoundary, EmbeddedModel};
use crate::sparse::{CsrMatrix, Factorization, SolverChoice};

/// Runs `f` over `items` on the global pool, or on a pool capped by
/// `FRACFLOW_THREADS`; results keep the input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    let cap = std::env::var("FRACFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        None => items.par_iter().map(&f).collect(),
    }
}

/// A fracture piece in normalized local coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFracture {
    pub a: Point,
    pub b: Point,
    /// Aperture rescaled with the domain.
    pub aperture: f64,
    pub k_tau: f64,
    pub k_n: f64,
}

impl LocalFracture {
    pub fn props(&self) -> FractureProps {
        FractureProps {
            aperture: self.aperture,
            k_tau: self.k_tau,
            k_n: self.k_n,
        }
    }
}

/// Matrix–fracture problem on a (normalized) cut cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MfProblem {
    pub domain: Rect,
    pub kx: f64,
    pub ky: f64,
    pub fracture: LocalFracture,
    pub h_fine: f64,
}

/// Matrix–matrix problem on two cells sharing the face `x = x_mid`; `m1` lies
/// at `x < x_mid`.
#[derive(Clone, Debug, PartialEq)]
pub struct MmProblem {
    pub domain: Rect,
    pub x_mid: f64,
    /// `(k_x, k_y)` of `m1` and `m2`.
    pub k1: (f64, f64),
    pub k2: (f64, f64),
    pub fracture: Option<LocalFracture>,
    pub h_fine: f64,
}

/// Fine solution of a local problem, kept for inspection.
#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub mesh: TriMesh,
    pub system: DfmSystem,
    pub problem: FlowProblem,
    pub flow: FlowSolution,
    pub transmissibility: f64,
    /// Coarse flux used for the extraction.
    pub flux: f64,
    /// The two averaged pressures of the extraction.
    pub averages: (f64, f64),
}

impl LocalSolution {
    /// Legacy VTK of the triangles with pressure.
    pub fn write_vtk(&self, w: &mut impl Write) -> std::io::Result<()> {
        crate::vtk::write_trimesh(
            w,
            "local problem",
            &self.mesh,
            &[("pressure", &self.flow.pressure)],
        )
    }
}

fn mean(values: &[f64], weights: &[f64], select: impl Fn(usize) -> bool) -> f64 {
    let (mut s, mut w) = (0.0, 0.0);
    for (i, (v, wi)) in values.iter().zip(weights).enumerate() {
        if select(i) {
            s += v * wi;
            w += wi;
        }
    }
    s / w
}

fn extract(flux: f64, gap: f64, scale: f64) -> Result<f64> {
    if gap.abs() < 1e-14 * scale {
        if flux.abs() < 1e-14 {
            return Ok(0.0);
        }
        return Err(Error::ZeroPressureGap);
    }
    Ok((flux / gap).abs())
}

fn fine_system(
    domain: Rect,
    interfaces: Vec<(Point, Point)>,
    fracture: Option<&LocalFracture>,
    h: f64,
) -> Result<TriMesh> {
    let mut spec = MeshSpec::new(domain, h);
    spec.interfaces = interfaces;
    if let Some(f) = fracture {
        spec.fractures.push((f.a, f.b));
    }
    generate(&spec)
}

impl MfProblem {
    fn mesh(&self) -> Result<TriMesh> {
        fine_system(self.domain, Vec::new(), Some(&self.fracture), self.h_fine)
    }

    /// Stationary problem with unit fracture source and balancing matrix sink.
    fn stationary(sys: &DfmSystem, q_f: f64) -> FlowProblem {
        let nt = sys.n_triangles;
        let mut p = sys.flow_problem(|_| None);
        let vol_f: f64 = sys.volumes[nt..].iter().sum();
        let vol_m: f64 = sys.volumes[..nt].iter().sum();
        for (i, v) in sys.volumes.iter().enumerate() {
            p.sources[i] = if i < nt {
                -vol_f / vol_m * q_f * v
            } else {
                q_f * v
            };
        }
        p.null_mean = Some(sys.volumes.clone());
        p
    }

    pub fn solve(&self) -> Result<LocalSolution> {
        let mesh = self.mesh()?;
        let sys = DfmSystem::new(
            &mesh,
            &vec![(self.kx, self.ky); mesh.triangles.len()],
            &[self.fracture.props()],
        );
        if sys.n_fracture == 0 {
            return Err(Error::Mesh("fracture missing from the local mesh".into()));
        }
        let problem = Self::stationary(&sys, 1.0);
        let flow = solve_flow_with(&problem, SolverChoice::Direct)?;
        let nt = sys.n_triangles;
        let flux: f64 = problem
            .connections
            .iter()
            .zip(&flow.connection_flux)
            .filter(|(c, _)| c.kind == ConnectionKind::MF)
            .map(|(_, f)| f)
            .sum();
        let pm = mean(&flow.pressure, &sys.volumes, |i| i < nt);
        let pf = mean(&flow.pressure, &sys.volumes, |i| i >= nt);
        let scale = flow.pressure.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let t = extract(flux, pm - pf, scale)?;
        Ok(LocalSolution {
            mesh,
            system: sys,
            problem,
            flow,
            transmissibility: t,
            flux,
            averages: (pm, pf),
        })
    }
}

/// Compressibility data of the transient check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Storage {
    pub c_m: f64,
    pub c_f: f64,
    pub phi_m: f64,
    pub phi_f: f64,
    pub dt: f64,
    pub max_steps: usize,
}

impl Default for Storage {
    fn default() -> Self {
        Self {
            c_m: 1.0,
            c_f: 1.0,
            phi_m: 0.2,
            phi_f: 1.0,
            dt: 0.05,
            max_steps: 20_000,
        }
    }
}

/// Solves the transient injection problem with backward Euler until the pressure
/// rate is uniform, then compares its shape with the stationary problem built
/// from the observed rate. Returns the relative max-norm deviation.
pub fn verify_pseudo_steady_state(problem: &MfProblem, st: &Storage) -> Result<f64> {
    if !(st.c_m > 0.0 && st.c_f > 0.0 && st.phi_m > 0.0 && st.phi_f > 0.0 && st.dt > 0.0) {
        return Err(Error::Invalid(
            "storage coefficients and time step must be positive".into(),
        ));
    }
    let mesh = problem.mesh()?;
    let sys = DfmSystem::new(
        &mesh,
        &vec![(problem.kx, problem.ky); mesh.triangles.len()],
        &[problem.fracture.props()],
    );
    let nt = sys.n_triangles;
    let n = sys.n_cells();
    let q_bar = 1.0;
    let storage: Vec<f64> = (0..n)
        .map(|i| {
            if i < nt {
                st.c_m * st.phi_m * sys.volumes[i]
            } else {
                st.c_f * st.phi_f * sys.volumes[i]
            }
        })
        .collect();
    let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, storage[i] / st.dt)).collect();
    for c in &sys.connections {
        trip.extend([
            (c.a, c.a, c.trans),
            (c.a, c.b, -c.trans),
            (c.b, c.b, c.trans),
            (c.b, c.a, -c.trans),
        ]);
    }
    let lu = Factorization::new(&CsrMatrix::from_triplets(n, trip))?;
    let inject: Vec<f64> = (0..n)
        .map(|i| if i < nt { 0.0 } else { q_bar * sys.volumes[i] })
        .collect();
    let mut p = vec![0.0; n];
    let mut rate = vec![0.0; n];
    let mut reached = false;
    for _ in 0..st.max_steps {
        let rhs: Vec<f64> = (0..n)
            .map(|i| storage[i] / st.dt * p[i] + inject[i])
            .collect();
        let next = lu.solve(&rhs)?;
        for i in 0..n {
            rate[i] = (next[i] - p[i]) / st.dt;
        }
        p = next;
        let (lo, hi) = rate
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), r| (l.min(*r), h.max(*r)));
        if hi - lo <= 1e-9 * hi.abs() {
            reached = true;
            break;
        }
    }
    if !reached {
        return Err(Error::NoPseudoSteadyState(st.max_steps));
    }
    let a_f = mean(&rate, &sys.volumes, |i| i >= nt);
    let q_s = q_bar - st.c_f * st.phi_f * a_f;
    let stationary = MfProblem::stationary(&sys, q_s);
    let ps = solve_flow_with(&stationary, SolverChoice::Direct)?.pressure;
    let centered = |v: &[f64]| {
        let m = mean(v, &sys.volumes, |_| true);
        v.iter().map(|x| x - m).collect::<Vec<_>>()
    };
    let (pt, ps) = (centered(&p), centered(&ps));
    let norm = ps.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dev = pt
        .iter()
        .zip(&ps)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(dev / norm)
}

impl MmProblem {
    fn mesh(&self) -> Result<TriMesh> {
        let d = self.domain;
        let iface = vec![(Point::new(self.x_mid, d.y0), Point::new(self.x_mid, d.y1))];
        fine_system(d, iface, self.fracture.as_ref(), self.h_fine)
    }

    pub fn solve(&self) -> Result<LocalSolution> {
        let mesh = self.mesh()?;
        let nt = mesh.triangles.len();
        let in_m1: Vec<bool> = (0..nt).map(|t| mesh.centroid(t).x < self.x_mid).collect();
        let perm: Vec<(f64, f64)> = in_m1
            .iter()
            .map(|m1| if *m1 { self.k1 } else { self.k2 })
            .collect();
        let props: Vec<FractureProps> = self.fracture.iter().map(|f| f.props()).collect();
        let sys = DfmSystem::new(&mesh, &perm, &props);
        let d = self.domain;
        let tol = 1e-9 * d.width();
        let problem = sys.flow_problem(|e| {
            if (e.midpoint.x - d.x0).abs() < tol {
                Some(BoundaryValue::Dirichlet(1.0))
            } else if (e.midpoint.x - d.x1).abs() < tol {
                Some(BoundaryValue::Neumann(1.0))
            } else {
                None
            }
        });
        let flow = solve_flow_with(&problem, SolverChoice::Direct)?;
        let x_mid = self.x_mid;
        let flux = sys.interface_flux(
            &mesh,
            &flow.connection_flux,
            |a, b| (a.x - x_mid).abs() < tol && (b.x - x_mid).abs() < tol,
            |c| c.x - x_mid,
        );
        let p1 = mean(&flow.pressure[..nt], &sys.volumes[..nt], |t| in_m1[t]);
        let p2 = mean(&flow.pressure[..nt], &sys.volumes[..nt], |t| !in_m1[t]);
        let scale = flow.pressure.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let t = extract(flux, p1 - p2, scale)?;
        Ok(LocalSolution {
            mesh,
            system: sys,
            problem,
            flow,
            transmissibility: t,
            flux,
            averages: (p1, p2),
        })
    }
}

/// Pieces of the fractures inside `rect`; at most one fracture may enter.
pub(crate) fn fracture_in(
    rect: &Rect,
    fractures: &[FractureSegment],
) -> Result<Option<(usize, Point, Point)>> {
    let mut found = None;
    let min_len = 1e-12 * rect.diagonal();
    for (id, f) in fractures.iter().enumerate() {
        if let Some((t0, t1)) = clip_segment(f.a, f.b, rect) {
            let (a, b) = (f.a.lerp(f.b, t0), f.a.lerp(f.b, t1));
            if a.dist(b) <= min_len {
                continue;
            }
            if found.is_some() {
                return Err(Error::Unsupported(
                    "more than one fracture in a local domain".into(),
                ));
            }
            found = Some((id, a, b));
        }
    }
    Ok(found)
}

/// Maps physical coordinates of a local domain to normalized ones.
#[derive(Clone, Copy, Debug)]
struct Frame {
    origin: Point,
    scale: f64,
    swap: bool,
}

/// Rounds to a multiple of 2^-36 so that scaled copies of a local domain map
/// to bitwise identical normalized problems.
fn snap(v: f64) -> f64 {
    const GRID: f64 = (1u64 << 36) as f64;
    (v * GRID).round() / GRID
}

/// Rounds to 36 significant bits.
fn snap_relative(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    let e = v.abs().log2().floor();
    let unit = (e - 36.0).exp2();
    (v / unit).round() * unit
}

impl Frame {
    fn map(&self, p: Point) -> Point {
        let q = (p - self.origin) * (1.0 / self.scale);
        let q = Point::new(snap(q.x), snap(q.y));
        if self.swap {
            Point::new(q.y, q.x)
        } else {
            q
        }
    }

    fn fracture(&self, f: &FractureSegment, a: Point, b: Point) -> LocalFracture {
        LocalFracture {
            a: self.map(a),
            b: self.map(b),
            aperture: snap_relative(f.aperture / self.scale),
            k_tau: f.k_tau,
            k_n: f.k_n,
        }
    }
}

/// Normalized M-F problem of cut cell `cell`.
pub fn mf_problem_for_cell(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    cell: usize,
    h_fine: f64,
) -> Result<MfProblem> {
    let rect = grid.rect(cell);
    let frame = Frame {
        origin: Point::new(rect.x0, rect.y0),
        scale: grid.dx,
        swap: false,
    };
    let (id, a, b) = fracture_in(&rect, fractures)?
        .ok_or_else(|| Error::Invalid(format!("cell {cell} is not cut")))?;
    Ok(MfProblem {
        domain: Rect::new(0.0, 0.0, 1.0, snap(rect.height() / grid.dx)),
        kx: grid.kx[cell],
        ky: grid.ky[cell],
        fracture: frame.fracture(&fractures[id], a, b),
        h_fine,
    })
}

/// Normalized M-M problem of an interior face; horizontal faces are rotated
/// onto a vertical interface with `m1` the lower cell.
pub fn mm_problem_for_face(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    face: Face,
    h_fine: f64,
) -> Result<MmProblem> {
    let (Some(c1), Some(c2)) = grid.face_cells(face) else {
        return Err(Error::Invalid(format!("{face:?} is a boundary face")));
    };
    let (r1, r2) = (grid.rect(c1), grid.rect(c2));
    let rect = Rect::new(
        r1.x0.min(r2.x0),
        r1.y0.min(r2.y0),
        r1.x1.max(r2.x1),
        r1.y1.max(r2.y1),
    );
    let swap = !face.is_vertical();
    let frame = Frame {
        origin: Point::new(rect.x0, rect.y0),
        scale: grid.dx,
        swap,
    };
    let fracture =
        fracture_in(&rect, fractures)?.map(|(id, a, b)| frame.fracture(&fractures[id], a, b));
    let k = |c: usize| {
        if swap {
            (grid.ky[c], grid.kx[c])
        } else {
            (grid.kx[c], grid.ky[c])
        }
    };
    let ext = frame.map(Point::new(rect.x1, rect.y1));
    Ok(MmProblem {
        domain: Rect::new(0.0, 0.0, ext.x, ext.y),
        x_mid: 0.5 * ext.x,
        k1: k(c1),
        k2: k(c2),
        fracture,
        h_fine,
    })
}

fn quantize(v: f64) -> i64 {
    (v * 1e12).round() as i64
}

fn mf_key(p: &MfProblem) -> Vec<i64> {
    let f = &p.fracture;
    let mut k: Vec<i64> = [
        p.domain.x1,
        p.domain.y1,
        f.a.x,
        f.a.y,
        f.b.x,
        f.b.y,
        p.h_fine,
    ]
    .map(quantize)
    .to_vec();
    k.extend([p.kx, p.ky, f.aperture, f.k_tau, f.k_n].map(|v| v.to_bits() as i64));
    k
}

fn mm_key(p: &MmProblem) -> Vec<i64> {
    let mut k: Vec<i64> = [p.domain.x1, p.domain.y1, p.x_mid, p.h_fine]
        .map(quantize)
        .to_vec();
    k.extend([p.k1.0, p.k1.1, p.k2.0, p.k2.1].map(|v| v.to_bits() as i64));
    if let Some(f) = &p.fracture {
        k.extend([f.a.x, f.a.y, f.b.x, f.b.y].map(quantize));
        k.extend([f.aperture, f.k_tau, f.k_n].map(|v| v.to_bits() as i64));
    }
    k
}

/// Solves each distinct problem once (in parallel) and returns one result per input.
fn solve_unique<P: Sync>(
    problems: &[P],
    key: impl Fn(&P) -> Vec<i64>,
    solve: impl Fn(&P) -> Result<f64> + Sync + Send,
) -> Result<Vec<f64>> {
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut unique: Vec<&P> = Vec::new();
    let slot: Vec<usize> = problems
        .iter()
        .map(|p| {
            *index.entry(key(p)).or_insert_with(|| {
                unique.push(p);
                unique.len() - 1
            })
        })
        .collect();
    let results = par_map(&unique, |p| solve(p));
    let values: Vec<f64> = results.into_iter().collect::<Result<_>>()?;
    Ok(slot.into_iter().map(|s| values[s]).collect())
}

/// Interior faces with at least one cut neighbor, in grid face order.
pub fn near_fracture_faces(grid: &CoarseGrid, cut: &[bool]) -> Vec<Face> {
    grid.interior_faces()
        .into_iter()
        .filter(|f| {
            let (a, b) = grid.face_cells(*f);
            cut[a.unwrap()] || cut[b.unwrap()]
        })
        .collect()
}

pub fn build_ledfm(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    bc: &DomainBoundary,
    mu: f64,
    h_fine: f64,
) -> Result<EmbeddedModel> {
    if !grid.is_square() {
        return Err(Error::Unsupported(
            "LEDFM requires square coarse cells".into(),
        ));
    }
    if !grid.is_isotropic() {
        return Err(Error::Unsupported(
            "LEDFM requires isotropic matrix permeability".into(),
        ));
    }
    if !(h_fine > 0.0 && h_fine < 1.0) {
        return Err(Error::Invalid("h_fine must lie in (0, 1)".into()));
    }
    let mut model = base_model(grid, fractures, bc, mu)?;
    let mut cut = vec![false; grid.n_cells()];
    for c in &model.cuts {
        cut[c.cell] = true;
    }

    let mf: Vec<MfProblem> = model
        .cuts
        .iter()
        .map(|c| mf_problem_for_cell(grid, fractures, c.cell, h_fine))
        .collect::<Result<_>>()?;
    let t_mf = solve_unique(&mf, mf_key, |p| p.solve().map(|s| s.transmissibility))?;

    let faces = near_fracture_faces(grid, &cut);
    let mm: Vec<MmProblem> = faces
        .iter()
        .map(|f| mm_problem_for_face(grid, fractures, *f, h_fine))
        .collect::<Result<_>>()?;
    let t_mm = solve_unique(&mm, mm_key, |p| p.solve().map(|s| s.transmissibility))?;

    let nm = model.n_matrix();
    for (k, (c, t)) in model.cuts.iter().zip(&t_mf).enumerate() {
        model
            .problem
            .connections
            .push(Connection::new(c.cell, nm + k, *t, ConnectionKind::MF));
    }
    for (face, t) in faces.iter().zip(&t_mm) {
        let idx = model.face_connection[face];
        model.problem.connections[idx].trans = *t;
    }
    Ok(model)
}
