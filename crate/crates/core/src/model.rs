//! Coarse embedded-fracture models assembled as connection lists.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fv::{
    fracture_fracture, half_transmissibility_cartesian, harmonic, BoundaryFace, BoundaryValue,
    Connection, ConnectionKind, FlowProblem, FlowSolution, Scalar,
};
use crate::geometry::Point;
use crate::grid::{intersect_fracture, CoarseGrid, CutCell, Face, FractureSegment};
use crate::projection::{build_projection_path, PathRule, ProjectionPath};

/// Condition on one side of the rectangular domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SideCondition {
    Pressure(f64),
    /// Outward volumetric flux per unit face length.
    Flux(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainBoundary {
    pub left: SideCondition,
    pub right: SideCondition,
    pub bottom: SideCondition,
    pub top: SideCondition,
}

impl DomainBoundary {
    /// Pressure on bottom and top, no flow on the sides.
    pub fn bottom_top(p_bottom: f64, p_top: f64) -> Self {
        Self {
            left: SideCondition::Flux(0.0),
            right: SideCondition::Flux(0.0),
            bottom: SideCondition::Pressure(p_bottom),
            top: SideCondition::Pressure(p_top),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PedfmVariant {
    /// Plain harmonic averaging of matrix and fracture permeabilities.
    Legacy,
    /// Distance-weighted half-transmissibility combination.
    Updated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Edfm,
    Pedfm(PedfmVariant),
    Ledfm,
    LedfmMsfv,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Edfm => "edfm",
            Method::Pedfm(PedfmVariant::Legacy) => "pedfm-legacy",
            Method::Pedfm(PedfmVariant::Updated) => "pedfm-updated",
            Method::Ledfm => "ledfm",
            Method::LedfmMsfv => "ledfm-msfv",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelOptions {
    /// Target fine edge length of local problems on the normalized domain.
    pub h_fine: f64,
    pub path_rule: PathRule,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            h_fine: 1.0 / 32.0,
            path_rule: PathRule::Repaired,
        }
    }
}

/// A coarse embedded model: matrix cells first, then fracture cells in cut order.
#[derive(Clone, Debug)]
pub struct EmbeddedModel {
    pub grid: CoarseGrid,
    pub fractures: Vec<FractureSegment>,
    pub cuts: Vec<CutCell>,
    pub problem: FlowProblem,
    /// Matrix–matrix connection index of every interior face.
    pub face_connection: HashMap<Face, usize>,
    /// Multi-point flux stencil index of faces whose two-point connection was replaced.
    pub face_stencil: HashMap<Face, usize>,
    /// Boundary entries of `problem.boundary`, paired with their grid face.
    pub boundary_faces: Vec<Face>,
    pub path: Option<ProjectionPath>,
}

impl EmbeddedModel {
    pub fn n_matrix(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn fracture_cell(&self, k: usize) -> usize {
        self.grid.n_cells() + k
    }

    pub fn is_cut(&self, cell: usize) -> bool {
        self.cuts.iter().any(|c| c.cell == cell)
    }

    /// Bulk volume per cell; fracture cells use the aperture cross-section.
    pub fn cell_volumes(&self) -> Vec<f64> {
        let mut v = vec![self.grid.cell_area(); self.grid.n_cells()];
        v.extend(
            self.cuts
                .iter()
                .map(|c| c.length * self.fractures[c.fracture].aperture),
        );
        v
    }

    pub fn porosities(&self) -> Vec<f64> {
        let mut v = self.grid.phi.clone();
        v.extend(self.cuts.iter().map(|c| self.grid.phi[c.cell]));
        v
    }

    pub fn cell_centers(&self) -> Vec<Point> {
        let mut v: Vec<Point> = (0..self.grid.n_cells())
            .map(|c| self.grid.center(c))
            .collect();
        v.extend(self.cuts.iter().map(|c| c.midpoint()));
        v
    }
}

fn side_value(cond: SideCondition, face_len: f64) -> Option<BoundaryValue> {
    match cond {
        SideCondition::Pressure(p) => Some(BoundaryValue::Dirichlet(p)),
        SideCondition::Flux(g) if g != 0.0 => Some(BoundaryValue::Neumann(g * face_len)),
        SideCondition::Flux(_) => None,
    }
}

/// Standard TPFA transmissibility across an interior face.
pub fn tpfa_face_transmissibility(grid: &CoarseGrid, face: Face) -> f64 {
    let (a, b) = grid.face_cells(face);
    let (a, b) = (a.expect("interior face"), b.expect("interior face"));
    match face {
        Face::Vertical { .. } => harmonic(
            half_transmissibility_cartesian(grid.kx[a], grid.dy, grid.dx),
            half_transmissibility_cartesian(grid.kx[b], grid.dy, grid.dx),
        ),
        Face::Horizontal { .. } => harmonic(
            half_transmissibility_cartesian(grid.ky[a], grid.dx, grid.dy),
            half_transmissibility_cartesian(grid.ky[b], grid.dx, grid.dy),
        ),
    }
}

/// Intersects all fractures with the grid; fractures must not share a cell.
pub fn cut_all(grid: &CoarseGrid, fractures: &[FractureSegment]) -> Result<Vec<CutCell>> {
    let mut cuts = Vec::new();
    for (id, f) in fractures.iter().enumerate() {
        cuts.extend(intersect_fracture(grid, f, id)?);
    }
    Ok(cuts)
}

/// Plain TPFA matrix model with fracture cells and their FF chain but no coupling.
pub fn base_model(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    bc: &DomainBoundary,
    viscosity: f64,
) -> Result<EmbeddedModel> {
    let cuts = cut_all(grid, fractures)?;
    let n = grid.n_cells() + cuts.len();
    let mut problem = FlowProblem::new(n);
    problem.viscosity = viscosity;
    let mut face_connection = HashMap::new();
    for face in grid.interior_faces() {
        let (a, b) = grid.face_cells(face);
        face_connection.insert(face, problem.connections.len());
        problem.connections.push(Connection::new(
            a.unwrap(),
            b.unwrap(),
            tpfa_face_transmissibility(grid, face),
            ConnectionKind::MM,
        ));
    }
    let mut boundary_faces = Vec::new();
    let mut push_boundary = |face: Face, cell: usize, cond: SideCondition| {
        let (k, len, spacing) = match face {
            Face::Vertical { .. } => (grid.kx[cell], grid.dy, grid.dx),
            Face::Horizontal { .. } => (grid.ky[cell], grid.dx, grid.dy),
        };
        if let Some(value) = side_value(cond, len) {
            problem.boundary.push(BoundaryFace {
                cell,
                trans: half_transmissibility_cartesian(k, len, spacing),
                value,
            });
            boundary_faces.push(face);
        }
    };
    for j in 0..grid.ny {
        push_boundary(Face::Vertical { i: 0, j }, grid.index(0, j), bc.left);
        push_boundary(
            Face::Vertical { i: grid.nx, j },
            grid.index(grid.nx - 1, j),
            bc.right,
        );
    }
    for i in 0..grid.nx {
        push_boundary(Face::Horizontal { i, j: 0 }, grid.index(i, 0), bc.bottom);
        push_boundary(
            Face::Horizontal { i, j: grid.ny },
            grid.index(i, grid.ny - 1),
            bc.top,
        );
    }
    let nm = grid.n_cells();
    for k in 1..cuts.len() {
        let (c0, c1) = (&cuts[k - 1], &cuts[k]);
        if c0.fracture != c1.fracture {
            continue;
        }
        let f = &fractures[c1.fracture];
        let t = fracture_fracture(f.k_tau, c0.length, f.k_tau, c1.length, f.aperture);
        problem
            .connections
            .push(Connection::new(nm + k - 1, nm + k, t, ConnectionKind::FF));
    }
    Ok(EmbeddedModel {
        grid: grid.clone(),
        fractures: fractures.to_vec(),
        cuts,
        problem,
        face_connection,
        face_stencil: HashMap::new(),
        boundary_faces,
        path: None,
    })
}

/// nᵀ K n for a diagonal tensor.
pub fn normal_permeability(kx: f64, ky: f64, n: Point) -> f64 {
    kx * n.x * n.x + ky * n.y * n.y
}

pub fn add_edfm_coupling(model: &mut EmbeddedModel) {
    let nm = model.n_matrix();
    for (k, cut) in model.cuts.iter().enumerate() {
        let n = model.fractures[cut.fracture].normal();
        let kn = normal_permeability(model.grid.kx[cut.cell], model.grid.ky[cut.cell], n);
        model.problem.connections.push(Connection::new(
            cut.cell,
            nm + k,
            2.0 * cut.ci * kn,
            ConnectionKind::MF,
        ));
    }
}

/// Plain harmonic mean `2ab / (a + b)`.
pub fn harmonic_mean<T: Scalar>(a: T, b: T) -> T {
    T::two() * a.clone() * b.clone() / (a + b)
}

pub fn pedfm_mf_transmissibility<T: Scalar>(
    variant: PedfmVariant,
    ci: T,
    k_m: T,
    k_f: T,
    length: T,
    aperture: T,
) -> T {
    match variant {
        PedfmVariant::Updated => T::harmonic(ci * k_m, T::two() * length * k_f / aperture),
        PedfmVariant::Legacy => ci * harmonic_mean(k_m, k_f),
    }
}

pub fn pedfm_nnmf_transmissibility<T: Scalar>(
    variant: PedfmVariant,
    area: T,
    distance: T,
    k_m: T,
    k_f: T,
    length: T,
    aperture: T,
) -> T {
    match variant {
        PedfmVariant::Updated => {
            T::harmonic(area / distance * k_m, T::two() * length * k_f / aperture)
        }
        PedfmVariant::Legacy => area / distance * harmonic_mean(k_m, k_f),
    }
}

pub fn add_pedfm_coupling(
    model: &mut EmbeddedModel,
    variant: PedfmVariant,
    rule: PathRule,
) -> Result<()> {
    if !model.grid.is_isotropic() {
        return Err(Error::Unsupported(
            "pEDFM requires isotropic matrix permeability".into(),
        ));
    }
    let path = build_projection_path(&model.grid, &model.cuts, rule)?;
    let nm = model.n_matrix();
    let mut projected: HashMap<Face, f64> = HashMap::new();
    for (k, (cut, faces)) in model.cuts.iter().zip(&path.cells).enumerate() {
        let f = &model.fractures[cut.fracture];
        let km = model.grid.kx[cut.cell];
        let t = pedfm_mf_transmissibility(variant, cut.ci, km, f.k_n, cut.length, f.aperture);
        model
            .problem
            .connections
            .push(Connection::new(cut.cell, nm + k, t, ConnectionKind::MF));
        for proj in faces {
            let Some(target) = proj.target else {
                log::debug!(
                    "missing non-neighbour for fracture cell {k} on boundary face {:?}",
                    proj.face
                );
                continue;
            };
            let t = pedfm_nnmf_transmissibility(
                variant,
                proj.area,
                proj.distance,
                model.grid.kx[target],
                f.k_n,
                cut.length,
                f.aperture,
            );
            model.problem.connections.push(Connection::new(
                target,
                nm + k,
                t,
                ConnectionKind::NNMF,
            ));
            *projected.entry(proj.face).or_insert(0.0) += proj.area;
        }
    }
    let mut faces: Vec<_> = projected.into_iter().collect();
    faces.sort_by(|a, b| a.0.cmp(&b.0));
    for (face, area) in faces {
        let len = model.grid.face_length(face);
        let idx = model.face_connection[&face];
        let frac = (1.0 - area / len).max(0.0);
        model.problem.connections[idx].trans = tpfa_face_transmissibility(&model.grid, face) * frac;
    }
    model.path = Some(path);
    Ok(())
}

pub fn build_edfm(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    bc: &DomainBoundary,
    mu: f64,
) -> Result<EmbeddedModel> {
    let mut m = base_model(grid, fractures, bc, mu)?;
    add_edfm_coupling(&mut m);
    Ok(m)
}

pub fn build_pedfm(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    bc: &DomainBoundary,
    mu: f64,
    variant: PedfmVariant,
    rule: PathRule,
) -> Result<EmbeddedModel> {
    let mut m = base_model(grid, fractures, bc, mu)?;
    add_pedfm_coupling(&mut m, variant, rule)?;
    Ok(m)
}

/// Builds the coarse model for any embedded method.
pub fn build_model(
    grid: &CoarseGrid,
    fractures: &[FractureSegment],
    bc: &DomainBoundary,
    mu: f64,
    method: Method,
    opts: &ModelOptions,
) -> Result<EmbeddedModel> {
    match method {
        Method::Edfm => build_edfm(grid, fractures, bc, mu),
        Method::Pedfm(v) => build_pedfm(grid, fractures, bc, mu, v, opts.path_rule),
        Method::Ledfm => crate::ledfm::build_ledfm(grid, fractures, bc, mu, opts.h_fine),
        Method::LedfmMsfv => crate::msfv::build_ledfm_msfv(grid, fractures, bc, mu, opts.h_fine),
    }
}

/// Net flux leaving each fracture cell into the matrix (MF and NNMF connections).
pub fn fracture_exchange(model: &EmbeddedModel, sol: &FlowSolution) -> Vec<f64> {
    let nm = model.n_matrix();
    let mut out = vec![0.0; model.cuts.len()];
    for (c, f) in model.problem.connections.iter().zip(&sol.connection_flux) {
        if matches!(c.kind, ConnectionKind::MF | ConnectionKind::NNMF) {
            // matrix cell is `a`, fracture cell is `b`
            out[c.b - nm] -= f;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::solve_flow;
    use approx::assert_relative_eq;

    #[test]
    fn edfm_unit_cell_value() {
        let g = CoarseGrid::uniform(1, 1, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let f = FractureSegment::new(Point::new(0.0, 0.5), Point::new(1.0, 0.5), 1e-4, 1.0, 1.0)
            .unwrap();
        let m = build_edfm(&g, &[f], &DomainBoundary::bottom_top(1.0, 0.0), 1.0).unwrap();
        let mf: Vec<_> = m
            .problem
            .connections
            .iter()
            .filter(|c| c.kind == ConnectionKind::MF)
            .collect();
        assert_eq!(mf.len(), 1);
        assert_relative_eq!(mf[0].trans, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn anisotropic_normal_form() {
        let n = Point::new(1.0, 1.0) * (1.0 / 2f64.sqrt());
        assert_relative_eq!(normal_permeability(2.0, 4.0, n), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn no_fracture_is_linear() {
        let g = CoarseGrid::uniform(4, 4, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let m = build_edfm(&g, &[], &DomainBoundary::bottom_top(1.0, 0.0), 1.0).unwrap();
        let s = solve_flow(&m.problem).unwrap();
        for c in 0..g.n_cells() {
            assert_relative_eq!(s.pressure[c], 1.0 - g.center(c).y, epsilon = 1e-13);
        }
    }

    #[test]
    fn full_face_projection_seals_face() {
        let g = CoarseGrid::uniform(3, 3, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let f = FractureSegment::new(Point::new(0.0, 0.5), Point::new(1.0, 0.5), 1e-4, 1e-8, 1e-8)
            .unwrap();
        let m = build_pedfm(
            &g,
            &[f],
            &DomainBoundary::bottom_top(1.0, 0.0),
            1.0,
            PedfmVariant::Updated,
            PathRule::Repaired,
        )
        .unwrap();
        for i in 0..3 {
            let idx = m.face_connection[&Face::Horizontal { i, j: 1 }];
            assert_eq!(m.problem.connections[idx].trans, 0.0);
        }
    }
}
