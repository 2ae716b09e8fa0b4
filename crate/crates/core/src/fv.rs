//! Connection-list finite-volume engine.

use crate::error::{Error, Result};
use crate::sparse::{solve, CsrMatrix, SolverChoice};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConnectionKind {
    MM,
    FF,
    MF,
    NNMF,
}

/// Two-point coupling: flux from `a` to `b` is `trans / μ · (p_a − p_b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Connection {
    pub a: usize,
    pub b: usize,
    pub trans: f64,
    pub kind: ConnectionKind,
}

impl Connection {
    pub fn new(a: usize, b: usize, trans: f64, kind: ConnectionKind) -> Self {
        Self { a, b, trans, kind }
    }
}

/// Multi-point flux from `a` to `b`: `Σ coeff · p[cell] / μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxStencil {
    pub a: usize,
    pub b: usize,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryValue {
    /// Prescribed pressure, coupled through the face half-transmissibility.
    Dirichlet(f64),
    /// Prescribed total outward volumetric flux through the face.
    Neumann(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub trans: f64,
    pub value: BoundaryValue,
}

/// T_a T_b / (T_a + T_b), zero if either half vanishes.
pub fn harmonic(ta: f64, tb: f64) -> f64 {
    if ta <= 0.0 || tb <= 0.0 {
        0.0
    } else if ta.is_infinite() {
        tb
    } else if tb.is_infinite() {
        ta
    } else {
        ta * tb / (ta + tb)
    }
}

/// Scalar the transmissibility formulas are written over: `f64` for the
/// solvers, exact rationals for closed-form checks.
pub trait Scalar: num_traits::Num + Clone + PartialOrd {
    fn two() -> Self {
        Self::one() + Self::one()
    }
    fn harmonic(ta: Self, tb: Self) -> Self;
}

impl Scalar for f64 {
    fn harmonic(ta: f64, tb: f64) -> f64 {
        harmonic(ta, tb)
    }
}

impl Scalar for num_rational::BigRational {
    fn harmonic(ta: Self, tb: Self) -> Self {
        let zero = <Self as num_traits::Zero>::zero();
        if ta <= zero || tb <= zero {
            zero
        } else {
            ta.clone() * tb.clone() / (ta + tb)
        }
    }
}

/// Half-transmissibility of a Cartesian cell towards a face: `2 k · face / spacing`.
pub fn half_transmissibility_cartesian(k: f64, face: f64, spacing: f64) -> f64 {
    2.0 * k * face / spacing
}

/// Half-transmissibility of a lower-dimensional fracture cell along its axis.
pub fn half_transmissibility_fracture(k_tau: f64, aperture: f64, length: f64) -> f64 {
    2.0 * k_tau * aperture / length
}

/// Fracture–fracture transmissibility of two consecutive fracture cells.
pub fn fracture_fracture(k1: f64, l1: f64, k2: f64, l2: f64, aperture: f64) -> f64 {
    2.0 * k1 * k2 * aperture / (k1 * l2 + k2 * l1)
}

#[derive(Clone, Debug, Default)]
pub struct FlowProblem {
    pub n_cells: usize,
    pub connections: Vec<Connection>,
    pub stencils: Vec<FluxStencil>,
    pub boundary: Vec<BoundaryFace>,
    /// Injection rate per cell.
    pub sources: Vec<f64>,
    pub viscosity: f64,
    /// Weights of the null-mean constraint for problems without Dirichlet data.
    pub null_mean: Option<Vec<f64>>,
}

impl FlowProblem {
    pub fn new(n_cells: usize) -> Self {
        Self {
            n_cells,
            sources: vec![0.0; n_cells],
            viscosity: 1.0,
            ..Default::default()
        }
    }

    fn has_dirichlet(&self) -> bool {
        self.boundary
            .iter()
            .any(|b| matches!(b.value, BoundaryValue::Dirichlet(_)) && b.trans > 0.0)
    }

    fn bordered(&self) -> bool {
        self.null_mean.is_some() && self.has_dirichlet()
    }
}

#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Number of cell unknowns; a bordered system has one extra multiplier row.
    pub n_cells: usize,
    /// For pure-Neumann problems the first cell is pinned instead of bordering;
    /// holds the constraint weights and the multiplier.
    pub pinned: Option<(Vec<f64>, f64)>,
}

pub fn assemble(p: &FlowProblem) -> Result<LinearSystem> {
    if !(p.viscosity > 0.0) {
        return Err(Error::Invalid("viscosity must be positive".into()));
    }
    if !p.has_dirichlet() && p.null_mean.is_none() {
        return Err(Error::SingularSystem(
            "no Dirichlet data and no null-mean constraint".into(),
        ));
    }
    let n = p.n_cells;
    let size = n + usize::from(p.bordered());
    let inv_mu = 1.0 / p.viscosity;
    let mut trip = Vec::with_capacity(4 * p.connections.len() + 2 * n);
    let mut rhs = vec![0.0; size];
    for c in &p.connections {
        if c.a == c.b || c.a >= n || c.b >= n {
            return Err(Error::Invalid(format!("bad connection {}-{}", c.a, c.b)));
        }
        let t = c.trans * inv_mu;
        trip.push((c.a, c.a, t));
        trip.push((c.a, c.b, -t));
        trip.push((c.b, c.b, t));
        trip.push((c.b, c.a, -t));
    }
    for s in &p.stencils {
        for &(cell, w) in &s.terms {
            trip.push((s.a, cell, w * inv_mu));
            trip.push((s.b, cell, -w * inv_mu));
        }
    }
    for b in &p.boundary {
        match b.value {
            BoundaryValue::Dirichlet(pd) => {
                let t = b.trans * inv_mu;
                trip.push((b.cell, b.cell, t));
                rhs[b.cell] += t * pd;
            }
            BoundaryValue::Neumann(g) => rhs[b.cell] -= g,
        }
    }
    for (i, q) in p.sources.iter().enumerate() {
        rhs[i] += q;
    }
    for i in 0..n {
        trip.push((i, i, 0.0));
    }
    let mut pinned = None;
    match &p.null_mean {
        Some(w) if p.bordered() => {
            for (i, wi) in w.iter().enumerate() {
                trip.push((i, n, *wi));
                trip.push((n, i, *wi));
            }
        }
        Some(w) => {
            // a dense constraint row ruins the sparse ordering; the kernel is the
            // constant vector, so fix one cell and shift afterwards
            let lambda = rhs.iter().sum::<f64>() / w.iter().sum::<f64>();
            for (r, wi) in rhs.iter_mut().zip(w) {
                *r -= wi * lambda;
            }
            trip.retain(|(i, j, _)| *i != 0 && *j != 0);
            trip.push((0, 0, 1.0));
            rhs[0] = 0.0;
            pinned = Some((w.clone(), lambda));
        }
        None => {}
    }
    Ok(LinearSystem {
        matrix: CsrMatrix::from_triplets(size, trip),
        rhs,
        n_cells: n,
        pinned,
    })
}

#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub pressure: Vec<f64>,
    /// Flux from `a` to `b` for every connection.
    pub connection_flux: Vec<f64>,
    /// Flux from `a` to `b` for every stencil.
    pub stencil_flux: Vec<f64>,
    /// Outward flux for every boundary face.
    pub boundary_flux: Vec<f64>,
    pub multiplier: f64,
}

pub fn solve_system(sys: &LinearSystem, choice: SolverChoice) -> Result<(Vec<f64>, f64)> {
    let mut x = solve(&sys.matrix, &sys.rhs, choice)?;
    if let Some((w, lambda)) = &sys.pinned {
        let shift = x.iter().zip(w).map(|(p, wi)| p * wi).sum::<f64>() / w.iter().sum::<f64>();
        for p in &mut x {
            *p -= shift;
        }
        return Ok((x, *lambda));
    }
    let lambda = if x.len() > sys.n_cells {
        x[sys.n_cells]
    } else {
        0.0
    };
    x.truncate(sys.n_cells);
    Ok((x, lambda))
}

pub fn recover_fluxes(p: &FlowProblem, pressure: &[f64], multiplier: f64) -> FlowSolution {
    let inv_mu = 1.0 / p.viscosity;
    let connection_flux = p
        .connections
        .iter()
        .map(|c| c.trans * inv_mu * (pressure[c.a] - pressure[c.b]))
        .collect();
    let stencil_flux = p
        .stencils
        .iter()
        .map(|s| s.terms.iter().map(|&(c, w)| w * pressure[c]).sum::<f64>() * inv_mu)
        .collect();
    let boundary_flux = p
        .boundary
        .iter()
        .map(|b| match b.value {
            BoundaryValue::Dirichlet(pd) => b.trans * inv_mu * (pressure[b.cell] - pd),
            BoundaryValue::Neumann(g) => g,
        })
        .collect();
    FlowSolution {
        pressure: pressure.to_vec(),
        connection_flux,
        stencil_flux,
        boundary_flux,
        multiplier,
    }
}

pub fn solve_flow(p: &FlowProblem) -> Result<FlowSolution> {
    solve_flow_with(p, SolverChoice::Auto)
}

pub fn solve_flow_with(p: &FlowProblem, choice: SolverChoice) -> Result<FlowSolution> {
    let sys = assemble(p)?;
    let (pressure, lambda) = solve_system(&sys, choice)?;
    Ok(recover_fluxes(p, &pressure, lambda))
}

impl FlowSolution {
    /// Per-cell net outflow minus source (including the multiplier reaction).
    pub fn cell_imbalance(&self, p: &FlowProblem) -> Vec<f64> {
        let mut r: Vec<f64> = p.sources.iter().map(|q| -q).collect();
        for (c, f) in p.connections.iter().zip(&self.connection_flux) {
            r[c.a] += f;
            r[c.b] -= f;
        }
        for (s, f) in p.stencils.iter().zip(&self.stencil_flux) {
            r[s.a] += f;
            r[s.b] -= f;
        }
        for (b, f) in p.boundary.iter().zip(&self.boundary_flux) {
            r[b.cell] += f;
        }
        if let Some(w) = &p.null_mean {
            for (ri, wi) in r.iter_mut().zip(w) {
                *ri += wi * self.multiplier;
            }
        }
        r
    }

    /// Sum of inflows through boundary faces.
    pub fn boundary_inflow(&self) -> f64 {
        self.boundary_flux
            .iter()
            .filter(|f| **f < 0.0)
            .map(|f| -f)
            .sum()
    }

    /// Largest cell imbalance relative to the total throughput.
    pub fn max_relative_imbalance(&self, p: &FlowProblem) -> f64 {
        let scale = self
            .boundary_inflow()
            .max(p.sources.iter().map(|q| q.abs()).sum::<f64>())
            .max(f64::MIN_POSITIVE);
        self.cell_imbalance(p)
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()))
            / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain3() -> FlowProblem {
        let mut p = FlowProblem::new(3);
        p.connections
            .push(Connection::new(0, 1, 1.0, ConnectionKind::MM));
        p.connections
            .push(Connection::new(1, 2, 1.0, ConnectionKind::MM));
        p.boundary.push(BoundaryFace {
            cell: 0,
            trans: 2.0,
            value: BoundaryValue::Dirichlet(0.0),
        });
        p.boundary.push(BoundaryFace {
            cell: 2,
            trans: 2.0,
            value: BoundaryValue::Dirichlet(1.0),
        });
        p
    }

    #[test]
    fn chain_is_linear() {
        let p = chain3();
        let s = solve_flow(&p).unwrap();
        for (a, b) in s.pressure.iter().zip([1.0 / 6.0, 0.5, 5.0 / 6.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
        for f in &s.connection_flux {
            assert_relative_eq!(*f, -1.0 / 3.0, epsilon = 1e-14);
        }
        assert!(s.max_relative_imbalance(&p) < 1e-12);
    }

    #[test]
    fn pure_neumann_needs_constraint() {
        let mut p = chain3();
        p.boundary.clear();
        assert!(matches!(assemble(&p), Err(Error::SingularSystem(_))));
        p.null_mean = Some(vec![1.0; 3]);
        let s = solve_flow(&p).unwrap();
        assert!(s.pressure.iter().all(|v| v.abs() < 1e-14));
        p.sources = vec![1.0, 0.0, -1.0];
        let s = solve_flow(&p).unwrap();
        assert!(s.pressure.iter().sum::<f64>().abs() < 1e-12);
        assert!(s.multiplier.abs() < 1e-12);
        assert!(s.max_relative_imbalance(&p) < 1e-12);
    }

    #[test]
    fn transmissibility_formulas() {
        assert_eq!(half_transmissibility_cartesian(1.0, 1.0, 1.0), 2.0);
        assert_eq!(half_transmissibility_cartesian(4.0, 1.0, 2.0), 4.0);
        assert_relative_eq!(
            half_transmissibility_fracture(1e4, 1e-4, 0.1),
            20.0,
            epsilon = 1e-12
        );
        assert_eq!(harmonic(2.0, 2.0), 1.0);
        assert_eq!(harmonic(2.0, 6.0), 1.5);
        assert_relative_eq!(harmonic(3.0, 1e30), 3.0, epsilon = 1e-12);
        assert_relative_eq!(
            fracture_fracture(1e4, 0.1, 1e4, 0.1, 1e-4),
            10.0,
            epsilon = 1e-12
        );
    }
}
