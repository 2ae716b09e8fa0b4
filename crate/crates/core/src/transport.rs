//! Implicit first-order upwind tracer transport on a solved connection list.

use crate::error::{Error, Result};
use crate::fv::{FlowProblem, FlowSolution};
use crate::sparse::{CsrMatrix, Factorization};

/// Boundary faces whose flux points into the domain.
pub fn detect_inflow(boundary_flux: &[f64]) -> Vec<usize> {
    boundary_flux
        .iter()
        .enumerate()
        .filter(|(_, f)| **f < 0.0)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Change of the tracer mass in the domain.
    pub mass_change: f64,
    pub inflow: f64,
    pub outflow: f64,
}

impl StepReport {
    pub fn relative_imbalance(&self) -> f64 {
        let scale = self
            .inflow
            .abs()
            .max(self.outflow.abs())
            .max(self.mass_change.abs())
            .max(f64::MIN_POSITIVE);
        (self.mass_change - (self.inflow - self.outflow)).abs() / scale
    }
}

/// Backward-Euler upwind transport with a fixed time step and steady velocity.
pub struct Tracer {
    pub concentration: Vec<f64>,
    pub pore_volume: Vec<f64>,
    pub dt: f64,
    pub c_inflow: f64,
    /// `(cell, outward flux)` of every outflow boundary face and sink.
    outlets: Vec<(usize, f64)>,
    /// Inflow mass rate per cell.
    inlet_rate: Vec<f64>,
    lu: Factorization,
}

impl Tracer {
    pub fn new(
        problem: &FlowProblem,
        flow: &FlowSolution,
        pore_volume: Vec<f64>,
        c_inflow: f64,
        dt: f64,
    ) -> Result<Self> {
        let n = problem.n_cells;
        if pore_volume.len() != n || pore_volume.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Invalid(
                "pore volumes must be positive, one per cell".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::Invalid("time step must be positive".into()));
        }
        let mut trip: Vec<(usize, usize, f64)> =
            (0..n).map(|i| (i, i, pore_volume[i] / dt)).collect();
        let mut upwind = |a: usize, b: usize, f: f64| {
            let (up, down, q) = if f >= 0.0 { (a, b, f) } else { (b, a, -f) };
            trip.push((up, up, q));
            trip.push((down, up, -q));
        };
        for (c, f) in problem.connections.iter().zip(&flow.connection_flux) {
            upwind(c.a, c.b, *f);
        }
        for (s, f) in problem.stencils.iter().zip(&flow.stencil_flux) {
            upwind(s.a, s.b, *f);
        }
        let mut outlets = Vec::new();
        let mut inlet_rate = vec![0.0; n];
        for (b, f) in problem.boundary.iter().zip(&flow.boundary_flux) {
            if *f > 0.0 {
                trip.push((b.cell, b.cell, *f));
                outlets.push((b.cell, *f));
            } else if *f < 0.0 {
                inlet_rate[b.cell] += -f * c_inflow;
            }
        }
        for (i, q) in problem.sources.iter().enumerate() {
            if *q < 0.0 {
                trip.push((i, i, -q));
                outlets.push((i, -q));
            }
        }
        let lu = Factorization::new(&CsrMatrix::from_triplets(n, trip))?;
        Ok(Self {
            concentration: vec![0.0; n],
            pore_volume,
            dt,
            c_inflow,
            outlets,
            inlet_rate,
            lu,
        })
    }

    pub fn mass(&self) -> f64 {
        self.concentration
            .iter()
            .zip(&self.pore_volume)
            .map(|(c, v)| c * v)
            .sum()
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let before = self.mass();
        let rhs: Vec<f64> = (0..self.concentration.len())
            .map(|i| self.pore_volume[i] / self.dt * self.concentration[i] + self.inlet_rate[i])
            .collect();
        self.concentration = self.lu.solve(&rhs)?;
        let inflow = self.dt * self.inlet_rate.iter().sum::<f64>();
        let outflow = self.dt
            * self
                .outlets
                .iter()
                .map(|(c, f)| f * self.concentration[*c])
                .sum::<f64>();
        Ok(StepReport {
            mass_change: self.mass() - before,
            inflow,
            outflow,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::{solve_flow, BoundaryFace, BoundaryValue, Connection, ConnectionKind};

    fn column(n: usize, p_in: f64) -> (FlowProblem, FlowSolution) {
        let mut p = FlowProblem::new(n);
        for i in 0..n - 1 {
            p.connections
                .push(Connection::new(i, i + 1, 1.0, ConnectionKind::MM));
        }
        p.boundary.push(BoundaryFace {
            cell: 0,
            trans: 2.0,
            value: BoundaryValue::Dirichlet(p_in),
        });
        p.boundary.push(BoundaryFace {
            cell: n - 1,
            trans: 2.0,
            value: BoundaryValue::Dirichlet(0.0),
        });
        let s = solve_flow(&p).unwrap();
        (p, s)
    }

    #[test]
    fn zero_velocity_keeps_state() {
        let (p, s) = column(4, 0.0);
        let mut t = Tracer::new(&p, &s, vec![1.0; 4], 1.0, 0.1).unwrap();
        t.concentration = vec![0.1, 0.2, 0.3, 0.4];
        t.step().unwrap();
        for (c, e) in t.concentration.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((c - e).abs() < 1e-15);
        }
    }

    #[test]
    fn single_cell_tends_to_inflow() {
        let mut p = FlowProblem::new(1);
        p.boundary.push(BoundaryFace {
            cell: 0,
            trans: 1.0,
            value: BoundaryValue::Dirichlet(1.0),
        });
        p.boundary.push(BoundaryFace {
            cell: 0,
            trans: 1.0,
            value: BoundaryValue::Dirichlet(0.0),
        });
        let s = solve_flow(&p).unwrap();
        let mut t = Tracer::new(&p, &s, vec![1.0], 2.0, 0.5).unwrap();
        let mut last = 0.0;
        for _ in 0..200 {
            let r = t.step().unwrap();
            assert!(r.relative_imbalance() < 1e-12);
            assert!(t.concentration[0] >= last && t.concentration[0] <= 2.0);
            last = t.concentration[0];
        }
        assert!((last - 2.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_drive_flips_inflow() {
        let (_, s) = column(3, 1.0);
        assert_eq!(detect_inflow(&s.boundary_flux), vec![0]);
        let (_, s) = column(3, -1.0);
        assert_eq!(detect_inflow(&s.boundary_flux), vec![1]);
    }
}
