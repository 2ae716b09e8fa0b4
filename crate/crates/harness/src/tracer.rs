//! Tracer runs on a steady flow field.

use std::fmt::Write as _;

use fracflow_core::fv::{FlowProblem, FlowSolution};
use fracflow_core::transport::{StepReport, Tracer};
use fracflow_core::Point;

use crate::error::{HarnessError, Result};
use crate::reference::solve_conforming;
use crate::scenario::{MethodName, Scenario};
use crate::study::run_embedded;

#[derive(Clone, Debug)]
pub struct TracerRun {
    pub reports: Vec<StepReport>,
    pub min_c: f64,
    pub max_c: f64,
    pub concentration: Vec<f64>,
    pub centers: Vec<Point>,
    /// Number of matrix cells; the rest are fracture cells.
    pub n_matrix: usize,
    /// Concentrations after selected steps, `(step, field)`.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl TracerRun {
    pub fn max_imbalance(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.relative_imbalance())
            .fold(0.0, f64::max)
    }

    /// Columns `x,y,kind,c`.
    pub fn field_csv(&self, c: &[f64]) -> String {
        let mut out = String::from("x,y,kind,c\n");
        for (k, (p, v)) in self.centers.iter().zip(c).enumerate() {
            let kind = if k < self.n_matrix {
                "matrix"
            } else {
                "fracture"
            };
            let _ = writeln!(out, "{:e},{:e},{kind},{:e}", p.x, p.y, v);
        }
        out
    }
}

fn march(
    problem: &FlowProblem,
    flow: &FlowSolution,
    pore_volume: Vec<f64>,
    sc: &Scenario,
    every: usize,
) -> Result<(Vec<StepReport>, f64, f64, Vec<f64>, Vec<(usize, Vec<f64>)>)> {
    let t = sc.transport;
    let mut tracer = Tracer::new(
        problem,
        flow,
        pore_volume,
        t.c_d,
        t.t_end / t.steps as f64,
    )?;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let mut reports = Vec::with_capacity(t.steps);
    let mut snapshots = Vec::new();
    for step in 1..=t.steps {
        reports.push(tracer.step()?);
        for c in &tracer.concentration {
            lo = lo.min(*c);
            hi = hi.max(*c);
        }
        if every > 0 && step % every == 0 {
            snapshots.push((step, tracer.concentration.clone()));
        }
    }
    Ok((reports, lo, hi, tracer.concentration, snapshots))
}

/// Runs the scenario's transport block; `every > 0` keeps a snapshot every `every` steps.
pub fn run_tracer(sc: &Scenario, every: usize) -> Result<TracerRun> {
    if !sc.transport.enabled {
        return Err(HarnessError::Validation(
            "transport.enabled: tracer run needs transport enabled".into(),
        ));
    }
    match sc.method {
        MethodName::DfmConforming => {
            let run = solve_conforming(sc, sc.domain.lx / sc.grid.n as f64)?;
            let pv: Vec<f64> = run
                .system
                .volumes
                .iter()
                .map(|v| v * sc.matrix.phi)
                .collect();
            let (reports, min_c, max_c, concentration, snapshots) =
                march(&run.problem, &run.flow, pv, sc, every)?;
            Ok(TracerRun {
                reports,
                min_c,
                max_c,
                concentration,
                centers: run.system.centers.clone(),
                n_matrix: run.system.n_triangles,
                snapshots,
            })
        }
        m => {
            let method = m.embedded().ok_or_else(|| {
                HarnessError::Validation(format!("method `{m}` has no tracer run"))
            })?;
            let run = run_embedded(sc, method, sc.grid.n)?;
            let pv: Vec<f64> = run
                .model
                .cell_volumes()
                .iter()
                .zip(run.model.porosities())
                .map(|(v, phi)| v * phi)
                .collect();
            let (reports, min_c, max_c, concentration, snapshots) =
                march(&run.model.problem, &run.flow, pv, sc, every)?;
            Ok(TracerRun {
                reports,
                min_c,
                max_c,
                concentration,
                centers: run.model.cell_centers(),
                n_matrix: run.model.n_matrix(),
                snapshots,
            })
        }
    }
}
