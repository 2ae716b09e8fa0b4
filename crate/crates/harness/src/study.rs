//! Coarse solves and convergence studies.

use std::fmt::Write as _;

use fracflow_core::fv::{solve_flow, FlowSolution};
use fracflow_core::geometry::loglog_slope;
use fracflow_core::ledfm::par_map;
use fracflow_core::model::{build_model, EmbeddedModel, Method, ModelOptions};
use fracflow_core::Point;

use crate::error::{HarnessError, Result};
use crate::norm::matrix_pressure_error;
use crate::reference::ReferenceField;
use crate::scenario::{MethodName, Scenario};

/// A solved coarse embedded model.
pub struct CoarseRun {
    pub model: EmbeddedModel,
    pub flow: FlowSolution,
}

impl CoarseRun {
    pub fn matrix_pressure(&self) -> &[f64] {
        &self.flow.pressure[..self.model.n_matrix()]
    }

    pub fn cut_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.model.n_matrix()];
        for c in &self.model.cuts {
            m[c.cell] = true;
        }
        m
    }

    pub fn max_relative_imbalance(&self) -> f64 {
        self.flow.max_relative_imbalance(&self.model.problem)
    }
}

pub fn build_embedded(sc: &Scenario, method: Method, n: usize) -> Result<EmbeddedModel> {
    let grid = sc.coarse_grid(n)?;
    let opts = ModelOptions {
        h_fine: sc.fine.h_fine,
        ..ModelOptions::default()
    };
    let mut model = build_model(
        &grid,
        &sc.fractures()?,
        &sc.boundary(),
        sc.fluid.mu,
        method,
        &opts,
    )?;
    for s in &sc.sources {
        let (i, j) = grid.locate(Point::new(s.x, s.y));
        model.problem.sources[grid.index(i, j)] += s.rate;
    }
    Ok(model)
}

pub fn run_embedded(sc: &Scenario, method: Method, n: usize) -> Result<CoarseRun> {
    let model = build_embedded(sc, method, n)?;
    let flow = solve_flow(&model.problem)?;
    Ok(CoarseRun { model, flow })
}

fn embedded(method: MethodName) -> Result<Method> {
    method.embedded().ok_or_else(|| {
        HarnessError::Validation(format!(
            "method `{method}` is not a coarse embedded method"
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRow {
    pub method: MethodName,
    pub n: usize,
    pub h: f64,
    pub e_m: f64,
    /// Error with the cut cells left out.
    pub e_m_excl_cut: f64,
    pub max_imbalance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorReport {
    /// Ordered by method, then refinement.
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn rows_for(&self, method: MethodName) -> Vec<ErrorRow> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .copied()
            .collect()
    }

    fn fit(&self, method: MethodName, value: impl Fn(&ErrorRow) -> f64) -> f64 {
        let rows = self.rows_for(method);
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let e: Vec<f64> = rows.iter().map(value).collect();
        if rows.len() < 2 {
            return f64::NAN;
        }
        loglog_slope(&h, &e)
    }

    /// Least-squares slope of `log e_m` against `log h`.
    pub fn slope(&self, method: MethodName) -> f64 {
        self.fit(method, |r| r.e_m)
    }

    pub fn slope_excl_cut(&self, method: MethodName) -> f64 {
        self.fit(method, |r| r.e_m_excl_cut)
    }

    pub fn e_m(&self, method: MethodName, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.n == n)
            .map(|r| r.e_m)
    }

    /// Columns `method,N,h,e_m,e_m_excl_cut,slope`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,N,h,e_m,e_m_excl_cut,slope\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e}",
                r.method,
                r.n,
                r.h,
                r.e_m,
                r.e_m_excl_cut,
                self.slope(r.method)
            );
        }
        out
    }
}

/// Solves every `(method, N)` pair in parallel and measures it against `reference`.
pub fn convergence_study(
    sc: &Scenario,
    levels: &[usize],
    methods: &[MethodName],
    reference: &ReferenceField,
) -> Result<ErrorReport> {
    for m in methods {
        embedded(*m)?;
    }
    let dp = sc.pressure_drop();
    let pairs: Vec<(MethodName, usize)> = methods
        .iter()
        .flat_map(|m| levels.iter().map(move |n| (*m, *n)))
        .collect();
    let rows = par_map(&pairs, |&(method, n)| -> Result<ErrorRow> {
        let run = run_embedded(sc, embedded(method)?, n)?;
        let grid = &run.model.grid;
        let p = run.matrix_pressure();
        let mask = run.cut_mask();
        let row = ErrorRow {
            method,
            n,
            h: grid.dx,
            e_m: matrix_pressure_error(grid, p, None, reference, dp),
            e_m_excl_cut: matrix_pressure_error(grid, p, Some(&mask), reference, dp),
            max_imbalance: run.max_relative_imbalance(),
        };
        log::info!(
            "{method} N={n}: e_m={:.4e} excl={:.4e}",
            row.e_m,
            row.e_m_excl_cut
        );
        Ok(row)
    });
    Ok(ErrorReport {
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
