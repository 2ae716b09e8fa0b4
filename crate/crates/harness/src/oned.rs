//! One-dimensional closed-form checks and tables.

use std::fmt::Write as _;

use fracflow_core::analytic1d::{
    analytic_profile, closed_form_l1_n5, closed_form_pressures_n5, error_map, l1_error_exact,
    log_space, solve_1d_pedfm, OneDConfig,
};
use fracflow_core::model::PedfmVariant;

use crate::error::Result;

/// Columns `x,p` of the analytic profile at `points` equispaced abscissae.
pub fn profile_table(x_f: f64, d: f64, k_m: f64, k_f: f64, p0: f64, p1: f64, points: usize) -> String {
    let prof = analytic_profile(x_f, d, k_m, k_f, p0, p1);
    let mut out = String::from("x,p\n");
    let n = points.max(2);
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        let _ = writeln!(out, "{x:e},{:e}", prof.eval(x));
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Largest relative deviation between the five-cell solves and their closed
/// forms (pressures and L1 errors of both variants), `k_m = 1`.
pub fn five_cell_deviation(r_k: f64, d: f64) -> Result<f64> {
    let cfg = OneDConfig::new(5, d, 1.0, r_k);
    let mut worst = 0.0f64;
    for v in [PedfmVariant::Legacy, PedfmVariant::Updated] {
        let (pm, _) = solve_1d_pedfm(&cfg, v)?;
        for (a, b) in pm.iter().zip(closed_form_pressures_n5(v, r_k, d)) {
            worst = worst.max(rel(*a, b));
        }
        worst = worst.max(rel(l1_error_exact(&cfg, v), closed_form_l1_n5(v, r_k, d)));
    }
    Ok(worst)
}

/// Deterministic `(R_k, d)` check set: a log grid over both ranges.
pub fn check_pairs(per_axis: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for r in log_space(1e-8, 1e8, per_axis) {
        for d in log_space(1e-8, 1e-1, per_axis) {
            out.push((r, d));
        }
    }
    out
}

/// Columns `d,r_k,err_legacy,err_updated`.
pub fn error_map_csv(n_cells: usize, resolution: usize) -> Result<String> {
    let mut out = String::from("d,r_k,err_legacy,err_updated\n");
    for p in error_map(n_cells, (1e-8, 1e-1), (1e-8, 1e8), resolution)? {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e}",
            p.d, p.r_k, p.err_legacy, p.err_updated
        );
    }
    Ok(out)
}
