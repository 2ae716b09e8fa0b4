//! One-dimensional lower-dimensional fracture model: closed-form profile and
//! the exact comparison of the two pEDFM transmissibility variants.

use crate::error::Result;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::fv::{
    assemble, solve_flow_with, BoundaryFace, BoundaryValue, Connection, ConnectionKind,
    FlowProblem, LinearSystem, Scalar,
};
use crate::model::{pedfm_mf_transmissibility, pedfm_nnmf_transmissibility, PedfmVariant};
use crate::sparse::SolverChoice;

/// Piecewise-linear pressure on `(0, 1)` with a point fracture at `x_f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profile<T = f64> {
    pub x_f: T,
    pub p0: T,
    pub p1: T,
    pub slope: T,
    pub p_l: T,
    pub p_r: T,
    pub p_frac: T,
}

impl<T: Scalar> Profile<T> {
    pub fn eval(&self, x: T) -> T {
        if x < self.x_f {
            self.p0.clone() + self.slope.clone() * x
        } else if x > self.x_f {
            self.p1.clone() - self.slope.clone() * (T::one() - x)
        } else {
            self.p_frac.clone()
        }
    }
}

pub fn analytic_profile<T: Scalar>(x_f: T, d: T, k_m: T, k_f: T, p0: T, p1: T) -> Profile<T> {
    let den = k_f.clone() + d.clone() * k_m.clone();
    let dk = d * k_m;
    let rest = T::one() - x_f.clone();
    let p_l = (rest.clone() * k_f.clone() + dk.clone()) / den.clone() * p0.clone()
        + x_f.clone() * k_f.clone() / den.clone() * p1.clone();
    let p_r = rest * k_f.clone() / den.clone() * p0.clone()
        + (x_f.clone() * k_f.clone() + dk) / den.clone() * p1.clone();
    Profile {
        slope: k_f / den * (p1.clone() - p0.clone()),
        p_frac: (p_l.clone() + p_r.clone()) / T::two(),
        x_f,
        p0,
        p1,
        p_l,
        p_r,
    }
}

/// Discretization of `(0, 1)` into `n` (odd) cells with the fracture in the middle cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneDConfig {
    pub n: usize,
    pub d: f64,
    pub k_m: f64,
    pub k_f: f64,
    pub p0: f64,
    pub p1: f64,
}

impl OneDConfig {
    pub fn new(n: usize, d: f64, k_m: f64, k_f: f64) -> Self {
        assert!(n % 2 == 1, "cell count must be odd");
        Self {
            n,
            d,
            k_m,
            k_f,
            p0: 0.0,
            p1: 1.0,
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Index of the cut cell; its fracture projects onto the right face.
    pub fn fracture_cell(&self) -> usize {
        self.n / 2
    }
}

/// `(T_mf, T_{m_n f})` obtained from the 2D builders with the 1D geometry:
/// connectivity index `4/h`, unit projection measure at distance `h`.
pub fn transmissibilities<T: Scalar>(variant: PedfmVariant, h: T, d: T, k_m: T, k_f: T) -> (T, T) {
    let four = T::two() * T::two();
    (
        pedfm_mf_transmissibility(
            variant,
            four / h.clone(),
            k_m.clone(),
            k_f.clone(),
            T::one(),
            d.clone(),
        ),
        pedfm_nnmf_transmissibility(variant, T::one(), h, k_m, k_f, T::one(), d),
    )
}

/// Cell couplings `(a, b, T)` (fracture cell is `n`) and the two boundary
/// half-transmissibilities.
fn couplings<T: Scalar>(n: usize, d: T, k_m: T, k_f: T, variant: PedfmVariant) -> (Vec<(usize, usize, T)>, T) {
    let h = T::one() / (0..n).fold(T::zero(), |a, _| a + T::one());
    let c = n / 2;
    let (tmf, tmnf) = transmissibilities(variant, h.clone(), d, k_m.clone(), k_f);
    let mut out: Vec<_> = (0..n - 1)
        .map(|i| {
            let t = if i == c { T::zero() } else { k_m.clone() / h.clone() };
            (i, i + 1, t)
        })
        .collect();
    out.push((c, n, tmf));
    out.push((c + 1, n, tmnf));
    (out, T::two() * k_m / h)
}

pub fn flow_problem_1d(cfg: &OneDConfig, variant: PedfmVariant) -> FlowProblem {
    let n = cfg.n;
    let (links, tb) = couplings(n, cfg.d, cfg.k_m, cfg.k_f, variant);
    let mut p = FlowProblem::new(n + 1);
    for (k, (a, b, t)) in links.into_iter().enumerate() {
        let kind = match k {
            _ if b < n => ConnectionKind::MM,
            _ if a == cfg.fracture_cell() => ConnectionKind::MF,
            _ => ConnectionKind::NNMF,
        };
        p.connections.push(Connection::new(a, b, t, kind));
    }
    p.boundary.push(BoundaryFace {
        cell: 0,
        trans: tb,
        value: BoundaryValue::Dirichlet(cfg.p0),
    });
    p.boundary.push(BoundaryFace {
        cell: n - 1,
        trans: tb,
        value: BoundaryValue::Dirichlet(cfg.p1),
    });
    p
}

pub fn assemble_1d_pedfm(cfg: &OneDConfig, variant: PedfmVariant) -> Result<LinearSystem> {
    assemble(&flow_problem_1d(cfg, variant))
}

/// Matrix pressures and the fracture pressure (`None` if the fracture is isolated).
pub fn solve_1d_pedfm(cfg: &OneDConfig, variant: PedfmVariant) -> Result<(Vec<f64>, Option<f64>)> {
    let mut p = flow_problem_1d(cfg, variant);
    let isolated = p
        .connections
        .iter()
        .filter(|c| c.b == cfg.n)
        .all(|c| c.trans == 0.0);
    if isolated {
        p.connections.retain(|c| c.b != cfg.n);
        p.n_cells = cfg.n;
        p.sources.truncate(cfg.n);
        let s = solve_flow_with(&p, SolverChoice::Direct)?;
        return Ok((s.pressure, None));
    }
    let s = solve_flow_with(&p, SolverChoice::Direct)?;
    let pf = s.pressure[cfg.n];
    let mut pm = s.pressure;
    pm.truncate(cfg.n);
    Ok((pm, Some(pf)))
}

/// Analytic pressures at cell centers with the fracture moved onto its projection face.
pub fn analytic_centroid_pressures(cfg: &OneDConfig) -> Vec<f64> {
    let x_f = (cfg.fracture_cell() + 1) as f64 * cfg.h();
    let prof = analytic_profile(x_f, cfg.d, cfg.k_m, cfg.k_f, cfg.p0, cfg.p1);
    (0..cfg.n)
        .map(|i| prof.eval((i as f64 + 0.5) * cfg.h()))
        .collect()
}

/// Matrix pressures of the same discrete system solved in exact rational
/// arithmetic from the binary values of the inputs.
pub fn solve_1d_pedfm_exact(cfg: &OneDConfig, variant: PedfmVariant) -> Vec<BigRational> {
    let q = |v: f64| BigRational::from_float(v).expect("finite input");
    let n = cfg.n;
    let (mut links, tb) = couplings(n, q(cfg.d), q(cfg.k_m), q(cfg.k_f), variant);
    let zero = BigRational::zero();
    let size = if links.iter().any(|l| l.1 == n && l.2 != zero) {
        n + 1
    } else {
        links.retain(|l| l.1 < n);
        n
    };
    let mut a = vec![vec![zero.clone(); size + 1]; size];
    for (i, j, t) in links {
        a[i][i] += t.clone();
        a[j][j] += t.clone();
        a[i][j] -= t.clone();
        a[j][i] -= t;
    }
    a[0][0] += tb.clone();
    a[0][size] += tb.clone() * q(cfg.p0);
    a[n - 1][n - 1] += tb.clone();
    a[n - 1][size] += tb * q(cfg.p1);
    for k in 0..size {
        let piv = (k..size).find(|&r| a[r][k] != zero).expect("nonsingular");
        a.swap(k, piv);
        for r in k + 1..size {
            if a[r][k] == zero {
                continue;
            }
            let m = a[r][k].clone() / a[k][k].clone();
            for c in k..=size {
                if a[k][c] != zero {
                    let v = m.clone() * a[k][c].clone();
                    a[r][c] -= v;
                }
            }
        }
    }
    let mut x = vec![zero.clone(); size];
    for k in (0..size).rev() {
        let mut s = a[k][size].clone();
        for c in k + 1..size {
            if a[k][c] != zero {
                s -= a[k][c].clone() * x[c].clone();
            }
        }
        x[k] = s / a[k][k].clone();
    }
    x.truncate(n);
    x
}

/// L1 error evaluated without cancellation: exact discrete and analytic
/// pressures, rounded once at the end.
pub fn l1_error_exact(cfg: &OneDConfig, variant: PedfmVariant) -> f64 {
    let q = |v: f64| BigRational::from_float(v).expect("finite input");
    let pm = solve_1d_pedfm_exact(cfg, variant);
    let n = cfg.n;
    let nq = BigRational::from_integer(n.into());
    let c = cfg.fracture_cell();
    let x_f = BigRational::from_integer((c + 1).into()) / nq.clone();
    let prof = analytic_profile(x_f, q(cfg.d), q(cfg.k_m), q(cfg.k_f), q(cfg.p0), q(cfg.p1));
    let half = BigRational::new(1.into(), 2.into());
    let mut sum = BigRational::zero();
    for (i, p) in pm.into_iter().enumerate() {
        let x = (BigRational::from_integer(i.into()) + half.clone()) / nq.clone();
        sum += (p - prof.eval(x)).abs();
    }
    (sum / nq).to_f64().unwrap_or(f64::NAN)
}

pub fn l1_error(cfg: &OneDConfig, variant: PedfmVariant) -> Result<f64> {
    let (pm, _) = solve_1d_pedfm(cfg, variant)?;
    let pa = analytic_centroid_pressures(cfg);
    Ok(cfg.h() * pm.iter().zip(&pa).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Printed five-cell matrix pressures for `p0 = 0`, `p1 = 1`.
pub fn closed_form_pressures_n5(variant: PedfmVariant, r: f64, d: f64) -> [f64; 5] {
    match variant {
        PedfmVariant::Legacy => {
            let s = 5.0 + 37.0 * r;
            [
                4.0 * r / s,
                12.0 * r / s,
                20.0 * r / s,
                (5.0 + 25.0 * r) / s,
                (5.0 + 33.0 * r) / s,
            ]
        }
        PedfmVariant::Updated => {
            let s = 20.0 * d + 21.0 * r;
            [
                2.0 * r / s,
                6.0 * r / s,
                10.0 * r / s,
                (20.0 * d + 15.0 * r) / s,
                (20.0 * d + 19.0 * r) / s,
            ]
        }
    }
}

pub fn closed_form_analytic_n5(r: f64, d: f64) -> [f64; 5] {
    let s = 10.0 * (r + d);
    [
        r / s,
        3.0 * r / s,
        5.0 * r / s,
        (7.0 * r + 10.0 * d) / s,
        (9.0 * r + 10.0 * d) / s,
    ]
}

pub fn closed_form_l1_n5(variant: PedfmVariant, r: f64, d: f64) -> f64 {
    match variant {
        PedfmVariant::Legacy => {
            13.0 / 50.0 * r * (5.0 - 3.0 * r - 40.0 * d).abs()
                / (37.0 * r * r + 5.0 * r + 37.0 * r * d + 5.0 * d)
        }
        PedfmVariant::Updated => 13.0 / 50.0 * r * r / (21.0 * r * r + 20.0 * d * d + 41.0 * r * d),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorMapPoint {
    pub d: f64,
    pub r_k: f64,
    pub err_legacy: f64,
    pub err_updated: f64,
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// L1 errors of both variants over a log-spaced `(d, R_k)` grid, `k_m = 1`.
pub fn error_map(
    n_cells: usize,
    d_range: (f64, f64),
    rk_range: (f64, f64),
    resolution: usize,
) -> Result<Vec<ErrorMapPoint>> {
    let mut out = Vec::with_capacity(resolution * resolution);
    for d in log_space(d_range.0, d_range.1, resolution) {
        for r_k in log_space(rk_range.0, rk_range.1, resolution) {
            let cfg = OneDConfig::new(n_cells, d, 1.0, r_k);
            out.push(ErrorMapPoint {
                d,
                r_k,
                err_legacy: l1_error_exact(&cfg, PedfmVariant::Legacy),
                err_updated: l1_error_exact(&cfg, PedfmVariant::Updated),
            });
        }
    }
    Ok(out)
}
