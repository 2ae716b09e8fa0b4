//! Net flux leaving the fracture, per unit length, against arc length.

use std::fmt::Write as _;

use fracflow_core::fv::ConnectionKind;
use fracflow_core::model::fracture_exchange;

use crate::reference::ConformingRun;
use crate::study::CoarseRun;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetFluxPoint {
    pub fracture: usize,
    /// Arc length of the fracture cell midpoint from the first endpoint.
    pub s: f64,
    /// Net exiting flux of the fracture cell divided by its length.
    pub flux: f64,
    /// Net exiting flux of the fracture cell.
    pub total: f64,
}

fn sorted(mut v: Vec<NetFluxPoint>) -> Vec<NetFluxPoint> {
    v.sort_by(|a, b| a.fracture.cmp(&b.fracture).then(a.s.total_cmp(&b.s)));
    v
}

/// Embedded models: sum of the matrix–fracture couplings of every fracture cell.
pub fn embedded_net_flux(run: &CoarseRun) -> Vec<NetFluxPoint> {
    let m = &run.model;
    let exch = fracture_exchange(m, &run.flow);
    sorted(
        m.cuts
            .iter()
            .zip(exch)
            .map(|(c, q)| NetFluxPoint {
                fracture: c.fracture,
                s: m.fractures[c.fracture].a.dist(c.midpoint()),
                flux: q / c.length,
                total: q,
            })
            .collect(),
    )
}

/// Conforming model: the fluxes into the triangles on both sides of every fracture edge.
pub fn conforming_net_flux(run: &ConformingRun) -> Vec<NetFluxPoint> {
    let sys = &run.system;
    let nt = sys.n_triangles;
    let mut total = vec![0.0; sys.n_fracture];
    for (c, f) in sys.connections.iter().zip(&run.flow.connection_flux) {
        if c.kind == ConnectionKind::MF {
            total[c.b - nt] -= f;
        }
    }
    sorted(
        run.mesh
            .fracture_edges
            .iter()
            .zip(total)
            .map(|(e, q)| {
                let (a, b) = (run.mesh.vertices[e.v[0]], run.mesh.vertices[e.v[1]]);
                NetFluxPoint {
                    fracture: e.fracture,
                    s: run.fracture_start[e.fracture].dist(a.midpoint(b)),
                    flux: q / a.dist(b),
                    total: q,
                }
            })
            .collect(),
    )
}

/// Columns `s,flux,method`.
pub fn to_csv(rows: &[(String, Vec<NetFluxPoint>)]) -> String {
    let mut out = String::from("s,flux,method\n");
    for (method, pts) in rows {
        for p in pts {
            let _ = writeln!(out, "{:e},{:e},{}", p.s, p.flux, method);
        }
    }
    out
}
