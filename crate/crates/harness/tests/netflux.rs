use fracflow::netflux::{conforming_net_flux, embedded_net_flux, to_csv, NetFluxPoint};
use fracflow::reference::solve_conforming;
use fracflow::scenario::{presets, FractureSpec, MethodName, Scenario};
use fracflow::study::run_embedded;

/// Net exchange profile and the boundary throughput of the solve.
fn net_with_throughput(sc: &Scenario, m: MethodName) -> (Vec<NetFluxPoint>, f64) {
    match m.embedded() {
        Some(method) => {
            let run = run_embedded(sc, method, sc.grid.n).unwrap();
            (embedded_net_flux(&run), run.flow.boundary_inflow())
        }
        None => {
            let run = solve_conforming(sc, sc.domain.lx / sc.grid.n as f64).unwrap();
            (conforming_net_flux(&run), run.flow.boundary_inflow())
        }
    }
}

fn net(sc: &Scenario, m: MethodName) -> Vec<NetFluxPoint> {
    net_with_throughput(sc, m).0
}

const METHODS: [MethodName; 6] = [
    MethodName::Edfm,
    MethodName::PedfmLegacy,
    MethodName::PedfmUpdated,
    MethodName::Ledfm,
    MethodName::LedfmMsfv,
    MethodName::DfmConforming,
];

#[test]
fn sealed_fracture_exchanges_nothing_in_total() {
    for r_k in [1e-4, 1e4] {
        let sc = presets::test1(r_k, MethodName::Edfm, 19);
        for m in METHODS {
            let (pts, throughput) = net_with_throughput(&sc, m);
            let total: f64 = pts.iter().map(|p| p.total).sum();
            assert!(total.abs() <= 1e-9 * throughput, "{m} R_k {r_k}: {total:e} of {throughput:e}");
            assert!(pts.windows(2).all(|w| w[0].s < w[1].s));
        }
    }
}

/// Vertical conductive fracture centered in the square: point symmetry of the
/// setup makes the exchange antisymmetric about the fracture midpoint.
#[test]
fn centered_fracture_gives_antisymmetric_profile() {
    let mut sc = presets::test1(1e4, MethodName::Edfm, 19);
    sc.fracture = vec![FractureSpec {
        x1: 0.5,
        y1: 0.25,
        x2: 0.5,
        y2: 0.75,
        aperture: 1e-4,
        k_tau: 1e4,
        k_n: 1e4,
    }];
    for (m, tol) in [
        (MethodName::Edfm, 1e-10),
        (MethodName::PedfmUpdated, 1e-10),
        (MethodName::Ledfm, 2e-2),
    ] {
        let pts = net(&sc, m);
        let peak = pts.iter().fold(0.0f64, |a, p| a.max(p.flux.abs()));
        let n = pts.len();
        for k in 0..n {
            let (a, b) = (pts[k], pts[n - 1 - k]);
            assert!((a.s + b.s - 0.5).abs() < 1e-12);
            assert!((a.flux + b.flux).abs() <= tol * peak, "{m}: {} vs {}", a.flux, b.flux);
        }
        assert!(pts[0].flux < 0.0 && pts[n - 1].flux > 0.0);
    }
}

/// Cell-to-cell values oscillate with the cut pattern, so the claim is checked
/// on the cumulative exchange: it falls while fluid enters, then rises.
#[test]
fn diagonal_fracture_takes_fluid_in_below_and_releases_it_above() {
    for m in [MethodName::Edfm, MethodName::Ledfm, MethodName::DfmConforming] {
        let sc = presets::tracer(m);
        let pts = net(&sc, m);
        let f = sc.fracture[0];
        let length = (f.x2 - f.x1).hypot(f.y2 - f.y1);
        let mut cum = 0.0;
        let (mut lowest, mut at) = (0.0, 0.0);
        for p in &pts {
            cum += p.total;
            if cum < lowest {
                lowest = cum;
                at = p.s;
            }
        }
        assert!((0.35..0.65).contains(&(at / length)), "{m}: turning point at {}", at / length);
        let quarter = |lo: f64, hi: f64| -> f64 {
            pts.iter()
                .filter(|p| (lo..hi).contains(&(p.s / length)))
                .map(|p| p.total)
                .sum()
        };
        assert!(quarter(0.0, 0.25) < 0.0 && quarter(0.75, 1.0) > 0.0, "{m}");
    }
}

#[test]
fn csv_is_long_format() {
    let sc = presets::test1(1e4, MethodName::Edfm, 7);
    let rows = vec![("edfm".to_string(), net(&sc, MethodName::Edfm))];
    let csv = to_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,flux,method"));
    assert_eq!(lines.count(), rows[0].1.len());
}
