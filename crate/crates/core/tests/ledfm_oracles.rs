use approx::assert_relative_eq;
use fracflow_core::fv::ConnectionKind;
use fracflow_core::geometry::Rect;
use fracflow_core::grid::Face;
use fracflow_core::ledfm::{
    build_ledfm, mf_problem_for_cell, mm_problem_for_face, verify_pseudo_steady_state,
    LocalFracture, MfProblem, MmProblem, Storage,
};
use fracflow_core::{CoarseGrid, DomainBoundary, FractureSegment, Point};

fn mf(a: Point, b: Point, h: f64) -> MfProblem {
    MfProblem {
        domain: Rect::new(0.0, 0.0, 1.0, 1.0),
        kx: 1.0,
        ky: 1.0,
        fracture: LocalFracture {
            a,
            b,
            aperture: 1e-4,
            k_tau: 1e4,
            k_n: 1e4,
        },
        h_fine: h,
    }
}

fn mm(k1: (f64, f64), k2: (f64, f64), fracture: Option<LocalFracture>, h: f64) -> MmProblem {
    MmProblem {
        domain: Rect::new(0.0, 0.0, 2.0, 1.0),
        x_mid: 1.0,
        k1,
        k2,
        fracture,
        h_fine: h,
    }
}

#[test]
fn full_width_fracture_matches_slab_value() {
    // uniform source, sealed walls at distance 1/2 on both sides:
    // mean drop q L² / 3k with L = 1/2 over a total rate q → T = 12 k
    let t = mf(Point::new(0.0, 0.5), Point::new(1.0, 0.5), 1.0 / 32.0)
        .solve()
        .unwrap()
        .transmissibility;
    assert_relative_eq!(t, 12.0, max_relative = 1e-2);
}

#[test]
fn pseudo_steady_shape_matches_stationary_problem() {
    let geometries = [
        (Point::new(0.0, 0.37), Point::new(1.0, 0.61)),
        (Point::new(0.2, 0.3), Point::new(0.7, 0.8)),
        (Point::new(0.0, 0.15), Point::new(0.55, 1.0)),
    ];
    for (a, b) in geometries {
        let dev = verify_pseudo_steady_state(&mf(a, b, 1.0 / 12.0), &Storage::default()).unwrap();
        assert!(dev < 1e-3, "{a:?}-{b:?}: {dev:e}");
    }
}

#[test]
fn unfractured_pair_recovers_permeability() {
    for k in [1e-3, 1.0, 250.0] {
        let t = mm((k, k), (k, k), None, 1.0 / 16.0).solve().unwrap().transmissibility;
        assert_relative_eq!(t, k, max_relative = 2e-2);
    }
    let t = mm((1.0, 1.0), (4.0, 4.0), None, 1.0 / 16.0).solve().unwrap().transmissibility;
    assert_relative_eq!(t, 1.6, max_relative = 2e-2);
}

#[test]
fn anisotropic_matrix_is_rejected() {
    let g = CoarseGrid::uniform(3, 3, 1.0, 1.0, 1.0, 2.0, 0.2).unwrap();
    let f = FractureSegment::new(Point::new(0.1, 0.2), Point::new(0.8, 0.7), 1e-4, 1.0, 1.0).unwrap();
    let err = build_ledfm(&g, &[f], &DomainBoundary::bottom_top(1.0, 0.0), 1.0, 0.1);
    assert!(matches!(err, Err(fracflow_core::Error::Unsupported(_))));
}

#[test]
fn halving_fine_edge_barely_changes_extraction() {
    let mf_t = |h| {
        mf(Point::new(0.0, 0.3), Point::new(1.0, 0.72), h)
            .solve()
            .unwrap()
            .transmissibility
    };
    let (a, b) = (mf_t(1.0 / 16.0), mf_t(1.0 / 32.0));
    assert!((a - b).abs() / b < 2e-2, "M-F {a} vs {b}");

    let barrier = LocalFracture {
        a: Point::new(0.6, 0.2),
        b: Point::new(1.4, 0.9),
        aperture: 1e-4,
        k_tau: 1e-4,
        k_n: 1e-4,
    };
    let mm_t = |h| {
        mm((1.0, 1.0), (1.0, 1.0), Some(barrier), h)
            .solve()
            .unwrap()
            .transmissibility
    };
    let (a, b) = (mm_t(1.0 / 16.0), mm_t(1.0 / 32.0));
    assert!((a - b).abs() / b < 2e-2, "M-M {a} vs {b}");
}

#[test]
fn extraction_is_scale_invariant() {
    let run = |s: f64| {
        let g = CoarseGrid::uniform(4, 4, s, s, 1.0, 1.0, 0.2).unwrap();
        let f = FractureSegment::new(
            Point::new(0.1 * s, 0.2 * s),
            Point::new(0.8 * s, 0.65 * s),
            1e-4 * s,
            1e2,
            1e2,
        )
        .unwrap();
        let cell = g.index(1, 1);
        let t_mf = mf_problem_for_cell(&g, &[f], cell, 1.0 / 16.0)
            .unwrap()
            .solve()
            .unwrap()
            .transmissibility;
        let t_mm = mm_problem_for_face(&g, &[f], Face::Vertical { i: 2, j: 1 }, 1.0 / 16.0)
            .unwrap()
            .solve()
            .unwrap()
            .transmissibility;
        let model = build_ledfm(&g, &[f], &DomainBoundary::bottom_top(1.0, 0.0), 1.0, 1.0 / 16.0)
            .unwrap();
        let mut coupling: Vec<f64> = model
            .problem
            .connections
            .iter()
            .filter(|c| c.kind != ConnectionKind::FF)
            .map(|c| c.trans)
            .collect();
        coupling.push(t_mf);
        coupling.push(t_mm);
        coupling
    };
    let base = run(1.0);
    for s in [1e-3, 37.5, 1e4] {
        for (a, b) in base.iter().zip(run(s)) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "scale {s}: {a} vs {b}");
        }
    }
}
