use fracflow_core::analytic1d::{
    analytic_profile, closed_form_l1_n5, closed_form_pressures_n5, l1_error_exact, solve_1d_pedfm,
    OneDConfig,
};
use fracflow_core::fv::solve_flow;
use fracflow_core::geometry::{average_distance, clip_polygon_to_rect, polygon_area, Rect};
use fracflow_core::grid::intersect_fracture;
use fracflow_core::model::build_model;
use fracflow_core::transport::Tracer;
use fracflow_core::{
    CoarseGrid, DomainBoundary, FractureSegment, Method, ModelOptions, PedfmVariant, Point,
};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (0.02f64..0.98, 0.02f64..0.98).prop_map(|(x, y)| Point::new(x, y))
}

fn fracture(a: Point, b: Point, r_k: f64) -> Option<FractureSegment> {
    (a.dist(b) > 0.05).then(|| FractureSegment::new(a, b, 1e-4, r_k, r_k).ok()).flatten()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_lengths_partition_the_fracture(a in point(), b in point(), n in 3usize..40) {
        let g = CoarseGrid::uniform(n, n, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap();
        let f = fracture(a, b, 1.0);
        prop_assume!(f.is_some());
        let f = f.unwrap();
        let cuts = intersect_fracture(&g, &f, 0);
        prop_assume!(cuts.is_ok());
        let total: f64 = cuts.unwrap().iter().map(|c| c.length).sum();
        prop_assert!((total - f.length()).abs() <= 1e-12 * f.length());
    }

    #[test]
    fn average_distance_matches_quadrature(
        w in 0.2f64..3.0, h in 0.2f64..3.0,
        px in -0.5f64..1.5, py in -0.5f64..1.5, angle in 0.0f64..std::f64::consts::PI,
    ) {
        let r = Rect::new(0.0, 0.0, w, h);
        let x_f = Point::new(px * w, py * h);
        let n = Point::new(angle.cos(), angle.sin());
        let m = 400;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let p = Point::new((i as f64 + 0.5) * w / m as f64, (j as f64 + 0.5) * h / m as f64);
                s += (n.dot(p) - n.dot(x_f)).abs();
            }
        }
        let quad = s / (m * m) as f64;
        let exact = average_distance(&r, x_f, n);
        prop_assert!((exact - quad).abs() <= 1e-4 * quad.max(w.max(h) * 1e-3), "{exact} vs {quad}");
    }

    #[test]
    fn clipped_triangle_areas_sum_up(a in point(), b in point(), c in point(), n in 1usize..12) {
        let tri = [a, b, c];
        let area = polygon_area(&tri);
        prop_assume!(area > 1e-6);
        let g = CoarseGrid::uniform(n, n + 1, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap();
        let mut sum = 0.0;
        for cell in 0..g.n_cells() {
            let r = g.rect(cell);
            let part = clip_polygon_to_rect(&tri, &r);
            prop_assert!(part >= 0.0 && part <= area.min(r.area()) * (1.0 + 1e-12));
            sum += part;
        }
        prop_assert!((sum - area).abs() <= 1e-10 * area);
    }

    #[test]
    fn mirrored_fracture_gives_mirrored_pressure(
        a in point(), b in point(), log_rk in -8.0f64..8.0, updated in any::<bool>(),
    ) {
        let n = 11;
        let r_k = 10f64.powf(log_rk);
        let method = if updated { Method::Pedfm(PedfmVariant::Updated) } else { Method::Edfm };
        let mirror = |p: Point| Point::new(1.0 - p.x, p.y);
        let (f, fm) = (fracture(a, b, r_k), fracture(mirror(a), mirror(b), r_k));
        prop_assume!(f.is_some() && fm.is_some());
        let g = CoarseGrid::uniform(n, n, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap();
        let bc = DomainBoundary::bottom_top(1.0, 0.0);
        let opts = ModelOptions::default();
        let m1 = build_model(&g, &[f.unwrap()], &bc, 1.0, method, &opts);
        let m2 = build_model(&g, &[fm.unwrap()], &bc, 1.0, method, &opts);
        prop_assume!(m1.is_ok() && m2.is_ok());
        let (m1, m2) = (m1.unwrap(), m2.unwrap());
        let (p1, p2) = (solve_flow(&m1.problem).unwrap(), solve_flow(&m2.problem).unwrap());
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (p1.pressure[g.index(i, j)], p2.pressure[g.index(n - 1 - i, j)]);
                prop_assert!((x - y).abs() <= 1e-9, "({i},{j}): {x} vs {y}");
            }
        }
    }

    #[test]
    fn embedded_models_conserve_mass(
        a in point(), b in point(), log_rk in -8.0f64..8.0, pick in 0usize..3,
    ) {
        let method = [Method::Edfm, Method::Pedfm(PedfmVariant::Legacy), Method::Pedfm(PedfmVariant::Updated)][pick];
        let f = fracture(a, b, 10f64.powf(log_rk));
        prop_assume!(f.is_some());
        let g = CoarseGrid::uniform(13, 13, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap();
        let m = build_model(&g, &[f.unwrap()], &DomainBoundary::bottom_top(1.0, 0.0), 1.0, method, &ModelOptions::default());
        prop_assume!(m.is_ok());
        let m = m.unwrap();
        let s = solve_flow(&m.problem).unwrap();
        prop_assert!(s.max_relative_imbalance(&m.problem) <= 1e-9);
    }

    #[test]
    fn tracer_stays_bounded_and_balanced(a in point(), b in point(), log_rk in 0.0f64..6.0, c_in in 0.1f64..10.0) {
        let f = fracture(a, b, 10f64.powf(log_rk));
        prop_assume!(f.is_some());
        let g = CoarseGrid::uniform(9, 9, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap();
        let m = build_model(&g, &[f.unwrap()], &DomainBoundary::bottom_top(1.0, 0.0), 1.0, Method::Edfm, &ModelOptions::default());
        prop_assume!(m.is_ok());
        let m = m.unwrap();
        let flow = solve_flow(&m.problem).unwrap();
        let pv: Vec<f64> = m.cell_volumes().iter().zip(m.porosities()).map(|(v, p)| v * p).collect();
        let mut t = Tracer::new(&m.problem, &flow, pv, c_in, 0.05).unwrap();
        for _ in 0..20 {
            let r = t.step().unwrap();
            prop_assert!(r.relative_imbalance() <= 1e-10);
            for c in &t.concentration {
                prop_assert!(*c >= -1e-12 && *c <= c_in + 1e-12);
            }
        }
    }

    #[test]
    fn analytic_profile_meets_interface_conditions(
        x_f in 0.05f64..0.95, log_d in -8.0f64..-1.0, log_km in -3.0f64..3.0, log_kf in -8.0f64..8.0,
        p0 in -10.0f64..10.0, p1 in -10.0f64..10.0,
    ) {
        let (d, k_m, k_f) = (10f64.powf(log_d), 10f64.powf(log_km), 10f64.powf(log_kf));
        let p = analytic_profile(x_f, d, k_m, k_f, p0, p1);
        let scale = p0.abs().max(p1.abs()).max(1.0);
        prop_assert!(((p.p_l - p0) / x_f - p.slope).abs() <= 1e-12 * scale / x_f);
        prop_assert!(((p1 - p.p_r) / (1.0 - x_f) - p.slope).abs() <= 1e-12 * scale / (1.0 - x_f));
        // k_m p' d = k_f [p]; the computed jump carries a rounding error of a few ulps of `scale`
        let lhs = k_m * p.slope * d;
        let rhs = k_f * (p.p_r - p.p_l);
        prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs() + 8.0 * f64::EPSILON * scale * k_f);
    }

    #[test]
    fn five_cell_solves_match_closed_forms(log_rk in -8.0f64..8.0, log_d in -8.0f64..-1.0) {
        let (r_k, d) = (10f64.powf(log_rk), 10f64.powf(log_d));
        let cfg = OneDConfig::new(5, d, 1.0, r_k);
        for v in [PedfmVariant::Legacy, PedfmVariant::Updated] {
            let (pm, _) = solve_1d_pedfm(&cfg, v).unwrap();
            for (a, b) in pm.iter().zip(closed_form_pressures_n5(v, r_k, d)) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs());
            }
            let (l, c) = (l1_error_exact(&cfg, v), closed_form_l1_n5(v, r_k, d));
            prop_assert!((l - c).abs() <= 1e-12 * c);
        }
    }
}
