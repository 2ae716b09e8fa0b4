use fracflow::norm::matrix_pressure_error;
use fracflow::reference::{equidim_grid, solve_conforming, CellShape, ReferenceField};
use fracflow::scenario::{presets, MethodName};
use fracflow_core::geometry::{clip_polygon_to_rect, Point, Rect};
use fracflow_core::CoarseGrid;

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Reference: an irregular 4×5 tensor grid with values `r(i, j)`; the cell
/// (1, 2) is flagged as non-matrix.
fn reference(triangles: bool) -> (ReferenceField, Vec<Rect>, Vec<f64>, Vec<bool>) {
    let xs = [0.0, 0.13, 0.5, 0.71, 1.0];
    let ys = [0.0, 0.2, 0.37, 0.52, 0.9, 1.0];
    let (mut rects, mut values, mut matrix) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..5 {
        for i in 0..4 {
            rects.push(Rect::new(xs[i], ys[j], xs[i + 1], ys[j + 1]));
            values.push(0.1 * i as f64 - 0.07 * j as f64 + 0.3);
            matrix.push(!(i == 1 && j == 2));
        }
    }
    let mut field = ReferenceField {
        shapes: Vec::new(),
        pressure: Vec::new(),
        matrix: Vec::new(),
        unknowns: rects.len(),
    };
    for ((r, v), m) in rects.iter().zip(&values).zip(&matrix) {
        if triangles {
            let [a, b, c, d] = [
                Point::new(r.x0, r.y0),
                Point::new(r.x1, r.y0),
                Point::new(r.x1, r.y1),
                Point::new(r.x0, r.y1),
            ];
            for t in [[a, b, c], [a, c, d]] {
                field.shapes.push(CellShape::Tri(t));
                field.pressure.push(*v);
                field.matrix.push(*m);
            }
        } else {
            field.shapes.push(CellShape::Rect(*r));
            field.pressure.push(*v);
            field.matrix.push(*m);
        }
    }
    (field, rects, values, matrix)
}

fn hand_sum(grid: &CoarseGrid, p: &[f64], skip: &[bool], dp: f64) -> f64 {
    let (_, rects, values, matrix) = reference(false);
    let (mut s, mut w) = (0.0, 0.0);
    for c in 0..grid.n_cells() {
        if skip[c] {
            continue;
        }
        let k = grid.rect(c);
        for ((r, v), m) in rects.iter().zip(&values).zip(&matrix) {
            if !m {
                continue;
            }
            let a = overlap(k.x0, k.x1, r.x0, r.x1) * overlap(k.y0, k.y1, r.y0, r.y1);
            s += a * (p[c] - v) * (p[c] - v);
            w += a;
        }
    }
    (s / w).sqrt() / dp
}

#[test]
fn piecewise_constant_pair_matches_hand_sum() {
    let g = CoarseGrid::uniform(3, 3, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap();
    let p: Vec<f64> = (0..9).map(|c| 0.05 * c as f64 + 0.1).collect();
    let none = vec![false; 9];
    let mut cut = none.clone();
    cut[4] = true;
    cut[2] = true;
    for triangles in [false, true] {
        let (field, ..) = reference(triangles);
        for (mask, skip) in [(None, &none), (Some(cut.as_slice()), &cut)] {
            let e = matrix_pressure_error(&g, &p, mask, &field, 0.8);
            let h = hand_sum(&g, &p, skip, 0.8);
            assert!((e - h).abs() <= 1e-12 * h, "triangles {triangles}: {e} vs {h}");
        }
    }
}

#[test]
fn uniform_offset_gives_offset_over_drop() {
    let g = CoarseGrid::uniform(5, 5, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap();
    let (field, ..) = reference(true);
    let fine = CoarseGrid::uniform(4, 4, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap();
    let exact = ReferenceField {
        shapes: (0..16).map(|c| CellShape::Rect(fine.rect(c))).collect(),
        pressure: vec![0.25; 16],
        matrix: vec![true; 16],
        unknowns: 16,
    };
    let e = matrix_pressure_error(&g, &vec![0.25 + 0.03; 25], None, &exact, 2.0);
    assert!((e - 0.015).abs() < 1e-14);
    assert!(matrix_pressure_error(&g, &vec![0.3; 25], None, &field, 1.0) > 0.0);
}

#[test]
fn reference_cells_tile_every_coarse_cell() {
    let sc = presets::test1(1e4, MethodName::Edfm, 7);
    let g = sc.coarse_grid(7).unwrap();
    let tri = solve_conforming(&sc, 1.0 / 40.0).unwrap().field();
    let tensor = equidim_grid(&presets::test2(1e-8, MethodName::Edfm, 7), 60).unwrap();
    let rects: Vec<Vec<Point>> = (0..tensor.n_cells())
        .map(|c| CellShape::Rect(tensor.rect(c)).polygon())
        .collect();
    for c in [0, 8, 24, 48] {
        let k = g.rect(c);
        let s: f64 = tri.shapes.iter().map(|t| clip_polygon_to_rect(&t.polygon(), &k)).sum();
        assert!((s - k.area()).abs() <= 1e-10 * k.area(), "triangles in {c}: {s}");
        let s: f64 = rects.iter().map(|r| clip_polygon_to_rect(r, &k)).sum();
        assert!((s - k.area()).abs() <= 1e-10 * k.area(), "rectangles in {c}: {s}");
    }
}
