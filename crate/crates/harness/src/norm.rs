//! Area-weighted L2 matrix pressure error between a coarse and a reference field.

use fracflow_core::geometry::clip_polygon_to_rect;
use fracflow_core::CoarseGrid;
use rayon::prelude::*;

use crate::reference::ReferenceField;

/// `sqrt(Σ_I |I| (p_K − p_ref)² / Σ_I |I|) / dp_ref` over all intersections `I`
/// of coarse cells with reference matrix cells. Coarse cells flagged in
/// `exclude` are skipped, and the normalizing area shrinks accordingly.
pub fn matrix_pressure_error(
    grid: &CoarseGrid,
    pressure: &[f64],
    exclude: Option<&[bool]>,
    reference: &ReferenceField,
    dp_ref: f64,
) -> f64 {
    let skip = |c: usize| exclude.is_some_and(|e| e[c]);
    let range = |lo: f64, hi: f64, o: f64, d: f64, n: usize| {
        let a = (((lo - o) / d).floor().max(0.0) as usize).min(n - 1);
        let b = (((hi - o) / d).ceil().max(0.0) as usize).clamp(a + 1, n);
        a..b
    };
    let parts: Vec<(f64, f64)> = (0..reference.shapes.len())
        .into_par_iter()
        .map(|r| {
            if !reference.matrix[r] {
                return (0.0, 0.0);
            }
            let shape = &reference.shapes[r];
            let poly = shape.polygon();
            let bb = shape.bbox();
            let (mut s, mut w) = (0.0, 0.0);
            for j in range(bb.y0, bb.y1, grid.origin.y, grid.dy, grid.ny) {
                for i in range(bb.x0, bb.x1, grid.origin.x, grid.dx, grid.nx) {
                    let c = grid.index(i, j);
                    if skip(c) {
                        continue;
                    }
                    let a = clip_polygon_to_rect(&poly, &grid.rect(c));
                    if a > 0.0 {
                        let e = pressure[c] - reference.pressure[r];
                        s += a * e * e;
                        w += a;
                    }
                }
            }
            (s, w)
        })
        .collect();
    let (s, w) = parts
        .iter()
        .fold((0.0, 0.0), |(s, w), (a, b)| (s + a, w + b));
    if w == 0.0 {
        return 0.0;
    }
    (s / w).sqrt() / dp_ref
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::CellShape;

    #[test]
    fn identical_fields_vanish() {
        let g = CoarseGrid::uniform(2, 2, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let p = vec![0.1, 0.2, 0.3, 0.4];
        let r = ReferenceField {
            shapes: (0..4).map(|c| CellShape::Rect(g.rect(c))).collect(),
            pressure: p.clone(),
            matrix: vec![true; 4],
            unknowns: 4,
        };
        assert_eq!(matrix_pressure_error(&g, &p, None, &r, 1.0), 0.0);
        let shifted: Vec<f64> = p.iter().map(|v| v + 0.05).collect();
        let e = matrix_pressure_error(&g, &shifted, None, &r, 0.5);
        assert!((e - 0.1).abs() < 1e-14);
    }
}
