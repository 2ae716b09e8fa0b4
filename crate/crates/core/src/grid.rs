//! Cartesian background grid, fracture segments and cut-cell metadata.

use crate::error::{Error, Result};
use crate::geometry::{average_distance, Point, Rect};

#[derive(Clone, Debug)]
pub struct CoarseGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: Point,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub phi: Vec<f64>,
}

impl CoarseGrid {
    /// Homogeneous grid of `nx × ny` cells covering `[0, lx] × [0, ly]`.
    pub fn uniform(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        kx: f64,
        ky: f64,
        phi: f64,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Invalid(
                "grid needs at least one cell per axis".into(),
            ));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::Invalid("domain extents must be positive".into()));
        }
        if !(kx > 0.0 && ky > 0.0 && phi > 0.0) {
            return Err(Error::Invalid(
                "permeabilities and porosity must be positive".into(),
            ));
        }
        let n = nx * ny;
        Ok(Self {
            nx,
            ny,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            origin: Point::default(),
            kx: vec![kx; n],
            ky: vec![ky; n],
            phi: vec![phi; n],
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn x_node(&self, i: usize) -> f64 {
        self.origin.x + i as f64 * self.dx
    }

    pub fn y_node(&self, j: usize) -> f64 {
        self.origin.y + j as f64 * self.dy
    }

    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.x_node(self.nx),
            self.y_node(self.ny),
        )
    }

    pub fn rect(&self, c: usize) -> Rect {
        let (i, j) = self.ij(c);
        Rect::new(
            self.x_node(i),
            self.y_node(j),
            self.x_node(i + 1),
            self.y_node(j + 1),
        )
    }

    pub fn center(&self, c: usize) -> Point {
        self.rect(c).center()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn is_square(&self) -> bool {
        (self.dx - self.dy).abs() <= 1e-12 * self.dx.max(self.dy)
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn locate(&self, p: Point) -> (usize, usize) {
        let fi = ((p.x - self.origin.x) / self.dx).floor();
        let fj = ((p.y - self.origin.y) / self.dy).floor();
        let i = (fi.max(0.0) as usize).min(self.nx - 1);
        let j = (fj.max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    pub fn is_isotropic(&self) -> bool {
        self.kx.iter().zip(&self.ky).all(|(a, b)| a == b)
    }

    /// Cells on either side of a face: (left/below, right/above).
    pub fn face_cells(&self, face: Face) -> (Option<usize>, Option<usize>) {
        match face {
            Face::Vertical { i, j } => (
                (i > 0).then(|| self.index(i - 1, j)),
                (i < self.nx).then(|| self.index(i, j)),
            ),
            Face::Horizontal { i, j } => (
                (j > 0).then(|| self.index(i, j - 1)),
                (j < self.ny).then(|| self.index(i, j)),
            ),
        }
    }

    pub fn face_length(&self, face: Face) -> f64 {
        match face {
            Face::Vertical { .. } => self.dy,
            Face::Horizontal { .. } => self.dx,
        }
    }

    /// All interior faces, vertical ones first, each in row-major order.
    pub fn interior_faces(&self) -> Vec<Face> {
        let mut out = Vec::with_capacity(2 * self.n_cells());
        for j in 0..self.ny {
            for i in 1..self.nx {
                out.push(Face::Vertical { i, j });
            }
        }
        for j in 1..self.ny {
            for i in 0..self.nx {
                out.push(Face::Horizontal { i, j });
            }
        }
        out
    }
}

/// A grid face. Vertical faces sit on node column `i` and span row `j`;
/// horizontal faces sit on node row `j` and span column `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    Vertical { i: usize, j: usize },
    Horizontal { i: usize, j: usize },
}

impl Face {
    /// End nodes as `(column, row)` node indices.
    pub fn nodes(self) -> [(usize, usize); 2] {
        match self {
            Face::Vertical { i, j } => [(i, j), (i, j + 1)],
            Face::Horizontal { i, j } => [(i, j), (i + 1, j)],
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Face::Vertical { .. })
    }
}

/// Straight fracture segment with constant aperture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractureSegment {
    pub a: Point,
    pub b: Point,
    pub aperture: f64,
    pub k_tau: f64,
    pub k_n: f64,
}

impl FractureSegment {
    pub fn new(a: Point, b: Point, aperture: f64, k_tau: f64, k_n: f64) -> Result<Self> {
        if a == b {
            return Err(Error::Invalid("fracture endpoints coincide".into()));
        }
        if !(aperture > 0.0 && k_tau > 0.0 && k_n > 0.0) {
            return Err(Error::Invalid(
                "fracture aperture and permeabilities must be positive".into(),
            ));
        }
        Ok(Self {
            a,
            b,
            aperture,
            k_tau,
            k_n,
        })
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn tangent(&self) -> Point {
        (self.b - self.a) * (1.0 / self.length())
    }

    pub fn normal(&self) -> Point {
        self.tangent().perp()
    }
}

/// Portion of a fracture inside one coarse cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutCell {
    pub cell: usize,
    pub fracture: usize,
    pub a: Point,
    pub b: Point,
    pub length: f64,
    pub avg_distance: f64,
    pub ci: f64,
}

impl CutCell {
    pub fn midpoint(&self) -> Point {
        self.a.midpoint(self.b)
    }
}

/// Splits `frac` along the grid lines, ordered from `frac.a` to `frac.b`.
pub fn intersect_fracture(
    grid: &CoarseGrid,
    frac: &FractureSegment,
    id: usize,
) -> Result<Vec<CutCell>> {
    let h = grid.dx.min(grid.dy);
    let ext = grid.extent();
    let tol = 1e-12 * h;
    if !ext.contains(frac.a, tol) || !ext.contains(frac.b, tol) {
        return Err(Error::Invalid(format!("fracture {id} leaves the domain")));
    }
    let d = frac.b - frac.a;
    let len = frac.length();
    let on_line = |v: f64, o: f64, s: f64| {
        let r = (v - o) / s;
        (r - r.round()).abs() < 1e-9
    };
    if d.y.abs() <= 1e-12 * len && on_line(frac.a.y, grid.origin.y, grid.dy) {
        return Err(Error::FractureOnGridLine(id));
    }
    if d.x.abs() <= 1e-12 * len && on_line(frac.a.x, grid.origin.x, grid.dx) {
        return Err(Error::FractureOnGridLine(id));
    }

    let mut ts = vec![0.0, 1.0];
    if d.x != 0.0 {
        for i in 1..grid.nx {
            let t = (grid.x_node(i) - frac.a.x) / d.x;
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    if d.y != 0.0 {
        for j in 1..grid.ny {
            let t = (grid.y_node(j) - frac.a.y) / d.y;
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);

    // (cell, t_start, t_end)
    let mut pieces: Vec<(usize, f64, f64)> = Vec::new();
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        let (i, j) = grid.locate(frac.a.lerp(frac.b, 0.5 * (t0 + t1)));
        let cell = grid.index(i, j);
        match pieces.last_mut() {
            Some(last) if last.0 == cell => last.2 = t1,
            _ => pieces.push((cell, t0, t1)),
        }
    }
    let min_len = 1e-12 * h;
    let mut k = 0;
    while k < pieces.len() && pieces.len() > 1 {
        if (pieces[k].2 - pieces[k].1) * len < min_len {
            log::warn!(
                "fracture {id}: merging degenerate sub-segment in cell {}",
                pieces[k].0
            );
            let p = pieces.remove(k);
            if k > 0 {
                pieces[k - 1].2 = p.2;
            } else {
                pieces[0].1 = p.1;
            }
        } else {
            k += 1;
        }
    }

    let n = frac.normal();
    Ok(pieces
        .into_iter()
        .map(|(cell, t0, t1)| {
            let a = frac.a.lerp(frac.b, t0);
            let b = frac.a.lerp(frac.b, t1);
            let length = (t1 - t0) * len;
            let avg_distance = average_distance(&grid.rect(cell), a, n);
            CutCell {
                cell,
                fracture: id,
                a,
                b,
                length,
                avg_distance,
                ci: length / avg_distance,
            }
        })
        .collect())
}
