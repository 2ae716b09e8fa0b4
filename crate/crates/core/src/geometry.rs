//! Planar geometry primitives: points, rectangles, half-plane clipping.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }

    pub fn midpoint(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Counter-clockwise rotation by 90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p.x >= self.x0 - tol && p.x <= self.x1 + tol && p.y >= self.y0 - tol && p.y <= self.y1 + tol
    }

    /// Corners in counter-clockwise order starting at the lower-left one.
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y0),
            Point::new(self.x1, self.y1),
            Point::new(self.x0, self.y1),
        ]
    }
}

/// Signed shoelace area (positive for counter-clockwise polygons).
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * s
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

pub fn polygon_centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let a = signed_area(poly);
    if a.abs() < f64::MIN_POSITIVE {
        let s = poly.iter().fold(Point::default(), |acc, &p| acc + p);
        return s * (1.0 / n.max(1) as f64);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let c = p.cross(q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    Point::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Keeps the part of `poly` where `n·x <= c`.
pub fn clip_halfplane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let len = poly.len();
    let mut out = Vec::with_capacity(len + 2);
    if len == 0 {
        return out;
    }
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let fp = n.dot(p) - c;
        let fq = n.dot(q) - c;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push(p.lerp(q, t));
        }
    }
    out
}

/// Intersection of a convex polygon with a rectangle (Sutherland–Hodgman).
pub fn clip_polygon(poly: &[Point], rect: &Rect) -> Vec<Point> {
    let mut p = clip_halfplane(poly, Point::new(-1.0, 0.0), -rect.x0);
    p = clip_halfplane(&p, Point::new(1.0, 0.0), rect.x1);
    p = clip_halfplane(&p, Point::new(0.0, -1.0), -rect.y0);
    clip_halfplane(&p, Point::new(0.0, 1.0), rect.y1)
}

/// Area of the intersection of a convex polygon with a rectangle.
pub fn clip_polygon_to_rect(poly: &[Point], rect: &Rect) -> f64 {
    polygon_area(&clip_polygon(poly, rect))
}

/// Parameter interval of the segment `a + t (b - a)`, `t ∈ [0, 1]`, inside `rect`
/// (Liang–Barsky).
pub fn clip_segment(a: Point, b: Point, rect: &Rect) -> Option<(f64, f64)> {
    let d = b - a;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    let checks = [
        (-d.x, a.x - rect.x0),
        (d.x, rect.x1 - a.x),
        (-d.y, a.y - rect.y0),
        (d.y, rect.y1 - a.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Mean over `rect` of the distance to the infinite line through `x_f` with unit
/// normal `n`. The rectangle is split along the line and the (piecewise linear)
/// integrand is integrated exactly on each convex piece.
pub fn average_distance(rect: &Rect, x_f: Point, n: Point) -> f64 {
    let corners = rect.corners();
    let c = n.dot(x_f);
    let below = clip_halfplane(&corners, n, c);
    let above = clip_halfplane(&corners, -n, -c);
    let mut total = 0.0;
    for piece in [below, above] {
        let a = polygon_area(&piece);
        if a > 0.0 {
            total += a * (n.dot(polygon_centroid(&piece)) - c).abs();
        }
    }
    total / rect.area()
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Proper intersection parameter `(t, s)` of segments `a + t (b-a)` and `c + s (d-c)`.
pub fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den.abs() <= 1e-14 * r.norm() * s.norm() {
        return None;
    }
    let t = (c - a).cross(s) / den;
    let u = (c - a).cross(r) / den;
    let eps = 1e-12;
    ((-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u)).then_some((t, u))
}

/// Circumcenter of a triangle.
pub fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let b = b - a;
    let c = c - a;
    let d = 2.0 * b.cross(c);
    let b2 = b.dot(b);
    let c2 = c.dot(c);
    Point::new((c.y * b2 - b.y * c2) / d, (b.x * c2 - c.x * b2) / d) + a
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return f64::NAN;
    }
    let lx: Vec<f64> = x[..n].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y[..n].iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..n {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    sxy / sxx
}
