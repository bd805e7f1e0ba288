//! Small fixed-dimension vector and axis-box helpers.
//!
//! Everything here works on `[f64; D]` with `D` a const generic (the crate
//! supports `D = 1` and `D = 2`). No external linear algebra is needed at
//! this scale.

/// A point (or vector) in `R^D`.
pub type Point<const D: usize> = [f64; D];

pub fn sub<const D: usize>(a: &Point<D>, b: &Point<D>) -> Point<D> {
    let mut out = [0.0; D];
    for j in 0..D {
        out[j] = a[j] - b[j];
    }
    out
}

pub fn add<const D: usize>(a: &Point<D>, b: &Point<D>) -> Point<D> {
    let mut out = [0.0; D];
    for j in 0..D {
        out[j] = a[j] + b[j];
    }
    out
}

pub fn scale<const D: usize>(a: &Point<D>, c: f64) -> Point<D> {
    let mut out = [0.0; D];
    for j in 0..D {
        out[j] = c * a[j];
    }
    out
}

pub fn dot<const D: usize>(a: &Point<D>, b: &Point<D>) -> f64 {
    let mut s = 0.0;
    for j in 0..D {
        s += a[j] * b[j];
    }
    s
}

pub fn norm<const D: usize>(a: &Point<D>) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist<const D: usize>(a: &Point<D>, b: &Point<D>) -> f64 {
    norm(&sub(a, b))
}

/// Linear interpolation `a + t (b - a)`.
pub fn lerp<const D: usize>(a: &Point<D>, b: &Point<D>, t: f64) -> Point<D> {
    let mut out = [0.0; D];
    for j in 0..D {
        out[j] = a[j] + t * (b[j] - a[j]);
    }
    out
}

/// Closed axis-aligned box `[lo_1, hi_1] x ... x [lo_D, hi_D]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisBox<const D: usize> {
    pub lo: Point<D>,
    pub hi: Point<D>,
}

impl<const D: usize> AxisBox<D> {
    pub fn new(lo: Point<D>, hi: Point<D>) -> Self {
        for j in 0..D {
            assert!(lo[j] <= hi[j], "degenerate axis box");
        }
        Self { lo, hi }
    }

    pub fn center(&self) -> Point<D> {
        let mut c = [0.0; D];
        for j in 0..D {
            c[j] = 0.5 * (self.lo[j] + self.hi[j]);
        }
        c
    }

    pub fn side(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }

    pub fn diam(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..D {
            let d = self.side(j);
            s += d * d;
        }
        s.sqrt()
    }

    pub fn measure(&self) -> f64 {
        let mut v = 1.0;
        for j in 0..D {
            v *= self.side(j);
        }
        v
    }

    pub fn contains(&self, x: &Point<D>) -> bool {
        (0..D).all(|j| self.lo[j] <= x[j] && x[j] <= self.hi[j])
    }

    pub fn contains_box(&self, other: &AxisBox<D>) -> bool {
        (0..D).all(|j| self.lo[j] <= other.lo[j] && other.hi[j] <= self.hi[j])
    }

    pub fn intersects(&self, other: &AxisBox<D>) -> bool {
        (0..D).all(|j| self.lo[j] <= other.hi[j] && other.lo[j] <= self.hi[j])
    }

    /// Euclidean distance from `x` to this box (0 if inside).
    pub fn dist_to_point(&self, x: &Point<D>) -> f64 {
        let mut s = 0.0;
        for j in 0..D {
            let d = if x[j] < self.lo[j] {
                self.lo[j] - x[j]
            } else if x[j] > self.hi[j] {
                x[j] - self.hi[j]
            } else {
                0.0
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Euclidean gap between two boxes (0 if they touch or overlap).
    pub fn dist_to_box(&self, other: &AxisBox<D>) -> f64 {
        let mut s = 0.0;
        for j in 0..D {
            let gap = (self.lo[j] - other.hi[j]).max(other.lo[j] - self.hi[j]).max(0.0);
            s += gap * gap;
        }
        s.sqrt()
    }

    /// Point of the box nearest to `x` (clamp per axis).
    pub fn clamp(&self, x: &Point<D>) -> Point<D> {
        let mut out = [0.0; D];
        for j in 0..D {
            out[j] = x[j].clamp(self.lo[j], self.hi[j]);
        }
        out
    }

    /// Grow (or shrink, for negative `m`) the box by `m` on every face.
    pub fn inflate(&self, m: f64) -> AxisBox<D> {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for j in 0..D {
            lo[j] -= m;
            hi[j] += m;
        }
        AxisBox { lo, hi }
    }

    /// Dilation around the center by factor `1 + eps`.
    pub fn dilate(&self, eps: f64) -> AxisBox<D> {
        let c = self.center();
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for j in 0..D {
            let h = 0.5 * (1.0 + eps) * self.side(j);
            lo[j] = c[j] - h;
            hi[j] = c[j] + h;
        }
        AxisBox { lo, hi }
    }

    /// All `2^D` corners, in lexicographic bit order.
    pub fn corners(&self) -> Vec<Point<D>> {
        let mut out = Vec::with_capacity(1 << D);
        for mask in 0..(1usize << D) {
            let mut p = [0.0; D];
            for j in 0..D {
                p[j] = if mask >> j & 1 == 1 { self.hi[j] } else { self.lo[j] };
            }
            out.push(p);
        }
        out
    }

    /// Largest |x| over the box and smallest |x| over the box.
    pub fn norm_range(&self) -> (f64, f64) {
        let nearest = self.clamp(&[0.0; D]);
        let min = norm(&nearest);
        let mut max: f64 = 0.0;
        for c in self.corners() {
            max = max.max(norm(&c));
        }
        (min, max)
    }
}

/// Distance from an axis box to a closed segment [a, b] in 2D.
///
/// Used for exact cube-to-boundary distances of polygonal domains.
pub fn box_segment_dist(b: &AxisBox<2>, p: &Point<2>, q: &Point<2>) -> f64 {
    if segment_intersects_box(b, p, q) {
        return 0.0;
    }
    // Either the nearest segment point projects onto a box face, or a box
    // corner is nearest to the segment interior. Sample both candidate sets.
    let mut best = f64::INFINITY;
    for c in b.corners() {
        best = best.min(point_segment_dist(&c, p, q));
    }
    best = best.min(b.dist_to_point(p));
    best = best.min(b.dist_to_point(q));
    // Nearest point of the segment to the box interior along each axis band:
    // project box center onto the segment and measure.
    let c = b.center();
    let t = segment_project(&c, p, q);
    let s = lerp(p, q, t);
    best = best.min(b.dist_to_point(&s));
    // Refine by ternary search of dist(box, segment point) over t in [0,1];
    // the function is convex in t.
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let m1 = t0 + (t1 - t0) / 3.0;
        let m2 = t1 - (t1 - t0) / 3.0;
        let d1 = b.dist_to_point(&lerp(p, q, m1));
        let d2 = b.dist_to_point(&lerp(p, q, m2));
        if d1 <= d2 {
            t1 = m2;
        } else {
            t0 = m1;
        }
    }
    best = best.min(b.dist_to_point(&lerp(p, q, 0.5 * (t0 + t1))));
    best
}

pub fn point_segment_dist(x: &Point<2>, p: &Point<2>, q: &Point<2>) -> f64 {
    let t = segment_project(x, p, q);
    dist(x, &lerp(p, q, t))
}

fn segment_project(x: &Point<2>, p: &Point<2>, q: &Point<2>) -> f64 {
    let d = sub(q, p);
    let len2 = dot(&d, &d);
    if len2 == 0.0 {
        return 0.0;
    }
    (dot(&sub(x, p), &d) / len2).clamp(0.0, 1.0)
}

fn segment_intersects_box(b: &AxisBox<2>, p: &Point<2>, q: &Point<2>) -> bool {
    if b.contains(p) || b.contains(q) {
        return true;
    }
    // Slab test.
    let d = sub(q, p);
    let mut tmin = 0.0f64;
    let mut tmax = 1.0f64;
    for j in 0..2 {
        if d[j].abs() < 1e-300 {
            if p[j] < b.lo[j] || p[j] > b.hi[j] {
                return false;
            }
        } else {
            let inv = 1.0 / d[j];
            let mut t0 = (b.lo[j] - p[j]) * inv;
            let mut t1 = (b.hi[j] - p[j]) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            tmin = tmin.max(t0);
            tmax = tmax.min(t1);
            if tmin > tmax {
                return false;
            }
        }
    }
    true
}

/// Least-squares slope of `y` against `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
