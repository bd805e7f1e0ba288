//! Open sets with certified distance-to-boundary oracles.
//!
//! A [`Domain`] bundles a membership predicate, the distance function
//! `x -> dist(x, boundary)`, a bounding box for the boundary-relevant
//! geometry, and the inner radii of the set and its complement. Builtin
//! shapes provide *exact* closed-form distances, including exact distances
//! from an axis box to the boundary, which is what makes the cube selection
//! in the `whitney` module certifiable rather than statistical.
//!
//! Conventions used throughout the crate:
//! * `delta(x)` always means `dist(x, boundary)`, for points on either side;
//! * the inner collar `{x in D : dist(x, complement) <= delta}` uses a
//!   non-strict inequality while the outer collar uses a strict one.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{
    box_segment_dist, dist, norm, point_segment_dist, AxisBox, Point,
};
use crate::sampling::{r2_points_in_ball, r2_points_in_box};

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("parameter `{0}` must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("shape `{0}` is not available in dimension {1}")]
    BadDimension(&'static str, usize),
    #[error("interval requires a < b, got [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("annuli_balls requires n_max >= 2 (no admissible balls exist at n = 1)")]
    AnnuliTooShallow,
    #[error("signed-distance grid: {0}")]
    Grid(String),
}

/// Smoothness/integrability parameters `(s, p)` of the seminorm family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub s: f64,
    pub p: f64,
}

impl SobolevParams {
    pub fn new(s: f64, p: f64) -> Self {
        assert!(s > 0.0 && s <= 1.0, "require 0 < s <= 1, got s = {s}");
        assert!(p >= 1.0 && p.is_finite(), "require 1 <= p < inf, got p = {p}");
        Self { s, p }
    }

    /// Kernel exponent `d + s p`.
    pub fn kernel_exponent(&self, d: usize) -> f64 {
        d as f64 + self.s * self.p
    }
}

/// Region selectors for the integral functionals.
///
/// `OmegaIntDelta(delta)` is `{x in Omega : dist(x, complement) <= delta}`,
/// `OmegaExtEps(eps)` is `{x in complement : dist(x, Omega) < eps}` (strict,
/// matching the asymmetry of the definitions), and `OmegaWithExt(eps)` is
/// the union `Omega ∪ OmegaExtEps(eps)` needed for the equivalence checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegionSpec {
    Omega,
    OmegaComplement,
    OmegaIntDelta(f64),
    OmegaExtEps(f64),
    OmegaWithExt(f64),
    FullSpace,
}

impl RegionSpec {
    /// Which sides of the boundary the region can touch: (omega, complement).
    pub fn sides(&self) -> (bool, bool) {
        match self {
            RegionSpec::Omega | RegionSpec::OmegaIntDelta(_) => (true, false),
            RegionSpec::OmegaComplement | RegionSpec::OmegaExtEps(_) => (false, true),
            RegionSpec::OmegaWithExt(_) | RegionSpec::FullSpace => (true, true),
        }
    }
}

#[derive(Clone, Debug)]
enum Shape<const D: usize> {
    Interval { a: f64, b: f64 },
    Ball { radius: f64 },
    Box { half_widths: [f64; D] },
    LShape { size: f64 },
    HalfSpace,
    AnnuliBalls { centers: Vec<Point<D>>, radii: Vec<f64> },
    Grid(Arc<GridSdf<D>>),
}

/// An open set with a certified distance oracle.
#[derive(Clone, Debug)]
pub struct Domain<const D: usize> {
    shape: Shape<D>,
    bounding_box: AxisBox<D>,
    inr_omega: f64,
    inr_complement: f64,
    exact_distance: bool,
    name: String,
}

impl<const D: usize> Domain<D> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        D
    }

    /// Box containing all boundary-relevant geometry.
    pub fn bounding_box(&self) -> AxisBox<D> {
        self.bounding_box
    }

    pub fn inr_omega(&self) -> f64 {
        self.inr_omega
    }

    pub fn inr_complement(&self) -> f64 {
        self.inr_complement
    }

    /// True when the distance oracle is exact (all builtin shapes).
    pub fn exact_distance(&self) -> bool {
        self.exact_distance
    }

    pub fn interval(a: f64, b: f64) -> Result<Self, DomainError> {
        if D != 1 {
            return Err(DomainError::BadDimension("interval", D));
        }
        if !(a < b) {
            return Err(DomainError::EmptyInterval(a, b));
        }
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        lo[0] = a;
        hi[0] = b;
        Ok(Self {
            shape: Shape::Interval { a, b },
            bounding_box: AxisBox::new(lo, hi),
            inr_omega: 0.5 * (b - a),
            inr_complement: f64::INFINITY,
            exact_distance: true,
            name: format!("interval({a},{b})"),
        })
    }

    pub fn ball(radius: f64) -> Result<Self, DomainError> {
        if radius <= 0.0 {
            return Err(DomainError::NonPositive("radius", radius));
        }
        Ok(Self {
            shape: Shape::Ball { radius },
            bounding_box: AxisBox::new([-radius; D], [radius; D]),
            inr_omega: radius,
            inr_complement: f64::INFINITY,
            exact_distance: true,
            name: format!("ball({radius})"),
        })
    }

    pub fn axis_box(half_widths: [f64; D]) -> Result<Self, DomainError> {
        for &h in &half_widths {
            if h <= 0.0 {
                return Err(DomainError::NonPositive("half_width", h));
            }
        }
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for j in 0..D {
            lo[j] = -half_widths[j];
            hi[j] = half_widths[j];
        }
        let inr = half_widths.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            shape: Shape::Box { half_widths },
            bounding_box: AxisBox::new(lo, hi),
            inr_omega: inr,
            inr_complement: f64::INFINITY,
            exact_distance: true,
            name: format!("box({half_widths:?})"),
        })
    }

    /// L-shaped set `size * ((-1,1)^2 \ [0,1]x[-1,0])`.
    pub fn l_shape(size: f64) -> Result<Self, DomainError> {
        if D != 2 {
            return Err(DomainError::BadDimension("l_shape", D));
        }
        if size <= 0.0 {
            return Err(DomainError::NonPositive("size", size));
        }
        // The largest inscribed ball spans the reflex corner diagonally:
        // center (-c, c) with c = 1/(1+sqrt 2), radius 2 - sqrt 2.
        Ok(Self {
            shape: Shape::LShape { size },
            bounding_box: AxisBox::new([-size; D], [size; D]),
            inr_omega: (2.0 - 2f64.sqrt()) * size,
            inr_complement: f64::INFINITY,
            exact_distance: true,
            name: format!("l_shape({size})"),
        })
    }

    /// Half-space `{x : x_1 < 0}`.
    pub fn half_space() -> Result<Self, DomainError> {
        Ok(Self {
            shape: Shape::HalfSpace,
            bounding_box: AxisBox::new([-4.0; D], [4.0; D]),
            inr_omega: f64::INFINITY,
            inr_complement: f64::INFINITY,
            exact_distance: true,
            name: "half_space".into(),
        })
    }

    /// Union of disjoint balls packed in dyadic annuli: in annulus
    /// `2^{-n-1} <= |x| < 2^{-n}` a maximal family of centers with pairwise
    /// disjoint balls of radius `a_n = 2^{-n-1}/n` contained in the annulus,
    /// and the set takes the balls of half that radius. No admissible center
    /// exists for `n = 1`, so packing starts at `n = 2`.
    pub fn annuli_balls(n_max: u32) -> Result<Self, DomainError> {
        if D != 2 {
            return Err(DomainError::BadDimension("annuli_balls", D));
        }
        if n_max < 2 {
            return Err(DomainError::AnnuliTooShallow);
        }
        let mut centers: Vec<Point<D>> = Vec::new();
        let mut radii = Vec::new();
        for n in 2..=n_max {
            let a_n = 2f64.powi(-(n as i32) - 1) / n as f64;
            let r_in = 2f64.powi(-(n as i32) - 1) + a_n;
            let r_out = 2f64.powi(-(n as i32)) - a_n;
            if r_in > r_out {
                continue;
            }
            let mut accepted: Vec<Point<2>> = Vec::new();
            // Greedy maximal packing over a fine polar candidate grid,
            // radius-major then angle, deterministic order.
            let dr = a_n / 8.0;
            let n_r = ((r_out - r_in) / dr).floor() as usize + 1;
            for ir in 0..n_r {
                let r = r_in + ir as f64 * dr;
                let dth = dr / r;
                let n_th = (std::f64::consts::TAU / dth).floor() as usize;
                for it in 0..n_th {
                    let th = it as f64 * std::f64::consts::TAU / n_th as f64;
                    let cand = [r * th.cos(), r * th.sin()];
                    if accepted.iter().all(|c| dist(c, &cand) >= 2.0 * a_n) {
                        accepted.push(cand);
                    }
                }
            }
            for c in accepted {
                let mut p = [0.0; D];
                p[0] = c[0];
                p[1] = c[1];
                centers.push(p);
                radii.push(0.5 * a_n);
            }
        }
        let r_bound = 2f64.powi(-2);
        let inr = radii.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            shape: Shape::AnnuliBalls { centers, radii },
            bounding_box: AxisBox::new([-r_bound; D], [r_bound; D]),
            inr_omega: inr,
            inr_complement: f64::INFINITY,
            exact_distance: true,
            name: format!("annuli_balls({n_max})"),
        })
    }

    pub fn from_grid(grid: GridSdf<D>) -> Result<Self, DomainError> {
        grid.validate()?;
        let bbox = grid.bounding_box();
        let inr = grid.estimate_inner_radius(true);
        let inr_c = grid.estimate_inner_radius(false);
        Ok(Self {
            shape: Shape::Grid(Arc::new(grid)),
            bounding_box: bbox,
            inr_omega: inr,
            inr_complement: inr_c,
            exact_distance: false,
            name: "grid_sdf".into(),
        })
    }

    /// Membership `x in Omega` (open set).
    pub fn member(&self, x: &Point<D>) -> bool {
        match &self.shape {
            Shape::Interval { a, b } => *a < x[0] && x[0] < *b,
            Shape::Ball { radius } => norm(x) < *radius,
            Shape::Box { half_widths } => (0..D).all(|j| x[j].abs() < half_widths[j]),
            Shape::LShape { size } => {
                let (u, v) = (x[0] / size, x[1] / size);
                u > -1.0 && u < 1.0 && v > -1.0 && v < 1.0 && (u < 0.0 || v > 0.0)
            }
            Shape::HalfSpace => x[0] < 0.0,
            Shape::AnnuliBalls { centers, radii } => centers
                .iter()
                .zip(radii)
                .any(|(c, r)| dist(c, x) < *r),
            Shape::Grid(g) => g.value(x) < 0.0,
        }
    }

    /// Distance to the boundary, `dist(x, boundary)`, defined on all of R^D.
    pub fn boundary_distance(&self, x: &Point<D>) -> f64 {
        match &self.shape {
            Shape::Interval { a, b } => (x[0] - a).abs().min((x[0] - b).abs()),
            Shape::Ball { radius } => (norm(x) - radius).abs(),
            Shape::Box { half_widths } => {
                let mut inside_margin = f64::INFINITY;
                let mut out2 = 0.0;
                let mut outside = false;
                for j in 0..D {
                    let q = x[j].abs() - half_widths[j];
                    if q > 0.0 {
                        outside = true;
                        out2 += q * q;
                    }
                    inside_margin = inside_margin.min(-q);
                }
                if outside {
                    out2.sqrt()
                } else {
                    inside_margin
                }
            }
            Shape::LShape { size } => {
                let p2 = [x[0], x[1]];
                let mut best = f64::INFINITY;
                for (a, b) in l_shape_edges(*size) {
                    best = best.min(point_segment_dist(&p2, &a, &b));
                }
                best
            }
            Shape::HalfSpace => x[0].abs(),
            Shape::AnnuliBalls { centers, radii } => {
                let mut best = f64::INFINITY;
                for (c, r) in centers.iter().zip(radii) {
                    best = best.min((dist(c, x) - r).abs());
                }
                best
            }
            Shape::Grid(g) => g.value(x).abs(),
        }
    }

    /// Certified interval for `boundary_distance(x)`; exact shapes return a
    /// zero-width interval.
    pub fn boundary_distance_bounds(&self, x: &Point<D>) -> (f64, f64) {
        match &self.shape {
            Shape::Grid(g) => {
                let v = g.value(x).abs();
                let e = g.local_error(x);
                ((v - e).max(0.0), v + e)
            }
            _ => {
                let v = self.boundary_distance(x);
                (v, v)
            }
        }
    }

    /// Certified interval for `dist(cell, boundary)`. Exact for builtins.
    pub fn cube_boundary_distance(&self, cell: &AxisBox<D>) -> (f64, f64) {
        match &self.shape {
            Shape::Interval { a, b } => {
                let mut pa = [0.0; D];
                let mut pb = [0.0; D];
                pa[0] = *a;
                pb[0] = *b;
                let v = cell.dist_to_point(&pa).min(cell.dist_to_point(&pb));
                (v, v)
            }
            Shape::Ball { radius } => {
                let (nmin, nmax) = cell.norm_range();
                let v = if nmax <= *radius {
                    radius - nmax
                } else if nmin >= *radius {
                    nmin - radius
                } else {
                    0.0
                };
                (v, v)
            }
            Shape::Box { half_widths } => {
                let mut lo = [0.0; D];
                let mut hi = [0.0; D];
                for j in 0..D {
                    lo[j] = -half_widths[j];
                    hi[j] = half_widths[j];
                }
                let b = AxisBox::new(lo, hi);
                let v = if b.contains_box(cell) {
                    // Entirely inside: nearest face margin.
                    let mut m = f64::INFINITY;
                    for j in 0..D {
                        let extent = cell.lo[j].abs().max(cell.hi[j].abs());
                        m = m.min(half_widths[j] - extent);
                    }
                    m
                } else if cell.intersects(&b) {
                    0.0
                } else {
                    cell.dist_to_box(&b)
                };
                (v, v)
            }
            Shape::LShape { size } => {
                let c2 = AxisBox::<2>::new([cell.lo[0], cell.lo[1]], [cell.hi[0], cell.hi[1]]);
                let mut best = f64::INFINITY;
                for (a, b) in l_shape_edges(*size) {
                    best = best.min(box_segment_dist(&c2, &a, &b));
                }
                (best, best)
            }
            Shape::HalfSpace => {
                let v = if cell.lo[0] <= 0.0 && 0.0 <= cell.hi[0] {
                    0.0
                } else {
                    cell.lo[0].abs().min(cell.hi[0].abs())
                };
                (v, v)
            }
            Shape::AnnuliBalls { centers, radii } => {
                let mut best = f64::INFINITY;
                for (c, r) in centers.iter().zip(radii) {
                    let mut shifted_lo = [0.0; D];
                    let mut shifted_hi = [0.0; D];
                    for j in 0..D {
                        shifted_lo[j] = cell.lo[j] - c[j];
                        shifted_hi[j] = cell.hi[j] - c[j];
                    }
                    let sb = AxisBox::new(shifted_lo, shifted_hi);
                    let (nmin, nmax) = sb.norm_range();
                    let v = if nmax <= *r {
                        r - nmax
                    } else if nmin >= *r {
                        nmin - r
                    } else {
                        0.0
                    };
                    best = best.min(v);
                }
                (best, best)
            }
            Shape::Grid(g) => {
                let c = cell.center();
                let v = g.value(&c).abs();
                let e = g.local_error(&c);
                let half = 0.5 * cell.diam();
                ((v - e - half).max(0.0), v + e)
            }
        }
    }

    /// Worst certified ratio `upper/lower` of the distance oracle, probed
    /// away from the boundary. Exact shapes return 1.
    pub fn certification_ratio(&self) -> f64 {
        match &self.shape {
            Shape::Grid(g) => g.certification_ratio(),
            _ => 1.0,
        }
    }

    /// True when the boundary is nonempty (a decomposition is meaningful).
    pub fn has_boundary(&self) -> bool {
        match &self.shape {
            Shape::Grid(g) => g.has_sign_change(),
            _ => true,
        }
    }

    /// Geometrically critical points worth probing (reflex corners, the
    /// accumulation point of the annuli family).
    pub fn probe_points(&self) -> Vec<Point<D>> {
        match &self.shape {
            Shape::LShape { .. } => vec![[0.0; D]],
            Shape::AnnuliBalls { .. } => vec![[0.0; D]],
            _ => Vec::new(),
        }
    }

    /// Membership in a region selector.
    pub fn region_contains(&self, region: &RegionSpec, x: &Point<D>) -> bool {
        match region {
            RegionSpec::Omega => self.member(x),
            RegionSpec::OmegaComplement => !self.member(x),
            RegionSpec::OmegaIntDelta(delta) => {
                self.member(x) && self.boundary_distance(x) <= *delta
            }
            RegionSpec::OmegaExtEps(eps) => {
                !self.member(x) && self.boundary_distance(x) < *eps
            }
            RegionSpec::OmegaWithExt(eps) => {
                self.member(x) || self.boundary_distance(x) < *eps
            }
            RegionSpec::FullSpace => true,
        }
    }

    /// Nearest boundary point to `x`, with deterministic tie-breaking
    /// (lexicographically smallest coordinates / smallest angle).
    pub fn nearest_boundary_point(&self, x: &Point<D>) -> Point<D> {
        match &self.shape {
            Shape::Interval { a, b } => {
                let (da, db) = ((x[0] - a).abs(), (x[0] - b).abs());
                let mut p = [0.0; D];
                p[0] = if da <= db { *a } else { *b };
                p
            }
            Shape::Ball { radius } => {
                let n = norm(x);
                if n == 0.0 {
                    let mut p = [0.0; D];
                    p[0] = *radius;
                    return p;
                }
                let mut p = [0.0; D];
                for j in 0..D {
                    p[j] = x[j] / n * radius;
                }
                p
            }
            Shape::HalfSpace => {
                let mut p = *x;
                p[0] = 0.0;
                p
            }
            Shape::AnnuliBalls { centers, radii } => {
                let mut best = f64::INFINITY;
                let mut bp = [0.0; D];
                for (c, r) in centers.iter().zip(radii) {
                    let dc = dist(c, x);
                    let dv = (dc - r).abs();
                    if dv < best {
                        best = dv;
                        if dc == 0.0 {
                            bp = *c;
                            bp[0] += r;
                        } else {
                            for j in 0..D {
                                bp[j] = c[j] + (x[j] - c[j]) / dc * r;
                            }
                        }
                    }
                }
                bp
            }
            Shape::LShape { size } => {
                let p2 = [x[0], x[1]];
                let mut best = f64::INFINITY;
                let mut bp2 = [0.0; 2];
                for (a, b) in l_shape_edges(*size) {
                    let t = project_to_segment(&p2, &a, &b);
                    let d = dist(&p2, &t);
                    if d < best - 1e-15 {
                        best = d;
                        bp2 = t;
                    }
                }
                let mut p = [0.0; D];
                p[0] = bp2[0];
                p[1] = bp2[1];
                p
            }
            Shape::Box { half_widths } => {
                // Project onto the box surface: clamp, then push the deepest
                // axis to the nearest face when inside.
                let mut p = *x;
                let mut inside = true;
                for j in 0..D {
                    if x[j].abs() >= half_widths[j] {
                        inside = false;
                    }
                    p[j] = x[j].clamp(-half_widths[j], half_widths[j]);
                }
                if inside {
                    let mut jbest = 0;
                    let mut margin = f64::INFINITY;
                    for j in 0..D {
                        let m = half_widths[j] - x[j].abs();
                        if m < margin {
                            margin = m;
                            jbest = j;
                        }
                    }
                    p[jbest] = half_widths[jbest] * if x[jbest] >= 0.0 { 1.0 } else { -1.0 };
                }
                p
            }
            Shape::Grid(g) => g.project_to_boundary(x),
        }
    }
}

fn project_to_segment(x: &Point<2>, a: &Point<2>, b: &Point<2>) -> Point<2> {
    let dx = [b[0] - a[0], b[1] - a[1]];
    let len2 = dx[0] * dx[0] + dx[1] * dx[1];
    if len2 == 0.0 {
        return *a;
    }
    let t = (((x[0] - a[0]) * dx[0] + (x[1] - a[1]) * dx[1]) / len2).clamp(0.0, 1.0);
    [a[0] + t * dx[0], a[1] + t * dx[1]]
}

fn l_shape_edges(size: f64) -> [(Point<2>, Point<2>); 6] {
    let s = size;
    [
        ([-s, -s], [0.0, -s]),
        ([0.0, -s], [0.0, 0.0]),
        ([0.0, 0.0], [s, 0.0]),
        ([s, 0.0], [s, s]),
        ([s, s], [-s, s]),
        ([-s, s], [-s, -s]),
    ]
}

/// `(|x - y| + delta_x + delta_y)^{d + s p}`.
pub fn kernel_denominator<const D: usize>(
    x: &Point<D>,
    y: &Point<D>,
    domain: &Domain<D>,
    params: &SobolevParams,
) -> f64 {
    let base = dist(x, y) + domain.boundary_distance(x) + domain.boundary_distance(y);
    base.powf(params.kernel_exponent(D))
}

// ---------------------------------------------------------------------------
// Plumpness probing
// ---------------------------------------------------------------------------

/// Best inscribed-ball ratio at `(x, r)`: the largest `kappa` such that some
/// `z` in the closed ball `B(x, r)` has `B(z, kappa r)` inside the set.
pub fn plumpness_at<const D: usize>(domain: &Domain<D>, x: &Point<D>, r: f64) -> f64 {
    let coarse = 1024usize << D;
    let mut best_z = *x;
    let mut best = if domain.member(x) { domain.boundary_distance(x) } else { 0.0 };
    for z in r2_points_in_ball(x, r, coarse) {
        if domain.member(&z) {
            let v = domain.boundary_distance(&z);
            if v > best {
                best = v;
                best_z = z;
            }
        }
    }
    // Local refinement around the best point, kept inside B(x, r).
    let mut rho = r * 0.25;
    for _ in 0..24 {
        for z in r2_points_in_ball(&best_z, rho, 48) {
            if dist(&z, x) <= r && domain.member(&z) {
                let v = domain.boundary_distance(&z);
                if v > best {
                    best = v;
                    best_z = z;
                }
            }
        }
        rho *= 0.6;
    }
    best / r
}

#[derive(Clone, Debug, Serialize)]
pub struct PlumpnessEntry {
    pub x: Vec<f64>,
    pub r: f64,
    pub kappa_best: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlumpnessReport {
    pub kappa: f64,
    pub entries: Vec<PlumpnessEntry>,
    pub all_pass: bool,
    /// Per-radius largest kappa that passes (minimum over probe points).
    pub kappa_best_per_r: Vec<(f64, f64)>,
}

/// Probe the plumpness condition over sampled points of the closure and a
/// grid of radii.
pub fn plumpness_probe<const D: usize>(
    domain: &Domain<D>,
    kappa: f64,
    r_grid: &[f64],
    boundary_samples: usize,
) -> Result<PlumpnessReport, DomainError> {
    assert!(kappa > 0.0 && kappa < 1.0, "kappa must lie in (0,1)");
    let points = closure_samples(domain, boundary_samples);
    if points.is_empty() {
        return Err(DomainError::Grid("no closure points sampled".into()));
    }
    let mut entries = Vec::new();
    let mut per_r = vec![f64::INFINITY; r_grid.len()];
    for x in &points {
        for (ri, &r) in r_grid.iter().enumerate() {
            let kb = plumpness_at(domain, x, r);
            per_r[ri] = per_r[ri].min(kb);
            entries.push(PlumpnessEntry {
                x: x.to_vec(),
                r,
                kappa_best: kb,
                pass: kb >= kappa,
            });
        }
    }
    let all_pass = entries.iter().all(|e| e.pass);
    Ok(PlumpnessReport {
        kappa,
        entries,
        all_pass,
        kappa_best_per_r: r_grid.iter().cloned().zip(per_r).collect(),
    })
}

/// Deterministic sample of the closure: interior points, bisected boundary
/// points, and the shape's own critical points.
pub fn closure_samples<const D: usize>(domain: &Domain<D>, count: usize) -> Vec<Point<D>> {
    let bbox = domain.bounding_box().inflate(0.25 * domain.bounding_box().diam());
    let mut interior = Vec::new();
    let mut exterior = Vec::new();
    for p in r2_points_in_box(&bbox, count.max(64) * 8) {
        if domain.member(&p) {
            if interior.len() < count {
                interior.push(p);
            }
        } else if exterior.len() < count {
            exterior.push(p);
        }
        if interior.len() >= count && exterior.len() >= count {
            break;
        }
    }
    let mut out = Vec::new();
    out.extend(domain.probe_points());
    // Boundary points by bisection between interior/exterior pairs.
    for (a, b) in interior.iter().zip(exterior.iter()).take(count / 2) {
        let (mut lo, mut hi) = (*a, *b);
        for _ in 0..60 {
            let mid = crate::geom::lerp(&lo, &hi, 0.5);
            if domain.member(&mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(lo);
    }
    out.extend(interior.into_iter().take(count / 2));
    out
}

/// Sampled estimate of the inner radius: max distance-to-boundary over the
/// set, with local refinement.
pub fn max_interior_distance<const D: usize>(domain: &Domain<D>, samples: usize) -> f64 {
    let bbox = domain.bounding_box();
    let mut best = 0.0f64;
    let mut best_p = bbox.center();
    for p in r2_points_in_box(&bbox, samples) {
        if domain.member(&p) {
            let v = domain.boundary_distance(&p);
            if v > best {
                best = v;
                best_p = p;
            }
        }
    }
    let mut rho = 0.25 * bbox.diam();
    for _ in 0..32 {
        for z in r2_points_in_ball(&best_p, rho, 64) {
            if domain.member(&z) {
                let v = domain.boundary_distance(&z);
                if v > best {
                    best = v;
                    best_p = z;
                }
            }
        }
        rho *= 0.6;
    }
    best
}

// ---------------------------------------------------------------------------
// Sampled signed-distance grids
// ---------------------------------------------------------------------------

/// Row-major sampled signed distance field (negative inside the set).
#[derive(Clone, Debug)]
pub struct GridSdf<const D: usize> {
    pub dims: [usize; D],
    pub origin: [f64; D],
    pub spacing: [f64; D],
    pub values: Vec<f64>,
}

impl<const D: usize> GridSdf<D> {
    pub fn validate(&self) -> Result<(), DomainError> {
        let n: usize = self.dims.iter().product();
        if n != self.values.len() {
            return Err(DomainError::Grid(format!(
                "value count {} does not match dims {:?}",
                self.values.len(),
                self.dims
            )));
        }
        if self.dims.iter().any(|&d| d < 2) {
            return Err(DomainError::Grid("each axis needs at least 2 samples".into()));
        }
        if self.spacing.iter().any(|&h| h <= 0.0) {
            return Err(DomainError::Grid("spacing must be positive".into()));
        }
        if !self.has_sign_change() {
            return Err(DomainError::Grid(
                "signed distance grid has uniform sign: no boundary in range".into(),
            ));
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> AxisBox<D> {
        let mut hi = [0.0; D];
        for j in 0..D {
            hi[j] = self.origin[j] + (self.dims[j] - 1) as f64 * self.spacing[j];
        }
        AxisBox::new(self.origin, hi)
    }

    pub fn has_sign_change(&self) -> bool {
        let any_neg = self.values.iter().any(|&v| v < 0.0);
        let any_pos = self.values.iter().any(|&v| v > 0.0);
        any_neg && any_pos
    }

    fn index(&self, idx: &[usize; D]) -> usize {
        let mut k = 0usize;
        for j in 0..D {
            k = k * self.dims[j] + idx[j];
        }
        k
    }

    /// Multilinear interpolation, clamped to the grid range.
    pub fn value(&self, x: &Point<D>) -> f64 {
        let mut base = [0usize; D];
        let mut frac = [0.0; D];
        for j in 0..D {
            let t = ((x[j] - self.origin[j]) / self.spacing[j])
                .clamp(0.0, (self.dims[j] - 1) as f64);
            let i = (t.floor() as usize).min(self.dims[j] - 2);
            base[j] = i;
            frac[j] = t - i as f64;
        }
        let mut acc = 0.0;
        for mask in 0..(1usize << D) {
            let mut w = 1.0;
            let mut idx = base;
            for j in 0..D {
                if mask >> j & 1 == 1 {
                    idx[j] += 1;
                    w *= frac[j];
                } else {
                    w *= 1.0 - frac[j];
                }
            }
            acc += w * self.values[self.index(&idx)];
        }
        acc
    }

    /// Local interpolation-error bound from second differences around the
    /// cell of `x`.
    pub fn local_error(&self, x: &Point<D>) -> f64 {
        let mut base = [0usize; D];
        for j in 0..D {
            let t = ((x[j] - self.origin[j]) / self.spacing[j])
                .clamp(0.0, (self.dims[j] - 1) as f64);
            base[j] = (t.floor() as usize).min(self.dims[j] - 2);
        }
        let mut bound = 0.0f64;
        for j in 0..D {
            let mut idx = base;
            let i = base[j].clamp(1, self.dims[j] - 2);
            idx[j] = i;
            let mut m = idx;
            m[j] = i - 1;
            let mut p = idx;
            p[j] = i + 1;
            let d2 =
                self.values[self.index(&m)] - 2.0 * self.values[self.index(&idx)]
                    + self.values[self.index(&p)];
            bound += d2.abs();
        }
        0.5 * bound.max(1e-14)
    }

    /// Worst `upper/lower` ratio of the certified bounds, probed at sampled
    /// points with `|sdf| >= 8 max(spacing)`.
    pub fn certification_ratio(&self) -> f64 {
        let bbox = self.bounding_box();
        let floor = 8.0 * self.spacing.iter().cloned().fold(0.0, f64::max);
        let mut worst = 1.0f64;
        for p in r2_points_in_box(&bbox, 4096) {
            let v = self.value(&p).abs();
            if v < floor {
                continue;
            }
            let e = self.local_error(&p);
            if v > e {
                worst = worst.max((v + e) / (v - e));
            } else {
                worst = f64::INFINITY;
            }
        }
        worst
    }

    fn estimate_inner_radius(&self, inside: bool) -> f64 {
        let bbox = self.bounding_box();
        let mut best = 0.0f64;
        for p in r2_points_in_box(&bbox, 8192) {
            let v = self.value(&p);
            if (inside && v < 0.0) || (!inside && v > 0.0) {
                best = best.max(v.abs());
            }
        }
        best
    }

    /// Projected gradient descent onto the zero level set.
    pub fn project_to_boundary(&self, x: &Point<D>) -> Point<D> {
        let mut p = *x;
        let h = self.spacing.iter().cloned().fold(f64::INFINITY, f64::min) * 0.5;
        for _ in 0..64 {
            let v = self.value(&p);
            if v.abs() < 1e-3 * h {
                break;
            }
            let mut g = [0.0; D];
            for j in 0..D {
                let mut a = p;
                let mut b = p;
                a[j] += h;
                b[j] -= h;
                g[j] = (self.value(&a) - self.value(&b)) / (2.0 * h);
            }
            let gn = norm(&g).max(1e-12);
            for j in 0..D {
                p[j] -= v * g[j] / (gn * gn);
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ball_geometry() {
        let b = Domain::<2>::ball(1.0).unwrap();
        assert_eq!(b.inr_omega(), 1.0);
        assert!(b.inr_complement().is_infinite());
        assert!((b.boundary_distance(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((b.boundary_distance(&[3.0, 0.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn interval_distance() {
        let d = Domain::<1>::interval(-1.0, 1.0).unwrap();
        assert!((d.boundary_distance(&[0.25]) - 0.75).abs() < 1e-15);
        assert!(d.member(&[0.999]));
        assert!(!d.member(&[1.0]));
    }

    #[test]
    fn half_space_radii() {
        let d = Domain::<1>::half_space().unwrap();
        assert!(d.inr_omega().is_infinite());
        assert!(d.inr_complement().is_infinite());
        assert!(d.member(&[-0.5]));
        assert!(!d.member(&[0.0]));
    }

    #[test]
    fn annuli_radii_follow_the_packing_rule() {
        let d = Domain::<2>::annuli_balls(6).unwrap();
        // inr is the radius of the largest ball: a_2 / 2 = 2^{-3} / 2 / 2.
        let a2 = 2f64.powi(-3) / 2.0;
        assert!((d.inr_omega() - 0.5 * a2).abs() < 1e-15);
        // Membership: the origin is not in the set but is in its closure.
        assert!(!d.member(&[0.0, 0.0]));
        let bd_origin = d.boundary_distance(&[0.0, 0.0]);
        assert!(bd_origin < 2f64.powi(-6), "origin accumulates balls: {bd_origin}");
        // Balls are pairwise disjoint with margin a_n.
        if let Shape::AnnuliBalls { centers, radii } = &d.shape {
            for i in 0..centers.len() {
                for j in (i + 1)..centers.len() {
                    let gap = dist(&centers[i], &centers[j]) - radii[i] - radii[j];
                    assert!(gap > 0.0, "balls {i} and {j} overlap");
                }
            }
            assert!(!centers.is_empty());
        } else {
            unreachable!()
        }
    }

    #[test]
    fn l_shape_membership_and_distance() {
        let d = Domain::<2>::l_shape(1.0).unwrap();
        assert!(d.member(&[-0.5, -0.5]));
        assert!(d.member(&[0.5, 0.5]));
        assert!(!d.member(&[0.5, -0.5]));
        // Distance from an interior point in the top arm.
        let bd = d.boundary_distance(&[0.5, 0.5]);
        assert!((bd - 0.5).abs() < 1e-12, "bd = {bd}");
        // At the reflex corner.
        assert!(d.boundary_distance(&[0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn cube_distance_exact_for_ball() {
        let d = Domain::<2>::ball(1.0).unwrap();
        let cell = AxisBox::new([0.1, 0.1], [0.2, 0.2]);
        let (lo, hi) = d.cube_boundary_distance(&cell);
        assert_eq!(lo, hi);
        let expected = 1.0 - (0.2f64 * 0.2 + 0.2 * 0.2).sqrt();
        assert!((lo - expected).abs() < 1e-14);
    }

    #[test]
    fn kernel_denominator_matches_spec_example() {
        // d=1, s=0.5, p=2, x=0.5 in (-1,1), y=1.5 -> (1 + 0.5 + 0.5)^2 = 4
        let d = Domain::<1>::interval(-1.0, 1.0).unwrap();
        let params = SobolevParams::new(0.5, 2.0);
        let v = kernel_denominator(&[0.5], &[1.5], &d, &params);
        assert!((v - 4.0).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn kernel_denominator_coincident_interior_point() {
        let d = Domain::<1>::interval(-1.0, 1.0).unwrap();
        let params = SobolevParams::new(0.5, 2.0);
        let x = [0.25];
        let v = kernel_denominator(&x, &x, &d, &params);
        let delta = 0.75f64;
        assert!((v - (2.0 * delta).powf(2.0)).abs() < 1e-12);
    }

    #[test]
    fn region_asymmetry_is_preserved() {
        let d = Domain::<1>::interval(-1.0, 1.0).unwrap();
        // Interior collar uses <=, exterior uses <.
        let x_in = [0.75]; // dist to complement = 0.25
        assert!(d.region_contains(&RegionSpec::OmegaIntDelta(0.25), &x_in));
        let x_out = [1.25]; // dist to Omega = 0.25
        assert!(!d.region_contains(&RegionSpec::OmegaExtEps(0.25), &x_out));
        assert!(d.region_contains(&RegionSpec::OmegaExtEps(0.2500001), &x_out));
    }

    #[test]
    fn interior_collar_at_inner_radius_is_whole_set() {
        let d = Domain::<2>::ball(1.0).unwrap();
        let inr = d.inr_omega();
        for p in r2_points_in_box(&d.bounding_box(), 2000) {
            if d.member(&p) {
                assert!(d.region_contains(&RegionSpec::OmegaIntDelta(inr), &p));
            }
        }
    }

    #[test]
    fn ball_is_plump_for_modest_kappa() {
        let d = Domain::<2>::ball(1.0).unwrap();
        let r_grid = [0.25, 0.5, 1.0];
        let report = plumpness_probe(&d, 0.4, &r_grid, 40).unwrap();
        assert!(report.all_pass, "ball should pass kappa = 0.4");
    }

    #[test]
    fn annuli_inscribed_ratio_at_origin_decays() {
        let d = Domain::<2>::annuli_balls(6).unwrap();
        // At x = 0 and r = 2^{-n} the best inscribed ball is a ball of the
        // n-th family, radius a_n / 2, so the ratio is 1/(4n).
        for n in [3u32, 5] {
            let r = 2f64.powi(-(n as i32));
            let kb = plumpness_at(&d, &[0.0, 0.0], r);
            let expected = 1.0 / (4.0 * n as f64);
            assert!(
                (kb - expected).abs() < 0.15 * expected,
                "n = {n}: kappa_best = {kb}, expected about {expected}"
            );
        }
    }

    #[test]
    fn inner_radius_matches_sampled_search() {
        for (name, d) in [
            ("ball", Domain::<2>::ball(1.0).unwrap()),
            ("box", Domain::<2>::axis_box([1.0, 0.5]).unwrap()),
            ("l_shape", Domain::<2>::l_shape(1.0).unwrap()),
            ("annuli", Domain::<2>::annuli_balls(5).unwrap()),
        ] {
            let est = max_interior_distance(&d, 20_000);
            let rel = (est - d.inr_omega()).abs() / d.inr_omega();
            assert!(rel < 0.05, "{name}: sampled {est} vs analytic {}", d.inr_omega());
        }
    }

    #[test]
    fn both_sides_have_positive_measure() {
        for d in [
            Domain::<2>::ball(1.0).unwrap(),
            Domain::<2>::l_shape(1.0).unwrap(),
            Domain::<2>::annuli_balls(4).unwrap(),
        ] {
            let bbox = d.bounding_box().inflate(1.0);
            let pts = r2_points_in_box(&bbox, 4000);
            let inside = pts.iter().filter(|p| d.member(p)).count();
            assert!(inside > 0 && inside < pts.len());
        }
    }

    #[test]
    fn grid_sdf_round_trip_on_ball() {
        // Sample the exact ball SDF and check interpolation quality.
        let n = 129usize;
        let h = 4.0 / (n - 1) as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let x = -2.0 + i as f64 * h;
                let y = -2.0 + j as f64 * h;
                values.push((x * x + y * y).sqrt() - 1.0);
            }
        }
        let grid = GridSdf::<2> {
            dims: [n, n],
            origin: [-2.0, -2.0],
            spacing: [h, h],
            values,
        };
        let d = Domain::from_grid(grid).unwrap();
        assert!(d.member(&[0.3, 0.0]));
        assert!(!d.member(&[1.5, 0.0]));
        let bd = d.boundary_distance(&[0.0, 0.0]);
        assert!((bd - 1.0).abs() < 0.02, "bd = {bd}");
        assert!(!d.exact_distance());
    }

    #[test]
    fn uniform_sign_grid_is_rejected() {
        let grid = GridSdf::<1> {
            dims: [8],
            origin: [0.0],
            spacing: [1.0],
            values: vec![1.0; 8],
        };
        assert!(Domain::from_grid(grid).is_err());
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(Domain::<2>::ball(-1.0).is_err());
        assert!(Domain::<2>::interval(0.0, 1.0).is_err());
        assert!(Domain::<1>::annuli_balls(6).is_err());
        assert!(Domain::<2>::annuli_balls(1).is_err());
    }

    proptest! {
        #[test]
        fn delta_is_one_lipschitz(
            x in -3.0f64..3.0, y in -3.0f64..3.0,
            u in -3.0f64..3.0, v in -3.0f64..3.0,
        ) {
            let d = Domain::<2>::l_shape(1.0).unwrap();
            let a = [x, y];
            let b = [u, v];
            let lhs = (d.boundary_distance(&a) - d.boundary_distance(&b)).abs();
            prop_assert!(lhs <= dist(&a, &b) + 1e-12);
        }

        #[test]
        fn offset_kernel_sandwich(x in -0.999f64..0.999, y in 1.0001f64..4.0) {
            // |x-y| <= |x-y| + dx + dy <= 3 |x-y| for x in Omega, y outside.
            let d = Domain::<1>::interval(-1.0, 1.0).unwrap();
            let r = (x - y).abs();
            let total = r + d.boundary_distance(&[x]) + d.boundary_distance(&[y]);
            prop_assert!(total >= r - 1e-15);
            prop_assert!(total <= 3.0 * r + 1e-12);
        }

        #[test]
        fn region_monotone_in_delta(t in 0.01f64..0.99, d1 in 0.05f64..1.0, d2 in 0.05f64..1.0) {
            let dom = Domain::<1>::interval(-1.0, 1.0).unwrap();
            let (lo, hi) = (d1.min(d2), d1.max(d2));
            let x = [t];
            let in_lo = dom.region_contains(&RegionSpec::OmegaIntDelta(lo), &x);
            let in_hi = dom.region_contains(&RegionSpec::OmegaIntDelta(hi), &x);
            prop_assert!(!in_lo || in_hi);
        }
    }
}
