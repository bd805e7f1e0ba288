//! The extension operator: averages of the complement data over reflected
//! cubes, blended by the partition of unity.
//!
//! `Ext(f)(x) = sum_Q a_Q phi_Q(x)` on the set, `f(x)` on the complement,
//! with `a_Q` the mean of `f` over the reflected cube `Q~`. Everything on
//! the set side is smooth with analytic gradients; the complement side is a
//! bit-exact pass-through.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::domain::Domain;
use crate::geom::{norm, AxisBox, Point};
use crate::quad::mean_box;
use crate::reflect::ReflectionMap;
use crate::sampling::r2_points_in_ball;
use crate::unity::weighted_phi_sum;
use crate::whitney::WhitneyDecomposition;

#[derive(Debug, Error)]
pub enum ExtendError {
    #[error("no reflected cube for source cube {0}")]
    MissingReflectedCube(String),
    #[error("point {0:?} is outside the covered region")]
    Uncovered(Vec<f64>),
}

/// Piecewise-constant samples on a uniform grid (interpolation order 0).
#[derive(Clone, Debug)]
pub struct GridFunction<const D: usize> {
    pub dims: [usize; D],
    pub origin: [f64; D],
    pub spacing: [f64; D],
    pub values: Vec<f64>,
}

impl<const D: usize> GridFunction<D> {
    fn cell_of(&self, x: &Point<D>) -> Option<[usize; D]> {
        let mut idx = [0usize; D];
        for j in 0..D {
            let t = (x[j] - self.origin[j]) / self.spacing[j];
            if t < 0.0 || t >= self.dims[j] as f64 {
                return None;
            }
            idx[j] = t.floor() as usize;
        }
        Some(idx)
    }

    fn flat(&self, idx: &[usize; D]) -> usize {
        let mut k = 0usize;
        for j in 0..D {
            k = k * self.dims[j] + idx[j];
        }
        k
    }

    pub fn value(&self, x: &Point<D>) -> f64 {
        match self.cell_of(x) {
            Some(idx) => self.values[self.flat(&idx)],
            None => 0.0,
        }
    }

    /// Exact mean over a box: piecewise-constant data integrates by cell
    /// overlap areas.
    pub fn exact_mean(&self, cell: &AxisBox<D>) -> f64 {
        let mut lo_idx = [0i64; D];
        let mut hi_idx = [0i64; D];
        for j in 0..D {
            lo_idx[j] = ((cell.lo[j] - self.origin[j]) / self.spacing[j]).floor() as i64;
            hi_idx[j] = ((cell.hi[j] - self.origin[j]) / self.spacing[j]).ceil() as i64;
        }
        let mut total = 0.0;
        let mut idx = lo_idx;
        'grid: loop {
            // Overlap of grid cell `idx` with `cell`.
            let mut overlap = 1.0;
            let mut inside = true;
            for j in 0..D {
                let glo = self.origin[j] + idx[j] as f64 * self.spacing[j];
                let ghi = glo + self.spacing[j];
                let lo = glo.max(cell.lo[j]);
                let hi = ghi.min(cell.hi[j]);
                if lo >= hi {
                    inside = false;
                    break;
                }
                overlap *= hi - lo;
            }
            if inside {
                let mut clamped = [0usize; D];
                let mut in_range = true;
                for j in 0..D {
                    if idx[j] < 0 || idx[j] >= self.dims[j] as i64 {
                        in_range = false;
                        break;
                    }
                    clamped[j] = idx[j] as usize;
                }
                let v = if in_range { self.values[self.flat(&clamped)] } else { 0.0 };
                total += v * overlap;
            }
            let mut j = 0;
            loop {
                if j == D {
                    break 'grid;
                }
                idx[j] += 1;
                if idx[j] < hi_idx[j] {
                    break;
                }
                idx[j] = lo_idx[j];
                j += 1;
            }
        }
        total / cell.measure()
    }
}

/// Complement data: a closed-form callable or order-0 grid samples, with an
/// integrability tag used by tail bounds.
#[derive(Clone)]
pub enum ComplementFunction<const D: usize> {
    Callable {
        f: Arc<dyn Fn(&Point<D>) -> f64 + Send + Sync>,
        /// Certified sup bound, when the function is bounded.
        sup: Option<f64>,
    },
    Grid(Arc<GridFunction<D>>),
}

impl<const D: usize> ComplementFunction<D> {
    pub fn callable(
        f: impl Fn(&Point<D>) -> f64 + Send + Sync + 'static,
        sup: Option<f64>,
    ) -> Self {
        ComplementFunction::Callable { f: Arc::new(f), sup }
    }

    pub fn eval(&self, x: &Point<D>) -> f64 {
        match self {
            ComplementFunction::Callable { f, .. } => f(x),
            ComplementFunction::Grid(g) => g.value(x),
        }
    }

    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            ComplementFunction::Callable { sup, .. } => *sup,
            ComplementFunction::Grid(g) => {
                g.values.iter().cloned().map(f64::abs).fold(0.0, f64::max).into()
            }
        }
    }
}

/// The assembled operator: coefficient table over the clean cubes of
/// `W(Omega)`, pass-through on the complement.
pub struct ExtensionOperator<const D: usize> {
    pub domain: Arc<Domain<D>>,
    pub w_omega: Arc<WhitneyDecomposition<D>>,
    pub reflection: Arc<ReflectionMap<D>>,
    coeffs: Vec<f64>,
    has_coeff: Vec<bool>,
    f: ComplementFunction<D>,
    pub quad_order: usize,
}

/// Default tensor Gauss-Legendre order for the cube averages.
pub const DEFAULT_QUAD_ORDER: usize = 8;

pub fn build_extension<const D: usize>(
    f: ComplementFunction<D>,
    w_omega: Arc<WhitneyDecomposition<D>>,
    reflection: Arc<ReflectionMap<D>>,
    quad_order: usize,
) -> Result<ExtensionOperator<D>, ExtendError> {
    let n = w_omega.records().len();
    let mut coeffs = vec![0.0; n];
    let mut has_coeff = vec![false; n];
    for i in w_omega.selected() {
        let rec = w_omega.record(i);
        if !rec.flags.clean() {
            continue;
        }
        let Some(entry) = reflection.entry_for(i) else {
            return Err(ExtendError::MissingReflectedCube(rec.cube.id()));
        };
        let cell = entry.target.cell();
        let a = match &f {
            ComplementFunction::Callable { f, .. } => mean_box(&cell, quad_order, |x| f(x)),
            ComplementFunction::Grid(g) => g.exact_mean(&cell),
        };
        coeffs[i as usize] = a;
        has_coeff[i as usize] = true;
    }
    Ok(ExtensionOperator {
        domain: w_omega.domain.clone(),
        w_omega,
        reflection,
        coeffs,
        has_coeff,
        f,
        quad_order,
    })
}

impl<const D: usize> ExtensionOperator<D> {
    pub fn coefficient(&self, cube_idx: u32) -> Option<f64> {
        if self.has_coeff[cube_idx as usize] {
            Some(self.coeffs[cube_idx as usize])
        } else {
            None
        }
    }

    /// `Ext(f)(x)`: the complement side is a bit-exact pass-through of `f`
    /// (including boundary points); the set side is the blended average.
    pub fn evaluate(&self, x: &Point<D>) -> Result<f64, ExtendError> {
        if !self.domain.member(x) {
            return Ok(self.f.eval(x));
        }
        match weighted_phi_sum(&self.w_omega, x, |q| self.coeffs[q as usize]) {
            Some((v, _)) => Ok(v),
            None => Err(ExtendError::Uncovered(x.to_vec())),
        }
    }

    /// Option-typed evaluation for samplers: `None` marks uncovered points.
    pub fn evaluate_opt(&self, x: &Point<D>) -> Option<f64> {
        if !self.domain.member(x) {
            return Some(self.f.eval(x));
        }
        weighted_phi_sum(&self.w_omega, x, |q| self.coeffs[q as usize]).map(|(v, _)| v)
    }

    /// Analytic gradient `sum_Q a_Q grad phi_Q(x)` at interior points.
    pub fn gradient(&self, x: &Point<D>) -> Result<Point<D>, ExtendError> {
        if !self.domain.member(x) {
            return Err(ExtendError::Uncovered(x.to_vec()));
        }
        match weighted_phi_sum(&self.w_omega, x, |q| self.coeffs[q as usize]) {
            Some((_, g)) => Ok(g),
            None => Err(ExtendError::Uncovered(x.to_vec())),
        }
    }

    /// Indices of cubes whose data feeds `Ext` on the cube `q1`: the
    /// reflected cubes of `N(q1)`.
    pub fn data_cubes(&self, q1: u32) -> Vec<crate::whitney::DyadicCube<D>> {
        self.w_omega
            .neighbors(q1)
            .iter()
            .filter_map(|&q| self.reflection.entry_for(q).map(|e| e.target))
            .collect()
    }
}

/// Inward normal estimated from the signed distance field.
pub fn inward_normal<const D: usize>(domain: &Domain<D>, z0: &Point<D>) -> Point<D> {
    let h = 1e-6 * (1.0 + norm(z0));
    let sd = |x: &Point<D>| -> f64 {
        if domain.member(x) {
            -domain.boundary_distance(x)
        } else {
            domain.boundary_distance(x)
        }
    };
    let mut g = [0.0; D];
    for j in 0..D {
        let mut a = *z0;
        let mut b = *z0;
        a[j] += h;
        b[j] -= h;
        g[j] = (sd(&a) - sd(&b)) / (2.0 * h);
    }
    let n = norm(&g).max(1e-30);
    let mut out = [0.0; D];
    for j in 0..D {
        out[j] = -g[j] / n;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceProbeStep {
    pub k: u32,
    pub depth: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceProbeReport {
    pub steps: Vec<TraceProbeStep>,
    pub deepest_gap: Option<f64>,
    /// True when the sequence left coverage before `max_steps`.
    pub exited_coverage: bool,
}

/// Evaluate `Ext(f)` along the geometric sequence `z0 + 2^{-k} r0 n` into
/// the set and report the gaps `|Ext(f)(x_k) - g_limit|`.
pub fn trace_limit_probe<const D: usize>(
    ext: &ExtensionOperator<D>,
    z0: &Point<D>,
    g_limit: f64,
    r0: f64,
    max_steps: u32,
) -> TraceProbeReport {
    let n = inward_normal(ext.domain.as_ref(), z0);
    let mut steps = Vec::new();
    let mut exited = false;
    for k in 0..max_steps {
        let depth = r0 * 2f64.powi(-(k as i32));
        let mut x = *z0;
        for j in 0..D {
            x[j] += depth * n[j];
        }
        if !ext.domain.member(&x) {
            continue;
        }
        match ext.evaluate(&x) {
            Ok(v) => steps.push(TraceProbeStep { k, depth, gap: (v - g_limit).abs() }),
            Err(_) => {
                exited = true;
                break;
            }
        }
    }
    TraceProbeReport {
        deepest_gap: steps.last().map(|s| s.gap),
        steps,
        exited_coverage: exited,
    }
}

/// Sampled modulus of continuity of `f` on the complement near `z0`:
/// max spread of values over the ball `B(z0, t)`.
pub fn complement_modulus<const D: usize>(
    domain: &Domain<D>,
    f: &ComplementFunction<D>,
    z0: &Point<D>,
    t: f64,
) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in r2_points_in_ball(z0, t, 512) {
        if !domain.member(&x) && domain.boundary_distance(&x) > 0.0 {
            let v = f.eval(&x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflect::{build_reflection, ThicknessParams};
    use crate::sampling::r2_points_in_box;
    use crate::whitney::DomainSide;

    fn ball_extension(
        f: ComplementFunction<2>,
        m_max: i32,
    ) -> ExtensionOperator<2> {
        let d = Arc::new(Domain::<2>::ball(1.0).unwrap());
        let window = AxisBox::new([-2.0, -2.0], [2.0, 2.0]);
        let w_omega = Arc::new(
            WhitneyDecomposition::decompose(d.clone(), DomainSide::Omega, &window, m_max)
                .unwrap(),
        );
        let w_comp = Arc::new(
            WhitneyDecomposition::decompose(d, DomainSide::InteriorComplement, &window, m_max)
                .unwrap(),
        );
        let params = ThicknessParams::for_extension(w_omega.domain.as_ref());
        let map = Arc::new(build_reflection(&w_omega, &w_comp, &params));
        assert!(map.failures.is_empty());
        build_extension(f, w_omega, map, DEFAULT_QUAD_ORDER).unwrap()
    }

    fn interval_extension(
        f: ComplementFunction<1>,
        m_max: i32,
    ) -> ExtensionOperator<1> {
        let d = Arc::new(Domain::<1>::interval(-1.0, 1.0).unwrap());
        let window = AxisBox::new([-4.0], [4.0]);
        let w_omega = Arc::new(
            WhitneyDecomposition::decompose(d.clone(), DomainSide::Omega, &window, m_max)
                .unwrap(),
        );
        let w_comp = Arc::new(
            WhitneyDecomposition::decompose(d, DomainSide::InteriorComplement, &window, m_max)
                .unwrap(),
        );
        let params = ThicknessParams::for_extension(w_omega.domain.as_ref());
        let map = Arc::new(build_reflection(&w_omega, &w_comp, &params));
        assert!(map.failures.is_empty());
        build_extension(f, w_omega, map, DEFAULT_QUAD_ORDER).unwrap()
    }

    #[test]
    fn constant_data_extends_to_the_constant() {
        let ext = interval_extension(
            ComplementFunction::callable(|_| 2.5, Some(2.5)),
            12,
        );
        for i in ext.w_omega.selected() {
            if let Some(a) = ext.coefficient(i) {
                assert!((a - 2.5).abs() < 1e-13);
            }
        }
        for x in r2_points_in_box(&AxisBox::new([-0.99], [0.99]), 500) {
            if let Ok(v) = ext.evaluate(&x) {
                assert!((v - 2.5).abs() <= 1e-12, "Ext(c) = {v} at {x:?}");
            }
        }
        // Gradient of a constant extension vanishes.
        let g = ext.gradient(&[0.25]).unwrap();
        assert!(g[0].abs() < 1e-11);
    }

    #[test]
    fn complement_passthrough_is_bit_exact() {
        let f = |x: &Point<1>| (x[0] * 3.7).sin() + x[0];
        let ext = interval_extension(ComplementFunction::callable(f, None), 10);
        for x in [[1.3], [2.9], [-1.0001], [1.0]] {
            assert_eq!(ext.evaluate(&x).unwrap().to_bits(), f(&x).to_bits());
        }
    }

    #[test]
    fn affine_data_on_half_line_averages_at_cube_centers() {
        // Gauss order >= 1 integrates affine data exactly: a_Q = f(center).
        let d = Arc::new(Domain::<1>::half_space().unwrap());
        let window = AxisBox::new([-2.0], [2.0]);
        let w_omega = Arc::new(
            WhitneyDecomposition::decompose(d.clone(), DomainSide::Omega, &window, 10).unwrap(),
        );
        let w_comp = Arc::new(
            WhitneyDecomposition::decompose(d, DomainSide::InteriorComplement, &window, 10)
                .unwrap(),
        );
        let params = ThicknessParams::for_extension(w_omega.domain.as_ref());
        let map = Arc::new(build_reflection(&w_omega, &w_comp, &params));
        let ext = build_extension(
            ComplementFunction::callable(|x: &Point<1>| 3.0 * x[0] - 1.0, None),
            w_omega,
            map,
            DEFAULT_QUAD_ORDER,
        )
        .unwrap();
        for e in ext.reflection.entries.iter().take(20) {
            let a = ext.coefficient(e.source).unwrap();
            let c = e.target.center();
            assert!(
                (a - (3.0 * c[0] - 1.0)).abs() < 1e-12,
                "a_Q = {a} vs affine at center {}",
                3.0 * c[0] - 1.0
            );
        }
    }

    #[test]
    fn sqrt_collar_coefficients_match_monte_carlo_means() {
        // f = sqrt(|x|-1) on 1 < |x| < 2, else 0, around the unit ball.
        let f = |x: &Point<2>| -> f64 {
            let r = norm(x);
            if r > 1.0 && r < 2.0 {
                (r - 1.0).sqrt()
            } else {
                0.0
            }
        };
        let ext = ball_extension(ComplementFunction::callable(f, Some(1.0)), 6);
        let mut rng = crate::sampling::stratum_rng(123, 0);
        let mut checked = 0;
        for e in &ext.reflection.entries {
            let a = ext.coefficient(e.source).unwrap();
            if a < 1e-6 {
                continue;
            }
            let cell = e.target.cell();
            let n = 1_000_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let x = crate::sampling::uniform_in_box(&mut rng, &cell);
                acc += f(&x);
            }
            let mc = acc / n as f64;
            let rel = (a - mc).abs() / mc.abs().max(1e-12);
            assert!(rel < 5e-3, "a_Q = {a} vs MC {mc}");
            checked += 1;
            if checked >= 5 {
                break;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn linearity_of_coefficients_and_values() {
        let f1 = |x: &Point<1>| (x[0]).cos();
        let f2 = |x: &Point<1>| x[0] * x[0];
        let (alpha, beta) = (2.0, -0.5);
        let combo = move |x: &Point<1>| alpha * f1(x) + beta * f2(x);
        let e1 = interval_extension(ComplementFunction::callable(f1, None), 10);
        let e2 = interval_extension(ComplementFunction::callable(f2, None), 10);
        let ec = interval_extension(ComplementFunction::callable(combo, None), 10);
        for x in r2_points_in_box(&AxisBox::new([-0.9], [0.9]), 200) {
            if let (Ok(v1), Ok(v2), Ok(vc)) =
                (e1.evaluate(&x), e2.evaluate(&x), ec.evaluate(&x))
            {
                let lin = alpha * v1 + beta * v2;
                assert!(
                    (vc - lin).abs() <= 1e-12 * lin.abs().max(1.0),
                    "nonlinear: {vc} vs {lin}"
                );
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let f = |x: &Point<1>| (1.3 * x[0]).sin();
        let ext = interval_extension(ComplementFunction::callable(f, Some(1.0)), 12);
        let mut checked = 0;
        for x in r2_points_in_box(&AxisBox::new([-0.95], [0.95]), 300) {
            let Ok(g) = ext.gradient(&x) else { continue };
            let c = ext.w_omega.locate(&x).unwrap();
            let l = ext.w_omega.record(c).cube.side();
            let h = 1e-6 * l;
            let (mut xp, mut xm) = (x, x);
            xp[0] += h;
            xm[0] -= h;
            let (Ok(vp), Ok(vm)) = (ext.evaluate(&xp), ext.evaluate(&xm)) else {
                continue;
            };
            let fd = (vp - vm) / (2.0 * h);
            let scale = g[0].abs().max(1.0 / l);
            assert!(
                (g[0] - fd).abs() <= 1e-6 * scale,
                "grad {} vs fd {} at {:?}",
                g[0],
                fd,
                x
            );
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn local_dependence_on_reflected_data_only() {
        // Perturb f outside the data cubes of a fixed cube: Ext unchanged
        // bit-for-bit on that cube.
        let base = |x: &Point<1>| x[0].abs();
        let e_base = interval_extension(ComplementFunction::callable(base, None), 10);
        let q1 = e_base
            .w_omega
            .selected()
            .find(|&i| {
                e_base.w_omega.covered(i)
                    && e_base.w_omega.record(i).cube.center()[0].abs() <= 0.3
            })
            .unwrap();
        let data = e_base.data_cubes(q1);
        // Union bounding box of the data cubes, inflated a touch.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in &data {
            lo = lo.min(c.cell().lo[0]);
            hi = hi.max(c.cell().hi[0]);
        }
        let margin = 1e-9;
        let perturbed = move |x: &Point<1>| {
            if x[0] > lo - margin && x[0] < hi + margin {
                x[0].abs()
            } else {
                x[0].abs() + 17.0 * (x[0] * 5.0).cos()
            }
        };
        let e_pert = interval_extension(ComplementFunction::callable(perturbed, None), 10);
        let cell = e_base.w_omega.record(q1).cube.cell();
        for x in r2_points_in_box(&cell, 64) {
            let a = e_base.evaluate(&x).unwrap();
            let b = e_pert.evaluate(&x).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "nonlocal dependence at {x:?}");
        }
    }

    #[test]
    fn confinement_of_data_cubes_in_the_collar() {
        // Data cubes feeding a near-boundary cube stay within the matching
        // exterior collar.
        let ext = interval_extension(ComplementFunction::callable(|_| 1.0, Some(1.0)), 12);
        let w = &ext.w_omega;
        let delta = 0.25;
        for q1 in w.filter(crate::whitney::CubeFilter::DistLess(delta)) {
            for qt in ext.data_cubes(q1) {
                let cell = qt.cell();
                for corner in cell.corners() {
                    let bd = ext.domain.boundary_distance(&corner);
                    assert!(
                        bd < delta,
                        "data cube {} leaves the {delta}-collar (bd = {bd})",
                        qt.id()
                    );
                    assert!(!ext.domain.member(&corner));
                }
            }
        }
    }

    #[test]
    fn trace_probe_converges_for_continuous_data() {
        // f(x) = |x| on the complement of the unit ball: limit 1 from outside.
        let f = |x: &Point<2>| norm(x);
        let ext = ball_extension(ComplementFunction::callable(f, None), 8);
        let z0 = [1.0, 0.0];
        let report = trace_limit_probe(&ext, &z0, 1.0, 0.5, 16);
        assert!(report.steps.len() > 5, "steps: {}", report.steps.len());
        let first = report.steps.first().unwrap().gap;
        let last = report.deepest_gap.unwrap();
        assert!(last < first, "gaps do not decay: first {first}, last {last}");
        assert!(last < 0.05, "deepest gap {last}");
        // Monotone past the first few steps.
        let gaps: Vec<f64> = report.steps.iter().map(|s| s.gap).collect();
        for w in gaps.windows(2).skip(2) {
            assert!(w[1] <= w[0] * 1.5, "gap sequence not settling: {gaps:?}");
        }
    }

    #[test]
    fn trace_probe_reports_nonconvergence_on_discontinuity() {
        // f jumps across the upper/lower half plane; at a point of the
        // discontinuity set the probe must not settle to either value.
        let f = |x: &Point<2>| if x[1] > 0.0 { 1.0 } else { 0.0 };
        let ext = ball_extension(ComplementFunction::callable(f, Some(1.0)), 8);
        let z0 = [1.0, 0.0];
        let report = trace_limit_probe(&ext, &z0, 1.0, 0.5, 16);
        let last = report.deepest_gap.unwrap();
        assert!(
            last > 0.2,
            "probe claims convergence across a discontinuity: gap {last}"
        );
    }

    #[test]
    fn grid_function_exact_means() {
        let g = GridFunction::<1> {
            dims: [4],
            origin: [0.0],
            spacing: [1.0],
            values: vec![1.0, 2.0, 3.0, 4.0],
        };
        // Mean over [0.5, 2.5] = (0.5*1 + 1*2 + 0.5*3) / 2 = 2.0
        let m = g.exact_mean(&AxisBox::new([0.5], [2.5]));
        assert!((m - 2.0).abs() < 1e-14);
        assert_eq!(g.value(&[1.5]), 2.0);
        assert_eq!(g.value(&[9.0]), 0.0);
    }
}
