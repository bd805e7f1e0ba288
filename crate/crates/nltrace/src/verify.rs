//! The inequality-checking harness: runs the function battery across
//! `(s, p, delta, eps)` grids and reports empirical constants for the
//! norm-equivalence, the extension bounds, the gradient-limit corollary and
//! the indicator membership threshold.
//!
//! A *violation* is only declared where both sides of an inequality carry
//! convergent estimates and their 3-sigma bands still certify the wrong
//! order; inconclusive estimates propagate as skipped points, never as
//! passes.

use std::sync::Arc;

use serde::Serialize;

use crate::battery::BatteryMember;
use crate::domain::{RegionSpec, SobolevParams};
use crate::extend::{build_extension, ExtensionOperator, DEFAULT_QUAD_ORDER};
use crate::geom::{norm, regression_slope, Point};
use crate::quad::integrate_box;
use crate::reflect::{build_reflection, ThicknessParams};
use crate::seminorm::{
    estimate_pair, EstimateOptions, FarField, KernelKind, PairFunctional, SeminormEstimate,
    Verdict,
};
use crate::whitney::GeometryBundle;

#[derive(Clone, Debug, Serialize)]
pub struct VerifyGrids {
    pub s_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    /// Pairs `(delta, eps)` with `delta <= eps` (`inf` allowed).
    pub delta_eps: Vec<(f64, f64)>,
    pub s_sequence: Vec<f64>,
}

impl VerifyGrids {
    /// The default battery grid: spans both endpoint behaviors at desk cost.
    pub fn standard(inr: f64) -> Self {
        let base = if inr.is_finite() { inr } else { 1.0 };
        let levels = [0.25 * base, base, f64::INFINITY];
        let mut delta_eps = Vec::new();
        for (i, &d) in levels.iter().enumerate() {
            for &e in &levels[i..] {
                delta_eps.push((d, e));
            }
        }
        Self {
            s_grid: vec![0.1, 0.25, 0.5, 0.75, 0.9, 0.95],
            p_grid: vec![1.0, 2.0, 3.0],
            delta_eps,
            s_sequence: vec![0.5, 0.7, 0.9, 0.95, 0.99],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointStatus {
    Checked,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridPointReport {
    pub inequality: String,
    pub function: String,
    pub s: f64,
    pub p: f64,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub lhs: f64,
    pub lhs_sigma: f64,
    pub rhs: f64,
    pub rhs_sigma: f64,
    /// The endpoint-scaled ratio (`s x` or `s(1-s) x` LHS/RHS).
    pub scaled_ratio: f64,
    pub status: PointStatus,
    pub skip_reason: Option<String>,
    pub violation: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub id: String,
    pub points: Vec<GridPointReport>,
    /// Max finite scaled ratio over checked points.
    pub empirical_constant: f64,
    /// Fitted exponent of the unscaled ratio against the endpoint factor.
    pub fit_exponent: Option<f64>,
    pub violations: usize,
    pub checked: usize,
    pub skipped: usize,
}

fn summarize(id: &str, points: Vec<GridPointReport>, fit: Option<f64>) -> InequalityReport {
    let checked = points.iter().filter(|p| p.status == PointStatus::Checked).count();
    let skipped = points.len() - checked;
    let violations = points.iter().filter(|p| p.violation).count();
    let empirical_constant = points
        .iter()
        .filter(|p| p.status == PointStatus::Checked && p.scaled_ratio.is_finite())
        .map(|p| p.scaled_ratio)
        .fold(0.0, f64::max);
    InequalityReport {
        id: id.to_string(),
        points,
        empirical_constant,
        fit_exponent: fit,
        violations,
        checked,
        skipped,
    }
}

fn estimate_member<const D: usize>(
    geo: &GeometryBundle<D>,
    g: &(dyn Fn(&Point<D>) -> Option<f64> + Sync),
    region_a: RegionSpec,
    region_b: RegionSpec,
    kernel: KernelKind,
    params: SobolevParams,
    far_field: FarField,
    opts: &EstimateOptions,
) -> SeminormEstimate {
    let f = PairFunctional { g, region_a, region_b, kernel, params, far_field };
    estimate_pair(geo, &f, opts)
}

/// Norm equivalence: the middle trace-kernel quantity is sandwiched by the
/// cross seminorm, `3^{-d-p}`-exact from below and `c/s` from above.
pub fn check_norm_equivalence<const D: usize>(
    geo: &GeometryBundle<D>,
    battery: &[BatteryMember<D>],
    s_grid: &[f64],
    p_grid: &[f64],
    budget: u64,
    seed: u64,
) -> InequalityReport {
    let inr = geo.domain.inr_omega();
    let mut points = Vec::new();
    let mut log_inv_s = Vec::new();
    let mut log_upper_ratio = Vec::new();
    for member in battery.iter().filter(|m| m.sup.is_some()) {
        let g = |x: &Point<D>| Some((member.f)(x));
        for &p in p_grid {
            for &s in s_grid {
                let params = SobolevParams::new(s, p);
                let opts = EstimateOptions::new(budget, seed ^ hash2(s, p));
                let cross = estimate_member(
                    geo,
                    &g,
                    RegionSpec::Omega,
                    RegionSpec::OmegaComplement,
                    KernelKind::Cross,
                    params,
                    member.far_field,
                    &opts,
                );
                let mid = estimate_member(
                    geo,
                    &g,
                    RegionSpec::OmegaWithExt(inr),
                    RegionSpec::OmegaComplement,
                    KernelKind::Offset,
                    params,
                    member.far_field,
                    &opts,
                );
                let mut report = GridPointReport {
                    inequality: "norm-equivalence".into(),
                    function: member.name.into(),
                    s,
                    p,
                    delta: None,
                    eps: None,
                    lhs: cross.value,
                    lhs_sigma: cross.std_error,
                    rhs: mid.value,
                    rhs_sigma: mid.std_error,
                    scaled_ratio: f64::NAN,
                    status: PointStatus::Checked,
                    skip_reason: None,
                    violation: false,
                };
                if cross.verdict == Verdict::Divergent {
                    report.status = PointStatus::Skipped;
                    report.skip_reason = Some("cross seminorm divergent".into());
                    points.push(report);
                    continue;
                }
                if cross.value == 0.0 {
                    // Constants: both sides vanish; trivially consistent.
                    report.scaled_ratio = 0.0;
                    report.violation = mid.value > 3.0 * mid.std_error;
                    points.push(report);
                    continue;
                }
                // Exact lower direction: mid >= 3^{-d-p} cross.
                let factor = 3f64.powf(-(D as f64) - p);
                let lower_ok = mid.value + 3.0 * mid.std_error
                    >= factor * (cross.value - 3.0 * cross.std_error);
                // Upper direction: s * mid / cross recorded as the constant.
                let upper = s * mid.value / cross.value;
                report.scaled_ratio = upper;
                report.violation = !lower_ok;
                if upper.is_finite() && upper > 0.0 {
                    log_inv_s.push((1.0 / s).ln());
                    log_upper_ratio.push((mid.value / cross.value).ln());
                }
                points.push(report);
            }
        }
    }
    let fit = if log_inv_s.len() >= 3 {
        Some(regression_slope(&log_inv_s, &log_upper_ratio))
    } else {
        None
    };
    summarize("norm-equivalence", points, fit)
}

/// Extension geometry shared by the extension-side checks.
pub struct ExtensionLab<const D: usize> {
    pub geo: Arc<GeometryBundle<D>>,
    pub params: ThicknessParams,
    pub reflection: Arc<crate::reflect::ReflectionMap<D>>,
}

impl<const D: usize> ExtensionLab<D> {
    pub fn build(geo: Arc<GeometryBundle<D>>) -> Self {
        let params = ThicknessParams::for_extension(geo.domain.as_ref());
        let reflection = Arc::new(build_reflection(
            &geo.w_omega,
            &geo.w_complement,
            &params,
        ));
        Self { geo, params, reflection }
    }

    pub fn extend(&self, member: &BatteryMember<D>) -> ExtensionOperator<D> {
        build_extension(
            member.complement_function(),
            self.geo.w_omega.clone(),
            self.reflection.clone(),
            DEFAULT_QUAD_ORDER,
        )
        .expect("reflection table incomplete")
    }
}

/// The four extension bounds on the `(s, delta, eps)` grid for one `p`.
pub fn check_extension_bounds<const D: usize>(
    lab: &ExtensionLab<D>,
    battery: &[BatteryMember<D>],
    s_grid: &[f64],
    p: f64,
    delta_eps: &[(f64, f64)],
    budget: u64,
    seed: u64,
) -> Vec<InequalityReport> {
    let geo = lab.geo.as_ref();
    let mut int_ext = Vec::new();
    let mut int_int = Vec::new();
    let mut simpl1 = Vec::new();
    let mut simpl2 = Vec::new();
    for member in battery {
        let ext = lab.extend(member);
        let g_ext = |x: &Point<D>| ext.evaluate_opt(x);
        let g_f = |x: &Point<D>| Some((member.f)(x));
        for &s in s_grid {
            let params = SobolevParams::new(s, p);
            let opts = EstimateOptions::new(budget, seed ^ hash2(s, p));
            // (int-ext) and (int-int) on the (delta, eps) grid.
            for &(delta, eps) in delta_eps {
                let lhs = estimate_member(
                    geo,
                    &g_ext,
                    RegionSpec::OmegaIntDelta(delta),
                    RegionSpec::OmegaExtEps(eps),
                    KernelKind::Offset,
                    params,
                    member.far_field,
                    &opts,
                );
                let rhs = estimate_member(
                    geo,
                    &g_f,
                    RegionSpec::OmegaExtEps(delta),
                    RegionSpec::OmegaExtEps(eps),
                    KernelKind::Offset,
                    params,
                    member.far_field,
                    &opts,
                );
                int_ext.push(scaled_point(
                    "int-ext", member.name, s, p,
                    Some(delta), Some(eps),
                    &lhs, &rhs, s,
                ));
                if s < 1.0 {
                    let lhs2 = estimate_member(
                        geo,
                        &g_ext,
                        RegionSpec::OmegaIntDelta(delta),
                        RegionSpec::OmegaIntDelta(delta),
                        KernelKind::Offset,
                        params,
                        member.far_field,
                        &opts,
                    );
                    let rhs2 = estimate_member(
                        geo,
                        &g_f,
                        RegionSpec::OmegaExtEps(delta),
                        RegionSpec::OmegaExtEps(delta),
                        KernelKind::Offset,
                        params,
                        member.far_field,
                        &opts,
                    );
                    int_int.push(scaled_point(
                        "int-int", member.name, s, p,
                        Some(delta), Some(delta),
                        &lhs2, &rhs2, s * (1.0 - s),
                    ));
                }
            }
            // (simpl1) and (simpl2) are grid-independent.
            let lhs = estimate_member(
                geo,
                &g_ext,
                RegionSpec::Omega,
                RegionSpec::OmegaComplement,
                KernelKind::Offset,
                params,
                member.far_field,
                &opts,
            );
            let rhs = estimate_member(
                geo,
                &g_f,
                RegionSpec::OmegaComplement,
                RegionSpec::OmegaComplement,
                KernelKind::Offset,
                params,
                member.far_field,
                &opts,
            );
            simpl1.push(scaled_point(
                "simpl1", member.name, s, p, None, None, &lhs, &rhs, s,
            ));
            if s < 1.0 {
                let lhs2 = estimate_member(
                    geo,
                    &g_ext,
                    RegionSpec::FullSpace,
                    RegionSpec::FullSpace,
                    KernelKind::Offset,
                    params,
                    member.far_field,
                    &opts,
                );
                simpl2.push(scaled_point(
                    "simpl2", member.name, s, p, None, None,
                    &lhs2, &rhs, s * (1.0 - s),
                ));
            }
        }
    }
    vec![
        summarize_scaled("int-ext", int_ext),
        summarize_scaled("int-int", int_int),
        summarize_scaled("simpl1", simpl1),
        summarize_scaled("simpl2", simpl2),
    ]
}

fn summarize_scaled(id: &str, points: Vec<GridPointReport>) -> InequalityReport {
    // Fit the unscaled ratio against the endpoint factor 1/s.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in &points {
        if p.status == PointStatus::Checked && p.scaled_ratio.is_finite() && p.scaled_ratio > 0.0
        {
            xs.push((1.0 / p.s).ln());
            ys.push((p.lhs / p.rhs).ln());
        }
    }
    let fit = if xs.len() >= 3 { Some(regression_slope(&xs, &ys)) } else { None };
    summarize(id, points, fit)
}

#[allow(clippy::too_many_arguments)]
fn scaled_point(
    id: &str,
    function: &str,
    s: f64,
    p: f64,
    delta: Option<f64>,
    eps: Option<f64>,
    lhs: &SeminormEstimate,
    rhs: &SeminormEstimate,
    scale: f64,
) -> GridPointReport {
    let mut report = GridPointReport {
        inequality: id.into(),
        function: function.into(),
        s,
        p,
        delta,
        eps,
        lhs: lhs.value,
        lhs_sigma: lhs.std_error,
        rhs: rhs.value,
        rhs_sigma: rhs.std_error,
        scaled_ratio: f64::NAN,
        status: PointStatus::Checked,
        skip_reason: None,
        violation: false,
    };
    if rhs.tail_unbounded {
        report.status = PointStatus::Skipped;
        report.skip_reason = Some("right-hand side tail not bounded".into());
        return report;
    }
    if rhs.verdict == Verdict::Divergent {
        report.status = PointStatus::Skipped;
        report.skip_reason = Some("right-hand side divergent".into());
        return report;
    }
    if rhs.verdict == Verdict::Inconclusive && rhs.value == 0.0 {
        // Both sides vanish for constants.
        report.scaled_ratio = if lhs.value == 0.0 { 0.0 } else { f64::INFINITY };
        report.violation = lhs.value > 3.0 * lhs.lhs_sigma_or();
        return report;
    }
    // Finiteness claim: RHS finite must force LHS finite.
    if lhs.verdict == Verdict::Divergent {
        report.violation = true;
        return report;
    }
    report.scaled_ratio = scale * lhs.value / rhs.value;
    report
}

trait SigmaOr {
    fn lhs_sigma_or(&self) -> f64;
}
impl SigmaOr for SeminormEstimate {
    fn lhs_sigma_or(&self) -> f64 {
        if self.std_error > 0.0 {
            self.std_error
        } else {
            f64::INFINITY
        }
    }
}

fn hash2(s: f64, p: f64) -> u64 {
    s.to_bits().rotate_left(17) ^ p.to_bits()
}

/// `int_Omega |grad Ext(f)|^p` by per-cube Gauss quadrature over the
/// covered cubes; returns the integral and the covered measure fraction.
pub fn gradient_lp_integral<const D: usize>(
    ext: &ExtensionOperator<D>,
    p: f64,
) -> (f64, f64) {
    let w = &ext.w_omega;
    let mut total = 0.0;
    let mut covered_measure = 0.0;
    let mut all_measure = 0.0;
    for i in w.selected() {
        let rec = w.record(i);
        all_measure += rec.cube.cell().measure();
        if !w.covered(i) {
            continue;
        }
        covered_measure += rec.cube.cell().measure();
        total += integrate_box(&rec.cube.cell(), 8, |x| {
            match ext.gradient(x) {
                Ok(g) => norm(&g).powf(p),
                Err(_) => 0.0,
            }
        });
    }
    (total, if all_measure > 0.0 { covered_measure / all_measure } else { 0.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct BbmMemberReport {
    pub function: String,
    pub gradient_lp: f64,
    pub corollary_rhs: f64,
    pub corollary_ratio: f64,
    pub scaled_track: Vec<(f64, f64)>,
    pub scaled_bounded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BbmReport {
    pub members: Vec<BbmMemberReport>,
    /// Growth factor of the unscaled seminorm of the square-root collar
    /// example across the s-sequence.
    pub rough_growth: f64,
    pub rough_scaled_max_over_min: f64,
}

/// Gradient-limit check: the `L^p` norm of `grad Ext(f)` against the
/// offset-kernel functional with exponent `d + p`, plus the `(1-s)`-scaled
/// seminorm track along `s -> 1`.
pub fn check_bbm_limit<const D: usize>(
    lab: &ExtensionLab<D>,
    battery: &[BatteryMember<D>],
    p: f64,
    s_sequence: &[f64],
    budget: u64,
    seed: u64,
) -> BbmReport {
    let geo = lab.geo.as_ref();
    let inr = geo.domain.inr_omega();
    let mut members = Vec::new();
    for member in battery.iter().filter(|m| m.smooth && m.sup.is_some()) {
        let ext = lab.extend(member);
        let (grad_lp, _) = gradient_lp_integral(&ext, p);
        let g_f = |x: &Point<D>| Some((member.f)(x));
        let rhs = estimate_member(
            geo,
            &g_f,
            RegionSpec::OmegaExtEps(inr),
            RegionSpec::OmegaExtEps(inr),
            KernelKind::Offset,
            SobolevParams::new(1.0, p),
            member.far_field,
            &EstimateOptions::new(budget, seed ^ 0x1bb),
        );
        let g_ext = |x: &Point<D>| ext.evaluate_opt(x);
        let mut track = Vec::new();
        for &s in s_sequence {
            let est = estimate_member(
                geo,
                &g_ext,
                RegionSpec::Omega,
                RegionSpec::Omega,
                KernelKind::Offset,
                SobolevParams::new(s, p),
                member.far_field,
                &EstimateOptions::new(budget, seed ^ hash2(s, p)),
            );
            track.push((s, (1.0 - s) * est.value));
        }
        // Bounded along s -> 1 means no blow-up relative to the start of
        // the sequence (decay is fine).
        let finite: Vec<f64> = track.iter().map(|t| t.1).filter(|v| v.is_finite()).collect();
        let bounded = !finite.is_empty()
            && finite.iter().cloned().fold(0.0, f64::max) <= 5.0 * finite[0].max(1e-300);
        let ratio = if rhs.value > 0.0 {
            grad_lp / rhs.value
        } else if grad_lp == 0.0 {
            // Constants: both sides vanish, trivially consistent.
            0.0
        } else {
            f64::INFINITY
        };
        members.push(BbmMemberReport {
            function: member.name.into(),
            gradient_lp: grad_lp,
            corollary_rhs: rhs.value,
            corollary_ratio: ratio,
            scaled_track: track,
            scaled_bounded: bounded,
        });
    }
    // The rough example: unscaled cross seminorm of sqrt_collar grows along
    // the sequence while the scaled one stays bounded.
    let mut rough_growth = f64::NAN;
    let mut rough_scaled_ratio = f64::NAN;
    if let Some(member) = battery.iter().find(|m| m.name == "sqrt_collar") {
        let g = |x: &Point<D>| Some((member.f)(x));
        let mut unscaled = Vec::new();
        for &s in s_sequence {
            let est = estimate_member(
                geo,
                &g,
                RegionSpec::Omega,
                RegionSpec::OmegaComplement,
                KernelKind::Cross,
                SobolevParams::new(s, p),
                member.far_field,
                &EstimateOptions::new(budget, seed ^ hash2(s, 99.0 + p)),
            );
            unscaled.push((s, est.value));
        }
        if unscaled.len() >= 2 {
            rough_growth = unscaled.last().unwrap().1 / unscaled.first().unwrap().1;
            let scaled: Vec<f64> = unscaled.iter().map(|(s, v)| (1.0 - s) * v).collect();
            rough_scaled_ratio = scaled.iter().cloned().fold(0.0, f64::max)
                / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        }
    }
    BbmReport {
        members,
        rough_growth,
        rough_scaled_max_over_min: rough_scaled_ratio,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdPoint {
    pub s: f64,
    pub p: f64,
    pub verdict: Verdict,
    pub expected: Option<Verdict>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub points: Vec<ThresholdPoint>,
    pub violations: usize,
    /// Points outside the exclusion band that stayed inconclusive.
    pub budget_starved: usize,
}

/// Indicator membership threshold: convergent strictly below `s = 1/p`,
/// divergent strictly above, with a +-0.05 exclusion band.
pub fn check_char_threshold<const D: usize>(
    geo: &GeometryBundle<D>,
    battery: &[BatteryMember<D>],
    p_grid: &[f64],
    s_grid: &[f64],
    budget: u64,
    seed: u64,
) -> ThresholdReport {
    let member = battery
        .iter()
        .find(|m| m.is_indicator)
        .expect("battery lacks the indicator member");
    let g = |x: &Point<D>| Some((member.f)(x));
    let mut points = Vec::new();
    for &p in p_grid {
        for &s in s_grid {
            let est = estimate_member(
                geo,
                &g,
                RegionSpec::Omega,
                RegionSpec::OmegaComplement,
                KernelKind::Cross,
                SobolevParams::new(s, p),
                member.far_field,
                &EstimateOptions::new(budget, seed ^ hash2(s, p)),
            );
            let threshold = 1.0 / p;
            let expected = if s < threshold - 0.05 {
                Some(Verdict::Convergent)
            } else if s > threshold + 0.05 {
                Some(Verdict::Divergent)
            } else {
                None
            };
            let ok = match expected {
                Some(e) => est.verdict == e,
                None => true,
            };
            points.push(ThresholdPoint { s, p, verdict: est.verdict, expected, ok });
        }
    }
    let violations = points
        .iter()
        .filter(|pt| !pt.ok && pt.expected.is_some() && pt.verdict != Verdict::Inconclusive)
        .count();
    let budget_starved = points
        .iter()
        .filter(|pt| !pt.ok && pt.verdict == Verdict::Inconclusive)
        .count();
    ThresholdReport { points, violations, budget_starved }
}
