//! Smooth partition of unity subordinate to the Whitney cubes.
//!
//! The profile is the classical `exp(-1/t)` smoothstep: flat 1 on the unit
//! cube, ramping to 0 across the dilation collar, so every `psi_Q` is
//! `C^infty` with support in `Q*` and the normalized family
//! `phi_Q = psi_Q / sum_R psi_R` sums to exactly 1 on the covered part of
//! the set. All gradients are analytic.

use serde::Serialize;

use crate::domain::SobolevParams;
use crate::geom::Point;
use crate::seminorm::{estimate_on_boxes, EstimateOptions, KernelKind};
use crate::whitney::{DyadicCube, WhitneyDecomposition, EPS_DILATE};

/// `exp(-1/t)` for positive `t`, else 0.
fn g(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn dg(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

/// Smoothstep on [0, 1]: 0 at 0, 1 at 1, all derivatives vanish at both ends.
fn step(u: f64) -> f64 {
    let a = g(u);
    let b = g(1.0 - u);
    a / (a + b)
}

fn dstep(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let a = g(u);
    let b = g(1.0 - u);
    let s = a + b;
    (dg(u) * b + a * dg(1.0 - u)) / (s * s)
}

/// 1-D profile: 1 on [0, 1], ramps to 0 over the collar of width
/// `EPS_DILATE / 2` on both sides, 0 outside.
pub fn sigma(t: f64) -> f64 {
    let w = 0.5 * EPS_DILATE;
    if t <= -w || t >= 1.0 + w {
        0.0
    } else if t < 0.0 {
        step((t + w) / w)
    } else if t <= 1.0 {
        1.0
    } else {
        step((1.0 + w - t) / w)
    }
}

pub fn dsigma(t: f64) -> f64 {
    let w = 0.5 * EPS_DILATE;
    if t <= -w || t >= 1.0 + w {
        0.0
    } else if t < 0.0 {
        dstep((t + w) / w) / w
    } else if t <= 1.0 {
        0.0
    } else {
        -dstep((1.0 + w - t) / w) / w
    }
}

/// `psi_Q(x)` with its analytic gradient: the reference bump shifted and
/// rescaled to the cube, `psi_0((x - x_Q)/l + x_{Q_0})`.
pub fn psi<const D: usize>(cube: &DyadicCube<D>, x: &Point<D>) -> (f64, Point<D>) {
    let l = cube.side();
    let c = cube.center();
    let mut vals = [0.0; D];
    let mut ders = [0.0; D];
    for j in 0..D {
        let u = (x[j] - c[j]) / l + 0.5;
        vals[j] = sigma(u);
        ders[j] = dsigma(u);
    }
    let mut value = 1.0;
    for j in 0..D {
        value *= vals[j];
    }
    let mut grad = [0.0; D];
    for j in 0..D {
        if ders[j] != 0.0 {
            let mut prod = ders[j] / l;
            for k in 0..D {
                if k != j {
                    prod *= vals[k];
                }
            }
            grad[j] = prod;
        }
    }
    (value, grad)
}

/// A weighted sum `sum_Q c_Q phi_Q(x)` with its analytic gradient, computed
/// through the quotient rule on `T/S` with `T = sum c_Q psi_Q`,
/// `S = sum psi_Q` over the neighbors of the cube containing `x`.
///
/// Returns `None` at points where the partition is incomplete (outside the
/// covered region).
pub fn weighted_phi_sum<const D: usize>(
    w: &WhitneyDecomposition<D>,
    x: &Point<D>,
    coeff: impl Fn(u32) -> f64,
) -> Option<(f64, Point<D>)> {
    let c_idx = w.locate(x)?;
    if !w.covered(c_idx) {
        return None;
    }
    let mut s = 0.0;
    let mut t = 0.0;
    let mut grad_s = [0.0; D];
    let mut grad_t = [0.0; D];
    for &r in w.neighbors(c_idx) {
        let (v, dg) = psi(&w.record(r).cube, x);
        if v == 0.0 && dg.iter().all(|&d| d == 0.0) {
            continue;
        }
        let c = coeff(r);
        s += v;
        t += c * v;
        for j in 0..D {
            grad_s[j] += dg[j];
            grad_t[j] += c * dg[j];
        }
    }
    if s <= 0.0 {
        return None;
    }
    let value = t / s;
    let mut grad = [0.0; D];
    for j in 0..D {
        grad[j] = (grad_t[j] * s - t * grad_s[j]) / (s * s);
    }
    Some((value, grad))
}

/// `phi_Q(x)` with gradient; zero (with zero gradient) outside `Q*`.
pub fn phi<const D: usize>(
    w: &WhitneyDecomposition<D>,
    q: u32,
    x: &Point<D>,
) -> Option<(f64, Point<D>)> {
    let (v, _) = psi(&w.record(q).cube, x);
    if v == 0.0 {
        // Support check: outside closed Q* both value and gradient vanish.
        let qstar = w.record(q).cube.dilated();
        if !qstar.contains(x) {
            return Some((0.0, [0.0; D]));
        }
    }
    weighted_phi_sum(w, x, |r| if r == q { 1.0 } else { 0.0 })
}

/// Sum of the partition at `x` (should be exactly 1 on covered points).
pub fn phi_sum<const D: usize>(w: &WhitneyDecomposition<D>, x: &Point<D>) -> Option<f64> {
    weighted_phi_sum(w, x, |_| 1.0).map(|(v, _)| v)
}

/// Ratio report of the bump-function seminorm against its size-based bound.
#[derive(Clone, Debug, Serialize)]
pub struct PhiBoundReport {
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Estimate `|phi_Q|_{Q1,Q2}^{s,p}` and compare with the three-way minimum
/// bound `|Q1||Q2| min(l(Q1)^{p-sp-d} l(Q)^{-p}/(1-s),
/// l(Q2)^{p-sp-d} l(Q)^{-p}/(1-s), dist(Q1,Q2)^{-d-sp})`.
///
/// For `s = 1` the bound is meaningful only for separated cubes; touching
/// pairs are rejected.
pub fn phi_seminorm_bound_check<const D: usize>(
    w: &WhitneyDecomposition<D>,
    q: u32,
    q1: u32,
    q2: u32,
    params: &SobolevParams,
    opts: &EstimateOptions,
) -> Result<PhiBoundReport, &'static str> {
    let c1 = w.record(q1).cube;
    let c2 = w.record(q2).cube;
    let gap = c1.cell().dist_to_box(&c2.cell());
    if params.s >= 1.0 && gap == 0.0 {
        return Err("s = 1 with touching cubes: bound degenerates");
    }
    let g = |x: &Point<D>| phi(w, q, x).map(|(v, _)| v);
    let est = estimate_on_boxes(
        w.domain.as_ref(),
        &g,
        &c1.cell(),
        &c2.cell(),
        KernelKind::Offset,
        params,
        opts,
    );
    let bound = phi_bound::<D>(
        w.record(q).cube.side(),
        c1.side(),
        c2.side(),
        gap,
        c1.cell().measure() * c2.cell().measure(),
        params,
    );
    let ratio = if bound == 0.0 { 0.0 } else { est.value / bound };
    Ok(PhiBoundReport {
        estimate: est.value,
        std_error: est.std_error,
        bound,
        ratio,
    })
}

fn phi_bound<const D: usize>(
    l_q: f64,
    l1: f64,
    l2: f64,
    gap: f64,
    measures: f64,
    params: &SobolevParams,
) -> f64 {
    let d = D as f64;
    let (s, p) = (params.s, params.p);
    let collar = |l: f64| -> f64 {
        if s < 1.0 {
            l.powf(p - s * p - d) * l_q.powf(-p) / (1.0 - s)
        } else {
            f64::INFINITY
        }
    };
    let far = if gap > 0.0 {
        gap.powf(-(d + s * p))
    } else {
        f64::INFINITY
    };
    measures * collar(l1).min(collar(l2)).min(far)
}

/// Max of `|grad phi_Q| * l(Q)` over a deterministic sample of `Q*`,
/// maximized over the given cubes.
pub fn gradient_bound_constant<const D: usize>(
    w: &WhitneyDecomposition<D>,
    cubes: &[u32],
    samples_per_cube: usize,
) -> f64 {
    let mut worst = 0.0f64;
    for &q in cubes {
        let cube = w.record(q).cube;
        let qstar = cube.dilated();
        for x in crate::sampling::r2_points_in_box(&qstar, samples_per_cube) {
            if let Some((_, grad)) = phi(w, q, &x) {
                worst = worst.max(crate::geom::norm(&grad) * cube.side());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::geom::AxisBox;
    use crate::sampling::r2_points_in_box;
    use crate::whitney::DomainSide;
    use std::sync::Arc;

    fn interval_w(m_max: i32) -> WhitneyDecomposition<1> {
        let d = Arc::new(Domain::<1>::interval(-1.0, 1.0).unwrap());
        WhitneyDecomposition::decompose(d, DomainSide::Omega, &AxisBox::new([-1.0], [1.0]), m_max)
            .unwrap()
    }

    fn ball_w(m_max: i32) -> WhitneyDecomposition<2> {
        let d = Arc::new(Domain::<2>::ball(1.0).unwrap());
        WhitneyDecomposition::decompose(
            d,
            DomainSide::Omega,
            &AxisBox::new([-2.0, -2.0], [2.0, 2.0]),
            m_max,
        )
        .unwrap()
    }

    #[test]
    fn sigma_profile_shape() {
        assert_eq!(sigma(-0.0626), 0.0);
        assert_eq!(sigma(0.0), 1.0);
        assert_eq!(sigma(0.5), 1.0);
        assert_eq!(sigma(1.0), 1.0);
        assert_eq!(sigma(1.0626), 0.0);
        let mid = sigma(-0.03125);
        assert!(mid > 0.0 && mid < 1.0);
        // Monotone on the ramp.
        assert!(sigma(-0.01) > sigma(-0.03) && sigma(-0.03) > sigma(-0.055));
    }

    #[test]
    fn psi_center_plateau_and_support() {
        let w = ball_w(6);
        let q = w.selected().next().unwrap();
        let cube = w.record(q).cube;
        let (v, grad) = psi(&cube, &cube.center());
        assert_eq!(v, 1.0);
        assert_eq!(grad, [0.0, 0.0]);
        // Outside Q*: zero.
        let mut far = cube.center();
        far[0] += cube.side();
        let (v, grad) = psi(&cube, &far);
        assert_eq!(v, 0.0);
        assert_eq!(grad, [0.0, 0.0]);
        // 0 <= psi <= 1 densely.
        for x in r2_points_in_box(&cube.dilated(), 2000) {
            let (v, _) = psi(&cube, &x);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn psi_gradient_matches_central_differences() {
        let w = ball_w(6);
        let q = w.selected().nth(3).unwrap();
        let cube = w.record(q).cube;
        let l = cube.side();
        let h = 1e-5 * l;
        let qstar = cube.dilated();
        for x in r2_points_in_box(&qstar, 100) {
            let (_, grad) = psi(&cube, &x);
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (psi(&cube, &xp).0 - psi(&cube, &xm).0) / (2.0 * h);
                // At h = 1e-5 l the central-difference truncation floor is
                // sup|sigma'''| h^2 / 6 ~ 7.5e-6 / l for the 1/16-wide
                // collar profile; 1e-5 / l is the certified oracle bound.
                assert!(
                    (grad[j] - fd).abs() <= 1e-5 / l,
                    "grad {} vs fd {} at {:?}",
                    grad[j],
                    fd,
                    x
                );
            }
        }
    }

    #[test]
    fn partition_sums_to_one_on_covered_points() {
        let w = interval_w(12);
        let mut checked = 0;
        for x in r2_points_in_box(&AxisBox::new([-0.99], [0.99]), 3000) {
            if let Some(s) = phi_sum(&w, &x) {
                assert!((s - 1.0).abs() <= 1e-12, "sum {} at {:?}", s, x);
                checked += 1;
            }
        }
        assert!(checked > 2000);
        let w2 = ball_w(7);
        let mut checked2 = 0;
        for x in r2_points_in_box(&AxisBox::new([-0.9, -0.9], [0.9, 0.9]), 2000) {
            if let Some(s) = phi_sum(&w2, &x) {
                assert!((s - 1.0).abs() <= 1e-12);
                checked2 += 1;
            }
        }
        assert!(checked2 > 1000);
    }

    #[test]
    fn phi_in_unit_range_and_local() {
        let w = ball_w(7);
        let cubes: Vec<u32> = w.selected().collect();
        let q = cubes[cubes.len() / 2];
        let qstar = w.record(q).cube.dilated();
        for x in r2_points_in_box(&qstar.inflate(0.2), 500) {
            if let Some((v, _)) = phi(&w, q, &x) {
                assert!((0.0..=1.0 + 1e-15).contains(&v));
                if v != 0.0 {
                    // Locality: the containing cube must be a neighbor of q.
                    let c = w.locate(&x).unwrap();
                    assert!(
                        w.neighbors(c).contains(&q),
                        "phi_Q nonzero away from N(Q)"
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_constant_is_scale_free() {
        let w = interval_w(12);
        let cubes: Vec<u32> = w.selected().collect();
        let c = gradient_bound_constant(&w, &cubes, 200);
        assert!(c > 0.0 && c < 60.0, "constant {c}");
        // Refinement stability.
        let w2 = interval_w(13);
        let cubes2: Vec<u32> = w2.selected().collect();
        let c2 = gradient_bound_constant(&w2, &cubes2, 200);
        assert!(
            (c - c2).abs() <= 0.3 * c.max(c2),
            "gradient constant drifts: {c} vs {c2}"
        );
    }

    #[test]
    fn phi_bound_check_far_cubes_zero() {
        let w = interval_w(10);
        let cubes: Vec<u32> = w.selected().collect();
        // q near the left end, q1 = q2 near the right end: supp phi_q misses.
        let q = cubes
            .iter()
            .copied()
            .find(|&i| w.record(i).cube.center()[0] < -0.9)
            .unwrap();
        let far = cubes
            .iter()
            .copied()
            .find(|&i| w.record(i).cube.center()[0] > 0.9)
            .unwrap();
        let params = SobolevParams::new(0.5, 2.0);
        let rep = phi_seminorm_bound_check(
            &w,
            q,
            far,
            far,
            &params,
            &EstimateOptions::new(20_000, 3),
        )
        .unwrap();
        assert_eq!(rep.estimate, 0.0);
        assert_eq!(rep.ratio, 0.0);
    }

    #[test]
    fn phi_bound_holds_across_small_sweep() {
        let w = interval_w(10);
        let cubes: Vec<u32> = w.selected().collect();
        let pick: Vec<u32> = vec![cubes[2], cubes[4], cubes[6]];
        let opts = EstimateOptions::new(60_000, 17);
        for &s in &[0.3, 0.7] {
            let params = SobolevParams::new(s, 2.0);
            for &q in &pick {
                for &q1 in &pick {
                    for &q2 in &pick {
                        let rep =
                            phi_seminorm_bound_check(&w, q, q1, q2, &params, &opts).unwrap();
                        assert!(
                            rep.ratio.is_finite() && rep.ratio <= 12.0,
                            "ratio {} for s={s}",
                            rep.ratio
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn s_one_touching_rejected_separated_allowed() {
        let w = interval_w(10);
        let cubes: Vec<u32> = w.selected().collect();
        let params = SobolevParams::new(1.0, 2.0);
        let opts = EstimateOptions::new(20_000, 5);
        // Adjacent cubes share a face.
        let res = phi_seminorm_bound_check(&w, cubes[0], cubes[0], cubes[0], &params, &opts);
        assert!(res.is_err());
        // Separated pair works.
        let left = cubes
            .iter()
            .copied()
            .find(|&i| w.record(i).cube.center()[0] < -0.5)
            .unwrap();
        let right = cubes
            .iter()
            .copied()
            .find(|&i| w.record(i).cube.center()[0] > 0.5)
            .unwrap();
        let res = phi_seminorm_bound_check(&w, left, left, right, &params, &opts);
        assert!(res.is_ok());
        assert!(res.unwrap().ratio.is_finite());
    }

    #[test]
    fn high_s_ratio_stays_bounded() {
        // Both sides carry the 1/(1-s) factor; the ratio must not blow up.
        let w = interval_w(10);
        let cubes: Vec<u32> = w.selected().collect();
        let params = SobolevParams::new(0.99, 2.0);
        let opts = EstimateOptions::new(60_000, 29);
        let rep = phi_seminorm_bound_check(&w, cubes[3], cubes[3], cubes[4], &params, &opts)
            .unwrap();
        assert!(rep.ratio.is_finite() && rep.ratio <= 12.0, "ratio {}", rep.ratio);
    }
}
