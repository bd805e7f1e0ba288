//! Reflected cubes across the boundary.
//!
//! For a source Whitney cube `Q` the map finds a cube `Q~` of the opposite
//! decomposition whose size and distance are comparable to `Q`'s, following
//! the constructive recipe: project the cube center to the boundary, search
//! a ball of radius `diam(Q)/M` there for a point deep inside the target
//! side, then shrink along the segment back to the boundary until the local
//! Whitney cube satisfies `diam(Q~) <= lambda diam(Q)`. Each entry carries a
//! certificate with the five comparable quantities.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::Domain;
use crate::geom::{dist, lerp, Point};
use crate::sampling::r2_points_in_ball;
use crate::whitney::{DomainSide, DyadicCube, WhitneyDecomposition};

/// Parameters of the reflected-cube construction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThicknessParams {
    /// Threshold multiplier: only cubes with `diam Q < M inr(target side)`
    /// are reflected.
    pub m_multiplier: f64,
    /// Shrink ratio for reflected cubes (`diam Q~ <= lambda diam Q`).
    pub lambda: f64,
    /// Required depth ratio of the search step.
    pub kappa: f64,
    /// Whether the lambda-shrinking rewrite is applied.
    pub lambda_mode: bool,
}

pub const DEFAULT_LAMBDA: f64 = 1.0 / 125.0;
pub const DEFAULT_KAPPA: f64 = 0.3;

impl ThicknessParams {
    /// Unit multiplier, used by the norm-equivalence machinery.
    pub fn unit() -> Self {
        Self {
            m_multiplier: 1.0,
            lambda: DEFAULT_LAMBDA,
            kappa: DEFAULT_KAPPA,
            lambda_mode: true,
        }
    }

    /// Multiplier rule of the extension construction: `M = 1` when the
    /// complement has infinite inner radius, otherwise
    /// `M = 2 sqrt(d) inr(Omega) / inr(complement)` so that every cube of
    /// `W(Omega)` passes the threshold.
    pub fn for_extension<const D: usize>(domain: &Domain<D>) -> Self {
        let m = if domain.inr_complement().is_infinite() {
            1.0
        } else {
            2.0 * (D as f64).sqrt() * domain.inr_omega() / domain.inr_complement()
        };
        Self {
            m_multiplier: m,
            lambda: DEFAULT_LAMBDA,
            kappa: DEFAULT_KAPPA,
            lambda_mode: true,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }
}

/// The five comparable quantities of an entry.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Certificate {
    pub diam_q: f64,
    pub diam_qt: f64,
    pub dist_q_boundary: f64,
    pub dist_qt_boundary: f64,
    pub dist_q_qt: f64,
}

impl Certificate {
    /// The four constant-defining ratios of the thickness inequality.
    pub fn ratios(&self) -> [f64; 4] {
        [
            self.diam_qt / self.diam_q,
            self.diam_q / self.diam_qt,
            self.dist_q_qt / self.dist_q_boundary,
            self.dist_qt_boundary / self.dist_q_boundary,
        ]
    }

    /// Largest pairwise comparability ratio among the five quantities.
    pub fn max_ratio(&self) -> f64 {
        let q = [
            self.diam_q,
            self.diam_qt,
            self.dist_q_boundary,
            self.dist_qt_boundary.max(1e-300),
            self.dist_q_qt.max(1e-300),
        ];
        let mut worst = 1.0f64;
        for i in 0..q.len() {
            for j in 0..q.len() {
                if q[i] > 0.0 && q[j] > 0.0 {
                    worst = worst.max(q[i] / q[j]);
                }
            }
        }
        worst
    }
}

#[derive(Clone, Debug)]
pub struct ReflectionEntry<const D: usize> {
    /// Index of the source cube in the source decomposition.
    pub source: u32,
    pub target: DyadicCube<D>,
    /// Target lies below the stored resolution of the target decomposition.
    pub target_virtual: bool,
    pub cert: Certificate,
    /// Whether the target sits in the confinement collar
    /// `{x : dist(x, boundary) < inr(source side)}`.
    pub confined: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReflectionFailure {
    pub source_id: String,
    pub best_depth: f64,
    pub required_depth: f64,
}

pub struct ReflectionMap<const D: usize> {
    pub entries: Vec<ReflectionEntry<D>>,
    by_source: HashMap<u32, u32>,
    pub failures: Vec<ReflectionFailure>,
    pub c_achieved: f64,
    pub n_overlap: u32,
    pub params: ThicknessParams,
}

impl<const D: usize> ReflectionMap<D> {
    pub fn entry_for(&self, source: u32) -> Option<&ReflectionEntry<D>> {
        self.by_source.get(&source).map(|&i| &self.entries[i as usize])
    }

    pub fn export_jsonl(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        let header = serde_json::json!({
            "format": "reflection-table",
            "version": 1,
            "lambda": self.params.lambda,
            "kappa": self.params.kappa,
            "m_multiplier": self.params.m_multiplier,
        });
        writeln!(out, "{header}")?;
        for e in &self.entries {
            let r = e.cert.ratios();
            let line = serde_json::json!({
                "source": e.source,
                "target": e.target.id(),
                "virtual": e.target_virtual,
                "ratios": [r[0], r[1], r[2], r[3]],
            });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

fn side_inr<const D: usize>(domain: &Domain<D>, side: DomainSide) -> f64 {
    match side {
        DomainSide::Omega => domain.inr_omega(),
        DomainSide::InteriorComplement => domain.inr_complement(),
    }
}

fn target_member<const D: usize>(domain: &Domain<D>, side: DomainSide, x: &Point<D>) -> bool {
    match side {
        DomainSide::Omega => domain.member(x),
        DomainSide::InteriorComplement => {
            !domain.member(x) && domain.boundary_distance(x) > 0.0
        }
    }
}

/// Deterministic search of `B(y, radius)` for a point of the target side
/// maximizing distance-to-boundary. Scans a fixed low-discrepancy set with
/// early exit once comfortably above `threshold`, then refines locally.
fn search_deep_point<const D: usize>(
    domain: &Domain<D>,
    side: DomainSide,
    y: &Point<D>,
    radius: f64,
    threshold: f64,
) -> (Point<D>, f64) {
    let exit_at = (0.45 * radius).max(1.5 * threshold);
    let mut best = 0.0f64;
    let mut best_z = *y;
    for z in r2_points_in_ball(y, radius, 1024 << D) {
        if target_member(domain, side, &z) {
            let v = domain.boundary_distance(&z);
            if v > best {
                best = v;
                best_z = z;
                if best >= exit_at {
                    return (best_z, best);
                }
            }
        }
    }
    // Local refinement to sharpen a marginal candidate.
    let mut rho = 0.25 * radius;
    for _ in 0..16 {
        for z in r2_points_in_ball(&best_z, rho, 48) {
            if dist(&z, y) <= radius && target_member(domain, side, &z) {
                let v = domain.boundary_distance(&z);
                if v > best {
                    best = v;
                    best_z = z;
                }
            }
        }
        rho *= 0.6;
    }
    (best_z, best)
}

/// Bisect along the segment `from -> to` (a boundary point) for the last
/// point of the target side with distance-to-boundary `target_bd`.
fn walk_to_depth<const D: usize>(
    domain: &Domain<D>,
    side: DomainSide,
    from: &Point<D>,
    to: &Point<D>,
    target_bd: f64,
) -> Point<D> {
    let h = |t: f64| -> f64 {
        let x = lerp(from, to, t);
        if target_member(domain, side, &x) {
            domain.boundary_distance(&x)
        } else {
            0.0
        }
    };
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (t0 + t1);
        if h(mid) >= target_bd {
            t0 = mid;
        } else {
            t1 = mid;
        }
    }
    lerp(from, to, t0)
}

/// Build the reflected-cube table from `source` into `target`.
///
/// Failures are data, not errors: a cube with no admissible reflected point
/// is recorded as evidence against thickness at that scale.
pub fn build_reflection<const D: usize>(
    source: &WhitneyDecomposition<D>,
    target: &WhitneyDecomposition<D>,
    params: &ThicknessParams,
) -> ReflectionMap<D> {
    let domain: &Arc<Domain<D>> = &source.domain;
    let threshold_diam = params.m_multiplier * side_inr(domain, target.side);
    let sources: Vec<u32> = source
        .selected()
        .filter(|&i| {
            let r = source.record(i);
            r.flags.clean() && r.cube.diam() < threshold_diam
        })
        .collect();

    let results: Vec<Result<ReflectionEntry<D>, ReflectionFailure>> = sources
        .par_iter()
        .map(|&si| {
            let rec = source.record(si);
            let q = rec.cube;
            let diam_q = q.diam();
            let search_radius = diam_q / params.m_multiplier;
            let y = domain.nearest_boundary_point(&q.center());
            let required = params.kappa * search_radius;
            let (z, depth) =
                search_deep_point(domain.as_ref(), target.side, &y, search_radius, required);
            if depth < required {
                return Err(ReflectionFailure {
                    source_id: q.id(),
                    best_depth: depth,
                    required_depth: required,
                });
            }
            let mut located = target.locate_whitney_unbounded(&z);
            if params.lambda_mode {
                let needs_rewrite = located
                    .as_ref()
                    .map(|(c, _)| c.diam() > params.lambda * diam_q)
                    .unwrap_or(true);
                if needs_rewrite {
                    let start = located.map(|(c, _)| c.center()).unwrap_or(z);
                    let w = walk_to_depth(
                        domain.as_ref(),
                        target.side,
                        &start,
                        &y,
                        params.lambda * diam_q,
                    );
                    located = target.locate_whitney_unbounded(&w);
                }
            }
            let Some((qt, virtual_target)) = located else {
                return Err(ReflectionFailure {
                    source_id: q.id(),
                    best_depth: depth,
                    required_depth: required,
                });
            };
            let (qt_dist, _) = domain.cube_boundary_distance(&qt.cell());
            let cert = Certificate {
                diam_q,
                diam_qt: qt.diam(),
                dist_q_boundary: rec.dist_lo,
                dist_qt_boundary: qt_dist,
                dist_q_qt: q.cell().dist_to_box(&qt.cell()),
            };
            let confined = {
                let collar = side_inr(domain, source.side);
                let bd_hi = domain.boundary_distance(&qt.center()) + 0.5 * qt.diam();
                bd_hi < collar
            };
            Ok(ReflectionEntry {
                source: si,
                target: qt,
                target_virtual: virtual_target,
                cert,
                confined,
            })
        })
        .collect();

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(f) => failures.push(f),
        }
    }
    let c_achieved = entries
        .iter()
        .map(|e| e.cert.max_ratio())
        .fold(1.0f64, f64::max);
    let n_overlap = reflected_overlap(&entries);
    let by_source = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.source, i as u32))
        .collect();
    ReflectionMap {
        entries,
        by_source,
        failures,
        c_achieved,
        n_overlap,
        params: *params,
    }
}

/// Max multiplicity of the reflected family at probed points (target
/// centers), using dyadic ancestor lookups.
fn reflected_overlap<const D: usize>(entries: &[ReflectionEntry<D>]) -> u32 {
    let set: HashSet<(i32, [i64; D])> =
        entries.iter().map(|e| (e.target.level, e.target.index)).collect();
    let mut levels: Vec<i32> = entries.iter().map(|e| e.target.level).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut worst = 0u32;
    for e in entries {
        let c = e.target.center();
        let mut count = 0u32;
        for &level in &levels {
            let cand = DyadicCube::<D>::containing(level, &c);
            if set.contains(&(level, cand.index)) {
                count += 1;
            }
        }
        worst = worst.max(count);
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AuditSide {
    Interior,
    Exterior,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThicknessAuditReport {
    pub side: AuditSide,
    pub total_cubes: usize,
    pub reflected: usize,
    pub pass_fraction: f64,
    pub pass: bool,
    pub c_achieved: f64,
    pub n_overlap: u32,
    pub failures: Vec<ReflectionFailure>,
}

/// Run the reflected-cube construction in the requested direction and
/// summarize. `Interior` reflects complement cubes into the set; `Exterior`
/// reflects the set's cubes into the complement.
pub fn thickness_audit<const D: usize>(
    w_omega: &WhitneyDecomposition<D>,
    w_complement: &WhitneyDecomposition<D>,
    side: AuditSide,
    params: &ThicknessParams,
) -> (ReflectionMap<D>, ThicknessAuditReport) {
    let (src, tgt) = match side {
        AuditSide::Interior => (w_complement, w_omega),
        AuditSide::Exterior => (w_omega, w_complement),
    };
    let map = build_reflection(src, tgt, params);
    let total = map.entries.len() + map.failures.len();
    let pass_fraction = if total == 0 {
        1.0
    } else {
        map.entries.len() as f64 / total as f64
    };
    let report = ThicknessAuditReport {
        side,
        total_cubes: total,
        reflected: map.entries.len(),
        pass_fraction,
        pass: map.failures.is_empty() && total > 0,
        c_achieved: map.c_achieved,
        n_overlap: map.n_overlap,
        failures: map.failures.clone(),
    };
    (map, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AxisBox;

    fn half_line_pair() -> (WhitneyDecomposition<1>, WhitneyDecomposition<1>) {
        let d = Arc::new(Domain::<1>::half_space().unwrap());
        let window = AxisBox::new([-2.0], [2.0]);
        let w_omega =
            WhitneyDecomposition::decompose(d.clone(), DomainSide::Omega, &window, 12).unwrap();
        let w_comp =
            WhitneyDecomposition::decompose(d, DomainSide::InteriorComplement, &window, 12)
                .unwrap();
        (w_omega, w_comp)
    }

    #[test]
    fn half_line_reflection_is_scale_invariant() {
        let (w_omega, w_comp) = half_line_pair();
        let params = ThicknessParams::for_extension(w_omega.domain.as_ref());
        assert_eq!(params.m_multiplier, 1.0);
        let map = build_reflection(&w_omega, &w_comp, &params);
        assert!(map.failures.is_empty());
        assert!(!map.entries.is_empty());
        // Mirror-symmetric construction: the certificate ratios must not
        // depend on the cube scale.
        let mut by_level: HashMap<i32, [f64; 4]> = HashMap::new();
        for e in &map.entries {
            let rec = w_omega.record(e.source);
            if rec.flags.window_truncated {
                continue;
            }
            let r = e.cert.ratios();
            if let Some(prev) = by_level.insert(rec.cube.level, r) {
                for k in 0..4 {
                    assert!(
                        (prev[k] - r[k]).abs() <= 1e-9 * prev[k].abs().max(1.0),
                        "level ratios drift"
                    );
                }
            }
        }
        // Across levels, ratios agree (scale invariance of the half-line).
        let all: Vec<[f64; 4]> = by_level.values().cloned().collect();
        for w in all.windows(2) {
            for k in 0..4 {
                assert!(
                    (w[0][k] - w[1][k]).abs() <= 1e-6 * w[0][k].abs().max(1.0),
                    "ratios vary across scales: {:?} vs {:?}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn lambda_mode_shrinks_every_entry() {
        let (w_omega, w_comp) = half_line_pair();
        let params = ThicknessParams::for_extension(w_omega.domain.as_ref());
        let map = build_reflection(&w_omega, &w_comp, &params);
        for e in &map.entries {
            let dq = w_omega.record(e.source).cube.diam();
            assert!(
                e.cert.diam_qt <= params.lambda * dq * (1.0 + 1e-12),
                "diam(Q~) = {} > lambda diam(Q) = {}",
                e.cert.diam_qt,
                params.lambda * dq
            );
        }
    }

    #[test]
    fn prefilter_excludes_large_cubes() {
        let d = Arc::new(Domain::<1>::interval(-1.0, 1.0).unwrap());
        let window = AxisBox::new([-4.0], [4.0]);
        let w_omega =
            WhitneyDecomposition::decompose(d.clone(), DomainSide::Omega, &window, 10).unwrap();
        let w_comp =
            WhitneyDecomposition::decompose(d, DomainSide::InteriorComplement, &window, 10)
                .unwrap();
        // Interior direction: complement cubes reflect into the interval;
        // threshold is M * inr(Omega) = 1.
        let params = ThicknessParams::unit();
        let map = build_reflection(&w_comp, &w_omega, &params);
        for e in &map.entries {
            assert!(w_comp.record(e.source).cube.diam() < 1.0);
        }
        assert!(map.failures.is_empty());
        assert!(!map.entries.is_empty());
    }

    #[test]
    fn ball_audits_pass_both_directions() {
        let d = Arc::new(Domain::<2>::ball(1.0).unwrap());
        let window = AxisBox::new([-2.0, -2.0], [2.0, 2.0]);
        let w_omega =
            WhitneyDecomposition::decompose(d.clone(), DomainSide::Omega, &window, 7).unwrap();
        let w_comp =
            WhitneyDecomposition::decompose(d, DomainSide::InteriorComplement, &window, 7)
                .unwrap();
        let params = ThicknessParams::unit();
        let (_, interior) = thickness_audit(&w_omega, &w_comp, AuditSide::Interior, &params);
        assert!(interior.pass, "interior audit failed: {:?}", interior.failures.len());
        assert!(interior.c_achieved.is_finite());
        let (_, exterior) = thickness_audit(&w_omega, &w_comp, AuditSide::Exterior, &params);
        assert!(exterior.pass, "exterior audit failed");
        assert!(exterior.n_overlap < 64);
    }

    #[test]
    fn five_quantities_stay_comparable_under_refinement() {
        let d = Arc::new(Domain::<2>::ball(1.0).unwrap());
        let window = AxisBox::new([-2.0, -2.0], [2.0, 2.0]);
        let mut achieved = Vec::new();
        for m_max in [6, 8] {
            let w_omega =
                WhitneyDecomposition::decompose(d.clone(), DomainSide::Omega, &window, m_max)
                    .unwrap();
            let w_comp = WhitneyDecomposition::decompose(
                d.clone(),
                DomainSide::InteriorComplement,
                &window,
                m_max,
            )
            .unwrap();
            let map = build_reflection(&w_omega, &w_comp, &ThicknessParams::unit());
            assert!(map.failures.is_empty());
            achieved.push(map.c_achieved);
        }
        let drift = (achieved[1] - achieved[0]).abs() / achieved[0];
        assert!(drift < 0.2, "c_achieved unstable: {achieved:?}");
    }
}
