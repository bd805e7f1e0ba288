//! Whitney decompositions of open sets by dyadic cubes.
//!
//! Cubes are selected by the rule "maximal dyadic cube with
//! `dist(Q, boundary) >= diam(Q)`", using certified (exact, for builtin
//! shapes) cube-to-boundary distances. Maximality then forces
//! `dist(Q, boundary) < 4 diam(Q)`, so every selected cube satisfies the
//! two-sided estimate `diam <= dist <= 4 diam` with no tolerance.
//!
//! The recursion is capped by a computational window and a finest level
//! `m_max`. Cells at `m_max` whose selection is still undecided are emitted
//! with `undersized = true`; cubes whose maximality could not be checked
//! against a parent (recursion roots at the window scale) carry
//! `window_truncated = true`. Flagged cells tile the remainder of the set
//! but are excluded from every certified-Whitney statement.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::domain::Domain;
use crate::geom::{AxisBox, Point};

/// Dilation margin of `Q*`: side(Q*) = (1 + EPS_DILATE) side(Q).
pub const EPS_DILATE: f64 = 0.125;

#[derive(Debug, Error)]
pub enum WhitneyError {
    #[error("domain distance oracle is not certified (ratio {0} > 1.01)")]
    NotCertified(f64),
    #[error("domain has no boundary: Whitney distances are infinite")]
    NoBoundary,
    #[error("window does not intersect the requested side of the domain")]
    EmptyWindow,
}

/// Which side of the boundary is being decomposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DomainSide {
    Omega,
    InteriorComplement,
}

/// Dyadic cube of side `2^{-level}` at integer lattice position `index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube<const D: usize> {
    pub level: i32,
    pub index: [i64; D],
}

impl<const D: usize> DyadicCube<D> {
    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn diam(&self) -> f64 {
        (D as f64).sqrt() * self.side()
    }

    pub fn cell(&self) -> AxisBox<D> {
        let s = self.side();
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for j in 0..D {
            lo[j] = self.index[j] as f64 * s;
            hi[j] = (self.index[j] + 1) as f64 * s;
        }
        AxisBox::new(lo, hi)
    }

    pub fn center(&self) -> Point<D> {
        let s = self.side();
        let mut c = [0.0; D];
        for j in 0..D {
            c[j] = (self.index[j] as f64 + 0.5) * s;
        }
        c
    }

    /// The dilated cube `Q*`.
    pub fn dilated(&self) -> AxisBox<D> {
        self.cell().dilate(EPS_DILATE)
    }

    pub fn parent(&self) -> DyadicCube<D> {
        let mut idx = [0i64; D];
        for j in 0..D {
            idx[j] = self.index[j].div_euclid(2);
        }
        DyadicCube { level: self.level - 1, index: idx }
    }

    pub fn children(&self) -> Vec<DyadicCube<D>> {
        let mut out = Vec::with_capacity(1 << D);
        for mask in 0..(1usize << D) {
            let mut idx = [0i64; D];
            for j in 0..D {
                idx[j] = 2 * self.index[j] + ((mask >> j & 1) as i64);
            }
            out.push(DyadicCube { level: self.level + 1, index: idx });
        }
        out
    }

    /// Stable printable id, e.g. `m3:5,-2`.
    pub fn id(&self) -> String {
        let coords: Vec<String> = self.index.iter().map(|k| k.to_string()).collect();
        format!("m{}:{}", self.level, coords.join(","))
    }

    /// Cube at `level` containing `x`, ties broken toward the smaller index.
    pub fn containing(level: i32, x: &Point<D>) -> DyadicCube<D> {
        let s = 2f64.powi(-level);
        let mut idx = [0i64; D];
        for j in 0..D {
            let t = x[j] / s;
            let mut k = t.floor() as i64;
            // On a shared face the smaller cube wins.
            if t == k as f64 && k as f64 * s == x[j] {
                k -= 1;
            }
            idx[j] = k;
        }
        DyadicCube { level, index: idx }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct CubeFlags {
    pub window_truncated: bool,
    pub undersized: bool,
}

impl CubeFlags {
    pub fn clean(&self) -> bool {
        !self.window_truncated && !self.undersized
    }
}

#[derive(Clone, Debug)]
pub struct CubeRecord<const D: usize> {
    pub cube: DyadicCube<D>,
    pub flags: CubeFlags,
    /// Certified interval for `dist(Q, boundary)` (exact for builtins).
    pub dist_lo: f64,
    pub dist_hi: f64,
}

/// Cube filters realizing the distance/size families.
#[derive(Clone, Copy, Debug)]
pub enum CubeFilter {
    /// `dist(Q, boundary) < delta`
    DistLess(f64),
    /// `diam(Q) < c`
    DiamLess(f64),
}

pub struct WhitneyDecomposition<const D: usize> {
    pub domain: Arc<Domain<D>>,
    pub side: DomainSide,
    pub window: AxisBox<D>,
    pub m_max: i32,
    pub root_level: i32,
    cubes: Vec<CubeRecord<D>>,
    lookup: HashMap<(i32, [i64; D]), u32>,
    levels: Vec<i32>,
    neighbors: Vec<Vec<u32>>,
    /// Whether any flagged (undersized/truncated) cell touches the cube's
    /// dilation; used by the coverage predicate.
    flagged_touch: Vec<bool>,
}

/// Snap a requested box outward to a dyadic-aligned window and pick the
/// recursion root level.
pub fn snap_window<const D: usize>(requested: &AxisBox<D>) -> (AxisBox<D>, i32) {
    let mut max_side = 0.0f64;
    for j in 0..D {
        max_side = max_side.max(requested.side(j));
    }
    assert!(max_side > 0.0, "window must have positive size");
    let k = (max_side.log2().floor() as i32) - 1;
    let root_side = 2f64.powi(k);
    let mut lo = [0.0; D];
    let mut hi = [0.0; D];
    for j in 0..D {
        lo[j] = root_side * (requested.lo[j] / root_side).floor();
        hi[j] = root_side * (requested.hi[j] / root_side).ceil();
        if hi[j] <= lo[j] {
            hi[j] = lo[j] + root_side;
        }
    }
    (AxisBox::new(lo, hi), -k)
}

impl<const D: usize> WhitneyDecomposition<D> {
    /// Build the decomposition of the requested side of the domain inside
    /// `window`, refining to cubes of side `2^{-m_max}`.
    pub fn decompose(
        domain: Arc<Domain<D>>,
        side: DomainSide,
        window: &AxisBox<D>,
        m_max: i32,
    ) -> Result<Self, WhitneyError> {
        let ratio = domain.certification_ratio();
        if ratio > 1.01 {
            return Err(WhitneyError::NotCertified(ratio));
        }
        if !domain.has_boundary() {
            return Err(WhitneyError::NoBoundary);
        }
        let (window, root_level) = snap_window(window);
        let mut w = Self {
            domain,
            side,
            window,
            m_max,
            root_level,
            cubes: Vec::new(),
            lookup: HashMap::new(),
            levels: Vec::new(),
            neighbors: Vec::new(),
            flagged_touch: Vec::new(),
        };
        let root_side = 2f64.powi(-root_level);
        let mut ranges = [(0i64, 0i64); D];
        for j in 0..D {
            let lo = (window.lo[j] / root_side).round() as i64;
            let hi = (window.hi[j] / root_side).round() as i64;
            ranges[j] = (lo, hi);
        }
        let mut stack: Vec<(DyadicCube<D>, bool)> = Vec::new();
        let mut idx = [0i64; D];
        for j in 0..D {
            idx[j] = ranges[j].0;
        }
        'roots: loop {
            stack.push((DyadicCube { level: root_level, index: idx }, false));
            let mut j = 0;
            loop {
                if j == D {
                    break 'roots;
                }
                idx[j] += 1;
                if idx[j] < ranges[j].1 {
                    break;
                }
                idx[j] = ranges[j].0;
                j += 1;
            }
        }
        while let Some((cube, parent_failed)) = stack.pop() {
            w.visit(cube, parent_failed, &mut stack);
        }
        if w.cubes.is_empty() {
            return Err(WhitneyError::EmptyWindow);
        }
        w.finish();
        Ok(w)
    }

    fn side_member(&self, x: &Point<D>) -> bool {
        match self.side {
            DomainSide::Omega => self.domain.member(x),
            DomainSide::InteriorComplement => {
                !self.domain.member(x) && self.domain.boundary_distance(x) > 0.0
            }
        }
    }

    fn visit(
        &mut self,
        cube: DyadicCube<D>,
        parent_failed: bool,
        stack: &mut Vec<(DyadicCube<D>, bool)>,
    ) {
        let cell = cube.cell();
        let (dlo, dhi) = self.domain.cube_boundary_distance(&cell);
        let diam = cube.diam();
        if dlo > 0.0 {
            // The cube is certified not to meet the boundary, so it lies on
            // one side entirely.
            let inside = self.side_member(&cube.center());
            if !inside {
                return;
            }
            if dlo >= diam {
                self.push(
                    cube,
                    CubeFlags { window_truncated: !parent_failed, undersized: false },
                    dlo,
                    dhi,
                );
                return;
            }
        }
        if cube.level >= self.m_max {
            // Undecided at the resolution floor. Keep it (flagged) unless it
            // is certified to miss the side set.
            if dlo > 0.0 && !self.side_member(&cube.center()) {
                return;
            }
            self.push(
                cube,
                CubeFlags { window_truncated: false, undersized: true },
                dlo,
                dhi,
            );
            return;
        }
        for child in cube.children() {
            stack.push((child, true));
        }
    }

    fn push(&mut self, cube: DyadicCube<D>, flags: CubeFlags, dlo: f64, dhi: f64) {
        self.cubes.push(CubeRecord { cube, flags, dist_lo: dlo, dist_hi: dhi });
    }

    fn finish(&mut self) {
        self.cubes.sort_by(|a, b| {
            (a.cube.level, a.cube.index).cmp(&(b.cube.level, b.cube.index))
        });
        self.lookup = self
            .cubes
            .iter()
            .enumerate()
            .map(|(i, r)| ((r.cube.level, r.cube.index), i as u32))
            .collect();
        let mut levels: Vec<i32> = self.cubes.iter().map(|r| r.cube.level).collect();
        levels.sort_unstable();
        levels.dedup();
        self.levels = levels;
        self.neighbors = vec![Vec::new(); self.cubes.len()];
        self.flagged_touch = vec![false; self.cubes.len()];
        for i in 0..self.cubes.len() {
            let (nbrs, flagged) = self.compute_neighbors(i as u32);
            self.neighbors[i] = nbrs;
            self.flagged_touch[i] = flagged;
        }
    }

    pub fn records(&self) -> &[CubeRecord<D>] {
        &self.cubes
    }

    pub fn record(&self, idx: u32) -> &CubeRecord<D> {
        &self.cubes[idx as usize]
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Indices of clean (certified Whitney) cubes.
    pub fn selected(&self) -> impl Iterator<Item = u32> + '_ {
        self.cubes
            .iter()
            .enumerate()
            .filter(|(_, r)| r.flags.clean())
            .map(|(i, _)| i as u32)
    }

    /// The emitted cell containing `x`, if any. Flags distinguish certified
    /// cubes from undersized filler cells.
    pub fn locate(&self, x: &Point<D>) -> Option<u32> {
        if !self.window.contains(x) {
            return None;
        }
        for &level in &self.levels {
            let base = DyadicCube::<D>::containing(level, x);
            if let Some(&i) = self.lookup.get(&(level, base.index)) {
                return Some(i);
            }
            // On lattice faces the tie-break candidate may differ from the
            // emitted cube; scan the adjacent candidates that still contain x.
            let s = base.side();
            let mut exact = [false; D];
            let mut any = false;
            for j in 0..D {
                let t = x[j] / s;
                if t == t.floor() {
                    exact[j] = true;
                    any = true;
                }
            }
            if any {
                for mask in 0..(1usize << D) {
                    let mut idx = base.index;
                    let mut ok = true;
                    for j in 0..D {
                        if mask >> j & 1 == 1 {
                            if exact[j] {
                                idx[j] += 1;
                            } else {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if !ok {
                        continue;
                    }
                    if let Some(&i) = self.lookup.get(&(level, idx)) {
                        if self.cubes[i as usize].cube.cell().contains(x) {
                            return Some(i);
                        }
                    }
                }
            }
        }
        None
    }

    /// All emitted cells whose closure intersects the dilated cube `Q*`.
    fn compute_neighbors(&self, q: u32) -> (Vec<u32>, bool) {
        let rec = &self.cubes[q as usize];
        let qstar = rec.cube.dilated();
        let mut out = Vec::new();
        let mut flagged = false;
        for &level in &self.levels {
            if (level - rec.cube.level).abs() > 4 {
                continue;
            }
            let s = 2f64.powi(-level);
            let mut lo = [0i64; D];
            let mut hi = [0i64; D];
            for j in 0..D {
                lo[j] = (qstar.lo[j] / s).floor() as i64;
                hi[j] = (qstar.hi[j] / s).floor() as i64;
            }
            let mut idx = lo;
            'grid: loop {
                if let Some(&i) = self.lookup.get(&(level, idx)) {
                    let r = &self.cubes[i as usize];
                    if r.cube.cell().intersects(&qstar) {
                        if r.flags.clean() {
                            out.push(i);
                        } else {
                            flagged = true;
                        }
                    }
                }
                let mut j = 0;
                loop {
                    if j == D {
                        break 'grid;
                    }
                    idx[j] += 1;
                    if idx[j] <= hi[j] {
                        break;
                    }
                    idx[j] = lo[j];
                    j += 1;
                }
            }
        }
        out.sort_unstable();
        (out, flagged)
    }

    /// Neighbor family of a clean cube (always contains the cube itself).
    pub fn neighbors(&self, q: u32) -> &[u32] {
        &self.neighbors[q as usize]
    }

    /// True when the partition of unity is complete around this cube: the
    /// cube is clean, no flagged cell touches `Q*`, and the window face is
    /// far enough that no out-of-window cube could contribute.
    pub fn covered(&self, q: u32) -> bool {
        let rec = &self.cubes[q as usize];
        if !rec.flags.clean() || self.flagged_touch[q as usize] {
            return false;
        }
        let cell = rec.cube.cell();
        let mut margin = f64::INFINITY;
        for j in 0..D {
            margin = margin.min(cell.lo[j] - self.window.lo[j]);
            margin = margin.min(self.window.hi[j] - cell.hi[j]);
        }
        margin >= 0.5 * rec.cube.side()
    }

    /// Subset of clean cubes passing the filter.
    pub fn filter(&self, f: CubeFilter) -> Vec<u32> {
        self.selected()
            .filter(|&i| {
                let r = &self.cubes[i as usize];
                match f {
                    CubeFilter::DistLess(delta) => r.dist_lo < delta,
                    CubeFilter::DiamLess(c) => r.cube.diam() < c,
                }
            })
            .collect()
    }

    /// Whitney cube containing `x` computed from the selection predicate
    /// directly, descending past `m_max` if necessary ("virtual" cubes).
    /// Returns the cube and whether it lies beyond the stored resolution.
    pub fn locate_whitney_unbounded(&self, x: &Point<D>) -> Option<(DyadicCube<D>, bool)> {
        if !self.window.contains(x) || !self.side_member(x) {
            return None;
        }
        let mut parent_ok = false;
        for level in self.root_level..(self.root_level + 80) {
            let cube = DyadicCube::<D>::containing(level, x);
            if !self.window.contains_box(&cube.cell()) {
                // Clamp to in-window cubes; root alignment makes this exact.
                continue;
            }
            let (dlo, _) = self.domain.cube_boundary_distance(&cube.cell());
            if dlo >= cube.diam() {
                if parent_ok || level == self.root_level {
                    return Some((cube, level > self.m_max));
                }
                return Some((cube, level > self.m_max));
            }
            parent_ok = true;
        }
        None
    }

    /// Largest clean-cube diameter (window-truncated roots excluded).
    pub fn max_clean_diam(&self) -> f64 {
        self.selected()
            .map(|i| self.cubes[i as usize].cube.diam())
            .fold(0.0, f64::max)
    }

    /// Core window: the computational window shrunk so that truncation
    /// effects cannot reach reported integrals.
    pub fn core_window(&self) -> AxisBox<D> {
        let mut margin = 0.0f64;
        for r in &self.cubes {
            if r.flags.window_truncated {
                margin = margin.max(2.0 * r.cube.diam());
            }
        }
        if margin == 0.0 {
            return self.window;
        }
        let m = margin.min(0.2 * self.window.diam());
        self.window.inflate(-m)
    }

    /// Line-delimited export with a versioned header; deterministic order.
    pub fn export_jsonl(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        let header = serde_json::json!({
            "format": "whitney-cubes",
            "version": 1,
            "side": format!("{:?}", self.side),
            "m_max": self.m_max,
        });
        writeln!(out, "{header}")?;
        for r in &self.cubes {
            let line = serde_json::json!({
                "m": r.cube.level,
                "k": r.cube.index.to_vec(),
                "window_truncated": r.flags.window_truncated,
                "undersized": r.flags.undersized,
            });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Both-side decompositions of one domain in one window; the shared
/// geometry input of the seminorm, extension and verification layers.
pub struct GeometryBundle<const D: usize> {
    pub domain: Arc<Domain<D>>,
    pub window: AxisBox<D>,
    pub m_max: i32,
    pub w_omega: Arc<WhitneyDecomposition<D>>,
    pub w_complement: Arc<WhitneyDecomposition<D>>,
}

impl<const D: usize> GeometryBundle<D> {
    pub fn build(
        domain: Arc<Domain<D>>,
        window: &AxisBox<D>,
        m_max: i32,
    ) -> Result<Self, WhitneyError> {
        let w_omega = Arc::new(WhitneyDecomposition::decompose(
            domain.clone(),
            DomainSide::Omega,
            window,
            m_max,
        )?);
        let w_complement = Arc::new(WhitneyDecomposition::decompose(
            domain.clone(),
            DomainSide::InteriorComplement,
            window,
            m_max,
        )?);
        Ok(Self {
            domain,
            window: w_omega.window,
            m_max,
            w_omega,
            w_complement,
        })
    }

    /// Intersection of the two core windows.
    pub fn core_window(&self) -> AxisBox<D> {
        let a = self.w_omega.core_window();
        let b = self.w_complement.core_window();
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for j in 0..D {
            lo[j] = a.lo[j].max(b.lo[j]);
            hi[j] = a.hi[j].min(b.hi[j]);
        }
        AxisBox::new(lo, hi)
    }
}
