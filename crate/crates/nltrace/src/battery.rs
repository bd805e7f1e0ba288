//! The named function battery used by the verification harness.
//!
//! Each member is a globally defined function together with the far-field
//! tag needed by tail bounds and its known membership properties (smooth,
//! compactly supported, the indicator threshold).

use std::sync::Arc;

use rand::Rng;

use crate::domain::Domain;
use crate::extend::ComplementFunction;
use crate::geom::{norm, Point};
use crate::sampling::stratum_rng;
use crate::seminorm::FarField;

pub type BatteryFn<const D: usize> = Arc<dyn Fn(&Point<D>) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct BatteryMember<const D: usize> {
    pub name: &'static str,
    pub f: BatteryFn<D>,
    pub far_field: FarField,
    /// Certified sup bound over all space, when bounded.
    pub sup: Option<f64>,
    /// Smooth enough for the gradient-limit checks.
    pub smooth: bool,
    /// The indicator of the set (cross-seminorm finite iff s < 1/p).
    pub is_indicator: bool,
}

impl<const D: usize> BatteryMember<D> {
    pub fn complement_function(&self) -> ComplementFunction<D> {
        let f = self.f.clone();
        ComplementFunction::Callable { f, sup: self.sup }
    }

    pub fn eval_opt(&self) -> impl Fn(&Point<D>) -> Option<f64> + Sync + '_ {
        move |x: &Point<D>| Some((self.f)(x))
    }
}

/// Smooth compactly supported bump `exp(1 - 1/(1 - |x/r|^2))` on `|x| < r`.
fn bump<const D: usize>(x: &Point<D>, r: f64) -> f64 {
    let t = norm(x) / r;
    if t < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Build the battery for a domain. Members that depend on the shape (the
/// square-root collar example, the collar powers) adapt to its geometry.
pub fn standard_battery<const D: usize>(domain: &Domain<D>, seed: u64) -> Vec<BatteryMember<D>> {
    let mut out: Vec<BatteryMember<D>> = Vec::new();
    out.push(BatteryMember {
        name: "const_one",
        f: Arc::new(|_| 1.0),
        far_field: FarField::Const { value: 1.0, beyond: 1.0 },
        sup: Some(1.0),
        smooth: true,
        is_indicator: false,
    });
    // Coordinate function: continuous but unbounded (no far-field tag).
    out.push(BatteryMember {
        name: "coordinate",
        f: Arc::new(|x: &Point<D>| x[0]),
        far_field: FarField::Unknown,
        sup: None,
        smooth: true,
        is_indicator: false,
    });
    {
        let d = domain.clone();
        let beyond = domain
            .bounding_box()
            .corners()
            .iter()
            .map(norm)
            .fold(0.0, f64::max);
        out.push(BatteryMember {
            name: "indicator",
            f: Arc::new(move |x: &Point<D>| if d.member(x) { 1.0 } else { 0.0 }),
            far_field: FarField::Const { value: 0.0, beyond },
            sup: Some(1.0),
            smooth: false,
            is_indicator: true,
        });
    }
    // sqrt(|x| - 1) between the unit sphere and radius 2, zero elsewhere.
    // The canonical rough-but-integrable example; meaningful for the unit
    // ball where the collar hugs the boundary.
    out.push(BatteryMember {
        name: "sqrt_collar",
        f: Arc::new(|x: &Point<D>| {
            let r = norm(x);
            if r > 1.0 && r < 2.0 {
                (r - 1.0).sqrt()
            } else {
                0.0
            }
        }),
        far_field: FarField::Const { value: 0.0, beyond: 2.0 },
        sup: Some(1.0),
        smooth: false,
        is_indicator: false,
    });
    // Collar powers delta^alpha on the exterior collar of depth 1.
    for (name, alpha) in [
        ("collar_pow_025", 0.25f64),
        ("collar_pow_05", 0.5),
        ("collar_pow_1", 1.0),
    ] {
        let d = domain.clone();
        let beyond = domain
            .bounding_box()
            .corners()
            .iter()
            .map(norm)
            .fold(0.0, f64::max)
            + 1.0;
        out.push(BatteryMember {
            name,
            f: Arc::new(move |x: &Point<D>| {
                if !d.member(x) {
                    let bd = d.boundary_distance(x);
                    if bd < 1.0 {
                        return bd.powf(alpha);
                    }
                }
                0.0
            }),
            far_field: FarField::Const { value: 0.0, beyond },
            sup: Some(1.0),
            smooth: false,
            is_indicator: false,
        });
    }
    {
        let r = domain.bounding_box().diam().max(1.0);
        out.push(BatteryMember {
            name: "smooth_bump",
            f: Arc::new(move |x: &Point<D>| bump(x, r)),
            far_field: FarField::Const { value: 0.0, beyond: r },
            sup: Some(1.0),
            smooth: true,
            is_indicator: false,
        });
    }
    // Seeded random piecewise-constant data on an exterior grid, supported
    // in |x| <= 3.
    {
        let cells_per_axis = 24usize;
        let h = 6.0 / cells_per_axis as f64;
        let mut rng = stratum_rng(seed, 0xba77e17);
        let n: usize = cells_per_axis.pow(D as u32);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        out.push(BatteryMember {
            name: "random_piecewise",
            f: Arc::new(move |x: &Point<D>| {
                if norm(x) > 3.0 {
                    return 0.0;
                }
                let mut idx = 0usize;
                for j in 0..D {
                    let t = ((x[j] + 3.0) / h).floor();
                    if t < 0.0 || t >= cells_per_axis as f64 {
                        return 0.0;
                    }
                    idx = idx * cells_per_axis + t as usize;
                }
                values[idx]
            }),
            far_field: FarField::Const { value: 0.0, beyond: 3.0 },
            sup: Some(1.0),
            smooth: false,
            is_indicator: false,
        });
    }
    out
}

/// Look up a member by name.
pub fn member_by_name<const D: usize>(
    battery: &[BatteryMember<D>],
    name: &str,
) -> Option<BatteryMember<D>> {
    battery.iter().find(|m| m.name == name).cloned()
}
