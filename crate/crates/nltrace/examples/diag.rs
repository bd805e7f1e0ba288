use std::sync::Arc;
use nltrace::domain::Domain;
use nltrace::geom::AxisBox;
use nltrace::reflect::{thickness_audit, AuditSide, ThicknessParams};
use nltrace::whitney::GeometryBundle;

fn main() {
    let d = Arc::new(Domain::<2>::annuli_balls(6).unwrap());
    let geo = GeometryBundle::build(d.clone(), &AxisBox::new([-1.0, -1.0], [1.0, 1.0]), 10).unwrap();
    let params = ThicknessParams::unit();
    let (_, int) = thickness_audit(&geo.w_omega, &geo.w_complement, AuditSide::Interior, &params);
    println!("interior: {} reflected, {} failures", int.reflected, int.failures.len());
    for f in int.failures.iter().take(20) {
        println!("  {} best {:.6e} required {:.6e} ratio {:.3}", f.source_id, f.best_depth, f.required_depth, f.best_depth / f.required_depth);
    }
}
