//! Tensor Gauss-Legendre quadrature over axis boxes.

use crate::geom::{AxisBox, Point};

/// Nodes and weights for 8-point Gauss-Legendre on [-1, 1].
const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_361_98,
    0.362_683_783_378_361_98,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// 16-point rule, used where an integrand is less tame per cell.
const GL16_NODES: [f64; 16] = [
    -0.989_400_934_991_649_9,
    -0.944_575_023_073_232_6,
    -0.865_631_202_387_831_7,
    -0.755_404_408_355_003_0,
    -0.617_876_244_402_643_7,
    -0.458_016_777_657_227_4,
    -0.281_603_550_779_258_9,
    -0.095_012_509_837_637_44,
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003_0,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_WEIGHTS: [f64; 16] = [
    0.027_152_459_411_754_095,
    0.062_253_523_938_647_89,
    0.095_158_511_682_492_78,
    0.124_628_971_255_533_87,
    0.149_595_988_816_576_73,
    0.169_156_519_395_002_54,
    0.182_603_415_044_923_6,
    0.189_450_610_455_068_5,
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_54,
    0.149_595_988_816_576_73,
    0.124_628_971_255_533_87,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

pub fn gauss_rule(order: usize) -> (&'static [f64], &'static [f64]) {
    match order {
        8 => (&GL8_NODES, &GL8_WEIGHTS),
        16 => (&GL16_NODES, &GL16_WEIGHTS),
        _ => panic!("unsupported Gauss-Legendre order {order}"),
    }
}

/// Integrate `f` over `cell` with a tensor Gauss-Legendre rule.
pub fn integrate_box<const D: usize>(
    cell: &AxisBox<D>,
    order: usize,
    mut f: impl FnMut(&Point<D>) -> f64,
) -> f64 {
    let (nodes, weights) = gauss_rule(order);
    let n = nodes.len();
    let c = cell.center();
    let mut half = [0.0; D];
    for j in 0..D {
        half[j] = 0.5 * cell.side(j);
    }
    let jac = cell.measure() / (2.0f64).powi(D as i32);
    let mut total = 0.0;
    let mut idx = [0usize; D];
    loop {
        let mut x = [0.0; D];
        let mut w = 1.0;
        for j in 0..D {
            x[j] = c[j] + half[j] * nodes[idx[j]];
            w *= weights[idx[j]];
        }
        total += w * f(&x);
        // Odometer over the tensor grid.
        let mut j = 0;
        loop {
            if j == D {
                return total * jac;
            }
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Mean of `f` over `cell` (integral divided by measure).
pub fn mean_box<const D: usize>(
    cell: &AxisBox<D>,
    order: usize,
    f: impl FnMut(&Point<D>) -> f64,
) -> f64 {
    integrate_box(cell, order, f) / cell.measure()
}
