//! Deterministic sampling utilities: low-discrepancy sequences, seeded
//! per-stratum generators, and order-fixed summation.
//!
//! All randomness in the crate flows through these helpers so that a run is
//! reproducible from `(config, seed)` alone, independent of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{AxisBox, Point};

/// R2 additive low-discrepancy sequence in `[0,1)^D` (generalized golden
/// ratio). Deterministic, no state beyond the index.
pub struct R2Sequence<const D: usize> {
    alpha: [f64; D],
    state: [f64; D],
}

impl<const D: usize> R2Sequence<D> {
    pub fn new() -> Self {
        // Root of x^(D+1) = x + 1.
        let mut phi = 1.5f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (D as f64 + 1.0));
        }
        let mut alpha = [0.0; D];
        let mut a = 1.0;
        for j in 0..D {
            a /= phi;
            alpha[j] = a;
        }
        Self { alpha, state: [0.5; D] }
    }
}

impl<const D: usize> Default for R2Sequence<D> {
    fn default() -> Self {
        Self::new()
    }
}

impl<const D: usize> Iterator for R2Sequence<D> {
    type Item = [f64; D];

    fn next(&mut self) -> Option<[f64; D]> {
        for j in 0..D {
            self.state[j] = (self.state[j] + self.alpha[j]).fract();
        }
        Some(self.state)
    }
}

/// First `n` R2 points mapped into the box.
pub fn r2_points_in_box<const D: usize>(b: &AxisBox<D>, n: usize) -> Vec<Point<D>> {
    R2Sequence::<D>::new()
        .take(n)
        .map(|u| {
            let mut p = [0.0; D];
            for j in 0..D {
                p[j] = b.lo[j] + u[j] * b.side(j);
            }
            p
        })
        .collect()
}

/// First `n` R2 points mapped into the closed ball `B(c, r)` by rejection
/// from the bounding box (deterministic).
pub fn r2_points_in_ball<const D: usize>(c: &Point<D>, r: f64, n: usize) -> Vec<Point<D>> {
    let mut seq = R2Sequence::<D>::new();
    let mut out = Vec::with_capacity(n);
    let mut guard = 0usize;
    while out.len() < n && guard < 64 * n + 1024 {
        guard += 1;
        let u = seq.next().unwrap();
        let mut p = [0.0; D];
        let mut s = 0.0;
        for j in 0..D {
            let t = 2.0 * u[j] - 1.0;
            p[j] = c[j] + r * t;
            s += t * t;
        }
        if s <= 1.0 {
            out.push(p);
        }
    }
    out
}

/// Stable stream id for a stratum, mixed into the run seed.
pub fn stratum_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    // SplitMix64-style mix keeps streams decorrelated for adjacent ids.
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Uniform point in a box from an explicit generator.
pub fn uniform_in_box<const D: usize>(rng: &mut impl Rng, b: &AxisBox<D>) -> Point<D> {
    let mut p = [0.0; D];
    for j in 0..D {
        p[j] = b.lo[j] + rng.gen::<f64>() * b.side(j);
    }
    p
}

/// Uniform point in the spherical shell `a <= |h| < b` around the origin.
pub fn uniform_in_shell<const D: usize>(rng: &mut impl Rng, a: f64, b: f64) -> Point<D> {
    debug_assert!(0.0 <= a && a < b);
    match D {
        1 => {
            // Two symmetric intervals.
            let r = (a.powi(1) + rng.gen::<f64>() * (b - a)).min(b);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let mut p = [0.0; D];
            p[0] = sign * r;
            p
        }
        2 => {
            // Radius from the linear density on [a, b], angle uniform.
            let u: f64 = rng.gen();
            let r = (a * a + u * (b * b - a * a)).sqrt();
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            let mut p = [0.0; D];
            p[0] = r * th.cos();
            p[1] = r * th.sin();
            p
        }
        _ => unreachable!("only D = 1, 2 supported"),
    }
}

/// Volume of the shell `a <= |h| < b`.
pub fn shell_volume<const D: usize>(a: f64, b: f64) -> f64 {
    match D {
        1 => 2.0 * (b - a),
        2 => std::f64::consts::PI * (b * b - a * a),
        _ => unreachable!(),
    }
}

/// Order-fixed pairwise summation; the result does not depend on how the
/// slice was produced in parallel.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r2_is_deterministic_and_in_unit_box() {
        let a: Vec<[f64; 2]> = R2Sequence::<2>::new().take(100).collect();
        let b: Vec<[f64; 2]> = R2Sequence::<2>::new().take(100).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.iter().all(|&x| (0.0..1.0).contains(&x))));
    }

    #[test]
    fn r2_covers_the_box() {
        let b = AxisBox::new([0.0, 0.0], [1.0, 1.0]);
        let pts = r2_points_in_box(&b, 4096);
        // Every quadrant gets roughly a quarter of the points.
        let q = pts
            .iter()
            .filter(|p| p[0] < 0.5 && p[1] < 0.5)
            .count() as f64;
        assert!((q / 4096.0 - 0.25).abs() < 0.02);
    }

    #[test]
    fn shell_sampler_matches_volume() {
        let mut rng = stratum_rng(7, 0);
        let (a, b) = (0.5, 1.0);
        let n = 200_000;
        let mut inside_halfband = 0usize;
        for _ in 0..n {
            let h = uniform_in_shell::<2>(&mut rng, a, b);
            let r = (h[0] * h[0] + h[1] * h[1]).sqrt();
            assert!((a..=b).contains(&r));
            if r < 0.75 {
                inside_halfband += 1;
            }
        }
        // P(r < 0.75) = (0.75^2 - 0.5^2) / (1 - 0.5^2) = 0.3125 / 0.75
        let p = inside_halfband as f64 / n as f64;
        assert!((p - 0.3125 / 0.75).abs() < 0.01, "p = {p}");
    }

    #[test]
    fn stratum_rng_streams_differ_but_reproduce() {
        let mut a = stratum_rng(42, 1);
        let mut b = stratum_rng(42, 2);
        let mut a2 = stratum_rng(42, 1);
        let xa: f64 = a.gen();
        let xb: f64 = b.gen();
        let xa2: f64 = a2.gen();
        assert_eq!(xa, xa2);
        assert_ne!(xa, xb);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-9);
    }
}
