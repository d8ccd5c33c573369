//! Seeded instance generators shared by the integration tests.
#![allow(dead_code)]

use covlp::binpack::BinPackInstance;
use covlp::reference::ExplicitLp;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Quarter-integers in `(0, 3]`: exact in binary, so the float solver and
/// the rational reference see the same numbers.
fn quarter(rng: &mut TestRng) -> f64 {
    rng.gen_range(1..=12) as f64 / 4.0
}

/// Covering LP with `m <= 4` rows, `N <= 8` columns and entries in `(0, 3]`.
pub fn explicit_lp(rng: &mut TestRng) -> ExplicitLp {
    let m = rng.gen_range(1..=4);
    let n = rng.gen_range(1..=8);
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| quarter(rng)).collect()).collect();
    let b: Vec<f64> = (0..m).map(|_| quarter(rng)).collect();
    let c: Vec<f64> = (0..n).map(|_| quarter(rng)).collect();
    ExplicitLp::from_f64(&a, &b, &c).unwrap()
}

/// Up to `max_types` distinct sizes on the grid `k / 20`, each occurring
/// at most `max_mult` times.
pub fn binpack_instance(rng: &mut TestRng, max_types: usize, max_mult: u32) -> BinPackInstance {
    let m = rng.gen_range(1..=max_types);
    let mut grid: Vec<u32> = (1..=20).collect();
    grid.shuffle(rng);
    let sizes = grid[..m].iter().map(|&k| k as f64 / 20.0).collect();
    let mult = (0..m).map(|_| rng.gen_range(1..=max_mult)).collect();
    BinPackInstance::new(sizes, mult).unwrap()
}

/// Like [`binpack_instance`] but with sizes uniform in `(0, 1]`.
pub fn binpack_instance_uniform(rng: &mut TestRng, max_types: usize, max_mult: u32) -> BinPackInstance {
    let m = rng.gen_range(1..=max_types);
    let sizes = (0..m).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let mult = (0..m).map(|_| rng.gen_range(1..=max_mult)).collect();
    BinPackInstance::new(sizes, mult).unwrap()
}
