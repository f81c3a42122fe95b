//! Reproducible sample points inside a metric's region.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::MetricSpec;

/// Point `index` of the sample with `seed`; independent of how many points are drawn.
pub fn sample_point(spec: &MetricSpec, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..spec.dim())
        .map(|i| {
            let r = spec.region(i);
            if r.hi > r.lo {
                rng.gen_range(r.lo..r.hi)
            } else {
                r.lo
            }
        })
        .collect()
}

pub fn sample_points(spec: &MetricSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count).map(|i| sample_point(spec, seed, i)).collect()
}
