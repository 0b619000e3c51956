//! Synthetic inputs for the kernel benchmarks: seeded random export baskets
//! at roughly real-world dimensions.

use ndarray::Array2;
use prodspace::MMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random basket matrix with close to `fill` of its cells set. Codes are
/// zero-padded so product order matches the rest of the pipeline.
pub fn synthetic_m(countries: usize, products: usize, fill: f64, seed: u64) -> MMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = Array2::from_shape_fn((countries, products), |_| rng.gen::<f64>() < fill);
    MMatrix {
        year: 2005,
        countries: (0..countries).map(|c| format!("C{c:03}")).collect(),
        products: (0..products).map(|p| format!("{p:06}")).collect(),
        threshold: 1.0,
        bits,
    }
}
