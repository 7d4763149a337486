#![allow(dead_code)]

//! Shared helpers for the integration test suites.

use musweep::plant::StateSpaceModel;

/// Splitmix64, matching the generator the unit tests use.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

/// Random stable model: A gets a -1.5 diagonal shift so poles stay left of
/// the imaginary axis for the ranges the tests sweep.
pub fn random_stable_model(rng: &mut TestRng, states: usize, n: usize) -> StateSpaceModel {
    let mut a = vec![0.0; states * states];
    for (idx, slot) in a.iter_mut().enumerate() {
        let (r, c) = (idx / states, idx % states);
        *slot = rng.unit() - if r == c { 1.5 } else { 0.0 };
    }
    let b: Vec<f64> = (0..states * n).map(|_| rng.unit()).collect();
    let c: Vec<f64> = (0..n * states).map(|_| rng.unit()).collect();
    StateSpaceModel::new(states, n, &a, &b, &c, None).unwrap()
}

/// The worked 4-state, 2-channel model from the test fixtures.
pub fn example_model() -> StateSpaceModel {
    StateSpaceModel::new(
        4,
        2,
        &[
            -1.0, -10.0, -1.0, 10.0, //
            -0.5, -1.0, 1.0, 0.5, //
            0.5, -4.0, -1.0, -10.0, //
            -10.0, 0.5, 0.0, -2.5,
        ],
        &[
            1.0, 0.0, //
            0.0, 0.0, //
            0.0, 0.0, //
            0.0, 1.0,
        ],
        &[
            -0.5, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -1.5,
        ],
        None,
    )
    .unwrap()
}
