//! Deterministic helpers shared by the unit tests.

use num_complex::Complex64;

use crate::numerics::ComplexMatrix;
use crate::plant::StateSpaceModel;

/// Splitmix64: tiny, seedable, reproducible across platforms.
pub(crate) struct TestRng(u64);

impl TestRng {
    pub(crate) fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub(crate) fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub(crate) fn complex(&mut self) -> Complex64 {
        Complex64::new(self.unit(), self.unit())
    }
}

pub(crate) fn random_complex(rng: &mut TestRng, rows: usize, cols: usize) -> ComplexMatrix {
    let entries: Vec<Complex64> = (0..rows * cols).map(|_| rng.complex()).collect();
    ComplexMatrix::from_rows(rows, cols, &entries).unwrap()
}

/// Greedy multiset match: largest pairing distance between the two sets.
pub(crate) fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}

/// Random stable state-space model with `states` states and `n` uncertainty
/// channels: A gets a -1.5 diagonal shift so poles sit safely in the left
/// half plane for the frequency ranges the tests sweep.
pub(crate) fn random_stable_model(rng: &mut TestRng, states: usize, n: usize) -> StateSpaceModel {
    let mut a = vec![0.0; states * states];
    for (idx, slot) in a.iter_mut().enumerate() {
        let (r, c) = (idx / states, idx % states);
        *slot = rng.unit() - if r == c { 1.5 } else { 0.0 };
    }
    let b: Vec<f64> = (0..states * n).map(|_| rng.unit()).collect();
    let c: Vec<f64> = (0..n * states).map(|_| rng.unit()).collect();
    StateSpaceModel::new(states, n, &a, &b, &c, None).unwrap()
}

/// The worked 4-state, 2-channel example model used across the test suites.
pub(crate) fn example_model() -> StateSpaceModel {
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
