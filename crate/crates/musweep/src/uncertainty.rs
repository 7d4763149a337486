//! Geometry of the real diagonal uncertainty set: the unit box, sub-boxes,
//! diameters, vertex enumeration and longest-edge bisection.

use crate::error::{Error, Result};

/// Largest dimension for which [`vertices`] enumerates all 2^n corners.
pub const VERTEX_ENUM_LIMIT: usize = 10;

/// Edges narrower than this are never bisected; the engine retires such
/// boxes instead of looping on them.
pub const MIN_EDGE_WIDTH: f64 = 1e-12;

/// Axis-aligned box of real diagonal uncertainty parameters,
/// `[lo_k, hi_k]` per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl UncertaintyBox {
    /// Validates `lo_k <= hi_k`, finiteness and `n >= 1`.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidInput(format!(
                "box bounds must be non-empty and of equal length, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for k in 0..lo.len() {
            if !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite bound for parameter {k}"
                )));
            }
            if lo[k] > hi[k] {
                return Err(Error::InvalidInput(format!(
                    "lo[{k}] = {} exceeds hi[{k}] = {}",
                    lo[k], hi[k]
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The unit box `[-1, 1]^n`, the full uncertainty ball for real diagonal
    /// perturbations with `sigma_max(Delta) <= 1`.
    pub fn unit(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "uncertainty dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            lo: vec![-1.0; n],
            hi: vec![1.0; n],
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| 0.5 * (self.lo[k] + self.hi[k]))
            .collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| 0.5 * (self.hi[k] - self.lo[k]))
            .collect()
    }

    /// Euclidean length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|k| (self.hi[k] - self.lo[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_edge_width(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.hi[k] - self.lo[k])
            .fold(0.0, f64::max)
    }

    /// Largest magnitude any single parameter can take within the box.
    pub fn max_abs_coordinate(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.lo[k].abs().max(self.hi[k].abs()))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && (0..self.dim()).all(|k| self.lo[k] <= point[k] && point[k] <= self.hi[k])
    }

    /// Splits at the midpoint of the longest edge, ties broken by the lowest
    /// parameter index so runs are reproducible. Every other edge is kept.
    pub fn bisect_longest_edge(&self) -> Result<(Self, Self)> {
        let mut axis = usize::MAX;
        let mut widest = 0.0f64;
        for k in 0..self.dim() {
            let w = self.hi[k] - self.lo[k];
            if w > widest {
                widest = w;
                axis = k;
            }
        }
        if axis == usize::MAX {
            return Err(Error::DegenerateBox);
        }
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[axis] = mid;
        right.lo[axis] = mid;
        Ok((left, right))
    }

    /// All 2^n corner points in lexicographic bit order (first parameter is
    /// the most significant bit; bit 0 selects `lo`, bit 1 selects `hi`).
    ///
    /// Degenerate edges repeat their single coordinate, so the count is
    /// always exactly 2^n. Dimensions above [`VERTEX_ENUM_LIMIT`] are
    /// rejected; callers fall back to sampled corners.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        if n > VERTEX_ENUM_LIMIT {
            return Err(Error::VertexCapacity {
                n,
                limit: VERTEX_ENUM_LIMIT,
            });
        }
        let count = 1usize << n;
        let mut out = Vec::with_capacity(count);
        for bits in 0..count {
            let corner: Vec<f64> = (0..n)
                .map(|k| {
                    if bits >> (n - 1 - k) & 1 == 1 {
                        self.hi[k]
                    } else {
                        self.lo[k]
                    }
                })
                .collect();
            out.push(corner);
        }
        Ok(out)
    }

    /// Endpoint pairs of every edge of the box: for each axis, the segment
    /// varies along that axis while the remaining coordinates sit at one of
    /// the 2^(n-1) corner combinations. Only emitted for enumerable
    /// dimensions and non-degenerate axes.
    pub fn edges(&self) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let n = self.dim();
        if n > VERTEX_ENUM_LIMIT {
            return Err(Error::VertexCapacity {
                n,
                limit: VERTEX_ENUM_LIMIT,
            });
        }
        let mut out = Vec::new();
        for axis in 0..n {
            if self.hi[axis] - self.lo[axis] <= 0.0 {
                continue;
            }
            let combos = 1usize << (n - 1);
            for bits in 0..combos {
                let mut start = Vec::with_capacity(n);
                let mut shift = 0usize;
                for k in 0..n {
                    if k == axis {
                        start.push(self.lo[axis]);
                    } else {
                        let pick_hi = bits >> (n - 2 - shift) & 1 == 1;
                        start.push(if pick_hi { self.hi[k] } else { self.lo[k] });
                        shift += 1;
                    }
                }
                let mut end = start.clone();
                end[axis] = self.hi[axis];
                out.push((start, end));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_box_shapes() {
        let b = UncertaintyBox::unit(2).unwrap();
        assert_eq!(b.lo(), &[-1.0, -1.0]);
        assert_eq!(b.hi(), &[1.0, 1.0]);
        assert_eq!(UncertaintyBox::unit(1).unwrap().dim(), 1);
        assert_eq!(UncertaintyBox::unit(3).unwrap().dim(), 3);
        assert!(UncertaintyBox::unit(0).is_err());
    }

    #[test]
    fn diameter_examples() {
        let b = UncertaintyBox::unit(2).unwrap();
        assert!((b.diameter() - 2.0 * 2.0f64.sqrt()).abs() < 1e-15);
        let p = UncertaintyBox::new(vec![0.3, 0.7], vec![0.3, 0.7]).unwrap();
        assert_eq!(p.diameter(), 0.0);
        let r = UncertaintyBox::new(vec![0.0, 0.0], vec![1.0, 3.0]).unwrap();
        assert!((r.diameter() - 10.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bisect_examples() {
        let (a, b) = UncertaintyBox::unit(2)
            .unwrap()
            .bisect_longest_edge()
            .unwrap();
        assert_eq!(a.lo(), &[-1.0, -1.0]);
        assert_eq!(a.hi(), &[0.0, 1.0]);
        assert_eq!(b.lo(), &[0.0, -1.0]);
        assert_eq!(b.hi(), &[1.0, 1.0]);

        let long = UncertaintyBox::new(vec![0.0, 0.0], vec![4.0, 1.0]).unwrap();
        let (a, b) = long.bisect_longest_edge().unwrap();
        assert_eq!(a.hi(), &[2.0, 1.0]);
        assert_eq!(b.lo(), &[2.0, 0.0]);

        let tied = UncertaintyBox::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 2.0]).unwrap();
        let (a, b) = tied.bisect_longest_edge().unwrap();
        assert_eq!(a.hi(), &[1.0, 1.0, 2.0]);
        assert_eq!(b.lo(), &[0.0, 1.0, 0.0]);

        let point = UncertaintyBox::new(vec![0.5], vec![0.5]).unwrap();
        assert!(matches!(
            point.bisect_longest_edge(),
            Err(Error::DegenerateBox)
        ));
    }

    #[test]
    fn vertices_examples() {
        let one = UncertaintyBox::unit(1).unwrap();
        assert_eq!(one.vertices().unwrap(), vec![vec![-1.0], vec![1.0]]);

        let two = UncertaintyBox::unit(2).unwrap();
        assert_eq!(
            two.vertices().unwrap(),
            vec![
                vec![-1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, -1.0],
                vec![1.0, 1.0]
            ]
        );

        let point = UncertaintyBox::new(vec![0.3, 0.7], vec![0.3, 0.7]).unwrap();
        let verts = point.vertices().unwrap();
        assert_eq!(verts.len(), 4);
        assert!(verts.iter().all(|v| v == &vec![0.3, 0.7]));

        let big = UncertaintyBox::unit(11).unwrap();
        assert!(matches!(big.vertices(), Err(Error::VertexCapacity { .. })));
    }

    #[test]
    fn edges_cover_the_square() {
        let b = UncertaintyBox::unit(2).unwrap();
        let edges = b.edges().unwrap();
        assert_eq!(edges.len(), 4);
        for (s, e) in &edges {
            assert!(b.contains(s) && b.contains(e));
            // exactly one coordinate differs
            let diff = s.iter().zip(e).filter(|(a, b)| a != b).count();
            assert_eq!(diff, 1);
        }
    }

    fn arb_box(max_n: usize) -> impl Strategy<Value = UncertaintyBox> {
        (1..=max_n)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(-1.0f64..1.0, n),
                    proptest::collection::vec(0.0f64..1.0, n),
                )
            })
            .prop_map(|(lo, w)| {
                let hi: Vec<f64> = lo
                    .iter()
                    .zip(&w)
                    .map(|(l, width)| (l + width).min(1.0))
                    .collect();
                UncertaintyBox::new(lo, hi).unwrap()
            })
    }

    proptest! {
        #[test]
        fn children_partition_the_parent(b in arb_box(4)) {
            prop_assume!(b.max_edge_width() > 0.0);
            let (l, r) = b.bisect_longest_edge().unwrap();
            prop_assert!(l.diameter() < b.diameter());
            prop_assert!(r.diameter() < b.diameter());
            for v in l.vertices().unwrap().iter().chain(r.vertices().unwrap().iter()) {
                prop_assert!(b.contains(v));
            }
            // the split plane is shared
            let axis = (0..b.dim()).find(|&k| l.hi()[k] != b.hi()[k]).unwrap();
            prop_assert_eq!(l.hi()[axis], r.lo()[axis]);
        }

        #[test]
        fn vertices_inside_and_complete(b in arb_box(4)) {
            let verts = b.vertices().unwrap();
            prop_assert_eq!(verts.len(), 1usize << b.dim());
            for v in &verts {
                prop_assert!(b.contains(v));
            }
        }

        #[test]
        fn repeated_bisection_contracts_diameter(b in arb_box(4)) {
            prop_assume!(b.max_edge_width() > 1e-6);
            let n = b.dim();
            let mut cur = b;
            let mut last = cur.diameter();
            for _round in 0..3 {
                for _ in 0..n {
                    let (l, _) = cur.bisect_longest_edge().unwrap();
                    cur = l;
                }
                let d = cur.diameter();
                // max edge halves every n splits, so the diagonal does too
                prop_assert!(d <= 0.5 * last * (1.0 + 1e-12));
                last = d;
            }
        }
    }
}
