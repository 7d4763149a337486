//! Dense complex linear algebra contract used by the rest of the crate:
//! eigenvalues of general complex square matrices, largest singular value,
//! linear solves and 2-norm condition numbers.
//!
//! The implementation is a thin layer over nalgebra's complex Schur, SVD
//! and LU decompositions. Everything here is pure and safe to call from
//! multiple threads.

use nalgebra::linalg::{Schur, SVD};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Iteration cap handed to the Schur/SVD solvers, scaled by dimension.
const MAX_ITER_PER_DIM: usize = 200;

/// Relative threshold below which a pivot is treated as zero in [`solve`].
const PIVOT_RTOL: f64 = 1e-13;

/// Relative threshold on sigma_min below which [`condition_2`] reports the
/// +infinity sentinel.
const CONDITION_SENTINEL_RTOL: f64 = 1e-300;

/// Dense complex matrix with all entries finite, stored row-major at the API
/// boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting NaN and infinities.
    pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        for (pos, e) in entries.iter().enumerate() {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::NonFinite {
                    row: pos / cols,
                    col: pos % cols,
                });
            }
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, entries),
        })
    }

    /// Builds a matrix from row-major real entries.
    pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let complex: Vec<Complex64> = entries.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::from_rows(rows, cols, &complex)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub(crate) fn from_inner(inner: DMatrix<Complex64>) -> Self {
        debug_assert!(inner.iter().all(|e| e.re.is_finite() && e.im.is_finite()));
        Self { inner }
    }

    #[allow(dead_code)] // exercised by the oracle tests
    pub(crate) fn inner(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    /// Sum of the diagonal entries.
    pub fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Right-multiplies by a real diagonal matrix: returns `self * diag(scales)`.
    ///
    /// This is how the structured perturbation enters everywhere in the
    /// crate, since `M * diag(d)` just scales column k of `M` by `d[k]`.
    pub fn scale_columns(&self, scales: &[f64]) -> Self {
        assert_eq!(
            scales.len(),
            self.cols(),
            "scale vector length must match column count"
        );
        let mut out = self.inner.clone();
        for (k, &s) in scales.iter().enumerate() {
            for r in 0..out.nrows() {
                out[(r, k)] *= s;
            }
        }
        Self { inner: out }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols(), rhs.rows(), "inner dimensions must agree");
        Self {
            inner: &self.inner * &rhs.inner,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            inner: self.inner.map(|e| e * factor),
        }
    }
}

/// Eigenvalues with eigenvector matrix, as produced by [`eigen_decomposition`].
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues with multiplicity, in the order of the Schur diagonal.
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns, each normalized to unit 2-norm.
    pub vectors: ComplexMatrix,
}

fn schur_of(m: &ComplexMatrix) -> Result<Schur<Complex64, nalgebra::Dyn>> {
    let n = m.rows();
    Schur::try_new(m.inner.clone(), f64::EPSILON, MAX_ITER_PER_DIM * n.max(4))
        .ok_or(Error::EigenNonConvergence { size: n })
}

/// Eigenvalues of a general complex square matrix, with multiplicity.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.rows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = schur_of(m)?.unpack();
    Ok((0..m.rows()).map(|i| t[(i, i)]).collect())
}

/// Full eigendecomposition: eigenvalues plus the right eigenvector matrix.
///
/// Eigenvectors are recovered from the triangular Schur factor by back
/// substitution. Near-defective matrices still yield finite vectors (tiny
/// denominators are floored at machine precision times the matrix scale);
/// the resulting eigenvector matrix is then badly conditioned, which is
/// exactly what callers estimating kappa(V) need to see.
pub fn eigen_decomposition(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let (q, t) = schur_of(m)?.unpack();
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let scale = t.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
    let floor = f64::EPSILON * scale.max(1.0);
    let mut w = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        w[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * w[(j, k)];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < floor {
                d = Complex64::new(floor, 0.0);
            }
            w[(i, k)] = -s / d;
        }
    }
    let mut v = &q * &w;
    for k in 0..n {
        let norm = v.column(k).norm();
        if norm > 0.0 {
            for r in 0..n {
                v[(r, k)] /= Complex64::new(norm, 0.0);
            }
        }
    }
    Ok(EigenDecomposition {
        values,
        vectors: ComplexMatrix::from_inner(v),
    })
}

fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = m.rows().min(m.cols());
    if n == 0 {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(
        m.inner.clone(),
        false,
        false,
        f64::EPSILON,
        MAX_ITER_PER_DIM * n.max(4),
    )
    .ok_or(Error::EigenNonConvergence { size: n })?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Largest singular value, `sigma_max(m) >= 0`.
pub fn max_singular_value(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.into_iter().fold(0.0f64, f64::max))
}

/// 2-norm condition number `sigma_max / sigma_min`.
///
/// Returns `f64::INFINITY` when `sigma_min` falls below `1e-300 * sigma_max`
/// (numerically rank deficient, including the zero matrix).
pub fn condition_2(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let sv = singular_values(m)?;
    let smax = sv.iter().copied().fold(0.0f64, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin <= CONDITION_SENTINEL_RTOL * smax || smax == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// Solves `a * x = b` by LU factorization with partial pivoting.
///
/// A numerically rank-deficient `a` is reported as [`Error::Singular`] with
/// a condition estimate rather than returning garbage.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "lhs is {}x{} but rhs has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    let lu = a.inner.clone().lu();
    let u = lu.u();
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..a.rows() {
        let d = u[(i, i)].norm();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    if dmin <= PIVOT_RTOL * dmax {
        let condition = condition_2(a).unwrap_or(f64::INFINITY);
        return Err(Error::Singular { condition });
    }
    let x = lu.solve(&b.inner).ok_or(Error::Singular {
        condition: f64::INFINITY,
    })?;
    Ok(ComplexMatrix::from_inner(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{multiset_distance, random_complex, TestRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Characteristic polynomial coefficients by the Faddeev-LeVerrier
    /// recurrence: p(x) = x^n + c[1] x^(n-1) + ... + c[n].
    fn char_poly(m: &ComplexMatrix) -> Vec<Complex64> {
        let n = m.rows();
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        let mut aux = ComplexMatrix::zeros(n, n);
        for k in 1..=n {
            // aux = m * (aux + c_{k-1} I)
            let mut shifted = aux.inner().clone();
            for i in 0..n {
                shifted[(i, i)] += coeffs[k - 1];
            }
            let prod = m.inner() * &shifted;
            let ck = -prod.trace() / Complex64::new(k as f64, 0.0);
            coeffs.push(ck);
            aux = ComplexMatrix::from_inner(prod);
        }
        coeffs
    }

    /// Durand-Kerner root finder for a monic polynomial.
    fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
        let deg = coeffs.len() - 1;
        if deg == 0 {
            return Vec::new();
        }
        let eval = |x: Complex64| {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in coeffs {
                acc = acc * x + c;
            }
            acc
        };
        let radius = 1.0 + coeffs[1..].iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let seed = Complex64::new(0.4, 0.9);
        let mut roots: Vec<Complex64> =
            (0..deg).map(|k| seed.powu(k as u32 + 1) * radius).collect();
        for _ in 0..500 {
            let mut delta = 0.0f64;
            for i in 0..deg {
                let mut denom = Complex64::new(1.0, 0.0);
                for j in 0..deg {
                    if i != j {
                        denom *= roots[i] - roots[j];
                    }
                }
                let step = eval(roots[i]) / denom;
                roots[i] -= step;
                delta = delta.max(step.norm());
            }
            if delta < 1e-14 * radius {
                break;
            }
        }
        roots
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = ComplexMatrix::from_rows(1, 2, &[c(1.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        match err {
            Error::NonFinite { row: 0, col: 1 } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = ComplexMatrix::from_real_rows(2, 2, &[2.0, 0.0, 0.0, -3.0]).unwrap();
        let mut eigs = eigenvalues(&m).unwrap();
        eigs.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((eigs[0] - c(-3.0, 0.0)).norm() < 1e-12);
        assert!((eigs[1] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_rotation_generator() {
        let m = ComplexMatrix::from_real_rows(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        let eigs = eigenvalues(&m).unwrap();
        let want = [c(0.0, 1.0), c(0.0, -1.0)];
        assert!(multiset_distance(&eigs, &want) < 1e-12);
    }

    #[test]
    fn eigenvalues_non_square_rejected() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            eigenvalues(&m),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn eigenvalues_match_characteristic_roots() {
        // Independent oracle: Faddeev-LeVerrier coefficients, Durand-Kerner roots.
        for seed in 0..20u64 {
            let mut rng = TestRng::new(seed);
            let m = random_complex(&mut rng, 4, 4);
            let eigs = eigenvalues(&m).unwrap();
            let roots = poly_roots(&char_poly(&m));
            let scale = 1.0 + m.frobenius_norm();
            assert!(
                multiset_distance(&eigs, &roots) <= 1e-8 * scale,
                "seed {seed}: eigenvalue multiset mismatch"
            );
        }
    }

    #[test]
    fn eigen_decomposition_residual_is_small() {
        for seed in 0..10u64 {
            let mut rng = TestRng::new(100 + seed);
            let m = random_complex(&mut rng, 5, 5);
            let ed = eigen_decomposition(&m).unwrap();
            let v = ed.vectors.inner();
            let av = m.inner() * v;
            let mut vl = v.clone();
            for k in 0..5 {
                for r in 0..5 {
                    vl[(r, k)] *= ed.values[k];
                }
            }
            let resid = (&av - &vl).norm();
            assert!(
                resid <= 1e-9 * (1.0 + m.frobenius_norm()),
                "seed {seed}: residual {resid:.3e}"
            );
        }
    }

    #[test]
    fn sigma_max_of_zero_and_diagonal() {
        assert_eq!(
            max_singular_value(&ComplexMatrix::zeros(3, 3)).unwrap(),
            0.0
        );
        let m = ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, -5.0]).unwrap();
        assert!((max_singular_value(&m).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_max_matches_gram_eigenvalue() {
        // For a 3x2 matrix, sigma_max^2 is the largest eigenvalue of the 2x2
        // Hermitian Gram matrix M^H M, available in closed form.
        for seed in 0..20u64 {
            let mut rng = TestRng::new(200 + seed);
            let m = random_complex(&mut rng, 3, 2);
            let mi = m.inner();
            let g = mi.adjoint() * mi;
            let (a, d) = (g[(0, 0)].re, g[(1, 1)].re);
            let b = g[(0, 1)];
            let mean = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            let want = (mean + disc).sqrt();
            let got = max_singular_value(&m).unwrap();
            assert!(
                (got - want).abs() <= 1e-10 * (1.0 + want),
                "seed {seed}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn solve_identity_and_scaling() {
        let b =
            ComplexMatrix::from_rows(2, 2, &[c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.0), c(0.5, 0.5)])
                .unwrap();
        let x = solve(&ComplexMatrix::identity(2), &b).unwrap();
        assert_eq!(x, b);

        let two_i = ComplexMatrix::identity(2).scale(c(2.0, 0.0));
        let x = solve(&two_i, &ComplexMatrix::identity(2)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { c(0.5, 0.0) } else { c(0.0, 0.0) };
                assert!((x.entry(i, j) - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn solve_residual_backward_stable() {
        for seed in 0..20u64 {
            let mut rng = TestRng::new(300 + seed);
            let a = random_complex(&mut rng, 4, 4);
            let b = random_complex(&mut rng, 4, 2);
            let x = solve(&a, &b).unwrap();
            let resid = (a.inner() * x.inner() - b.inner()).norm();
            let bound = 1e-10 * a.frobenius_norm() * x.frobenius_norm();
            assert!(
                resid <= bound.max(1e-14),
                "seed {seed}: residual {resid:.3e}"
            );
        }
    }

    #[test]
    fn solve_singular_reports_condition() {
        let a = ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = ComplexMatrix::identity(2);
        match solve(&a, &b) {
            Err(Error::Singular { condition }) => assert!(condition.is_infinite()),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn condition_of_identity_diagonal_and_singular() {
        assert!((condition_2(&ComplexMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        let m = ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, 1e-3]).unwrap();
        assert!((condition_2(&m).unwrap() - 1e3).abs() < 1e-9 * 1e3);
        let s = ComplexMatrix::from_real_rows(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(condition_2(&s).unwrap().is_infinite());
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        for n in 1..=8usize {
            for seed in 0..5u64 {
                let mut rng = TestRng::new(seed * 31 + n as u64);
                let m = random_complex(&mut rng, n, n);
                let sum: Complex64 = eigenvalues(&m).unwrap().into_iter().sum();
                let err = (sum - m.trace()).norm();
                assert!(
                    err <= 1e-8 * (1.0 + m.frobenius_norm()),
                    "n={n} seed={seed}: trace error {err:.3e}"
                );
            }
        }
    }

    #[test]
    fn sigma_scales_with_complex_scalar() {
        for seed in 0..20u64 {
            let mut rng = TestRng::new(400 + seed);
            let m = random_complex(&mut rng, 3, 3);
            let factor = rng.complex() * 3.0;
            let base = max_singular_value(&m).unwrap();
            let scaled = max_singular_value(&m.scale(factor)).unwrap();
            let want = factor.norm() * base;
            assert!(
                (scaled - want).abs() <= 1e-12 * (1.0 + want),
                "seed {seed}: {scaled} vs {want}"
            );
        }
    }
}
