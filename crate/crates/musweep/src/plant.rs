//! The generalized plant and its frequency response
//! `M(omega) = C (j*omega*I - A)^{-1} B + D`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix};

/// Real state-space model `M(s) = C (sI - A)^{-1} B + D`.
///
/// The number of outputs equals the number of inputs (`n`, the uncertainty
/// dimension), so `M * Delta` is square.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    states: usize,
    n: usize,
}

impl StateSpaceModel {
    /// Validates dimensions and finiteness. `d` defaults to the zero matrix.
    ///
    /// `a` is `states x states`, `b` is `states x n`, `c` is `n x states`
    /// and `d` is `n x n`, all row-major.
    pub fn new(
        states: usize,
        n: usize,
        a: &[f64],
        b: &[f64],
        c: &[f64],
        d: Option<&[f64]>,
    ) -> Result<Self> {
        if states == 0 {
            return Err(Error::InvalidInput("state dimension must be >= 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidInput(
                "uncertainty dimension must be >= 1".into(),
            ));
        }
        let check = |name: &str, data: &[f64], rows: usize, cols: usize| -> Result<()> {
            if data.len() != rows * cols {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be {rows}x{cols} ({} entries), got {}",
                    rows * cols,
                    data.len()
                )));
            }
            for (pos, v) in data.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite entry in {name} at ({}, {})",
                        pos / cols,
                        pos % cols
                    )));
                }
            }
            Ok(())
        };
        check("A", a, states, states)?;
        check("B", b, states, n)?;
        check("C", c, n, states)?;
        let d_vec = match d {
            Some(data) => {
                check("D", data, n, n)?;
                data.to_vec()
            }
            None => vec![0.0; n * n],
        };
        Ok(Self {
            a: a.to_vec(),
            b: b.to_vec(),
            c: c.to_vec(),
            d: d_vec,
            states,
            n,
        })
    }

    /// Number of states.
    pub fn states(&self) -> usize {
        self.states
    }

    /// Number of uncertainty channels (inputs = outputs).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Evaluates `M(omega) = C (j*omega*I - A)^{-1} B + D`.
    ///
    /// The resolvent is applied through one LU factorization of
    /// `j*omega*I - A` solving for all columns of `B` at once; the matrix is
    /// never inverted explicitly. A frequency that numerically hits a pole
    /// of the plant is reported as [`Error::FrequencyAtPole`].
    pub fn freq_response(&self, omega: f64) -> Result<ComplexMatrix> {
        if !omega.is_finite() {
            return Err(Error::InvalidInput(format!(
                "frequency must be finite, got {omega}"
            )));
        }
        let nx = self.states;
        let mut resolvent = Vec::with_capacity(nx * nx);
        for r in 0..nx {
            for col in 0..nx {
                let diag = if r == col { omega } else { 0.0 };
                resolvent.push(Complex64::new(-self.a[r * nx + col], diag));
            }
        }
        let lhs = ComplexMatrix::from_rows(nx, nx, &resolvent)?;
        let rhs = ComplexMatrix::from_real_rows(nx, self.n, &self.b)?;
        let x = numerics::solve(&lhs, &rhs).map_err(|e| match e {
            Error::Singular { .. } => Error::FrequencyAtPole { omega },
            other => other,
        })?;
        let c = ComplexMatrix::from_real_rows(self.n, nx, &self.c)?;
        let mut m = c.matmul(&x);
        if self.d.iter().any(|&v| v != 0.0) {
            let d = ComplexMatrix::from_real_rows(self.n, self.n, &self.d)?;
            let sum: Vec<Complex64> = (0..self.n * self.n)
                .map(|idx| {
                    m.entry(idx / self.n, idx % self.n) + d.entry(idx / self.n, idx % self.n)
                })
                .collect();
            m = ComplexMatrix::from_rows(self.n, self.n, &sum)?;
        }
        Ok(m)
    }
}
