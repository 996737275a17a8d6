//! Poisson inverse-problem data `y ~ Poisson(Ax)` and the operator applications.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// A dense nonnegative operator in which every row and every column holds a
/// strictly positive entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(Array2<f64>);

impl DenseOperator {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let (m, n) = entries.dim();
        if m == 0 || n == 0 {
            return Err(Error::EmptyOperator);
        }
        for (flat, &a) in entries.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFiniteEntry {
                    what: "operator (row-major index)",
                    index: flat,
                });
            }
            if a < 0.0 {
                return Err(Error::NegativeEntry {
                    what: "operator (row-major index)",
                    index: flat,
                });
            }
        }
        if let Some(i) = entries
            .axis_iter(Axis(0))
            .position(|row| !row.iter().any(|&a| a > 0.0))
        {
            return Err(Error::ZeroRow(i));
        }
        if let Some(j) = entries
            .axis_iter(Axis(1))
            .position(|col| !col.iter().any(|&a| a > 0.0))
        {
            return Err(Error::ZeroColumn(j));
        }
        Ok(Self(entries))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    /// `Σ_i A_ij` for every column, computed as `Aᵀ1`.
    pub fn column_sums(&self) -> Array1<f64> {
        self.0.t().dot(&Array1::ones(self.rows()))
    }
}

/// Observed counts. Real values are accepted so that pre-scaled data can be used.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(Array1<f64>);

impl Observation {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        check_nonnegative(values.view(), "observation")?;
        Ok(Self(values))
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Anything that behaves like `x ↦ Ax` for a nonnegative `A` satisfying the
/// row/column positivity assumption, together with its observation `y`.
///
/// The solvers are written against this trait so that a batch of pixels
/// sharing one endmember matrix can be solved as a single block-diagonal
/// problem without materializing the block-diagonal matrix.
pub trait PoissonModel {
    /// Number of measurements `m`.
    fn n_measurements(&self) -> usize;
    /// Number of unknowns `n`.
    fn n_unknowns(&self) -> usize;
    fn observation(&self) -> ArrayView1<'_, f64>;
    /// `w = Aᵀ1`, strictly positive.
    fn column_sums(&self) -> ArrayView1<'_, f64>;
    /// `Ax` without any positivity check.
    fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64>;
    /// `Aᵀv` without any check.
    fn apply_adjoint(&self, v: ArrayView1<'_, f64>) -> Array1<f64>;
}

/// Validated `(A, y)` pair with cached column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonProblem {
    operator: DenseOperator,
    observation: Observation,
    column_sums: Array1<f64>,
}

impl PoissonProblem {
    pub fn new(operator: DenseOperator, observation: Observation) -> Result<Self> {
        if observation.len() != operator.rows() {
            return Err(Error::DimensionMismatch {
                what: "observation length vs operator rows",
                expected: operator.rows(),
                found: observation.len(),
            });
        }
        let column_sums = operator.column_sums();
        Ok(Self {
            operator,
            observation,
            column_sums,
        })
    }

    pub fn operator(&self) -> &DenseOperator {
        &self.operator
    }

    /// Same operator, different observation.
    pub fn with_observation(&self, y: Array1<f64>) -> Result<Self> {
        Self::new(self.operator.clone(), Observation::new(y)?)
    }
}

impl PoissonModel for PoissonProblem {
    fn n_measurements(&self) -> usize {
        self.operator.rows()
    }

    fn n_unknowns(&self) -> usize {
        self.operator.cols()
    }

    fn observation(&self) -> ArrayView1<'_, f64> {
        self.observation.view()
    }

    fn column_sums(&self) -> ArrayView1<'_, f64> {
        self.column_sums.view()
    }

    fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.operator.0.dot(&x)
    }

    fn apply_adjoint(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        self.operator.0.t().dot(&v)
    }
}

/// Validates raw `(A, y)` and precomputes the column sums.
pub fn validate_problem(a: Array2<f64>, y: Array1<f64>) -> Result<PoissonProblem> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Err(Error::EmptyOperator);
    }
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            what: "observation length vs operator rows",
            expected: m,
            found: y.len(),
        });
    }
    PoissonProblem::new(DenseOperator::new(a)?, Observation::new(y)?)
}

/// `Ax` for a strictly positive `x`; every component of the result is then positive.
pub fn forward<M: PoissonModel + ?Sized>(p: &M, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_len(x, p.n_unknowns(), "iterate length")?;
    check_positive(x)?;
    Ok(p.apply(x))
}

/// `Aᵀv` for a finite `v`.
pub fn adjoint<M: PoissonModel + ?Sized>(p: &M, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_len(v, p.n_measurements(), "adjoint input length")?;
    if let Some(index) = v.iter().position(|a| !a.is_finite()) {
        return Err(Error::NonFiniteEntry {
            what: "adjoint input",
            index,
        });
    }
    Ok(p.apply_adjoint(v))
}

pub(crate) fn check_len(x: ArrayView1<'_, f64>, expected: usize, what: &'static str) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// Rejects any coordinate that is not strictly positive (NaN included).
pub(crate) fn check_positive(x: ArrayView1<'_, f64>) -> Result<()> {
    match x.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(index) => Err(Error::NonPositiveIterate {
            index,
            value: x[index],
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_nonnegative(x: ArrayView1<'_, f64>, what: &'static str) -> Result<()> {
    for (index, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry { what, index });
        }
        if v < 0.0 {
            return Err(Error::NegativeEntry { what, index });
        }
    }
    Ok(())
}
