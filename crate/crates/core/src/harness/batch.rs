use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::problem::{check_nonnegative, DenseOperator, PoissonModel};

/// Independent per-pixel problems `y_p ~ Poisson(S x_p)` sharing one endmember
/// matrix `S` (bands × endmembers), viewed as a single block-diagonal problem.
///
/// Unknowns are laid out pixel-major: coordinates `p·q .. (p+1)·q` belong to
/// pixel `p`, which is the block layout expected by
/// [`BlockSimplexConstraint::uniform`](crate::constraints::BlockSimplexConstraint::uniform).
#[derive(Debug, Clone)]
pub struct PixelBatch {
    spectra: DenseOperator,
    counts: Array1<f64>,
    column_sums: Array1<f64>,
    n_pixels: usize,
}

impl PixelBatch {
    /// `counts` has one row per pixel and one column per band.
    pub fn new(spectra: DenseOperator, counts: ArrayView2<'_, f64>) -> Result<Self> {
        let (n_pixels, bands) = counts.dim();
        if bands != spectra.rows() {
            return Err(Error::DimensionMismatch {
                what: "count bands vs spectra rows",
                expected: spectra.rows(),
                found: bands,
            });
        }
        if n_pixels == 0 {
            return Err(Error::InvalidConfig("pixel batch is empty".into()));
        }
        let flat: Array1<f64> = counts.iter().copied().collect();
        check_nonnegative(flat.view(), "counts")?;
        let w = spectra.column_sums();
        let column_sums = (0..n_pixels).flat_map(|_| w.iter().copied()).collect();
        Ok(Self {
            spectra,
            counts: flat,
            column_sums,
            n_pixels,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.n_pixels
    }

    pub fn n_endmembers(&self) -> usize {
        self.spectra.cols()
    }

    pub fn spectra(&self) -> &DenseOperator {
        &self.spectra
    }

    /// Reshapes a flat iterate into one row per pixel.
    pub fn as_pixels(&self, x: ArrayView1<'_, f64>) -> Array2<f64> {
        x.to_shape((self.n_pixels, self.n_endmembers()))
            .expect("iterate length matches the batch")
            .to_owned()
    }
}

impl PoissonModel for PixelBatch {
    fn n_measurements(&self) -> usize {
        self.counts.len()
    }

    fn n_unknowns(&self) -> usize {
        self.n_pixels * self.n_endmembers()
    }

    fn observation(&self) -> ArrayView1<'_, f64> {
        self.counts.view()
    }

    fn column_sums(&self) -> ArrayView1<'_, f64> {
        self.column_sums.view()
    }

    fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let xs = x
            .to_shape((self.n_pixels, self.n_endmembers()))
            .expect("iterate length matches the batch");
        let out = xs.dot(&self.spectra.view().t());
        flatten(out)
    }

    fn apply_adjoint(&self, v: ArrayView1<'_, f64>) -> Array1<f64> {
        let vs = v
            .to_shape((self.n_pixels, self.spectra.rows()))
            .expect("measurement length matches the batch");
        flatten(vs.dot(&self.spectra.view()))
    }
}

fn flatten(a: Array2<f64>) -> Array1<f64> {
    let n = a.len();
    if a.is_standard_layout() {
        a.into_shape_with_order(n).expect("standard layout")
    } else {
        a.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::validate_problem;
    use ndarray::array;

    #[test]
    fn matches_per_pixel_products() {
        let s = array![[1.0, 2.0], [0.5, 1.0], [3.0, 0.1]];
        let counts = array![[1.0, 2.0, 3.0], [0.0, 4.0, 1.0]];
        let batch = PixelBatch::new(DenseOperator::new(s.clone()).unwrap(), counts.view()).unwrap();
        let x = array![0.2, 0.8, 1.5, 0.1];
        let ax = batch.apply(x.view());
        for p in 0..2 {
            let single = validate_problem(s.clone(), counts.row(p).to_owned()).unwrap();
            let xp = x.slice(ndarray::s![2 * p..2 * p + 2]);
            let expect = single.apply(xp);
            assert!(ax.slice(ndarray::s![3 * p..3 * p + 3]).iter().zip(&expect).all(|(a, b)| (a - b).abs() <= 1e-14));
            let back = batch.apply_adjoint(counts.iter().copied().collect::<Array1<f64>>().view());
            let expect_back = single.apply_adjoint(counts.row(p));
            assert!(back.slice(ndarray::s![2 * p..2 * p + 2]).iter().zip(&expect_back).all(|(a, b)| (a - b).abs() <= 1e-14));
        }
        assert_eq!(batch.column_sums(), array![4.5, 3.1, 4.5, 3.1]);
    }

    #[test]
    fn rejects_mismatched_counts() {
        let s = DenseOperator::new(array![[1.0], [1.0]]).unwrap();
        assert!(PixelBatch::new(s.clone(), array![[1.0, 2.0, 3.0]].view()).is_err());
        assert!(PixelBatch::new(s, array![[1.0, -2.0]].view()).is_err());
    }
}
