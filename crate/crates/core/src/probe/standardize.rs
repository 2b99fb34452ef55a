use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

/// Dimensions whose training standard deviation falls below this are
/// treated as constant and mapped to zero.
pub const STD_GUARD: f64 = 1e-8;

/// Per-dimension z-scoring fitted on a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let mut var = Array1::zeros(x.ncols());
        for row in x.rows() {
            var += &(&row - &mean).mapv(|d| d * d);
        }
        let std = (var / n).mapv(f64::sqrt);
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(x.len());
        for (i, o) in out.iter_mut().enumerate() {
            *o = if self.std[i] < STD_GUARD {
                0.0
            } else {
                (x[i] - self.mean[i]) / self.std[i]
            };
        }
        out
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for (mut o, row) in out.rows_mut().into_iter().zip(x.rows()) {
            o.assign(&self.transform_row(row));
        }
        out
    }
}
