//! One-hidden-layer rectifier network with a sigmoid output, trained on
//! mean binary cross-entropy.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

/// Network parameters. `w1` is `input × hidden`; the pre-activation of a
/// row vector `x` is `x · w1 + b1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

/// Gradient of the loss with respect to every [`Mlp`] parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w1: Array2::zeros((input, hidden)),
            b1: Array1::zeros(hidden),
            w2: Array1::zeros(hidden),
            b2: 0.0,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let a1 = (6.0 / (input + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + 1) as f64).sqrt();
        let u1 = Uniform::new_inclusive(-a1, a1);
        let u2 = Uniform::new_inclusive(-a2, a2);
        let mut mlp = Self::zeros(input, hidden);
        mlp.w1.mapv_inplace(|_| u1.sample(rng));
        mlp.w2.mapv_inplace(|_| u2.sample(rng));
        mlp
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    fn hidden(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.w1) + &self.b1
    }

    /// Output logits for a batch of rows.
    pub fn logits(&self, x: ArrayView2<f64>) -> Array1<f64> {
        self.hidden(x).mapv(relu).dot(&self.w2) + self.b2
    }

    pub fn logit(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.w1)
            .iter()
            .zip(&self.b1)
            .zip(&self.w2)
            .map(|((z, b), w)| relu(z + b) * w)
            .sum::<f64>()
            + self.b2
    }

    /// Mean binary cross-entropy of the batch.
    pub fn loss(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
        let s = self.logits(x);
        s.iter()
            .zip(y)
            .map(|(&s, &y)| bce_with_logit(s, y))
            .sum::<f64>()
            / y.len() as f64
    }

    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> (f64, Gradients) {
        let n = y.len() as f64;
        let z = self.hidden(x);
        let a = z.mapv(relu);
        let s = a.dot(&self.w2) + self.b2;
        let loss = s
            .iter()
            .zip(y)
            .map(|(&s, &y)| bce_with_logit(s, y))
            .sum::<f64>()
            / n;

        let ds: Array1<f64> = s
            .iter()
            .zip(y)
            .map(|(&s, &y)| (crate::scoring::sigmoid(s) - y) / n)
            .collect();
        let w2 = a.t().dot(&ds);
        let b2 = ds.sum();
        let mut dz = ds
            .view()
            .insert_axis(Axis(1))
            .dot(&self.w2.view().insert_axis(Axis(0)));
        dz.zip_mut_with(&z, |d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        let w1 = x.t().dot(&dz);
        let b1 = dz.sum_axis(Axis(0));
        (loss, Gradients { w1, b1, w2, b2 })
    }

    /// All parameters in a fixed order: `w1` (row-major), `b1`, `w2`, `b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend(self.w1.iter());
        v.extend(self.b1.iter());
        v.extend(self.w2.iter());
        v.push(self.b2);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let (w1, rest) = flat.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, rest) = rest.split_at(self.w2.len());
        self.w1.iter_mut().zip(w1).for_each(|(p, v)| *p = *v);
        self.b1.iter_mut().zip(b1).for_each(|(p, v)| *p = *v);
        self.w2.iter_mut().zip(w2).for_each(|(p, v)| *p = *v);
        self.b2 = rest[0];
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }
}

impl Gradients {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend(self.w1.iter());
        v.extend(self.b1.iter());
        v.extend(self.w2.iter());
        v.push(self.b2);
        v
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// `-[y log σ(s) + (1-y) log(1-σ(s))]` without forming σ(s).
fn bce_with_logit(s: f64, y: f64) -> f64 {
    s.max(0.0) - y * s + (-s.abs()).exp().ln_1p()
}
