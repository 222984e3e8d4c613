//! Feed-forward building blocks: linear maps, label embeddings, tanh.
//!
//! Every layer caches its forward inputs on a stack, so one layer instance
//! can be applied many times inside a single graph (e.g. a head reused at
//! every timestep). Backward calls must mirror forward calls in reverse
//! order; `clear_cache` resets the stack between batches.

use crate::error::{Error, Result};
use crate::neural::tensor::Tensor;
use ndarray::{Array2, Axis};
use rand_chacha::ChaCha20Rng;

#[derive(Clone, Debug)]
pub struct Linear {
    /// out_dim x in_dim.
    pub w: Tensor,
    /// out_dim.
    pub b: Tensor,
    cache: Vec<Array2<f64>>,
}

impl Linear {
    pub fn new(name: &str, in_dim: usize, out_dim: usize, rng: &mut ChaCha20Rng) -> Linear {
        Linear {
            w: Tensor::uniform(format!("{name}.w"), &[out_dim, in_dim], in_dim, rng),
            b: Tensor::zeros(format!("{name}.b"), &[out_dim]),
            cache: Vec::new(),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.w.shape()[0]
    }

    /// y = x W^T + b for a batch of rows.
    pub fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        let y = self.infer(x);
        self.cache.push(x.clone());
        y
    }

    /// Forward without caching; used on inference-only paths.
    pub fn infer(&self, x: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(x.ncols(), self.in_dim(), "{}: input width mismatch", self.w.name);
        x.dot(&self.w.mat().t()) + self.b.vec()
    }

    pub fn backward(&mut self, d_out: &Array2<f64>) -> Array2<f64> {
        let x = self.cache.pop().expect("backward without a matching forward");
        self.w.add_to_grad2(&d_out.t().dot(&x));
        self.b.add_to_grad1(&d_out.sum_axis(Axis(0)));
        d_out.dot(&self.w.mat())
    }

    pub fn params(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

/// Lookup table of column vectors, one per discrete label.
#[derive(Clone, Debug)]
pub struct Embedding {
    /// dim x classes; label k selects column k.
    pub table: Tensor,
    cache: Vec<Vec<usize>>,
}

impl Embedding {
    pub fn new(name: &str, dim: usize, classes: usize, rng: &mut ChaCha20Rng) -> Embedding {
        Embedding {
            table: Tensor::uniform(format!("{name}.table"), &[dim, classes], dim, rng),
            cache: Vec::new(),
        }
    }

    pub fn from_matrix(name: &str, dim: usize, classes: usize, values: Vec<f64>) -> Result<Embedding> {
        Ok(Embedding { table: Tensor::from_values(format!("{name}.table"), &[dim, classes], values)?, cache: Vec::new() })
    }

    /// Row-major copy of the table values.
    pub fn params_snapshot(&self) -> Vec<f64> {
        self.table.value.iter().copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.table.shape()[0]
    }

    pub fn classes(&self) -> usize {
        self.table.shape()[1]
    }

    pub fn forward(&mut self, labels: &[usize]) -> Result<Array2<f64>> {
        let out = self.infer(labels)?;
        self.cache.push(labels.to_vec());
        Ok(out)
    }

    pub fn infer(&self, labels: &[usize]) -> Result<Array2<f64>> {
        let table = self.table.mat();
        let mut out = Array2::zeros((labels.len(), self.dim()));
        for (row, &k) in labels.iter().enumerate() {
            if k >= self.classes() {
                return Err(Error::domain(format!(
                    "label {k} out of range for {} classes in {}",
                    self.classes(),
                    self.table.name
                )));
            }
            out.row_mut(row).assign(&table.column(k));
        }
        Ok(out)
    }

    pub fn backward(&mut self, d_out: &Array2<f64>) {
        let labels = self.cache.pop().expect("backward without a matching forward");
        let mut g = self
            .table
            .grad
            .view_mut()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("embedding gradient is a matrix");
        for (row, &k) in labels.iter().enumerate() {
            let mut col = g.column_mut(k);
            col += &d_out.row(row);
        }
    }

    pub fn params(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.table]
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

/// Looks up the shared emotion code for a batch of emotion ids; the returned
/// rows are differentiable with respect to the embedding matrix.
pub fn embed_emotion(embedding: &mut Embedding, labels: &[usize]) -> Result<Array2<f64>> {
    embedding.forward(labels)
}

#[derive(Clone, Debug, Default)]
pub struct Tanh {
    cache: Vec<Array2<f64>>,
}

impl Tanh {
    pub fn new() -> Tanh {
        Tanh::default()
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        let y = x.mapv(f64::tanh);
        self.cache.push(y.clone());
        y
    }

    pub fn infer(&self, x: &Array2<f64>) -> Array2<f64> {
        x.mapv(f64::tanh)
    }

    pub fn backward(&mut self, d_out: &Array2<f64>) -> Array2<f64> {
        let y = self.cache.pop().expect("backward without a matching forward");
        d_out * &y.mapv(|v| 1.0 - v * v)
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }
}
