//! Named parameter tensors: a value array plus a gradient slot of the same
//! shape. Gradients accumulate across backward calls until `zero_grad`.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayD, ArrayView1, ArrayView2, Ix1, Ix2, IxDyn};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

#[derive(Clone, Debug)]
pub struct Tensor {
    pub name: String,
    pub value: ArrayD<f64>,
    pub grad: ArrayD<f64>,
}

impl Tensor {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Tensor {
        Tensor {
            name: name.into(),
            value: ArrayD::zeros(IxDyn(shape)),
            grad: ArrayD::zeros(IxDyn(shape)),
        }
    }

    /// Uniform init on (-1/sqrt(fan_in), 1/sqrt(fan_in)), the pinned scheme
    /// for every weight matrix in the crate.
    pub fn uniform(
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        rng: &mut ChaCha20Rng,
    ) -> Tensor {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let len: usize = shape.iter().product();
        let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-bound..bound)).collect();
        Tensor {
            name: name.into(),
            value: ArrayD::from_shape_vec(IxDyn(shape), data)
                .expect("shape product equals data length"),
            grad: ArrayD::zeros(IxDyn(shape)),
        }
    }

    pub fn from_values(name: impl Into<String>, shape: &[usize], values: Vec<f64>) -> Result<Tensor> {
        let expect: usize = shape.iter().product();
        if values.len() != expect {
            return Err(Error::structural(format!(
                "tensor of shape {shape:?} needs {expect} values, got {}",
                values.len()
            )));
        }
        let value = ArrayD::from_shape_vec(IxDyn(shape), values)
            .map_err(|e| Error::structural(format!("bad tensor shape: {e}")))?;
        let grad = ArrayD::zeros(value.raw_dim());
        Ok(Tensor { name: name.into(), value, grad })
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.value.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::numeric(format!("tensor {} contains non-finite values", self.name)))
        }
    }

    pub fn mat(&self) -> ArrayView2<'_, f64> {
        self.value
            .view()
            .into_dimensionality::<Ix2>()
            .unwrap_or_else(|_| panic!("tensor {} used as a matrix but has shape {:?}", self.name, self.shape()))
    }

    pub fn vec(&self) -> ArrayView1<'_, f64> {
        self.value
            .view()
            .into_dimensionality::<Ix1>()
            .unwrap_or_else(|_| panic!("tensor {} used as a vector but has shape {:?}", self.name, self.shape()))
    }

    pub fn add_to_grad2(&mut self, delta: &Array2<f64>) {
        let mut g = self
            .grad
            .view_mut()
            .into_dimensionality::<Ix2>()
            .expect("gradient shape matches a matrix tensor");
        g += delta;
    }

    pub fn add_to_grad1(&mut self, delta: &Array1<f64>) {
        let mut g = self
            .grad
            .view_mut()
            .into_dimensionality::<Ix1>()
            .expect("gradient shape matches a vector tensor");
        g += delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn uniform_init_respects_fan_in_bound() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let t = Tensor::uniform("w", &[64, 100], 100, &mut rng);
        let bound = 0.1;
        assert!(t.value.iter().all(|v| v.abs() < bound));
        assert!(t.value.iter().any(|v| v.abs() > bound * 0.5), "values should fill the range");
        assert_eq!(t.shape(), &[64, 100]);
        assert_eq!(t.grad.len(), t.len());
    }

    #[test]
    fn from_values_validates_length() {
        assert!(Tensor::from_values("t", &[2, 3], vec![0.0; 5]).is_err());
        let t = Tensor::from_values("t", &[2, 3], (0..6).map(|i| i as f64).collect()).unwrap();
        assert_eq!(t.mat()[[1, 2]], 5.0);
    }

    #[test]
    fn finiteness_check_catches_nan() {
        let mut t = Tensor::zeros("t", &[4]);
        assert!(t.assert_finite().is_ok());
        t.value[[2]] = f64::NAN;
        assert!(t.assert_finite().is_err());
    }

    #[test]
    fn grads_accumulate_until_cleared() {
        let mut t = Tensor::zeros("t", &[2, 2]);
        let d = Array2::from_elem((2, 2), 1.5);
        t.add_to_grad2(&d);
        t.add_to_grad2(&d);
        assert_eq!(t.grad[[0, 0]], 3.0);
        t.zero_grad();
        assert_eq!(t.grad[[0, 0]], 0.0);
    }
}
