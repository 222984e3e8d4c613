//! Adaptive moment estimation with bias correction. Moment buffers are keyed
//! by parameter order, which therefore must be stable across steps (and is:
//! every model exposes its parameters in a fixed order).

use crate::error::{Error, Result};
use crate::neural::tensor::Tensor;
use ndarray::ArrayD;

pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;

pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Adam {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Applies one update from the accumulated gradients. Gradients are not
    /// cleared here; callers zero them at the start of the next batch.
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| ArrayD::zeros(p.value.raw_dim())).collect();
            self.v = params.iter().map(|p| ArrayD::zeros(p.value.raw_dim())).collect();
        }
        if self.m.len() != params.len() {
            return Err(Error::usage(format!(
                "optimizer tracks {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (idx, p) in params.iter_mut().enumerate() {
            if self.m[idx].shape() != p.value.shape() {
                return Err(Error::usage(format!(
                    "parameter {} changed shape mid-training",
                    p.name
                )));
            }
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            ndarray::Zip::from(&mut p.value)
                .and(m)
                .and(v)
                .and(&p.grad)
                .for_each(|w, m, v, &g| {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                });
            p.assert_finite()?;
        }
        Ok(())
    }

    /// Moment buffers and step count as named tensors for checkpointing.
    pub fn export_state(&self, param_names: &[String]) -> Result<Vec<(String, Vec<usize>, Vec<f64>)>> {
        if !self.m.is_empty() && param_names.len() != self.m.len() {
            return Err(Error::usage("parameter name list does not match optimizer state"));
        }
        let mut out = Vec::new();
        for (i, name) in param_names.iter().enumerate() {
            if let (Some(m), Some(v)) = (self.m.get(i), self.v.get(i)) {
                out.push((format!("adam.m.{name}"), m.shape().to_vec(), m.iter().copied().collect()));
                out.push((format!("adam.v.{name}"), v.shape().to_vec(), v.iter().copied().collect()));
            }
        }
        Ok(out)
    }

    /// Restores the moment buffers saved by `export_state`.
    pub fn import_state(
        &mut self,
        t: u64,
        params: &[&Tensor],
        lookup: &mut dyn FnMut(&str) -> Option<(Vec<usize>, Vec<f64>)>,
    ) -> Result<()> {
        let mut m = Vec::with_capacity(params.len());
        let mut v = Vec::with_capacity(params.len());
        for p in params {
            for (prefix, slot) in [("adam.m.", &mut m), ("adam.v.", &mut v)] {
                let key = format!("{prefix}{}", p.name);
                let (shape, values) = lookup(&key)
                    .ok_or_else(|| Error::data(format!("checkpoint is missing {key}")))?;
                if shape != p.value.shape() {
                    return Err(Error::data(format!(
                        "optimizer state {key} has shape {shape:?}, parameter is {:?}",
                        p.value.shape()
                    )));
                }
                slot.push(
                    ArrayD::from_shape_vec(ndarray::IxDyn(&shape), values)
                        .map_err(|e| Error::data(format!("bad optimizer state {key}: {e}")))?,
                );
            }
        }
        self.t = t;
        self.m = m;
        self.v = v;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_a_quadratic() {
        let mut p = Tensor::from_values("x", &[2], vec![5.0, -3.0]).unwrap();
        let mut opt = Adam::new(0.05);
        for _ in 0..2000 {
            p.zero_grad();
            let g: Vec<f64> = p.value.iter().map(|x| 2.0 * x).collect();
            p.grad = ArrayD::from_shape_vec(ndarray::IxDyn(&[2]), g).unwrap();
            opt.step(&mut [&mut p]).unwrap();
        }
        assert!(p.value.iter().all(|x| x.abs() < 1e-3), "got {:?}", p.value);
    }

    #[test]
    fn updates_are_deterministic() {
        let run = || {
            let mut p = Tensor::from_values("x", &[3], vec![1.0, 2.0, 3.0]).unwrap();
            let mut opt = Adam::new(1e-3);
            for k in 0..50 {
                p.zero_grad();
                let g: Vec<f64> = p.value.iter().map(|x| x.sin() + k as f64 * 0.01).collect();
                p.grad = ArrayD::from_shape_vec(ndarray::IxDyn(&[3]), g).unwrap();
                opt.step(&mut [&mut p]).unwrap();
            }
            p.value.iter().copied().collect::<Vec<f64>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn state_round_trips() {
        let mut p = Tensor::from_values("x", &[2], vec![1.0, -1.0]).unwrap();
        let mut opt = Adam::new(1e-2);
        for _ in 0..3 {
            p.zero_grad();
            p.grad = ArrayD::from_shape_vec(ndarray::IxDyn(&[2]), vec![0.5, -0.25]).unwrap();
            opt.step(&mut [&mut p]).unwrap();
        }
        let names = vec!["x".to_string()];
        let state = opt.export_state(&names).unwrap();
        assert_eq!(state.len(), 2);

        let mut restored = Adam::new(1e-2);
        restored
            .import_state(opt.step_count(), &[&p], &mut |key| {
                state
                    .iter()
                    .find(|(n, _, _)| n == key)
                    .map(|(_, s, v)| (s.clone(), v.clone()))
            })
            .unwrap();
        assert_eq!(restored.step_count(), 3);

        // Both optimizers must continue identically.
        let mut p2 = p.clone();
        p.zero_grad();
        p2.zero_grad();
        p.grad = ArrayD::from_shape_vec(ndarray::IxDyn(&[2]), vec![0.1, 0.2]).unwrap();
        p2.grad = p.grad.clone();
        opt.step(&mut [&mut p]).unwrap();
        restored.step(&mut [&mut p2]).unwrap();
        assert_eq!(
            p.value.iter().collect::<Vec<_>>(),
            p2.value.iter().collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_parameter_count_changes() {
        let mut a = Tensor::zeros("a", &[2]);
        let mut b = Tensor::zeros("b", &[2]);
        let mut opt = Adam::new(1e-3);
        opt.step(&mut [&mut a, &mut b]).unwrap();
        assert!(matches!(opt.step(&mut [&mut a]), Err(Error::Usage(_))));
    }
}
