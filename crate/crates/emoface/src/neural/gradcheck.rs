//! Finite-difference verification of reverse-mode gradients.
//!
//! A checkable graph exposes a scalar loss two ways: a pure forward
//! evaluation and a forward+backward pass that leaves gradients in the
//! parameters. The scalar-output precondition is enforced by the trait's
//! return type. Central differences use the pinned step 1e-5.

use crate::error::{Error, Result};
use crate::neural::tensor::Tensor;

pub const FD_STEP: f64 = 1e-5;

pub trait GradCheckable {
    /// Pure forward loss; must not grow any cache state.
    fn loss(&mut self) -> Result<f64>;
    /// Zeroes gradients, runs forward + backward, leaves gradients in place.
    fn loss_and_grad(&mut self) -> Result<f64>;
    fn params(&mut self) -> Vec<&mut Tensor>;
}

/// Max relative error between analytic and numeric gradients over every
/// parameter element, with relative error |a - n| / max(|a|, |n|, 1e-3).
pub fn grad_check<M: GradCheckable>(model: &mut M) -> Result<f64> {
    let l0 = model.loss_and_grad()?;
    if !l0.is_finite() {
        return Err(Error::numeric(format!("loss is {l0}")));
    }
    let analytic: Vec<Vec<f64>> =
        model.params().iter().map(|p| p.grad.iter().copied().collect()).collect();

    let mut max_rel = 0.0f64;
    let param_count = analytic.len();
    for pi in 0..param_count {
        for ei in 0..analytic[pi].len() {
            let saved = {
                let mut params = model.params();
                let slot = params[pi].value.iter_mut().nth(ei).expect("element in range");
                let saved = *slot;
                *slot = saved + FD_STEP;
                saved
            };
            let plus = model.loss()?;
            {
                let mut params = model.params();
                let slot = params[pi].value.iter_mut().nth(ei).expect("element in range");
                *slot = saved - FD_STEP;
            }
            let minus = model.loss()?;
            {
                let mut params = model.params();
                let slot = params[pi].value.iter_mut().nth(ei).expect("element in range");
                *slot = saved;
            }
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic[pi][ei];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}
