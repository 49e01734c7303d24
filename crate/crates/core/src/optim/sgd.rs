use alloc::format;

use crate::error::{shape_err, Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Plain gradient descent, `p -= lr * g`. Kept as a baseline and for
/// line-search style sanity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn new(lr: f64) -> Result<Self> {
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {lr}")));
        }
        Ok(Self { lr })
    }

    pub fn step<T: Real>(&self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(shape_err!("{} params but {} grads", params.len(), grads.len()));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(shape_err!("tensor {i}: param {:?}, grad {:?}", p.shape(), g.shape()));
            }
        }
        let lr = T::from_f64(self.lr);
        for (p, g) in params.iter_mut().zip(grads) {
            for (pv, &gv) in p.data_mut().iter_mut().zip(g.data()) {
                *pv -= lr * gv;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn moves_against_the_gradient() {
        let mut p = Tensor::new(&[2], vec![1.0, 1.0]).unwrap();
        Sgd::new(0.5).unwrap().step(&mut [&mut p], &[Tensor::new(&[2], vec![2.0, -2.0]).unwrap()]).unwrap();
        assert_eq!(p.data(), &[0.0, 2.0]);
    }

    #[test]
    fn shape_checked() {
        let mut p = Tensor::<f32>::zeros(&[2]);
        let err = Sgd::new(0.1).unwrap().step(&mut [&mut p], &[Tensor::zeros(&[1])]).unwrap_err();
        assert_eq!(err.name(), "ShapeMismatch");
    }
}
