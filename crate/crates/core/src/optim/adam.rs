use alloc::format;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Adam moments and hyperparameters for one parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    /// Steps taken so far.
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Real> AdamState<T> {
    /// Zero moments shaped like `params`.
    pub fn new(params: &[&Tensor<T>], lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {lr}")));
        }
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::InvalidConfig(format!("betas ({beta1}, {beta2}) must lie in [0, 1)")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon {epsilon}")));
        }
        let zeros = || params.iter().map(|p| Tensor::zeros(p.shape())).collect::<Vec<_>>();
        Ok(Self { m: zeros(), v: zeros(), t: 0, lr, beta1, beta2, epsilon })
    }

    /// One Adam update. Shapes are checked before anything is modified.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(shape_err!(
                "adam state holds {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            ));
        }
        for (i, ((p, g), m)) in params.iter().zip(grads).zip(&self.m).enumerate() {
            if p.shape() != m.shape() || g.shape() != m.shape() {
                return Err(shape_err!(
                    "tensor {i}: param {:?}, grad {:?}, state {:?}",
                    p.shape(),
                    g.shape(),
                    m.shape()
                ));
            }
        }

        self.t += 1;
        let t = self.t as f64;
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let (c1, c2) = (T::ONE - b1, T::ONE - b2);
        // Bias corrections folded into the step size and the sqrt term.
        let bc1 = T::from_f64(1.0 - libm::pow(self.beta1, t));
        let bc2 = T::from_f64(1.0 - libm::pow(self.beta2, t));
        let lr = T::from_f64(self.lr);
        let eps = T::from_f64(self.epsilon);

        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((pv, &gv), mv), vv) in
                p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut())
            {
                *mv = b1 * *mv + c1 * gv;
                *vv = b2 * *vv + c2 * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn state(shape: &[usize], lr: f64) -> AdamState<f64> {
        AdamState::new(&[&Tensor::zeros(shape)], lr, 0.9, 0.999, 1e-8).unwrap()
    }

    #[test]
    fn first_step_from_zero() {
        let mut s = state(&[1], 1e-3);
        let mut p = Tensor::zeros(&[1]);
        s.step(&mut [&mut p], &[Tensor::full(&[1], 1.0)]).unwrap();
        // m_hat = v_hat = 1, so the step is lr / (1 + eps).
        let expect = -1e-3 / (1.0 + 1e-8);
        assert!((p.data()[0] - expect).abs() < 1e-18);
        assert!((p.data()[0] + 9.9999999e-4).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = state(&[3], 1e-2);
        let mut p = Tensor::new(&[3], vec![0.5, -1.0, 2.0]).unwrap();
        let before = p.clone();
        for _ in 0..5 {
            s.step(&mut [&mut p], &[Tensor::zeros(&[3])]).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn misaligned_shapes_leave_state_untouched() {
        let mut s = state(&[2], 1e-3);
        let mut p = Tensor::zeros(&[2]);
        let err = s.step(&mut [&mut p], &[Tensor::zeros(&[3])]).unwrap_err();
        assert_eq!(err.name(), "ShapeMismatch");
        assert_eq!(s.t, 0);
        assert!(s.step(&mut [], &[]).is_err());
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let p = Tensor::<f32>::zeros(&[1]);
        assert!(AdamState::new(&[&p], -1.0, 0.9, 0.999, 1e-8).is_err());
        assert!(AdamState::new(&[&p], 1e-3, 1.0, 0.999, 1e-8).is_err());
        assert!(AdamState::new(&[&p], 1e-3, 0.9, 0.999, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn second_moment_stays_nonnegative(gs in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..20)) {
            let mut s = state(&[4], 1e-2);
            let mut p = Tensor::zeros(&[4]);
            for g in gs {
                s.step(&mut [&mut p], &[Tensor::new(&[4], g).unwrap()]).unwrap();
                prop_assert!(s.v[0].data().iter().all(|&v| v >= 0.0));
            }
        }

        #[test]
        fn zero_learning_rate_never_moves(gs in prop::collection::vec(prop::collection::vec(-10f64..10.0, 3), 1..20),
                                          start in prop::collection::vec(-5f64..5.0, 3)) {
            let mut s = state(&[3], 0.0);
            let mut p = Tensor::new(&[3], start.clone()).unwrap();
            for g in gs {
                s.step(&mut [&mut p], &[Tensor::new(&[3], g).unwrap()]).unwrap();
            }
            prop_assert_eq!(p.data(), &start[..]);
        }

        #[test]
        fn identical_inputs_identical_outputs(g in prop::collection::vec(-10f32..10.0, 5), steps in 1usize..6) {
            let run = || {
                let mut s = AdamState::new(&[&Tensor::<f32>::zeros(&[5])], 1e-3, 0.9, 0.999, 1e-8).unwrap();
                let mut p = Tensor::full(&[5], 0.25f32);
                for _ in 0..steps {
                    s.step(&mut [&mut p], &[Tensor::new(&[5], g.clone()).unwrap()]).unwrap();
                }
                (p, s)
            };
            let (a, sa) = run();
            let (b, sb) = run();
            prop_assert_eq!(a.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            b.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(sa, sb);
        }
    }
}
