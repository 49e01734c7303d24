//! Dense row-major tensors.
//!
//! A [`Tensor`] owns a flat `Vec` plus a shape. The layout is row-major
//! everywhere: element `(i, j)` of an `[m, n]` tensor lives at `data[i * n + j]`.
//! There is no broadcasting apart from adding a vector to every row.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

/// Reduction applied by [`Tensor::reduce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    Sum,
    Mean,
    Max,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.is_empty() {
            return Err(shape_err!("tensor needs at least one dimension"));
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(shape_err!("zero-sized dimension in {:?}", shape));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(shape_err!(
                "shape {:?} holds {} elements, got {}",
                shape,
                n,
                data.len()
            ));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    /// Panics on a zero-sized or empty shape.
    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::ZERO)
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        assert!(!shape.is_empty() && shape.iter().all(|&d| d > 0), "invalid shape {shape:?}");
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![value; n] }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        let mut t = Self::zeros(shape);
        for (i, v) in t.data.iter_mut().enumerate() {
            *v = f(i);
        }
        t
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(&[n, n], |k| if k / n == k % n { T::ONE } else { T::ZERO })
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Flat offset of a multi-index, or `None` if out of bounds.
    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.shape.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            if i >= d {
                return None;
            }
            off = off * d + i;
        }
        Some(off)
    }

    pub fn get(&self, index: &[usize]) -> Option<T> {
        self.offset(index).map(|o| self.data[o])
    }

    /// Same data under a new shape.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Self::new(shape, self.data.clone())
    }

    pub fn into_reshape(self, shape: &[usize]) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.expect_shape(other.shape())?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sum(&self) -> T {
        self.data.iter().fold(T::ZERO, |acc, &v| acc + v)
    }

    /// Precision conversion through `f64`.
    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn expect_shape(&self, shape: &[usize]) -> Result<()> {
        if self.shape != shape {
            return Err(shape_err!("expected shape {:?}, got {:?}", shape, self.shape));
        }
        Ok(())
    }

    /// Standard matrix product of `[m, k] x [k, n]`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let (m, k) = self.dims2()?;
        let (k2, n) = other.dims2()?;
        if k != k2 {
            return Err(shape_err!("matmul inner dimensions {} and {} differ", k, k2));
        }
        let mut out = vec![T::ZERO; m * n];
        gemm_nn(&self.data, &other.data, &mut out, m, k, n);
        Ok(Self { shape: vec![m, n], data: out })
    }

    /// Adds `bias` (length = last dimension) to every row.
    pub fn add_row_vector(&self, bias: &Self) -> Result<Self> {
        let cols = *self.shape.last().expect("rank >= 1");
        if bias.len() != cols {
            return Err(shape_err!("bias length {} does not match {} columns", bias.len(), cols));
        }
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(cols) {
            for (v, &b) in row.iter_mut().zip(&bias.data) {
                *v += b;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Result<Self> {
        let (m, n) = self.dims2()?;
        let mut out = vec![T::ZERO; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Ok(Self { shape: vec![n, m], data: out })
    }

    /// Reduces along `axis`, dropping it from the shape. Reducing the only axis
    /// of a vector yields a one-element tensor of shape `[1]`.
    pub fn reduce(&self, axis: usize, op: Reduce) -> Result<Self> {
        let rank = self.rank();
        if axis >= rank {
            return Err(Error::AxisOutOfRange { axis, rank });
        }
        let outer: usize = self.shape[..axis].iter().product();
        let len = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                let mut it = (0..len).map(|a| self.data[(o * len + a) * inner + i]);
                let first = it.next().expect("len >= 1");
                let v = match op {
                    Reduce::Sum => it.fold(first, |acc, v| acc + v),
                    Reduce::Mean => it.fold(first, |acc, v| acc + v) / T::from_f64(len as f64),
                    Reduce::Max => it.fold(first, |acc, v| acc.max(v)),
                };
                out.push(v);
            }
        }
        let mut shape: Vec<usize> = self.shape.clone();
        shape.remove(axis);
        if shape.is_empty() {
            shape.push(1);
        }
        Ok(Self { shape, data: out })
    }

    pub(crate) fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [m, n] => Ok((m, n)),
            _ => Err(shape_err!("expected a rank-2 tensor, got shape {:?}", self.shape)),
        }
    }

    pub(crate) fn dims3(&self) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [a, b, c] => Ok((a, b, c)),
            _ => Err(shape_err!("expected a rank-3 tensor, got shape {:?}", self.shape)),
        }
    }
}

/// `out += a[m,k] * b[k,n]`
pub(crate) fn gemm_nn<T: Real>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for (p, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av == T::ZERO {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += av * bv;
            }
        }
    }
}

/// `out += a[k,m]^T * b[k,n]`
pub(crate) fn gemm_tn<T: Real>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for p in 0..k {
        let brow = &b[p * n..(p + 1) * n];
        for (i, &av) in a[p * m..(p + 1) * m].iter().enumerate() {
            if av == T::ZERO {
                continue;
            }
            for (o, &bv) in out[i * n..(i + 1) * n].iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out += a[m,k] * b[n,k]^T`
pub(crate) fn gemm_nt<T: Real>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = T::ZERO;
            for (&x, &y) in arow.iter().zip(brow) {
                acc += x * y;
            }
            out[i * n + j] += acc;
        }
    }
}

/// Order-sensitive 64-bit fingerprint over the exact bits of `tensors`.
pub(crate) fn fingerprint<T: Real>(tensors: &[&Tensor<T>]) -> u64 {
    // FNV-1a over the value bits and shapes.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |x: u64| {
        h ^= x;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for t in tensors {
        for &d in &t.shape {
            mix(d as u64);
        }
        for &v in &t.data {
            mix(v.to_bits_u64());
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_readback() {
        let t = Tensor::<f64>::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.get(&[1, 0]), Some(3.0));
        assert_eq!(t.get(&[0, 1]), Some(2.0));
        assert_eq!(t.get(&[2, 0]), None);
    }

    #[test]
    fn zero_vector() {
        let t = Tensor::<f32>::new(&[3], vec![0.0; 3]).unwrap();
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn length_disagreeing_with_shape_is_rejected() {
        let err = Tensor::<f32>::new(&[2], vec![1.0, 2.0, 3.0]).unwrap_err();
        assert_eq!(err.name(), "ShapeMismatch");
        assert!(Tensor::<f32>::new(&[0, 2], vec![]).is_err());
    }

    #[test]
    fn matmul_identity_and_dot() {
        let a = Tensor::<f64>::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(Tensor::identity(2).matmul(&a).unwrap(), a);
        let r = Tensor::<f64>::new(&[1, 2], vec![1.0, 2.0]).unwrap();
        let c = Tensor::<f64>::new(&[2, 1], vec![3.0, 4.0]).unwrap();
        assert_eq!(r.matmul(&c).unwrap().data(), &[11.0]);
    }

    #[test]
    fn matmul_inner_dimension_mismatch() {
        let a = Tensor::<f64>::zeros(&[2, 3]);
        assert_eq!(a.matmul(&a).unwrap_err().name(), "ShapeMismatch");
    }

    #[test]
    fn reductions() {
        let v = Tensor::<f64>::new(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.reduce(0, Reduce::Sum).unwrap().data(), &[6.0]);
        let c = Tensor::<f64>::new(&[3], vec![5.0; 3]).unwrap();
        assert_eq!(c.reduce(0, Reduce::Mean).unwrap().data(), &[5.0]);
        let m = Tensor::<f64>::new(&[3], vec![-1.0, 0.0, -2.0]).unwrap();
        assert_eq!(m.reduce(0, Reduce::Max).unwrap().data(), &[0.0]);
        assert_eq!(
            v.reduce(1, Reduce::Sum).unwrap_err(),
            Error::AxisOutOfRange { axis: 1, rank: 1 }
        );
    }

    #[test]
    fn reduce_drops_axis() {
        let t = Tensor::<f64>::from_fn(&[2, 3, 4], |i| i as f64);
        let r = t.reduce(1, Reduce::Sum).unwrap();
        assert_eq!(r.shape(), &[2, 4]);
        // (0, *, 0) = 0 + 4 + 8
        assert_eq!(r.get(&[0, 0]), Some(12.0));
    }

    #[test]
    fn gemm_variants_agree_with_transposes() {
        let a = Tensor::<f64>::from_fn(&[3, 4], |i| libm::sin(i as f64 * 0.7));
        let b = Tensor::<f64>::from_fn(&[4, 2], |i| libm::cos(i as f64 * 1.3));
        let ab = a.matmul(&b).unwrap();

        let at = a.transpose().unwrap();
        let mut tn = vec![0.0; 6];
        gemm_tn(at.data(), b.data(), &mut tn, 3, 4, 2);
        let bt = b.transpose().unwrap();
        let mut nt = vec![0.0; 6];
        gemm_nt(a.data(), bt.data(), &mut nt, 3, 4, 2);
        for k in 0..6 {
            assert!((tn[k] - ab.data()[k]).abs() < 1e-12);
            assert!((nt[k] - ab.data()[k]).abs() < 1e-12);
        }
    }
}
