//! Dense N-dimensional arrays.
//!
//! Layout is row-major with the outermost extent first. Network tensors are
//! channels-first: `(C, spatial...)` for activations and
//! `(C_out, C_in, kernel...)` for kernel banks.

mod conv;
mod io;

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, NumAssign};

use crate::error::{invalid, shape, Result};

pub use conv::{convolve_input_grad, convolve_valid, correlate_kernel_grad};
pub use io::{load, read_ndt, save, write_ndt, MAGIC, MAX_RANK};

/// Real sample type. Implemented for `f32` (storage and training precision)
/// and `f64` (reference computations).
pub trait Scalar: Float + NumAssign + Sum + Default + Debug + Send + Sync + 'static {
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let n = checked_volume(&shape)?;
        if n != data.len() {
            return Err(shape_err(&shape, data.len()));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: &[usize], value: T) -> Result<Self> {
        let n = checked_volume(shape)?;
        Ok(Tensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        })
    }

    /// One-dimensional tensor holding `data`.
    pub fn from_vec(data: Vec<T>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| U::from_f64(x.as_f64())).collect(),
        }
    }

    /// Largest absolute sample.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Elementwise `d`-th power (`d` ≥ 1) by repeated multiplication.
    pub fn hadamard_power(&self, d: u32) -> Result<Self> {
        if d < 1 {
            return Err(invalid("hadamard power degree must be >= 1"));
        }
        Ok(self.map(|x| {
            let mut acc = x;
            for _ in 1..d {
                acc *= x;
            }
            acc
        }))
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(shape(format!(
                "hadamard product of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a * b)
                .collect(),
        })
    }

    /// The `index`-th slab along the outermost axis.
    pub fn outer_slice(&self, index: usize) -> Result<Self> {
        if self.shape.len() < 2 || index >= self.shape[0] {
            return Err(shape(format!(
                "outer slice {index} of tensor with shape {:?}",
                self.shape
            )));
        }
        let inner: Vec<usize> = self.shape[1..].to_vec();
        let n: usize = inner.iter().product();
        Ok(Tensor {
            shape: inner,
            data: self.data[index * n..(index + 1) * n].to_vec(),
        })
    }

    /// Stacks equally shaped tensors along a new outermost axis.
    pub fn stack(parts: &[Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| invalid("cannot stack zero tensors"))?;
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(&first.shape);
        let mut data = Vec::with_capacity(first.len() * parts.len());
        for p in parts {
            if p.shape != first.shape {
                return Err(shape_mismatch_stack(&first.shape, &p.shape));
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Tensor { shape, data })
    }

    /// Swaps the two outermost axes: `(A, B, rest...)` to `(B, A, rest...)`.
    pub fn swap_outer_axes(&self) -> Result<Self> {
        if self.shape.len() < 2 {
            return Err(shape("swap_outer_axes needs rank >= 2"));
        }
        let (a, b) = (self.shape[0], self.shape[1]);
        let inner: usize = self.shape[2..].iter().product();
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..b {
            for i in 0..a {
                let start = (i * b + j) * inner;
                data.extend_from_slice(&self.data[start..start + inner]);
            }
        }
        let mut shape = self.shape.clone();
        shape.swap(0, 1);
        Ok(Tensor { shape, data })
    }
}

fn checked_volume(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(shape_err(shape, 0));
    }
    let mut n = 1usize;
    for &e in shape {
        if e == 0 {
            return Err(invalid(format!("zero extent in shape {shape:?}")));
        }
        n = n
            .checked_mul(e)
            .ok_or_else(|| invalid(format!("shape {shape:?} overflows")))?;
    }
    Ok(n)
}

fn shape_err(shape: &[usize], len: usize) -> crate::Error {
    if shape.is_empty() {
        invalid("tensor shape must be non-empty")
    } else {
        crate::error::shape(format!("shape {shape:?} does not hold {len} samples"))
    }
}

fn shape_mismatch_stack(a: &[usize], b: &[usize]) -> crate::Error {
    shape(format!("cannot stack {a:?} with {b:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Tensor::<f32>::new(vec![], vec![]).is_err());
        assert!(Tensor::<f32>::new(vec![2, 0], vec![]).is_err());
        assert!(Tensor::<f32>::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(Tensor::<f32>::new(vec![2, 2], vec![0.0; 4]).is_ok());
    }

    #[test]
    fn hadamard_power_examples() {
        let t = Tensor::from_vec(vec![2.0f64, 3.0]).unwrap();
        assert_eq!(t.hadamard_power(1).unwrap().data(), &[2.0, 3.0]);
        assert_eq!(t.hadamard_power(2).unwrap().data(), &[4.0, 9.0]);
        let t = Tensor::from_vec(vec![-1.0f64, 0.5, 2.0]).unwrap();
        let cube: Vec<f64> = t.data().iter().map(|x| x * x * x).collect();
        assert_eq!(t.hadamard_power(3).unwrap().data(), cube.as_slice());
        assert_eq!(cube, vec![-1.0, 0.125, 8.0]);
        assert!(t.hadamard_power(0).is_err());
    }

    #[test]
    fn swap_outer_axes_transposes() {
        let t = Tensor::new(vec![2, 3, 1], (0..6).map(|x| x as f32).collect()).unwrap();
        let s = t.swap_outer_axes().unwrap();
        assert_eq!(s.shape(), &[3, 2, 1]);
        assert_eq!(s.data(), &[0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
        assert_eq!(s.swap_outer_axes().unwrap(), t);
    }

    #[test]
    fn stack_and_slice() {
        let a = Tensor::from_vec(vec![1.0f32, 2.0]).unwrap();
        let b = Tensor::from_vec(vec![3.0f32, 4.0]).unwrap();
        let s = Tensor::stack(&[a.clone(), b]).unwrap();
        assert_eq!(s.shape(), &[2, 2]);
        assert_eq!(s.outer_slice(0).unwrap(), a);
        assert!(s.outer_slice(2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn power_splits_over_hadamard(
                xs in proptest::collection::vec(-6i32..6, 1..20),
                d1 in 1u32..4,
                d2 in 1u32..4,
            ) {
                let t = Tensor::from_vec(xs.iter().map(|&x| x as f64).collect()).unwrap();
                let lhs = t.hadamard_power(d1 + d2).unwrap();
                let rhs = t.hadamard_power(d1).unwrap().hadamard(&t.hadamard_power(d2).unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
