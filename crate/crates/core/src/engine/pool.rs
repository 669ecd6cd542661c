//! Non-overlapping max pooling over the spatial axes of a `(C, spatial...)`
//! tensor. Trailing samples that do not fill a window are dropped.

use crate::error::{invalid, shape, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxPool {
    /// Window extent per spatial axis; 1 leaves an axis untouched.
    pub window: Vec<usize>,
}

impl MaxPool {
    pub fn new(window: Vec<usize>) -> Result<Self> {
        if window.is_empty() || window.len() > 3 || window.contains(&0) {
            return Err(invalid(format!("bad pooling window {window:?}")));
        }
        Ok(MaxPool { window })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != self.window.len() + 1 {
            return Err(shape(format!(
                "pool {:?} applied to {input:?}",
                self.window
            )));
        }
        let mut out = vec![input[0]];
        for (&n, &k) in input[1..].iter().zip(&self.window) {
            if n < k {
                return Err(shape(format!(
                    "pool {:?} exceeds input {input:?}",
                    self.window
                )));
            }
            out.push(n / k);
        }
        Ok(out)
    }

    /// Pooled output plus the flat input index each output sample came from.
    pub(crate) fn forward_indexed<T: Scalar>(
        &self,
        x: &Tensor<T>,
    ) -> Result<(Tensor<T>, Vec<usize>)> {
        let out_shape = self.output_shape(x.shape())?;
        // lift to (C, a, b, c)
        let lift = |s: &[usize]| {
            let mut v = vec![s[0]];
            v.extend(std::iter::repeat_n(1, 4 - s.len()));
            v.extend_from_slice(&s[1..]);
            v
        };
        let is = lift(x.shape());
        let os = lift(&out_shape);
        let mut w = vec![1; 3 - self.window.len()];
        w.extend_from_slice(&self.window);
        let data = x.data();
        let mut out = Vec::with_capacity(out_shape.iter().product());
        let mut arg = Vec::with_capacity(out.capacity());
        for c in 0..os[0] {
            for a in 0..os[1] {
                for b in 0..os[2] {
                    for e in 0..os[3] {
                        let mut best = usize::MAX;
                        for da in 0..w[0] {
                            for db in 0..w[1] {
                                for de in 0..w[2] {
                                    let idx = ((c * is[1] + a * w[0] + da) * is[2] + b * w[1] + db)
                                        * is[3]
                                        + e * w[2]
                                        + de;
                                    // first maximum in scan order wins
                                    if best == usize::MAX || data[idx] > data[best] {
                                        best = idx;
                                    }
                                }
                            }
                        }
                        out.push(data[best]);
                        arg.push(best);
                    }
                }
            }
        }
        Ok((Tensor::new(out_shape, out)?, arg))
    }

    pub fn forward<T: Scalar>(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_indexed(x)?.0)
    }

    pub(crate) fn backward<T: Scalar>(
        input_shape: &[usize],
        argmax: &[usize],
        grad_out: &Tensor<T>,
    ) -> Result<Tensor<T>> {
        let mut g = Tensor::zeros(input_shape)?;
        let gd = g.data_mut();
        for (&i, &v) in argmax.iter().zip(grad_out.data()) {
            gd[i] += v;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_2d() {
        let p = MaxPool::new(vec![2, 2]).unwrap();
        let x = Tensor::new(
            vec![1, 2, 5],
            vec![1.0, 5.0, 2.0, 0.0, 9.0, 3.0, 4.0, 8.0, 7.0, 9.0],
        )
        .unwrap();
        let (y, arg) = p.forward_indexed(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2]);
        assert_eq!(y.data(), &[5.0, 8.0]);
        assert_eq!(arg, vec![1, 7]);
        let g = MaxPool::backward(
            x.shape(),
            &arg,
            &Tensor::new(vec![1, 1, 2], vec![1.0, 2.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            g.data(),
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0]
        );
    }

    #[test]
    fn unit_axis_passes_through() {
        let p = MaxPool::new(vec![1, 2, 2]).unwrap();
        let x = Tensor::<f32>::new(vec![2, 3, 2, 2], (0..24).map(|v| v as f32).collect()).unwrap();
        let y = p.forward(&x).unwrap();
        assert_eq!(y.shape(), &[2, 3, 1, 1]);
        assert_eq!(y.data(), &[3.0, 7.0, 11.0, 15.0, 19.0, 23.0]);
    }

    #[test]
    fn rejects_mismatched_rank() {
        let p = MaxPool::new(vec![2]).unwrap();
        assert!(p
            .forward(&Tensor::<f32>::zeros(&[1, 2, 2]).unwrap())
            .is_err());
        assert!(MaxPool::new(vec![0]).is_err());
    }
}
