//! Valid (unpadded, stride 1) cross-correlation over 1, 2 or 3 spatial axes
//! and its two adjoints.
//!
//! Every rank is lifted to three spatial axes by prepending unit extents so a
//! single row-oriented kernel serves all cases. The innermost loops are
//! contiguous `axpy`/`dot` over the last axis.

use super::{Scalar, Tensor};
use crate::error::{invalid, shape, Result};

fn lift(spatial: &[usize]) -> [usize; 3] {
    let mut out = [1usize; 3];
    out[3 - spatial.len()..].copy_from_slice(spatial);
    out
}

fn check_rank(rank: usize) -> Result<()> {
    if !(1..=3).contains(&rank) {
        return Err(invalid(format!(
            "spatial rank must be 1, 2 or 3, got {rank}"
        )));
    }
    Ok(())
}

#[inline]
fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    let mut acc = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        acc += a * b;
    }
    acc
}

struct Dims {
    cin: usize,
    cout: usize,
    input: [usize; 3],
    kernel: [usize; 3],
    output: [usize; 3],
}

impl Dims {
    fn resolve(input: &[usize], kernel: &[usize], rank: usize) -> Result<Dims> {
        check_rank(rank)?;
        if input.len() != rank + 1 {
            return Err(shape(format!(
                "input shape {input:?} is not (C, {rank} spatial axes)"
            )));
        }
        if kernel.len() != rank + 2 {
            return Err(shape(format!(
                "kernel bank shape {kernel:?} is not (C_out, C_in, {rank} kernel axes)"
            )));
        }
        if kernel[1] != input[0] {
            return Err(shape(format!(
                "kernel expects {} input channels, input has {}",
                kernel[1], input[0]
            )));
        }
        let i = lift(&input[1..]);
        let k = lift(&kernel[2..]);
        let mut o = [0usize; 3];
        for a in 0..3 {
            if k[a] > i[a] {
                return Err(shape(format!(
                    "kernel extents {:?} exceed input extents {:?}",
                    &kernel[2..],
                    &input[1..]
                )));
            }
            o[a] = i[a] - k[a] + 1;
        }
        Ok(Dims {
            cin: input[0],
            cout: kernel[0],
            input: i,
            kernel: k,
            output: o,
        })
    }

    fn in_len(&self) -> usize {
        self.input.iter().product()
    }
    fn out_len(&self) -> usize {
        self.output.iter().product()
    }
    fn k_len(&self) -> usize {
        self.kernel.iter().product()
    }

    fn output_shape(&self, rank: usize) -> Vec<usize> {
        let mut s = vec![self.cout];
        s.extend_from_slice(&self.output[3 - rank..]);
        s
    }
}

/// Cross-correlates `input` `(C_in, s...)` with `kernel` `(C_out, C_in, k...)`,
/// summing over input channels. Output is `(C_out, s - k + 1...)`.
pub fn convolve_valid<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    rank: usize,
) -> Result<Tensor<T>> {
    let d = Dims::resolve(input.shape(), kernel.shape(), rank)?;
    let mut out = vec![T::zero(); d.cout * d.out_len()];
    let [_, iy, ix] = d.input;
    let [kz, ky, kx] = d.kernel;
    let [oz, oy, ox] = d.output;
    let (x, w) = (input.data(), kernel.data());
    for o in 0..d.cout {
        let out_o = &mut out[o * d.out_len()..(o + 1) * d.out_len()];
        for c in 0..d.cin {
            let in_c = &x[c * d.in_len()..(c + 1) * d.in_len()];
            let w_oc = &w[(o * d.cin + c) * d.k_len()..(o * d.cin + c + 1) * d.k_len()];
            for a in 0..kz {
                for b in 0..ky {
                    for e in 0..kx {
                        let wv = w_oc[(a * ky + b) * kx + e];
                        for z in 0..oz {
                            for y in 0..oy {
                                let orow = &mut out_o[(z * oy + y) * ox..][..ox];
                                let irow = &in_c[((z + a) * iy + y + b) * ix + e..][..ox];
                                axpy(wv, irow, orow);
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(d.output_shape(rank), out)
}

/// Gradient of a valid cross-correlation with respect to its kernel bank:
/// `g[o][c][k] = Σ_p grad_out[o][p] · input[c][p + k]`.
pub fn correlate_kernel_grad<T: Scalar>(
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
    rank: usize,
    kernel_extents: &[usize],
) -> Result<Tensor<T>> {
    let cout = grad_out.shape()[0];
    let mut kshape = vec![cout, input.shape().first().copied().unwrap_or(0)];
    kshape.extend_from_slice(kernel_extents);
    let d = Dims::resolve(input.shape(), &kshape, rank)?;
    if grad_out.shape() != d.output_shape(rank).as_slice() {
        return Err(shape(format!(
            "upstream gradient {:?} does not match output {:?}",
            grad_out.shape(),
            d.output_shape(rank)
        )));
    }
    let mut g = vec![T::zero(); d.cout * d.cin * d.k_len()];
    let [_, iy, ix] = d.input;
    let [kz, ky, kx] = d.kernel;
    let [oz, oy, ox] = d.output;
    let (x, go) = (input.data(), grad_out.data());
    for o in 0..d.cout {
        let go_o = &go[o * d.out_len()..(o + 1) * d.out_len()];
        for c in 0..d.cin {
            let in_c = &x[c * d.in_len()..(c + 1) * d.in_len()];
            let g_oc = &mut g[(o * d.cin + c) * d.k_len()..(o * d.cin + c + 1) * d.k_len()];
            for a in 0..kz {
                for b in 0..ky {
                    for e in 0..kx {
                        let mut acc = T::zero();
                        for z in 0..oz {
                            for y in 0..oy {
                                let grow = &go_o[(z * oy + y) * ox..][..ox];
                                let irow = &in_c[((z + a) * iy + y + b) * ix + e..][..ox];
                                acc += dot(grow, irow);
                            }
                        }
                        g_oc[(a * ky + b) * kx + e] = acc;
                    }
                }
            }
        }
    }
    Tensor::new(kshape, g)
}

/// Gradient of a valid cross-correlation with respect to its input (the
/// full convolution of `grad_out` with the kernel bank).
pub fn convolve_input_grad<T: Scalar>(
    grad_out: &Tensor<T>,
    kernel: &Tensor<T>,
    rank: usize,
    input_extents: &[usize],
) -> Result<Tensor<T>> {
    let mut ishape = vec![kernel.shape().get(1).copied().unwrap_or(0)];
    ishape.extend_from_slice(input_extents);
    let d = Dims::resolve(&ishape, kernel.shape(), rank)?;
    if grad_out.shape() != d.output_shape(rank).as_slice() {
        return Err(shape(format!(
            "upstream gradient {:?} does not match output {:?}",
            grad_out.shape(),
            d.output_shape(rank)
        )));
    }
    let mut g = vec![T::zero(); d.cin * d.in_len()];
    let [_, iy, ix] = d.input;
    let [kz, ky, kx] = d.kernel;
    let [oz, oy, ox] = d.output;
    let (w, go) = (kernel.data(), grad_out.data());
    for o in 0..d.cout {
        let go_o = &go[o * d.out_len()..(o + 1) * d.out_len()];
        for c in 0..d.cin {
            let g_c = &mut g[c * d.in_len()..(c + 1) * d.in_len()];
            let w_oc = &w[(o * d.cin + c) * d.k_len()..(o * d.cin + c + 1) * d.k_len()];
            for a in 0..kz {
                for b in 0..ky {
                    for e in 0..kx {
                        let wv = w_oc[(a * ky + b) * kx + e];
                        for z in 0..oz {
                            for y in 0..oy {
                                let grow = &go_o[(z * oy + y) * ox..][..ox];
                                let irow = &mut g_c[((z + a) * iy + y + b) * ix + e..][..ox];
                                axpy(wv, grow, irow);
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(ishape, g)
}
