//! Least-squares degree reduction of scalar polynomials on `[-A, A]`.
//!
//! The polynomial is rescaled to `[-1, 1]`, expanded in Legendre
//! polynomials (orthogonal under the uniform measure there), truncated, and
//! mapped back. Truncating an orthogonal expansion is the L2 projection.

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    /// `coeffs[k]` multiplies `x^k`; the declared degree is `len − 1`.
    pub coeffs: Vec<f64>,
    pub half_width: f64,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>, half_width: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid(
                "a polynomial needs at least a constant coefficient",
            ));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid(format!(
                "interval half-width {half_width} must be positive"
            )));
        }
        Ok(Poly { coeffs, half_width })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Mean squared difference to `other` over the interval, exact for
    /// polynomials.
    pub fn mean_squared_distance(&self, other: &Poly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let diff: Vec<f64> = (0..n)
            .map(|k| self.coeffs.get(k).unwrap_or(&0.0) - other.coeffs.get(k).unwrap_or(&0.0))
            .collect();
        // scale to t ∈ [-1, 1]: coefficient k picks up A^k
        let a = self.half_width;
        let scaled: Vec<f64> = diff
            .iter()
            .enumerate()
            .map(|(k, &c)| c * a.powi(k as i32))
            .collect();
        let mut acc = 0.0;
        for (i, &ci) in scaled.iter().enumerate() {
            for (j, &cj) in scaled.iter().enumerate() {
                acc += ci * cj * monomial_mean(i + j);
            }
        }
        acc
    }
}

/// `(1/2)∫_{-1}^{1} t^m dt`.
fn monomial_mean(m: usize) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        1.0 / (m + 1) as f64
    }
}

/// Monomial coefficients of the Legendre polynomials `P_0..=P_n`.
fn legendre(n: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![1.0]];
    if n >= 1 {
        p.push(vec![0.0, 1.0]);
    }
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) t P_k − k P_{k−1}
        let mut next = vec![0.0; k + 2];
        for (i, &c) in p[k].iter().enumerate() {
            next[i + 1] += (2 * k + 1) as f64 * c;
        }
        for (i, &c) in p[k - 1].iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        for c in &mut next {
            *c /= (k + 1) as f64;
        }
        p.push(next);
    }
    p
}

/// Matrix `M` (row-major, `(target+1) × (degree+1)`) with
/// `reduced = M · coeffs` for polynomials on `[-A, A]`.
pub fn projection_matrix(degree: usize, target: usize, half_width: f64) -> Result<Vec<Vec<f64>>> {
    if target < 1 {
        return Err(invalid("target degree must be >= 1"));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(invalid(format!(
            "interval half-width {half_width} must be positive"
        )));
    }
    let keep = target.min(degree);
    let leg = legendre(degree);
    let a = half_width;
    let mut m = vec![vec![0.0; degree + 1]; target + 1];
    for col in 0..=degree {
        // q(t) = A^col · t^col; Legendre coefficient n = (2n+1)·mean(q·P_n)
        let scale = a.powi(col as i32);
        let mut reduced_t = vec![0.0; keep + 1];
        for n in 0..=keep {
            let inner: f64 = leg[n]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * monomial_mean(i + col))
                .sum();
            let an = (2 * n + 1) as f64 * inner * scale;
            for (i, &c) in leg[n].iter().enumerate() {
                reduced_t[i] += an * c;
            }
        }
        for (k, &v) in reduced_t.iter().enumerate() {
            m[k][col] = v / a.powi(k as i32);
        }
    }
    Ok(m)
}

/// L2-optimal polynomial of declared degree `target` on `[-A, A]`. A target
/// at or above the current degree returns the coefficients unchanged
/// (zero-padded to the declared degree).
pub fn reduce_poly(p: &Poly, target: usize) -> Result<Poly> {
    if target < 1 {
        return Err(invalid("target degree must be >= 1"));
    }
    if target >= p.degree() {
        let mut coeffs = p.coeffs.clone();
        coeffs.resize(target + 1, 0.0);
        return Ok(Poly {
            coeffs,
            half_width: p.half_width,
        });
    }
    let m = projection_matrix(p.degree(), target, p.half_width)?;
    let coeffs = m
        .iter()
        .map(|row| row.iter().zip(&p.coeffs).map(|(a, b)| a * b).sum())
        .collect();
    Ok(Poly {
        coeffs,
        half_width: p.half_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn legendre_rows() {
        let p = legendre(3);
        assert_eq!(p[2], vec![-0.5, 0.0, 1.5]);
        assert_eq!(p[3], vec![0.0, -1.5, 0.0, 2.5]);
    }

    #[test]
    fn same_degree_is_identity() {
        let p = Poly::new(vec![1.0, -2.0, 3.0], 2.5).unwrap();
        assert_eq!(reduce_poly(&p, 2).unwrap(), p);
    }

    #[test]
    fn square_to_constant() {
        let p = Poly::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        let r = reduce_poly(&p, 1).unwrap();
        assert!(close(&r.coeffs, &[1.0 / 3.0, 0.0], 1e-15));
    }

    #[test]
    fn cubic_to_line() {
        let p = Poly::new(vec![0.0, 0.0, 0.0, 2.0], 1.0).unwrap();
        let r = reduce_poly(&p, 1).unwrap();
        assert!(close(&r.coeffs, &[0.0, 1.2], 1e-15));
    }

    #[test]
    fn wider_interval_scales() {
        // x² on [-A, A] → A²/3
        let p = Poly::new(vec![0.0, 0.0, 1.0], 3.0).unwrap();
        assert!(close(
            &reduce_poly(&p, 1).unwrap().coeffs,
            &[3.0, 0.0],
            1e-12
        ));
    }

    #[test]
    fn rejects_degree_zero() {
        assert!(reduce_poly(&Poly::new(vec![1.0, 1.0], 1.0).unwrap(), 0).is_err());
        assert!(Poly::new(vec![1.0], 0.0).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = Poly> {
        (prop::collection::vec(-3.0f64..3.0, 2..10), 0.05f64..4.0)
            .prop_map(|(c, a)| Poly::new(c, a).unwrap())
    }

    proptest! {
        #[test]
        fn idempotent(p in arb_poly(), t in 1usize..9) {
            let t = t.min(p.degree().max(1));
            let once = reduce_poly(&p, t).unwrap();
            let twice = reduce_poly(&once, t).unwrap();
            let scale = once.coeffs.iter().enumerate()
                .map(|(k, c)| c.abs() * p.half_width.powi(k as i32)).fold(1.0, f64::max);
            for (k, (a, b)) in once.coeffs.iter().zip(&twice.coeffs).enumerate() {
                prop_assert!((a - b).abs() * p.half_width.powi(k as i32) <= 1e-12 * scale);
            }
        }

        #[test]
        fn nested_projections_agree(p in arb_poly(), t in 1usize..9, u in 1usize..9) {
            let d = p.degree();
            prop_assume!(d >= 2);
            let (lo, hi) = (t.min(u).min(d - 1).max(1), t.max(u).min(d));
            let direct = reduce_poly(&p, lo).unwrap();
            let staged = reduce_poly(&reduce_poly(&p, hi).unwrap(), lo).unwrap();
            for (k, (a, b)) in direct.coeffs.iter().zip(&staged.coeffs).enumerate() {
                prop_assert!((a - b).abs() * p.half_width.powi(k as i32) <= 1e-9);
            }
        }

        #[test]
        fn beats_random_candidates(p in arb_poly(), t in 1usize..9, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let t = t.min(p.degree().max(1));
            let best = reduce_poly(&p, t).unwrap();
            let err = p.mean_squared_distance(&best);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let cand = Poly::new(
                    best.coeffs.iter().enumerate()
                        .map(|(k, c)| c + rng.gen_range(-0.5..0.5) / p.half_width.powi(k as i32))
                        .collect(),
                    p.half_width,
                ).unwrap();
                prop_assert!(err <= p.mean_squared_distance(&cand) + 1e-12);
            }
        }
    }
}
