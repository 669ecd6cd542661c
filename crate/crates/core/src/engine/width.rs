//! Inner-layer width giving a target parameter count.
//!
//! The count is modelled as `a·N² + b·N + c` with `a = 2R3 + R2`,
//! `b = 4(8R3 + 16R2 + 1)` and `c = 96(R3 + 1)`, where `R2`, `R3` are the
//! 2D and 3D receptive fields.

use crate::error::{Error, Result};

fn coefficients(r2: u64, r3: u64) -> (f64, f64, f64) {
    let (r2, r3) = (r2 as f64, r3 as f64);
    (
        2.0 * r3 + r2,
        4.0 * (8.0 * r3 + 16.0 * r2 + 1.0),
        96.0 * (r3 + 1.0),
    )
}

/// Parameter count of a network with inner width `n`.
pub fn equivalent_param_count(n: u64, r2: u64, r3: u64) -> u64 {
    let (a, b, c) = (2 * r3 + r2, 4 * (8 * r3 + 16 * r2 + 1), 96 * (r3 + 1));
    a * n * n + b * n + c
}

/// Positive root of the width quadratic, rounded to the nearest integer.
pub fn solve_equivalent_width(n_target: u64, r2: u64, r3: u64) -> Result<u64> {
    let (a, b, c) = coefficients(r2, r3);
    let c = c - n_target as f64;
    if c >= 0.0 {
        return Err(Error::Infeasible(format!(
            "target {n_target} does not exceed the width-independent count {}",
            96 * (r3 + 1)
        )));
    }
    // c < 0 and a, b > 0: exactly one positive root
    let root = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    Ok(root.round() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reported_width() {
        assert_eq!(solve_equivalent_width(257408, 9, 27).unwrap(), 53);
    }

    #[test]
    fn forward_substitution() {
        assert_eq!(equivalent_param_count(10, 9, 27), 23428);
        assert_eq!(solve_equivalent_width(23428, 9, 27).unwrap(), 10);
    }

    #[test]
    fn boundary_is_infeasible() {
        assert!(matches!(
            solve_equivalent_width(96 * 28, 9, 27),
            Err(Error::Infeasible(_))
        ));
    }

    proptest! {
        #[test]
        fn round_trip(n in 1u64..=128, r2 in 1u64..=49, r3 in 1u64..=343) {
            prop_assert_eq!(solve_equivalent_width(equivalent_param_count(n, r2, r3), r2, r3).unwrap(), n);
        }
    }
}
