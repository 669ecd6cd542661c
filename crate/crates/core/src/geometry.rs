//! Closed-form mathematics of the variably overlapping sliding window.
//!
//! An image of height `H` (and width `W = γH`) is covered by `M = n²` windows
//! of height `h` (width `γh`) arranged on an `n × n` grid. The overlap `α`
//! between neighbouring windows is solved per image so that exactly `M`
//! windows tile it. All quantities are `f64`; feasibility comparisons carry a
//! relative tolerance of [`TOLERANCE`].

use std::fmt;

use crate::error::{invalid, Error, Result};

pub const TOLERANCE: f64 = 1e-9;

fn slack(a: f64, b: f64) -> f64 {
    TOLERANCE * 1f64.max(a.abs()).max(b.abs())
}

/// `a ≥ b` up to the geometry tolerance.
pub fn approx_ge(a: f64, b: f64) -> bool {
    a >= b - slack(a, b)
}

/// `a ≤ b` up to the geometry tolerance.
pub fn approx_le(a: f64, b: f64) -> bool {
    approx_ge(b, a)
}

/// Integer square root of a window count; errors unless `M` is a perfect
/// square.
pub fn grid_side(m: u32) -> Result<u32> {
    if m == 0 {
        return Err(invalid("window count M must be positive"));
    }
    let r = (m as f64).sqrt().round() as u32;
    if r * r != m {
        return Err(invalid(format!(
            "window count M = {m} is not a perfect square"
        )));
    }
    Ok(r)
}

fn side_at_least_two(m: u32) -> Result<f64> {
    let n = grid_side(m)?;
    if n < 2 {
        return Err(invalid(format!("window count M = {m} needs sqrt(M) >= 2")));
    }
    Ok(n as f64)
}

fn check_overlap_range(alpha_min: f64, alpha_max: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha_min) || !(0.0..1.0).contains(&alpha_max) {
        return Err(invalid(format!(
            "overlaps must lie in [0, 1): alpha_min = {alpha_min}, alpha_max = {alpha_max}"
        )));
    }
    if alpha_min > alpha_max {
        return Err(invalid(format!(
            "alpha_min = {alpha_min} exceeds alpha_max = {alpha_max}"
        )));
    }
    Ok(())
}

/// Validated window geometry shared by every image of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySpec {
    pub m: u32,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Window height in pixels.
    pub h: u32,
    /// Window aspect ratio; window width is `γh`.
    pub gamma: f64,
    pub h_min_clamp: u32,
    pub h_max_clamp: u32,
}

impl GeometrySpec {
    pub fn validate(&self) -> Result<()> {
        let side = grid_side(self.m)?;
        check_overlap_range(self.alpha_min, self.alpha_max)?;
        if self.h == 0 {
            return Err(invalid("window height h must be positive"));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(invalid(format!("gamma = {} must be positive", self.gamma)));
        }
        if self.h_min_clamp == 0 || self.h_min_clamp > self.h_max_clamp {
            return Err(invalid(format!(
                "height clamps must satisfy 0 < h_min_clamp <= h_max_clamp, got [{}, {}]",
                self.h_min_clamp, self.h_max_clamp
            )));
        }
        if self.h > self.h_min_clamp {
            return Err(invalid(format!(
                "window height h = {} exceeds h_min_clamp = {}",
                self.h, self.h_min_clamp
            )));
        }
        if side == 1 && (self.h_min_clamp != self.h || self.h_max_clamp != self.h) {
            return Err(invalid(
                "M = 1 is only valid when every image height equals h",
            ));
        }
        Ok(())
    }

    /// Window width `γh`, rounded to whole pixels.
    pub fn window_width(&self) -> u32 {
        (self.gamma * self.h as f64).round() as u32
    }
}

/// Number of windows of size `(h, w)` with overlap `α` needed to cover an
/// `(H, W)` image. The caller checks integrality.
pub fn window_count(big_h: f64, big_w: f64, h: f64, w: f64, alpha: f64) -> Result<f64> {
    if !(h > 0.0 && w > 0.0) || h > big_h || w > big_w {
        return Err(invalid(format!(
            "window ({h}, {w}) must be positive and fit inside image ({big_h}, {big_w})"
        )));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("overlap {alpha} outside [0, 1)")));
    }
    let step = 1.0 - alpha;
    Ok(((big_h - h) / (step * h) + 1.0) * ((big_w - w) / (step * w) + 1.0))
}

/// `true` iff `h·w·M ≥ H·W`, the condition for a non-negative overlap.
pub fn feasibility_check(h: f64, w: f64, m: f64, big_h: f64, big_w: f64) -> bool {
    h * w * m >= big_h * big_w
}

/// Overlap for an arbitrary aspect ratio: the root in `[0, 1)` of
/// `hw(M−1)(1−α)² − ((H−h)w + (W−w)h)(1−α) − (H−h)(W−w) = 0`.
pub fn overlap_general(big_h: f64, big_w: f64, h: f64, w: f64, m: u32) -> Result<f64> {
    if m < 2 {
        return Err(invalid("overlap_general needs M > 1"));
    }
    if !(h > 0.0 && w > 0.0) || big_h < h || big_w < w || (big_h == h && big_w == w) {
        return Err(invalid(format!(
            "window ({h}, {w}) must be strictly smaller than image ({big_h}, {big_w})"
        )));
    }
    let m = m as f64;
    if !feasibility_check(h, w, m, big_h, big_w) {
        return Err(Error::Infeasible(format!(
            "h·w·M = {} < H·W = {}",
            h * w * m,
            big_h * big_w
        )));
    }
    let b = (big_h - h) * w + (big_w - w) * h;
    let disc = b * b + 4.0 * h * w * (big_h - h) * (big_w - w) * (m - 1.0);
    let one_minus = (b + disc.sqrt()) / (2.0 * h * w * (m - 1.0));
    Ok((1.0 - one_minus).max(0.0))
}

/// Overlap when image and window share an aspect ratio:
/// `α = (√M·h − H) / (h(√M − 1))`.
pub fn overlap_square(big_h: f64, h: f64, m: u32) -> Result<f64> {
    let side = grid_side(m)? as f64;
    if !(h > 0.0) || !approx_ge(big_h, h) {
        return Err(invalid(format!(
            "image height {big_h} is below window height {h}"
        )));
    }
    if side == 1.0 {
        if approx_le(big_h, h) {
            return Ok(0.0);
        }
        return Err(Error::Infeasible(format!(
            "M = 1 requires H = h, got H = {big_h}, h = {h}"
        )));
    }
    if !approx_le(big_h, side * h) {
        return Err(Error::Infeasible(format!(
            "H = {big_h} exceeds sqrt(M)·h = {}: overlap would be negative",
            side * h
        )));
    }
    let alpha = (side * h - big_h) / (h * (side - 1.0));
    Ok(alpha.clamp(0.0, 1.0 - f64::EPSILON))
}

/// Closed interval of admissible window heights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeightRange {
    pub lo: f64,
    pub hi: f64,
}

impl HeightRange {
    /// Smallest integer height inside the range, if any.
    pub fn suggest(&self) -> Option<u32> {
        let c = self.lo.ceil();
        let c = if approx_le(c - 1.0, self.lo) && approx_ge(c - 1.0, self.lo) {
            c - 1.0
        } else {
            c
        };
        (approx_le(c, self.hi) && c >= 1.0).then_some(c as u32)
    }

    pub fn contains(&self, h: f64) -> bool {
        approx_ge(h, self.lo) && approx_le(h, self.hi)
    }
}

/// Window heights that keep every image overlap in `[α_min, α_max]`:
/// `H_max/(√M − α_min(√M−1)) ≤ h ≤ H_min/(√M − α_max(√M−1))`.
pub fn feasible_window_height_range(
    h_min: f64,
    h_max: f64,
    m: u32,
    alpha_min: f64,
    alpha_max: f64,
) -> Result<HeightRange> {
    let side = side_at_least_two(m)?;
    check_overlap_range(alpha_min, alpha_max)?;
    if !(h_min > 0.0) || h_min > h_max {
        return Err(invalid(format!(
            "need 0 < H_min <= H_max, got [{h_min}, {h_max}]"
        )));
    }
    let lo = h_max / (side - alpha_min * (side - 1.0));
    let hi = h_min / (side - alpha_max * (side - 1.0));
    if !approx_le(lo, hi) {
        return Err(Error::Infeasible(format!(
            "empty window-height interval [{lo}, {hi}]"
        )));
    }
    Ok(HeightRange { lo, hi })
}

/// Bound on `H̃_max / H̃_min` for clamp heights compatible with
/// `(M, α_min, α_max)`.
pub fn max_height_ratio(m: u32, alpha_min: f64, alpha_max: f64) -> Result<f64> {
    let side = side_at_least_two(m)?;
    check_overlap_range(alpha_min, alpha_max)?;
    Ok((side - alpha_min * (side - 1.0)) / (side - alpha_max * (side - 1.0)))
}

/// Maximum number of windows covering one pixel, `1/(1−α)²`.
pub fn oversampling_factor(alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("overlap {alpha} outside [0, 1)")));
    }
    Ok(1.0 / ((1.0 - alpha) * (1.0 - alpha)))
}

/// The order in which `M`, `α_min` and `α_max` are fixed. Each order carries
/// its own chain of admissibility conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParameterOrder {
    MThenMinThenMax,
    MThenMaxThenMin,
    MinThenMThenMax,
    MinThenMaxThenM,
    MaxThenMThenMin,
    MaxThenMinThenM,
}

impl ParameterOrder {
    pub const ALL: [ParameterOrder; 6] = [
        ParameterOrder::MThenMinThenMax,
        ParameterOrder::MThenMaxThenMin,
        ParameterOrder::MinThenMThenMax,
        ParameterOrder::MinThenMaxThenM,
        ParameterOrder::MaxThenMThenMin,
        ParameterOrder::MaxThenMinThenM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParameterOrder::MThenMinThenMax => "m,alpha-min,alpha-max",
            ParameterOrder::MThenMaxThenMin => "m,alpha-max,alpha-min",
            ParameterOrder::MinThenMThenMax => "alpha-min,m,alpha-max",
            ParameterOrder::MinThenMaxThenM => "alpha-min,alpha-max,m",
            ParameterOrder::MaxThenMThenMin => "alpha-max,m,alpha-min",
            ParameterOrder::MaxThenMinThenM => "alpha-max,alpha-min,m",
        }
    }
}

impl fmt::Display for ParameterOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ParameterOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParameterOrder::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| invalid(format!("unknown parameter order '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    AtLeast,
    AtMost,
}

/// One inequality of an admissibility chain, evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
}

impl Condition {
    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::AtLeast => approx_ge(self.lhs, self.rhs),
            Relation::AtMost => approx_le(self.lhs, self.rhs),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        };
        write!(f, "{} ({} {op} {})", self.name, self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OrderCheck {
    Pass,
    Fail(Condition),
}

impl OrderCheck {
    pub fn passed(&self) -> bool {
        matches!(self, OrderCheck::Pass)
    }
}

fn at_least(name: &'static str, lhs: f64, rhs: f64) -> Condition {
    Condition {
        name,
        lhs,
        relation: Relation::AtLeast,
        rhs,
    }
}

fn at_most(name: &'static str, lhs: f64, rhs: f64) -> Condition {
    Condition {
        name,
        lhs,
        relation: Relation::AtMost,
        rhs,
    }
}

/// `√M ≥ num/den` where `den ≥ 0` has already been established. A vanishing
/// denominator leaves the inequality `√M·0 ≥ num`, which holds for every `M`
/// iff `num ≤ 0`.
fn side_bound(name: &'static str, side: f64, num: f64, den: f64) -> Condition {
    if den > slack(num, den) {
        at_least(name, side, num / den)
    } else if num <= slack(num, den) {
        at_least(name, side, 1.0)
    } else {
        at_least(name, side, f64::INFINITY)
    }
}

/// Checks the admissibility chain that matches `order`, returning the first
/// violated inequality.
pub fn validate_parameter_order(
    order: ParameterOrder,
    h_min: f64,
    h_max: f64,
    m: u32,
    alpha_min: f64,
    alpha_max: f64,
) -> Result<OrderCheck> {
    let side = side_at_least_two(m)?;
    check_overlap_range(alpha_min, alpha_max)?;
    if !(h_min > 0.0) || h_min > h_max {
        return Err(invalid(format!(
            "need 0 < H_min <= H_max, got [{h_min}, {h_max}]"
        )));
    }
    let up = h_max / h_min;
    let down = h_min / h_max;
    let ratio = side / (side - 1.0);
    let chain = match order {
        ParameterOrder::MThenMinThenMax => vec![
            at_least("sqrt(M) >= H_max/H_min", side, up),
            at_most(
                "alpha_min <= H_max/H_min + (1 - H_max/H_min) sqrt(M)/(sqrt(M)-1)",
                alpha_min,
                up + (1.0 - up) * ratio,
            ),
            at_least(
                "alpha_max >= (1 - H_min/H_max) sqrt(M)/(sqrt(M)-1) + (H_min/H_max) alpha_min",
                alpha_max,
                (1.0 - down) * ratio + down * alpha_min,
            ),
        ],
        ParameterOrder::MThenMaxThenMin => vec![
            at_least("sqrt(M) >= H_max/H_min", side, up),
            at_least(
                "alpha_max >= (1 - H_min/H_max) sqrt(M)/(sqrt(M)-1)",
                alpha_max,
                (1.0 - down) * ratio,
            ),
            at_most(
                "alpha_min <= (H_max/H_min) alpha_max + (1 - H_max/H_min) sqrt(M)/(sqrt(M)-1)",
                alpha_min,
                up * alpha_max + (1.0 - up) * ratio,
            ),
        ],
        ParameterOrder::MinThenMThenMax => vec![
            at_least(
                "sqrt(M) >= (H_max - H_min alpha_min)/((1 - alpha_min) H_min)",
                side,
                (h_max - h_min * alpha_min) / ((1.0 - alpha_min) * h_min),
            ),
            at_least(
                "alpha_max >= (1 - H_min/H_max) sqrt(M)/(sqrt(M)-1) + (H_min/H_max) alpha_min",
                alpha_max,
                (1.0 - down) * ratio + down * alpha_min,
            ),
        ],
        ParameterOrder::MinThenMaxThenM => {
            let first = at_least(
                "alpha_max >= 1 - (1 - alpha_min) H_min/H_max",
                alpha_max,
                1.0 - (1.0 - alpha_min) * down,
            );
            if !first.holds() {
                return Ok(OrderCheck::Fail(first));
            }
            vec![
                first,
                side_bound(
                    "sqrt(M) >= (H_max alpha_max - H_min alpha_min)/(H_min(1 - alpha_min) - H_max(1 - alpha_max))",
                    side,
                    h_max * alpha_max - h_min * alpha_min,
                    h_min * (1.0 - alpha_min) - h_max * (1.0 - alpha_max),
                ),
            ]
        }
        ParameterOrder::MaxThenMThenMin => {
            let first = at_least("alpha_max >= 1 - H_min/H_max", alpha_max, 1.0 - down);
            if !first.holds() {
                return Ok(OrderCheck::Fail(first));
            }
            vec![
                first,
                side_bound(
                    "sqrt(M) >= H_max alpha_max/(H_min - (1 - alpha_max) H_max)",
                    side,
                    h_max * alpha_max,
                    h_min - (1.0 - alpha_max) * h_max,
                ),
                at_most(
                    "alpha_min <= (H_max/H_min) alpha_max + (1 - H_max/H_min) sqrt(M)/(sqrt(M)-1)",
                    alpha_min,
                    up * alpha_max + (1.0 - up) * ratio,
                ),
            ]
        }
        ParameterOrder::MaxThenMinThenM => {
            let first = at_least("alpha_max >= 1 - H_min/H_max", alpha_max, 1.0 - down);
            let second = at_most(
                "alpha_min <= 1 - (H_max/H_min)(1 - alpha_max)",
                alpha_min,
                1.0 - up * (1.0 - alpha_max),
            );
            if !first.holds() {
                return Ok(OrderCheck::Fail(first));
            }
            if !second.holds() {
                return Ok(OrderCheck::Fail(second));
            }
            vec![
                first,
                second,
                side_bound(
                    "sqrt(M) >= (H_max alpha_max - H_min alpha_min)/(H_min(1 - alpha_min) - H_max(1 - alpha_max))",
                    side,
                    h_max * alpha_max - h_min * alpha_min,
                    h_min * (1.0 - alpha_min) - h_max * (1.0 - alpha_max),
                ),
            ]
        }
    };
    Ok(chain
        .into_iter()
        .find(|c| !c.holds())
        .map_or(OrderCheck::Pass, OrderCheck::Fail))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: f64 = 1e-12;

    #[test]
    fn window_count_examples() {
        assert_eq!(window_count(20., 20., 10., 10., 0.0).unwrap(), 4.0);
        assert!((window_count(15., 15., 10., 10., 0.5).unwrap() - 4.0).abs() < EXACT);
        assert!((window_count(973., 973., 348., 348., 71. / 696.).unwrap() - 9.0).abs() < 1e-9);
        assert!(window_count(10., 10., 11., 5., 0.0).is_err());
    }

    #[test]
    fn overlap_general_examples() {
        assert_eq!(overlap_general(20., 30., 10., 15., 4).unwrap(), 0.0);
        let a = overlap_general(973., 973., 348., 348., 9).unwrap();
        assert!((a - 71. / 696.).abs() < 1e-12);
        let a = overlap_general(836., 836., 348., 348., 9).unwrap();
        let s = overlap_square(836., 348., 9).unwrap();
        assert!((a - s).abs() < 1e-12 && (s - 208. / 696.).abs() < 1e-12);
        assert!(matches!(
            overlap_general(973., 973., 348., 348., 4),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn overlap_square_examples() {
        assert_eq!(overlap_square(1044., 348., 9).unwrap(), 0.0);
        assert!((overlap_square(973., 348., 9).unwrap() - 71. / 696.).abs() < EXACT);
        assert!((overlap_square(418., 348., 9).unwrap() - 626. / 696.).abs() < EXACT);
        assert!(matches!(
            overlap_square(1100., 348., 9),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            overlap_square(300., 348., 9),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(overlap_square(348., 348., 1).unwrap(), 0.0);
        assert!(overlap_square(349., 348., 1).is_err());
    }

    #[test]
    fn height_range_examples() {
        let r = feasible_window_height_range(418., 973., 9, 0.1, 0.9).unwrap();
        assert!((r.lo - 347.5).abs() < 1e-9);
        assert!((r.hi - 418. / 1.2).abs() < 1e-9);
        assert_eq!(r.suggest(), Some(348));
        let r = feasible_window_height_range(600., 600., 9, 0.0, 0.0).unwrap();
        assert!((r.lo - 200.).abs() < EXACT && (r.hi - 200.).abs() < EXACT);
        assert_eq!(r.suggest(), Some(200));
        assert!(matches!(
            feasible_window_height_range(400., 1000., 9, 0.1, 0.9),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn order_examples() {
        for order in ParameterOrder::ALL {
            let c = validate_parameter_order(order, 500., 500., 9, 0.2, 0.4).unwrap();
            assert!(c.passed(), "{order}: {c:?}");
        }
        let order = ParameterOrder::MinThenMaxThenM;
        assert!(validate_parameter_order(order, 418., 973., 9, 0.1, 0.9)
            .unwrap()
            .passed());
        match validate_parameter_order(order, 418., 973., 4, 0.1, 0.9).unwrap() {
            OrderCheck::Fail(c) => {
                assert!(c.name.starts_with("sqrt(M)"));
                assert!((c.rhs - 833.9 / 278.9).abs() < 1e-9);
            }
            OrderCheck::Pass => panic!("M = 4 must fail"),
        }
        assert_eq!(
            "alpha-min,alpha-max,m".parse::<ParameterOrder>().unwrap(),
            ParameterOrder::MinThenMaxThenM
        );
    }

    #[test]
    fn ratio_and_oversampling() {
        assert!((max_height_ratio(9, 0.1, 0.9).unwrap() - 2.8 / 1.2).abs() < EXACT);
        assert!((max_height_ratio(16, 0.3, 0.3).unwrap() - 1.0).abs() < EXACT);
        assert!((418. * max_height_ratio(9, 0.1, 0.9).unwrap() - 975.333_333_333).abs() < 1e-6);
        assert_eq!(oversampling_factor(0.0).unwrap(), 1.0);
        assert_eq!(oversampling_factor(0.5).unwrap(), 4.0);
        assert!(
            (oversampling_factor(626. / 696.).unwrap() - (696.0f64 / 70.0).powi(2)).abs() < 1e-9
        );
        assert!((oversampling_factor(626. / 696.).unwrap() - 98.86).abs() < 0.01);
        assert!(oversampling_factor(1.0).is_err());
    }

    #[test]
    fn feasibility_examples() {
        assert!(feasibility_check(5., 7., 1., 5., 7.));
        assert!(feasibility_check(348., 348., 9., 973., 973.));
        assert!(!feasibility_check(348., 348., 4., 973., 973.));
    }

    #[test]
    fn spec_validation() {
        let mut g = GeometrySpec {
            m: 9,
            alpha_min: 0.1,
            alpha_max: 0.9,
            h: 348,
            gamma: 1.0,
            h_min_clamp: 418,
            h_max_clamp: 973,
        };
        g.validate().unwrap();
        g.m = 8;
        assert!(g.validate().is_err());
        g.m = 1;
        assert!(g.validate().is_err());
        g.m = 9;
        g.alpha_min = 0.95;
        assert!(g.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn square_overlap_round_trips_through_count(
                side in 2u32..8, h in 4.0f64..400.0, frac in 0.0f64..1.0,
            ) {
                let m = side * side;
                let big_h = h + frac * (side as f64 - 1.0) * h;
                let a = overlap_square(big_h, h, m).unwrap();
                prop_assert!((0.0..1.0).contains(&a));
                let count = window_count(big_h, big_h, h, h, a).unwrap();
                prop_assert!((count - m as f64).abs() < 1e-9 * m as f64);
            }

            #[test]
            fn square_overlap_strictly_decreasing(
                side in 2u32..8, h in 4.0f64..400.0, f1 in 0.0f64..1.0, f2 in 0.0f64..1.0,
            ) {
                prop_assume!((f1 - f2).abs() > 1e-6);
                let m = side * side;
                let span = (side as f64 - 1.0) * h;
                let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
                let a_lo = overlap_square(h + lo * span, h, m).unwrap();
                let a_hi = overlap_square(h + hi * span, h, m).unwrap();
                prop_assert!(a_hi < a_lo);
            }

            #[test]
            fn general_succeeds_iff_feasible(
                h in 1.0f64..100.0, w in 1.0f64..100.0,
                fh in 1.01f64..6.0, fw in 1.01f64..6.0, m in 2u32..40,
            ) {
                let (big_h, big_w) = (h * fh, w * fw);
                let ok = overlap_general(big_h, big_w, h, w, m).is_ok();
                prop_assert_eq!(ok, feasibility_check(h, w, m as f64, big_h, big_w));
                if let Ok(a) = overlap_general(big_h, big_w, h, w, m) {
                    let count = window_count(big_h, big_w, h, w, a).unwrap();
                    prop_assert!((count - m as f64).abs() < 1e-9 * m as f64);
                }
            }
        }
    }
}
