//! Scalar abstractions shared by the numerical and graph modules.

use std::fmt::{Debug, Display};
use std::ops::{Add, Neg, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive, Zero};

/// Floating-point scalar for the QoT kernels.
pub trait Scalar: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal; every finite literal used by the crate is
    /// representable (possibly rounded) in both `f32` and `f64`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn to_db(self) -> Self {
        Self::lit(10.0) * self.log10()
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_db(self) -> Self {
        Self::lit(10.0).powf(self / Self::lit(10.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Edge weight for the graph algorithms. Signed because residual arcs in the
/// disjoint-pair search carry negated costs.
pub trait Weight:
    Copy + PartialOrd + Debug + Zero + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self> + Send + Sync + 'static
{
    /// Equality used when matching path lengths against distance labels.
    /// Exact for integers, relative tolerance for floats.
    fn tol_eq(self, other: Self) -> bool;
}

macro_rules! int_weight {
    ($($t:ty),*) => {$(
        impl Weight for $t {
            fn tol_eq(self, other: Self) -> bool {
                self == other
            }
        }
    )*};
}

macro_rules! float_weight {
    ($($t:ty),*) => {$(
        impl Weight for $t {
            fn tol_eq(self, other: Self) -> bool {
                let scale = self.abs().max(other.abs()).max(1.0);
                (self - other).abs() <= scale * 64.0 * <$t>::EPSILON
            }
        }
    )*};
}

int_weight!(i32, i64);
float_weight!(f32, f64);

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip_both_widths() {
        assert!((Scalar::to_db(100.0f64) - 20.0).abs() < 1e-12);
        assert!((Scalar::from_db(3.0f32) - 1.995_262_3).abs() < 1e-5);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        let s: CompensatedSum = xs.iter().copied().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn float_weight_tolerance() {
        assert!((0.1f64 + 0.2).tol_eq(0.3));
        assert!(!1.0f64.tol_eq(1.0 + 1e-9));
        assert!(3i64.tol_eq(3));
    }
}
