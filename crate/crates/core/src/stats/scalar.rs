use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Number type the agreement statistics are computed in: `f64`, `f32`, or an
/// exact rational such as `Ratio<i64>`. Only field operations are needed.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

/// Arithmetic mean; zero for an empty input.
pub(crate) fn mean<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut n = 0usize;
    for v in values {
        sum = sum + v;
        n += 1;
    }
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_count(n)
    }
}
