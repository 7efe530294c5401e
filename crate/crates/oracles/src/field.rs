use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;

/// Ordered field arithmetic for the exact and floating-point oracle paths.
pub trait Field: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Sign with whatever zero test suits the field.
    fn signum(&self) -> Ordering;
    fn abs(&self) -> Self;
    fn cmp_abs(&self, o: &Self) -> Ordering;

    fn is_zero(&self) -> bool {
        self.signum() == Ordering::Equal
    }
}

/// Zero threshold for the floating-point field.
pub const F64_ZERO: f64 = 1e-10;

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn signum(&self) -> Ordering {
        if f64::abs(*self) <= F64_ZERO {
            Ordering::Equal
        } else if *self > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn cmp_abs(&self, o: &Self) -> Ordering {
        f64::abs(*self).total_cmp(&f64::abs(*o))
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    /// Exact: every finite double is a dyadic rational.
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn signum(&self) -> Ordering {
        self.cmp(&Zero::zero())
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn cmp_abs(&self, o: &Self) -> Ordering {
        Signed::abs(self).cmp(&Signed::abs(o))
    }
}

pub fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

/// `x − s·y`
pub fn axpy<T: Field>(x: &[T], s: &T, y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(a, b)| a.sub(&s.mul(b))).collect()
}

pub fn scale<T: Field>(x: &[T], s: &T) -> Vec<T> {
    x.iter().map(|a| a.mul(s)).collect()
}

/// Rescales `x` so its largest entry has magnitude one.
pub fn normalize<T: Field>(x: &[T]) -> Vec<T> {
    let big = x.iter().max_by(|a, b| a.cmp_abs(b)).cloned();
    match big {
        Some(b) if !b.is_zero() => {
            let b = b.abs();
            x.iter().map(|a| a.div(&b)).collect()
        }
        _ => x.to_vec(),
    }
}

pub fn rows_of<T: Field>(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<T>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| T::from_f64(m[(i, j)])).collect())
        .collect()
}
