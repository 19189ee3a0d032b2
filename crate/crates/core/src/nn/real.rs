//! Scalar abstraction so the fully-connected passes can run on plain floats
//! or on dual numbers (forward-mode tangents through a reverse pass give
//! Hessian-vector products).

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_f64(v: f64) -> Self;
    fn value(self) -> f64;
    fn tanh(self) -> Self;
    fn scale(self, k: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// `re + eps·tan` with `eps² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub tan: f64,
}

impl Dual {
    pub fn new(re: f64, tan: f64) -> Self {
        Dual { re, tan }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.tan + o.tan)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        self.re += o.re;
        self.tan += o.tan;
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.tan - o.tan)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.tan + self.tan * o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.tan)
    }
}

impl Real for Dual {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::new(v, 0.0)
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
    #[inline]
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual::new(t, self.tan * (1.0 - t * t))
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        Dual::new(self.re * k, self.tan * k)
    }
}
