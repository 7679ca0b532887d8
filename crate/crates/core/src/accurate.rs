//! Compensated complex dot products (Ogita-Rump-Oishi `Dot2`): results are
//! as accurate as if accumulated in twice the working precision.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::C64;

#[derive(Clone, Copy, Default)]
struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    #[inline]
    fn add_prod(&mut self, a: f64, b: f64) {
        let p = a * b;
        let ep = a.mul_add(b, -p);
        let s = self.s + p;
        let bb = s - self.s;
        let es = (self.s - (s - bb)) + (p - bb);
        self.s = s;
        self.c += ep + es;
    }

    #[inline]
    fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Complex accumulator of unconjugated products.
#[derive(Clone, Copy, Default)]
pub(crate) struct CAcc {
    re: Acc,
    im: Acc,
}

impl CAcc {
    #[inline]
    pub(crate) fn add(&mut self, a: C64, b: C64) {
        self.re.add_prod(a.re, b.re);
        self.re.add_prod(-a.im, b.im);
        self.im.add_prod(a.re, b.im);
        self.im.add_prod(a.im, b.re);
    }

    #[inline]
    pub(crate) fn value(self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

/// `Σ a_i b_i` with compensation.
pub(crate) fn dot2(a: &[C64], b: &[C64]) -> C64 {
    let mut acc = CAcc::default();
    for (x, y) in a.iter().zip(b) {
        acc.add(*x, *y);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_sum() {
        // 1e16 + 1 − 1e16 in naive summation loses the 1.
        let a = [C64::new(1e16, 0.0), C64::new(1.0, 0.0), C64::new(-1e16, 0.0)];
        let b = [C64::new(1.0, 0.0); 3];
        assert_eq!(dot2(&a, &b), C64::new(1.0, 0.0));
        let naive: C64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_ne!(naive, C64::new(1.0, 0.0));
    }

    #[test]
    fn complex_products() {
        let a = [C64::new(1.0, 2.0), C64::new(-3.0, 0.5)];
        let b = [C64::new(0.5, -1.0), C64::new(2.0, 4.0)];
        let want = a[0] * b[0] + a[1] * b[1];
        assert!((dot2(&a, &b) - want).norm() < 1e-15);
    }
}
