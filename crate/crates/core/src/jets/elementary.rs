//! Elementary functions of jets via univariate Taylor composition.

use super::jet::Jet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn factorial<T: Scalar>(m: usize) -> T {
    (1..=m).fold(T::one(), |acc, k| acc * T::count(k))
}

impl<T: Scalar> Jet<T> {
    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let taylor: Vec<T> = (0..=self.order()).map(|m| e / factorial(m)).collect();
        self.compose(&taylor)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let taylor: Vec<T> = (0..=self.order())
            .map(|m| cycle[m % 4] / factorial(m))
            .collect();
        self.compose(&taylor)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let taylor: Vec<T> = (0..=self.order())
            .map(|m| cycle[m % 4] / factorial(m))
            .collect();
        self.compose(&taylor)
    }

    pub fn ln(&self) -> Result<Self> {
        let a = self.value();
        if !(a > T::zero()) {
            return Err(Error::Domain(format!("ln of non-positive value {a}")));
        }
        let mut taylor = vec![a.ln()];
        for m in 1..=self.order() {
            let sign = if m % 2 == 1 { T::one() } else { -T::one() };
            taylor.push(sign / (T::count(m) * a.powi(m as i32)));
        }
        Ok(self.compose(&taylor))
    }

    pub fn sqrt(&self) -> Result<Self> {
        let a = self.value();
        if a < T::zero() || (a == T::zero() && self.order() > 0) {
            return Err(Error::Domain(format!("sqrt of non-positive value {a}")));
        }
        // generalized binomial coefficients of (a + u)^(1/2)
        let half = T::lit(0.5);
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut falling = T::one();
        for m in 0..=self.order() {
            taylor.push(falling / factorial(m) * a.powf(half - T::count(m)));
            falling *= half - T::count(m);
        }
        if a == T::zero() {
            taylor[0] = T::zero();
        }
        Ok(self.compose(&taylor))
    }

    /// Integer power by repeated multiplication; negative exponents divide.
    pub fn powi(&self, exponent: i32) -> Result<Self> {
        let mut base = self.clone();
        let mut k = exponent.unsigned_abs();
        let mut acc = Jet::constant(self.layout(), self.order(), T::one());
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        if exponent < 0 {
            acc.recip()
        } else {
            Ok(acc)
        }
    }

    /// Power with a constant exponent. Integral exponents use [`Jet::powi`];
    /// others go through `exp(p ln(self))` and need a positive base.
    pub fn powf(&self, exponent: T) -> Result<Self> {
        if exponent.fract() == T::zero() && exponent.abs() <= T::lit(1024.0) {
            let k = exponent.to_i32().expect("integral exponent fits i32");
            return self.powi(k);
        }
        let a = self.value();
        if !(a > T::zero()) {
            return Err(Error::Domain(format!(
                "non-integer power {exponent} of non-positive value {a}"
            )));
        }
        Ok(self.ln()?.scale(exponent).exp())
    }
}
