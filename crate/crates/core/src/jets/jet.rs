use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use super::layout::{Layout, MAX_ORDER};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Truncated multivariate Taylor expansion of a scalar quantity at a base point.
///
/// The coefficient stored for a multi-index `α` is `∂^α f / α!`. Binary
/// operations between jets of different orders truncate to the smaller one.
#[derive(Clone)]
pub struct Jet<T> {
    layout: Arc<Layout>,
    order: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    /// The zero jet of the given order.
    pub fn zero(layout: &Arc<Layout>, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} above {MAX_ORDER}");
        Jet {
            layout: layout.clone(),
            order,
            coeffs: vec![T::zero(); layout.len(order)],
        }
    }

    pub fn constant(layout: &Arc<Layout>, order: usize, value: T) -> Self {
        let mut jet = Self::zero(layout, order);
        jet.coeffs[0] = value;
        jet
    }

    /// Jet of the coordinate function `x_i` at `point`.
    pub fn variable(point: &[T], i: usize, order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        let layout = Layout::get(point.len())?;
        if i >= point.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: point.len(),
            });
        }
        let mut jet = Self::constant(&layout, order, point[i]);
        if order > 0 {
            let mut alpha = vec![0usize; point.len()];
            alpha[i] = 1;
            let slot = layout.slot(&alpha)?;
            jet.coeffs[slot] = T::one();
        }
        Ok(jet)
    }

    /// Jets of all coordinate functions at `point`.
    pub fn variables(point: &[T], order: usize) -> Result<Vec<Self>> {
        (0..point.len())
            .map(|i| Self::variable(point, i, order))
            .collect()
    }

    pub fn from_coeffs(layout: &Arc<Layout>, order: usize, coeffs: Vec<T>) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        if coeffs.len() != layout.len(order) {
            return Err(Error::Shape(format!(
                "{} coefficients supplied, order {order} needs {}",
                coeffs.len(),
                layout.len(order)
            )));
        }
        Ok(Jet {
            layout: layout.clone(),
            order,
            coeffs,
        })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Constant term, i.e. the value at the base point.
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// Taylor coefficient `∂^α f / α!`.
    pub fn coeff(&self, alpha: &[usize]) -> Result<T> {
        let degree: usize = alpha.iter().sum();
        if degree > self.order {
            return Err(Error::OrderExceeded {
                degree,
                order: self.order,
            });
        }
        Ok(self.coeffs[self.layout.slot(alpha)?])
    }

    /// Partial derivative `∂^α f` at the base point.
    pub fn partial(&self, alpha: &[usize]) -> Result<T> {
        let degree: usize = alpha.iter().sum();
        if degree > self.order {
            return Err(Error::OrderExceeded {
                degree,
                order: self.order,
            });
        }
        let slot = self.layout.slot(alpha)?;
        Ok(self.coeffs[slot] * T::lit(self.layout.factorial(slot)))
    }

    /// Drops every coefficient of degree above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs: self.coeffs[..self.layout.len(order)].to_vec(),
        }
    }

    /// Jet of `∂f/∂x_var`, one order lower.
    pub fn derivative(&self, var: usize) -> Result<Self> {
        if var >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: var,
                dim: self.dim(),
            });
        }
        if self.order == 0 {
            return Err(Error::OrderExhausted {
                what: "jet derivative",
                needed: 1,
                available: 0,
            });
        }
        let order = self.order - 1;
        let layout = &self.layout;
        let coeffs = (0..layout.len(order))
            .map(|slot| {
                let up = layout.multi_index(slot)[var] as usize + 1;
                self.coeffs[layout.shifted(var, slot)] * T::count(up)
            })
            .collect();
        Ok(Jet {
            layout: layout.clone(),
            order,
            coeffs,
        })
    }

    fn check_dim(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.layout, &other.layout),
            "jets of dimension {} and {} combined",
            self.dim(),
            other.dim()
        );
    }

    /// `self += a * b`, computed at `self`'s order.
    ///
    /// Both factors must carry at least `self.order()`.
    pub fn add_product(&mut self, a: &Self, b: &Self) {
        self.check_dim(a);
        self.check_dim(b);
        assert!(a.order >= self.order && b.order >= self.order);
        let len = self.coeffs.len();
        for &(i, j, out) in self.layout.products_below(len) {
            self.coeffs[out as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
        }
    }

    /// `self += s * a`, computed at `self`'s order.
    pub fn add_scaled(&mut self, a: &Self, s: T) {
        self.check_dim(a);
        assert!(a.order >= self.order);
        for (c, &x) in self.coeffs.iter_mut().zip(&a.coeffs) {
            *c += s * x;
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn add_constant(&self, s: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Series division `self / divisor`, solving `divisor * q = self` degree by degree.
    pub fn try_div(&self, divisor: &Self) -> Result<Self> {
        self.check_dim(divisor);
        let b0 = divisor.value();
        if b0 == T::zero() || !b0.is_finite() {
            return Err(Error::SingularPoint(
                "division by a jet with zero constant term".into(),
            ));
        }
        let order = self.order.min(divisor.order);
        let len = self.layout.len(order);
        let mut q = vec![T::zero(); len];
        for out in 0..len {
            let mut s = self.coeffs[out];
            for &(i, j, _) in self.layout.products_into(out) {
                if j != 0 {
                    s -= q[i as usize] * divisor.coeffs[j as usize];
                }
            }
            q[out] = s / b0;
        }
        Ok(Jet {
            layout: self.layout.clone(),
            order,
            coeffs: q,
        })
    }

    pub fn recip(&self) -> Result<Self> {
        Self::constant(&self.layout, self.order, T::one()).try_div(self)
    }

    /// Evaluates `Σ_m taylor[m] (self - self(0))^m`, the composition of a
    /// univariate function with Taylor coefficients `taylor` about the
    /// constant term.
    pub fn compose(&self, taylor: &[T]) -> Self {
        assert!(taylor.len() > self.order);
        let mut u = self.clone();
        u.coeffs[0] = T::zero();
        let mut acc = Self::constant(&self.layout, self.order, taylor[self.order]);
        for m in (0..self.order).rev() {
            acc = &acc * &u;
            acc.coeffs[0] += taylor[m];
        }
        acc
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |m, &c| if c.abs() > m { c.abs() } else { m })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

impl<T: Scalar> PartialEq for Jet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl<T: fmt::Debug> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.layout.dim())
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<'a, T: Scalar> Add<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.check_dim(rhs);
        let (lo, hi) = if self.order <= rhs.order { (self, rhs) } else { (rhs, self) };
        let mut out = lo.clone();
        for (c, &x) in out.coeffs.iter_mut().zip(&hi.coeffs) {
            *c += x;
        }
        out
    }
}

impl<'a, T: Scalar> Sub<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.check_dim(rhs);
        let order = self.order.min(rhs.order);
        let len = self.layout.len(order);
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs: self.coeffs[..len]
                .iter()
                .zip(&rhs.coeffs[..len])
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl<'a, T: Scalar> Mul<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &'a Jet<T>) -> Jet<T> {
        let mut out = Jet::zero(&self.layout, self.order.min(rhs.order));
        out.add_product(self, rhs);
        out
    }
}

impl<T: Scalar> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Jet<T>) -> Jet<T> {
        &self + &rhs
    }
}

impl<T: Scalar> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Jet<T>) -> Jet<T> {
        &self - &rhs
    }
}

impl<T: Scalar> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Jet<T>) -> Jet<T> {
        &self * &rhs
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        -&self
    }
}

impl<T: Scalar> AddAssign<&Jet<T>> for Jet<T> {
    fn add_assign(&mut self, rhs: &Jet<T>) {
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        self.add_scaled(rhs, T::one());
    }
}

impl<T: Scalar> SubAssign<&Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, rhs: &Jet<T>) {
        if rhs.order < self.order {
            *self = self.truncate(rhs.order);
        }
        self.add_scaled(rhs, -T::one());
    }
}

impl<T: Scalar> Mul<T> for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: T) -> Jet<T> {
        self.scale(rhs)
    }
}
