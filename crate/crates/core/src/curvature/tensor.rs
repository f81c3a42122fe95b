use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::{Jet, Layout};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Jet-valued tensor field in the coordinate frame.
///
/// Components are stored row-major over `rank = upper + lower` indices,
/// contravariant slots first.
#[derive(Debug)]
pub struct Tensor<T> {
    dim: usize,
    upper: usize,
    lower: usize,
    data: Vec<Jet<T>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            dim: self.dim,
            upper: self.upper,
            lower: self.lower,
            data: self.data.clone(),
        }
    }
}

/// Visits every multi-index in `0..dim` of length `rank`, last index fastest.
pub(crate) fn for_each_index(dim: usize, rank: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; rank];
    let total = dim.pow(rank as u32);
    for _ in 0..total {
        f(&idx);
        for k in (0..rank).rev() {
            idx[k] += 1;
            if idx[k] < dim {
                break;
            }
            idx[k] = 0;
        }
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn from_fn(
        dim: usize,
        upper: usize,
        lower: usize,
        mut f: impl FnMut(&[usize]) -> Jet<T>,
    ) -> Self {
        let rank = upper + lower;
        let mut data = Vec::with_capacity(dim.pow(rank as u32));
        for_each_index(dim, rank, |idx| data.push(f(idx)));
        Tensor {
            dim,
            upper,
            lower,
            data,
        }
    }

    /// Fallible variant of [`Tensor::from_fn`].
    pub fn try_from_fn(
        dim: usize,
        upper: usize,
        lower: usize,
        mut f: impl FnMut(&[usize]) -> Result<Jet<T>>,
    ) -> Result<Self> {
        let rank = upper + lower;
        let mut data = Vec::with_capacity(dim.pow(rank as u32));
        let mut err = None;
        for_each_index(dim, rank, |idx| {
            if err.is_none() {
                match f(idx) {
                    Ok(j) => data.push(j),
                    Err(e) => err = Some(e),
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(Tensor {
                dim,
                upper,
                lower,
                data,
            }),
        }
    }

    pub fn zeros(layout: &Arc<Layout>, order: usize, upper: usize, lower: usize) -> Self {
        let dim = layout.dim();
        Self::from_fn(dim, upper, lower, |_| Jet::zero(layout, order))
    }

    /// Order-0 covariant tensor holding plain values.
    pub fn from_values(layout: &Arc<Layout>, upper: usize, lower: usize, values: &[T]) -> Result<Self> {
        let dim = layout.dim();
        if values.len() != dim.pow((upper + lower) as u32) {
            return Err(Error::Shape(format!(
                "{} values for a rank-{} tensor in dimension {dim}",
                values.len(),
                upper + lower
            )));
        }
        let mut k = 0;
        Ok(Self::from_fn(dim, upper, lower, |_| {
            k += 1;
            Jet::constant(layout, 0, values[k - 1])
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.upper + self.lower
    }

    /// `(r, s)`: contravariant and covariant slot counts.
    pub fn valence(&self) -> (usize, usize) {
        (self.upper, self.lower)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        self.data[0].layout()
    }

    /// Smallest jet order among the components.
    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn components(&self) -> &[Jet<T>] {
        &self.data
    }

    pub(crate) fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet<T> {
        &self.data[self.flat(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut Jet<T> {
        let k = self.flat(idx);
        &mut self.data[k]
    }

    /// Constant terms, row-major.
    pub fn values(&self) -> Vec<T> {
        self.data.iter().map(Jet::value).collect()
    }

    /// Largest coefficient magnitude over all components and all orders.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, j| if j.max_abs() > m { j.max_abs() } else { m })
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|j| j.truncate(order))
    }

    pub fn map(&self, f: impl FnMut(&Jet<T>) -> Jet<T>) -> Self {
        Tensor {
            dim: self.dim,
            upper: self.upper,
            lower: self.lower,
            data: self.data.iter().map(f).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&Jet<T>, &Jet<T>) -> Jet<T>) -> Result<Self> {
        if self.valence() != other.valence() || self.dim != other.dim {
            return Err(Error::Shape(format!(
                "cannot combine {:?} and {:?} tensors",
                self.valence(),
                other.valence()
            )));
        }
        Ok(Tensor {
            dim: self.dim,
            upper: self.upper,
            lower: self.lower,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|j| j.scale(s))
    }

    /// Multiplies every component by a scalar jet.
    pub fn mul_jet(&self, s: &Jet<T>) -> Self {
        self.map(|j| j * s)
    }

    /// Reorders slots: component `idx` of the result is component
    /// `idx ∘ perm⁻¹` of `self`, i.e. result slot `k` reads source slot `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank());
        let mut src = vec![0usize; self.rank()];
        Tensor::from_fn(self.dim, self.upper, self.lower, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.get(&src).clone()
        })
    }

    pub(crate) fn require_covariant(&self, what: &str) -> Result<()> {
        if self.upper != 0 {
            return Err(Error::Shape(format!("{what} expects a covariant tensor")));
        }
        Ok(())
    }

    pub(crate) fn require_order(&self, what: &'static str, needed: usize) -> Result<()> {
        let available = self.order();
        if available < needed {
            return Err(Error::OrderExhausted {
                what,
                needed,
                available,
            });
        }
        Ok(())
    }
}

/// Jet of `Σ_k a_k b_k`, at the smallest order among the factors.
pub(crate) fn dot<'a, T: Scalar + 'a>(
    layout: &Arc<Layout>,
    pairs: impl IntoIterator<Item = (&'a Jet<T>, &'a Jet<T>)> + Clone,
) -> Jet<T> {
    let order = pairs
        .clone()
        .into_iter()
        .map(|(a, b)| a.order().min(b.order()))
        .min()
        .unwrap_or(0);
    let mut acc = Jet::zero(layout, order);
    for (a, b) in pairs {
        acc.add_product(a, b);
    }
    acc
}

/// Point values of a covariant tensor as a plain array, for norms and checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Values<T> {
    pub dim: usize,
    pub rank: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Values<T> {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Values {
            dim,
            rank,
            data: vec![T::zero(); dim.pow(rank as u32)],
        }
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[idx.iter().fold(0, |acc, &i| acc * self.dim + i)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let k = idx.iter().fold(0, |acc, &i| acc * self.dim + i);
        self.data[k] = v;
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.data.len(), other.data.len());
        Values {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Values {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    /// Plain Frobenius norm of the coordinate components.
    pub fn coordinate_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &x| if x.abs() > m { x.abs() } else { m })
    }

    /// `g`-invariant norm `sqrt(t_{a…} t^{a…})` of a covariant tensor.
    pub fn metric_norm(&self, g_inv: &Matrix<T>) -> T {
        let raised = self.raise_all(g_inv);
        let s: T = self.data.iter().zip(&raised.data).map(|(&a, &b)| a * b).sum();
        s.max(T::zero()).sqrt()
    }

    /// Metric norm divided by `sqrt(n^rank)`.
    pub fn normalized_norm(&self, g_inv: &Matrix<T>) -> T {
        self.metric_norm(g_inv) / T::count(self.data.len()).sqrt()
    }

    /// Raises every slot with `g_inv`.
    pub fn raise_all(&self, g_inv: &Matrix<T>) -> Self {
        let mut cur = self.clone();
        for slot in 0..self.rank {
            cur = cur.contract_slot(slot, g_inv);
        }
        cur
    }

    /// Applies `m` to one slot: `out_{..a..} = Σ_b m[a][b] t_{..b..}`.
    pub fn contract_slot(&self, slot: usize, m: &Matrix<T>) -> Self {
        let n = self.dim;
        let stride = n.pow((self.rank - slot - 1) as u32);
        let mut out = Values::zeros(n, self.rank);
        for (k, o) in out.data.iter_mut().enumerate() {
            let a = (k / stride) % n;
            let base = k - a * stride;
            let mut s = T::zero();
            for b in 0..n {
                s += m[(a, b)] * self.data[base + b * stride];
            }
            *o = s;
        }
        out
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn point_values(&self) -> Values<T> {
        Values {
            dim: self.dim,
            rank: self.rank(),
            data: self.values(),
        }
    }
}
