use crate::error::{Error, Result};
use crate::jets::{Jet, MAX_ORDER};
use crate::linalg::{cholesky, JetMatrix, Matrix};
use crate::scalar::Scalar;

use super::document::MetricSpec;

/// Metric and inverse-metric jets at one point.
#[derive(Debug)]
pub struct MetricJets<T> {
    pub g: JetMatrix<T>,
    pub g_inv: JetMatrix<T>,
}

impl MetricSpec {
    /// Plain evaluation of every component at a point.
    pub fn eval_at<T: Scalar>(&self, point: &[T]) -> Result<Matrix<T>> {
        self.check_point(point.len())?;
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.entry(i, j).eval(point)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Shape(format!(
                "point has {len} coordinates, metric has dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Evaluates `g_ij` and `g^ij` as jets of the given order at `point`.
///
/// The constant-term matrix must be positive definite.
pub fn eval_metric_at<T: Scalar>(spec: &MetricSpec, point: &[T], order: usize) -> Result<MetricJets<T>> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    spec.check_point(point.len())?;
    let n = spec.dim();
    let vars = Jet::variables(point, order)?;
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let e = spec.entry(i, j);
            let jet = if e.is_zero() {
                Jet::zero(vars[0].layout(), order)
            } else {
                e.eval_jet(&vars)?
            };
            if !jet.is_finite() {
                return Err(Error::SingularPoint(format!("g[{}][{}] is not finite", i + 1, j + 1)));
            }
            upper.push(jet);
        }
    }
    let at = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        upper[a * n - a * (a + 1) / 2 + b].clone()
    };
    let g = JetMatrix::from_fn(n, at);
    cholesky(&g.values())?;
    let g_inv = g.inverse()?;
    // symmetrize away elimination round-off
    let g_inv = JetMatrix::from_fn(n, |i, j| {
        if i == j {
            g_inv.get(i, i).clone()
        } else {
            (g_inv.get(i, j) + g_inv.get(j, i)).scale(T::lit(0.5))
        }
    });
    Ok(MetricJets { g, g_inv })
}
