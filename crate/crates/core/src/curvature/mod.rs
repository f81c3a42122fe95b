//! Levi-Civita curvature stack on jets and the first-order operators built on it.
//!
//! Conventions: `Γ^k_ij` is stored at index `[k, i, j]`; the (0,4) curvature
//! tensor is `R(X,Y,Z,T) = g(∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z, T)`, so a unit
//! sphere has `Ric = (n−1) g`; `∇T` puts the differentiation slot first.

mod tensor;

use crate::dsl::{eval_metric_at, MetricJets, MetricSpec};
use crate::error::{Error, Result};
use crate::jets::{Jet, MAX_ORDER};
use crate::scalar::Scalar;

pub use tensor::{Tensor, Values};
pub(crate) use tensor::{dot, for_each_index};

/// Metric and inverse metric as tensors, `(0,2)` and `(2,0)`.
pub fn metric_tensors<T: Scalar>(m: &MetricJets<T>) -> (Tensor<T>, Tensor<T>) {
    let n = m.g.n();
    let g = Tensor::from_fn(n, 0, 2, |i| m.g.get(i[0], i[1]).clone());
    let g_inv = Tensor::from_fn(n, 2, 0, |i| m.g_inv.get(i[0], i[1]).clone());
    (g, g_inv)
}

/// `Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, one order below `g`.
pub fn christoffel<T: Scalar>(g: &Tensor<T>, g_inv: &Tensor<T>) -> Result<Tensor<T>> {
    g.require_covariant("christoffel")?;
    g.require_order("christoffel", 1)?;
    let n = g.dim();
    let dg = Tensor::try_from_fn(n, 0, 3, |i| g.get(&i[1..]).derivative(i[0]))?;
    let half = T::lit(0.5);
    let first = Tensor::from_fn(n, 0, 3, |idx| {
        let (l, i, j) = (idx[0], idx[1], idx[2]);
        (&(dg.get(&[i, j, l]) + dg.get(&[j, i, l])) - dg.get(&[l, i, j])).scale(half)
    });
    let layout = g.layout().clone();
    Ok(Tensor::from_fn(n, 1, 2, |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        dot(
            &layout,
            (0..n).map(|l| (g_inv.get(&[k, l]), first.get(&[l, i, j]))),
        )
    }))
}

/// Riemann, Ricci and scalar curvature.
#[derive(Debug, Clone)]
pub struct RiemannParts<T: Scalar> {
    pub riemann: Tensor<T>,
    pub ricci: Tensor<T>,
    pub scalar: Jet<T>,
}

/// Curvature tensor from the Christoffel symbols, plus its traces.
pub fn riemann_pack<T: Scalar>(
    g: &Tensor<T>,
    g_inv: &Tensor<T>,
    gamma: &Tensor<T>,
) -> Result<RiemannParts<T>> {
    gamma.require_order("riemann", 1)?;
    let n = g.dim();
    let layout = g.layout().clone();
    let order = gamma.order() - 1;
    // dgamma[i, l, j, k] = ∂_i Γ^l_jk
    let dgamma = Tensor::try_from_fn(n, 0, 4, |idx| gamma.get(&idx[1..]).derivative(idx[0]))?;
    // up[l, i, j, k] = R(∂_i, ∂_j)∂_k components along ∂_l
    let mut up = Tensor::zeros(&layout, order, 0, 4);
    for l in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let mut acc = dgamma.get(&[i, l, j, k]) - dgamma.get(&[j, l, i, k]);
                    for m in 0..n {
                        acc.add_product(gamma.get(&[l, i, m]), gamma.get(&[m, j, k]));
                        let mut neg = Jet::zero(&layout, order);
                        neg.add_product(gamma.get(&[l, j, m]), gamma.get(&[m, i, k]));
                        acc -= &neg;
                    }
                    *up.get_mut(&[l, j, i, k]) = -&acc;
                    *up.get_mut(&[l, i, j, k]) = acc;
                }
            }
        }
    }
    let riemann = Tensor::from_fn(n, 0, 4, |idx| {
        let (i, j, k, t) = (idx[0], idx[1], idx[2], idx[3]);
        dot(&layout, (0..n).map(|l| (g.get(&[t, l]), up.get(&[l, i, j, k]))))
    });
    let ricci = Tensor::from_fn(n, 0, 2, |idx| {
        let (j, k) = (idx[0], idx[1]);
        let mut acc = Jet::zero(&layout, order);
        for i in 0..n {
            for t in 0..n {
                acc.add_product(g_inv.get(&[i, t]), riemann.get(&[i, j, k, t]));
            }
        }
        acc
    });
    let scalar = trace(&ricci, g_inv);
    check_curvature_symmetries(&riemann, T::lit(1e-6))?;
    Ok(RiemannParts {
        riemann,
        ricci,
        scalar,
    })
}

/// `g^ab b_ab` for a (0,2) tensor.
pub fn trace<T: Scalar>(b: &Tensor<T>, g_inv: &Tensor<T>) -> Jet<T> {
    let n = b.dim();
    let mut pairs = Vec::with_capacity(n * n);
    for a in 0..n {
        for c in 0..n {
            pairs.push((g_inv.get(&[a, c]), b.get(&[a, c])));
        }
    }
    dot(b.layout(), pairs.iter().copied())
}

/// Fails when pair symmetries or the first Bianchi identity are violated beyond
/// `rel_tol` times the largest component.
pub fn check_curvature_symmetries<T: Scalar>(r: &Tensor<T>, rel_tol: T) -> Result<()> {
    let v = r.point_values();
    let tol = rel_tol * (v.max_abs() + T::one());
    let n = r.dim();
    let mut worst = T::zero();
    let mut what = "";
    for_each_index(n, 4, |idx| {
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let x = v.get(idx);
        for (res, name) in [
            ((x + v.get(&[j, i, k, l])).abs(), "antisymmetry in the first pair"),
            ((x + v.get(&[i, j, l, k])).abs(), "antisymmetry in the second pair"),
            ((x - v.get(&[k, l, i, j])).abs(), "pair exchange"),
            (
                (x + v.get(&[j, k, i, l]) + v.get(&[k, i, j, l])).abs(),
                "first Bianchi identity",
            ),
        ] {
            if res > worst {
                worst = res;
                what = name;
            }
        }
    });
    if worst > tol {
        return Err(Error::Symmetry(format!("{what}: residual {:e}", worst.to_f64_lossy())));
    }
    Ok(())
}

/// `(a⊙b)(X,Y,Z,T) = a(X,T)b(Y,Z) + a(Y,Z)b(X,T) − a(X,Z)b(Y,T) − a(Y,T)b(X,Z)`.
pub fn kulkarni_nomizu<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    for t in [a, b] {
        t.require_covariant("kulkarni_nomizu")?;
        if t.rank() != 2 {
            return Err(Error::Shape("Kulkarni-Nomizu product needs (0,2) tensors".into()));
        }
    }
    if a.dim() != b.dim() {
        return Err(Error::Shape("Kulkarni-Nomizu factors differ in dimension".into()));
    }
    let layout = a.layout().clone();
    let order = a.order().min(b.order());
    Ok(Tensor::from_fn(a.dim(), 0, 4, |idx| {
        let (x, y, z, t) = (idx[0], idx[1], idx[2], idx[3]);
        let mut acc = Jet::zero(&layout, order);
        acc.add_product(a.get(&[x, t]), b.get(&[y, z]));
        acc.add_product(a.get(&[y, z]), b.get(&[x, t]));
        let mut neg = Jet::zero(&layout, order);
        neg.add_product(a.get(&[x, z]), b.get(&[y, t]));
        neg.add_product(a.get(&[y, t]), b.get(&[x, z]));
        acc -= &neg;
        acc
    }))
}

/// Schouten tensor `𝔨 = (Ric − S g / (2(n−1))) / (n−2)` and Weyl tensor `W = R − g⊙𝔨`.
pub fn schouten_weyl<T: Scalar>(
    g: &Tensor<T>,
    parts: &RiemannParts<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let n = g.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall {
            what: "the Weyl tensor",
            dim: n,
            min: 3,
        });
    }
    let nn = T::count(n);
    let c = parts.scalar.scale(T::one() / (T::lit(2.0) * (nn - T::one())));
    let schouten = parts
        .ricci
        .sub(&g.mul_jet(&c))?
        .scale(T::one() / (nn - T::lit(2.0)));
    let weyl = parts.riemann.sub(&kulkarni_nomizu(g, &schouten)?)?;
    Ok((schouten, weyl))
}

/// `(∇T)_{k i₁…i_s} = ∂_k T_{i₁…i_s} − Σ_m Γ^l_{k i_m} T_{…l…}`.
pub fn covariant_derivative<T: Scalar>(t: &Tensor<T>, gamma: &Tensor<T>) -> Result<Tensor<T>> {
    t.require_covariant("covariant_derivative")?;
    t.require_order("covariant derivative", 1)?;
    let n = t.dim();
    let s = t.rank();
    let layout = t.layout().clone();
    let order = (t.order() - 1).min(gamma.order());
    let mut src = vec![0usize; s];
    Tensor::try_from_fn(n, 0, s + 1, |idx| {
        let k = idx[0];
        let rest = &idx[1..];
        let mut acc = t.get(rest).derivative(k)?.truncate(order);
        let mut neg = Jet::zero(&layout, order);
        for m in 0..s {
            src.copy_from_slice(rest);
            for l in 0..n {
                src[m] = l;
                neg.add_product(gamma.get(&[l, k, rest[m]]), t.get(&src));
            }
        }
        acc -= &neg;
        Ok(acc)
    })
}

/// Contracts the derivative slot of `∇T` against slot `r` (1-based) of `T`.
pub fn divergence_of<T: Scalar>(nabla_t: &Tensor<T>, r: usize, g_inv: &Tensor<T>) -> Result<Tensor<T>> {
    let s1 = nabla_t.rank() - 1;
    if r == 0 || r > s1 {
        return Err(Error::IndexOutOfRange { index: r, dim: s1 });
    }
    let n = nabla_t.dim();
    let layout = nabla_t.layout().clone();
    let order = nabla_t.order();
    let mut full = vec![0usize; s1 + 1];
    Ok(Tensor::from_fn(n, 0, s1 - 1, |idx| {
        let mut acc = Jet::zero(&layout, order);
        full[1..r].copy_from_slice(&idx[..r - 1]);
        full[r + 1..].copy_from_slice(&idx[r - 1..]);
        for a in 0..n {
            for b in 0..n {
                full[0] = a;
                full[r] = b;
                acc.add_product(g_inv.get(&[a, b]), nabla_t.get(&full));
            }
        }
        acc
    }))
}

/// `δ_r T(X₁,…,X_s) = Σ_j (∇_{e_j} T)(X₁,…,X_{r−1}, e_j, X_r,…,X_s)`.
pub fn divergence<T: Scalar>(
    t: &Tensor<T>,
    r: usize,
    gamma: &Tensor<T>,
    g_inv: &Tensor<T>,
) -> Result<Tensor<T>> {
    if r == 0 || r > t.rank() {
        return Err(Error::IndexOutOfRange {
            index: r,
            dim: t.rank(),
        });
    }
    divergence_of(&covariant_derivative(t, gamma)?, r, g_inv)
}

/// `d^∇b(X,Y,Z) = (∇_X b)(Y,Z) − (∇_Y b)(X,Z)` for a (0,2) tensor `b`.
pub fn dnabla_sym2<T: Scalar>(b: &Tensor<T>, gamma: &Tensor<T>) -> Result<Tensor<T>> {
    if b.rank() != 2 {
        return Err(Error::Shape("d^∇ expects a (0,2) tensor".into()));
    }
    let nb = covariant_derivative(b, gamma)?;
    Ok(Tensor::from_fn(b.dim(), 0, 3, |idx| {
        let (x, y, z) = (idx[0], idx[1], idx[2]);
        nb.get(&[x, y, z]) - nb.get(&[y, x, z])
    }))
}

/// Lowers a vector field: `V_i = g_ij V^j`.
pub fn lower<T: Scalar>(v: &Tensor<T>, g: &Tensor<T>) -> Tensor<T> {
    let n = v.dim();
    Tensor::from_fn(n, 0, 1, |i| {
        dot(v.layout(), (0..n).map(|j| (g.get(&[i[0], j]), v.get(&[j]))))
    })
}

/// Raises a covector field: `V^i = g^ij V_j`.
pub fn raise<T: Scalar>(v: &Tensor<T>, g_inv: &Tensor<T>) -> Tensor<T> {
    let n = v.dim();
    Tensor::from_fn(n, 1, 0, |i| {
        dot(v.layout(), (0..n).map(|j| (g_inv.get(&[i[0], j]), v.get(&[j]))))
    })
}

/// The curvature stack at one point.
///
/// With the metric at jet order `k`: `Γ` has order `k−1`, and `R`, `Ric`,
/// `S`, `𝔨`, `W` order `k−2`.
#[derive(Debug, Clone)]
pub struct CurvaturePack<T: Scalar> {
    pub point: Vec<T>,
    pub g: Tensor<T>,
    pub g_inv: Tensor<T>,
    pub christoffel: Tensor<T>,
    pub riemann: Tensor<T>,
    pub ricci: Tensor<T>,
    pub scalar: Jet<T>,
    pub schouten: Tensor<T>,
    pub weyl: Tensor<T>,
}

impl<T: Scalar> CurvaturePack<T> {
    /// Evaluates `spec` at `point` with metric jets of the given order (2 to 4).
    pub fn compute(spec: &MetricSpec, point: &[T], order: usize) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let jets = eval_metric_at(spec, point, order)?;
        Self::from_metric(&jets, point)
    }

    pub fn from_metric(jets: &MetricJets<T>, point: &[T]) -> Result<Self> {
        let (g, g_inv) = metric_tensors(jets);
        let christoffel = christoffel(&g, &g_inv)?;
        let parts = riemann_pack(&g, &g_inv, &christoffel)?;
        let (schouten, weyl) = schouten_weyl(&g, &parts)?;
        Ok(CurvaturePack {
            point: point.to_vec(),
            g,
            g_inv,
            christoffel,
            riemann: parts.riemann,
            ricci: parts.ricci,
            scalar: parts.scalar,
            schouten,
            weyl,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn g_values(&self) -> crate::linalg::Matrix<T> {
        let n = self.dim();
        crate::linalg::Matrix::from_fn(n, n, |i, j| self.g.get(&[i, j]).value())
    }

    pub fn g_inv_values(&self) -> crate::linalg::Matrix<T> {
        let n = self.dim();
        crate::linalg::Matrix::from_fn(n, n, |i, j| self.g_inv.get(&[i, j]).value())
    }

    pub fn nabla(&self, t: &Tensor<T>) -> Result<Tensor<T>> {
        covariant_derivative(t, &self.christoffel)
    }

    pub fn divergence(&self, t: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
        divergence(t, r, &self.christoffel, &self.g_inv)
    }

    /// `δW = δ₄W`.
    pub fn delta_weyl(&self) -> Result<Tensor<T>> {
        self.divergence(&self.weyl, 4)
    }

    /// `d^∇𝔨`.
    pub fn dnabla_schouten(&self) -> Result<Tensor<T>> {
        dnabla_sym2(&self.schouten, &self.christoffel)
    }

    /// Largest `|g^{jk} W_{ijkl}|` over all index pairs, at the point.
    pub fn weyl_trace_residual(&self) -> T {
        let n = self.dim();
        let w = self.weyl.point_values();
        let gi = self.g_inv_values();
        let mut worst = T::zero();
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (p, q) in pairs {
            for_each_index(n, 2, |free| {
                let mut s = T::zero();
                for a in 0..n {
                    for b in 0..n {
                        let mut idx = [0usize; 4];
                        let mut f = free.iter();
                        for (slot, v) in idx.iter_mut().enumerate() {
                            *v = if slot == p {
                                a
                            } else if slot == q {
                                b
                            } else {
                                *f.next().expect("two free slots")
                            };
                        }
                        s += gi[(a, b)] * w.get(&idx);
                    }
                }
                if s.abs() > worst {
                    worst = s.abs();
                }
            });
        }
        worst
    }
}
