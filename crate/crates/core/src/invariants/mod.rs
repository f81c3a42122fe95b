//! The vector field `𝕋` and the tensors built from it: `C_𝕋`, `E_𝕋`, `B_𝕋`,
//! `B̂_𝕋`, `𝒲(sym E_𝕋)`, plus identity residuals and classification.

mod report;

use serde::Serialize;

use crate::curvature::{covariant_derivative, raise, CurvaturePack, Tensor};
use crate::dsl::MetricSpec;
use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::scalar::Scalar;
use crate::weyl_algebra::{apply_kernel, WeylAlgebraPack, DEFAULT_RANK_TOL};

pub use report::{
    classify, classify_points, Aggregate, Availability, ClassifyRun, InvariantReport, Norms, Verdict,
};

/// Default tolerance for a dimension-normalized norm to count as zero.
pub const DEFAULT_VANISH_TOL: f64 = 1e-6;

/// Step of the central differences used when `𝕋` is only available pointwise.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    /// Tolerance on normalized norms for "vanishes".
    pub tol: f64,
    /// Relative spectral threshold for the kernel of `𝔴`.
    pub rank_tol: f64,
    /// Jet order of the metric, 2 to 4.
    pub order: usize,
    /// Differentiate `𝕋` by finite differences even when the jet solve is available.
    pub force_fd: bool,
    pub fd_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: DEFAULT_VANISH_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            order: 4,
            force_fd: false,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

/// How `𝕋` was obtained at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TMethod {
    /// Jet-valued solve with the invertible `𝔴`.
    #[serde(rename = "jet")]
    Jet,
    /// Moore–Penrose inverse at the point only; no derivatives.
    #[serde(rename = "pointwise")]
    Pointwise,
    /// Pointwise values differentiated by central differences.
    #[serde(rename = "FD-fallback")]
    FdFallback,
}

#[derive(Debug, Clone)]
pub struct TField<T: Scalar> {
    pub covector: Tensor<T>,
    pub vector: Tensor<T>,
    pub method: TMethod,
}

/// `ν_x = Σ_i 𝒲(δW_{e_i})(e_i, x)` where `δW_Z(X,Y) = δW(X,Y,Z)`.
pub fn t_numerator<T: Scalar>(
    pack: &CurvaturePack<T>,
    algebra: &WeylAlgebraPack<T>,
    delta_w: &Tensor<T>,
) -> Tensor<T> {
    let n = pack.dim();
    let layout = pack.g.layout().clone();
    let k = &algebra.kernel;
    let order = k.order().min(delta_w.order());
    // u[a, x, b] = 𝒲(δW_b)_{ax}
    let u = Tensor::from_fn(n, 0, 3, |idx| {
        let (a, x, b) = (idx[0], idx[1], idx[2]);
        let mut acc = Jet::zero(&layout, order);
        for p in 0..n {
            for q in 0..n {
                acc.add_product(k.get(&[a, x, p, q]), delta_w.get(&[p, q, b]));
            }
        }
        acc
    });
    Tensor::from_fn(n, 0, 1, |idx| {
        let mut acc = Jet::zero(&layout, order);
        for a in 0..n {
            for b in 0..n {
                acc.add_product(pack.g_inv.get(&[a, b]), u.get(&[a, idx[0], b]));
            }
        }
        acc
    })
}

fn require_dim<T: Scalar>(pack: &CurvaturePack<T>, what: &'static str) -> Result<()> {
    if pack.dim() < 4 {
        return Err(Error::DimensionTooSmall {
            what,
            dim: pack.dim(),
            min: 4,
        });
    }
    Ok(())
}

/// `𝕋* = 𝔴^#(ν) / (n−3)` and its vector.
///
/// Jet-valued when `rank E = 0`, otherwise the pointwise value only.
pub fn field_t<T: Scalar>(
    pack: &CurvaturePack<T>,
    algebra: &WeylAlgebraPack<T>,
    delta_w: &Tensor<T>,
) -> Result<TField<T>> {
    require_dim(pack, "the vector field T")?;
    if !algebra.e.regular {
        return Err(Error::NearRankBoundary {
            ratio: algebra.e.gap_ratio.to_f64_lossy(),
        });
    }
    let n = pack.dim();
    let c = T::one() / T::count(n - 3);
    let nu = t_numerator(pack, algebra, delta_w).scale(c);
    let layout = pack.g.layout().clone();
    let (covector, method) = if algebra.e.rank == 0 && nu.order() >= 1 {
        let rhs = vec![nu.components().to_vec()];
        let sol = algebra.w_frak.solve(&rhs)?;
        (Tensor::from_fn(n, 0, 1, |i| sol[0][i[0]].clone()), TMethod::Jet)
    } else {
        let v = algebra.w_sharp.matvec(&nu.values());
        (
            Tensor::from_fn(n, 0, 1, |i| Jet::constant(&layout, 0, v[i[0]])),
            TMethod::Pointwise,
        )
    };
    let vector = raise(&covector, &pack.g_inv);
    Ok(TField {
        covector,
        vector,
        method,
    })
}

/// Pointwise `𝕋*` and `rank E` at `point`, from metric jets of order 3.
pub fn pointwise_t<T: Scalar>(spec: &MetricSpec, point: &[T], rank_tol: T) -> Result<(Vec<T>, usize)> {
    let pack = CurvaturePack::compute(spec, point, 3)?;
    let algebra = WeylAlgebraPack::compute(&pack, rank_tol)?;
    let t = field_t(&pack, &algebra, &pack.delta_weyl()?)?;
    Ok((t.covector.values(), algebra.e.rank))
}

/// `𝕋*` as an order-1 jet whose first derivatives come from central
/// differences of pointwise values; `rank E` must not change across the stencil.
pub fn field_t_fd<T: Scalar>(
    spec: &MetricSpec,
    pack: &CurvaturePack<T>,
    algebra: &WeylAlgebraPack<T>,
    delta_w: &Tensor<T>,
    h: T,
) -> Result<TField<T>> {
    let n = pack.dim();
    let center = field_t(pack, algebra, delta_w)?.covector.values();
    let rank = algebra.e.rank;
    let layout = pack.g.layout().clone();
    let mut grads = vec![vec![T::zero(); n]; n];
    for k in 0..n {
        let mut plus = pack.point.clone();
        let mut minus = pack.point.clone();
        plus[k] += h;
        minus[k] -= h;
        let (tp, rp) = pointwise_t(spec, &plus, algebra.rel_tol)?;
        let (tm, rm) = pointwise_t(spec, &minus, algebra.rel_tol)?;
        if rp != rank || rm != rank {
            return Err(Error::Unavailable(format!(
                "rank of E changes within the finite-difference stencil ({rm}, {rank}, {rp})"
            )));
        }
        for j in 0..n {
            grads[j][k] = (tp[j] - tm[j]) / (h + h);
        }
    }
    let mut alpha = vec![0usize; n];
    let covector = Tensor::try_from_fn(n, 0, 1, |i| {
        let mut coeffs = vec![T::zero(); layout.len(1)];
        coeffs[0] = center[i[0]];
        for k in 0..n {
            alpha.iter_mut().for_each(|a| *a = 0);
            alpha[k] = 1;
            coeffs[layout.slot(&alpha)?] = grads[i[0]][k];
        }
        Jet::from_coeffs(&layout, 1, coeffs)
    })?;
    let vector = raise(&covector, &pack.g_inv);
    Ok(TField {
        covector,
        vector,
        method: TMethod::FdFallback,
    })
}

/// `A(·,…,·,V)`: inserts a vector into the last slot.
pub fn insert_last<T: Scalar>(a: &Tensor<T>, v: &Tensor<T>) -> Tensor<T> {
    let n = a.dim();
    let r = a.rank();
    let layout = a.layout().clone();
    let order = a.order().min(v.order());
    let mut full = vec![0usize; r];
    Tensor::from_fn(n, 0, r - 1, |idx| {
        let mut acc = Jet::zero(&layout, order);
        full[..r - 1].copy_from_slice(idx);
        for l in 0..n {
            full[r - 1] = l;
            acc.add_product(a.get(&full), v.get(&[l]));
        }
        acc
    })
}

/// `A(V,·,…,·)`: inserts a vector into the first slot.
pub fn insert_first<T: Scalar>(a: &Tensor<T>, v: &Tensor<T>) -> Tensor<T> {
    let n = a.dim();
    let r = a.rank();
    let layout = a.layout().clone();
    let order = a.order().min(v.order());
    let mut full = vec![0usize; r];
    Tensor::from_fn(n, 0, r - 1, |idx| {
        let mut acc = Jet::zero(&layout, order);
        full[1..].copy_from_slice(idx);
        for l in 0..n {
            full[0] = l;
            acc.add_product(a.get(&full), v.get(&[l]));
        }
        acc
    })
}

/// `C_𝕋 = d^∇𝔨 − W(·,·,·,𝕋)`.
pub fn cotton_t<T: Scalar>(dnabla_k: &Tensor<T>, weyl: &Tensor<T>, t: &TField<T>) -> Result<Tensor<T>> {
    dnabla_k.sub(&insert_last(weyl, &t.vector))
}

/// `δW/(n−3) − W(·,·,·,𝕋)`, the form of `C_𝕋` used for computation.
pub fn cotton_t_from_delta_w<T: Scalar>(delta_w: &Tensor<T>, weyl: &Tensor<T>, t: &TField<T>) -> Result<Tensor<T>> {
    let n = delta_w.dim();
    delta_w
        .scale(T::one() / T::count(n - 3))
        .sub(&insert_last(weyl, &t.vector))
}

/// `V*⊗W*`.
pub fn outer<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    Tensor::from_fn(a.dim(), 0, 2, |i| a.get(&[i[0]]) * b.get(&[i[1]]))
}

/// `b + bᵀ`.
pub fn sym<T: Scalar>(b: &Tensor<T>) -> Tensor<T> {
    Tensor::from_fn(b.dim(), 0, 2, |i| b.get(&[i[0], i[1]]) + b.get(&[i[1], i[0]]))
}

/// `dV*(X,Y) = (∇_X V*)(Y) − (∇_Y V*)(X)`.
pub fn exterior_derivative<T: Scalar>(covector: &Tensor<T>, gamma: &Tensor<T>) -> Result<Tensor<T>> {
    let nv = covariant_derivative(covector, gamma)?;
    Ok(Tensor::from_fn(covector.dim(), 0, 2, |i| {
        nv.get(&[i[0], i[1]]) - nv.get(&[i[1], i[0]])
    }))
}

/// Conformal Ricci tensor
/// `E_V = Ric° + (n−2)(∇V* + V*⊗V* − (div V + |V|²) g / n)`.
pub fn conformal_ricci_e<T: Scalar>(pack: &CurvaturePack<T>, v_covector: &Tensor<T>) -> Result<Tensor<T>> {
    v_covector.require_order("conformal Ricci tensor", 1)?;
    let n = pack.dim();
    let nn = T::count(n);
    let nabla_v = pack.nabla(v_covector)?;
    let v_vec = raise(v_covector, &pack.g_inv);
    let div = crate::curvature::trace(&nabla_v, &pack.g_inv);
    let mut sq = Jet::zero(pack.g.layout(), v_covector.order());
    for a in 0..n {
        sq.add_product(v_vec.get(&[a]), v_covector.get(&[a]));
    }
    let trace_part = (&div + &sq).scale(T::one() / nn);
    let ric0 = pack.ricci.sub(&pack.g.mul_jet(&pack.scalar.scale(T::one() / nn)))?;
    let inner = nabla_v
        .add(&outer(v_covector, v_covector))?
        .sub(&pack.g.mul_jet(&trace_part))?;
    ric0.add(&inner.scale(nn - T::lit(2.0)))
}

/// `δ₁δ₄W`.
pub fn delta1_delta4_w<T: Scalar>(pack: &CurvaturePack<T>, delta_w: &Tensor<T>) -> Result<Tensor<T>> {
    pack.divergence(delta_w, 1)
}

/// Inputs shared by the Bach-type tensors.
pub struct BachInputs<'a, T: Scalar> {
    pub pack: &'a CurvaturePack<T>,
    pub algebra: &'a WeylAlgebraPack<T>,
    pub delta1_delta4_w: &'a Tensor<T>,
    pub t: &'a TField<T>,
    pub cotton: &'a Tensor<T>,
    pub e: &'a Tensor<T>,
}

fn frac<T: Scalar>(a: isize, b: isize) -> T {
    T::lit(a as f64 / b as f64)
}

/// Generalized Bach tensor
/// `B_𝕋 = δ₁δ₄W + (n−3)/(n−2) 𝒲(Ric) − (n−4)/(n−2) 𝒲(sym E_𝕋)
///        − (n−3)(n−4) [𝒲(𝕋*⊗𝕋*) + sym C_𝕋(𝕋,·,·)]`.
pub fn bach_t<T: Scalar>(x: &BachInputs<'_, T>) -> Result<Tensor<T>> {
    let n = x.pack.dim() as isize;
    let k = &x.algebra.kernel;
    let w_ric = apply_kernel(k, &x.pack.ricci)?;
    let w_sym_e = apply_kernel(k, &sym(x.e))?;
    let w_tt = apply_kernel(k, &outer(&x.t.covector, &x.t.covector))?;
    let c_t = sym(&insert_first(x.cotton, &x.t.vector));
    x.delta1_delta4_w
        .add(&w_ric.scale(frac(n - 3, n - 2)))?
        .sub(&w_sym_e.scale(frac(n - 4, n - 2)))?
        .sub(&w_tt.add(&c_t)?.scale(T::lit(((n - 3) * (n - 4)) as f64)))
}

/// `B̂_𝕋 = δ₁δ₄W + (n−3)/(n−2) 𝒲(Ric) − (n−3)(n−4) W(𝕋,·,·,𝕋)` and `𝒲(sym E_𝕋)`.
pub fn bach_hat_and_wsym_e<T: Scalar>(x: &BachInputs<'_, T>) -> Result<(Tensor<T>, Tensor<T>)> {
    let n = x.pack.dim() as isize;
    let k = &x.algebra.kernel;
    let w_ric = apply_kernel(k, &x.pack.ricci)?;
    let w_t_t = insert_first(&insert_last(&x.pack.weyl, &x.t.vector), &x.t.vector);
    let hat = x
        .delta1_delta4_w
        .add(&w_ric.scale(frac(n - 3, n - 2)))?
        .sub(&w_t_t.scale(T::lit(((n - 3) * (n - 4)) as f64)))?;
    let w_sym_e = apply_kernel(k, &sym(x.e))?;
    Ok((hat, w_sym_e))
}

/// Classical Bach tensor `δ₁δ₄W + ½𝒲(Ric)` of a 4-manifold.
pub fn classical_bach<T: Scalar>(
    pack: &CurvaturePack<T>,
    algebra: &WeylAlgebraPack<T>,
    delta1_delta4_w: &Tensor<T>,
) -> Result<Tensor<T>> {
    if pack.dim() != 4 {
        return Err(Error::Shape("the classical Bach tensor is four-dimensional".into()));
    }
    delta1_delta4_w.add(&apply_kernel(&algebra.kernel, &pack.ricci)?.scale(T::lit(0.5)))
}

/// Residuals of the divergence identity for `C_𝕋`.
#[derive(Debug, Clone, Copy)]
pub struct Delta3<T> {
    /// `|δ₃C_𝕋 − (n−3) C_𝕋(·,·,𝕋) + 𝒲(d𝕋*)|`.
    pub residual: T,
    /// `|δ₃C_𝕋 − C_𝕋(·,·,𝕋) + 𝒲(d𝕋*)|`; agrees with the above only for `n = 4`.
    pub unit_coefficient_residual: T,
    /// `|δ₃δ₄W|`, zero by the symmetries of `∇²W`.
    pub delta3_delta_w: T,
}

/// Evaluates both forms of the `δ₃C_𝕋` identity (metric norms, not normalized).
pub fn delta3_residual<T: Scalar>(
    pack: &CurvaturePack<T>,
    algebra: &WeylAlgebraPack<T>,
    cotton: &Tensor<T>,
    t: &TField<T>,
    delta_w: &Tensor<T>,
) -> Result<Delta3<T>> {
    cotton.require_order("divergence of C_T", 1)?;
    let n = pack.dim();
    let g_inv = pack.g_inv_values();
    let d3c = pack.divergence(cotton, 3)?;
    let c_t = insert_last(cotton, &t.vector);
    let dt = exterior_derivative(&t.covector, &pack.christoffel)?;
    let w_dt = apply_kernel(&algebra.kernel, &dt)?;
    let base = d3c.add(&w_dt)?;
    let residual = base
        .sub(&c_t.scale(T::count(n - 3)))?
        .point_values()
        .metric_norm(&g_inv);
    let unit = base.sub(&c_t)?.point_values().metric_norm(&g_inv);
    let d3dw = pack.divergence(delta_w, 3)?.point_values().metric_norm(&g_inv);
    Ok(Delta3 {
        residual,
        unit_coefficient_residual: unit,
        delta3_delta_w: d3dw,
    })
}

/// All invariants at one point; derivative-dependent entries carry their own error.
#[derive(Debug, Clone)]
pub struct PointInvariants<T: Scalar> {
    pub pack: CurvaturePack<T>,
    pub algebra: WeylAlgebraPack<T>,
    pub delta_w: Result<Tensor<T>>,
    pub dnabla_schouten: Result<Tensor<T>>,
    pub t: Result<TField<T>>,
    pub dt: Result<Tensor<T>>,
    pub cotton: Result<Tensor<T>>,
    /// `δW/(n−3) − W(·,·,·,𝕋)`, compared against `cotton`.
    pub cotton_alt: Result<Tensor<T>>,
    pub e: Result<Tensor<T>>,
    pub delta1_delta4_w: Result<Tensor<T>>,
    pub bach: Result<Tensor<T>>,
    pub bach_hat: Result<Tensor<T>>,
    pub w_sym_e: Result<Tensor<T>>,
    pub classical_bach: Option<Result<Tensor<T>>>,
    pub delta3: Result<Delta3<T>>,
}

fn unavailable<T>(what: &str, cause: &Result<T>) -> Error {
    match cause {
        Err(e) => Error::Unavailable(format!("{what}: {e}")),
        Ok(_) => Error::Unavailable(what.to_string()),
    }
}

impl<T: Scalar> PointInvariants<T> {
    pub fn evaluate(spec: &MetricSpec, point: &[T], options: &Options) -> Result<Self> {
        let pack = CurvaturePack::compute(spec, point, options.order)?;
        require_dim(&pack, "conformal invariants")?;
        let algebra = WeylAlgebraPack::compute(&pack, T::lit(options.rank_tol))?;
        let delta_w = pack.delta_weyl();
        let dnabla_schouten = pack.dnabla_schouten();
        let t = match &delta_w {
            Ok(dw) => {
                let jet_path = field_t(&pack, &algebra, dw);
                match jet_path {
                    Ok(t) if t.method == TMethod::Jet && !options.force_fd => Ok(t),
                    Ok(_) if dw.order() >= 1 || options.force_fd => {
                        field_t_fd(spec, &pack, &algebra, dw, T::lit(options.fd_step))
                    }
                    other => other,
                }
            }
            Err(e) => Err(e.clone()),
        };
        let dt = match &t {
            Ok(t) if t.covector.order() >= 1 => exterior_derivative(&t.covector, &pack.christoffel),
            other => Err(unavailable("dT* needs the derivative of T", other)),
        };
        let cotton = match (&dnabla_schouten, &t) {
            (Ok(dk), Ok(t)) => cotton_t(dk, &pack.weyl, t),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        let cotton_alt = match (&delta_w, &t) {
            (Ok(dw), Ok(t)) => cotton_t_from_delta_w(dw, &pack.weyl, t),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        let e = match &t {
            Ok(t) if t.covector.order() >= 1 => conformal_ricci_e(&pack, &t.covector),
            other => Err(unavailable("E_T needs the derivative of T", other)),
        };
        let delta1_delta4_w = match &delta_w {
            Ok(dw) => delta1_delta4_w(&pack, dw),
            Err(e) => Err(e.clone()),
        };
        let (bach, bach_hat, w_sym_e) = match (&delta1_delta4_w, &t, &cotton, &e) {
            (Ok(dd), Ok(t), Ok(c), Ok(e)) => {
                let inputs = BachInputs {
                    pack: &pack,
                    algebra: &algebra,
                    delta1_delta4_w: dd,
                    t,
                    cotton: c,
                    e,
                };
                let b = bach_t(&inputs);
                match bach_hat_and_wsym_e(&inputs) {
                    Ok((h, w)) => (b, Ok(h), Ok(w)),
                    Err(err) => (b, Err(err.clone()), Err(err)),
                }
            }
            (Err(err), ..) | (_, Err(err), ..) | (_, _, Err(err), _) | (.., Err(err)) => {
                let err = Error::Unavailable(format!("Bach tensors: {err}"));
                (Err(err.clone()), Err(err.clone()), Err(err))
            }
        };
        let classical_bach = (pack.dim() == 4).then(|| match &delta1_delta4_w {
            Ok(dd) => classical_bach(&pack, &algebra, dd),
            Err(e) => Err(e.clone()),
        });
        let delta3 = match (&cotton, &t, &delta_w) {
            (Ok(c), Ok(t), Ok(dw)) if c.order() >= 1 && t.covector.order() >= 1 => {
                delta3_residual(&pack, &algebra, c, t, dw)
            }
            (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => Err(e.clone()),
            _ => Err(Error::Unavailable(
                "divergence identity needs C_T and T at order 1".into(),
            )),
        };
        Ok(PointInvariants {
            pack,
            algebra,
            delta_w,
            dnabla_schouten,
            t,
            dt,
            cotton,
            cotton_alt,
            e,
            delta1_delta4_w,
            bach,
            bach_hat,
            w_sym_e,
            classical_bach,
            delta3,
        })
    }

    pub fn dim(&self) -> usize {
        self.pack.dim()
    }

    /// Dimension-normalized metric norm of a covariant tensor at the point.
    pub fn norm(&self, t: &Tensor<T>) -> f64 {
        t.point_values()
            .normalized_norm(&self.pack.g_inv_values())
            .to_f64_lossy()
    }
}
