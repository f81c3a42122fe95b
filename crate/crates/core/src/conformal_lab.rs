//! Expression-level rescaling `ḡ = e^{-2φ} g` and two-sided checks of how every
//! curvature quantity and invariant transforms.
//!
//! Each law compares a quantity recomputed from scratch on `ḡ` with the
//! transformation formula applied to the `g` stack.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{raise, trace, Tensor, Values};
use crate::dsl::{BinaryOp, ConformalFactorSpec, Expr, MetricSpec, UnaryOp};
use crate::error::{Error, Result};
use crate::invariants::{conformal_ricci_e, insert_last, outer, Options, PointInvariants};
use crate::jets::Jet;
use crate::weyl_algebra::apply_kernel;

pub const DEFAULT_LAW_TOL: f64 = 1e-6;

/// How residuals are normalized; recorded in every report.
pub const NORMALIZATION: &str = "|lhs - rhs| / (max(|lhs|, |rhs|) + 1), Frobenius norms of coordinate components";

/// Entry-wise `exp(-2φ) g_ij`; zero entries stay zero and `φ = 0` returns `spec` unchanged.
pub fn rescale_spec(spec: &MetricSpec, phi: &ConformalFactorSpec) -> Result<MetricSpec> {
    phi.phi.validate(spec.dim())?;
    if phi.phi.is_zero() {
        return Ok(spec.clone());
    }
    let factor = Expr::unary(
        UnaryOp::Exp,
        Expr::binary(BinaryOp::Mul, Expr::Const(-2.0), phi.phi.clone()),
    );
    let mut out = spec.map_entries(|e| Expr::binary(BinaryOp::Mul, factor.clone(), e.clone()));
    out.notes.push(format!(
        "rescaled by exp(-2*({}))",
        phi.phi.display(spec.coord_names())
    ));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// `Γ̄ = Γ − dφ⊗Id − Id⊗dφ + g⊗∇φ`.
    Connection,
    /// `W̄ = e^{-2φ} W`.
    Weyl,
    /// `δ̄W̄ = δW − (n−3) W(·,·,·,∇φ)`.
    DeltaWeyl,
    /// `R̄ic = Ric + (n−2)(∇²φ + dφ⊗dφ) + (Δφ − (n−2)|∇φ|²) g`.
    Ricci,
    /// `𝕋̄ = ψ²𝕋 − ψ²(∇φ)_{E⊥}`.
    TField,
    /// `C̄_𝕋̄ = C_𝕋`.
    Cotton,
    /// `Ē = E`.
    ConformalRicci,
    /// `B̄_𝕋̄ = ψ² B_𝕋`.
    Bach,
    /// `B̂̄_𝕋̄ = ψ² B̂_𝕋`, when `C_𝕋 = 0`.
    BachHat,
    /// `𝒲̄(sym Ē) = ψ² 𝒲(sym E)`, when `C_𝕋 = 0` or `(∇φ)_E = 0`.
    WSymE,
    /// `δ̄W̄_Z = (n−3) 𝒲̄(Z*∧d(−φ))` when `g` has harmonic Weyl tensor.
    HarmonicWeyl,
}

impl Law {
    pub const ALL: [Law; 11] = [
        Law::Connection,
        Law::Weyl,
        Law::DeltaWeyl,
        Law::Ricci,
        Law::TField,
        Law::Cotton,
        Law::ConformalRicci,
        Law::Bach,
        Law::BachHat,
        Law::WSymE,
        Law::HarmonicWeyl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::Connection => "connection",
            Law::Weyl => "weyl",
            Law::DeltaWeyl => "delta_weyl",
            Law::Ricci => "ricci",
            Law::TField => "t_field",
            Law::Cotton => "cotton",
            Law::ConformalRicci => "conformal_ricci",
            Law::Bach => "bach",
            Law::BachHat => "bach_hat",
            Law::WSymE => "w_sym_e",
            Law::HarmonicWeyl => "harmonic_weyl",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Law {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Law::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Law::ALL.iter().map(|l| l.name()).collect();
                format!("unknown law `{s}`, expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum LawStatus {
    Pass,
    Fail,
    NotApplicable(String),
    Unavailable(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct LawResidual {
    pub law: Law,
    pub status: LawStatus,
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointLaws {
    pub index: usize,
    pub point: Vec<f64>,
    pub laws: Vec<LawResidual>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LawSummary {
    pub law: Law,
    pub max_residual: Option<f64>,
    pub passed: usize,
    pub failed: usize,
    pub not_applicable: usize,
    pub unavailable: usize,
    /// No failing and no unavailable point.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformationLawReport {
    pub metric: Option<String>,
    pub phi: String,
    pub tolerance: f64,
    pub normalization: &'static str,
    pub points: Vec<PointLaws>,
    pub laws: Vec<LawSummary>,
    pub max_residual: f64,
    pub pass: bool,
}

impl TransformationLawReport {
    pub fn summary(&self, law: Law) -> &LawSummary {
        self.laws
            .iter()
            .find(|s| s.law == law)
            .expect("every law is summarized")
    }

    pub fn failing_laws(&self) -> Vec<Law> {
        self.laws.iter().filter(|s| !s.pass).map(|s| s.law).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LabOptions {
    pub invariants: Options,
    pub tol: f64,
    /// Perturbs the right side of one law, to exercise the failure path.
    pub corrupt: Option<Law>,
    pub parallel: bool,
}

impl Default for LabOptions {
    fn default() -> Self {
        LabOptions {
            invariants: Options::default(),
            tol: DEFAULT_LAW_TOL,
            corrupt: None,
            parallel: true,
        }
    }
}

fn values_of(t: &Tensor<f64>) -> Values<f64> {
    Values {
        dim: t.dim(),
        rank: t.rank(),
        data: t.values(),
    }
}

/// `|lhs − rhs| / (max(|lhs|, |rhs|) + 1)`.
pub fn relative_residual(lhs: &Values<f64>, rhs: &Values<f64>) -> f64 {
    let diff = lhs.sub(rhs).coordinate_norm();
    diff / (lhs.coordinate_norm().max(rhs.coordinate_norm()) + 1.0)
}

struct Ctx<'a> {
    options: &'a LabOptions,
    out: Vec<LawResidual>,
}

impl Ctx<'_> {
    fn compare(&mut self, law: Law, lhs: Values<f64>, mut rhs: Values<f64>, note: Option<String>) {
        if self.options.corrupt == Some(law) {
            rhs = rhs.scale(1.01);
            if let Some(first) = rhs.data.first_mut() {
                *first += 0.01;
            }
        }
        let r = relative_residual(&lhs, &rhs);
        let status = if r < self.options.tol {
            LawStatus::Pass
        } else {
            LawStatus::Fail
        };
        self.out.push(LawResidual {
            law,
            status,
            residual: Some(r),
            note,
        });
    }

    fn try_compare(&mut self, law: Law, sides: Result<(Values<f64>, Values<f64>)>, note: Option<String>) {
        match sides {
            Ok((l, r)) => self.compare(law, l, r, note),
            Err(e) => self.skip(law, LawStatus::Unavailable(e.to_string())),
        }
    }

    fn skip(&mut self, law: Law, status: LawStatus) {
        self.out.push(LawResidual {
            law,
            status,
            residual: None,
            note: None,
        });
    }
}

fn ok<T>(r: &Result<T>) -> Result<&T> {
    r.as_ref().map_err(Clone::clone)
}

/// Evaluates every law at one point.
pub fn point_laws(
    spec: &MetricSpec,
    rescaled: &MetricSpec,
    phi: &ConformalFactorSpec,
    point: &[f64],
    options: &LabOptions,
) -> Vec<LawResidual> {
    let mut ctx = Ctx {
        options,
        out: Vec::with_capacity(Law::ALL.len()),
    };
    if let Err(e) = point_laws_into(&mut ctx, spec, rescaled, phi, point) {
        let done: Vec<Law> = ctx.out.iter().map(|r| r.law).collect();
        for law in Law::ALL {
            if !done.contains(&law) {
                ctx.skip(law, LawStatus::Unavailable(e.to_string()));
            }
        }
    }
    ctx.out
}

fn point_laws_into(
    ctx: &mut Ctx<'_>,
    spec: &MetricSpec,
    rescaled: &MetricSpec,
    phi: &ConformalFactorSpec,
    point: &[f64],
) -> Result<()> {
    let opts = &ctx.options.invariants;
    let tol = ctx.options.tol;
    let a = PointInvariants::evaluate(spec, point, opts)?;
    let b = PointInvariants::evaluate(rescaled, point, opts)?;
    let n = a.dim();
    let nf = n as f64;
    let pack = &a.pack;

    let vars = Jet::variables(point, opts.order)?;
    let phi_jet = phi.phi.eval_jet(&vars)?;
    let dphi = Tensor::try_from_fn(n, 0, 1, |i| phi_jet.derivative(i[0]))?;
    let grad = raise(&dphi, &pack.g_inv);
    let psi2 = (2.0 * phi_jet.value()).exp();
    let grad_v = grad.values();
    let dphi_v = dphi.values();

    // connection
    let gamma = pack.christoffel.values();
    let g = pack.g_values();
    let rhs = Values {
        dim: n,
        rank: 3,
        data: (0..n * n * n)
            .map(|f| {
                let (k, i, j) = (f / (n * n), (f / n) % n, f % n);
                let mut v = gamma[f] + g[(i, j)] * grad_v[k];
                if k == j {
                    v -= dphi_v[i];
                }
                if k == i {
                    v -= dphi_v[j];
                }
                v
            })
            .collect(),
    };
    ctx.compare(Law::Connection, values_of(&b.pack.christoffel), rhs, None);

    ctx.compare(
        Law::Weyl,
        values_of(&b.pack.weyl),
        values_of(&pack.weyl).scale(1.0 / psi2),
        None,
    );

    ctx.try_compare(
        Law::DeltaWeyl,
        (|| {
            let rhs = ok(&a.delta_w)?.sub(&insert_last(&pack.weyl, &grad).scale(nf - 3.0))?;
            Ok((values_of(ok(&b.delta_w)?), values_of(&rhs)))
        })(),
        None,
    );

    ctx.try_compare(
        Law::Ricci,
        (|| {
            let hess = pack.nabla(&dphi)?;
            let lap = trace(&hess, &pack.g_inv);
            let sq = dphi_v.iter().zip(&grad_v).map(|(x, y)| x * y).sum::<f64>();
            let scalar_part = lap.value() - (nf - 2.0) * sq;
            let rhs = pack
                .ricci
                .add(&hess.add(&outer(&dphi, &dphi))?.scale(nf - 2.0))?
                .add(&pack.g.scale(scalar_part))?;
            Ok((values_of(&b.pack.ricci), values_of(&rhs)))
        })(),
        None,
    );

    // (∇φ)_E with respect to g, from the g-orthonormal kernel basis of 𝔴
    let mut grad_e = vec![0.0; n];
    for v in &a.algebra.e.basis {
        let mut c = 0.0;
        for i in 0..n {
            for j in 0..n {
                c += g[(i, j)] * v[i] * grad_v[j];
            }
        }
        for i in 0..n {
            grad_e[i] += c * v[i];
        }
    }
    let grad_norm = grad_v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let grad_e_norm = grad_e.iter().map(|x| x * x).sum::<f64>().sqrt();
    let e_aligned = grad_e_norm <= tol * (1.0 + grad_norm);

    let ranks = (a.algebra.e.rank, b.algebra.e.rank);
    match (&a.t, &b.t) {
        _ if ranks.0 != ranks.1 => ctx.skip(
            Law::TField,
            LawStatus::Unavailable(format!("rank E differs: {} vs {}", ranks.0, ranks.1)),
        ),
        (Ok(ta), Ok(tb)) => {
            let t = ta.vector.values();
            let rhs: Vec<f64> = (0..n)
                .map(|i| psi2 * (t[i] - (grad_v[i] - grad_e[i])))
                .collect();
            let lhs = Values {
                dim: n,
                rank: 1,
                data: tb.vector.values(),
            };
            ctx.compare(Law::TField, lhs, Values { dim: n, rank: 1, data: rhs }, None);
        }
        (Err(e), _) | (_, Err(e)) => ctx.skip(Law::TField, LawStatus::Unavailable(e.to_string())),
    }

    ctx.try_compare(
        Law::Cotton,
        (|| Ok((values_of(ok(&b.cotton)?), values_of(ok(&a.cotton)?))))(),
        None,
    );

    let (e_lhs, e_note) = if e_aligned {
        (ok(&b.e).cloned(), None)
    } else {
        let transported = (|| {
            let t = ok(&a.t)?;
            conformal_ricci_e(&b.pack, &t.covector.sub(&dphi)?)
        })();
        (
            transported,
            Some("grad phi has a component in E; compared E of the transported field T* - dphi".to_string()),
        )
    };
    ctx.try_compare(
        Law::ConformalRicci,
        (|| Ok((values_of(&e_lhs?), values_of(ok(&a.e)?))))(),
        e_note,
    );

    ctx.try_compare(
        Law::Bach,
        (|| Ok((values_of(ok(&b.bach)?), values_of(ok(&a.bach)?).scale(psi2))))(),
        None,
    );

    let cotton_small = match &a.cotton {
        Ok(c) => Ok(a.norm(c) < tol),
        Err(e) => Err(e.clone()),
    };
    for (law, lhs, rhs) in [
        (Law::BachHat, &b.bach_hat, &a.bach_hat),
        (Law::WSymE, &b.w_sym_e, &a.w_sym_e),
    ] {
        let waived = law == Law::WSymE && e_aligned;
        match &cotton_small {
            _ if waived => ctx.try_compare(
                law,
                (|| Ok((values_of(ok(lhs)?), values_of(ok(rhs)?).scale(psi2))))(),
                None,
            ),
            Ok(true) => ctx.try_compare(
                law,
                (|| Ok((values_of(ok(lhs)?), values_of(ok(rhs)?).scale(psi2))))(),
                None,
            ),
            Ok(false) => ctx.skip(law, LawStatus::NotApplicable("C_T does not vanish".into())),
            Err(e) => ctx.skip(law, LawStatus::Unavailable(e.to_string())),
        }
    }

    match &a.delta_w {
        Ok(dw) if a.norm(dw) < tol => ctx.try_compare(
            Law::HarmonicWeyl,
            (|| {
                let bg = &b.pack.g;
                let bdw = ok(&b.delta_w)?;
                let mut data = vec![0.0; n * n * n];
                for z in 0..n {
                    // ω = Z* ∧ d(−φ) with Z* lowered by ḡ
                    let omega = Tensor::from_fn(n, 0, 2, |i| {
                        (bg.get(&[i[1], z]) * dphi.get(&[i[0]])) - (bg.get(&[i[0], z]) * dphi.get(&[i[1]]))
                    });
                    let w = apply_kernel(&b.algebra.kernel, &omega)?.scale(nf - 3.0);
                    for x in 0..n {
                        for y in 0..n {
                            data[(x * n + y) * n + z] = w.get(&[x, y]).value();
                        }
                    }
                }
                Ok((values_of(bdw), Values { dim: n, rank: 3, data }))
            })(),
            None,
        ),
        Ok(_) => ctx.skip(
            Law::HarmonicWeyl,
            LawStatus::NotApplicable("g does not have harmonic Weyl tensor".into()),
        ),
        Err(e) => ctx.skip(Law::HarmonicWeyl, LawStatus::Unavailable(e.to_string())),
    }
    Ok(())
}

/// Rescales `spec` by `φ` and checks every law at each of `points`.
pub fn check_transformation_laws(
    spec: &MetricSpec,
    phi: &ConformalFactorSpec,
    points: &[Vec<f64>],
    options: &LabOptions,
) -> Result<TransformationLawReport> {
    let rescaled = rescale_spec(spec, phi)?;
    if let Some(p) = points.iter().find(|p| p.len() != spec.dim()) {
        return Err(Error::Shape(format!(
            "point has {} coordinates, metric has dimension {}",
            p.len(),
            spec.dim()
        )));
    }
    let one = |(index, p): (usize, &Vec<f64>)| PointLaws {
        index,
        point: p.clone(),
        laws: point_laws(spec, &rescaled, phi, p, options),
    };
    let per_point: Vec<PointLaws> = if options.parallel {
        points.par_iter().enumerate().map(one).collect()
    } else {
        points.iter().enumerate().map(one).collect()
    };

    let mut summaries: BTreeMap<Law, LawSummary> = Law::ALL
        .into_iter()
        .map(|law| {
            (
                law,
                LawSummary {
                    law,
                    max_residual: None,
                    passed: 0,
                    failed: 0,
                    not_applicable: 0,
                    unavailable: 0,
                    pass: true,
                },
            )
        })
        .collect();
    for p in &per_point {
        for r in &p.laws {
            let s = summaries.get_mut(&r.law).expect("known law");
            if let Some(v) = r.residual {
                s.max_residual = Some(s.max_residual.map_or(v, |m: f64| m.max(v)));
            }
            match r.status {
                LawStatus::Pass => s.passed += 1,
                LawStatus::Fail => s.failed += 1,
                LawStatus::NotApplicable(_) => s.not_applicable += 1,
                LawStatus::Unavailable(_) => s.unavailable += 1,
            }
        }
    }
    let laws: Vec<LawSummary> = summaries
        .into_values()
        .map(|mut s| {
            s.pass = s.failed == 0 && s.unavailable == 0;
            s
        })
        .collect();
    let max_residual = laws
        .iter()
        .filter_map(|s| s.max_residual)
        .fold(0.0, f64::max);
    let pass = laws.iter().all(|s| s.pass);
    Ok(TransformationLawReport {
        metric: spec.name.clone(),
        phi: phi.phi.display(spec.coord_names()).to_string(),
        tolerance: options.tol,
        normalization: NORMALIZATION,
        points: per_point,
        laws,
        max_residual,
        pass,
    })
}
