use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{Options, PointInvariants, TMethod};
use crate::curvature::Tensor;
use crate::dsl::MetricSpec;
use crate::error::Result;
use crate::sampling::sample_points;

/// Outcome of the obstruction test at a point, ordered from best to worst.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Verdict {
    ConformallyFlat,
    /// `rank E = 0` and every obstruction vanishes: locally conformally Einstein.
    NecessaryConditionsPass,
    Indeterminate(String),
    /// Names of the obstructions that do not vanish.
    Obstructed(Vec<String>),
}

impl Verdict {
    pub fn severity(&self) -> u8 {
        match self {
            Verdict::ConformallyFlat => 0,
            Verdict::NecessaryConditionsPass => 1,
            Verdict::Indeterminate(_) => 2,
            Verdict::Obstructed(_) => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ConformallyFlat => "conformally_flat",
            Verdict::NecessaryConditionsPass => "necessary_conditions_pass",
            Verdict::Indeterminate(_) => "indeterminate",
            Verdict::Obstructed(_) => "obstructed",
        }
    }
}

/// Dimension-normalized norms; `None` where the quantity is unavailable.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Norms {
    pub weyl: Option<f64>,
    pub delta_weyl: Option<f64>,
    pub t: Option<f64>,
    pub cotton: Option<f64>,
    /// Difference between the two expressions for `C_𝕋`.
    pub cotton_consistency: Option<f64>,
    pub e: Option<f64>,
    pub dt: Option<f64>,
    pub bach: Option<f64>,
    pub bach_hat: Option<f64>,
    pub w_sym_e: Option<f64>,
    pub classical_bach: Option<f64>,
    pub delta3_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Availability {
    /// Reason for each quantity that could not be evaluated.
    pub missing: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub index: usize,
    pub point: Vec<f64>,
    pub rank_e: Option<usize>,
    pub regular: Option<bool>,
    pub gap_ratio: Option<f64>,
    pub weyl_kernel_dim: Option<usize>,
    pub kernel_bound: Option<bool>,
    pub method: Option<TMethod>,
    /// Components of the vector `𝕋` at the point.
    pub t: Option<Vec<f64>>,
    pub norms: Norms,
    pub availability: Availability,
    pub verdict: Verdict,
    /// Numeric failure that prevented evaluation at this point.
    pub error: Option<String>,
}

impl InvariantReport {
    pub fn from_invariants(index: usize, inv: &PointInvariants<f64>, tol: f64) -> Self {
        let mut missing = BTreeMap::new();
        let mut norm = |name: &str, t: &Result<Tensor<f64>>| match t {
            Ok(t) => Some(inv.norm(t)),
            Err(e) => {
                missing.insert(name.to_string(), e.to_string());
                None
            }
        };
        let mut norms = Norms {
            weyl: Some(inv.norm(&inv.pack.weyl)),
            delta_weyl: norm("delta_weyl", &inv.delta_w),
            cotton: norm("C_T", &inv.cotton),
            e: norm("E_T", &inv.e),
            dt: norm("dT*", &inv.dt),
            bach: norm("B_T", &inv.bach),
            bach_hat: norm("B_hat_T", &inv.bach_hat),
            w_sym_e: norm("W(sym E_T)", &inv.w_sym_e),
            ..Norms::default()
        };
        if let Some(cb) = &inv.classical_bach {
            norms.classical_bach = norm("classical_bach", cb);
        }
        match &inv.t {
            Ok(t) => norms.t = Some(inv.norm(&t.covector)),
            Err(e) => {
                missing.insert("T".into(), e.to_string());
            }
        }
        if let (Ok(a), Ok(b)) = (&inv.cotton, &inv.cotton_alt) {
            norms.cotton_consistency = a.sub(b).ok().map(|d| inv.norm(&d));
        }
        match &inv.delta3 {
            Ok(d) => {
                norms.delta3_residual = Some(d.residual / inv.dim() as f64);
            }
            Err(e) => {
                missing.insert("delta3_identity".into(), e.to_string());
            }
        }
        let e = &inv.algebra.e;
        let verdict = point_verdict(&norms, e.rank, e.regular, &missing, tol);
        InvariantReport {
            index,
            point: inv.pack.point.clone(),
            rank_e: Some(e.rank),
            regular: Some(e.regular),
            gap_ratio: Some(e.gap_ratio),
            weyl_kernel_dim: Some(inv.algebra.weyl_kernel_dim),
            kernel_bound: Some(inv.algebra.kernel_bound_holds(inv.dim())),
            method: inv.t.as_ref().ok().map(|t| t.method),
            t: inv.t.as_ref().ok().map(|t| t.vector.values()),
            norms,
            availability: Availability { missing },
            verdict,
            error: None,
        }
    }

    pub fn failed(index: usize, point: Vec<f64>, error: String) -> Self {
        InvariantReport {
            index,
            point,
            rank_e: None,
            regular: None,
            gap_ratio: None,
            weyl_kernel_dim: None,
            kernel_bound: None,
            method: None,
            t: None,
            norms: Norms::default(),
            availability: Availability {
                missing: BTreeMap::new(),
            },
            verdict: Verdict::Indeterminate(format!("evaluation failed: {error}")),
            error: Some(error),
        }
    }
}

fn point_verdict(
    norms: &Norms,
    rank: usize,
    regular: bool,
    missing: &BTreeMap<String, String>,
    tol: f64,
) -> Verdict {
    if norms.weyl.is_some_and(|w| w < tol) {
        return Verdict::ConformallyFlat;
    }
    if !regular {
        return Verdict::Indeterminate("spectrum of w is near a rank boundary".into());
    }
    if rank != 0 {
        return Verdict::Indeterminate(format!("rank E = {rank}"));
    }
    let checks = [
        ("E_T", norms.e),
        ("dT*", norms.dt),
        ("C_T", norms.cotton),
        ("B_T", norms.bach),
    ];
    let mut obstructed = Vec::new();
    for (name, value) in checks {
        match value {
            Some(v) if v < tol => {}
            Some(_) => obstructed.push(name.to_string()),
            None => {
                let why = missing.get(name).cloned().unwrap_or_default();
                return Verdict::Indeterminate(format!("{name} unavailable: {why}"));
            }
        }
    }
    if obstructed.is_empty() {
        Verdict::NecessaryConditionsPass
    } else {
        Verdict::Obstructed(obstructed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub metric: Option<String>,
    pub dim: usize,
    pub points: usize,
    pub seed: u64,
    pub verdict: Verdict,
    pub counts: BTreeMap<&'static str, usize>,
    pub errors: usize,
    /// Largest value of each norm over the points where it is available.
    pub max_norms: Norms,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyRun {
    pub reports: Vec<InvariantReport>,
    pub aggregate: Aggregate,
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn fold_norms(acc: &mut Norms, n: &Norms) {
    acc.weyl = max_opt(acc.weyl, n.weyl);
    acc.delta_weyl = max_opt(acc.delta_weyl, n.delta_weyl);
    acc.t = max_opt(acc.t, n.t);
    acc.cotton = max_opt(acc.cotton, n.cotton);
    acc.cotton_consistency = max_opt(acc.cotton_consistency, n.cotton_consistency);
    acc.e = max_opt(acc.e, n.e);
    acc.dt = max_opt(acc.dt, n.dt);
    acc.bach = max_opt(acc.bach, n.bach);
    acc.bach_hat = max_opt(acc.bach_hat, n.bach_hat);
    acc.w_sym_e = max_opt(acc.w_sym_e, n.w_sym_e);
    acc.classical_bach = max_opt(acc.classical_bach, n.classical_bach);
    acc.delta3_residual = max_opt(acc.delta3_residual, n.delta3_residual);
}

/// Evaluates every point; failures are recorded per point and never abort the run.
pub fn classify_points(
    spec: &MetricSpec,
    points: &[Vec<f64>],
    options: &Options,
    parallel: bool,
) -> Vec<InvariantReport> {
    let one = |(index, p): (usize, &Vec<f64>)| match PointInvariants::evaluate(spec, p, options) {
        Ok(inv) => InvariantReport::from_invariants(index, &inv, options.tol),
        Err(e) => InvariantReport::failed(index, p.clone(), e.to_string()),
    };
    if parallel {
        points.par_iter().enumerate().map(one).collect()
    } else {
        points.iter().enumerate().map(one).collect()
    }
}

/// Samples `count` points of the region with `seed` and classifies the metric.
pub fn classify(spec: &MetricSpec, count: usize, seed: u64, options: &Options, parallel: bool) -> ClassifyRun {
    let points = sample_points(spec, count, seed);
    let reports = classify_points(spec, &points, options, parallel);
    let mut counts = BTreeMap::new();
    let mut max_norms = Norms::default();
    let mut verdict = Verdict::ConformallyFlat;
    for r in &reports {
        *counts.entry(r.verdict.label()).or_insert(0) += 1;
        fold_norms(&mut max_norms, &r.norms);
        if r.verdict.severity() > verdict.severity() {
            verdict = r.verdict.clone();
        }
    }
    let errors = reports.iter().filter(|r| r.error.is_some()).count();
    ClassifyRun {
        aggregate: Aggregate {
            metric: spec.name.clone(),
            dim: spec.dim(),
            points: reports.len(),
            seed,
            verdict,
            counts,
            errors,
            max_norms,
        },
        reports,
    }
}
