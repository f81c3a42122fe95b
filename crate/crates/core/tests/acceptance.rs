//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod support;

use std::process::ExitCode;
use std::time::Instant;

use cel_core::catalog::{catalog_get, catalog_list, random_metric_document, RESCALED_S2XS2_PHI};
use cel_core::conformal_lab::{check_transformation_laws, LabOptions, LawStatus};
use cel_core::curvature::{christoffel, metric_tensors, riemann_pack, CurvaturePack, Tensor};
use cel_core::invariants::{classify, Options, PointInvariants, Verdict};
use cel_core::linalg::{moore_penrose, Matrix};
use cel_core::sampling::sample_points;
use cel_core::{eval_metric_at, parse_expression, parse_metric_document, ConformalFactorSpec, Jet, MetricSpec};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{fd_partial, multi_indices, random_expr};

const SEED: u64 = 20240611;

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Check { ok: true, detail: String::new() }
    }

    /// Records `value < bound` under `label`, keeping the first failure in the detail.
    fn below(&mut self, label: &str, value: f64, bound: f64) {
        self.require(label, value < bound, format!("{value:.2e} < {bound:.0e}"));
    }

    fn above(&mut self, label: &str, value: f64, bound: f64) {
        self.require(label, value > bound, format!("{value:.2e} > {bound:.0e}"));
    }

    fn require(&mut self, label: &str, ok: bool, what: String) {
        if !ok && self.ok {
            self.detail = format!("{label}: {what}");
        }
        self.ok &= ok;
    }

    fn summary(&mut self, text: String) {
        if self.ok {
            self.detail = text;
        }
    }
}

fn spec(name: &str) -> MetricSpec {
    catalog_get(name).unwrap().spec()
}

fn metric_norm(inv: &PointInvariants<f64>, t: &Tensor<f64>) -> f64 {
    t.point_values().metric_norm(&inv.pack.g_inv_values())
}

fn eval(spec: &MetricSpec, p: &[f64]) -> PointInvariants<f64> {
    PointInvariants::evaluate(spec, p, &Options::default()).unwrap()
}

fn norm_of(inv: &PointInvariants<f64>, t: Option<&Tensor<f64>>) -> f64 {
    t.map_or(f64::INFINITY, |t| metric_norm(inv, t))
}

fn first_bianchi(r: &Tensor<f64>) -> f64 {
    let v = r.point_values();
    let n = r.dim();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let s = v.get(&[a, b, c, d]) + v.get(&[b, c, a, d]) + v.get(&[c, a, b, d]);
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

fn flat_space() -> Check {
    let mut c = Check::new();
    let mut worst = 0.0f64;
    for n in [4, 5, 6] {
        let s = spec(&format!("flat{n}"));
        for p in sample_points(&s, 5, SEED) {
            let inv = eval(&s, &p);
            let t = inv.t.as_ref().ok().map(|t| &t.covector);
            let values = [
                ("R", metric_norm(&inv, &inv.pack.riemann)),
                ("Ric", metric_norm(&inv, &inv.pack.ricci)),
                ("S", inv.pack.scalar.value().abs()),
                ("W", metric_norm(&inv, &inv.pack.weyl)),
                ("T", norm_of(&inv, t)),
                ("C_T", norm_of(&inv, inv.cotton.as_ref().ok())),
                ("E_T", norm_of(&inv, inv.e.as_ref().ok())),
                ("B_T", norm_of(&inv, inv.bach.as_ref().ok())),
            ];
            for (label, v) in values {
                c.below(&format!("flat{n} |{label}|"), v, 1e-8);
                worst = worst.max(v);
            }
        }
    }
    c.summary(format!("max norm {worst:.1e} over n = 4, 5, 6"));
    c
}

fn unit_spheres() -> Check {
    let mut c = Check::new();
    let mut worst_s = 0.0f64;
    let mut worst_w = 0.0f64;
    for n in 2..=6 {
        let s = spec(&format!("sphere{n}"));
        let nn = n as f64;
        for p in sample_points(&s, 5, SEED) {
            let m = eval_metric_at(&s, &p, 4).unwrap();
            let (g, gi) = metric_tensors(&m);
            let parts = riemann_pack(&g, &gi, &christoffel(&g, &gi).unwrap()).unwrap();
            let rel = (parts.scalar.value() - nn * (nn - 1.0)).abs() / (nn * (nn - 1.0));
            c.below(&format!("sphere{n} S"), rel, 1e-6);
            worst_s = worst_s.max(rel);
            if n >= 3 {
                let pack = CurvaturePack::compute(&s, &p, 4).unwrap();
                let w = pack.weyl.point_values().metric_norm(&pack.g_inv_values());
                c.below(&format!("sphere{n} |W|"), w, 1e-8);
                worst_w = worst_w.max(w);
            }
        }
        if n >= 4 {
            let run = classify(&s, 5, SEED, &Options::default(), true);
            c.require(
                &format!("sphere{n} verdict"),
                run.aggregate.verdict == Verdict::ConformallyFlat,
                format!("{:?}", run.aggregate.verdict),
            );
        }
    }
    c.summary(format!(
        "S rel err {worst_s:.1e}, |W| {worst_w:.1e}, n = 4..6 ConformallyFlat"
    ));
    c
}

fn product_of_spheres() -> Check {
    let mut c = Check::new();
    let s = spec("s2xs2");
    let mut min_w = f64::INFINITY;
    let mut worst = 0.0f64;
    for p in sample_points(&s, 20, SEED) {
        let inv = eval(&s, &p);
        let einstein = inv.pack.ricci.sub(&inv.pack.g).unwrap();
        c.below("Ric - g", metric_norm(&inv, &einstein), 1e-7);
        let w = metric_norm(&inv, &inv.pack.weyl);
        c.above("|W|", w, 0.1);
        min_w = min_w.min(w);
        c.require("rank E", inv.algebra.e.rank == 0, format!("{}", inv.algebra.e.rank));
        let t = inv.t.as_ref().ok().map(|t| &t.covector);
        for (label, q) in [
            ("T", t),
            ("C_T", inv.cotton.as_ref().ok()),
            ("E_T", inv.e.as_ref().ok()),
            ("B_T", inv.bach.as_ref().ok()),
            ("B^_T", inv.bach_hat.as_ref().ok()),
        ] {
            let v = norm_of(&inv, q);
            c.below(label, v, 1e-6);
            worst = worst.max(v);
        }
    }
    c.summary(format!("20 points rank E = 0, min |W| {min_w:.2}, max invariant {worst:.1e}"));
    c
}

fn schwarzschild() -> Check {
    let mut c = Check::new();
    let s = spec("schwarzschild4");
    let mut worst_ric = 0.0f64;
    let mut worst_id = 0.0f64;
    for p in sample_points(&s, 20, SEED) {
        let inv = eval(&s, &p);
        let ric = metric_norm(&inv, &inv.pack.ricci);
        c.below("|Ric|", ric, 1e-6);
        let half = 0.5 * inv.algebra.trace_w_squared();
        let id = inv.algebra.w_frak.values().sub(&Matrix::identity(4).scale(half)).max_abs();
        c.below("w - tr/2 Id", id, 1e-6);
        worst_ric = worst_ric.max(ric);
        worst_id = worst_id.max(id);
    }
    c.summary(format!("20 points |Ric| {worst_ric:.1e}, identity residual {worst_id:.1e}"));
    c
}

fn factor(s: &MetricSpec, which: usize) -> ConformalFactorSpec {
    let x = s.coord_names();
    let text = match which {
        0 => format!("0.2*sin({}) + 0.1*cos({})", x[0], x[1]),
        _ => format!("0.05*{}*{} + 0.15*sin({} + {})", x[0], x[2], x[1], x[3]),
    };
    ConformalFactorSpec::parse(&text, s).unwrap()
}

fn transformation_laws() -> Check {
    let mut c = Check::new();
    let mut worst = 0.0f64;
    let mut rows = 0;
    let opts = LabOptions::default();
    for name in ["flat4", "s2xs2", "schwarzschild4", "hyperbolic5"] {
        let s = spec(name);
        for which in 0..2 {
            let f = factor(&s, which);
            let report = check_transformation_laws(&s, &f, &sample_points(&s, 5, SEED), &opts).unwrap();
            for point in &report.points {
                for row in &point.laws {
                    let label = format!("{name} [{}] {}", report.phi, row.law);
                    match &row.status {
                        LawStatus::Pass | LawStatus::Fail => {
                            let r = row.residual.unwrap_or(f64::INFINITY);
                            c.below(&label, r, 1e-6);
                            worst = worst.max(r);
                            rows += 1;
                        }
                        other => c.require(&label, false, format!("{other:?}")),
                    }
                }
            }
        }
    }
    c.summary(format!("{rows} law rows, max residual {worst:.1e}"));
    c
}

fn conformal_einstein_detection() -> Check {
    let mut c = Check::new();
    let mut worst_t = 0.0f64;
    let base = spec("s2xs2");
    for (name, phi_text) in RESCALED_S2XS2_PHI {
        let s = spec(name);
        let run = classify(&s, 10, SEED, &Options::default(), true);
        c.require(
            &format!("{name} verdict"),
            run.aggregate.verdict == Verdict::NecessaryConditionsPass,
            format!("{:?}", run.aggregate.verdict),
        );
        let m = &run.aggregate.max_norms;
        for (label, v) in [
            ("C_T", m.cotton),
            ("C_T consistency", m.cotton_consistency),
            ("W(sym E_T)", m.w_sym_e),
            ("E_T", m.e),
            ("dT", m.dt),
            ("B_T", m.bach),
            ("B^_T", m.bach_hat),
        ] {
            c.below(&format!("{name} |{label}|"), v.unwrap_or(f64::INFINITY), 1e-5);
        }
        // 𝕋̄ = −ψ²∇φ + ψ²𝕋, gradient and 𝕋 of s2xs2
        let phi = parse_expression(phi_text, s.coord_names()).unwrap();
        for p in sample_points(&s, 10, SEED) {
            let inv = eval(&s, &p);
            let t = inv.t.as_ref().unwrap().vector.values();
            let base_inv = eval(&base, &p);
            let t0 = base_inv.t.as_ref().unwrap().vector.values();
            let vars = Jet::variables(&p, 1).unwrap();
            let jet = phi.eval_jet(&vars).unwrap();
            let psi2 = (2.0 * jet.value()).exp();
            let g0 = base_inv.pack.g_inv_values();
            for a in 0..4 {
                let grad: f64 = (0..4)
                    .map(|b| {
                        let mut alpha = [0; 4];
                        alpha[b] = 1;
                        g0[(a, b)] * jet.partial(&alpha).unwrap()
                    })
                    .sum();
                let expected = -psi2 * grad + psi2 * t0[a];
                let err = (t[a] - expected).abs();
                c.below(&format!("{name} T^{a}"), err, 1e-5);
                worst_t = worst_t.max(err);
            }
        }
    }
    let pert = classify(&spec("perturbed_s2xs2_005"), 10, SEED, &Options::default(), true);
    match &pert.aggregate.verdict {
        Verdict::Obstructed(list) => c.require(
            "perturbed_s2xs2_005 obstructions",
            list.iter().any(|x| x == "E_T") && list.iter().any(|x| x == "C_T"),
            format!("{list:?}"),
        ),
        v => c.require("perturbed_s2xs2_005 verdict", false, format!("{v:?}")),
    }
    let mut min_ec = f64::INFINITY;
    for r in &pert.reports {
        let e = r.norms.e.unwrap_or(0.0);
        let cot = r.norms.cotton.unwrap_or(0.0);
        c.above("perturbed |E_T|", e, 1e-2);
        c.above("perturbed |C_T|", cot, 1e-2);
        min_ec = min_ec.min(e.min(cot));
    }
    c.summary(format!(
        "rescaled pass, T recovery err {worst_t:.1e}; perturbed Obstructed, min |E|,|C| {min_ec:.2e}"
    ));
    c
}

fn identity_suite() -> Check {
    let mut c = Check::new();
    let mut worst = [0.0f64; 6];
    let mut points = 0;
    for n in [4, 5, 6] {
        let nf = n as f64;
        for seed in 0..5 {
            let s = parse_metric_document(&random_metric_document(n, seed)).unwrap();
            for p in sample_points(&s, 2, SEED) {
                let inv = eval(&s, &p);
                let pack = &inv.pack;
                let dw = pack.delta_weyl().unwrap();
                let dk = pack.dnabla_schouten().unwrap().scale(nf - 3.0);
                let r = [
                    dw.sub(&dk).unwrap().point_values().max_abs(),
                    pack.divergence(&pack.weyl, 1).unwrap().sub(&dw.permute(&[2, 1, 0])).unwrap().point_values().max_abs(),
                    first_bianchi(&pack.riemann).max(first_bianchi(&pack.weyl)),
                    pack.weyl_trace_residual(),
                    match (&inv.delta3, inv.algebra.e.rank) {
                        (Ok(d), 0) => d.residual,
                        (_, 0) => f64::INFINITY,
                        _ => 0.0,
                    },
                ];
                let labels = ["dW - (n-3) d^nabla k", "d1 W - d4 W", "first Bianchi", "Weyl trace", "delta3 C_T"];
                let bounds = [1e-7, 1e-8, 1e-9, 1e-9, 1e-5];
                for k in 0..5 {
                    c.below(&format!("n={n} seed={seed} {}", labels[k]), r[k], bounds[k]);
                    worst[k] = worst[k].max(r[k]);
                }
                c.require(
                    &format!("n={n} seed={seed} kernel bound"),
                    inv.algebra.kernel_bound_holds(n),
                    format!("dim ker = {}", inv.algebra.weyl_kernel_dim),
                );
                points += 1;
            }
        }
    }
    c.summary(format!(
        "{points} points: dW {:.1e}, d1/d4 {:.1e}, Bianchi {:.1e}, trace {:.1e}, delta3 {:.1e}, kernel bound holds",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    ));
    c
}

fn moore_penrose_axioms() -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = [0.0f64; 5];
    let rel = |a: &Matrix<f64>, b: &Matrix<f64>| a.sub(b).frobenius() / a.frobenius().max(b.frobenius()).max(1.0);
    for i in 0..1000 {
        let n = 4 + i % 12;
        let rank = rng.gen_range(0..=n);
        let raw = Mat::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = raw.qr().compute_Q();
        let d: Vec<f64> = (0..n)
            .map(|k| if k < rank { rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 } } else { 0.0 })
            .collect();
        let a = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| q[(i, k)] * d[k] * q[(j, k)]).sum::<f64>());
        let a = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        let x = moore_penrose(&a, 1e-10);
        let svd = Mat::from_fn(n, n, |i, j| a[(i, j)]).svd().unwrap().pseudoinverse();
        let svd = Matrix::from_fn(n, n, |i, j| svd[(i, j)]);
        let ax = a.matmul(&x);
        let xa = x.matmul(&a);
        let r = [
            rel(&ax.matmul(&a), &a),
            rel(&xa.matmul(&x), &x),
            rel(&ax, &ax.transpose()),
            rel(&xa, &xa.transpose()),
            rel(&x, &svd),
        ];
        for k in 0..5 {
            worst[k] = worst[k].max(r[k]);
        }
    }
    for (k, label) in ["AXA = A", "XAX = X", "AX symmetric", "XA symmetric", "SVD agreement"].iter().enumerate() {
        c.below(label, worst[k], 1e-9);
    }
    c.summary(format!("1000 matrices, worst axiom {:.1e}, SVD {:.1e}", worst[..4].iter().fold(0.0f64, |m, &v| m.max(v)), worst[4]));
    c
}

fn jet_engine() -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..50 {
        let n = 2 + i % 3;
        let e = random_expr(&mut rng, n, 4);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vars = Jet::variables(&p, 4).unwrap();
        let jet = e.eval_jet(&vars).unwrap();
        let f = |x: &[f64]| e.eval::<f64>(x).unwrap();
        for k in 0..=4 {
            for alpha in multi_indices(n, k) {
                let exact = jet.partial(&alpha).unwrap();
                let (fd, _) = [0.05, 0.1, 0.2, 0.4, 0.8]
                    .map(|h| fd_partial(&f, &p, &alpha, h))
                    .into_iter()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                let err = (exact - fd).abs() / exact.abs().max(fd.abs()).max(1.0);
                c.below(&format!("expression {i} {alpha:?}"), err, 1e-6);
                worst = worst.max(err);
                count += 1;
            }
        }
    }
    c.summary(format!("{count} partials of 50 expressions, worst {worst:.1e}"));
    c
}

/// `Bach_yz = g^{cd} g^{ab} ∇_c∇_a W_{dyzb} + ½ g^{ca} g^{db} W_{dyzc} Ric_{ab}`,
/// contracted by hand from the second covariant derivative of `W`.
fn bach_oracle(pack: &CurvaturePack<f64>) -> Vec<f64> {
    let n = 4;
    let nn = pack.nabla(&pack.nabla(&pack.weyl).unwrap()).unwrap().point_values();
    let w = pack.weyl.point_values();
    let ric = pack.ricci.point_values();
    let gi = pack.g_inv_values();
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        for z in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            s += gi[(c, d)] * gi[(a, b)] * nn.get(&[c, a, d, y, z, b]);
                            s += 0.5 * gi[(c, a)] * gi[(d, b)] * w.get(&[d, y, z, c]) * ric.get(&[a, b]);
                        }
                    }
                }
            }
            out[y * n + z] = s;
        }
    }
    out
}

fn dimension_four_collapse() -> Check {
    let mut c = Check::new();
    let mut worst = 0.0f64;
    let mut fixtures = 0;
    for name in catalog_list() {
        let s = spec(name);
        if s.dim() != 4 {
            continue;
        }
        fixtures += 1;
        for p in sample_points(&s, 5, SEED) {
            let inv = eval(&s, &p);
            let oracle = bach_oracle(&inv.pack);
            let diff = match &inv.bach {
                Ok(b) => {
                    let v = b.point_values();
                    (0..16).map(|k| (v.get(&[k / 4, k % 4]) - oracle[k]).abs()).fold(0.0, f64::max)
                }
                Err(_) => f64::INFINITY,
            };
            c.below(name, diff, 1e-9);
            worst = worst.max(diff);
        }
    }
    c.summary(format!("{fixtures} fixtures, max |B_T - Bach| {worst:.1e} against a hand-contracted Bach tensor"));
    c
}

fn catalog_expectations() -> Check {
    let mut c = Check::new();
    let mut checked = 0;
    for name in catalog_list() {
        let entry = catalog_get(name).unwrap();
        let s = entry.spec();
        let n = s.dim();
        let ex = entry.expected;
        if n < 3 {
            continue;
        }
        for p in sample_points(&s, 5, SEED) {
            let pack = CurvaturePack::compute(&s, &p, 4).unwrap();
            let gi = pack.g_inv_values();
            if let Some(lambda) = ex.einstein_constant {
                let r = pack.ricci.sub(&pack.g.scale(lambda)).unwrap().point_values().metric_norm(&gi);
                c.below(&format!("{name} Ric - lambda g"), r, 1e-7);
            }
            if !ex.einstein {
                let s_val = pack.scalar.value();
                let tf = pack.ricci.sub(&pack.g.scale(s_val / n as f64)).unwrap().point_values().metric_norm(&gi);
                c.above(&format!("{name} trace-free Ric"), tf, 1e-4);
            }
            if let Some(sc) = ex.scalar_curvature {
                let err = (pack.scalar.value() - sc).abs() / sc.abs().max(1.0);
                c.below(&format!("{name} S"), err, 1e-6);
            }
            if n >= 4 {
                let w = pack.weyl.point_values().metric_norm(&gi);
                if ex.conformally_flat {
                    c.below(&format!("{name} |W|"), w, 1e-8);
                } else {
                    c.above(&format!("{name} |W|"), w, 1e-3);
                }
            }
            if let Some(rank) = ex.rank_e {
                let inv = eval(&s, &p);
                c.require(
                    &format!("{name} rank E"),
                    inv.algebra.e.rank == rank,
                    format!("{} != {rank}", inv.algebra.e.rank),
                );
            }
            checked += 1;
        }
    }
    c.summary(format!("{} entries, {checked} points", catalog_list().len()));
    c
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("1 flat space", flat_space),
        ("2 unit spheres", unit_spheres),
        ("3 S2 x S2", product_of_spheres),
        ("4 Riemannian Schwarzschild", schwarzschild),
        ("5 transformation laws", transformation_laws),
        ("6 conformal-Einstein detection", conformal_einstein_detection),
        ("7 identity suite", identity_suite),
        ("8 Moore-Penrose", moore_penrose_axioms),
        ("9 jet engine", jet_engine),
        ("10 n = 4 collapse", dimension_four_collapse),
        ("catalog expectations", catalog_expectations),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let check = run();
        let status = if check.ok { "PASS" } else { "FAIL" };
        println!("{status} {name}: {} ({:.2}s)", check.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!check.ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
