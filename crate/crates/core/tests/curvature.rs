mod support;

use std::f64::consts::FRAC_PI_4;

use cel_core::catalog::{catalog_get, catalog_list, random_metric_document};
use cel_core::curvature::{
    christoffel, dnabla_sym2, kulkarni_nomizu, metric_tensors, riemann_pack, CurvaturePack, Tensor,
};
use cel_core::jets::Layout;
use cel_core::{eval_metric_at, parse_metric_document, Jet, MetricSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{rel_err, FdMetric};

fn sample(spec: &MetricSpec, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..spec.dim())
                .map(|i| {
                    let r = spec.region(i);
                    let pad = 0.05 * (r.hi - r.lo);
                    rng.gen_range(r.lo + pad..r.hi - pad)
                })
                .collect()
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_specs() -> Vec<MetricSpec> {
    let mut out = Vec::new();
    for n in [4, 5, 6] {
        for seed in 0..2 {
            out.push(parse_metric_document(&random_metric_document(n, seed)).unwrap());
        }
    }
    out
}

#[test]
fn flat_christoffel_vanishes() {
    let spec = catalog_get("flat5").unwrap().spec();
    let m = eval_metric_at(&spec, &[0.1, 0.2, 0.3, 0.4, 0.5], 4).unwrap();
    let (g, gi) = metric_tensors(&m);
    let gamma = christoffel(&g, &gi).unwrap();
    assert_eq!(gamma.order(), 3);
    assert_eq!(gamma.max_abs(), 0.0);
}

#[test]
fn two_sphere_christoffel_symbol() {
    let spec = catalog_get("sphere2").unwrap().spec();
    let m = eval_metric_at(&spec, &[FRAC_PI_4, 1.0], 4).unwrap();
    let (g, gi) = metric_tensors(&m);
    let gamma = christoffel(&g, &gi).unwrap();
    // Γ^θ_φφ = −sinθ cosθ
    assert!((gamma.get(&[0, 1, 1]).value() + 0.5).abs() < 1e-15);
    // Γ^φ_θφ = cot θ
    assert!((gamma.get(&[1, 0, 1]).value() - 1.0).abs() < 1e-14);
}

#[test]
fn christoffel_matches_finite_differences_and_is_symmetric() {
    for spec in random_specs().iter().take(3) {
        let n = spec.dim();
        for p in sample(spec, 1, 2) {
            let m = eval_metric_at(spec, &p, 4).unwrap();
            let (g, gi) = metric_tensors(&m);
            let gamma = christoffel(&g, &gi).unwrap();
            let fd = FdMetric::new(spec, &p, 0.2);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let v = gamma.get(&[k, i, j]).value();
                        assert!(rel_err(v, fd.christoffel(k, i, j)) < 1e-8);
                        assert!((v - gamma.get(&[k, j, i]).value()).abs() < 1e-14);
                    }
                }
            }
        }
    }
}

#[test]
fn riemann_matches_finite_difference_oracle() {
    let mut specs = random_specs();
    specs.push(catalog_get("schwarzschild4").unwrap().spec());
    specs.push(catalog_get("perturbed_s2xs2_005").unwrap().spec());
    for spec in &specs {
        for p in sample(spec, 2, 2) {
            let pack = CurvaturePack::compute(spec, &p, 4).unwrap();
            let fd = FdMetric::new(spec, &p, 0.2).riemann();
            let jet = pack.riemann.values();
            let scale = jet.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            assert!(max_diff(&jet, &fd) / scale < 1e-7, "{:?}", spec.name);
        }
    }
}

#[test]
fn unit_spheres_pin_the_sign_convention() {
    for n in 2..=6 {
        let spec = catalog_get(&format!("sphere{n}")).unwrap().spec();
        for p in sample(&spec, 3, 5) {
            let m = eval_metric_at(&spec, &p, 4).unwrap();
            let (g, gi) = metric_tensors(&m);
            let gamma = christoffel(&g, &gi).unwrap();
            let parts = riemann_pack(&g, &gi, &gamma).unwrap();
            let nn = n as f64;
            assert!(rel_err(parts.scalar.value(), nn * (nn - 1.0)) < 1e-12);
            let lambda = parts.ricci.sub(&g.scale(nn - 1.0)).unwrap();
            assert!(lambda.point_values().max_abs() < 1e-12);
            let half_gg = kulkarni_nomizu(&g, &g).unwrap().scale(0.5);
            let diff = parts.riemann.sub(&half_gg).unwrap();
            assert!(diff.point_values().max_abs() < 1e-8);
            if n >= 3 {
                let pack = CurvaturePack::from_metric(&m, &p).unwrap();
                assert!(pack.weyl.point_values().max_abs() < 1e-8);
            }
        }
    }
}

#[test]
fn kulkarni_nomizu_examples() {
    let layout = Layout::get(4).unwrap();
    let id = Tensor::from_fn(4, 0, 2, |i| Jet::constant(&layout, 0, if i[0] == i[1] { 1.0 } else { 0.0 }));
    let gg = kulkarni_nomizu(&id, &id).unwrap();
    assert_eq!(gg.get(&[0, 1, 1, 0]).value(), 2.0);
    assert_eq!(gg.get(&[0, 1, 0, 1]).value(), -2.0);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sym = || {
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::from_fn(4, 0, 2, |i| {
            Jet::constant(&layout, 0, 0.5 * (v[i[0] * 4 + i[1]] + v[i[1] * 4 + i[0]]))
        })
    };
    let (a, b) = (sym(), sym());
    let ab = kulkarni_nomizu(&a, &b).unwrap();
    let ba = kulkarni_nomizu(&b, &a).unwrap();
    assert!(ab.sub(&ba).unwrap().point_values().max_abs() < 1e-15);
    cel_core::curvature::check_curvature_symmetries(&ab, 1e-14).unwrap();
}

#[test]
fn curvature_symmetries_and_weyl_trace() {
    for spec in random_specs() {
        for p in sample(&spec, 4, 2) {
            let pack = CurvaturePack::compute(&spec, &p, 4).unwrap();
            cel_core::curvature::check_curvature_symmetries(&pack.riemann, 1e-12).unwrap();
            cel_core::curvature::check_curvature_symmetries(&pack.weyl, 1e-12).unwrap();
            assert!(pack.weyl_trace_residual() < 1e-9);
            let ric = pack.ricci.point_values();
            let n = spec.dim();
            for i in 0..n {
                for j in 0..n {
                    assert!((ric.get(&[i, j]) - ric.get(&[j, i])).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn metric_is_parallel_on_catalog() {
    for name in catalog_list() {
        let spec = catalog_get(name).unwrap().spec();
        if spec.dim() < 3 {
            continue;
        }
        for p in sample(&spec, 5, 2) {
            let pack = CurvaturePack::compute(&spec, &p, 4).unwrap();
            let ng = pack.nabla(&pack.g).unwrap();
            assert!(ng.max_abs() < 1e-10, "{name}: {}", ng.max_abs());
            let dg = dnabla_sym2(&pack.g, &pack.christoffel).unwrap();
            assert!(dg.max_abs() < 1e-10);
        }
    }
}

#[test]
fn gradient_of_scalar_curvature() {
    let spec = catalog_get("perturbed_s2xs2_005").unwrap().spec();
    let p = sample(&spec, 6, 1).remove(0);
    let pack = CurvaturePack::compute(&spec, &p, 4).unwrap();
    let s = Tensor::from_fn(4, 0, 0, |_| pack.scalar.clone());
    let ds = pack.nabla(&s).unwrap();
    for k in 0..4 {
        assert_eq!(ds.get(&[k]).value(), pack.scalar.derivative(k).unwrap().value());
    }
}

#[test]
fn contracted_bianchi_identities() {
    let mut specs = random_specs();
    for name in ["schwarzschild4", "perturbed_s2xs2_005", "rescaled_s2xs2_b"] {
        specs.push(catalog_get(name).unwrap().spec());
    }
    for spec in &specs {
        let n = spec.dim() as f64;
        for p in sample(spec, 7, 2) {
            let pack = CurvaturePack::compute(spec, &p, 4).unwrap();
            // δR = d^∇Ric
            let div_r = pack.divergence(&pack.riemann, 4).unwrap();
            let d_ric = dnabla_sym2(&pack.ricci, &pack.christoffel).unwrap();
            let r1 = div_r.sub(&d_ric).unwrap().point_values().max_abs();
            assert!(r1 < 1e-7, "{:?}: {r1}", spec.name);
            // δW = (n−3) d^∇𝔨
            let dw = pack.delta_weyl().unwrap();
            let dk = pack.dnabla_schouten().unwrap().scale(n - 3.0);
            let r2 = dw.sub(&dk).unwrap().point_values().max_abs();
            assert!(r2 < 1e-7, "{:?}: {r2}", spec.name);
            // δ₁W(X,Y,Z) = δ₄W(Z,Y,X)
            let d1 = pack.divergence(&pack.weyl, 1).unwrap();
            let r3 = d1.sub(&dw.permute(&[2, 1, 0])).unwrap().point_values().max_abs();
            assert!(r3 < 1e-8, "{:?}: {r3}", spec.name);
        }
    }
}

#[test]
fn einstein_fixtures_have_harmonic_weyl() {
    for name in ["s2xs2", "schwarzschild4", "sphere5", "hyperbolic4"] {
        let spec = catalog_get(name).unwrap().spec();
        for p in sample(&spec, 8, 3) {
            let pack = CurvaturePack::compute(&spec, &p, 4).unwrap();
            assert!(pack.dnabla_schouten().unwrap().point_values().max_abs() < 1e-9);
            let dw = pack.delta_weyl().unwrap().point_values();
            assert!(dw.metric_norm(&pack.g_inv_values()) < 1e-7, "{name}");
        }
    }
}

#[test]
fn product_of_spheres_is_einstein_and_not_conformally_flat() {
    let spec = catalog_get("s2xs2").unwrap().spec();
    for p in sample(&spec, 9, 10) {
        let pack = CurvaturePack::compute(&spec, &p, 4).unwrap();
        assert!(pack.ricci.sub(&pack.g).unwrap().point_values().max_abs() < 1e-12);
        assert!((pack.scalar.value() - 4.0).abs() < 1e-12);
        let w = pack.weyl.point_values().metric_norm(&pack.g_inv_values());
        assert!(w > 0.1);
    }
}

#[test]
fn insufficient_order_is_reported() {
    let spec = catalog_get("s2xs2").unwrap().spec();
    let pack = CurvaturePack::compute(&spec, &[1.0, 1.0, 1.0, 1.0], 2).unwrap();
    assert_eq!(pack.weyl.order(), 0);
    assert!(matches!(
        pack.delta_weyl(),
        Err(cel_core::Error::OrderExhausted { .. })
    ));
    assert!(CurvaturePack::compute(&spec, &[1.0, 1.0, 1.0, 1.0], 1).is_err());
}
