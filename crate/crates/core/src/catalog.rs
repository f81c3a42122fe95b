//! Built-in metrics with known curvature, shipped as metric documents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dsl::{parse_metric_document, MetricSpec};
use crate::error::{Error, Result};

/// Properties an entry is expected to have; the test suite re-derives each one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Expected {
    pub einstein: bool,
    pub conformally_flat: bool,
    /// Scalar curvature, constant over the region when given.
    pub scalar_curvature: Option<f64>,
    pub rank_e: Option<usize>,
    /// `λ` with `Ric = λ g`.
    pub einstein_constant: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub document: &'static str,
    pub expected: Expected,
}

impl CatalogEntry {
    pub fn spec(&self) -> MetricSpec {
        parse_metric_document(self.document).expect("catalog documents parse")
    }

    pub fn dim(&self) -> usize {
        self.spec().dim()
    }
}

const fn einstein(lambda: f64, scalar: f64, flat: bool, rank: Option<usize>) -> Expected {
    Expected {
        einstein: true,
        conformally_flat: flat,
        scalar_curvature: Some(scalar),
        rank_e: rank,
        einstein_constant: Some(lambda),
    }
}

const NOT_EINSTEIN: Expected = Expected {
    einstein: false,
    conformally_flat: false,
    scalar_curvature: None,
    rank_e: None,
    einstein_constant: None,
};

macro_rules! entry {
    ($name:literal, $expected:expr) => {
        CatalogEntry {
            name: $name,
            document: include_str!(concat!("../data/", $name, ".metric")),
            expected: $expected,
        }
    };
}

fn entries() -> Vec<CatalogEntry> {
    vec![
        entry!("flat4", einstein(0.0, 0.0, true, Some(4))),
        entry!("flat5", einstein(0.0, 0.0, true, Some(5))),
        entry!("flat6", einstein(0.0, 0.0, true, Some(6))),
        entry!("sphere2", einstein(1.0, 2.0, true, None)),
        entry!("sphere3", einstein(2.0, 6.0, true, None)),
        entry!("sphere4", einstein(3.0, 12.0, true, Some(4))),
        entry!("sphere5", einstein(4.0, 20.0, true, Some(5))),
        entry!("sphere6", einstein(5.0, 30.0, true, Some(6))),
        entry!("sphere4_r2", einstein(0.75, 3.0, true, Some(4))),
        entry!("hyperbolic4", einstein(-3.0, -12.0, true, Some(4))),
        entry!("hyperbolic5", einstein(-4.0, -20.0, true, Some(5))),
        entry!("s2xs2", einstein(1.0, 4.0, false, Some(0))),
        entry!(
            "s2xh2",
            Expected {
                einstein: false,
                conformally_flat: true,
                scalar_curvature: Some(0.0),
                rank_e: Some(4),
                einstein_constant: None,
            }
        ),
        entry!("schwarzschild4", einstein(0.0, 0.0, false, Some(0))),
        entry!(
            "rescaled_s2xs2_a",
            Expected {
                rank_e: Some(0),
                ..NOT_EINSTEIN
            }
        ),
        entry!(
            "rescaled_s2xs2_b",
            Expected {
                rank_e: Some(0),
                ..NOT_EINSTEIN
            }
        ),
        entry!("perturbed_s2xs2_001", NOT_EINSTEIN),
        entry!("perturbed_s2xs2_005", NOT_EINSTEIN),
    ]
}

pub fn catalog_list() -> Vec<&'static str> {
    entries().into_iter().map(|e| e.name).collect()
}

pub fn catalog_get(name: &str) -> Result<CatalogEntry> {
    entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

/// Conformal factors of the `rescaled_s2xs2_*` entries.
pub const RESCALED_S2XS2_PHI: [(&str, &str); 2] = [
    ("rescaled_s2xs2_a", "0.2*sin(x1)"),
    ("rescaled_s2xs2_b", "0.15*cos(x3) + 0.1*sin(x1)*sin(x2)"),
];

/// Seeds of the `perturbed_s2xs2_*` entries with their amplitudes.
pub const PERTURBED_S2XS2: [(&str, f64, u64); 2] = [
    ("perturbed_s2xs2_001", 0.01, 1001),
    ("perturbed_s2xs2_005", 0.05, 1005),
];

fn coord(k: usize) -> String {
    format!("x{}", k + 1)
}

/// Random smooth bounded function `Σ a cos(k·x + b)` with `Σ |a| <= 0.5`,
/// printed as an expression over `x1..xn`.
#[allow(clippy::approx_constant)]
fn random_wave(rng: &mut ChaCha8Rng, n: usize) -> String {
    let terms = 2;
    let mut parts = Vec::with_capacity(terms);
    for _ in 0..terms {
        let a = (rng.gen_range(-0.25..0.25f64) * 1000.0).round() / 1000.0;
        let b = (rng.gen_range(0.0..6.28f64) * 100.0).round() / 100.0;
        let mut arg = String::new();
        for k in 0..n {
            let f: i32 = rng.gen_range(-3..=3);
            if f == 0 {
                continue;
            }
            let sign = if f < 0 { " - " } else if arg.is_empty() { "" } else { " + " };
            let lead = if f < 0 && arg.is_empty() { "-" } else { sign };
            let mag = f.abs();
            if mag == 1 {
                arg.push_str(&format!("{lead}{}", coord(k)));
            } else {
                arg.push_str(&format!("{lead}{mag}*{}", coord(k)));
            }
        }
        if arg.is_empty() {
            arg.push_str(&coord(rng.gen_range(0..n)));
        }
        let sign = if a < 0.0 {
            "-"
        } else if parts.is_empty() {
            ""
        } else {
            "+"
        };
        let lead = if parts.is_empty() { sign.to_string() } else { format!(" {sign} ") };
        parts.push(format!("{lead}{}*cos({arg} + {b})", a.abs()));
    }
    format!("({})", parts.concat())
}

/// Document of `S²×S² + ε h`, `h` a seeded random symmetric field.
pub fn perturbed_s2xs2_document(name: &str, eps: f64, seed: u64) -> String {
    let base = ["1", "sin(x1)^2", "1", "sin(x3)^2"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!(
        "# S2 x S2 plus a fixed random symmetric perturbation of amplitude {eps}\n\
         name = {name}\nseed = {seed}\ndim = 4\ncoords = x1, x2, x3, x4\n\
         region = x1: 0.6 .. 2.5, x2: 0 .. 6, x3: 0.6 .. 2.5, x4: 0 .. 6\n"
    );
    for i in 0..4 {
        for j in i..4 {
            let wave = random_wave(&mut rng, 4);
            if i == j {
                out.push_str(&format!("g[{}][{}] = {} + {eps}*{wave}\n", i + 1, j + 1, base[i]));
            } else {
                out.push_str(&format!("g[{}][{}] = {eps}*{wave}\n", i + 1, j + 1));
            }
        }
    }
    out
}

/// Document of `δ + 0.2 h` on `[-1, 1]^n`, a generic metric with no symmetry.
pub fn random_metric_document(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("# random smooth metric\nname = random{n}_{seed}\nseed = {seed}\ndim = {n}\n");
    let names: Vec<String> = (0..n).map(coord).collect();
    out.push_str(&format!("coords = {}\n", names.join(", ")));
    for i in 0..n {
        for j in i..n {
            let wave = random_wave(&mut rng, n);
            if i == j {
                out.push_str(&format!("g[{}][{}] = 1 + 0.2*{wave}\n", i + 1, j + 1));
            } else {
                out.push_str(&format!("g[{}][{}] = 0.2*{wave}\n", i + 1, j + 1));
            }
        }
    }
    out
}
