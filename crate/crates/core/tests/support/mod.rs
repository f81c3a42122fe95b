//! Independent oracles shared by the integration tests: Richardson-extrapolated
//! finite differences and a finite-difference curvature tensor.
#![allow(dead_code)]

use cel_core::dsl::{BinaryOp, Expr, UnaryOp};
use cel_core::MetricSpec;
use rand::Rng;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central-difference tensor-product stencil for `∂^α f` with step `h`.
fn stencil(f: &dyn Fn(&[f64]) -> f64, p: &[f64], alpha: &[usize], h: f64) -> f64 {
    let vars: Vec<(usize, usize)> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(i, &k)| (i, k))
        .collect();
    let mut total = 0.0;
    let mut choice = vec![0usize; vars.len()];
    loop {
        let mut x = p.to_vec();
        let mut w = 1.0;
        for (&(var, k), &j) in vars.iter().zip(&choice) {
            x[var] += (k as f64 / 2.0 - j as f64) * h;
            w *= binomial(k, j) * if j % 2 == 0 { 1.0 } else { -1.0 } / h.powi(k as i32);
        }
        total += w * f(&x);
        let mut d = 0;
        loop {
            if d == vars.len() {
                return total;
            }
            choice[d] += 1;
            if choice[d] <= vars[d].1 {
                break;
            }
            choice[d] = 0;
            d += 1;
        }
    }
}

/// Ridders' extrapolation of the central stencil: returns the estimate and
/// its error estimate. `h0` is the largest step tried.
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, p: &[f64], alpha: &[usize], h0: f64) -> (f64, f64) {
    if alpha.iter().all(|&k| k == 0) {
        return (f(p), 0.0);
    }
    const SHRINK: f64 = 1.4;
    const ROWS: usize = 12;
    let mut table = vec![vec![0.0; ROWS]; ROWS];
    let mut h = h0;
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..ROWS {
        table[0][i] = stencil(f, p, alpha, h);
        let mut fac = SHRINK * SHRINK;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK * SHRINK;
            let err = (table[j][i] - table[j - 1][i])
                .abs()
                .max((table[j][i] - table[j - 1][i - 1]).abs());
            if err <= best.1 {
                best = (table[j][i], err);
            }
        }
        if i > 0 && (table[i][i] - table[i - 1][i - 1]).abs() >= 2.0 * best.1 {
            break;
        }
        h /= SHRINK;
    }
    best
}

/// Every multi-index of total degree exactly `k` in `n` variables.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in multi_indices(n - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Metric values, first and second partials from finite differences of the
/// plain evaluator. `dg[l][i][j] = ∂_l g_ij`, `ddg[k][l][i][j] = ∂_k ∂_l g_ij`.
pub struct FdMetric {
    pub n: usize,
    pub g: Vec<Vec<f64>>,
    pub g_inv: Vec<Vec<f64>>,
    pub dg: Vec<Vec<Vec<f64>>>,
    pub ddg: Vec<Vec<Vec<Vec<f64>>>>,
}

fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap())
            .unwrap();
        a.swap(c, p);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for k in 0..2 * n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

impl FdMetric {
    pub fn new(spec: &MetricSpec, p: &[f64], h0: f64) -> Self {
        let n = spec.dim();
        let comp = |i: usize, j: usize| {
            let e = spec.entry(i, j).clone();
            move |x: &[f64]| e.eval::<f64>(x).unwrap()
        };
        let mut g = vec![vec![0.0; n]; n];
        let mut dg = vec![vec![vec![0.0; n]; n]; n];
        let mut ddg = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                let f = comp(i, j);
                g[i][j] = f(p);
                for l in 0..n {
                    let mut a = vec![0; n];
                    a[l] = 1;
                    dg[l][i][j] = fd_partial(&f, p, &a, h0).0;
                    for k in 0..n {
                        let mut a = vec![0; n];
                        a[l] += 1;
                        a[k] += 1;
                        ddg[k][l][i][j] = fd_partial(&f, p, &a, h0).0;
                    }
                }
            }
        }
        let g_inv = invert(&g);
        FdMetric { n, g, g_inv, dg, ddg }
    }

    /// `Γ_{t,jk} = ½(∂_j g_kt + ∂_k g_jt − ∂_t g_jk)`.
    fn gamma_first(&self, t: usize, j: usize, k: usize) -> f64 {
        0.5 * (self.dg[j][k][t] + self.dg[k][j][t] - self.dg[t][j][k])
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        (0..self.n).map(|l| self.g_inv[k][l] * self.gamma_first(l, i, j)).sum()
    }

    /// `R_ijkt` through second derivatives of `g` and Christoffel symbols of the first kind.
    pub fn riemann(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for t in 0..n {
                        let h = &self.ddg;
                        let mut r = 0.5 * (h[i][k][j][t] + h[j][t][i][k] - h[i][t][j][k] - h[j][k][i][t]);
                        for l in 0..n {
                            for m in 0..n {
                                r += self.g_inv[l][m]
                                    * (self.gamma_first(l, j, t) * self.gamma_first(m, i, k)
                                        - self.gamma_first(l, i, t) * self.gamma_first(m, j, k));
                            }
                        }
                        out[((i * n + j) * n + k) * n + t] = r;
                    }
                }
            }
        }
        out
    }
}

/// Random smooth expression that is finite everywhere on `[-1.5, 1.5]^n`.
pub fn random_expr(rng: &mut impl Rng, n: usize, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.7) {
            Expr::Coord(rng.gen_range(0..n))
        } else {
            Expr::Const((rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0)
        };
    }
    let a = random_expr(rng, n, depth - 1);
    match rng.gen_range(0..9) {
        0 => Expr::unary(UnaryOp::Sin, a),
        1 => Expr::unary(UnaryOp::Cos, a),
        2 => Expr::unary(
            UnaryOp::Exp,
            Expr::binary(BinaryOp::Mul, Expr::Const(0.3), Expr::unary(UnaryOp::Sin, a)),
        ),
        3 => Expr::unary(
            UnaryOp::Ln,
            Expr::binary(BinaryOp::Add, Expr::Const(2.0), Expr::unary(UnaryOp::Sin, a)),
        ),
        4 => Expr::unary(
            UnaryOp::Sqrt,
            Expr::binary(
                BinaryOp::Add,
                Expr::Const(1.0),
                Expr::binary(BinaryOp::Pow, Expr::unary(UnaryOp::Sin, a), Expr::Const(2.0)),
            ),
        ),
        5 => Expr::binary(
            BinaryOp::Div,
            a,
            Expr::binary(
                BinaryOp::Add,
                Expr::Const(1.5),
                Expr::unary(UnaryOp::Cos, random_expr(rng, n, depth - 1)),
            ),
        ),
        6 => Expr::binary(BinaryOp::Pow, Expr::unary(UnaryOp::Sin, a), Expr::Const(rng.gen_range(2..4) as f64)),
        7 => Expr::binary(BinaryOp::Mul, a, random_expr(rng, n, depth - 1)),
        _ => Expr::binary(
            if rng.gen_bool(0.5) { BinaryOp::Add } else { BinaryOp::Sub },
            a,
            random_expr(rng, n, depth - 1),
        ),
    }
}
