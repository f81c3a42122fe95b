//! The Weyl tensor as an operator on 2-forms, the operator `𝔴` on covectors
//! and the kernel bundle `E = {v : W(v,·,·,·) = 0}`.

use crate::curvature::{for_each_index, CurvaturePack, Tensor, Values};
use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::linalg::{cholesky, lower_triangular_inverse, pinv_from_eigen, symmetric_eigen, JetMatrix, Matrix, SymmetricEigen};
use crate::scalar::Scalar;

/// Below this largest eigenvalue of `𝔴` the Weyl tensor is treated as zero.
pub const WEYL_ZERO_FLOOR: f64 = 1e-16;

/// Default spectral threshold for the kernel of `𝔴`.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Ratio between the stability margin of the regular flag and the rank threshold.
pub const STABILITY_FACTOR: f64 = 1e3;

/// Basis `dx^i ∧ dx^j` (`i < j`, lexicographic) of 2-forms with its Gram matrix.
#[derive(Debug, Clone)]
pub struct TwoFormBasis<T> {
    pub pairs: Vec<(usize, usize)>,
    /// `⟨dx^i∧dx^j, dx^k∧dx^l⟩ = g^ik g^jl − g^il g^jk`.
    pub gram: Matrix<T>,
}

impl<T: Scalar> TwoFormBasis<T> {
    pub fn new(g_inv: &Matrix<T>) -> Self {
        let n = g_inv.rows();
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        let gram = Matrix::from_fn(pairs.len(), pairs.len(), |a, b| {
            let (i, j) = pairs[a];
            let (k, l) = pairs[b];
            g_inv[(i, k)] * g_inv[(j, l)] - g_inv[(i, l)] * g_inv[(j, k)]
        });
        TwoFormBasis { pairs, gram }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Index of `dx^i ∧ dx^j` for `i < j`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (i, j))
    }
}

/// Kernel `K[z,t,a,b] = g^{ca} g^{db} A_{dztc}` of `b ↦ 𝒜(b)`, so that
/// `𝒜(b)_zt = K[z,t,a,b] b_ab` and `𝒜(X*⊗Y*)(Z,T) = A(Y,Z,T,X)`.
pub fn curv_kernel<T: Scalar>(a: &Tensor<T>, g_inv: &Tensor<T>) -> Result<Tensor<T>> {
    if a.rank() != 4 || a.valence().0 != 0 {
        return Err(Error::Shape("curvature operator needs a (0,4) tensor".into()));
    }
    let n = a.dim();
    let layout = a.layout().clone();
    let order = a.order().min(g_inv.order());
    // h[d, z, t, a] = g^{ca} A_{dztc}
    let h = Tensor::from_fn(n, 0, 4, |idx| {
        let (d, z, t, x) = (idx[0], idx[1], idx[2], idx[3]);
        let mut acc = Jet::zero(&layout, order);
        for c in 0..n {
            acc.add_product(g_inv.get(&[c, x]), a.get(&[d, z, t, c]));
        }
        acc
    });
    Ok(Tensor::from_fn(n, 0, 4, |idx| {
        let (z, t, x, y) = (idx[0], idx[1], idx[2], idx[3]);
        let mut acc = Jet::zero(&layout, order);
        for d in 0..n {
            acc.add_product(g_inv.get(&[d, y]), h.get(&[d, z, t, x]));
        }
        acc
    }))
}

/// `𝒜(b)` for a (0,4) tensor `A` with curvature symmetries and a (0,2) tensor `b`.
pub fn curv_apply<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, g_inv: &Tensor<T>) -> Result<Tensor<T>> {
    apply_kernel(&curv_kernel(a, g_inv)?, b)
}

/// Applies a kernel from [`curv_kernel`] to a (0,2) tensor.
pub fn apply_kernel<T: Scalar>(k: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if b.rank() != 2 || b.valence().0 != 0 || b.dim() != k.dim() {
        return Err(Error::Shape("curvature operator acts on (0,2) tensors".into()));
    }
    let n = k.dim();
    let layout = k.layout().clone();
    let order = k.order().min(b.order());
    Ok(Tensor::from_fn(n, 0, 2, |idx| {
        let mut acc = Jet::zero(&layout, order);
        for x in 0..n {
            for y in 0..n {
                acc.add_product(k.get(&[idx[0], idx[1], x, y]), b.get(&[x, y]));
            }
        }
        acc
    }))
}

/// Matrix of `𝒲` in the basis `dx^i∧dx^j`: column `(ij)` holds the
/// components of `𝒲(dx^i∧dx^j)`.
pub fn weyl_endomorphism<T: Scalar>(kernel: &Tensor<T>, basis: &TwoFormBasis<T>) -> JetMatrix<T> {
    JetMatrix::from_fn(basis.len(), |row, col| {
        let (z, t) = basis.pairs[row];
        let (i, j) = basis.pairs[col];
        kernel.get(&[z, t, i, j]) - kernel.get(&[z, t, j, i])
    })
}

/// `𝔴` as a matrix acting on covector components: `𝔴(θ)_q = Σ_c P[q,c] θ_c`.
///
/// `𝔴(θ)(X) = Σ_i 𝒲(𝒲(f_i* ∧ θ))(f_i, X)`, i.e. minus the Ricci contraction of `𝒲²`.
pub fn ricci_contraction_sq<T: Scalar>(kernel: &Tensor<T>) -> JetMatrix<T> {
    let n = kernel.dim();
    let layout = kernel.layout().clone();
    let order = kernel.order();
    // skew[z, t, i, c] = 𝒲(dx^i ∧ dx^c)_zt
    let skew = Tensor::from_fn(n, 0, 4, |idx| {
        let (z, t, i, c) = (idx[0], idx[1], idx[2], idx[3]);
        kernel.get(&[z, t, i, c]) - kernel.get(&[z, t, c, i])
    });
    JetMatrix::from_fn(n, |q, c| {
        let mut acc = Jet::zero(&layout, order);
        for i in 0..n {
            for z in 0..n {
                for t in 0..n {
                    acc.add_product(kernel.get(&[i, q, z, t]), skew.get(&[z, t, i, c]));
                }
            }
        }
        acc
    })
}

/// Rank and basis of `E` at a point, from the orthonormal-frame spectrum of `𝔴`.
#[derive(Debug, Clone)]
pub struct KernelInfo<T> {
    pub rank: usize,
    /// Orthonormal vectors (coordinate components) spanning `E`.
    pub basis: Vec<Vec<T>>,
    pub regular: bool,
    /// Smallest retained eigenvalue over the largest, or 1 when nothing is retained.
    pub gap_ratio: T,
    /// Largest `|W(v,·,·,·)|` over the basis.
    pub isomorphism_residual: T,
}

/// Orthonormal frame data at a point: `g⁻¹ = L Lᵀ`, frame vectors are the columns of `L`.
#[derive(Debug, Clone)]
pub struct Frame<T> {
    pub l: Matrix<T>,
    pub l_inv: Matrix<T>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(g_inv: &Matrix<T>) -> Result<Self> {
        let l = cholesky(g_inv)?;
        let l_inv = lower_triangular_inverse(&l);
        Ok(Frame { l, l_inv })
    }

    /// Matrix of a covector endomorphism in the frame: `Lᵀ P L^{-T}`.
    pub fn covector_operator(&self, p: &Matrix<T>) -> Matrix<T> {
        self.l.transpose().matmul(p).matmul(&self.l_inv.transpose())
    }

    /// Frame components of a covector.
    pub fn covector_to_frame(&self, theta: &[T]) -> Vec<T> {
        self.l.transpose().matvec(theta)
    }

    /// Coordinate components of the vector with frame components `u`.
    pub fn vector_from_frame(&self, u: &[T]) -> Vec<T> {
        self.l.matvec(u)
    }
}

/// Computes rank, basis and regularity of `E` from the values of `𝔴` and `W`.
pub fn kernel_rank_e<T: Scalar>(
    w_frak: &Matrix<T>,
    weyl: &Values<T>,
    frame: &Frame<T>,
    g_inv: &Matrix<T>,
    rel_tol: T,
) -> Result<(KernelInfo<T>, SymmetricEigen<T>)> {
    let n = w_frak.rows();
    let hat = frame.covector_operator(w_frak);
    let hat = Matrix::from_fn(n, n, |i, j| (hat[(i, j)] + hat[(j, i)]) * T::lit(0.5));
    let eig = symmetric_eigen(&hat);
    let lmax = eig.max_abs_value();
    let (rank, gap_ratio) = if lmax <= T::lit(WEYL_ZERO_FLOOR) {
        (n, T::one())
    } else {
        let cutoff = rel_tol * lmax;
        let rank = eig.values.iter().filter(|&&l| l <= cutoff).count();
        let ratio = eig.values.get(rank).map_or(T::one(), |&l| l / lmax);
        (rank, ratio)
    };
    let regular = gap_ratio > T::lit(STABILITY_FACTOR) * rel_tol;
    let basis: Vec<Vec<T>> = (0..rank)
        .map(|k| frame.vector_from_frame(&eig.vector(k)))
        .collect();

    let mut residual = T::zero();
    for v in &basis {
        let mut contracted = Values::zeros(n, 3);
        for_each_index(n, 3, |idx| {
            let mut s = T::zero();
            for (a, &va) in v.iter().enumerate() {
                s += va * weyl.get(&[a, idx[0], idx[1], idx[2]]);
            }
            contracted.set(idx, s);
        });
        let r = contracted.metric_norm(g_inv);
        if r > residual {
            residual = r;
        }
    }
    let tol = T::lit(10.0) * T::count(n) * (rel_tol * lmax).sqrt() + T::lit(1e-7);
    if residual > tol {
        return Err(Error::IsomorphismViolation {
            residual: residual.to_f64_lossy(),
        });
    }
    Ok((
        KernelInfo {
            rank,
            basis,
            regular,
            gap_ratio,
            isomorphism_residual: residual,
        },
        eig,
    ))
}

/// `𝒲`, `𝔴`, `𝔴^#` and `E` at one point.
#[derive(Debug, Clone)]
pub struct WeylAlgebraPack<T: Scalar> {
    pub basis: TwoFormBasis<T>,
    /// Kernel of `b ↦ 𝒲(b)`, see [`curv_kernel`].
    pub kernel: Tensor<T>,
    pub operator: JetMatrix<T>,
    /// `𝔴` on covector components.
    pub w_frak: JetMatrix<T>,
    /// Pointwise Moore–Penrose inverse of `𝔴`, coordinate covector components.
    pub w_sharp: Matrix<T>,
    /// `𝔴` in the orthonormal frame and its spectrum.
    pub w_hat_eigen: SymmetricEigen<T>,
    pub frame: Frame<T>,
    pub e: KernelInfo<T>,
    /// `dim Ker 𝒲` at the point.
    pub weyl_kernel_dim: usize,
    pub rel_tol: T,
}

impl<T: Scalar> WeylAlgebraPack<T> {
    pub fn compute(pack: &CurvaturePack<T>, rel_tol: T) -> Result<Self> {
        let g_inv = pack.g_inv_values();
        let basis = TwoFormBasis::new(&g_inv);
        let kernel = curv_kernel(&pack.weyl, &pack.g_inv)?;
        let operator = weyl_endomorphism(&kernel, &basis);
        let w_frak = ricci_contraction_sq(&kernel);
        let frame = Frame::new(&g_inv)?;
        let weyl = pack.weyl.point_values();
        let (e, w_hat_eigen) = kernel_rank_e(&w_frak.values(), &weyl, &frame, &g_inv, rel_tol)?;
        let n = pack.dim();
        let w_sharp = if e.rank == n {
            Matrix::zeros(n, n)
        } else {
            let hat_sharp = pinv_from_eigen(&w_hat_eigen, rel_tol);
            frame
                .l_inv
                .transpose()
                .matmul(&hat_sharp)
                .matmul(&frame.l.transpose())
        };
        let weyl_kernel_dim = weyl_kernel_dimension(&operator.values(), &basis, rel_tol.sqrt())?;
        Ok(WeylAlgebraPack {
            basis,
            kernel,
            operator,
            w_frak,
            w_sharp,
            w_hat_eigen,
            frame,
            e,
            weyl_kernel_dim,
            rel_tol,
        })
    }

    /// `tr(𝒲²)` at the point.
    pub fn trace_w_squared(&self) -> T {
        let m = self.operator.values();
        m.matmul(&m).as_slice().iter().step_by(m.rows() + 1).copied().sum()
    }

    /// Whether the kernel-dimension bound `dim Ker 𝒲 ≥ r(n − (r+1)/2)` holds.
    pub fn kernel_bound_holds(&self, n: usize) -> bool {
        let r = self.e.rank;
        2 * self.weyl_kernel_dim >= r * (2 * n - r - 1)
    }
}

/// Dimension of the kernel of `𝒲` measured in an orthonormal basis of 2-forms.
pub fn weyl_kernel_dimension<T: Scalar>(
    operator: &Matrix<T>,
    basis: &TwoFormBasis<T>,
    rel_tol: T,
) -> Result<usize> {
    if basis.is_empty() {
        return Ok(0);
    }
    // G M is symmetric; congruence by the Gram Cholesky factor keeps its rank
    let form = basis.gram.matmul(operator);
    let lg = cholesky(&basis.gram)?;
    let lg_inv = lower_triangular_inverse(&lg);
    let sym = lg_inv.matmul(&form).matmul(&lg_inv.transpose());
    let sym = Matrix::from_fn(sym.rows(), sym.cols(), |i, j| (sym[(i, j)] + sym[(j, i)]) * T::lit(0.5));
    let eig = symmetric_eigen(&sym);
    let max = eig.max_abs_value();
    if max <= T::lit(WEYL_ZERO_FLOOR).sqrt() {
        return Ok(basis.len());
    }
    Ok(eig.values.iter().filter(|l| l.abs() <= rel_tol * max).count())
}
