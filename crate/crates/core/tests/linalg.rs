use cel_core::linalg::{moore_penrose, symmetric_eigen, Matrix};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_faer(m: &Matrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// `Q diag(λ) Qᵀ` with exactly `rank` nonzero eigenvalues of mixed sign.
fn symmetric_of_rank(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    let raw = Mat::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = raw.qr().compute_Q();
    let d: Vec<f64> = (0..n)
        .map(|k| match k < rank {
            true => rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            false => 0.0,
        })
        .collect();
    let a = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| q[(i, k)] * d[k] * q[(j, k)]).sum::<f64>());
    Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

fn rel(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    a.sub(b).frobenius() / a.frobenius().max(b.frobenius()).max(1.0)
}

#[test]
fn moore_penrose_axioms_and_svd_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = [0.0f64; 5];
    for i in 0..1000 {
        let n = 4 + i % 12;
        let rank = rng.gen_range(0..=n);
        let a = symmetric_of_rank(n, rank, &mut rng);
        let x = moore_penrose(&a, 1e-10);
        let ax = a.matmul(&x);
        let xa = x.matmul(&a);
        let svd = to_faer(&a).svd().unwrap().pseudoinverse();
        let svd = Matrix::from_fn(n, n, |r, c| svd[(r, c)]);
        let res = [
            rel(&ax.matmul(&a), &a),
            rel(&xa.matmul(&x), &x),
            rel(&ax, &ax.transpose()),
            rel(&xa, &xa.transpose()),
            rel(&x, &svd),
        ];
        for (w, r) in worst.iter_mut().zip(res) {
            *w = w.max(r);
        }
        let eig = symmetric_eigen(&a);
        let found = eig.values.iter().filter(|v| v.abs() > 1e-10 * eig.max_abs_value()).count();
        assert_eq!(found, rank);
    }
    assert!(worst.iter().all(|&w| w < 1e-9), "{worst:?}");
}

#[test]
fn eigen_decomposition_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [4, 9, 15] {
        let a = symmetric_of_rank(n, n - 1, &mut rng);
        let eig = symmetric_eigen(&a);
        let v = &eig.vectors;
        assert!(v.transpose().matmul(v).sub(&Matrix::identity(n)).max_abs() < 1e-12);
        let mut reference = to_faer(&a).self_adjoint_eigenvalues(Side::Lower).unwrap();
        reference.sort_by(f64::total_cmp);
        for (x, y) in eig.values.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }
}
