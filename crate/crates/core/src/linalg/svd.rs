use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 100;

/// Thin SVD `A V = U Σ` from one-sided (Hestenes) Jacobi rotations.
///
/// `u` is `m×n` with unit columns where `σ > 0` (zero columns otherwise), `sigma`
/// is sorted descending, `v` is `n×n` orthogonal.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let mut w = a.clone();
        let mut v = DMatrix::identity(n, n);
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = w.column(p).norm_squared();
                    let beta = w.column(q).norm_squared();
                    let gamma = w.column(p).dot(&w.column(q));
                    if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for k in 0..m {
                        let wp = w[(k, p)];
                        let wq = w[(k, q)];
                        w[(k, p)] = c * wp - s * wq;
                        w[(k, q)] = s * wp + c * wq;
                    }
                    for k in 0..n {
                        let vp = v[(k, p)];
                        let vq = v[(k, q)];
                        v[(k, p)] = c * vp - s * vq;
                        v[(k, q)] = s * vp + c * vq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
        let sigma = DVector::from_iterator(n, order.iter().map(|&j| norms[j]));
        let u = DMatrix::from_fn(m, n, |r, c| {
            let j = order[c];
            if norms[j] > 0.0 {
                w[(r, j)] / norms[j]
            } else {
                0.0
            }
        });
        let v = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Svd { u, sigma, v }
    }

    pub fn max_singular(&self) -> f64 {
        self.sigma.iter().copied().next().unwrap_or(0.0)
    }

    /// Number of singular values above `rank_tol · σ_max`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        let cut = rank_tol * self.max_singular();
        self.sigma.iter().filter(|&&s| s > cut && s > 0.0).count()
    }

    /// Minimum-norm least-squares solution, truncating `σ ≤ rank_tol · σ_max`.
    pub fn solve(&self, b: &DVector<f64>, rank_tol: f64) -> DVector<f64> {
        let r = self.rank(rank_tol);
        let mut z = DVector::zeros(self.v.nrows());
        for j in 0..r {
            let coef = self.u.column(j).dot(b) / self.sigma[j];
            z.axpy(coef, &self.v.column(j), 1.0);
        }
        z
    }
}

/// Orthonormal basis (as columns) of `null(A)`; `k − rank` columns for `A` with `k` columns.
pub fn nullspace(a: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let k = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(k, k);
    }
    let svd = Svd::new(a);
    let r = svd.rank(rank_tol);
    svd.v.columns(r, k - r).into_owned()
}

pub fn rank(a: &DMatrix<f64>, rank_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    Svd::new(a).rank(rank_tol)
}
