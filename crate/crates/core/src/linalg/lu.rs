use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonsingularityVerdict {
    pub nonsingular: bool,
    /// Ratio of extreme pivot magnitudes. This is a cheap estimate, not the true
    /// condition number; infinite when the matrix is judged singular.
    pub condition_estimate: f64,
    pub pivot_tol_used: f64,
}

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
    /// Pivot magnitudes below this were treated as zero.
    threshold: f64,
    singular: bool,
}

impl Lu {
    pub fn new(m: &DMatrix<f64>, pivot_tol: f64) -> Self {
        assert!(m.is_square(), "LU needs a square matrix");
        let n = m.nrows();
        let scale = (0..n).map(|j| m.column(j).norm()).fold(0.0, f64::max);
        let threshold = pivot_tol * scale;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = n > 0 && scale == 0.0;
        for k in 0..n {
            let (p, big) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if big <= threshold {
                singular = true;
                continue;
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let t = lu[(k, j)];
                        lu[(i, j)] -= f * t;
                    }
                }
            }
        }
        Lu {
            lu,
            perm,
            threshold,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.lu.nrows()).map(|k| self.lu[(k, k)])
    }

    pub fn verdict(&self, pivot_tol: f64) -> NonsingularityVerdict {
        let condition_estimate = if self.singular {
            f64::INFINITY
        } else if self.lu.nrows() == 0 {
            1.0
        } else {
            let (lo, hi) = self
                .pivots()
                .map(f64::abs)
                .fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| {
                    (lo.min(p), hi.max(p))
                });
            hi / lo
        };
        NonsingularityVerdict {
            nonsingular: !self.singular,
            condition_estimate,
            pivot_tol_used: pivot_tol,
        }
    }

    /// Solves `M z = b`; `None` when the factorization was judged singular.
    pub fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        if self.singular {
            return None;
        }
        let n = self.lu.nrows();
        let mut z = DVector::from_iterator(n, self.perm.iter().map(|&p| b[p]));
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * z[j]).sum();
            z[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * z[j]).sum();
            z[i] = (z[i] - s) / self.lu[(i, i)];
        }
        Some(z)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Nonsingular iff every pivot exceeds `pivot_tol` times the largest initial column norm.
pub fn lu_nonsingular(m: &DMatrix<f64>, pivot_tol: f64) -> NonsingularityVerdict {
    if !m.is_square() {
        return NonsingularityVerdict {
            nonsingular: false,
            condition_estimate: f64::INFINITY,
            pivot_tol_used: pivot_tol,
        };
    }
    Lu::new(m, pivot_tol).verdict(pivot_tol)
}
