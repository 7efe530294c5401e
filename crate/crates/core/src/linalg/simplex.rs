use nalgebra::{DMatrix, DVector};

/// `maximize cᵀz` subject to `A_eq z = b_eq`, `A_le z ≤ b_le`, `z` free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub c: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_le: DMatrix<f64>,
    pub b_le: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { value: f64, z: DVector<f64> },
    Infeasible,
    Unbounded,
}

/// Dense simplex tableau over nonnegative variables, last column is the rhs.
struct Tableau {
    t: DMatrix<f64>,
    basis: Vec<usize>,
    tol: f64,
}

enum Pivot {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[(r, c)];
        let ncols = self.t.ncols();
        for j in 0..ncols {
            self.t[(r, j)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == r {
                continue;
            }
            let f = self.t[(i, c)];
            if f != 0.0 {
                for j in 0..ncols {
                    let v = self.t[(r, j)];
                    self.t[(i, j)] -= f * v;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost · x` restricted to columns `< active` with Bland's rule.
    fn minimize(&mut self, cost: &[f64], active: usize) -> Pivot {
        let rhs = self.rhs_col();
        loop {
            let m = self.t.nrows();
            let reduced = |j: usize| {
                cost[j]
                    - (0..m)
                        .map(|i| cost[self.basis[i]] * self.t[(i, j)])
                        .sum::<f64>()
            };
            let entering = (0..active)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| reduced(j) < -self.tol);
            let Some(c) = entering else {
                return Pivot::Optimal;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[(i, c)];
                if a > self.tol {
                    let ratio = self.t[(i, rhs)] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - self.tol
                                || (ratio <= br + self.tol && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Pivot::Unbounded,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

impl LinearProgram {
    /// Two-phase dense simplex with Bland's rule; free variables are split as `z⁺ − z⁻`.
    pub fn maximize(&self, tol: f64) -> LpResult {
        let k = self.c.len();
        let p = self.a_eq.nrows();
        let r = self.a_le.nrows();
        let rows = p + r;
        // columns: z⁺ (k), z⁻ (k), slacks (r), artificials (rows), rhs
        let nat = 2 * k + r;
        let ncols = nat + rows + 1;
        let mut t = DMatrix::zeros(rows, ncols);
        for i in 0..rows {
            let (row, b) = if i < p {
                (self.a_eq.row(i), self.b_eq[i])
            } else {
                (self.a_le.row(i - p), self.b_le[i - p])
            };
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for j in 0..k {
                t[(i, j)] = sign * row[j];
                t[(i, k + j)] = -sign * row[j];
            }
            if i >= p {
                t[(i, 2 * k + (i - p))] = sign;
            }
            t[(i, nat + i)] = 1.0;
            t[(i, ncols - 1)] = sign * b;
        }
        let mut tab = Tableau {
            t,
            basis: (nat..nat + rows).collect(),
            tol,
        };

        let mut phase1 = vec![0.0; ncols - 1];
        phase1[nat..nat + rows].iter_mut().for_each(|c| *c = 1.0);
        tab.minimize(&phase1, nat + rows);
        let rhs = ncols - 1;
        let infeas: f64 = (0..rows)
            .filter(|&i| tab.basis[i] >= nat)
            .map(|i| tab.t[(i, rhs)])
            .sum();
        let scale = 1.0
            + self
                .b_eq
                .iter()
                .chain(self.b_le.iter())
                .fold(0.0_f64, |a, v| a.max(v.abs()));
        if infeas > tol * scale {
            return LpResult::Infeasible;
        }
        // Drive artificials out of the basis or drop their (redundant) rows.
        let mut i = 0;
        while i < tab.t.nrows() {
            if tab.basis[i] >= nat {
                let col = (0..nat).find(|&j| tab.t[(i, j)].abs() > tol);
                match col {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.t = tab.t.clone().remove_row(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }

        let mut phase2 = vec![0.0; ncols - 1];
        for j in 0..k {
            phase2[j] = -self.c[j];
            phase2[k + j] = self.c[j];
        }
        if let Pivot::Unbounded = tab.minimize(&phase2, nat) {
            return LpResult::Unbounded;
        }
        let mut x = vec![0.0; nat];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < nat {
                x[b] = tab.t[(i, rhs)];
            }
        }
        let z = DVector::from_iterator(k, (0..k).map(|j| x[j] - x[k + j]));
        LpResult::Optimal {
            value: self.c.dot(&z),
            z,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: &[f64], eq: (&[f64], &[f64]), le: (&[f64], &[f64])) -> LinearProgram {
        let k = c.len();
        LinearProgram {
            c: DVector::from_row_slice(c),
            a_eq: DMatrix::from_row_slice(eq.1.len(), k, eq.0),
            b_eq: DVector::from_row_slice(eq.1),
            a_le: DMatrix::from_row_slice(le.1.len(), k, le.0),
            b_le: DVector::from_row_slice(le.1),
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 2y, x + y ≤ 4, x + 3y ≤ 6, x ≤ 3, -x ≤ 0, -y ≤ 0
        let p = lp(
            &[3.0, 2.0],
            (&[], &[]),
            (
                &[1.0, 1.0, 1.0, 3.0, 1.0, 0.0, -1.0, 0.0, 0.0, -1.0],
                &[4.0, 6.0, 3.0, 0.0, 0.0],
            ),
        );
        match p.maximize(1e-9) {
            LpResult::Optimal { value, z } => {
                assert!((value - 11.0).abs() < 1e-12);
                assert!((z[0] - 3.0).abs() < 1e-12 && (z[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = lp(&[1.0], (&[], &[]), (&[1.0, -1.0], &[-1.0, -1.0]));
        assert_eq!(inf.maximize(1e-9), LpResult::Infeasible);
        let unb = lp(&[1.0], (&[], &[]), (&[-1.0], &[0.0]));
        assert_eq!(unb.maximize(1e-9), LpResult::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        // x + y = 1 twice, maximize x - y with x, y ≥ 0
        let p = lp(
            &[1.0, -1.0],
            (&[1.0, 1.0, 2.0, 2.0], &[1.0, 2.0]),
            (&[-1.0, 0.0, 0.0, -1.0], &[0.0, 0.0]),
        );
        match p.maximize(1e-9) {
            LpResult::Optimal { value, .. } => assert!((value - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's cycling example, solved without cycling under Bland's rule.
        let p = lp(
            &[0.75, -150.0, 0.02, -6.0],
            (&[], &[]),
            (
                &[
                    0.25, -60.0, -0.04, 9.0, 0.5, -90.0, -0.02, 3.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0,
                    0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0,
                ],
                &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            ),
        );
        match p.maximize(1e-12) {
            LpResult::Optimal { value, .. } => assert!((value - 0.05).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
    }
}
