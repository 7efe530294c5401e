//! Double description (Motzkin) enumeration of the generators of a polyhedral cone.

use crate::field::{axpy, dot, normalize, rows_of, scale, Field};
use nalgebra::DMatrix;

/// `{t : a t ≤ 0 for every row a}` written as `lines + cone(rays)`.
#[derive(Debug, Clone)]
pub struct Generators<T> {
    pub lines: Vec<Vec<T>>,
    pub rays: Vec<Vec<T>>,
}

impl<T: Field> Generators<T> {
    pub fn is_trivial(&self) -> bool {
        self.lines.is_empty() && self.rays.is_empty()
    }

    /// Any nonzero element of the cone.
    pub fn witness(&self) -> Option<&Vec<T>> {
        self.lines.first().or(self.rays.first())
    }
}

fn zero_set<T: Field>(r: &[T], rows: &[Vec<T>]) -> Vec<bool> {
    rows.iter().map(|a| dot(a, r).is_zero()).collect()
}

/// Generators of `{t ∈ ℝᵏ : a t ≤ 0, a ∈ rows}`.
pub fn enumerate<T: Field>(k: usize, rows: &[Vec<T>]) -> Generators<T> {
    let mut lines: Vec<Vec<T>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| T::from_f64(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    let mut rays: Vec<Vec<T>> = Vec::new();
    for (ci, a) in rows.iter().enumerate() {
        if let Some(p) = lines.iter().position(|l| !dot(a, l).is_zero()) {
            let mut piv = lines.remove(p);
            if dot(a, &piv).signum().is_gt() {
                piv = scale(&piv, &T::from_f64(-1.0));
            }
            let ap = dot(a, &piv);
            for l in lines.iter_mut() {
                let s = dot(a, l).div(&ap);
                *l = axpy(l, &s, &piv);
            }
            for r in rays.iter_mut() {
                let s = dot(a, r).div(&ap);
                *r = normalize(&axpy(r, &s, &piv));
            }
            rays.push(normalize(&piv));
            continue;
        }
        let done = &rows[..ci];
        let vals: Vec<T> = rays.iter().map(|r| dot(a, r)).collect();
        let zsets: Vec<Vec<bool>> = rays.iter().map(|r| zero_set(r, done)).collect();
        let pos: Vec<usize> = (0..rays.len())
            .filter(|&i| vals[i].signum().is_gt())
            .collect();
        let neg: Vec<usize> = (0..rays.len())
            .filter(|&i| vals[i].signum().is_lt())
            .collect();
        let mut next: Vec<Vec<T>> = (0..rays.len())
            .filter(|&i| !vals[i].signum().is_gt())
            .map(|i| rays[i].clone())
            .collect();
        for &p in &pos {
            for &q in &neg {
                let common: Vec<bool> = zsets[p]
                    .iter()
                    .zip(&zsets[q])
                    .map(|(x, y)| *x && *y)
                    .collect();
                let blocked = (0..rays.len()).any(|r| {
                    r != p && r != q && common.iter().zip(&zsets[r]).all(|(c, z)| !*c || *z)
                });
                if blocked {
                    continue;
                }
                // (a·p) q − (a·q) p has a·(…) = 0 and nonnegative weights
                let comb: Vec<T> = rays[q]
                    .iter()
                    .zip(&rays[p])
                    .map(|(xq, xp)| vals[p].mul(xq).sub(&vals[q].mul(xp)))
                    .collect();
                if comb.iter().any(|v| !v.is_zero()) {
                    next.push(normalize(&comb));
                }
            }
        }
        rays = next;
    }
    Generators { lines, rays }
}

/// Generators of `{z : E z = 0, F z ≤ 0}`.
pub fn cone_generators<T: Field>(e: &DMatrix<f64>, f: &DMatrix<f64>) -> Generators<T> {
    let k = e.ncols().max(f.ncols());
    let mut rows: Vec<Vec<T>> = Vec::new();
    for r in rows_of::<T>(e) {
        rows.push(scale(&r, &T::from_f64(-1.0)));
        rows.push(r);
    }
    rows.extend(rows_of::<T>(f));
    enumerate(k, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn orthant_has_unit_rays() {
        let f = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let g = cone_generators::<BigRational>(&DMatrix::zeros(0, 2), &f);
        assert!(g.lines.is_empty());
        assert_eq!(g.rays.len(), 2);
    }

    #[test]
    fn opposite_half_spaces_leave_a_line() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let g = cone_generators::<BigRational>(&DMatrix::zeros(0, 2), &f);
        assert_eq!(g.lines.len(), 1);
        assert!(g.rays.is_empty());
    }

    #[test]
    fn pointed_cone_cut_to_zero() {
        // x ≥ 0, y ≥ 0, x + y ≤ 0
        let f = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        assert!(cone_generators::<BigRational>(&DMatrix::zeros(0, 2), &f).is_trivial());
        assert!(cone_generators::<f64>(&DMatrix::zeros(0, 2), &f).is_trivial());
    }

    #[test]
    fn equalities_restrict_to_a_subspace() {
        let e = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
        let f = DMatrix::from_row_slice(2, 3, &[-1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let g = cone_generators::<BigRational>(&e, &f);
        assert!(!g.is_trivial());
        for r in g.lines.iter().chain(&g.rays) {
            assert_eq!(r[0], r[1]);
        }
    }

    #[test]
    fn square_pyramid_has_four_rays() {
        // |x| ≤ z, |y| ≤ z
        let f = DMatrix::from_row_slice(
            4,
            3,
            &[
                1.0, 0.0, -1.0, -1.0, 0.0, -1.0, 0.0, 1.0, -1.0, 0.0, -1.0, -1.0,
            ],
        );
        let g = cone_generators::<BigRational>(&DMatrix::zeros(0, 3), &f);
        assert!(g.lines.is_empty());
        assert_eq!(g.rays.len(), 4);
    }
}
