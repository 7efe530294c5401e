//! Dense angular sampling of two-dimensional cones.

use nalgebra::{DMatrix, Vector2};

/// Unit vectors at `count` equally spaced angles.
pub fn circle(count: usize) -> impl Iterator<Item = Vector2<f64>> {
    (0..count).map(move |i| {
        let t = std::f64::consts::TAU * i as f64 / count as f64;
        Vector2::new(t.cos(), t.sin())
    })
}

fn in_cone(e: &DMatrix<f64>, f: &DMatrix<f64>, d: &Vector2<f64>, tol: f64) -> bool {
    let ok = |m: &DMatrix<f64>, i: usize| m[(i, 0)] * d[0] + m[(i, 1)] * d[1];
    (0..e.nrows()).all(|i| ok(e, i).abs() <= tol) && (0..f.nrows()).all(|i| ok(f, i) <= tol)
}

/// Smallest `dᵀ S d` over sampled unit directions in `{E d = 0, F d ≤ 0}`,
/// or `None` when no sample lands in the cone.
pub fn min_form_on_cone(
    s: &DMatrix<f64>,
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
    count: usize,
    tol: f64,
) -> Option<f64> {
    circle(count)
        .filter(|d| in_cone(e, f, d, tol))
        .map(|d| {
            d[0] * d[0] * s[(0, 0)]
                + d[0] * d[1] * (s[(0, 1)] + s[(1, 0)])
                + d[1] * d[1] * s[(1, 1)]
        })
        .min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indefinite_form_on_orthant() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let f = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let v = min_form_on_cone(&s, &DMatrix::zeros(0, 2), &f, 10_000, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        let f = DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]);
        let v = min_form_on_cone(&s, &DMatrix::zeros(0, 2), &f, 10_000, 1e-12).unwrap();
        assert!((v + 1.0).abs() < 1e-6);
    }
}
