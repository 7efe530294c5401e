use nalgebra::{DMatrix, DVector};

use super::simplex::{LinearProgram, LpResult};
use super::svd::nullspace;

/// The polyhedral cone `{z ∈ ℝᵏ : E z = 0, F z ≤ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    pub e: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeVerdict {
    pub trivial: bool,
    /// A nonzero member with `‖z‖∞ = 1` when the cone is nontrivial.
    pub witness: Option<DVector<f64>>,
}

impl ConeSpec {
    pub fn new(e: DMatrix<f64>, f: DMatrix<f64>) -> Self {
        assert_eq!(
            e.ncols(),
            f.ncols(),
            "cone rows must share the ambient dimension"
        );
        ConeSpec { e, f }
    }

    pub fn dim(&self) -> usize {
        self.e.ncols()
    }

    /// Largest violation of the defining system at `z`.
    pub fn violation(&self, z: &DVector<f64>) -> f64 {
        let eq = (&self.e * z).amax();
        let ineq = (&self.f * z).iter().fold(0.0_f64, |a, &v| a.max(v));
        if self.e.nrows() == 0 {
            ineq
        } else {
            eq.max(ineq)
        }
    }
}

/// Decides whether the cone is `{0}`.
///
/// The equality rows are eliminated first by an orthonormal basis `N` of `null(E)`,
/// so the LPs run over `z = N t`. For each coordinate `i` and sign `s` the LP
/// `max s·z_i  s.t.  F z ≤ 0, s·z_i ≤ 1` has value 0 or 1; the cone is
/// nontrivial iff some LP reaches 1.
pub fn cone_is_trivial(cone: &ConeSpec, rank_tol: f64, lp_tol: f64) -> ConeVerdict {
    let k = cone.dim();
    let e = normalize_rows(&cone.e, 0.0);
    let basis = nullspace(&e, rank_tol);
    let d = basis.ncols();
    if d == 0 {
        return ConeVerdict {
            trivial: true,
            witness: None,
        };
    }
    let f = normalize_rows(&cone.f, 0.0);
    // Rows of F restricted to null(E); rows that vanish there are vacuous.
    let fr = normalize_rows(&(&f * &basis), 1e-12);
    if fr.nrows() == 0 {
        return ConeVerdict {
            trivial: false,
            witness: Some(unit_inf(basis.column(0).into_owned())),
        };
    }
    for i in 0..k {
        let zi = basis.row(i);
        if zi.amax() <= 1e-12 {
            continue;
        }
        for s in [1.0, -1.0] {
            let obj = zi.transpose() * s;
            let a_le = DMatrix::from_fn(fr.nrows() + 1, d, |r, c| {
                if r < fr.nrows() {
                    fr[(r, c)]
                } else {
                    obj[c]
                }
            });
            let mut b_le = DVector::zeros(fr.nrows() + 1);
            b_le[fr.nrows()] = 1.0;
            let lp = LinearProgram {
                c: obj,
                a_eq: DMatrix::zeros(0, d),
                b_eq: DVector::zeros(0),
                a_le,
                b_le,
            };
            if let LpResult::Optimal { value, z: t } = lp.maximize(lp_tol) {
                if value > 0.5 {
                    return ConeVerdict {
                        trivial: false,
                        witness: Some(unit_inf(&basis * t)),
                    };
                }
            }
        }
    }
    ConeVerdict {
        trivial: true,
        witness: None,
    }
}

fn unit_inf(z: DVector<f64>) -> DVector<f64> {
    let m = z.amax();
    z / m
}

/// Scales rows to unit ∞-norm, zeroes entries below `chop` afterwards and drops
/// rows that end up zero.
fn normalize_rows(m: &DMatrix<f64>, chop: f64) -> DMatrix<f64> {
    let kept: Vec<DVector<f64>> = m
        .row_iter()
        .filter_map(|row| {
            let s = row.amax();
            if s <= chop || s == 0.0 {
                return None;
            }
            Some(DVector::from_iterator(
                row.len(),
                row.iter().map(|v| {
                    let x = v / s;
                    if x.abs() <= chop {
                        0.0
                    } else {
                        x
                    }
                }),
            ))
        })
        .collect();
    DMatrix::from_fn(kept.len(), m.ncols(), |r, c| kept[r][c])
}
