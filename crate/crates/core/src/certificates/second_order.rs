//! Second-order condition `⟨d, Gᵀd⟩ > 0` for nonzero `d` in the critical cone
//! `{d : A_α d = 0, A_β d ≤ 0}`.
//!
//! Three outcomes. Positive definiteness of the form on `null(A_α)` certifies the
//! condition. A cone direction with a clearly negative value refutes it; such
//! directions are searched on every face of the cone (the minimizer over a face
//! is an eigenvector of the form restricted to the face's span) and by projected
//! gradient descent from random starts. Anything else is inconclusive.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::StabilityData;
use super::verdict::{to_vec, Status, Verdict, Witness};
use crate::index_sets::IndexSets;
use crate::linalg::{cone_is_trivial, nullspace, sym_eig, vstack, ConeSpec};
use crate::system::Formulation;

/// Faces are enumerated only up to this many inequality rows.
const MAX_FACE_ROWS: usize = 12;
const DESCENT_STARTS: usize = 32;
const DESCENT_ITERS: usize = 300;
const DESCENT_SEED: u64 = 0x005e_c00d;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderTolerances {
    pub rank_tol: f64,
    pub lp_tol: f64,
}

/// One quadratic form on one cone, in local coordinates.
struct Problem {
    s: DMatrix<f64>,
    e: DMatrix<f64>,
    f: DMatrix<f64>,
    /// Where the local coordinates sit in ℝⁿ.
    embed: Vec<usize>,
}

enum Outcome {
    Holds { lower: Option<f64> },
    Fails { d: DVector<f64>, value: f64 },
    Inconclusive { lower: f64, upper: Option<f64> },
}

pub fn check_second_order(
    data: &StabilityData,
    sets: &IndexSets,
    tol: SecondOrderTolerances,
) -> Verdict {
    let gsym = (&data.g + data.g.transpose()) * 0.5;
    let so_tol = 1e-9 * data.g.norm().max(1.0);
    let alpha = sets.alpha();
    let beta = sets.beta();
    let problems: Vec<Problem> = match data.formulation {
        Formulation::Consensus | Formulation::Classical => vec![Problem {
            s: gsym,
            e: data.a_rows(&alpha),
            f: data.a_rows(&beta),
            embed: (0..data.n()).collect(),
        }],
        Formulation::PerPlayer | Formulation::SharedCopies => data
            .player_ranges
            .iter()
            .enumerate()
            .map(|(nu, range)| {
                let cols: Vec<usize> = range.clone().collect();
                let own = |slots: &[usize]| {
                    let mine: Vec<usize> = slots
                        .iter()
                        .copied()
                        .filter(|&s| data.slot_players[s].contains(&nu))
                        .collect();
                    data.bt_rows(&mine).select_columns(&cols)
                };
                Problem {
                    s: gsym.select_rows(&cols).select_columns(&cols),
                    e: own(&alpha),
                    f: own(&beta),
                    embed: cols,
                }
            })
            .collect(),
    };
    let outcomes: Vec<Outcome> = problems.iter().map(|p| decide(p, so_tol, tol)).collect();

    let n = data.n();
    if let Some((p, Outcome::Fails { d, value })) = problems
        .iter()
        .zip(&outcomes)
        .find(|(_, o)| matches!(o, Outcome::Fails { .. }))
    {
        let mut full = DVector::zeros(n);
        for (i, &j) in p.embed.iter().enumerate() {
            full[j] = d[i];
        }
        let mut v = Verdict::new(
            Status::Fails,
            "critical cone contains a direction of negative curvature",
        );
        v.upper_bound = Some(*value);
        v.witness = Some(Witness::Direction {
            d: to_vec(&full),
            value: *value,
        });
        return v;
    }
    let lower = outcomes
        .iter()
        .filter_map(|o| match o {
            Outcome::Holds { lower } => *lower,
            Outcome::Inconclusive { lower, .. } => Some(*lower),
            Outcome::Fails { .. } => None,
        })
        .reduce(f64::min);
    if outcomes.iter().all(|o| matches!(o, Outcome::Holds { .. })) {
        let mut v = Verdict::new(
            Status::Holds,
            "form is positive definite on the span of the critical cone",
        );
        v.lower_bound = lower;
        return v;
    }
    let upper = outcomes
        .iter()
        .filter_map(|o| match o {
            Outcome::Inconclusive { upper, .. } => *upper,
            _ => None,
        })
        .reduce(f64::min);
    let mut v = Verdict::new(
        Status::Inconclusive,
        "form is not positive definite on the span of the critical cone and no negative direction was found",
    );
    v.lower_bound = lower;
    v.upper_bound = upper;
    v
}

fn rayleigh(s: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    d.dot(&(s * d)) / d.norm_squared()
}

fn in_cone(p: &Problem, d: &DVector<f64>, tol: f64) -> bool {
    let scale = d.amax();
    let eq = if p.e.nrows() == 0 {
        0.0
    } else {
        (&p.e * d).amax()
    };
    let ineq = (&p.f * d).iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    eq <= tol * scale && ineq <= tol * scale
}

fn decide(p: &Problem, so_tol: f64, tol: SecondOrderTolerances) -> Outcome {
    let k = p.s.nrows();
    let basis = nullspace(&p.e, tol.rank_tol);
    if basis.ncols() == 0 {
        return Outcome::Holds { lower: None };
    }
    let restricted = basis.transpose() * &p.s * &basis;
    let eig = sym_eig(&((&restricted + restricted.transpose()) * 0.5)).expect("symmetrized");
    let lower = eig.min().expect("nonempty");
    if lower > so_tol {
        return Outcome::Holds { lower: Some(lower) };
    }
    let mut best: Option<(DVector<f64>, f64)> = None;
    let consider = |best: &mut Option<(DVector<f64>, f64)>, d: DVector<f64>| {
        if d.amax() == 0.0 || !in_cone(p, &d, 1e-12) {
            return;
        }
        let d = &d / d.amax();
        let q = d.dot(&(&p.s * &d));
        if best.as_ref().is_none_or(|(_, b)| q < *b) {
            *best = Some((d, q));
        }
    };
    if p.f.nrows() <= MAX_FACE_ROWS {
        for mask in 0u32..(1 << p.f.nrows()) {
            let rows: Vec<usize> = (0..p.f.nrows()).filter(|i| mask & (1 << i) != 0).collect();
            let face_e = vstack(&[&p.e, &p.f.select_rows(&rows)], k);
            let fb = nullspace(&face_e, tol.rank_tol);
            if fb.ncols() == 0 {
                continue;
            }
            let r = fb.transpose() * &p.s * &fb;
            let eig = sym_eig(&((&r + r.transpose()) * 0.5)).expect("symmetrized");
            for cluster in clusters(eig.values.as_slice(), 1e-8 * (1.0 + eig.values.amax())) {
                let lam = eig.values[cluster[0]];
                if lam >= -so_tol {
                    continue;
                }
                let v = fb.clone() * eig.vectors.select_columns(&cluster);
                let others: Vec<usize> = (0..p.f.nrows()).filter(|i| !rows.contains(i)).collect();
                let cone =
                    ConeSpec::new(DMatrix::zeros(0, v.ncols()), p.f.select_rows(&others) * &v);
                let cv = cone_is_trivial(&cone, tol.rank_tol, tol.lp_tol);
                if let Some(t) = cv.witness {
                    consider(&mut best, &v * t);
                }
            }
        }
    }
    if !matches!(&best, Some((_, q)) if *q < -so_tol) {
        for d in projected_descent(p, &basis) {
            consider(&mut best, d);
        }
    }
    match best {
        Some((d, q)) if q < -so_tol => Outcome::Fails { d, value: q },
        other => Outcome::Inconclusive {
            lower,
            upper: other.map(|(d, _)| rayleigh(&p.s, &d)),
        },
    }
}

/// Groups sorted values whose consecutive gaps are at most `gap`.
fn clusters(values: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if v - values[*c.last().unwrap()] <= gap => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Projected gradient descent of the Rayleigh quotient from seeded random starts.
fn projected_descent(p: &Problem, basis: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let k = p.s.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(DESCENT_SEED);
    let step = 0.5 / p.s.amax().max(1e-12);
    let rows: Vec<DVector<f64>> =
        p.f.row_iter()
            .filter(|r| r.amax() > 0.0)
            .map(|r| r.transpose() / r.norm())
            .collect();
    let mut found = Vec::new();
    for _ in 0..DESCENT_STARTS {
        let start = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
        let mut d = project(&start, basis, &rows);
        if d.norm() < 1e-12 {
            continue;
        }
        d /= d.norm();
        for _ in 0..DESCENT_ITERS {
            let q = rayleigh(&p.s, &d);
            let grad = (&p.s * &d - &d * q) * 2.0;
            let next = project(&(&d - grad * step), basis, &rows);
            let nn = next.norm();
            if nn < 1e-12 {
                break;
            }
            let next = next / nn;
            if (&next - &d).norm() < 1e-13 {
                d = next;
                break;
            }
            d = next;
        }
        found.push(d);
    }
    found
}

/// Dykstra's alternating projection onto `null(E) ∩ {f_iᵀd ≤ 0}`.
fn project(z: &DVector<f64>, basis: &DMatrix<f64>, rows: &[DVector<f64>]) -> DVector<f64> {
    let sub = |v: &DVector<f64>| basis * (basis.transpose() * v);
    let mut x = sub(z);
    if rows.is_empty() {
        return x;
    }
    let sets = rows.len() + 1;
    let mut inc = vec![DVector::zeros(z.len()); sets];
    for _ in 0..500 {
        let prev = x.clone();
        for (i, incr) in inc.iter_mut().enumerate() {
            let y = &x + &*incr;
            let projected = if i == 0 {
                sub(&y)
            } else {
                let f = &rows[i - 1];
                let t = f.dot(&y);
                if t > 0.0 {
                    &y - f * t
                } else {
                    y.clone()
                }
            };
            *incr = &y - &projected;
            x = projected;
        }
        if (&x - &prev).norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::data::SlotLabel;
    use crate::index_sets::{ClassifyTolerances, IndexClass};

    const TOL: SecondOrderTolerances = SecondOrderTolerances {
        rank_tol: 1e-9,
        lp_tol: 1e-9,
    };

    fn consensus(
        g: DMatrix<f64>,
        a: DMatrix<f64>,
        classes: Vec<IndexClass>,
    ) -> (StabilityData, IndexSets) {
        let n = g.nrows();
        let m = a.nrows();
        let data = StabilityData {
            formulation: Formulation::Consensus,
            b: a.transpose(),
            q1: DVector::zeros(n),
            q2: DVector::zeros(m),
            ineq: vec![true; m],
            labels: (0..m).map(|row| SlotLabel { block: 0, row }).collect(),
            player_ranges: (0..n).map(|j| j..j + 1).collect(),
            slot_players: vec![(0..n).collect(); m],
            g,
            a,
        };
        let sets = IndexSets {
            classes,
            tolerances: ClassifyTolerances::default(),
        };
        (data, sets)
    }

    #[test]
    fn identity_holds() {
        let (d, s) = consensus(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            vec![IndexClass::Beta],
        );
        assert!(check_second_order(&d, &s, TOL).holds());
    }

    #[test]
    fn indefinite_full_cone_fails_along_e2() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let (d, s) = consensus(g, DMatrix::zeros(0, 2), vec![]);
        let v = check_second_order(&d, &s, TOL);
        assert!(v.fails());
        let Some(Witness::Direction { d, value }) = v.witness else {
            panic!()
        };
        assert!(d[0].abs() < 1e-9 && (d[1].abs() - 1.0).abs() < 1e-9);
        assert!((value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_direction_outside_cone_is_inconclusive() {
        // the cone is the ray e1 where q > 0, but q is indefinite on its span
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let (d, s) = consensus(g, a, vec![IndexClass::Beta; 3]);
        let v = check_second_order(&d, &s, TOL);
        assert_eq!(v.status, Status::Inconclusive);
        assert!(v.upper_bound.unwrap() > 0.0);
        assert!(v.lower_bound.unwrap() < 0.0);
    }

    #[test]
    fn negative_curvature_on_a_face() {
        // cone d ≥ 0 in ℝ², q = 2 d1 d2 − d1² ... negative along e1
        let g = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, 3.0]);
        let a = -DMatrix::identity(2, 2);
        let (d, s) = consensus(g, a, vec![IndexClass::Beta; 2]);
        let v = check_second_order(&d, &s, TOL);
        assert!(v.fails());
        let Some(Witness::Direction { d, .. }) = v.witness else {
            panic!()
        };
        assert!(d.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn singular_form_is_inconclusive() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (d, s) = consensus(
            g,
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            vec![IndexClass::Gamma],
        );
        let v = check_second_order(&d, &s, TOL);
        assert_eq!(v.status, Status::Inconclusive);
        assert!(v.lower_bound.unwrap().abs() < 1e-12);
    }

    #[test]
    fn clusters_group_close_values() {
        assert_eq!(
            clusters(&[-1.0, -1.0, 0.5], 1e-8),
            vec![vec![0, 1], vec![2]]
        );
    }
}
