//! CHSH value of a two-qubit state, in closed form and by direct optimization.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{
    hermitian_eigenvalues, pauli_x, pauli_y, pauli_z, tensor_product, ComplexMatrix,
};
use crate::optimize::{nelder_mead, NelderMeadOptions};

use super::require_two_qubit_density;

/// Number of deterministic starting tuples for [`chsh_optimize`].
pub const CHSH_STARTS: usize = 32;

/// Simplex spread of `S` at which the search hands over to exact refinement.
const COARSE_F_TOL: f64 = 1e-4;

const POLISH_MAX_ROUNDS: usize = 20_000;

/// `T_ab = tr(rho sigma_a (x) sigma_b)` for `a, b` in `x, y, z`.
pub fn correlation_matrix(rho: &ComplexMatrix) -> [[f64; 3]; 3] {
    let paulis = [pauli_x(), pauli_y(), pauli_z()];
    let mut t = [[0.0; 3]; 3];
    for (a, sa) in paulis.iter().enumerate() {
        for (b, sb) in paulis.iter().enumerate() {
            t[a][b] = (rho * &tensor_product(sa, sb)).trace().re;
        }
    }
    t
}

/// Maximal CHSH value `2 sqrt(m1 + m2)`, with `m1 >= m2` the two largest
/// eigenvalues of `T^T T`.
pub fn chsh_horodecki(rho: &ComplexMatrix) -> Result<f64> {
    require_two_qubit_density(rho)?;
    let t = correlation_matrix(rho);
    let mut ttt = ComplexMatrix::zeros(3);
    for i in 0..3 {
        for j in 0..3 {
            let v: f64 = (0..3).map(|k| t[k][i] * t[k][j]).sum();
            ttt[(i, j)] = Complex64::new(v, 0.0);
        }
    }
    let ev = hermitian_eigenvalues(&ttt)?;
    let m = ev[2].max(0.0) + ev[1].max(0.0);
    Ok(2.0 * m.sqrt())
}

fn direction(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

fn angles_of(v: &[f64; 3]) -> (f64, f64) {
    (v[2].clamp(-1.0, 1.0).acos(), v[1].atan2(v[0]))
}

fn correlation(t: &[[f64; 3]; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let mut e = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            e += a[i] * t[i][j] * b[j];
        }
    }
    e
}

fn chsh_of_vectors(t: &[[f64; 3]; 3], v: &[[f64; 3]; 4]) -> f64 {
    let [a, a2, b, b2] = v;
    correlation(t, a, b) - correlation(t, a, b2) + correlation(t, a2, b) + correlation(t, a2, b2)
}

/// `S = E(a,b) - E(a,b') + E(a',b) + E(a',b')` for the Bloch directions given
/// as `(theta, phi)` pairs in the order `a, a', b, b'`.
pub fn chsh_value(t: &[[f64; 3]; 3], angles: &[f64]) -> f64 {
    let v = [
        direction(angles[0], angles[1]),
        direction(angles[2], angles[3]),
        direction(angles[4], angles[5]),
        direction(angles[6], angles[7]),
    ];
    chsh_of_vectors(t, &v)
}

/// Result of [`chsh_optimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChshOptimum {
    pub value: f64,
    /// `(theta, phi)` for `a, a', b, b'`.
    pub angles: [f64; 8],
}

/// Fixed starting tuples: an additive recurrence with irrational steps,
/// scaled to `theta in [0, pi)` and `phi in [0, 2 pi)`.
fn starting_points() -> Vec<[f64; 8]> {
    const STEPS: [f64; 8] = [
        0.414_213_562_373_095_1, // sqrt 2 - 1
        0.732_050_807_568_877_2, // sqrt 3 - 1
        0.236_067_977_499_789_8, // sqrt 5 - 2
        0.645_751_311_064_590_6, // sqrt 7 - 2
        0.316_624_790_355_399_9, // sqrt 11 - 3
        0.605_551_275_463_989_3, // sqrt 13 - 3
        0.123_105_625_617_660_5, // sqrt 17 - 4
        0.358_898_943_540_673_5, // sqrt 19 - 4
    ];
    (0..CHSH_STARTS)
        .map(|k| {
            let mut x = [0.0; 8];
            for (i, step) in STEPS.iter().enumerate() {
                let u = (0.5 + (k as f64 + 1.0) * step).fract();
                x[i] = if i % 2 == 0 { PI * u } else { 2.0 * PI * u };
            }
            x
        })
        .collect()
}

fn normalized(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 0.0).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

/// Alternating exact maximization: with `b, b'` fixed the best `a, a'` are
/// the normalized `T (b -/+ b')`, and symmetrically for `b, b'`. Each half
/// step can only raise `S`; rounds continue until `S` stops increasing.
/// Convergence is linear and slows when the two largest singular values of
/// `T` nearly coincide, hence the generous round limit.
fn polish(t: &[[f64; 3]; 3], mut v: [[f64; 3]; 4]) -> [[f64; 3]; 4] {
    let apply = |m: &[[f64; 3]; 3], x: [f64; 3], transpose: bool| -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3)
                .map(|j| {
                    if transpose {
                        m[j][i] * x[j]
                    } else {
                        m[i][j] * x[j]
                    }
                })
                .sum();
        }
        out
    };
    let mut best = chsh_of_vectors(t, &v);
    for _ in 0..POLISH_MAX_ROUNDS {
        let mut next = v;
        let [b, b2] = [v[2], v[3]];
        let diff = [b[0] - b2[0], b[1] - b2[1], b[2] - b2[2]];
        let sum = [b[0] + b2[0], b[1] + b2[1], b[2] + b2[2]];
        if let Some(x) = normalized(apply(t, diff, false)) {
            next[0] = x;
        }
        if let Some(x) = normalized(apply(t, sum, false)) {
            next[1] = x;
        }
        let [a, a2] = [next[0], next[1]];
        let plus = [a[0] + a2[0], a[1] + a2[1], a[2] + a2[2]];
        let minus = [a2[0] - a[0], a2[1] - a[1], a2[2] - a[2]];
        if let Some(x) = normalized(apply(t, plus, true)) {
            next[2] = x;
        }
        if let Some(x) = normalized(apply(t, minus, true)) {
            next[3] = x;
        }
        let value = chsh_of_vectors(t, &next);
        if value <= best {
            break;
        }
        v = next;
        best = value;
    }
    v
}

/// Maximizes the CHSH combination over four measurement directions.
///
/// From each of [`CHSH_STARTS`] fixed starts, a coarse Nelder-Mead search on
/// the eight spherical angles is followed by exact alternating updates run
/// until `S` no longer increases. The best of the refined results is
/// returned. No randomness is involved.
pub fn chsh_optimize(rho: &ComplexMatrix) -> Result<ChshOptimum> {
    require_two_qubit_density(rho)?;
    let t = correlation_matrix(rho);
    let opts = NelderMeadOptions {
        step: 0.4,
        f_tol: COARSE_F_TOL,
        max_iter: 2000,
    };
    let mut best: Option<(f64, [[f64; 3]; 4])> = None;
    for start in starting_points() {
        let x = nelder_mead(|x| -chsh_value(&t, x), &start, &opts).x;
        let v = polish(
            &t,
            [
                direction(x[0], x[1]),
                direction(x[2], x[3]),
                direction(x[4], x[5]),
                direction(x[6], x[7]),
            ],
        );
        let value = chsh_of_vectors(&t, &v);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, v));
        }
    }
    let (_, v) = best.expect("at least one start");
    let mut angles = [0.0; 8];
    for (k, dir) in v.iter().enumerate() {
        let (theta, phi) = angles_of(dir);
        angles[2 * k] = theta;
        angles[2 * k + 1] = phi;
    }
    Ok(ChshOptimum {
        value: chsh_value(&t, &angles),
        angles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{embed_two_qubit, ScenarioBasis, SingleExcitationState};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn family(p1: f64, eps: f64, phase: f64) -> ComplexMatrix {
        let s = SingleExcitationState::dimer(p1, eps, phase).unwrap();
        embed_two_qubit(&s, ScenarioBasis::Dimer).unwrap()
    }

    #[test]
    fn bell_state_reaches_tsirelson() {
        let rho = family(0.5, 1.0, 0.0);
        assert_abs_diff_eq!(chsh_horodecki(&rho).unwrap(), 2.0 * SQRT_2, epsilon = 1e-12);
        let opt = chsh_optimize(&rho).unwrap();
        assert_abs_diff_eq!(opt.value, 2.0 * SQRT_2, epsilon = 1e-6);
        let t = correlation_matrix(&rho);
        assert_abs_diff_eq!(chsh_value(&t, &opt.angles), opt.value, epsilon = 1e-15);
    }

    #[test]
    fn product_state_attains_classical_bound() {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let rho = ComplexMatrix::outer(&[h, z, h, z]);
        assert_abs_diff_eq!(chsh_horodecki(&rho).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chsh_optimize(&rho).unwrap().value, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn incoherent_dimer_gives_two() {
        let rho = family(0.5, 0.0, 0.0);
        let t = correlation_matrix(&rho);
        // only T_zz survives
        assert_abs_diff_eq!(t[2][2], -1.0, epsilon = 1e-15);
        assert_eq!(t[0][0], 0.0);
        assert_eq!(t[1][1], 0.0);
        assert_abs_diff_eq!(chsh_horodecki(&rho).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chsh_optimize(&rho).unwrap().value, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn family_follows_concurrence() {
        for &(p1, eps, phase) in &[(0.5, 0.3, 0.0), (0.2, 0.9, 1.1), (0.73, 0.55, -2.0)] {
            let rho = family(p1, eps, phase);
            let c = 2.0 * eps * (p1 * (1.0 - p1)).sqrt();
            let expected = 2.0 * (1.0 + c * c).sqrt();
            let h = chsh_horodecki(&rho).unwrap();
            assert_abs_diff_eq!(h, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(chsh_optimize(&rho).unwrap().value, h, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(
            chsh_horodecki(&family(0.5, 0.3, 0.0)).unwrap(),
            2.08806130178211,
            epsilon = 1e-12
        );
    }

    #[test]
    fn starting_points_are_distinct_and_in_range() {
        let pts = starting_points();
        assert_eq!(pts.len(), CHSH_STARTS);
        for p in &pts {
            for (i, &x) in p.iter().enumerate() {
                let hi = if i % 2 == 0 { PI } else { 2.0 * PI };
                assert!((0.0..hi).contains(&x));
            }
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }
}
