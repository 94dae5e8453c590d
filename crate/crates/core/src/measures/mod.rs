//! Coherence, delocalization and entanglement measures for single-excitation states.
//!
//! Within the two-site family the concurrence factorizes as
//! `C = eps * D` with `D = 2 sqrt(p1 p2)`. The closed forms here are checked
//! against general two-qubit routines (Wootters concurrence, partial
//! transpose spectrum, CHSH) that know nothing about that structure.

mod chsh;

use num_complex::Complex64;
use serde::Serialize;

pub use chsh::{
    chsh_horodecki, chsh_optimize, chsh_value, correlation_matrix, ChshOptimum, CHSH_STARTS,
};

use crate::error::{Error, Result};
use crate::linalg::{
    clamp_spectrum, hermitian_eigenvalues, partial_transpose, pauli_y, sqrt_psd, tensor_product,
    ComplexMatrix, Subsystem, CLAMP_TOL, DEFAULT_TOL,
};
use crate::states::{embed_two_qubit, ScenarioBasis, SingleExcitationState};

/// Slack allowed on `p1 + p2 <= 1`.
pub const PROBABILITY_SUM_TOL: f64 = 1e-10;

/// First-order degree of coherence `g_ij` between sites `i` and `j` (0-based).
///
/// `tr(rho s_i^+ s_j)` is the matrix element `rho_ji` in the site basis, so no
/// ladder operators are built.
pub fn degree_of_coherence(state: &SingleExcitationState, i: usize, j: usize) -> Result<Complex64> {
    coherence_between(&state.density_matrix(), i, j)
}

/// Degree of coherence between two basis states of an arbitrary density matrix.
pub fn coherence_between(rho: &ComplexMatrix, i: usize, j: usize) -> Result<Complex64> {
    let n = rho.dim();
    for index in [i, j] {
        if index >= n {
            return Err(Error::InvalidSite { index, n_sites: n });
        }
    }
    if i == j {
        return Err(Error::SameSite(i));
    }
    let pi = rho[(i, i)].re;
    let pj = rho[(j, j)].re;
    for (site, p) in [(i, pi), (j, pj)] {
        if p <= 0.0 {
            return Err(Error::UnpopulatedSite { site });
        }
    }
    Ok(rho[(j, i)] / (pi * pj).sqrt())
}

fn check_probabilities(p1: f64, p2: f64) -> Result<()> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !p.is_finite() {
            return Err(Error::NonFinite(name));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange { name, value: p });
        }
    }
    if p1 + p2 > 1.0 + PROBABILITY_SUM_TOL {
        return Err(Error::ProbabilityOutOfRange {
            name: "p1 + p2",
            value: p1 + p2,
        });
    }
    Ok(())
}

/// `D = 2 sqrt(p1 p2)`: 1 for an evenly shared excitation, 0 when localized.
pub fn delocalization(p1: f64, p2: f64) -> Result<f64> {
    check_probabilities(p1, p2)?;
    Ok(2.0 * (p1 * p2).sqrt())
}

/// Closed-form concurrence of the two-site family, `2 max(0, eps sqrt(p1 p2))`.
pub fn concurrence_closed(p1: f64, p2: f64, epsilon: f64) -> Result<f64> {
    check_probabilities(p1, p2)?;
    if !epsilon.is_finite() {
        return Err(Error::NonFinite("eps"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    Ok(2.0 * (epsilon * (p1 * p2).sqrt()).max(0.0))
}

fn require_two_qubit_density(rho: &ComplexMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    rho.check_density(DEFAULT_TOL)
}

/// Spin-flipped state `(Y x Y) conj(rho) (Y x Y)`.
pub fn spin_flip(rho: &ComplexMatrix) -> ComplexMatrix {
    let yy = tensor_product(&pauli_y(), &pauli_y());
    &(&yy * &rho.conj()) * &yy
}

/// Wootters concurrence of an arbitrary two-qubit density matrix.
///
/// The `lambda_k` are the eigenvalues of `sqrt(sqrt(rho) rho_tilde sqrt(rho))`,
/// which are the square roots of the eigenvalues of `rho rho_tilde`.
pub fn concurrence_wootters(rho: &ComplexMatrix) -> Result<f64> {
    require_two_qubit_density(rho)?;
    let root = sqrt_psd(rho)?;
    let sandwich = &(&root * &spin_flip(rho)) * &root;
    let mut lambdas: Vec<f64> = clamp_spectrum(&hermitian_eigenvalues(&sandwich)?, CLAMP_TOL)?
        .into_iter()
        .map(f64::sqrt)
        .collect();
    lambdas.reverse();
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Ascending eigenvalues of the partial transpose over the second qubit.
pub fn partial_transpose_spectrum(rho: &ComplexMatrix) -> Result<Vec<f64>> {
    require_two_qubit_density(rho)?;
    hermitian_eigenvalues(&partial_transpose(rho, Subsystem::Second, (2, 2))?)
}

/// `log2 || rho^{T_B} ||_1`.
pub fn log_negativity(rho: &ComplexMatrix) -> Result<f64> {
    let spectrum = partial_transpose_spectrum(rho)?;
    Ok(spectrum.iter().map(|v| v.abs()).sum::<f64>().log2())
}

/// `tr(rho^2)`.
pub fn purity(rho: &ComplexMatrix) -> f64 {
    (rho * rho).trace().re
}

/// Schmidt coefficients (descending) of a normalized two-qubit pure state.
///
/// Uses the 2x2 invariants `s1^2 + s2^2 = |psi|^2` and `s1 s2 = |det|`;
/// the smaller value is recovered as `|det| / s1` so it keeps full relative accuracy.
pub fn schmidt_coefficients(psi: &[Complex64; 4]) -> Result<(f64, f64)> {
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if !norm.is_finite() || (norm - 1.0).abs() > crate::states::NORMALIZATION_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let det = (psi[0] * psi[3] - psi[1] * psi[2]).norm();
    let disc = (norm * norm - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((norm + disc) / 2.0).sqrt();
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    Ok((s1, s2))
}

/// Every measure for one two-site state written in one scenario basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    /// `|g_12|`; `None` when a site is unpopulated and the ratio is undefined.
    pub epsilon_measured: Option<f64>,
    pub delocalization: f64,
    pub concurrence_closed: f64,
    pub concurrence_oracle: f64,
    pub log_negativity: f64,
    pub chsh_horodecki: f64,
    pub chsh_optimized: f64,
    pub purity: f64,
    /// `|C_oracle - eps D|`.
    pub identity_residual: f64,
}

impl MeasureReport {
    /// `(name, value)` pairs in field order; an undefined coherence is `NaN`.
    pub fn fields(&self) -> [(&'static str, f64); 9] {
        [
            (
                "epsilon_measured",
                self.epsilon_measured.unwrap_or(f64::NAN),
            ),
            ("delocalization", self.delocalization),
            ("concurrence_closed", self.concurrence_closed),
            ("concurrence_oracle", self.concurrence_oracle),
            ("log_negativity", self.log_negativity),
            ("chsh_horodecki", self.chsh_horodecki),
            ("chsh_optimized", self.chsh_optimized),
            ("purity", self.purity),
            ("identity_residual", self.identity_residual),
        ]
    }
}

/// `|g_12|` of an embedded state, or `None` if either site is empty.
pub fn measured_coherence(rho: &ComplexMatrix, basis: ScenarioBasis) -> Option<f64> {
    let layout = basis.layout();
    match coherence_between(rho, layout.site1, layout.site2) {
        Ok(g) => Some(g.norm()),
        Err(_) => None,
    }
}

fn two_site_probabilities(state: &SingleExcitationState) -> Result<(f64, f64)> {
    if state.n_sites() != 2 {
        return Err(Error::NotTwoSites(state.n_sites()));
    }
    let p = state.probabilities();
    Ok((p[0], p[1]))
}

/// `|C_wootters - eps D|` for the dimer embedding of `state`.
pub fn identity_residual(state: &SingleExcitationState) -> Result<f64> {
    let (p1, p2) = two_site_probabilities(state)?;
    let rho = embed_two_qubit(state, ScenarioBasis::Dimer)?;
    let c = concurrence_wootters(&rho)?;
    Ok((c - state.epsilon() * delocalization(p1, p2)?).abs())
}

pub fn full_report(state: &SingleExcitationState, basis: ScenarioBasis) -> Result<MeasureReport> {
    let (p1, p2) = two_site_probabilities(state)?;
    let rho = embed_two_qubit(state, basis)?;
    let delocalization = delocalization(p1, p2)?;
    let concurrence_oracle = concurrence_wootters(&rho)?;
    Ok(MeasureReport {
        epsilon_measured: measured_coherence(&rho, basis),
        delocalization,
        concurrence_closed: concurrence_closed(p1, p2, state.epsilon())?,
        concurrence_oracle,
        log_negativity: log_negativity(&rho)?,
        chsh_horodecki: chsh_horodecki(&rho)?,
        chsh_optimized: chsh_optimize(&rho)?.value,
        purity: purity(&rho),
        identity_residual: (concurrence_oracle - state.epsilon() * delocalization).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli_z;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    fn dimer(p1: f64, eps: f64) -> SingleExcitationState {
        SingleExcitationState::dimer(p1, eps, 0.0).unwrap()
    }

    fn bell() -> ComplexMatrix {
        ComplexMatrix::outer(&real(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]))
    }

    fn product() -> ComplexMatrix {
        // |+> (x) |0>
        ComplexMatrix::outer(&real(&[FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0]))
    }

    /// Ladder-operator construction in the full 2^N qubit space; site `i`
    /// excited means qubit `i` (most significant first) is |1>.
    fn coherence_via_ladder_operators(
        state: &SingleExcitationState,
        i: usize,
        j: usize,
    ) -> Complex64 {
        let n = state.n_sites();
        let dim = 1 << n;
        let mut psi_index = vec![0usize; n];
        for (site, slot) in psi_index.iter_mut().enumerate() {
            *slot = 1 << (n - 1 - site);
        }
        let small = state.density_matrix();
        let mut rho = ComplexMatrix::zeros(dim);
        for a in 0..n {
            for b in 0..n {
                rho[(psi_index[a], psi_index[b])] = small[(a, b)];
            }
        }
        let lowering = |site: usize| {
            let mut op = ComplexMatrix::identity(1);
            for q in 0..n {
                let factor = if q == site {
                    ComplexMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
                } else {
                    ComplexMatrix::identity(2)
                };
                op = tensor_product(&op, &factor);
            }
            op
        };
        let (si, sj) = (lowering(i), lowering(j));
        let num = (&rho * &(&si.adjoint() * &sj)).trace();
        let ni = (&rho * &(&si.adjoint() * &si)).trace().re;
        let nj = (&rho * &(&sj.adjoint() * &sj)).trace().re;
        num / (ni * nj).sqrt()
    }

    #[test]
    fn coherence_modulus_is_epsilon() {
        let s = SingleExcitationState::new(real(&[0.3f64.sqrt(), 0.7f64.sqrt()]), 0.4).unwrap();
        assert_abs_diff_eq!(
            degree_of_coherence(&s, 0, 1).unwrap().norm(),
            0.4,
            epsilon = 1e-15
        );

        let third = (1.0f64 / 3.0).sqrt();
        let s = SingleExcitationState::new(real(&[third, third, third]), 0.8).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_abs_diff_eq!(
                degree_of_coherence(&s, i, j).unwrap().norm(),
                0.8,
                epsilon = 1e-15
            );
        }

        let s = dimer(0.42, 0.0);
        assert_eq!(degree_of_coherence(&s, 0, 1).unwrap().norm(), 0.0);
    }

    #[test]
    fn coherence_errors() {
        let s = dimer(1.0, 0.7);
        assert!(matches!(
            degree_of_coherence(&s, 0, 1),
            Err(Error::UnpopulatedSite { site: 1 })
        ));
        assert!(matches!(
            degree_of_coherence(&dimer(0.5, 0.5), 1, 1),
            Err(Error::SameSite(1))
        ));
        assert!(matches!(
            degree_of_coherence(&dimer(0.5, 0.5), 0, 2),
            Err(Error::InvalidSite {
                index: 2,
                n_sites: 2
            })
        ));
    }

    #[test]
    fn coherence_matches_ladder_operator_oracle() {
        let two = SingleExcitationState::new(
            vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
            0.35,
        )
        .unwrap();
        let three = SingleExcitationState::new(
            vec![
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.5),
                Complex64::new(-0.5, 0.0),
            ],
            0.65,
        )
        .unwrap();
        for s in [two, three] {
            let n = s.n_sites();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let fast = degree_of_coherence(&s, i, j).unwrap();
                    let slow = coherence_via_ladder_operators(&s, i, j);
                    assert!((fast - slow).norm() < 1e-14, "{i},{j}: {fast} vs {slow}");
                }
            }
        }
    }

    #[test]
    fn coherence_is_hermitian_symmetric() {
        let s = SingleExcitationState::new(
            vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
            0.35,
        )
        .unwrap();
        let g01 = degree_of_coherence(&s, 0, 1).unwrap();
        let g10 = degree_of_coherence(&s, 1, 0).unwrap();
        assert_eq!(g01, g10.conj());
    }

    #[test]
    fn delocalization_values() {
        assert_eq!(delocalization(0.5, 0.5).unwrap(), 1.0);
        assert_eq!(delocalization(1.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(delocalization(0.2, 0.8).unwrap(), 0.8, epsilon = 1e-15);
        assert!(delocalization(0.7, 0.7).is_err());
        assert!(delocalization(-0.1, 0.5).is_err());
        assert!(delocalization(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn closed_form_concurrence() {
        assert_eq!(concurrence_closed(0.5, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(concurrence_closed(0.5, 0.5, 0.0).unwrap(), 0.0);
        // frozen after agreement with the Wootters oracle
        let c = concurrence_closed(0.32, 0.68, 0.75).unwrap();
        assert_abs_diff_eq!(c, 0.6997142273814361, epsilon = 1e-15);
        let oracle = concurrence_wootters(
            &embed_two_qubit(&dimer(0.32, 0.75), ScenarioBasis::Dimer).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(oracle, c, epsilon = 1e-12);
        assert!(concurrence_closed(0.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn wootters_reference_states() {
        assert_abs_diff_eq!(concurrence_wootters(&bell()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            concurrence_wootters(&product()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let rho = embed_two_qubit(&dimer(0.3, 0.9), ScenarioBasis::Dimer).unwrap();
        assert_abs_diff_eq!(
            concurrence_wootters(&rho).unwrap(),
            0.9 * 2.0 * 0.21f64.sqrt(),
            epsilon = 1e-12
        );
        // Werner state with singlet weight 2/3: C = (3w - 1)/2 = 1/2
        let w = 2.0 / 3.0;
        let singlet = ComplexMatrix::outer(&real(&[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]));
        let werner = &singlet.scale(Complex64::new(w, 0.0))
            + &ComplexMatrix::identity(4).scale(Complex64::new((1.0 - w) / 4.0, 0.0));
        assert_abs_diff_eq!(concurrence_wootters(&werner).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn wootters_rejects_non_physical_input() {
        let bad = ComplexMatrix::diag(&[0.6, 0.6, -0.2, 0.0]);
        assert!(concurrence_wootters(&bad).is_err());
        assert!(concurrence_wootters(&ComplexMatrix::diag(&[0.5, 0.5])).is_err());
        assert!(log_negativity(&bad).is_err());
        assert!(chsh_horodecki(&bad).is_err());
    }

    #[test]
    fn identity_residual_examples() {
        assert!(identity_residual(&dimer(0.5, 1.0)).unwrap() <= 1e-10);
        assert!(identity_residual(&dimer(1.0, 0.7)).unwrap() <= 1e-10);
        let three = SingleExcitationState::new(real(&[0.6, 0.0, 0.8]), 0.2).unwrap();
        assert!(matches!(
            identity_residual(&three),
            Err(Error::NotTwoSites(3))
        ));
    }

    #[test]
    fn log_negativity_examples() {
        assert_abs_diff_eq!(log_negativity(&bell()).unwrap(), 1.0, epsilon = 1e-14);
        let diag = embed_two_qubit(&dimer(0.5, 0.0), ScenarioBasis::Dimer).unwrap();
        assert_abs_diff_eq!(log_negativity(&diag).unwrap(), 0.0, epsilon = 1e-15);
        let rho = embed_two_qubit(&dimer(0.5, 0.6), ScenarioBasis::Dimer).unwrap();
        // partial transpose spectrum {0.5, 0.5, 0.3, -0.3}
        let spec = partial_transpose_spectrum(&rho).unwrap();
        assert_abs_diff_eq!(spec[0], -0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(
            log_negativity(&rho).unwrap(),
            1.6f64.log2(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(1.6f64.log2(), 0.6780719051126377, epsilon = 1e-15);
    }

    #[test]
    fn schmidt_examples() {
        let s = SingleExcitationState::dimer(0.3, 1.0, 0.0).unwrap();
        let (s1, s2) =
            schmidt_coefficients(&s.coherent_vector(ScenarioBasis::Dimer).unwrap()).unwrap();
        assert_abs_diff_eq!(s1, 0.7f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s2, 0.3f64.sqrt(), epsilon = 1e-15);

        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let (s1, s2) = schmidt_coefficients(&[z, h, h, z]).unwrap();
        assert_abs_diff_eq!(s1, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s2, FRAC_1_SQRT_2, epsilon = 1e-15);

        let (s1, s2) = schmidt_coefficients(&[h, z, h, z]).unwrap();
        assert_abs_diff_eq!(s1, 1.0, epsilon = 1e-15);
        assert_eq!(s2, 0.0);

        assert!(schmidt_coefficients(&[h, h, h, z]).is_err());
    }

    #[test]
    fn purity_examples() {
        assert_abs_diff_eq!(purity(&bell()), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            purity(&ComplexMatrix::diag(&[0.5, 0.5])),
            0.5,
            epsilon = 1e-15
        );
        let rho = embed_two_qubit(&dimer(0.3, 0.5), ScenarioBasis::Dimer).unwrap();
        assert_abs_diff_eq!(purity(&rho), 0.685, epsilon = 1e-15);
    }

    #[test]
    fn report_endpoints() {
        let r = full_report(&dimer(0.5, 1.0), ScenarioBasis::Dimer).unwrap();
        assert_abs_diff_eq!(r.epsilon_measured.unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.delocalization, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.concurrence_closed, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.concurrence_oracle, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.log_negativity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.chsh_horodecki, 2.0 * SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.chsh_optimized, 2.0 * SQRT_2, epsilon = 1e-6);
        assert_abs_diff_eq!(r.purity, 1.0, epsilon = 1e-15);
        assert!(r.identity_residual <= 1e-10);

        let r = full_report(&dimer(1.0, 1.0), ScenarioBasis::Dimer).unwrap();
        assert_eq!(r.delocalization, 0.0);
        assert_eq!(r.concurrence_closed, 0.0);
        assert_abs_diff_eq!(r.concurrence_oracle, 0.0, epsilon = 1e-12);
        assert_eq!(r.epsilon_measured, None);

        let r = full_report(&dimer(0.5, 0.0), ScenarioBasis::Dimer).unwrap();
        assert_abs_diff_eq!(r.delocalization, 1.0, epsilon = 1e-15);
        assert_eq!(r.concurrence_closed, 0.0);
        assert_abs_diff_eq!(r.concurrence_oracle, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spin_flip_of_z_eigenstates() {
        // |00> flips to |11>
        let rho = ComplexMatrix::diag(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(spin_flip(&rho), ComplexMatrix::diag(&[0.0, 0.0, 0.0, 1.0]));
        let zz = tensor_product(&pauli_z(), &pauli_z());
        assert_eq!(spin_flip(&zz), zz);
    }
}
