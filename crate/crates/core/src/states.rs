//! Single-excitation density matrices and their two-qubit embeddings.
//!
//! A state with amplitudes `a_i` and coherence `eps` is the mixture
//! `eps |psi><psi| + (1 - eps) sum_i |a_i|^2 |i><i|`. The off-diagonal element
//! in row `i`, column `j` is `eps * conj(a_i) * a_j`; every embedding inherits
//! that convention.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Allowed deviation of `sum |a_i|^2` from one.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Amplitudes plus degree of coherence, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationState {
    amplitudes: Vec<Complex64>,
    epsilon: f64,
}

impl SingleExcitationState {
    pub fn new(amplitudes: Vec<Complex64>, epsilon: f64) -> Result<Self> {
        validate(&amplitudes, epsilon)?;
        Ok(Self {
            amplitudes,
            epsilon,
        })
    }

    /// Two-site state with `a = (sqrt(p1), e^{i phase} sqrt(1 - p1))`.
    pub fn dimer(p1: f64, epsilon: f64, phase: f64) -> Result<Self> {
        check_unit_interval("p1", p1)?;
        if !phase.is_finite() {
            return Err(Error::NonFinite("phase"));
        }
        let a1 = Complex64::new(p1.sqrt(), 0.0);
        let a2 = Complex64::from_polar((1.0 - p1).sqrt(), phase);
        Self::new(vec![a1, a2], epsilon)
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// The `N x N` density matrix in the site basis.
    pub fn density_matrix(&self) -> ComplexMatrix {
        let a = &self.amplitudes;
        ComplexMatrix::from_fn(a.len(), |i, j| {
            if i == j {
                Complex64::new(a[i].norm_sqr(), 0.0)
            } else {
                a[i].conj() * a[j] * self.epsilon
            }
        })
    }

    fn require_two_sites(&self) -> Result<()> {
        if self.n_sites() != 2 {
            return Err(Error::NotTwoSites(self.n_sites()));
        }
        Ok(())
    }

    /// Pure two-qubit vector whose projector is the `eps = 1` embedding of this state.
    pub fn coherent_vector(&self, basis: ScenarioBasis) -> Result<[Complex64; 4]> {
        self.require_two_sites()?;
        let layout = basis.layout();
        let mut v = [Complex64::new(0.0, 0.0); 4];
        v[layout.site1] = self.amplitudes[0].conj();
        v[layout.site2] = self.amplitudes[1].conj();
        Ok(v)
    }
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite(name));
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ProbabilityOutOfRange { name, value });
    }
    Ok(())
}

fn validate(amplitudes: &[Complex64], epsilon: f64) -> Result<()> {
    if amplitudes.is_empty() {
        return Err(Error::Empty);
    }
    if amplitudes
        .iter()
        .any(|a| !a.re.is_finite() || !a.im.is_finite())
    {
        return Err(Error::NonFinite("amplitude"));
    }
    if !epsilon.is_finite() {
        return Err(Error::NonFinite("eps"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// N-site density matrix for the given amplitudes and coherence.
pub fn build_nsite(amplitudes: &[Complex64], epsilon: f64) -> Result<ComplexMatrix> {
    SingleExcitationState::new(amplitudes.to_vec(), epsilon).map(|s| s.density_matrix())
}

/// 2x2 dimer density matrix in the site basis.
pub fn build_dimer(p1: f64, epsilon: f64, phase: f64) -> Result<ComplexMatrix> {
    SingleExcitationState::dimer(p1, epsilon, phase).map(|s| s.density_matrix())
}

/// Where a two-site state lives inside a scenario's four-dimensional basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLayout {
    /// Only the first subsystem excited.
    pub site1: usize,
    /// Only the second subsystem excited.
    pub site2: usize,
    pub both_excited: usize,
    pub both_ground: usize,
}

impl BasisLayout {
    /// Indices by role: site1, site2, both excited, both ground.
    pub fn roles(&self) -> [usize; 4] {
        [self.site1, self.site2, self.both_excited, self.both_ground]
    }
}

/// The physical setting a two-qubit matrix is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioBasis {
    /// Two coupled sites; `e`/`g` mark excited and ground.
    Dimer,
    /// Signal/idler polarizations, `a1 |H V> + a2 |V H>`.
    TwoPhotonAntiparallel,
    /// Polarization and OAM of one photon, `a1 |H,-1> + a2 |V,+1>`.
    SpinOrbit,
    /// Signal/idler polarizations, `a1 |V V> + a2 |H H>`; the signal's
    /// excited and ground states are swapped relative to the antiparallel case.
    TwoPhotonParallel,
}

impl ScenarioBasis {
    pub const ALL: [ScenarioBasis; 4] = [
        ScenarioBasis::Dimer,
        ScenarioBasis::TwoPhotonAntiparallel,
        ScenarioBasis::SpinOrbit,
        ScenarioBasis::TwoPhotonParallel,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ScenarioBasis::Dimer => "dimer",
            ScenarioBasis::TwoPhotonAntiparallel => "two_photon_antiparallel",
            ScenarioBasis::SpinOrbit => "spin_orbit",
            ScenarioBasis::TwoPhotonParallel => "two_photon_parallel",
        }
    }

    /// Basis kets in matrix index order.
    pub fn labels(&self) -> [&'static str; 4] {
        match self {
            ScenarioBasis::Dimer => ["|e,e>", "|e,g>", "|g,e>", "|g,g>"],
            ScenarioBasis::TwoPhotonAntiparallel | ScenarioBasis::TwoPhotonParallel => {
                ["|H_s,H_i>", "|H_s,V_i>", "|V_s,H_i>", "|V_s,V_i>"]
            }
            ScenarioBasis::SpinOrbit => ["|H,+1>", "|H,-1>", "|V,+1>", "|V,-1>"],
        }
    }

    pub fn layout(&self) -> BasisLayout {
        match self {
            ScenarioBasis::Dimer
            | ScenarioBasis::TwoPhotonAntiparallel
            | ScenarioBasis::SpinOrbit => BasisLayout {
                site1: 1,
                site2: 2,
                both_excited: 0,
                both_ground: 3,
            },
            ScenarioBasis::TwoPhotonParallel => BasisLayout {
                site1: 3,
                site2: 0,
                both_excited: 2,
                both_ground: 1,
            },
        }
    }
}

impl fmt::Display for ScenarioBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Writes a two-site state into the 4x4 space of `basis`. The doubly excited
/// and doubly ground basis states carry exact zeros.
pub fn embed_two_qubit(
    state: &SingleExcitationState,
    basis: ScenarioBasis,
) -> Result<ComplexMatrix> {
    state.require_two_sites()?;
    let rho = state.density_matrix();
    let layout = basis.layout();
    let idx = [layout.site1, layout.site2];
    let mut out = ComplexMatrix::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            out[(idx[i], idx[j])] = rho[(i, j)];
        }
    }
    Ok(out)
}
