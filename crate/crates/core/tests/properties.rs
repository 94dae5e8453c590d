use std::f64::consts::PI;

use deloc::linalg::{
    hermitian_eigen, partial_trace, partial_transpose, sqrt_psd, tensor_product, ComplexMatrix,
    Subsystem,
};
use deloc::measures::{
    chsh_horodecki, chsh_optimize, concurrence_closed, concurrence_wootters, degree_of_coherence,
    delocalization, log_negativity, partial_transpose_spectrum, purity, schmidt_coefficients,
};
use deloc::states::embed_two_qubit;
use deloc::{ScenarioBasis, SingleExcitationState};
use num_complex::Complex64;
use proptest::prelude::*;

fn hermitian(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim).prop_flat_map(|n| {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
            let raw =
                ComplexMatrix::from_fn(n, |i, j| Complex64::new(v[i * n + j].0, v[i * n + j].1));
            let sum = &raw + &raw.adjoint();
            sum.scale(Complex64::new(0.5, 0.0))
        })
    })
}

/// `A A^dagger / tr`, a full-rank density matrix of dimension `n`.
fn density(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let a = ComplexMatrix::from_fn(n, |i, j| Complex64::new(v[i * n + j].0, v[i * n + j].1));
        let m = &a * &a.adjoint();
        let tr = m.trace();
        m.scale(Complex64::new(1.0, 0.0) / tr)
    })
}

fn family() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..2.0 * PI)
}

fn basis() -> impl Strategy<Value = ScenarioBasis> {
    proptest::sample::select(ScenarioBasis::ALL.to_vec())
}

fn nsite() -> impl Strategy<Value = SingleExcitationState> {
    (2usize..=8)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(
                    (-1.0f64..1.0, -1.0f64..1.0, proptest::bool::weighted(0.85)),
                    n,
                ),
                0.0f64..=1.0,
            )
        })
        .prop_filter_map("nonzero amplitudes", |(raw, eps)| {
            let amps: Vec<Complex64> = raw
                .iter()
                .map(|&(re, im, keep)| {
                    if keep {
                        Complex64::new(re, im)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (norm > 1e-3).then(|| {
                let amps = amps.into_iter().map(|z| z / norm).collect();
                SingleExcitationState::new(amps, eps).unwrap()
            })
        })
}

proptest! {
    #[test]
    fn eigenvalues_sum_to_trace_and_reconstruct(m in hermitian(6)) {
        let e = hermitian_eigen(&m).unwrap();
        let scale = m.frobenius_norm().max(1.0);
        prop_assert!((e.values.iter().sum::<f64>() - m.trace().re).abs() <= 1e-12 * scale);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let v = &e.vectors;
        let d = ComplexMatrix::diag(&e.values);
        prop_assert!((&(v * &d) * &v.adjoint()).max_abs_diff(&m) <= 1e-12 * scale);
        prop_assert!((&v.adjoint() * v).max_abs_diff(&ComplexMatrix::identity(m.dim())) <= 1e-12);
        prop_assert!((&(&v.adjoint() * &m) * v).off_diagonal_norm() <= 1e-12 * scale);
    }

    #[test]
    fn sqrt_squares_back(rho in density(4)) {
        let r = sqrt_psd(&rho).unwrap();
        prop_assert!((&r * &r).max_abs_diff(&rho) <= 1e-12);
        prop_assert!(r.is_hermitian(1e-14));
    }

    #[test]
    fn partial_trace_of_product(a in density(2), b in density(3)) {
        let ab = tensor_product(&a, &b);
        prop_assert!(partial_trace(&ab, Subsystem::Second, (2, 3)).unwrap().max_abs_diff(&a) <= 1e-14);
        prop_assert!(partial_trace(&ab, Subsystem::First, (2, 3)).unwrap().max_abs_diff(&b) <= 1e-14);
    }

    #[test]
    fn partial_transpose_keeps_trace_and_hermiticity(rho in density(4)) {
        for sub in [Subsystem::First, Subsystem::Second] {
            let pt = partial_transpose(&rho, sub, (2, 2)).unwrap();
            prop_assert!((pt.trace() - rho.trace()).norm() <= 1e-15);
            prop_assert!(pt.is_hermitian(1e-15));
            prop_assert_eq!(partial_transpose(&pt, sub, (2, 2)).unwrap(), rho.clone());
        }
    }

    #[test]
    fn constructed_states_are_physical(s in nsite()) {
        let rho = s.density_matrix();
        prop_assert!(rho.check_density(1e-10).is_ok());
        if s.epsilon() == 0.0 {
            prop_assert_eq!(rho.off_diagonal_norm(), 0.0);
        }
    }

    #[test]
    fn embedded_states_are_physical((p1, eps, phase) in family(), b in basis()) {
        let rho = embed_two_qubit(&SingleExcitationState::dimer(p1, eps, phase).unwrap(), b).unwrap();
        prop_assert!(rho.check_density(1e-10).is_ok());
    }

    #[test]
    fn fully_coherent_states_are_pure(p1 in 0.0f64..=1.0, phase in 0.0f64..2.0 * PI) {
        let s = SingleExcitationState::dimer(p1, 1.0, phase).unwrap();
        let rho = s.density_matrix();
        prop_assert!((purity(&rho) - 1.0).abs() <= 1e-12);
        let nonzero = hermitian_eigen(&rho).unwrap().values.iter().filter(|v| v.abs() > 1e-12).count();
        prop_assert_eq!(nonzero, 1);
    }

    #[test]
    fn coherence_modulus_is_eps(s in nsite()) {
        let p = s.probabilities();
        for i in 0..s.n_sites() {
            for j in 0..s.n_sites() {
                if i == j { continue; }
                match degree_of_coherence(&s, i, j) {
                    Ok(g) => prop_assert!((g.norm() - s.epsilon()).abs() <= 1e-12),
                    Err(_) => prop_assert!(p[i] == 0.0 || p[j] == 0.0),
                }
            }
        }
    }

    #[test]
    fn concurrence_is_eps_times_delocalization((p1, eps, phase) in family(), b in basis()) {
        let s = SingleExcitationState::dimer(p1, eps, phase).unwrap();
        let p = s.probabilities();
        let rho = embed_two_qubit(&s, b).unwrap();
        let c = concurrence_wootters(&rho).unwrap();
        let d = delocalization(p[0], p[1]).unwrap();
        prop_assert!((c - eps * d).abs() <= 1e-10);
        prop_assert!((c - concurrence_closed(p[0], p[1], eps).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn negativity_matches_concurrence((p1, eps, phase) in family(), b in basis()) {
        let s = SingleExcitationState::dimer(p1, eps, phase).unwrap();
        let p = s.probabilities();
        let rho = embed_two_qubit(&s, b).unwrap();
        let c = concurrence_closed(p[0], p[1], eps).unwrap();
        let min = partial_transpose_spectrum(&rho).unwrap()[0];
        prop_assert!((min + eps * (p[0] * p[1]).sqrt()).abs() <= 1e-10);
        prop_assert!((log_negativity(&rho).unwrap() - (1.0 + c).log2()).abs() <= 1e-10);
        prop_assert!((chsh_horodecki(&rho).unwrap() - 2.0 * (1.0 + c * c).sqrt()).abs() <= 1e-10);
    }

    #[test]
    fn concurrence_is_monotone(p1 in 0.0f64..=1.0, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let p2 = 1.0 - p1;
        prop_assert!(concurrence_closed(p1, p2, lo).unwrap() <= concurrence_closed(p1, p2, hi).unwrap());
        let d = delocalization(p1, p2).unwrap();
        prop_assert!(concurrence_closed(p1, p2, hi).unwrap() <= d + 1e-15);
    }

    #[test]
    fn schmidt_coefficients_of_pure_family(p1 in 0.0f64..=1.0, phase in 0.0f64..2.0 * PI, b in basis()) {
        let s = SingleExcitationState::dimer(p1, 1.0, phase).unwrap();
        let psi = s.coherent_vector(b).unwrap();
        let (s1, s2) = schmidt_coefficients(&psi).unwrap();
        prop_assert!(s1 >= s2 && s2 >= 0.0);
        prop_assert!((s1 * s1 + s2 * s2 - 1.0).abs() <= 1e-12);
        let p = s.probabilities();
        prop_assert!((2.0 * s1 * s2 - delocalization(p[0], p[1]).unwrap()).abs() <= 1e-12);
        prop_assert!((s1 - p[0].max(p[1]).sqrt()).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chsh_optimizer_agrees_with_closed_form((p1, eps, phase) in family(), b in basis()) {
        let rho = embed_two_qubit(&SingleExcitationState::dimer(p1, eps, phase).unwrap(), b).unwrap();
        let h = chsh_horodecki(&rho).unwrap();
        let opt = chsh_optimize(&rho).unwrap();
        prop_assert!((opt.value - h).abs() <= 1e-6);
        prop_assert!(opt.value <= 2.0 * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn chsh_optimizer_on_generic_states(rho in density(4)) {
        let h = chsh_horodecki(&rho).unwrap();
        let opt = chsh_optimize(&rho).unwrap();
        prop_assert!((opt.value - h).abs() <= 1e-6, "{} vs {}", opt.value, h);
    }
}
