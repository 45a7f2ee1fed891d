//! Dense complex linear algebra for dimensions up to 64.

mod eigh;
mod matrix;

pub use eigh::{eigh, EigenDecomposition};
pub use matrix::{anticommutator, commutator, kron, kron_vec, partial_trace, tensor, ComplexMatrix, C64};
pub(crate) use matrix::{I, ZERO};
#[cfg(test)]
pub(crate) use matrix::ONE;

use crate::error::{Error, Result};

/// Default eigenvalue floor for [`matrix_log_on_support`].
pub const LOG_FLOOR: f64 = 1e-14;

/// Eigenvalues below this are treated as negative rather than rounding noise.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// U ln(max(Λ, floor)) U† for a positive-semidefinite M.
pub fn matrix_log_on_support(m: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument(format!("log floor must be positive, got {floor}")));
    }
    let e = eigh(m)?;
    if e.min() < -PSD_TOLERANCE {
        return Err(Error::NotPositive {
            min_eigenvalue: e.min(),
        });
    }
    Ok(e.map(|l| l.max(floor).ln()))
}

/// Principal square root of a positive-semidefinite matrix (negative
/// eigenvalues from rounding are clipped to zero).
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eigh(m)?;
    if e.min() < -PSD_TOLERANCE {
        return Err(Error::NotPositive {
            min_eigenvalue: e.min(),
        });
    }
    Ok(e.map(|l| l.max(0.0).sqrt()))
}

/// Singular values, descending, from the spectrum of M†M.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    match eigh(&m.adjoint().matmul(m)) {
        Ok(e) => e.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect(),
        // M†M is Hermitian by construction; non-convergence only happens for
        // non-finite input
        Err(_) => vec![f64::NAN; m.dim()],
    }
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Sum of singular values, read off the Hermitian dilation [[0, M], [M†, 0]]
/// (spectrum ±σ_i) so small singular values keep absolute accuracy ε‖M‖
/// instead of √ε‖M‖.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    let n = m.dim();
    let dilation = ComplexMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, false) => m[(i, j - n)],
        (false, true) => m[(j, i - n)].conj(),
        _ => C64::new(0.0, 0.0),
    });
    match eigh(&dilation) {
        Ok(e) => 0.5 * e.eigenvalues.iter().map(|l| l.abs()).sum::<f64>(),
        Err(_) => f64::NAN,
    }
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigh(m)?.min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::sample;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap()
    }

    /// Power iteration on M†M, independent of the Jacobi path.
    fn power_iteration_norm(m: &ComplexMatrix) -> f64 {
        let mtm = m.adjoint().matmul(m);
        let mut v: Vec<C64> = (0..m.dim()).map(|i| C64::new(1.0 + i as f64, 0.5)).collect();
        let mut lambda = 0.0;
        for _ in 0..500 {
            let w = mtm.mat_vec(&v);
            let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            lambda = n;
            v = w.iter().map(|z| z / n).collect();
        }
        lambda.sqrt()
    }

    #[test]
    fn log_of_maximally_mixed_qubit() {
        let m = ComplexMatrix::identity(2).scale_real(0.5);
        let l = matrix_log_on_support(&m, LOG_FLOOR).unwrap();
        let expected = ComplexMatrix::identity(2).scale_real(0.5f64.ln());
        assert!((&l - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn log_clamps_null_space_to_floor() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let l = matrix_log_on_support(&m, 1e-14).unwrap();
        assert!((l[(0, 0)].re - 0.0).abs() < 1e-15);
        assert!((l[(1, 1)].re - 1e-14f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_of_diagonal_state() {
        let m = ComplexMatrix::from_real_diagonal(&[0.7, 0.3]);
        let l = matrix_log_on_support(&m, LOG_FLOOR).unwrap();
        assert!((l[(0, 0)].re - 0.7f64.ln()).abs() < 1e-14);
        assert!((l[(1, 1)].re - 0.3f64.ln()).abs() < 1e-14);
        assert!(l[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn log_rejects_negative_input() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(
            matrix_log_on_support(&m, LOG_FLOOR),
            Err(Error::NotPositive { .. })
        ));
        assert!(matches!(
            matrix_log_on_support(&m, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&pauli_x()) - 1.0).abs() < 1e-14);
        assert!((operator_norm(&ComplexMatrix::from_real_diagonal(&[3.0, -5.0])) - 5.0).abs() < 1e-14);
        let ones = ComplexMatrix::from_fn(2, |_, _| ONE);
        let oracle = power_iteration_norm(&ones);
        assert!((oracle - 2.0).abs() < 1e-12);
        assert!((operator_norm(&ones) - oracle).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_examples() {
        let rho = ComplexMatrix::from_real_diagonal(&[0.2, 0.5, 0.3]);
        assert!((trace_norm(&rho) - 1.0).abs() < 1e-14);
        assert!((trace_norm(&ComplexMatrix::from_real_diagonal(&[1.0, -1.0])) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn commutator_trace_norm_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = sample::ginibre(&mut rng, 4);
        let rho = sample::density_matrix(&mut rng, 4);
        let c = commutator(&x, &rho);
        assert!(trace_norm(&c) <= 2.0 * operator_norm(&x) * trace_norm(&rho) + 1e-12);
    }

    #[test]
    fn power_iteration_agrees_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 2..7 {
            let g = sample::ginibre(&mut rng, dim);
            let a = operator_norm(&g);
            let b = power_iteration_norm(&g);
            assert!((a - b).abs() < 1e-8 * a, "dim {dim}: {a} vs {b}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eigh_reconstructs_random_hermitian(seed in any::<u64>(), dim in 2usize..=16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = sample::ginibre(&mut rng, dim).hermitian_part();
            let e = eigh(&m).unwrap();
            let err = operator_norm(&(&e.reconstruct() - &m));
            prop_assert!(err <= 1e-10 * operator_norm(&m).max(1.0));
        }

        #[test]
        fn partial_trace_of_product_recovers_factor(seed in any::<u64>(), da in 1usize..5, db in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sample::ginibre(&mut rng, da);
            let b = sample::ginibre(&mut rng, db);
            let pt = partial_trace(&kron(&a, &b), &[da, db], &[0]).unwrap();
            let expected = a.scale(b.trace());
            prop_assert!((&pt - &expected).max_abs() < 1e-12 * (1.0 + expected.max_abs()));
        }

        #[test]
        fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>(), da in 1usize..5, db in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = sample::density_matrix(&mut rng, da * db);
            for keep in [0usize, 1] {
                let r = partial_trace(&rho, &[da, db], &[keep]).unwrap();
                prop_assert!((r.trace() - rho.trace()).norm() < 1e-12);
                prop_assert!(min_eigenvalue(&r).unwrap() >= -1e-10);
            }
        }

        #[test]
        fn kittaneh_commutator_bound(seed in any::<u64>(), dim in 2usize..=16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = sample::ginibre(&mut rng, dim);
            let a = g.adjoint().matmul(&g);
            let x = sample::ginibre(&mut rng, dim);
            let lhs = trace_norm(&commutator(&a, &x));
            prop_assert!(lhs <= operator_norm(&a) * trace_norm(&x) + 1e-9);
        }

        #[test]
        fn trace_norm_dominates_contraction_pairings(seed in any::<u64>(), dim in 2usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sample::ginibre(&mut rng, dim).hermitian_part();
            let tn = trace_norm(&a);
            for _ in 0..20 {
                let g = sample::ginibre(&mut rng, dim);
                let p = g.scale_real(1.0 / operator_norm(&g));
                prop_assert!(p.trace_product(&a).norm() <= tn + 1e-9);
            }
        }
    }
}
