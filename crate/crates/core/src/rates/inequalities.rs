//! Evaluators for the individual inequalities of the proofs.

use rand::Rng;

use super::{InequalityFamily, InequalityResult};
use crate::dynamics::embed_ab;
use crate::error::{Error, Result};
use crate::linalg::{
    commutator, eigh, kron, matrix_log_on_support, min_eigenvalue, operator_norm, partial_trace, sqrt_psd,
    trace_norm, ComplexMatrix, LOG_FLOOR, PSD_TOLERANCE,
};
use crate::states::{proposition1_witness, sample, schmidt, sigma0, DensityMatrix, PureState};

/// Tolerance on the (X, Y) preconditions of [`l_term`].
const PAIR_TOLERANCE: f64 = 1e-10;
const MAX_RESAMPLES: usize = 100;

fn binary_entropy_nats(p: f64) -> f64 {
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

/// dσ₀ ⪰ ρ for Ψ with d = min(d_A, d_B): margin = min eig(dσ₀ − ρ).
pub fn proposition1_result(psi: &PureState) -> Result<InequalityResult> {
    let d = psi.dims().d();
    let rho = psi.density();
    let w = proposition1_witness(&rho, &sigma0(&schmidt(psi)), d)?;
    Ok(InequalityResult::new(InequalityFamily::Prop1, 0.0, w.min_eigenvalue)
        .with("mu_min_eigenvalue", w.mu.min_eigenvalue()?))
}

/// |Tr(H[ρ_η, ln σ₀,η])| against 4 ln d ‖H‖, with H acting on AB.
pub fn h_term(h: &ComplexMatrix, psi: &PureState, eta: f64) -> Result<InequalityResult> {
    let dims = psi.dims();
    let d = dims.d();
    if d < 2 {
        return Err(Error::DegenerateCut);
    }
    let h_full = embed_ab(dims, h)?;
    let rho_eta = crate::states::smooth(&psi.density(), eta)?;
    let log_sigma = schmidt(psi).floored_sigma0_log(eta)?;
    let lhs = h_full.trace_product(&commutator(rho_eta.matrix(), &log_sigma)).norm();
    let h_norm = operator_norm(h);
    let p = 1.0 / d as f64;
    Ok(InequalityResult::new(InequalityFamily::HTerm, lhs, 4.0 * (d as f64).ln() * h_norm)
        .with("mixing_rhs", 2.0 * binary_entropy_nats(p) * h_norm / p)
        .with("h_norm", h_norm))
}

/// |Tr(L†[LX, ln Y])| against 172‖L‖² p ln(1/p) for 0 ⪯ X ⪯ Y, Tr X = p,
/// Tr Y = 1 and p ≤ e⁻².
pub fn l_term(l: &ComplexMatrix, x: &ComplexMatrix, y: &ComplexMatrix, p: f64) -> Result<InequalityResult> {
    let n = y.dim();
    if l.dim() != n || x.dim() != n {
        return Err(Error::Shape("L, X and Y must share one dimension".into()));
    }
    if !(p > 0.0 && p <= (-2.0f64).exp()) {
        return Err(Error::InvalidPair(format!("p = {p} outside (0, e^-2]")));
    }
    let herm_tol = PAIR_TOLERANCE * x.max_abs().max(y.max_abs()).max(1.0);
    if x.hermiticity_defect() > herm_tol || y.hermiticity_defect() > herm_tol {
        return Err(Error::InvalidPair("X and Y must be Hermitian".into()));
    }
    let (x, y) = (x.hermitian_part(), y.hermitian_part());
    if (x.trace().re - p).abs() > PAIR_TOLERANCE {
        return Err(Error::InvalidPair(format!("Tr X = {} differs from p = {p}", x.trace().re)));
    }
    if (y.trace().re - 1.0).abs() > PAIR_TOLERANCE {
        return Err(Error::InvalidPair(format!("Tr Y = {} differs from 1", y.trace().re)));
    }
    let x_min = min_eigenvalue(&x)?;
    if x_min < -PAIR_TOLERANCE {
        return Err(Error::InvalidPair(format!("X has eigenvalue {x_min:.3e}")));
    }
    let gap_min = min_eigenvalue(&(&y - &x))?;
    if gap_min < -PAIR_TOLERANCE {
        return Err(Error::InvalidPair(format!("Y - X has eigenvalue {gap_min:.3e}")));
    }
    let log_y = matrix_log_on_support(&y, LOG_FLOOR)?;
    let lx = l.matmul(&x);
    let lhs = l.adjoint().trace_product(&commutator(&lx, &log_y)).norm();
    let l_norm = operator_norm(l);
    let rhs = 172.0 * l_norm * l_norm * p * (1.0 / p).ln();
    Ok(InequalityResult::new(InequalityFamily::LTerm, lhs, rhs)
        .with("p", p)
        .with("l_norm", l_norm)
        .with("y_min_eigenvalue", min_eigenvalue(&y)?))
}

/// Samples (X, Y) with Y a Wishart density matrix and X = c·Y^{1/2} M Y^{1/2},
/// 0 ⪯ M ⪯ I, c = p/Tr(MY) ≤ 1. `commuting` forces M = I, i.e. X = pY.
pub fn instance_xy_with<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    p: f64,
    commuting: bool,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !(p > 0.0 && p <= (-2.0f64).exp()) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (0, e^-2]")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let y = sample::density_matrix(rng, dim);
    let root = sqrt_psd(&y)?;
    for _ in 0..MAX_RESAMPLES {
        let m = if commuting {
            ComplexMatrix::identity(dim)
        } else {
            let u = sample::haar_unitary(rng, dim);
            let diag: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            u.matmul(&ComplexMatrix::from_real_diagonal(&diag)).matmul(&u.adjoint()).hermitian_part()
        };
        let sandwich = root.matmul(&m).matmul(&root).hermitian_part();
        let t = sandwich.trace().re;
        if t >= p {
            return Ok((sandwich.scale_real(p / t).hermitian_part(), y));
        }
    }
    Err(Error::SamplerFailure {
        attempts: MAX_RESAMPLES,
        reason: format!("Tr(MY) stayed below p = {p}"),
    })
}

pub fn instance_xy(dim: usize, p: f64, seed: u64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    instance_xy_with(&mut sample::rng_from_seed(seed), dim, p, false)
}

/// |Tr(H[pρ₁, ln(pρ₁ + (1 − p)ρ₂)])| against −2(p ln p + (1 − p) ln(1 − p))‖H‖.
pub fn small_incremental_mixing_check(
    h: &ComplexMatrix,
    rho1: &ComplexMatrix,
    rho2: &ComplexMatrix,
    p: f64,
) -> Result<InequalityResult> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("mixing weight {p} not in (0, 1)")));
    }
    if rho1.dim() != h.dim() || rho2.dim() != h.dim() {
        return Err(Error::Shape("H, ρ₁ and ρ₂ must share one dimension".into()));
    }
    let a = rho1.scale_real(p);
    let mut mix = rho2.scale_real(1.0 - p);
    mix.axpy(crate::linalg::C64::new(1.0, 0.0), &a);
    let log_mix = matrix_log_on_support(&mix.hermitian_part(), LOG_FLOOR)?;
    let lhs = h.trace_product(&commutator(&a, &log_mix)).norm();
    let h_norm = operator_norm(h);
    Ok(InequalityResult::new(InequalityFamily::Mixing, lhs, 2.0 * binary_entropy_nats(p) * h_norm).with("p", p))
}

/// ‖[A, X]‖₁ against ‖A‖·‖X‖₁ for A ⪰ 0.
pub fn kittaneh_check(a: &ComplexMatrix, x: &ComplexMatrix) -> Result<InequalityResult> {
    if a.dim() != x.dim() {
        return Err(Error::Shape("A and X must share one dimension".into()));
    }
    let a_min = eigh(a)?.min();
    if a.hermiticity_defect() > PSD_TOLERANCE * a.max_abs().max(1.0) || a_min < -PSD_TOLERANCE {
        return Err(Error::NotPositive { min_eigenvalue: a_min });
    }
    let lhs = trace_norm(&commutator(a, x));
    Ok(InequalityResult::new(InequalityFamily::Kittaneh, lhs, operator_norm(a) * trace_norm(x)))
}

/// Minimum eigenvalues of the two operators whose positivity gives the
/// decompositions ρ_aA ⊗ I_B/d_B = ρ_aAB/d_B² + (1 − 1/d_B²)μ_aAB and its
/// mirror on the other side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BravyiCheck {
    /// min eig of d_B (ρ_aA ⊗ I_B) − ρ_aAB
    pub min_eig_b: f64,
    /// min eig of d_A (I_A ⊗ ρ_Bb) − ρ_ABb
    pub min_eig_a: f64,
}

impl BravyiCheck {
    pub fn result(&self) -> InequalityResult {
        InequalityResult::new(InequalityFamily::BravyiLemma1, 0.0, self.min_eig_b.min(self.min_eig_a))
            .with("min_eig_b", self.min_eig_b)
            .with("min_eig_a", self.min_eig_a)
    }
}

pub fn bravyi_lemma1_check(rho: &DensityMatrix) -> Result<BravyiCheck> {
    let f = rho.dims().factors();
    let [_, d_a, d_b, _] = f;
    let m = rho.matrix();
    let rho_aab = partial_trace(m, &f, &[0, 1, 2])?;
    let rho_aa = partial_trace(m, &f, &[0, 1])?;
    let lhs_b = kron(&rho_aa, &ComplexMatrix::identity(d_b)).scale_real(d_b as f64);
    let rho_abb = partial_trace(m, &f, &[1, 2, 3])?;
    let rho_bb = partial_trace(m, &f, &[2, 3])?;
    let lhs_a = kron(&ComplexMatrix::identity(d_a), &rho_bb).scale_real(d_a as f64);
    Ok(BravyiCheck {
        min_eig_b: min_eigenvalue(&(&lhs_b - &rho_aab).hermitian_part())?,
        min_eig_a: min_eigenvalue(&(&lhs_a - &rho_abb).hermitian_part())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ONE, ZERO};
    use crate::states::DimensionSignature;

    #[test]
    fn h_term_examples() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let psi = sample::random_pure(dims, 2);
        let r = h_term(&ComplexMatrix::identity(4), &psi, 1e-8).unwrap();
        assert!(r.lhs < 1e-12);
        assert!((r.rhs - 4.0 * 2f64.ln()).abs() < 1e-12);
        assert!((r.details["mixing_rhs"] - 4.0 * 2f64.ln()).abs() < 1e-12);

        let dims = DimensionSignature::bipartite(3, 3).unwrap();
        for seed in 0..20 {
            let psi = sample::random_pure(dims, seed);
            let h = sample::random_gue_hamiltonian(9, seed + 100);
            let r = h_term(&h, &psi, 1e-8).unwrap();
            assert!(r.margin >= -1e-6, "{r:?}");
            assert!(r.lhs <= r.details["mixing_rhs"] + 1e-6);
        }
    }

    #[test]
    fn h_term_rejects_degenerate_cut() {
        let dims = DimensionSignature::new(2, 1, 3, 1).unwrap();
        let psi = sample::random_pure(dims, 0);
        assert_eq!(h_term(&ComplexMatrix::identity(3), &psi, 1e-8), Err(Error::DegenerateCut));
    }

    #[test]
    fn l_term_zero_and_commuting() {
        let p = 0.125;
        let mut rng = sample::rng_from_seed(5);
        let (x, y) = instance_xy_with(&mut rng, 4, p, true).unwrap();
        assert!((&x - &y.scale_real(p)).max_abs() < 1e-15);
        let r = l_term(&ComplexMatrix::zeros(4), &x, &y, p).unwrap();
        assert_eq!(r.lhs, 0.0);
        let l = sample::random_ginibre_lindblad(4, 9);
        let r = l_term(&l, &x, &y, p).unwrap();
        assert!(r.margin >= -1e-6);
    }

    #[test]
    fn l_term_preconditions() {
        let (x, y) = instance_xy(4, 0.1, 3).unwrap();
        let l = sample::random_ginibre_lindblad(4, 1);
        assert!(matches!(l_term(&l, &x, &y, 0.2), Err(Error::InvalidPair(_))));
        assert!(matches!(l_term(&l, &x.scale_real(2.0), &y, 0.2), Err(Error::InvalidPair(_))));
        let bad_x = &x + &ComplexMatrix::identity(4).scale_real(0.5);
        assert!(matches!(l_term(&l, &bad_x, &y, 0.1), Err(Error::InvalidPair(_))));
        assert!(l_term(&l, &x, &y, 0.1).is_ok());
    }

    #[test]
    fn instance_xy_meets_constraints() {
        let (x, y) = instance_xy(4, 0.1, 3).unwrap();
        assert!((x.trace().re - 0.1).abs() < 1e-10);
        assert!((y.trace().re - 1.0).abs() < 1e-12);
        assert!(min_eigenvalue(&(&y - &x)).unwrap() >= -1e-10);
        assert!(min_eigenvalue(&x).unwrap() >= -1e-10);
        assert_eq!(instance_xy(4, 0.1, 3).unwrap(), (x, y));
        assert!(instance_xy(4, 0.2, 3).is_err());
    }

    #[test]
    fn l_term_sampled_cell() {
        for seed in 0..50 {
            let (x, y) = instance_xy(8, 0.125, seed).unwrap();
            let l = sample::random_ginibre_lindblad(8, seed + 1000);
            let r = l_term(&l, &x, &y, 0.125).unwrap();
            assert!(r.margin >= -1e-6, "{r:?}");
        }
    }

    #[test]
    fn mixing_examples() {
        let mut rng = sample::rng_from_seed(1);
        let h = sample::gue_unit_norm(&mut rng, 3);
        let rho = ComplexMatrix::from_real_diagonal(&[0.5, 0.3, 0.2]);
        let r = small_incremental_mixing_check(&h, &rho, &rho, 0.5).unwrap();
        assert!(r.lhs < 1e-15);
        assert!((r.rhs - 2.0 * 2f64.ln()).abs() < 1e-12);
        for p in [0.5, 0.25, (-2.0f64).exp()] {
            for _ in 0..20 {
                let r1 = sample::density_matrix(&mut rng, 4);
                let r2 = sample::density_matrix(&mut rng, 4);
                let h = sample::gue_unit_norm(&mut rng, 4);
                let r = small_incremental_mixing_check(&h, &r1, &r2, p).unwrap();
                assert!(r.margin >= -1e-6, "{r:?}");
            }
        }
    }

    #[test]
    fn kittaneh_examples() {
        let mut rng = sample::rng_from_seed(8);
        for n in [2, 5, 16] {
            let a = sample::density_matrix(&mut rng, n);
            let x = sample::ginibre(&mut rng, n);
            let r = kittaneh_check(&a, &x).unwrap();
            assert!(r.margin >= -1e-9);
        }
        let not_psd = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(kittaneh_check(&not_psd, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn bravyi_examples() {
        let dims = DimensionSignature::new(1, 2, 2, 1).unwrap();
        let bell = PureState::maximally_entangled(2).unwrap();
        let c = bravyi_lemma1_check(&bell.density()).unwrap();
        assert!(c.min_eig_b >= -1e-10 && c.min_eig_a >= -1e-10);
        // explicit 4x4: 2(I/2 ⊗ I) − |Φ⟩⟨Φ| has spectrum {0, 1, 1, 1}
        assert!(c.min_eig_b.abs() < 1e-12);

        let psi = PureState::product(dims, &[ONE, ZERO], &[ZERO, C64::new(0.0, 1.0)]).unwrap();
        let c = bravyi_lemma1_check(&psi.density()).unwrap();
        assert!(c.min_eig_b >= -1e-12 && c.min_eig_a >= -1e-12);

        let dims = DimensionSignature::new(2, 2, 2, 2).unwrap();
        for seed in 0..20 {
            let rho = sample::random_pure(dims, seed).density();
            let c = bravyi_lemma1_check(&rho).unwrap();
            assert!(c.result().margin >= -1e-10, "{c:?}");
        }
    }

    #[test]
    fn proposition1_result_is_tight_on_bell() {
        let r = proposition1_result(&PureState::maximally_entangled(2).unwrap()).unwrap();
        assert!(r.margin.abs() < 1e-12);
        assert_eq!(r.margin, r.rhs);
    }
}
