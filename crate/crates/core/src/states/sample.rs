//! Random instance generation. Every sampler is a pure function of the RNG
//! state, so a fixed seed reproduces the same instance bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DensityMatrix, DimensionSignature, PureState};
use crate::linalg::{operator_norm, ComplexMatrix, C64};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian, E|z|² = 1.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(rng)).collect()
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| complex_gaussian(rng))
}

/// Haar-distributed pure state: normalized complex Gaussian vector.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dims: DimensionSignature) -> PureState {
    loop {
        let v = complex_gaussian_vector(rng, dims.total());
        if let Ok(psi) = PureState::normalized(dims, v) {
            return psi;
        }
    }
}

/// GUE matrix rescaled to unit operator norm.
pub fn gue_unit_norm<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let h = ginibre(rng, n).hermitian_part();
    let norm = operator_norm(&h);
    h.scale_real(1.0 / norm).hermitian_part()
}

/// Ginibre matrix rescaled to unit operator norm.
pub fn ginibre_unit_norm<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n);
    let norm = operator_norm(&g);
    g.scale_real(1.0 / norm)
}

/// Haar unitary from Gram–Schmidt on Ginibre columns.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for q in &cols {
            let overlap: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= overlap * y);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, |i, j| cols[j][i])
}

/// Full-rank density matrix W W†/Tr(W W†) with W Ginibre.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let w = ginibre(rng, n);
    let m = w.matmul(&w.adjoint());
    let tr = m.trace().re;
    m.scale_real(1.0 / tr).hermitian_part()
}

pub fn mixed_state<R: Rng + ?Sized>(rng: &mut R, dims: DimensionSignature) -> DensityMatrix {
    DensityMatrix::from_parts(dims, density_matrix(rng, dims.total()))
}

pub fn random_pure(dims: DimensionSignature, seed: u64) -> PureState {
    pure_state(&mut rng_from_seed(seed), dims)
}

pub fn random_gue_hamiltonian(dim: usize, seed: u64) -> ComplexMatrix {
    gue_unit_norm(&mut rng_from_seed(seed), dim)
}

pub fn random_ginibre_lindblad(dim: usize, seed: u64) -> ComplexMatrix {
    ginibre_unit_norm(&mut rng_from_seed(seed), dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_trace;

    #[test]
    fn samplers_meet_norm_invariants() {
        for seed in 0..20 {
            let dims = DimensionSignature::new(2, 2, 3, 1).unwrap();
            let psi = random_pure(dims, seed);
            let norm: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let h = random_gue_hamiltonian(6, seed);
            assert!(h.hermiticity_defect() == 0.0);
            assert!((operator_norm(&h) - 1.0).abs() < 1e-12);
            let l = random_ginibre_lindblad(6, seed);
            assert!((operator_norm(&l) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn samplers_are_deterministic() {
        let dims = DimensionSignature::bipartite(3, 3).unwrap();
        assert_eq!(random_pure(dims, 17), random_pure(dims, 17));
        assert_eq!(random_gue_hamiltonian(4, 17), random_gue_hamiltonian(4, 17));
        assert_eq!(random_ginibre_lindblad(4, 17), random_ginibre_lindblad(4, 17));
        assert_ne!(random_pure(dims, 17), random_pure(dims, 18));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_from_seed(4);
        let u = haar_unitary(&mut rng, 6);
        let gram = u.adjoint().matmul(&u);
        assert!((&gram - &ComplexMatrix::identity(6)).max_abs() < 1e-13);
    }

    fn mean_reduced_purity(seed: u64, samples: usize) -> f64 {
        let mut rng = rng_from_seed(seed);
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        (0..samples)
            .map(|_| {
                let rho = pure_state(&mut rng, dims).density();
                let ra = partial_trace(rho.matrix(), &[2, 2], &[0]).unwrap();
                ra.trace_product(&ra).re
            })
            .sum::<f64>()
            / samples as f64
    }

    #[test]
    fn haar_reduced_purity_is_stable() {
        // sanity check against an independent longer run
        let short = mean_reduced_purity(1, 10_000);
        let long = mean_reduced_purity(2, 40_000);
        assert!((short - long).abs() < 0.01, "{short} vs {long}");
        // Haar average for 2x2 is (dA + dB)/(dA dB + 1) = 0.8
        assert!((long - 0.8).abs() < 0.01);
    }
}
