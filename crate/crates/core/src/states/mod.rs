//! Quantum-state value types on the four-party space a ⊗ A ⊗ B ⊗ b.
//!
//! Alice holds the ancilla `a` and system `A`, Bob holds `B` and ancilla `b`.
//! Ancilla-free instances use `anc_a = anc_b = 1`. Tensor order is always
//! a, A, B, b, so the cut aA|Bb splits the index into two contiguous halves.

pub mod sample;
mod schmidt;

use serde::{Deserialize, Serialize};

pub use schmidt::{proposition1_witness, schmidt, sigma0, Proposition1Witness, SchmidtDecomposition};

use crate::error::{Error, Result};
use crate::linalg::{eigh, kron_vec, partial_trace, ComplexMatrix, C64};

/// Default cap on the total Hilbert-space dimension.
pub const MAX_TOTAL_DIM: usize = 64;

/// Tolerance for the density-matrix invariants (Hermiticity, trace, positivity).
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Default smoothing weight for analytic derivatives.
pub const DEFAULT_ETA: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 4]", into = "[usize; 4]")]
pub struct DimensionSignature {
    pub anc_a: usize,
    pub sys_a: usize,
    pub sys_b: usize,
    pub anc_b: usize,
}

impl DimensionSignature {
    pub fn new(anc_a: usize, sys_a: usize, sys_b: usize, anc_b: usize) -> Result<Self> {
        Self::with_cap(anc_a, sys_a, sys_b, anc_b, MAX_TOTAL_DIM)
    }

    pub fn with_cap(anc_a: usize, sys_a: usize, sys_b: usize, anc_b: usize, cap: usize) -> Result<Self> {
        let dims = Self {
            anc_a,
            sys_a,
            sys_b,
            anc_b,
        };
        if dims.factors().contains(&0) {
            return Err(Error::Shape(format!("zero dimension in {:?}", dims.factors())));
        }
        if dims.total() > cap {
            return Err(Error::Shape(format!(
                "total dimension {} exceeds cap {cap}",
                dims.total()
            )));
        }
        Ok(dims)
    }

    /// Ancilla-free A|B cut.
    pub fn bipartite(sys_a: usize, sys_b: usize) -> Result<Self> {
        Self::new(1, sys_a, sys_b, 1)
    }

    /// A single system of dimension `dim`, stored on the A slot.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(1, dim, 1, 1)
    }

    pub fn factors(&self) -> [usize; 4] {
        [self.anc_a, self.sys_a, self.sys_b, self.anc_b]
    }

    pub fn total(&self) -> usize {
        self.anc_a * self.sys_a * self.sys_b * self.anc_b
    }

    /// dim(aA)
    pub fn alice(&self) -> usize {
        self.anc_a * self.sys_a
    }

    /// dim(Bb)
    pub fn bob(&self) -> usize {
        self.sys_b * self.anc_b
    }

    /// dim(AB), the space the generator acts on.
    pub fn ab(&self) -> usize {
        self.sys_a * self.sys_b
    }

    pub fn is_ancilla_free(&self) -> bool {
        self.anc_a == 1 && self.anc_b == 1
    }

    /// d = min(d_A, d_B)
    pub fn d(&self) -> usize {
        self.sys_a.min(self.sys_b)
    }

    /// p = 1/d
    pub fn p(&self) -> f64 {
        1.0 / self.d() as f64
    }
}

impl TryFrom<[usize; 4]> for DimensionSignature {
    type Error = Error;

    fn try_from(f: [usize; 4]) -> Result<Self> {
        Self::new(f[0], f[1], f[2], f[3])
    }
}

impl From<DimensionSignature> for [usize; 4] {
    fn from(d: DimensionSignature) -> Self {
        d.factors()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: DimensionSignature,
    amplitudes: Vec<C64>,
}

fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl PureState {
    /// Wraps amplitudes that are already normalized to within 1e-12.
    pub fn new(dims: DimensionSignature, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(Error::Shape(format!(
                "{} amplitudes for total dimension {}",
                amplitudes.len(),
                dims.total()
            )));
        }
        let norm = vector_norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { dims, amplitudes })
    }

    pub fn normalized(dims: DimensionSignature, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = vector_norm(&amplitudes);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(dims, amplitudes)
    }

    /// |i⟩ in the computational basis of the full space.
    pub fn basis(dims: DimensionSignature, index: usize) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); dims.total()];
        *amps
            .get_mut(index)
            .ok_or_else(|| Error::Shape(format!("basis index {index} out of range")))? = C64::new(1.0, 0.0);
        Self::new(dims, amps)
    }

    /// |α⟩_aA ⊗ |β⟩_Bb
    pub fn product(dims: DimensionSignature, alice: &[C64], bob: &[C64]) -> Result<Self> {
        if alice.len() != dims.alice() || bob.len() != dims.bob() {
            return Err(Error::Shape("product factors do not match the cut".into()));
        }
        Self::normalized(dims, kron_vec(alice, bob))
    }

    /// |Φ_d⟩ = d^{-1/2} Σ_j |jj⟩ on an ancilla-free d×d system.
    pub fn maximally_entangled(d: usize) -> Result<Self> {
        let dims = DimensionSignature::bipartite(d, d)?;
        let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        let mut amps = vec![C64::new(0.0, 0.0); d * d];
        for j in 0..d {
            amps[j * d + j] = amp;
        }
        Self::new(dims, amps)
    }

    pub fn dims(&self) -> DimensionSignature {
        self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Amplitudes reshaped into a dim(aA) × dim(Bb) row-major matrix.
    pub fn cut_matrix(&self) -> Vec<Vec<C64>> {
        self.amplitudes
            .chunks(self.dims.bob())
            .map(<[C64]>::to_vec)
            .collect()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims,
            matrix: ComplexMatrix::outer(&self.amplitudes),
        }
    }

    /// U|ψ⟩ for an operator on the full space; renormalizes.
    pub fn apply(&self, op: &ComplexMatrix) -> Result<Self> {
        if op.dim() != self.dims.total() {
            return Err(Error::Shape("operator does not match state dimension".into()));
        }
        Self::normalized(self.dims, op.mat_vec(&self.amplitudes))
    }
}

/// Positive unit-trace operator carrying its tensor-factor signature.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: DimensionSignature,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity to 1e-10.
    pub fn new(dims: DimensionSignature, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.dim() != dims.total() {
            return Err(Error::Shape(format!(
                "matrix dim {} vs signature total {}",
                matrix.dim(),
                dims.total()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = matrix.hermiticity_defect();
        if herm > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("Hermiticity defect {herm:e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOLERANCE || tr.im.abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = eigh(&matrix)?.min();
        if min < -STATE_TOLERANCE {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(Self { dims, matrix })
    }

    /// Skips validation; for values that are valid by construction.
    pub(crate) fn from_parts(dims: DimensionSignature, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(dims.total(), matrix.dim());
        Self { dims, matrix }
    }

    /// I/D on the given space.
    pub fn maximally_mixed(dims: DimensionSignature) -> Self {
        let n = dims.total();
        Self::from_parts(dims, ComplexMatrix::identity(n).scale_real(1.0 / n as f64))
    }

    pub fn dims(&self) -> DimensionSignature {
        self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(&self.matrix)?.min())
    }

    /// Keeps the listed factors of (a, A, B, b).
    pub fn reduce(&self, keep: &[usize]) -> Result<ComplexMatrix> {
        partial_trace(&self.matrix, &self.dims.factors(), keep)
    }

    /// ρ_aA
    pub fn alice_marginal(&self) -> ComplexMatrix {
        partial_trace(&self.matrix, &[self.dims.alice(), self.dims.bob()], &[0])
            .expect("signature matches matrix")
    }

    /// ρ_Bb
    pub fn bob_marginal(&self) -> ComplexMatrix {
        partial_trace(&self.matrix, &[self.dims.alice(), self.dims.bob()], &[1])
            .expect("signature matches matrix")
    }
}

/// (1 − η)ρ + η·I/D
pub fn smooth(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("smoothing weight {eta} not in (0, 1)")));
    }
    let n = rho.dims.total();
    let mut m = rho.matrix.scale_real(1.0 - eta);
    for i in 0..n {
        m[(i, i)] += eta / n as f64;
    }
    Ok(DensityMatrix::from_parts(rho.dims, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_rejects_zero_and_oversized() {
        assert!(DimensionSignature::new(1, 0, 2, 1).is_err());
        assert!(DimensionSignature::new(2, 4, 4, 3).is_err());
        assert!(DimensionSignature::with_cap(2, 4, 4, 3, 96).is_ok());
    }

    #[test]
    fn signature_serializes_as_array() {
        let d = DimensionSignature::new(2, 3, 2, 1).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, "[2,3,2,1]");
        let back: DimensionSignature = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<DimensionSignature>("[1,0,2,1]").is_err());
    }

    #[test]
    fn derived_accessors() {
        let d = DimensionSignature::new(2, 3, 4, 2).unwrap();
        assert_eq!((d.alice(), d.bob(), d.ab(), d.d()), (6, 8, 12, 3));
        assert!((d.p() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn pure_state_requires_unit_norm() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let amps = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert!(PureState::new(dims, amps.clone()).is_err());
        assert!(PureState::normalized(dims, amps).is_ok());
        assert!(PureState::normalized(dims, vec![C64::new(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn density_validation() {
        let dims = DimensionSignature::single(2).unwrap();
        assert!(DensityMatrix::new(dims, ComplexMatrix::from_real_diagonal(&[0.5, 0.5])).is_ok());
        assert!(DensityMatrix::new(dims, ComplexMatrix::from_real_diagonal(&[0.6, 0.5])).is_err());
        assert!(matches!(
            DensityMatrix::new(dims, ComplexMatrix::from_real_diagonal(&[1.1, -0.1])),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn smooth_keeps_trace_and_lifts_spectrum() {
        let rho = PureState::maximally_entangled(2).unwrap().density();
        let s = smooth(&rho, 1e-6).unwrap();
        assert!((s.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!(s.min_eigenvalue().unwrap() >= 2.5e-7 * (1.0 - 1e-9));
    }

    #[test]
    fn smooth_fixes_maximally_mixed() {
        let dims = DimensionSignature::bipartite(2, 3).unwrap();
        let mixed = DensityMatrix::maximally_mixed(dims);
        let s = smooth(&mixed, 0.5).unwrap();
        assert!((s.matrix() - mixed.matrix()).max_abs() < 1e-16);
        assert!(smooth(&mixed, 0.0).is_err());
        assert!(smooth(&mixed, 1.0).is_err());
    }

    #[test]
    fn marginals_of_bell_state() {
        let rho = PureState::maximally_entangled(2).unwrap().density();
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!((&rho.alice_marginal() - &half).max_abs() < 1e-15);
        assert!((&rho.bob_marginal() - &half).max_abs() < 1e-15);
    }
}
