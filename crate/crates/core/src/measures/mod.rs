//! Entropies and entanglement measures, in nats.

mod ree;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use ree::{ree_bruteforce, ReeOptions, ReeResult, SeparableEnsemble, MAX_BRUTEFORCE_DIM};

use crate::error::{Error, Result};
use crate::linalg::{eigh, kron, ComplexMatrix, C64};
use crate::states::{schmidt, DensityMatrix, PureState, SchmidtDecomposition};

/// Eigenvalues at or below this count as zero when testing supports.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Default floor κ in (1 − κ)σ₀ + κ·I/D used by the surrogate.
pub const SURROGATE_FLOOR: f64 = 1e-14;

/// A real number or +∞. Serialized as a JSON number, or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }

    /// The value as an `f64`, with +∞ for the sentinel.
    pub fn value(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(ExtendedReal::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(ExtendedReal::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {t:?}"))),
        }
    }
}

/// −Σ λ ln λ over the spectrum, with 0·ln 0 = 0 and negative rounding noise
/// clipped.
pub fn spectral_entropy(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum::<f64>()
        .max(0.0)
}

/// Von Neumann entropy of a positive semidefinite matrix.
pub fn matrix_entropy(m: &ComplexMatrix) -> Result<f64> {
    Ok(spectral_entropy(&eigh(m)?.eigenvalues))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    matrix_entropy(rho.matrix())
}

/// D(ρ‖σ) = Tr ρ ln ρ − Tr ρ ln σ.
///
/// +∞ when an eigenvector of ρ with eigenvalue above 1e-12 puts more than
/// 1e-12 of its weight on the null space of σ (eigenvalues ≤ 1e-12);
/// otherwise ln σ is taken on its support only.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtendedReal> {
    if rho.dims() != sigma.dims() {
        return Err(Error::Shape("relative entropy of states with different signatures".into()));
    }
    relative_entropy_matrices(rho.matrix(), sigma.matrix())
}

pub(crate) fn relative_entropy_matrices(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<ExtendedReal> {
    let er = eigh(rho)?;
    let es = eigh(sigma)?;
    let null: Vec<Vec<C64>> = (0..es.dim())
        .filter(|&j| es.eigenvalues[j] <= SUPPORT_THRESHOLD)
        .map(|j| es.eigenvector(j))
        .collect();
    if !null.is_empty() {
        for i in 0..er.dim() {
            if er.eigenvalues[i] <= SUPPORT_THRESHOLD {
                continue;
            }
            let u = er.eigenvector(i);
            let leak: f64 = null
                .iter()
                .map(|v| v.iter().zip(&u).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr())
                .sum();
            if leak > SUPPORT_THRESHOLD {
                return Ok(ExtendedReal::Infinite);
            }
        }
    }
    let log_sigma = es.map(|l| if l > SUPPORT_THRESHOLD { l.ln() } else { 0.0 });
    let cross = rho.trace_product(&log_sigma).re;
    let value = -spectral_entropy(&er.eigenvalues) - cross;
    Ok(ExtendedReal::Finite(value.max(0.0)))
}

/// −Σ p_n ln p_n over the Schmidt coefficients across aA|Bb.
pub fn entanglement_entropy(psi: &PureState) -> f64 {
    schmidt(psi).entropy()
}

/// D(ρ_t‖σ₀): an upper bound on the relative entropy of entanglement of ρ_t
/// since σ₀ is separable. Infinite as soon as ρ_t leaves the support of σ₀.
pub fn ree_upper_via_sigma0(rho_t: &DensityMatrix, sigma0: &DensityMatrix) -> Result<ExtendedReal> {
    relative_entropy(rho_t, sigma0)
}

/// D(ρ_t‖(1 − κ)σ₀ + κ·I/D), always finite. The floored reference is still
/// separable, so this also upper-bounds the relative entropy of entanglement.
pub fn ree_upper_floored(rho_t: &DensityMatrix, sd: &SchmidtDecomposition, kappa: f64) -> Result<f64> {
    if rho_t.dims() != sd.dims {
        return Err(Error::Shape("state and Schmidt decomposition signatures differ".into()));
    }
    let log_sigma = sd.floored_sigma0_log(kappa)?;
    let cross = rho_t.matrix().trace_product(&log_sigma).re;
    Ok(-von_neumann_entropy(rho_t)? - cross)
}

/// I(aA;Bb) = S(ρ_aA) + S(ρ_Bb) − S(ρ).
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    let sa = matrix_entropy(&rho.alice_marginal())?;
    let sb = matrix_entropy(&rho.bob_marginal())?;
    let s = von_neumann_entropy(rho)?;
    Ok(sa + sb - s)
}

/// ρ_aA ⊗ ρ_Bb as a state with the same signature.
pub fn product_of_marginals(rho: &DensityMatrix) -> DensityMatrix {
    let m = kron(&rho.alice_marginal(), &rho.bob_marginal());
    DensityMatrix::from_parts(rho.dims(), m.hermitian_part())
}
