use std::cmp::Ordering;

use super::{DensityMatrix, DimensionSignature, PureState};
use crate::error::{Error, Result};
use crate::linalg::{eigh, kron_vec, ComplexMatrix, C64, ZERO};

/// Schmidt coefficients below this are dropped.
pub const SCHMIDT_CUTOFF: f64 = 1e-12;

/// Coefficients closer than this are treated as tied when ordering.
const TIE_TOLERANCE: f64 = 1e-12;

/// |Ψ⟩ = Σ_n √p_n |φ_n⟩_aA |ψ_n⟩_Bb across the aA|Bb cut.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub dims: DimensionSignature,
    /// Nonincreasing, summing to one.
    pub coefficients: Vec<f64>,
    pub left: Vec<Vec<C64>>,
    pub right: Vec<Vec<C64>>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// −Σ p_n ln p_n
    pub fn entropy(&self) -> f64 {
        self.coefficients
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }

    /// |φ_n⟩ ⊗ |ψ_n⟩
    pub fn product_vector(&self, n: usize) -> Vec<C64> {
        kron_vec(&self.left[n], &self.right[n])
    }

    pub fn reconstruct(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.dims.total()];
        for n in 0..self.rank() {
            let s = self.coefficients[n].sqrt();
            for (o, v) in out.iter_mut().zip(self.product_vector(n)) {
                *o += v * s;
            }
        }
        out
    }

    /// ln((1 − κ)σ₀ + κ·I/D), built from the known spectral decomposition of
    /// σ₀ so that the κ/D eigenvalues are exact.
    pub fn floored_sigma0_log(&self, kappa: f64) -> Result<ComplexMatrix> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::InvalidArgument(format!("floor {kappa} not in (0, 1)")));
        }
        let total = self.dims.total();
        let background = kappa / total as f64;
        let ln_bg = background.ln();
        let mut out = ComplexMatrix::identity(total).scale_real(ln_bg);
        for n in 0..self.rank() {
            let v = self.product_vector(n);
            let shift = ((1.0 - kappa) * self.coefficients[n] + background).ln() - ln_bg;
            out.axpy(C64::new(shift, 0.0), &ComplexMatrix::outer(&v));
        }
        Ok(out)
    }
}

fn lexicographic(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Multiplies `v` by the phase that makes its first non-negligible entry real
/// positive; returns that phase.
fn fix_phase(v: &mut [C64]) -> C64 {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() > 1e-8 * scale) {
        Some(&z) => {
            let phase = z.conj() / z.norm();
            v.iter_mut().for_each(|x| *x *= phase);
            phase
        }
        None => C64::new(1.0, 0.0),
    }
}

/// Schmidt decomposition across aA|Bb via the spectrum of ρ_aA.
///
/// Ties between coefficients (within 1e-12) are broken lexicographically on
/// the phase-fixed left vectors, so σ₀ is deterministic.
pub fn schmidt(psi: &PureState) -> SchmidtDecomposition {
    let dims = psi.dims();
    let (m, n) = (dims.alice(), dims.bob());
    let amps = psi.cut_matrix();
    let reduced = ComplexMatrix::from_fn(m, |i, k| (0..n).map(|j| amps[i][j] * amps[k][j].conj()).sum());
    let eig = eigh(&reduced).expect("reduced state of a finite vector is Hermitian and finite");

    let mut terms: Vec<(f64, Vec<C64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= SCHMIDT_CUTOFF)
        .map(|(k, &p)| {
            let mut phi = eig.eigenvector(k);
            fix_phase(&mut phi);
            (p, phi)
        })
        .collect();

    // eigenvalues arrive descending; reorder tied runs lexicographically
    let mut start = 0;
    while start < terms.len() {
        let mut end = start + 1;
        while end < terms.len() && terms[start].0 - terms[end].0 <= TIE_TOLERANCE {
            end += 1;
        }
        terms[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
        start = end;
    }

    let total: f64 = terms.iter().map(|t| t.0).sum();
    let mut coefficients = Vec::with_capacity(terms.len());
    let mut left = Vec::with_capacity(terms.len());
    let mut right: Vec<Vec<C64>> = Vec::with_capacity(terms.len());
    for (p, phi) in terms {
        // ψ_n ∝ φ_n† M, then re-orthogonalized against the larger terms
        let mut psi_n: Vec<C64> = (0..n)
            .map(|j| (0..m).map(|i| phi[i].conj() * amps[i][j]).sum())
            .collect();
        for prev in &right {
            let overlap: C64 = prev.iter().zip(&psi_n).map(|(a, b)| a.conj() * b).sum();
            psi_n.iter_mut().zip(prev).for_each(|(x, y)| *x -= overlap * y);
        }
        let norm = psi_n.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        psi_n.iter_mut().for_each(|z| *z /= norm);
        coefficients.push(p / total);
        left.push(phi);
        right.push(psi_n);
    }

    SchmidtDecomposition {
        dims,
        coefficients,
        left,
        right,
    }
}

/// σ₀ = Σ_n p_n |φ_n ψ_n⟩⟨φ_n ψ_n|, separable by construction.
pub fn sigma0(sd: &SchmidtDecomposition) -> DensityMatrix {
    let mut m = ComplexMatrix::zeros(sd.dims.total());
    for n in 0..sd.rank() {
        m.axpy(
            C64::new(sd.coefficients[n], 0.0),
            &ComplexMatrix::outer(&sd.product_vector(n)),
        );
    }
    DensityMatrix::from_parts(sd.dims, m)
}

#[derive(Clone, Debug)]
pub struct Proposition1Witness {
    /// μ with σ₀ = ρ/d + (1 − 1/d) μ.
    pub mu: DensityMatrix,
    /// Smallest eigenvalue of dσ₀ − ρ.
    pub min_eigenvalue: f64,
}

/// Splits σ₀ as a mixture of ρ (weight 1/d) and a state μ.
pub fn proposition1_witness(rho: &DensityMatrix, sigma: &DensityMatrix, d: usize) -> Result<Proposition1Witness> {
    if d <= 1 {
        return Err(Error::DegenerateCut);
    }
    if rho.dims() != sigma.dims() {
        return Err(Error::Shape("rho and sigma signatures differ".into()));
    }
    let df = d as f64;
    let z = &sigma.matrix().scale_real(df) - rho.matrix();
    let min_eigenvalue = eigh(&z)?.min();
    let mu = (&sigma.matrix().scale_real(1.0) - &rho.matrix().scale_real(1.0 / df))
        .scale_real(1.0 / (1.0 - 1.0 / df))
        .hermitian_part();
    Ok(Proposition1Witness {
        mu: DensityMatrix::from_parts(rho.dims(), mu),
        min_eigenvalue,
    })
}
