//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot a_pq with a diagonal
//! unitary, then applies the classical real Jacobi rotation to the resulting
//! real symmetric 2x2 block. Sweeps stop once the off-diagonal Frobenius mass
//! drops below `1e-14 · ‖M‖_F`.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const REL_TOL: f64 = 1e-14;

/// Spectral decomposition M = U Λ U† with eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column j is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().unwrap_or(&0.0)
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.first().unwrap_or(&0.0)
    }

    pub fn eigenvector(&self, j: usize) -> Vec<C64> {
        self.eigenvectors.column(j)
    }

    /// U f(Λ) U†
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.assemble(&values)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.assemble(&self.eigenvalues)
    }

    fn assemble(&self, values: &[f64]) -> ComplexMatrix {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for (k, &v) in values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for i in 0..n {
                let uik = u[(i, k)] * v;
                if uik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += uik * u[(j, k)].conj();
                }
            }
        }
        out
    }
}

fn off_diagonal_mass(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of the Hermitian part (M + M†)/2 of `m`.
pub fn eigh(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = REL_TOL * a.frobenius_norm();

    let mut converged = off_diagonal_mass(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = off_diagonal_mass(&a) <= threshold;
    }
    if !converged {
        return Err(Error::NumericalFailure {
            residual: off_diagonal_mass(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Zeroes a_pq with A ← J†AJ, V ← VJ.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // skip pivots that are negligible against both diagonal entries
    if g < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = apq / g;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = diag(1, conj(phase)) · [[c, s], [-s, c]] restricted to (p, q)
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = a.dim();
    // columns: A ← A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // rows: A ← J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    // V ← V J
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;
    use crate::states::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_reconstructs(m: &ComplexMatrix) {
        let e = eigh(m).unwrap();
        let err = operator_norm(&(&e.reconstruct() - m));
        assert!(
            err <= 1e-10 * operator_norm(m).max(1.0),
            "reconstruction error {err:e}"
        );
        let u = &e.eigenvectors;
        let gram = u.adjoint().matmul(u);
        assert!((&gram - &ComplexMatrix::identity(m.dim())).max_abs() < 1e-10);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eigh(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn pauli_z_is_already_diagonal() {
        let e = eigh(&ComplexMatrix::from_real_diagonal(&[1.0, -1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, -1.0]);
    }

    #[test]
    fn descending_order_of_unsorted_diagonal() {
        let e = eigh(&ComplexMatrix::from_real_diagonal(&[-2.0, 5.0, 0.5])).unwrap();
        assert_eq!(e.eigenvalues, vec![5.0, 0.5, -2.0]);
    }

    #[test]
    fn random_hermitian_seed_42_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = sample::ginibre(&mut rng, 8);
        assert_reconstructs(&g.hermitian_part());
    }

    #[test]
    fn degenerate_and_zero_matrices() {
        assert_reconstructs(&ComplexMatrix::zeros(4));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = sample::complex_gaussian_vector(&mut rng, 5);
        // rank one: four-fold degenerate zero eigenvalue
        assert_reconstructs(&ComplexMatrix::outer(&v));
    }

    #[test]
    fn dimension_64_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let g = sample::ginibre(&mut rng, 64);
        assert_reconstructs(&g.hermitian_part());
    }
}
