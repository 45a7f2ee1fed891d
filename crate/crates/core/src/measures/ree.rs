//! Upper bounds on the relative entropy of entanglement by direct
//! minimization of D(ρ‖σ) over separable ensembles.

use rand::Rng;
use rayon::prelude::*;

use super::{spectral_entropy, SUPPORT_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{eigh, kron, ComplexMatrix, EigenDecomposition, C64, ZERO};
use crate::states::{sample, DensityMatrix, SchmidtDecomposition};

/// Largest total dimension accepted by [`ree_bruteforce`].
pub const MAX_BRUTEFORCE_DIM: usize = 16;

const GRADIENT_FLOOR: f64 = 1e-14;
const MAX_BACKTRACKS: usize = 40;
// total weight of the random terms appended to the marginal-eigenbasis start
const PAD_WEIGHT: f64 = 1e-3;

/// σ = Σ_j α_j σ_A(j) ⊗ σ_B(j) across the aA|Bb cut.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableEnsemble {
    pub weights: Vec<f64>,
    pub alice: Vec<ComplexMatrix>,
    pub bob: Vec<ComplexMatrix>,
}

impl SeparableEnsemble {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn assemble(&self) -> ComplexMatrix {
        let n = self.alice[0].dim() * self.bob[0].dim();
        let mut out = ComplexMatrix::zeros(n);
        for j in 0..self.len() {
            if self.weights[j] != 0.0 {
                out.axpy(C64::new(self.weights[j], 0.0), &kron(&self.alice[j], &self.bob[j]));
            }
        }
        out.hermitian_part()
    }

    /// Checks weights and factors and returns the assembled state.
    pub fn to_density(&self, dims: crate::states::DimensionSignature) -> Result<DensityMatrix> {
        if self.is_empty() || self.alice.len() != self.len() || self.bob.len() != self.len() {
            return Err(Error::InvalidState("ensemble lists have inconsistent lengths".into()));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidState("ensemble weights must be nonnegative".into()));
        }
        if self.alice.iter().any(|a| a.dim() != dims.alice()) || self.bob.iter().any(|b| b.dim() != dims.bob()) {
            return Err(Error::Shape("ensemble factors do not match the cut".into()));
        }
        DensityMatrix::new(dims, self.assemble())
    }

    /// (1 − κ)σ₀ + κ·I/D as an ensemble of r + 1 product terms.
    pub fn from_sigma0(sd: &SchmidtDecomposition, kappa: f64) -> Self {
        let (da, db) = (sd.dims.alice(), sd.dims.bob());
        let mut weights: Vec<f64> = sd.coefficients.iter().map(|p| (1.0 - kappa) * p).collect();
        let mut alice: Vec<ComplexMatrix> = sd.left.iter().map(|v| ComplexMatrix::outer(v)).collect();
        let mut bob: Vec<ComplexMatrix> = sd.right.iter().map(|v| ComplexMatrix::outer(v)).collect();
        if kappa > 0.0 {
            weights.push(kappa);
            alice.push(ComplexMatrix::identity(da).scale_real(1.0 / da as f64));
            bob.push(ComplexMatrix::identity(db).scale_real(1.0 / db as f64));
        }
        Self { weights, alice, bob }
    }
}

#[derive(Clone, Debug)]
pub struct ReeOptions {
    /// Number of product terms; defaults to (dim aA · dim Bb)².
    pub ensemble_size: Option<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once an iteration improves the objective by less than this.
    pub tol: f64,
    pub seed: u64,
    /// Replaces the deterministic first restart.
    pub warm_start: Option<SeparableEnsemble>,
}

impl Default for ReeOptions {
    fn default() -> Self {
        Self {
            ensemble_size: None,
            restarts: 8,
            max_iters: 500,
            tol: 1e-9,
            seed: 0,
            warm_start: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReeResult {
    pub value: f64,
    pub argmin: SeparableEnsemble,
    /// Objective reached by each restart, in restart order.
    pub restart_values: Vec<f64>,
    /// Index of the winning restart.
    pub best_restart: usize,
    pub iterations: usize,
    /// The winning run ended because no step decreased the objective, rather
    /// than by meeting the tolerance or the iteration cap.
    pub stalled: bool,
}

struct Objective<'a> {
    rho: &'a ComplexMatrix,
    support: Vec<Vec<C64>>,
    neg_entropy: f64,
}

impl<'a> Objective<'a> {
    fn new(rho: &'a ComplexMatrix) -> Result<Self> {
        let e = eigh(rho)?;
        let support = (0..e.dim())
            .filter(|&i| e.eigenvalues[i] > SUPPORT_THRESHOLD)
            .map(|i| e.eigenvector(i))
            .collect();
        Ok(Self {
            rho,
            support,
            neg_entropy: -spectral_entropy(&e.eigenvalues),
        })
    }

    /// D(ρ‖σ) under the same support convention as `relative_entropy`.
    fn value(&self, es: &EigenDecomposition) -> f64 {
        let null: Vec<usize> = (0..es.dim()).filter(|&j| es.eigenvalues[j] <= SUPPORT_THRESHOLD).collect();
        for u in &self.support {
            let leak: f64 = null
                .iter()
                .map(|&j| {
                    (0..es.dim())
                        .map(|k| es.eigenvectors[(k, j)].conj() * u[k])
                        .sum::<C64>()
                        .norm_sqr()
                })
                .sum();
            if leak > SUPPORT_THRESHOLD {
                return f64::INFINITY;
            }
        }
        let log_sigma = es.map(|l| if l > SUPPORT_THRESHOLD { l.ln() } else { 0.0 });
        (self.neg_entropy - self.rho.trace_product(&log_sigma).re).max(0.0)
    }

    fn evaluate(&self, ens: &SeparableEnsemble) -> f64 {
        match eigh(&ens.assemble()) {
            Ok(es) => self.value(&es),
            Err(_) => f64::INFINITY,
        }
    }

    /// ∂/∂σ of −Tr ρ ln σ: −U (Γ ∘ U†ρU) U† with Γ the divided differences
    /// of ln on the spectrum.
    fn gradient(&self, es: &EigenDecomposition) -> ComplexMatrix {
        let n = es.dim();
        let u = &es.eigenvectors;
        let r = u.adjoint().matmul(self.rho).matmul(u);
        let mu: Vec<f64> = es.eigenvalues.iter().map(|&l| l.max(GRADIENT_FLOOR)).collect();
        let inner = ComplexMatrix::from_fn(n, |i, j| {
            let gamma = if (mu[i] - mu[j]).abs() <= 1e-12 * mu[i].max(mu[j]) {
                2.0 / (mu[i] + mu[j])
            } else {
                (mu[i].ln() - mu[j].ln()) / (mu[i] - mu[j])
            };
            -r[(i, j)] * gamma
        });
        u.matmul(&inner).matmul(&u.adjoint())
    }
}

/// Tr_B[G (I ⊗ b)]
fn contract_bob(g: &ComplexMatrix, b: &ComplexMatrix, da: usize) -> ComplexMatrix {
    let db = b.dim();
    ComplexMatrix::from_fn(da, |i, k| {
        let mut s = ZERO;
        for j in 0..db {
            for l in 0..db {
                s += g[(i * db + j, k * db + l)] * b[(l, j)];
            }
        }
        s
    })
}

/// Tr_A[G (a ⊗ I)]
fn contract_alice(g: &ComplexMatrix, a: &ComplexMatrix, db: usize) -> ComplexMatrix {
    let da = a.dim();
    ComplexMatrix::from_fn(db, |j, l| {
        let mut s = ZERO;
        for i in 0..da {
            for k in 0..da {
                s += g[(i * db + j, k * db + l)] * a[(k, i)];
            }
        }
        s
    })
}

/// Hermitize, clip the spectrum at zero, renormalize the trace.
fn project(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let e = eigh(m).ok()?;
    let total: f64 = e.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    if !(total > 0.0) {
        return None;
    }
    Some(e.map(|l| l.max(0.0) / total).hermitian_part())
}

fn traceless(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let shift = m.trace() / n as f64;
    let mut out = m.hermitian_part();
    for i in 0..n {
        out[(i, i)] -= shift;
    }
    out
}

struct Run {
    value: f64,
    ensemble: SeparableEnsemble,
    iterations: usize,
    stalled: bool,
}

fn normalized(mut w: Vec<f64>) -> Option<Vec<f64>> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= total);
    Some(w)
}

/// K A K† / Tr with K = I + ε(M/Tr(AM) − I); ε = 1 is the full
/// multiplicative fixed-point step.
fn dilute(a: &ComplexMatrix, m: &ComplexMatrix, eps: f64) -> Option<ComplexMatrix> {
    let t = a.trace_product(m).re;
    if !(t > 0.0) {
        return Some(a.clone());
    }
    let n = a.dim();
    let mut k = m.scale_real(eps / t);
    for i in 0..n {
        k[(i, i)] += C64::new(1.0 - eps, 0.0);
    }
    let out = k.matmul(a).matmul(&k.adjoint());
    let tr = out.trace().re;
    if !(tr > 0.0) || !tr.is_finite() {
        return None;
    }
    Some(out.scale_real(1.0 / tr).hermitian_part())
}

fn optimize(obj: &Objective, mut ens: SeparableEnsemble, opts: &ReeOptions) -> Run {
    let (da, db) = (ens.alice[0].dim(), ens.bob[0].dim());
    let mut value = obj.evaluate(&ens);
    let mut weight_step = 1.0;
    let mut factor_step = 0.1;
    let mut dilution = 1.0;
    let mut stalled = false;
    let mut iterations = 0;

    while iterations < opts.max_iters && value.is_finite() {
        iterations += 1;
        let start = value;

        // weights: the fixed point α_j ← α_j Tr(−G σ_A(j)⊗σ_B(j)) keeps the
        // simplex since Tr(−Gσ) = Tr ρ = 1; exponentiated gradient otherwise
        let es = match eigh(&ens.assemble()) {
            Ok(es) => es,
            Err(_) => break,
        };
        let g = obj.gradient(&es);
        let grads: Vec<f64> = (0..ens.len())
            .map(|j| kron(&ens.alice[j], &ens.bob[j]).trace_product(&g).re)
            .collect();
        let mut weights_moved = false;
        let fixed_point = normalized(ens.weights.iter().zip(&grads).map(|(a, gj)| a * (-gj).max(0.0)).collect());
        if let Some(w) = fixed_point {
            let trial = SeparableEnsemble {
                weights: w,
                alice: ens.alice.clone(),
                bob: ens.bob.clone(),
            };
            let v = obj.evaluate(&trial);
            if v < value {
                ens = trial;
                value = v;
                weights_moved = true;
            }
        }
        if !weights_moved {
            let gmin = grads.iter().cloned().fold(f64::INFINITY, f64::min);
            let spread = grads.iter().map(|x| x - gmin).fold(0.0, f64::max).max(1e-300);
            for _ in 0..MAX_BACKTRACKS {
                let tau = weight_step / spread;
                let w = normalized(
                    ens.weights
                        .iter()
                        .zip(&grads)
                        .map(|(a, gj)| a * (-tau * (gj - gmin)).exp())
                        .collect(),
                );
                if let Some(w) = w {
                    let trial = SeparableEnsemble {
                        weights: w,
                        alice: ens.alice.clone(),
                        bob: ens.bob.clone(),
                    };
                    let v = obj.evaluate(&trial);
                    if v < value {
                        ens = trial;
                        value = v;
                        weight_step = (weight_step * 2.0).min(1e3);
                        weights_moved = true;
                        break;
                    }
                }
                weight_step *= 0.5;
            }
        }

        // factors: diluted multiplicative step, projected gradient as fallback
        let es = match eigh(&ens.assemble()) {
            Ok(es) => es,
            Err(_) => break,
        };
        let g = obj.gradient(&es);
        let pull_a: Vec<ComplexMatrix> = (0..ens.len())
            .map(|j| contract_bob(&g, &ens.bob[j], da).scale_real(-1.0).hermitian_part())
            .collect();
        let pull_b: Vec<ComplexMatrix> = (0..ens.len())
            .map(|j| contract_alice(&g, &ens.alice[j], db).scale_real(-1.0).hermitian_part())
            .collect();
        let mut factors_moved = false;
        let mut eps = dilution;
        while eps > 1e-6 {
            let alice: Option<Vec<ComplexMatrix>> =
                ens.alice.iter().zip(&pull_a).map(|(a, m)| dilute(a, m, eps)).collect();
            let bob: Option<Vec<ComplexMatrix>> = ens.bob.iter().zip(&pull_b).map(|(b, m)| dilute(b, m, eps)).collect();
            if let (Some(alice), Some(bob)) = (alice, bob) {
                let trial = SeparableEnsemble {
                    weights: ens.weights.clone(),
                    alice,
                    bob,
                };
                let v = obj.evaluate(&trial);
                if v < value {
                    ens = trial;
                    value = v;
                    dilution = (eps * 2.0).min(1.0);
                    factors_moved = true;
                    break;
                }
            }
            eps *= 0.5;
        }
        if !factors_moved {
            dilution = 1.0;
            let dirs_a: Vec<ComplexMatrix> = pull_a.iter().map(|m| traceless(&m.scale_real(-1.0))).collect();
            let dirs_b: Vec<ComplexMatrix> = pull_b.iter().map(|m| traceless(&m.scale_real(-1.0))).collect();
            let scale = dirs_a
                .iter()
                .chain(&dirs_b)
                .map(|d| d.max_abs())
                .fold(0.0, f64::max)
                .max(1e-300);
            for _ in 0..MAX_BACKTRACKS {
                let s = factor_step / scale;
                let step = |m: &ComplexMatrix, d: &ComplexMatrix| {
                    let mut x = m.clone();
                    x.axpy(C64::new(-s, 0.0), d);
                    project(&x)
                };
                let alice: Option<Vec<ComplexMatrix>> =
                    ens.alice.iter().zip(&dirs_a).map(|(m, d)| step(m, d)).collect();
                let bob: Option<Vec<ComplexMatrix>> = ens.bob.iter().zip(&dirs_b).map(|(m, d)| step(m, d)).collect();
                if let (Some(alice), Some(bob)) = (alice, bob) {
                    let trial = SeparableEnsemble {
                        weights: ens.weights.clone(),
                        alice,
                        bob,
                    };
                    let v = obj.evaluate(&trial);
                    if v < value {
                        ens = trial;
                        value = v;
                        factor_step = (factor_step * 2.0).min(1.0);
                        factors_moved = true;
                        break;
                    }
                }
                factor_step *= 0.5;
            }
        }

        if !weights_moved && !factors_moved {
            stalled = true;
            break;
        }
        if start - value < opts.tol {
            break;
        }
    }
    Run {
        value,
        ensemble: ens,
        iterations,
        stalled,
    }
}

/// Product terms |a_i⟩⟨a_i| ⊗ |b_k⟩⟨b_k| over the eigenbases of the two
/// marginals, weighted by λ_i μ_k, padded with random terms of small weight.
fn marginal_start(rho: &DensityMatrix, size: usize, rng: &mut impl Rng) -> SeparableEnsemble {
    let ea = eigh(&rho.alice_marginal()).expect("marginal is Hermitian");
    let eb = eigh(&rho.bob_marginal()).expect("marginal is Hermitian");
    let (da, db) = (ea.dim(), eb.dim());
    let mut ens = SeparableEnsemble {
        weights: Vec::new(),
        alice: Vec::new(),
        bob: Vec::new(),
    };
    let base = size.min(da * db);
    let pad = size - base;
    let pad_weight = if pad > 0 { PAD_WEIGHT } else { 0.0 };
    for i in 0..da {
        for k in 0..db {
            if ens.len() == base {
                break;
            }
            let w = ea.eigenvalues[i].max(0.0) * eb.eigenvalues[k].max(0.0);
            ens.weights.push((1.0 - pad_weight) * w + 1e-6);
            ens.alice.push(ComplexMatrix::outer(&ea.eigenvector(i)));
            ens.bob.push(ComplexMatrix::outer(&eb.eigenvector(k)));
        }
    }
    for _ in 0..pad {
        ens.weights.push(pad_weight / pad as f64);
        ens.alice.push(sample::density_matrix(rng, da));
        ens.bob.push(sample::density_matrix(rng, db));
    }
    let total: f64 = ens.weights.iter().sum();
    ens.weights.iter_mut().for_each(|w| *w /= total);
    ens
}

/// ρ_A ⊗ ρ_B as an ensemble over the marginal eigenbases, zero weights
/// dropped; its objective is the mutual information.
fn marginal_product(rho: &DensityMatrix) -> SeparableEnsemble {
    let ea = eigh(&rho.alice_marginal()).expect("marginal is Hermitian");
    let eb = eigh(&rho.bob_marginal()).expect("marginal is Hermitian");
    let mut ens = SeparableEnsemble {
        weights: Vec::new(),
        alice: Vec::new(),
        bob: Vec::new(),
    };
    for i in 0..ea.dim() {
        for k in 0..eb.dim() {
            let w = ea.eigenvalues[i] * eb.eigenvalues[k];
            if w > SUPPORT_THRESHOLD {
                ens.weights.push(w);
                ens.alice.push(ComplexMatrix::outer(&ea.eigenvector(i)));
                ens.bob.push(ComplexMatrix::outer(&eb.eigenvector(k)));
            }
        }
    }
    let total: f64 = ens.weights.iter().sum();
    ens.weights.iter_mut().for_each(|w| *w /= total);
    ens
}

fn random_start(da: usize, db: usize, size: usize, rng: &mut impl Rng) -> SeparableEnsemble {
    let mut weights: Vec<f64> = (0..size).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    SeparableEnsemble {
        weights,
        alice: (0..size).map(|_| sample::density_matrix(rng, da)).collect(),
        bob: (0..size).map(|_| sample::density_matrix(rng, db)).collect(),
    }
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Minimizes D(ρ‖σ) over σ = Σ_j α_j σ_A(j) ⊗ σ_B(j). Restart 0 starts from
/// the marginal eigenbases (or `warm_start`), the others from random
/// ensembles; every run is monotone, so `value` is a genuine upper bound on
/// the relative entropy of entanglement no larger than any starting point.
pub fn ree_bruteforce(rho: &DensityMatrix, opts: &ReeOptions) -> Result<ReeResult> {
    let dims = rho.dims();
    if dims.total() > MAX_BRUTEFORCE_DIM {
        return Err(Error::InvalidArgument(format!(
            "brute-force REE limited to total dimension {MAX_BRUTEFORCE_DIM}, got {}",
            dims.total()
        )));
    }
    if opts.restarts == 0 || opts.max_iters == 0 {
        return Err(Error::InvalidArgument("restarts and max_iters must be positive".into()));
    }
    let (da, db) = (dims.alice(), dims.bob());
    let size = opts.ensemble_size.unwrap_or((da * db) * (da * db)).max(1);
    if let Some(w) = &opts.warm_start {
        w.to_density(dims)?;
    }
    let obj = Objective::new(rho.matrix())?;

    let runs: Vec<Run> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = sample::rng_from_seed(restart_seed(opts.seed, r));
            let start = match (r, &opts.warm_start) {
                (0, Some(w)) => w.clone(),
                (0, None) => marginal_start(rho, size, &mut rng),
                _ => random_start(da, db, size, &mut rng),
            };
            let run = optimize(&obj, start, opts);
            if r > 0 || opts.warm_start.is_some() {
                return run;
            }
            // the floor and padding of the marginal start cost up to ~1e-6 on
            // product states, which ρ_A ⊗ ρ_B itself matches exactly
            let product = marginal_product(rho);
            let v = obj.evaluate(&product);
            if v < run.value {
                Run {
                    value: v,
                    ensemble: product,
                    iterations: run.iterations,
                    stalled: false,
                }
            } else {
                run
            }
        })
        .collect();

    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.value < runs[best].value {
            best = i;
        }
    }
    let restart_values = runs.iter().map(|r| r.value).collect();
    let winner = runs.into_iter().nth(best).expect("at least one restart");
    Ok(ReeResult {
        value: winner.value,
        argmin: winner.ensemble,
        restart_values,
        best_restart: best,
        iterations: winner.iterations,
        stalled: winner.stalled,
    })
}
