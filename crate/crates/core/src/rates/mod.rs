//! Entangling-rate estimators and the bounds they are compared against.

mod inequalities;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use inequalities::{
    bravyi_lemma1_check, h_term, instance_xy, instance_xy_with, kittaneh_check, l_term, proposition1_result,
    small_incremental_mixing_check, BravyiCheck,
};

use crate::dynamics::{auto_steps, evolve, Evolution, LindbladGenerator};
use crate::error::{Error, Result};
use crate::linalg::{kron, matrix_log_on_support, ComplexMatrix};
use crate::measures::{
    entanglement_entropy, matrix_entropy, ree_bruteforce, ree_upper_floored, von_neumann_entropy, ReeOptions,
    SeparableEnsemble, SURROGATE_FLOOR,
};
use crate::states::{schmidt, sigma0, smooth, DensityMatrix, PureState, DEFAULT_ETA};

/// Trace drift required of trajectories used for finite differences.
pub const FD_TRACE_DRIFT: f64 = 1e-10;
/// Floor of the separable warm start handed to the brute-force oracle.
pub const BRUTEFORCE_FLOOR: f64 = 1e-9;

/// 4(‖H‖ + 86 Σ‖L_α‖²) ln d
pub fn theorem2_bound(gen: &LindbladGenerator, d: usize) -> f64 {
    theorem2_formula(gen.hamiltonian_norm(), gen.dissipator_weight(), d)
}

pub fn theorem2_formula(h_norm: f64, dissipator_weight: f64, d: usize) -> f64 {
    4.0 * (h_norm + 86.0 * dissipator_weight) * (d as f64).ln()
}

/// 4(2‖H‖ + 129 Σ‖L_α‖²)(ln d_A + ln d_B)
pub fn theorem3_bound(gen: &LindbladGenerator, d_a: usize, d_b: usize) -> f64 {
    theorem3_formula(gen.hamiltonian_norm(), gen.dissipator_weight(), d_a, d_b)
}

pub fn theorem3_formula(h_norm: f64, dissipator_weight: f64, d_a: usize, d_b: usize) -> f64 {
    4.0 * (2.0 * h_norm + 129.0 * dissipator_weight) * ((d_a as f64).ln() + (d_b as f64).ln())
}

/// 8‖H‖ ln d, the earlier unitary constant; reported only.
pub fn unitary_literature_bound(gen: &LindbladGenerator, d: usize) -> f64 {
    8.0 * gen.hamiltonian_norm() * (d as f64).ln()
}

/// Which measure supplies E(ρ(Δt)) in [`entangling_rate_fd`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMeasure {
    /// D(ρ(Δt)‖σ₀) with the floored σ₀.
    Surrogate,
    /// Brute-force separable minimization (total dimension ≤ 16).
    Bruteforce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityFamily {
    Prop1,
    HTerm,
    LTerm,
    Mixing,
    Kittaneh,
    Theorem2,
    Theorem3,
    BravyiLemma1,
    Axioms,
}

impl InequalityFamily {
    pub const ALL: [InequalityFamily; 9] = [
        InequalityFamily::Prop1,
        InequalityFamily::HTerm,
        InequalityFamily::LTerm,
        InequalityFamily::Mixing,
        InequalityFamily::Kittaneh,
        InequalityFamily::Theorem2,
        InequalityFamily::Theorem3,
        InequalityFamily::BravyiLemma1,
        InequalityFamily::Axioms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InequalityFamily::Prop1 => "prop1",
            InequalityFamily::HTerm => "h_term",
            InequalityFamily::LTerm => "l_term",
            InequalityFamily::Mixing => "mixing",
            InequalityFamily::Kittaneh => "kittaneh",
            InequalityFamily::Theorem2 => "theorem2",
            InequalityFamily::Theorem3 => "theorem3",
            InequalityFamily::BravyiLemma1 => "bravyi_lemma1",
            InequalityFamily::Axioms => "axioms",
        }
    }
}

impl fmt::Display for InequalityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InequalityFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InequalityFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown inequality family {s:?}")))
    }
}

/// One evaluated inequality lhs ≤ rhs. `margin` is rhs − lhs exactly as
/// computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityResult {
    pub family: InequalityFamily,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Auxiliary quantities (tighter bounds, sub-checks, ratios).
    #[serde(default)]
    pub details: BTreeMap<String, f64>,
}

impl InequalityResult {
    pub fn new(family: InequalityFamily, lhs: f64, rhs: f64) -> Self {
        Self {
            family,
            lhs,
            rhs,
            margin: rhs - lhs,
            details: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    /// lhs/rhs, the fraction of the bound used.
    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 {
            if self.lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Rates and bounds for one (Ψ, ℒ, Δt) instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub dims: [usize; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub measure: RateMeasure,
    pub delta_t: f64,
    pub eta: f64,
    /// E(Ψ), the entanglement entropy at t = 0.
    pub initial_entanglement: f64,
    /// (E(ρ(Δt)) − E(Ψ))/Δt with E from `measure`.
    pub gamma_fd: f64,
    /// (D(ρ(Δt)‖σ₀) − D(ρ‖σ₀))/Δt.
    pub gamma_surrogate_fd: f64,
    /// Tr(ℒ(ρ_η)(ln ρ_η − ln σ₀,η)).
    pub gamma_surrogate_analytic: f64,
    pub theorem_bound: f64,
    /// theorem_bound − max(gamma_fd, gamma_surrogate_fd).
    pub margin: f64,
    /// 8‖H‖ ln d, for comparison only.
    pub unitary_literature_bound: f64,
    pub sigma0_floor: f64,
    pub steps: usize,
    pub trace_drift: f64,
}

/// ρ(Δt) with a step count whose trace drift is below [`FD_TRACE_DRIFT`].
fn evolve_for_fd(gen: &LindbladGenerator, rho: &DensityMatrix, dt: f64) -> Result<Evolution> {
    let mut steps = auto_steps(gen, dt);
    for _ in 0..4 {
        match evolve(gen, rho, dt, steps) {
            Ok(ev) if ev.trace_drift < FD_TRACE_DRIFT => return Ok(ev),
            Ok(ev) => steps = ev.steps * 4,
            Err(Error::Integration { suggested_steps, .. }) => steps = suggested_steps,
            Err(e) => return Err(e),
        }
    }
    let ev = evolve(gen, rho, dt, steps)?;
    if ev.trace_drift >= FD_TRACE_DRIFT {
        return Err(Error::Integration {
            steps,
            trace_drift: ev.trace_drift,
            min_eigenvalue: ev.min_eigenvalue,
            suggested_steps: steps * 4,
        });
    }
    Ok(ev)
}

#[derive(Clone, Debug)]
pub struct RateOptions {
    pub eta: f64,
    /// κ in (1 − κ)σ₀ + κ·I/D.
    pub sigma0_floor: f64,
    pub bruteforce: ReeOptions,
    pub seed: Option<u64>,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            sigma0_floor: SURROGATE_FLOOR,
            bruteforce: ReeOptions {
                restarts: 2,
                ..ReeOptions::default()
            },
            seed: None,
        }
    }
}

/// Finite-difference entangling rate together with the surrogate routes and
/// the bound 4(‖H‖ + 86Σ‖L_α‖²) ln d.
///
/// σ₀ has rank at most d inside a dA·dB space, so D(ρ(Δt)‖σ₀) is infinite as
/// soon as ρ(Δt) leaves its support; the surrogate therefore uses the
/// separable (1 − κ)σ₀ + κ·I/D, which still upper-bounds the REE and agrees
/// with E(Ψ) at t = 0 up to O(κ).
pub fn entangling_rate_fd(
    psi: &PureState,
    gen: &LindbladGenerator,
    delta_t: f64,
    measure: RateMeasure,
    opts: &RateOptions,
) -> Result<RateReport> {
    if !(1e-6..=1e-2).contains(&delta_t) {
        return Err(Error::InvalidArgument(format!("delta_t {delta_t} outside [1e-6, 1e-2]")));
    }
    if gen.dims() != psi.dims() {
        return Err(Error::Shape("generator and state signatures differ".into()));
    }
    let dims = psi.dims();
    let rho = psi.density();
    let sd = schmidt(psi);
    let e0 = sd.entropy();
    let ev = evolve_for_fd(gen, &rho, delta_t)?;

    let kappa = opts.sigma0_floor;
    let surrogate_0 = ree_upper_floored(&rho, &sd, kappa)?;
    let surrogate_t = ree_upper_floored(&ev.state, &sd, kappa)?;
    let gamma_surrogate_fd = (surrogate_t - surrogate_0) / delta_t;

    let e_t = match measure {
        RateMeasure::Surrogate => surrogate_t,
        RateMeasure::Bruteforce => {
            let mut bf = opts.bruteforce.clone();
            bf.warm_start = Some(SeparableEnsemble::from_sigma0(&sd, BRUTEFORCE_FLOOR));
            // the analytic floored σ₀ is itself a feasible point
            ree_bruteforce(&ev.state, &bf)?.value.min(surrogate_t)
        }
    };
    let gamma_fd = (e_t - e0) / delta_t;
    let gamma_surrogate_analytic = surrogate_derivative_analytic(psi, gen, opts.eta)?;
    let d = dims.d();
    let theorem_bound = theorem2_bound(gen, d);
    Ok(RateReport {
        dims: dims.factors(),
        seed: opts.seed,
        measure,
        delta_t,
        eta: opts.eta,
        initial_entanglement: e0,
        gamma_fd,
        gamma_surrogate_fd,
        gamma_surrogate_analytic,
        theorem_bound,
        margin: theorem_bound - gamma_fd.max(gamma_surrogate_fd),
        unitary_literature_bound: unitary_literature_bound(gen, d),
        sigma0_floor: kappa,
        steps: ev.steps,
        trace_drift: ev.trace_drift,
    })
}

fn check_eta(eta: f64) -> Result<()> {
    if !(1e-10..=1e-4).contains(&eta) {
        return Err(Error::InvalidArgument(format!("smoothing eta {eta} outside [1e-10, 1e-4]")));
    }
    Ok(())
}

/// Smoothed log of σ₀ for Ψ: ln((1 − η)σ₀ + η·I/D).
fn smoothed_sigma0_log(psi: &PureState, eta: f64) -> Result<ComplexMatrix> {
    schmidt(psi).floored_sigma0_log(eta)
}

/// Tr(ℒ(ρ_η)(ln ρ_η − ln σ₀,η)), the exact t = 0 derivative of
/// D(ρ_η(t)‖σ₀,η) along the trajectory started at ρ_η.
pub fn surrogate_derivative_analytic(psi: &PureState, gen: &LindbladGenerator, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if gen.dims() != psi.dims() {
        return Err(Error::Shape("generator and state signatures differ".into()));
    }
    if gen.is_zero() {
        return Ok(0.0);
    }
    let rho_eta = smooth(&psi.density(), eta)?;
    let log_rho = matrix_log_on_support(rho_eta.matrix(), f64::MIN_POSITIVE)?;
    let log_sigma = smoothed_sigma0_log(psi, eta)?;
    let rate = gen.apply(rho_eta.matrix());
    Ok(rate.trace_product(&(&log_rho - &log_sigma)).re)
}

/// ln(ρ_aA ⊗ I) + ln(I ⊗ ρ_Bb) for the marginals of `rho`.
fn marginal_logs(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let a = rho.alice_marginal();
    let b = rho.bob_marginal();
    let la = matrix_log_on_support(&a, f64::MIN_POSITIVE)?;
    let lb = matrix_log_on_support(&b, f64::MIN_POSITIVE)?;
    Ok(&kron(&la, &ComplexMatrix::identity(b.dim())) + &kron(&ComplexMatrix::identity(a.dim()), &lb))
}

/// −Tr(ρ̇ ln ρ_aA) − Tr(ρ̇ ln ρ_Bb) + Tr(ρ̇ ln ρ) with ρ̇ = ℒ(ρ_η), all three
/// logs taken on the smoothed state: the exact t = 0 derivative of I(aA;Bb)
/// along the trajectory started at ρ_η.
pub fn mi_derivative_analytic(psi: &PureState, gen: &LindbladGenerator, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if gen.dims() != psi.dims() {
        return Err(Error::Shape("generator and state signatures differ".into()));
    }
    if gen.is_zero() {
        return Ok(0.0);
    }
    let rho_eta = smooth(&psi.density(), eta)?;
    let log_rho = matrix_log_on_support(rho_eta.matrix(), f64::MIN_POSITIVE)?;
    let logs = &log_rho - &marginal_logs(&rho_eta)?;
    Ok(gen.apply(rho_eta.matrix()).trace_product(&logs).re)
}

/// 2g(h/2) − g(h) with g(h) = (f(h) − f(0))/h.
fn richardson(f0: f64, f_half: f64, f_full: f64, h: f64) -> f64 {
    let g_half = (f_half - f0) / (h / 2.0);
    let g_full = (f_full - f0) / h;
    2.0 * g_half - g_full
}

/// Independent finite-difference estimate of [`surrogate_derivative_analytic`]:
/// D(ρ_η(t)‖σ₀,η) evaluated along RK4 trajectories at h and h/2, Richardson
/// extrapolated.
pub fn surrogate_derivative_richardson(psi: &PureState, gen: &LindbladGenerator, eta: f64, h: f64) -> Result<f64> {
    check_eta(eta)?;
    let rho_eta = smooth(&psi.density(), eta)?;
    let s0 = smooth(&sigma0(&schmidt(psi)), eta)?;
    let log_sigma = matrix_log_on_support(s0.matrix(), f64::MIN_POSITIVE)?;
    let f = |rho: &DensityMatrix| -> Result<f64> {
        Ok(-von_neumann_entropy(rho)? - rho.matrix().trace_product(&log_sigma).re)
    };
    let f0 = f(&rho_eta)?;
    let f_half = f(&evolve_for_fd(gen, &rho_eta, h / 2.0)?.state)?;
    let f_full = f(&evolve_for_fd(gen, &rho_eta, h)?.state)?;
    Ok(richardson(f0, f_half, f_full, h))
}

/// Finite-difference counterpart of [`mi_derivative_analytic`].
pub fn mi_derivative_richardson(psi: &PureState, gen: &LindbladGenerator, eta: f64, h: f64) -> Result<f64> {
    check_eta(eta)?;
    let rho_eta = smooth(&psi.density(), eta)?;
    let f = |rho: &DensityMatrix| -> Result<f64> {
        Ok(matrix_entropy(&rho.alice_marginal())? + matrix_entropy(&rho.bob_marginal())? - von_neumann_entropy(rho)?)
    };
    let f0 = f(&rho_eta)?;
    let f_half = f(&evolve_for_fd(gen, &rho_eta, h / 2.0)?.state)?;
    let f_full = f(&evolve_for_fd(gen, &rho_eta, h)?.state)?;
    Ok(richardson(f0, f_half, f_full, h))
}

/// Mutual-information rate against its bound for one instance.
pub fn theorem3_result(psi: &PureState, gen: &LindbladGenerator, eta: f64) -> Result<InequalityResult> {
    let dims = psi.dims();
    let [_, d_a, d_b, _] = dims.factors();
    let lhs = mi_derivative_analytic(psi, gen, eta)?;
    let rhs = theorem3_bound(gen, d_a, d_b);
    Ok(InequalityResult::new(InequalityFamily::Theorem3, lhs, rhs)
        .with("initial_mutual_information", 2.0 * entanglement_entropy(psi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ONE, ZERO};
    use crate::states::{sample, DimensionSignature};

    fn random_generator(dims: DimensionSignature, seed: u64, n_l: usize) -> LindbladGenerator {
        let ab = dims.ab();
        let h = sample::random_gue_hamiltonian(ab, seed);
        let ls = (0..n_l).map(|k| sample::random_ginibre_lindblad(ab, seed + 1000 + k as u64)).collect();
        LindbladGenerator::new(dims, h, ls).unwrap()
    }

    #[test]
    fn bound_formulas() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let x = ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let h = kron(&x, &ComplexMatrix::identity(2));
        let unitary = LindbladGenerator::unitary(dims, h).unwrap();
        assert!((theorem2_bound(&unitary, 2) - 4.0 * 2f64.ln()).abs() < 1e-14);
        assert!((theorem2_bound(&unitary, 2) - 2.77259).abs() < 1e-5);
        assert!((theorem3_bound(&unitary, 2, 2) - 16.0 * 2f64.ln()).abs() < 1e-13);
        let mut l = ComplexMatrix::zeros(4);
        l[(0, 3)] = ONE;
        let damp = LindbladGenerator::new(dims, ComplexMatrix::zeros(4), vec![l]).unwrap();
        assert!((theorem2_bound(&damp, 2) - 344.0 * 2f64.ln()).abs() < 1e-12);
        assert!((theorem3_bound(&damp, 2, 2) - 1032.0 * 2f64.ln()).abs() < 1e-11);
        let zero = LindbladGenerator::zero(dims);
        assert_eq!(theorem2_bound(&zero, 2), 0.0);
        assert_eq!(theorem3_bound(&zero, 2, 2), 0.0);
    }

    #[test]
    fn zero_generator_rates_vanish() {
        let dims = DimensionSignature::bipartite(2, 3).unwrap();
        let psi = sample::random_pure(dims, 1);
        let r = entangling_rate_fd(&psi, &LindbladGenerator::zero(dims), 1e-4, RateMeasure::Surrogate, &RateOptions::default())
            .unwrap();
        assert!(r.gamma_fd.abs() < 1e-9, "{}", r.gamma_fd);
        assert!(r.gamma_surrogate_fd.abs() < 1e-9);
        assert_eq!(r.gamma_surrogate_analytic, 0.0);
        assert_eq!(r.margin, r.theorem_bound - r.gamma_fd.max(r.gamma_surrogate_fd));
    }

    #[test]
    fn report_ordering_and_bound_on_random_instance() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let psi = sample::random_pure(dims, 7);
        let gen = random_generator(dims, 7, 2);
        for dt in [1e-3, 1e-4, 1e-5] {
            let r = entangling_rate_fd(&psi, &gen, dt, RateMeasure::Surrogate, &RateOptions::default()).unwrap();
            assert!(r.gamma_fd <= r.gamma_surrogate_fd + 1e-7);
            assert!(r.gamma_surrogate_fd <= r.theorem_bound + 1e-3);
        }
    }

    #[test]
    fn unitary_routes_agree() {
        let dims = DimensionSignature::bipartite(2, 3).unwrap();
        let psi = sample::random_pure(dims, 11);
        let gen = random_generator(dims, 11, 0);
        let r = entangling_rate_fd(&psi, &gen, 1e-5, RateMeasure::Surrogate, &RateOptions::default()).unwrap();
        assert!((r.gamma_surrogate_fd - r.gamma_surrogate_analytic).abs() < 1e-3);
    }

    #[test]
    fn bruteforce_rate_respects_surrogate() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let psi = sample::random_pure(dims, 3);
        let gen = random_generator(dims, 3, 1);
        let r = entangling_rate_fd(&psi, &gen, 1e-4, RateMeasure::Bruteforce, &RateOptions::default()).unwrap();
        assert!(r.gamma_fd <= r.gamma_surrogate_fd + 1e-7);
        assert!(r.gamma_fd <= r.theorem_bound + 1e-3);
    }

    #[test]
    fn analytic_routes_match_richardson() {
        let dims = DimensionSignature::new(2, 2, 2, 1).unwrap();
        let psi = sample::random_pure(dims, 5);
        let gen = random_generator(dims, 5, 2);
        let eta = 1e-4;
        let a = surrogate_derivative_analytic(&psi, &gen, eta).unwrap();
        let f = surrogate_derivative_richardson(&psi, &gen, eta, 1e-8).unwrap();
        assert!((a - f).abs() < 1e-3, "{a} vs {f}");
        let a = mi_derivative_analytic(&psi, &gen, eta).unwrap();
        let f = mi_derivative_richardson(&psi, &gen, eta, 1e-8).unwrap();
        assert!((a - f).abs() < 1e-3, "{a} vs {f}");
    }

    #[test]
    fn local_unitary_creates_no_correlations() {
        let dims = DimensionSignature::new(2, 2, 2, 2).unwrap();
        let mut rng = sample::rng_from_seed(2);
        let a = sample::complex_gaussian_vector(&mut rng, 4);
        let b = sample::complex_gaussian_vector(&mut rng, 4);
        let psi = PureState::product(dims, &a, &b).unwrap();
        let ha = sample::gue_unit_norm(&mut rng, 2);
        let gen = LindbladGenerator::unitary(dims, kron(&ha, &ComplexMatrix::identity(2))).unwrap();
        let analytic = mi_derivative_analytic(&psi, &gen, 1e-8).unwrap();
        assert!(analytic.abs() < 1e-6, "{analytic}");
        let fd = mi_derivative_richardson(&psi, &gen, 1e-8, 1e-6).unwrap();
        assert!(fd.abs() < 1e-6, "{fd}");
    }

    #[test]
    fn theorem3_bound_ignores_ancillas() {
        let mut bounds = Vec::new();
        for (da, db) in [(1, 1), (2, 3), (3, 2)] {
            let dims = DimensionSignature::new(da, 2, 2, db).unwrap();
            let gen = random_generator(dims, 9, 2);
            let psi = sample::random_pure(dims, 9);
            let r = theorem3_result(&psi, &gen, 1e-8).unwrap();
            assert!(r.margin >= -1e-3);
            bounds.push(r.rhs);
        }
        assert!(bounds.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn eta_range_is_enforced() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let psi = sample::random_pure(dims, 1);
        let gen = random_generator(dims, 1, 0);
        assert!(surrogate_derivative_analytic(&psi, &gen, 1e-3).is_err());
        assert!(mi_derivative_analytic(&psi, &gen, 1e-12).is_err());
        let _ = C64::new(0.0, 0.0);
    }

    #[test]
    fn family_names_round_trip() {
        for f in InequalityFamily::ALL {
            assert_eq!(f.as_str().parse::<InequalityFamily>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{}\"", f.as_str()));
        }
        assert!("theorem9".parse::<InequalityFamily>().is_err());
    }
}
