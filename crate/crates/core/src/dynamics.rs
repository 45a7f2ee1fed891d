//! GKSL generators and fixed-step RK4 time evolution.

use crate::error::{Error, Result};
use crate::linalg::{eigh, operator_norm, tensor, trace_norm, ComplexMatrix, C64, I};
use crate::states::{DensityMatrix, DimensionSignature};

/// Trace drift allowed by [`evolve`].
pub const TRACE_DRIFT_LIMIT: f64 = 1e-8;
/// Most negative eigenvalue allowed by [`evolve`].
pub const NEGATIVITY_LIMIT: f64 = 1e-8;
/// h · (2‖H‖ + 2Σ‖L‖²) targeted by [`auto_steps`].
const STEP_SCALE: f64 = 1e-3;

/// ℒ(ρ) = −i[H, ρ] + Σ_α (L_α ρ L_α† − ½{L_α†L_α, ρ}) with H and L_α acting
/// on AB and embedded as I_a ⊗ (·) ⊗ I_b.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladGenerator {
    dims: DimensionSignature,
    h: ComplexMatrix,
    ls: Vec<ComplexMatrix>,
    // embedded forms
    drift: ComplexMatrix,
    jumps: Vec<(ComplexMatrix, ComplexMatrix)>,
}

impl LindbladGenerator {
    pub fn new(dims: DimensionSignature, h: ComplexMatrix, ls: Vec<ComplexMatrix>) -> Result<Self> {
        let ab = dims.ab();
        if h.dim() != ab || ls.iter().any(|l| l.dim() != ab) {
            return Err(Error::Shape(format!("generator operators must be {ab}x{ab}")));
        }
        if !h.is_finite() || ls.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("generator operators must be finite".into()));
        }
        let scale = h.max_abs().max(1.0);
        if h.hermiticity_defect() > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "H is not Hermitian (defect {:e})",
                h.hermiticity_defect()
            )));
        }
        let embed = |m: &ComplexMatrix| embed_ab(dims, m).expect("dimension checked above");
        let h_full = embed(&h.hermitian_part());
        // G = −iH − ½ Σ L†L, so that ℒ(ρ) = Gρ + ρG† + Σ LρL†
        let mut drift = h_full.scale(-I);
        let mut jumps = Vec::with_capacity(ls.len());
        for l in &ls {
            let lf = embed(l);
            let ld = lf.adjoint();
            drift.axpy(C64::new(-0.5, 0.0), &ld.matmul(&lf));
            jumps.push((lf, ld));
        }
        Ok(Self {
            dims,
            h: h.hermitian_part(),
            ls,
            drift,
            jumps,
        })
    }

    pub fn zero(dims: DimensionSignature) -> Self {
        Self::new(dims, ComplexMatrix::zeros(dims.ab()), Vec::new()).expect("zero generator is valid")
    }

    pub fn unitary(dims: DimensionSignature, h: ComplexMatrix) -> Result<Self> {
        Self::new(dims, h, Vec::new())
    }

    pub fn dims(&self) -> DimensionSignature {
        self.dims
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn lindblad_operators(&self) -> &[ComplexMatrix] {
        &self.ls
    }

    pub fn is_unitary(&self) -> bool {
        self.ls.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.h.is_zero() && self.ls.iter().all(|l| l.is_zero())
    }

    pub fn hamiltonian_norm(&self) -> f64 {
        operator_norm(&self.h)
    }

    /// Σ_α ‖L_α‖²
    pub fn dissipator_weight(&self) -> f64 {
        self.ls.iter().map(|l| operator_norm(l).powi(2)).sum()
    }

    /// 2‖H‖ + 2Σ‖L_α‖², an upper bound on the induced trace-norm of ℒ.
    pub fn norm_bound(&self) -> f64 {
        2.0 * self.hamiltonian_norm() + 2.0 * self.dissipator_weight()
    }

    /// Embedded H on the full aABb space.
    pub fn embedded_hamiltonian(&self) -> ComplexMatrix {
        self.drift.scale(I).hermitian_part()
    }

    /// Embedded Lindblad operators on the full aABb space.
    pub fn embedded_lindblad_operators(&self) -> Vec<ComplexMatrix> {
        self.jumps.iter().map(|(l, _)| l.clone()).collect()
    }

    /// ℒ applied to an arbitrary operator on the full space.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.drift.matmul(x);
        out += &x.matmul(&self.drift.adjoint());
        for (l, ld) in &self.jumps {
            out += &l.matmul(x).matmul(ld);
        }
        out
    }
}

/// I_a ⊗ op ⊗ I_b for an operator on AB.
pub fn embed_ab(dims: DimensionSignature, op: &ComplexMatrix) -> Result<ComplexMatrix> {
    if op.dim() != dims.ab() {
        return Err(Error::Shape(format!("operator is {0}x{0}, AB factor is {1}", op.dim(), dims.ab())));
    }
    let [da, _, _, db] = dims.factors();
    if da == 1 && db == 1 {
        return Ok(op.clone());
    }
    Ok(tensor(&[&ComplexMatrix::identity(da), op, &ComplexMatrix::identity(db)]))
}

pub fn apply_generator(gen: &LindbladGenerator, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    if gen.dims() != rho.dims() {
        return Err(Error::Shape(format!(
            "generator dims {:?} do not match state dims {:?}",
            gen.dims().factors(),
            rho.dims().factors()
        )));
    }
    Ok(gen.apply(rho.matrix()))
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: DensityMatrix,
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
}

fn rk4_step(gen: &LindbladGenerator, rho: &ComplexMatrix, h: f64) -> ComplexMatrix {
    let half = C64::new(h / 2.0, 0.0);
    let k1 = gen.apply(rho);
    let mut y = rho.clone();
    y.axpy(half, &k1);
    let k2 = gen.apply(&y);
    let mut y = rho.clone();
    y.axpy(half, &k2);
    let k3 = gen.apply(&y);
    let mut y = rho.clone();
    y.axpy(C64::new(h, 0.0), &k3);
    let k4 = gen.apply(&y);
    let mut out = rho.clone();
    out.axpy(C64::new(h / 6.0, 0.0), &k1);
    out.axpy(C64::new(h / 3.0, 0.0), &k2);
    out.axpy(C64::new(h / 3.0, 0.0), &k3);
    out.axpy(C64::new(h / 6.0, 0.0), &k4);
    out
}

/// `steps` RK4 steps of size t/steps, without any renormalization.
pub fn integrate(gen: &LindbladGenerator, rho0: &ComplexMatrix, t: f64, steps: usize) -> ComplexMatrix {
    let h = t / steps as f64;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        rho = rk4_step(gen, &rho, h);
    }
    rho
}

/// Step count with h · (2‖H‖ + 2Σ‖L‖²) ≤ 1e-3.
pub fn auto_steps(gen: &LindbladGenerator, t: f64) -> usize {
    ((t * gen.norm_bound() / STEP_SCALE).ceil() as usize).max(1)
}

/// ρ(t) by fixed-step RK4; the result is re-symmetrized and checked for trace
/// drift and negativity.
pub fn evolve(gen: &LindbladGenerator, rho0: &DensityMatrix, t: f64, steps: usize) -> Result<Evolution> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    if gen.dims() != rho0.dims() {
        return Err(Error::Shape("generator and state dimension signatures differ".into()));
    }
    if t == 0.0 {
        return Ok(Evolution {
            state: rho0.clone(),
            trace_drift: (rho0.matrix().trace().re - 1.0).abs(),
            min_eigenvalue: rho0.min_eigenvalue()?,
            steps,
        });
    }
    let rho = integrate(gen, rho0.matrix(), t, steps).hermitian_part();
    finish(rho0.dims(), rho, steps)
}

fn finish(dims: DimensionSignature, rho: ComplexMatrix, steps: usize) -> Result<Evolution> {
    let trace_drift = (rho.trace().re - 1.0).abs();
    let min_eigenvalue = if rho.is_finite() { eigh(&rho)?.min() } else { f64::NEG_INFINITY };
    if !(trace_drift < TRACE_DRIFT_LIMIT) || min_eigenvalue < -NEGATIVITY_LIMIT {
        // RK4 global error scales as steps⁻⁴
        let excess = (trace_drift / (0.1 * TRACE_DRIFT_LIMIT))
            .max(-min_eigenvalue / (0.1 * NEGATIVITY_LIMIT))
            .max(16.0);
        let factor = if excess.is_finite() { excess.powf(0.25).ceil() as usize } else { 16 };
        return Err(Error::Integration {
            steps,
            trace_drift,
            min_eigenvalue,
            suggested_steps: steps.saturating_mul(factor.max(2)),
        });
    }
    Ok(Evolution {
        state: DensityMatrix::from_parts(dims, rho),
        trace_drift,
        min_eigenvalue,
        steps,
    })
}

/// [`evolve`] with [`auto_steps`], retrying with the suggested step count
/// (at most twice) if the first attempt fails its checks.
pub fn evolve_auto(gen: &LindbladGenerator, rho0: &DensityMatrix, t: f64) -> Result<Evolution> {
    let mut steps = auto_steps(gen, t);
    let mut attempt = 0;
    loop {
        match evolve(gen, rho0, t, steps) {
            Err(Error::Integration { suggested_steps, .. }) if attempt < 2 => {
                steps = suggested_steps;
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// States at each of the nondecreasing `times`, integrating segment by
/// segment with [`auto_steps`] per segment.
pub fn trajectory(gen: &LindbladGenerator, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<Evolution>> {
    let mut out: Vec<Evolution> = Vec::with_capacity(times.len());
    let mut current = rho0.matrix().clone();
    let mut last_t = 0.0;
    let mut total_steps = 0;
    for &t in times {
        if !(t >= last_t) || !t.is_finite() {
            return Err(Error::InvalidArgument("trajectory times must be finite and nondecreasing from 0".into()));
        }
        if t > last_t {
            let steps = auto_steps(gen, t - last_t);
            current = integrate(gen, &current, t - last_t, steps);
            total_steps += steps;
            last_t = t;
        }
        if t == 0.0 {
            out.push(evolve(gen, rho0, 0.0, 1)?);
        } else {
            out.push(finish(rho0.dims(), current.hermitian_part(), total_steps)?);
        }
    }
    Ok(out)
}

/// Empirical RK4 order from step halving: errors at N and 2N steps against
/// a 16N-step reference, order = log2(e_N / e_2N). `None` when the error is
/// already at rounding level (e.g. the zero generator).
pub fn check_convergence_order(gen: &LindbladGenerator, rho0: &DensityMatrix, t: f64) -> Result<Option<f64>> {
    if gen.dims() != rho0.dims() {
        return Err(Error::Shape("generator and state dimension signatures differ".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("convergence check needs t > 0".into()));
    }
    // coarse enough that truncation error dominates rounding
    let n = ((t * gen.norm_bound() / 0.25).ceil() as usize).max(4);
    let reference = integrate(gen, rho0.matrix(), t, 16 * n);
    let e1 = trace_norm(&(&integrate(gen, rho0.matrix(), t, n) - &reference));
    let e2 = trace_norm(&(&integrate(gen, rho0.matrix(), t, 2 * n) - &reference));
    if e1 < 1e-13 || e2 < 1e-15 {
        return Ok(None);
    }
    Ok(Some((e1 / e2).log2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, ONE, ZERO};
    use crate::states::{sample, PureState};

    fn qubit() -> DimensionSignature {
        DimensionSignature::single(2).unwrap()
    }

    fn damping(gamma: f64) -> LindbladGenerator {
        // √γ |0⟩⟨1|
        let mut l = ComplexMatrix::zeros(2);
        l[(0, 1)] = C64::new(gamma.sqrt(), 0.0);
        LindbladGenerator::new(qubit(), ComplexMatrix::zeros(2), vec![l]).unwrap()
    }

    fn excited() -> DensityMatrix {
        PureState::basis(qubit(), 1).unwrap().density()
    }

    #[test]
    fn zero_generator_gives_zero() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let rho = sample::random_pure(dims, 1).density();
        assert!(apply_generator(&LindbladGenerator::zero(dims), &rho).unwrap().is_zero());
    }

    #[test]
    fn unitary_generator_is_commutator() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let h = sample::random_gue_hamiltonian(4, 3);
        let rho = sample::random_pure(dims, 4).density();
        let out = apply_generator(&LindbladGenerator::unitary(dims, h.clone()).unwrap(), &rho).unwrap();
        let expected = crate::linalg::commutator(&h, rho.matrix()).scale(-I);
        assert!((&out - &expected).max_abs() < 1e-14);
        assert!(out.trace().norm() < 1e-11);
        assert!(out.hermiticity_defect() < 1e-11);
    }

    #[test]
    fn damping_population_rate() {
        let gamma = 0.7;
        let out = apply_generator(&damping(gamma), &excited()).unwrap();
        assert!((out[(1, 1)].re + gamma).abs() < 1e-15);
        assert!((out[(0, 0)].re - gamma).abs() < 1e-15);
    }

    #[test]
    fn generator_rejects_mismatched_state() {
        let gen = damping(1.0);
        let rho = sample::random_pure(DimensionSignature::bipartite(2, 2).unwrap(), 0).density();
        assert!(matches!(apply_generator(&gen, &rho), Err(Error::Shape(_))));
    }

    #[test]
    fn generator_rejects_non_hermitian_h() {
        let mut h = ComplexMatrix::zeros(2);
        h[(0, 1)] = ONE;
        assert!(LindbladGenerator::new(qubit(), h, vec![]).is_err());
    }

    #[test]
    fn evolve_at_zero_returns_input() {
        let rho = excited();
        let ev = evolve(&damping(1.0), &rho, 0.0, 10).unwrap();
        assert_eq!(ev.state, rho);
    }

    #[test]
    fn amplitude_damping_matches_closed_form() {
        let ev = evolve(&damping(1.0), &excited(), 1.0, 1000).unwrap();
        assert!((ev.state.matrix()[(1, 1)].re - (-1.0f64).exp()).abs() < 1e-7);
        assert!(ev.trace_drift < 1e-8);
    }

    #[test]
    fn pauli_z_evolution_keeps_purity() {
        let dims = DimensionSignature::bipartite(2, 2).unwrap();
        let z = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let h = kron(&z, &ComplexMatrix::identity(2));
        let gen = LindbladGenerator::unitary(dims, h).unwrap();
        let rho = sample::random_pure(dims, 9).density();
        let ev = evolve(&gen, &rho, 1.0, 200).unwrap();
        assert!((ev.state.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unitary_evolution_matches_exact_exponential() {
        let dims = DimensionSignature::new(1, 2, 3, 1).unwrap();
        let h = sample::random_gue_hamiltonian(6, 21);
        let rho = sample::random_pure(dims, 22).density();
        let t = 0.8;
        let ev = evolve_auto(&LindbladGenerator::unitary(dims, h.clone()).unwrap(), &rho, t).unwrap();
        let e = eigh(&h).unwrap();
        let u = {
            let n = e.dim();
            let mut u = ComplexMatrix::zeros(n);
            for k in 0..n {
                let phase = C64::new(0.0, -e.eigenvalues[k] * t).exp();
                let v = e.eigenvector(k);
                for i in 0..n {
                    for j in 0..n {
                        u[(i, j)] += phase * v[i] * v[j].conj();
                    }
                }
            }
            u
        };
        let exact = u.matmul(rho.matrix()).matmul(&u.adjoint());
        assert!(trace_norm(&(ev.state.matrix() - &exact)) < 1e-8);
    }

    #[test]
    fn integration_error_suggests_more_steps() {
        // one huge step blows up the trace-free but nonlinear-in-h error
        let gen = damping(50.0);
        match evolve(&gen, &excited(), 1.0, 1) {
            Err(Error::Integration { steps, suggested_steps, .. }) => {
                assert_eq!(steps, 1);
                assert!(suggested_steps > 1);
                assert!(evolve(&gen, &excited(), 1.0, suggested_steps * 8).is_ok());
            }
            other => panic!("expected integration error, got {other:?}"),
        }
    }

    #[test]
    fn convergence_order_is_four() {
        let z = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let x = ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let h = &z + &x;
        let plus = PureState::normalized(qubit(), vec![ONE, C64::new(0.3, 0.4)]).unwrap().density();
        let unitary = LindbladGenerator::unitary(qubit(), h).unwrap();
        let order = check_convergence_order(&unitary, &plus, 1.0).unwrap().unwrap();
        assert!((order - 4.0).abs() < 0.3, "unitary order {order}");
        let order = check_convergence_order(&damping(1.0), &excited(), 1.0).unwrap().unwrap();
        assert!((order - 4.0).abs() < 0.3, "damping order {order}");
        let zero = LindbladGenerator::zero(qubit());
        assert_eq!(check_convergence_order(&zero, &plus, 1.0).unwrap(), None);
    }

    #[test]
    fn trajectory_hits_sample_times() {
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.25).collect();
        let traj = trajectory(&damping(1.0), &excited(), &times).unwrap();
        for (ev, t) in traj.iter().zip(&times) {
            assert!((ev.state.matrix()[(1, 1)].re - (-t).exp()).abs() < 1e-9);
        }
    }
}
