use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use crate::dynamics::LindbladGenerator;
use crate::error::{Error, Result};
use crate::io::{GeneratorJson, MatrixJson, StateJson};
use crate::linalg::kron;
use crate::measures::{entanglement_entropy, ree_bruteforce, ree_upper_via_sigma0, ReeOptions};
use crate::rates::{
    bravyi_lemma1_check, entangling_rate_fd, h_term, instance_xy_with, kittaneh_check, l_term, proposition1_result,
    small_incremental_mixing_check, theorem3_result, InequalityFamily, InequalityResult, RateMeasure, RateOptions,
};
use crate::states::{sample, schmidt, sigma0, DimensionSignature, PureState};

/// Allowed excess of gamma_fd over gamma_surrogate_fd.
pub const ORDERING_TOLERANCE: f64 = 1e-7;

const AXIOM_PRODUCT_TOL: f64 = 1e-6;
const AXIOM_INVARIANCE_TOL: f64 = 1e-9;
const AXIOM_EXACT_TOL: f64 = 1e-12;
const AXIOM_BRUTEFORCE_TOL: f64 = 1e-4;

/// Parameters identifying one certificate within a family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lindblad: Option<usize>,
}

impl Cell {
    fn signature(&self) -> Result<DimensionSignature> {
        let dims = self.dims.ok_or_else(|| Error::Config("cell has no dims".into()))?;
        DimensionSignature::try_from(dims)
    }

    fn matrix_dim(&self) -> Result<usize> {
        self.dim.ok_or_else(|| Error::Config("cell has no dim".into()))
    }

    fn p(&self) -> Result<f64> {
        self.p.ok_or_else(|| Error::Config("cell has no p".into()))
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(d) = self.dims {
            parts.push(format!("dims={}x{}x{}x{}", d[0], d[1], d[2], d[3]));
        }
        if let Some(n) = self.dim {
            parts.push(format!("dim={n}"));
        }
        if let Some(p) = self.p {
            parts.push(format!("p={p:.4}"));
        }
        if let Some(k) = self.max_lindblad {
            parts.push(format!("L<={k}"));
        }
        parts.join(" ")
    }
}

/// Every cell of `family` under `config`, in a fixed order.
pub fn cells(config: &SweepConfig, family: InequalityFamily) -> Vec<Cell> {
    let cut = |&[a, b]: &[usize; 2]| Cell {
        dims: Some([1, a, b, 1]),
        ..Cell::default()
    };
    let ancillas = || {
        config.ancilla_dims.iter().flat_map(|&da| {
            config.ancilla_dims.iter().map(move |&db| Cell {
                dims: Some([da, 2, 2, db]),
                ..Cell::default()
            })
        })
    };
    let grid = |dims: &[usize], ps: &[f64]| -> Vec<Cell> {
        dims.iter()
            .flat_map(|&n| {
                ps.iter().map(move |&p| Cell {
                    dim: Some(n),
                    p: Some(p),
                    ..Cell::default()
                })
            })
            .collect()
    };
    match family {
        InequalityFamily::Prop1 | InequalityFamily::HTerm | InequalityFamily::Axioms => {
            config.cuts.iter().map(cut).collect()
        }
        InequalityFamily::Theorem2 => config
            .cuts
            .iter()
            .flat_map(|c| {
                config.lindblad_counts.iter().map(move |&k| Cell {
                    max_lindblad: Some(k),
                    ..cut(c)
                })
            })
            .collect(),
        InequalityFamily::LTerm => grid(&config.l_term_dims, &config.l_term_p),
        InequalityFamily::Mixing => grid(&config.mixing_dims, &config.mixing_p),
        InequalityFamily::Kittaneh => config
            .kittaneh_dims
            .iter()
            .map(|&n| Cell {
                dim: Some(n),
                ..Cell::default()
            })
            .collect(),
        InequalityFamily::Theorem3 => config
            .lindblad_counts
            .iter()
            .flat_map(|&k| {
                ancillas().map(move |c| Cell {
                    max_lindblad: Some(k),
                    ..c
                })
            })
            .collect(),
        InequalityFamily::BravyiLemma1 => ancillas().collect(),
    }
}

/// A fully specified trial; evaluating it needs nothing else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialInstance {
    Prop1 {
        state: StateJson,
    },
    HTerm {
        state: StateJson,
        h: MatrixJson,
        eta: f64,
    },
    LTerm {
        l: MatrixJson,
        x: MatrixJson,
        y: MatrixJson,
        p: f64,
    },
    Mixing {
        h: MatrixJson,
        rho1: MatrixJson,
        rho2: MatrixJson,
        p: f64,
    },
    Kittaneh {
        a: MatrixJson,
        x: MatrixJson,
    },
    Theorem2 {
        state: StateJson,
        generator: GeneratorJson,
        delta_t: Vec<f64>,
        eta: f64,
        bruteforce: bool,
    },
    Theorem3 {
        state: StateJson,
        generator: GeneratorJson,
        eta: f64,
    },
    BravyiLemma1 {
        state: StateJson,
    },
    Axioms {
        state: StateJson,
        product: StateJson,
        alice_unitary: MatrixJson,
        bob_unitary: MatrixJson,
        bruteforce: bool,
    },
}

impl TrialInstance {
    pub fn family(&self) -> InequalityFamily {
        match self {
            TrialInstance::Prop1 { .. } => InequalityFamily::Prop1,
            TrialInstance::HTerm { .. } => InequalityFamily::HTerm,
            TrialInstance::LTerm { .. } => InequalityFamily::LTerm,
            TrialInstance::Mixing { .. } => InequalityFamily::Mixing,
            TrialInstance::Kittaneh { .. } => InequalityFamily::Kittaneh,
            TrialInstance::Theorem2 { .. } => InequalityFamily::Theorem2,
            TrialInstance::Theorem3 { .. } => InequalityFamily::Theorem3,
            TrialInstance::BravyiLemma1 { .. } => InequalityFamily::BravyiLemma1,
            TrialInstance::Axioms { .. } => InequalityFamily::Axioms,
        }
    }
}

fn random_generator(rng: &mut ChaCha8Rng, dims: DimensionSignature, max_lindblad: usize) -> Result<LindbladGenerator> {
    let ab = dims.ab();
    let h = sample::gue_unit_norm(rng, ab);
    let count = rng.random_range(0..=max_lindblad);
    let ls = (0..count).map(|_| sample::ginibre_unit_norm(rng, ab)).collect();
    LindbladGenerator::new(dims, h, ls)
}

pub fn sample_trial(
    family: InequalityFamily,
    cell: &Cell,
    config: &SweepConfig,
    seed: u64,
) -> Result<TrialInstance> {
    let mut rng = sample::rng_from_seed(seed);
    let rng = &mut rng;
    Ok(match family {
        InequalityFamily::Prop1 => TrialInstance::Prop1 {
            state: StateJson::from_pure(&sample::pure_state(rng, cell.signature()?)),
        },
        InequalityFamily::HTerm => {
            let dims = cell.signature()?;
            let psi = sample::pure_state(rng, dims);
            TrialInstance::HTerm {
                state: StateJson::from_pure(&psi),
                h: MatrixJson::from_matrix(&sample::gue_unit_norm(rng, dims.ab())),
                eta: config.eta,
            }
        }
        InequalityFamily::LTerm => {
            let (n, p) = (cell.matrix_dim()?, cell.p()?);
            let (x, y) = instance_xy_with(rng, n, p, false)?;
            TrialInstance::LTerm {
                l: MatrixJson::from_matrix(&sample::ginibre_unit_norm(rng, n)),
                x: MatrixJson::from_matrix(&x),
                y: MatrixJson::from_matrix(&y),
                p,
            }
        }
        InequalityFamily::Mixing => {
            let (n, p) = (cell.matrix_dim()?, cell.p()?);
            TrialInstance::Mixing {
                h: MatrixJson::from_matrix(&sample::gue_unit_norm(rng, n)),
                rho1: MatrixJson::from_matrix(&sample::density_matrix(rng, n)),
                rho2: MatrixJson::from_matrix(&sample::density_matrix(rng, n)),
                p,
            }
        }
        InequalityFamily::Kittaneh => {
            let n = cell.matrix_dim()?;
            let scale = 0.1 + 10.0 * rng.random::<f64>();
            TrialInstance::Kittaneh {
                a: MatrixJson::from_matrix(&sample::density_matrix(rng, n).scale_real(scale)),
                x: MatrixJson::from_matrix(&sample::ginibre(rng, n)),
            }
        }
        InequalityFamily::Theorem2 => {
            let dims = cell.signature()?;
            let psi = sample::pure_state(rng, dims);
            let gen = random_generator(rng, dims, cell.max_lindblad.unwrap_or(0))?;
            TrialInstance::Theorem2 {
                state: StateJson::from_pure(&psi),
                generator: GeneratorJson::from_generator(&gen),
                delta_t: config.delta_t.clone(),
                eta: config.eta,
                bruteforce: dims.ab() <= config.bruteforce_max_dim,
            }
        }
        InequalityFamily::Theorem3 => {
            let dims = cell.signature()?;
            let psi = sample::pure_state(rng, dims);
            let gen = random_generator(rng, dims, cell.max_lindblad.unwrap_or(0))?;
            TrialInstance::Theorem3 {
                state: StateJson::from_pure(&psi),
                generator: GeneratorJson::from_generator(&gen),
                eta: config.eta,
            }
        }
        InequalityFamily::BravyiLemma1 => TrialInstance::BravyiLemma1 {
            state: StateJson::from_pure(&sample::pure_state(rng, cell.signature()?)),
        },
        InequalityFamily::Axioms => {
            let dims = cell.signature()?;
            let psi = sample::pure_state(rng, dims);
            let a = sample::complex_gaussian_vector(rng, dims.alice());
            let b = sample::complex_gaussian_vector(rng, dims.bob());
            TrialInstance::Axioms {
                state: StateJson::from_pure(&psi),
                product: StateJson::from_pure(&PureState::product(dims, &a, &b)?),
                alice_unitary: MatrixJson::from_matrix(&sample::haar_unitary(rng, dims.alice())),
                bob_unitary: MatrixJson::from_matrix(&sample::haar_unitary(rng, dims.bob())),
                bruteforce: dims.total() <= crate::measures::MAX_BRUTEFORCE_DIM,
            }
        }
    })
}

fn theorem2(
    psi: &PureState,
    gen: &LindbladGenerator,
    delta_t: &[f64],
    eta: f64,
    bruteforce: bool,
) -> Result<InequalityResult> {
    let opts = RateOptions {
        eta,
        ..RateOptions::default()
    };
    let mut worst: Option<InequalityResult> = None;
    let mut ordering_slack = f64::INFINITY;
    let mut details = Vec::new();
    let measures: &[RateMeasure] = if bruteforce {
        &[RateMeasure::Surrogate, RateMeasure::Bruteforce]
    } else {
        &[RateMeasure::Surrogate]
    };
    for &dt in delta_t {
        for &measure in measures {
            let r = entangling_rate_fd(psi, gen, dt, measure, &opts)?;
            ordering_slack = ordering_slack.min(r.gamma_surrogate_fd - r.gamma_fd);
            let tag = match measure {
                RateMeasure::Surrogate => "surrogate",
                RateMeasure::Bruteforce => "bruteforce",
            };
            details.push((format!("gamma_fd[{tag},{dt:e}]"), r.gamma_fd));
            if measure == RateMeasure::Surrogate {
                details.push((format!("gamma_surrogate_fd[{dt:e}]"), r.gamma_surrogate_fd));
            }
            let candidate = InequalityResult::new(
                InequalityFamily::Theorem2,
                r.gamma_fd.max(r.gamma_surrogate_fd),
                r.theorem_bound,
            );
            if worst.as_ref().is_none_or(|w| candidate.margin < w.margin) {
                worst = Some(
                    candidate
                        .with("delta_t", dt)
                        .with("gamma_surrogate_analytic", r.gamma_surrogate_analytic)
                        .with("unitary_literature_bound", r.unitary_literature_bound),
                );
            }
        }
    }
    let mut out = worst.ok_or_else(|| Error::Config("theorem2 trial has no delta_t".into()))?;
    out.details.insert("ordering_slack".into(), ordering_slack);
    out.details.extend(details);
    Ok(out)
}

fn axioms(
    psi: &PureState,
    product: &PureState,
    ua: &crate::linalg::ComplexMatrix,
    ub: &crate::linalg::ComplexMatrix,
    bruteforce: bool,
) -> Result<InequalityResult> {
    let e = entanglement_entropy(psi);
    let exact = ree_upper_via_sigma0(&psi.density(), &sigma0(&schmidt(psi)))?.value();
    let rotated = psi.apply(&kron(ua, ub))?;
    let e_rot = entanglement_entropy(&rotated);
    let exact_rot = ree_upper_via_sigma0(&rotated.density(), &sigma0(&schmidt(&rotated)))?.value();
    let product_exact = ree_upper_via_sigma0(&product.density(), &sigma0(&schmidt(product)))?.value();
    let mut checks = vec![
        ("pure_ree_exact", (exact - e).abs(), AXIOM_EXACT_TOL),
        ("local_unitary_entropy", (e_rot - e).abs(), AXIOM_INVARIANCE_TOL),
        ("local_unitary_ree", (exact_rot - exact).abs(), AXIOM_INVARIANCE_TOL),
        ("product_ree_exact", product_exact, AXIOM_PRODUCT_TOL),
    ];
    if bruteforce {
        let opts = ReeOptions {
            restarts: 1,
            ..ReeOptions::default()
        };
        let bf = ree_bruteforce(&psi.density(), &opts)?.value;
        let bf_product = ree_bruteforce(&product.density(), &opts)?.value;
        checks.push(("pure_ree_bruteforce", (bf - e).abs(), AXIOM_BRUTEFORCE_TOL));
        checks.push(("product_ree_bruteforce", bf_product, AXIOM_PRODUCT_TOL));
    }
    let lhs = checks.iter().map(|(_, dev, tol)| dev / tol).fold(0.0, f64::max);
    let mut out = InequalityResult::new(InequalityFamily::Axioms, lhs, 1.0);
    for (name, dev, _) in checks {
        out.details.insert(name.into(), dev);
    }
    Ok(out)
}

pub fn evaluate(instance: &TrialInstance) -> Result<InequalityResult> {
    match instance {
        TrialInstance::Prop1 { state } => proposition1_result(&state.decode_pure()?),
        TrialInstance::HTerm { state, h, eta } => h_term(&h.to_matrix()?, &state.decode_pure()?, *eta),
        TrialInstance::LTerm { l, x, y, p } => l_term(&l.to_matrix()?, &x.to_matrix()?, &y.to_matrix()?, *p),
        TrialInstance::Mixing { h, rho1, rho2, p } => {
            small_incremental_mixing_check(&h.to_matrix()?, &rho1.to_matrix()?, &rho2.to_matrix()?, *p)
        }
        TrialInstance::Kittaneh { a, x } => kittaneh_check(&a.to_matrix()?, &x.to_matrix()?),
        TrialInstance::Theorem2 {
            state,
            generator,
            delta_t,
            eta,
            bruteforce,
        } => theorem2(&state.decode_pure()?, &generator.decode()?, delta_t, *eta, *bruteforce),
        TrialInstance::Theorem3 { state, generator, eta } => {
            theorem3_result(&state.decode_pure()?, &generator.decode()?, *eta)
        }
        TrialInstance::BravyiLemma1 { state } => Ok(bravyi_lemma1_check(&state.decode()?.density())?.result()),
        TrialInstance::Axioms {
            state,
            product,
            alice_unitary,
            bob_unitary,
            bruteforce,
        } => axioms(
            &state.decode_pure()?,
            &product.decode_pure()?,
            &alice_unitary.to_matrix()?,
            &bob_unitary.to_matrix()?,
            *bruteforce,
        ),
    }
}

/// margin < −tolerance, plus the gamma_fd ≤ gamma_surrogate_fd ordering for
/// theorem2.
pub fn is_violation(result: &InequalityResult, tolerance: f64) -> bool {
    if !(result.margin >= -tolerance) {
        return true;
    }
    match result.details.get("ordering_slack") {
        Some(&slack) if result.family == InequalityFamily::Theorem2 => !(slack >= -ORDERING_TOLERANCE),
        _ => false,
    }
}
