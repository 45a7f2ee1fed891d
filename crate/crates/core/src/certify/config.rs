use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MAX_BRUTEFORCE_DIM;
use crate::rates::InequalityFamily;
use crate::states::{DEFAULT_ETA, MAX_TOTAL_DIM};

/// Default violation tolerance on the margin of each family.
pub fn default_tolerance(family: InequalityFamily) -> f64 {
    match family {
        InequalityFamily::Prop1 | InequalityFamily::BravyiLemma1 => 1e-10,
        InequalityFamily::Kittaneh => 1e-9,
        InequalityFamily::Theorem2 | InequalityFamily::Theorem3 => 1e-3,
        _ => 1e-6,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub families: Vec<InequalityFamily>,
    /// Trials per cell.
    pub trials: usize,
    /// Per-family replacements for `trials`.
    pub family_trials: BTreeMap<InequalityFamily, usize>,
    pub base_seed: u64,
    /// (d_A, d_B) cuts for prop1, h_term, theorem2 and axioms.
    pub cuts: Vec<[usize; 2]>,
    pub delta_t: Vec<f64>,
    pub eta: f64,
    /// Largest number of Lindblad operators per theorem2/theorem3 cell; each
    /// trial draws its count uniformly from 0..=k.
    pub lindblad_counts: Vec<usize>,
    /// theorem2 also runs the brute-force REE when d_A·d_B is at most this.
    pub bruteforce_max_dim: usize,
    pub l_term_dims: Vec<usize>,
    pub l_term_p: Vec<f64>,
    pub mixing_dims: Vec<usize>,
    pub mixing_p: Vec<f64>,
    pub kittaneh_dims: Vec<usize>,
    /// Ancilla sizes d_a, d_b for theorem3 and bravyi_lemma1 (d_A = d_B = 2).
    pub ancilla_dims: Vec<usize>,
    pub tolerances: BTreeMap<InequalityFamily, f64>,
    /// Where counterexamples go; relative paths resolve against the output
    /// file's directory.
    pub counterexample_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let grid = [2, 3, 4];
        Self {
            families: InequalityFamily::ALL.to_vec(),
            trials: 200,
            family_trials: BTreeMap::new(),
            base_seed: 0,
            cuts: grid.iter().flat_map(|&a| grid.iter().map(move |&b| [a, b])).collect(),
            delta_t: vec![1e-3, 1e-4, 1e-5],
            eta: DEFAULT_ETA,
            lindblad_counts: vec![0, 3],
            bruteforce_max_dim: 4,
            l_term_dims: vec![4, 8, 9],
            l_term_p: vec![1.0 / 8.0, 1.0 / 9.0, 1.0 / 16.0],
            mixing_dims: vec![2, 4, 8],
            mixing_p: vec![0.5, 0.25, (-2.0f64).exp()],
            kittaneh_dims: vec![2, 4, 8, 16],
            ancilla_dims: vec![1, 2, 3],
            tolerances: BTreeMap::new(),
            counterexample_dir: None,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SweepConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn trials_for(&self, family: InequalityFamily) -> usize {
        self.family_trials.get(&family).copied().unwrap_or(self.trials)
    }

    pub fn tolerance(&self, family: InequalityFamily) -> f64 {
        self.tolerances.get(&family).copied().unwrap_or_else(|| default_tolerance(family))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.families.is_empty() {
            return bad("no families selected".into());
        }
        if self.trials == 0 || self.family_trials.values().any(|&t| t == 0) {
            return bad("trials must be at least 1".into());
        }
        for &[a, b] in &self.cuts {
            if a < 2 || b < 2 {
                return bad(format!("cut ({a}, {b}) is degenerate; both sides need dimension >= 2"));
            }
            if a * b > MAX_TOTAL_DIM {
                return bad(format!("cut ({a}, {b}) exceeds the total dimension cap {MAX_TOTAL_DIM}"));
            }
        }
        for &dt in &self.delta_t {
            if !(1e-6..=1e-3).contains(&dt) {
                return bad(format!("delta_t {dt} outside [1e-6, 1e-3]"));
            }
        }
        if !(1e-10..=1e-4).contains(&self.eta) {
            return bad(format!("eta {} outside [1e-10, 1e-4]", self.eta));
        }
        if self.bruteforce_max_dim > MAX_BRUTEFORCE_DIM {
            return bad(format!("bruteforce_max_dim above {MAX_BRUTEFORCE_DIM}"));
        }
        for &p in &self.l_term_p {
            if !(p > 0.0 && p <= (-2.0f64).exp()) {
                return bad(format!("l_term p = {p} outside (0, e^-2]"));
            }
        }
        for &p in &self.mixing_p {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("mixing p = {p} outside (0, 1)"));
            }
        }
        let dims = self.l_term_dims.iter().chain(&self.mixing_dims).chain(&self.kittaneh_dims);
        for &n in dims {
            if n == 0 || n > MAX_TOTAL_DIM {
                return bad(format!("matrix dimension {n} outside [1, {MAX_TOTAL_DIM}]"));
            }
        }
        for &da in &self.ancilla_dims {
            for &db in &self.ancilla_dims {
                if da == 0 || 4 * da * db > MAX_TOTAL_DIM {
                    return bad(format!("ancilla pair ({da}, {db}) outside the total dimension cap"));
                }
            }
        }
        for (f, &tol) in &self.tolerances {
            if !(tol >= 0.0) {
                return bad(format!("tolerance for {f} must be nonnegative"));
            }
        }
        let needs = |f: InequalityFamily, empty: bool, what: &str| {
            if self.families.contains(&f) && empty {
                Err(Error::Config(format!("{f} selected but {what} is empty")))
            } else {
                Ok(())
            }
        };
        needs(InequalityFamily::Theorem2, self.delta_t.is_empty() || self.lindblad_counts.is_empty(), "delta_t or lindblad_counts")?;
        needs(InequalityFamily::LTerm, self.l_term_dims.is_empty() || self.l_term_p.is_empty(), "l_term_dims or l_term_p")?;
        needs(InequalityFamily::Mixing, self.mixing_dims.is_empty() || self.mixing_p.is_empty(), "mixing_dims or mixing_p")?;
        needs(InequalityFamily::Kittaneh, self.kittaneh_dims.is_empty(), "kittaneh_dims")?;
        Ok(())
    }
}
