//! Monte Carlo certification of the inequality families.

mod config;
mod trial;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{default_tolerance, SweepConfig};
pub use trial::{cells, evaluate, is_violation, sample_trial, Cell, TrialInstance, ORDERING_TOLERANCE};

use crate::error::{Error, Result};
use crate::rates::{InequalityFamily, InequalityResult};

/// Share of failed trials above which a cell is inconclusive.
pub const INCONCLUSIVE_FRACTION: f64 = 0.1;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cell_key(cell: &Cell) -> String {
    serde_json::to_string(cell).expect("cells serialize")
}

/// 16 hex digits identifying a cell in counterexample file names.
pub fn cell_hash(cell: &Cell) -> String {
    format!("{:016x}", fnv1a(cell_key(cell).as_bytes()))
}

/// Seed of trial `index`: a hash of (base seed, family, cell, index).
pub fn trial_seed(base_seed: u64, family: InequalityFamily, cell: &Cell, index: usize) -> u64 {
    let mut bytes = base_seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(family.as_str().as_bytes());
    bytes.push(0);
    bytes.extend_from_slice(cell_key(cell).as_bytes());
    bytes.push(0);
    bytes.extend_from_slice(&(index as u64).to_le_bytes());
    splitmix(fnv1a(&bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub family: InequalityFamily,
    pub cell: Cell,
    pub trials: usize,
    pub passes: usize,
    pub violations: usize,
    pub failures: usize,
    pub inconclusive: bool,
    pub tolerance: f64,
    /// Smallest margin over completed trials; lowest trial index on ties.
    pub worst_margin: Option<f64>,
    pub worst_seed: Option<u64>,
    /// Largest lhs/rhs over completed trials.
    pub max_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
    pub runtime_s: f64,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.violations == 0 && !self.inconclusive
    }
}

/// Everything needed to re-check one violating trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counterexample {
    pub family: InequalityFamily,
    pub cell: Cell,
    pub seed: u64,
    pub tolerance: f64,
    pub result: InequalityResult,
    pub instance: TrialInstance,
}

impl Counterexample {
    pub fn file_name(&self) -> String {
        format!("{}-{}-{}.json", self.family, cell_hash(&self.cell), self.seed)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepReport {
    pub certificates: Vec<Certificate>,
    pub counterexamples: Vec<Counterexample>,
}

impl SweepReport {
    pub fn total_violations(&self) -> usize {
        self.certificates.iter().map(|c| c.violations).sum()
    }

    pub fn inconclusive_cells(&self) -> usize {
        self.certificates.iter().filter(|c| c.inconclusive).count()
    }

    pub fn ok(&self) -> bool {
        self.certificates.iter().all(Certificate::ok)
    }
}

enum Outcome {
    Done {
        seed: u64,
        result: InequalityResult,
        instance: TrialInstance,
    },
    Failed(String),
}

/// Samples and evaluates one trial.
pub fn run_trial(
    config: &SweepConfig,
    family: InequalityFamily,
    cell: &Cell,
    seed: u64,
) -> Result<(TrialInstance, InequalityResult)> {
    let instance = sample_trial(family, cell, config, seed)?;
    let result = evaluate(&instance)?;
    Ok((instance, result))
}

pub fn run_cell(config: &SweepConfig, family: InequalityFamily, cell: &Cell) -> (Certificate, Vec<Counterexample>) {
    let start = Instant::now();
    let trials = config.trials_for(family);
    let tolerance = config.tolerance(family);
    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(config.base_seed, family, cell, i);
            match run_trial(config, family, cell, seed) {
                Ok((instance, result)) => Outcome::Done { seed, result, instance },
                Err(e) => Outcome::Failed(format!("seed {seed}: {e}")),
            }
        })
        .collect();

    let mut cert = Certificate {
        family,
        cell: cell.clone(),
        trials,
        passes: 0,
        violations: 0,
        failures: 0,
        inconclusive: false,
        tolerance,
        worst_margin: None,
        worst_seed: None,
        max_ratio: None,
        first_failure: None,
        runtime_s: 0.0,
    };
    let mut counterexamples = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Done { seed, result, instance } => {
                if cert.worst_margin.is_none_or(|w| result.margin < w) {
                    cert.worst_margin = Some(result.margin);
                    cert.worst_seed = Some(seed);
                }
                let ratio = result.ratio();
                if cert.max_ratio.is_none_or(|r| ratio > r) {
                    cert.max_ratio = Some(ratio);
                }
                if is_violation(&result, tolerance) {
                    cert.violations += 1;
                    counterexamples.push(Counterexample {
                        family,
                        cell: cell.clone(),
                        seed,
                        tolerance,
                        result,
                        instance,
                    });
                } else {
                    cert.passes += 1;
                }
            }
            Outcome::Failed(msg) => {
                cert.failures += 1;
                if cert.first_failure.is_none() {
                    cert.first_failure = Some(msg);
                }
            }
        }
    }
    cert.inconclusive = cert.failures as f64 > INCONCLUSIVE_FRACTION * trials as f64;
    cert.runtime_s = start.elapsed().as_secs_f64();
    (cert, counterexamples)
}

/// Runs every selected family over its cells. `progress` sees each
/// certificate as soon as its cell finishes.
pub fn run_sweep_with(config: &SweepConfig, mut progress: impl FnMut(&Certificate)) -> Result<SweepReport> {
    config.validate()?;
    let mut report = SweepReport::default();
    let mut seen = Vec::new();
    for &family in &config.families {
        if seen.contains(&family) {
            continue;
        }
        seen.push(family);
        for cell in cells(config, family) {
            let (cert, cex) = run_cell(config, family, &cell);
            progress(&cert);
            report.certificates.push(cert);
            report.counterexamples.extend(cex);
        }
    }
    Ok(report)
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    run_sweep_with(config, |_| {})
}

pub fn certificate_line(cert: &Certificate) -> String {
    serde_json::to_string(cert).expect("certificates serialize")
}

pub fn write_jsonl(path: &Path, certificates: &[Certificate]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for c in certificates {
        writeln!(out, "{}", certificate_line(c))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes each counterexample to `dir`, creating it when needed.
pub fn write_counterexamples(dir: &Path, counterexamples: &[Counterexample]) -> Result<Vec<PathBuf>> {
    if counterexamples.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir)?;
    counterexamples
        .iter()
        .map(|c| {
            let path = dir.join(c.file_name());
            crate::io::write_json(&path, c)?;
            Ok(path)
        })
        .collect()
}

pub fn read_counterexample(path: &Path) -> Result<Counterexample> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let record: Counterexample =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if record.instance.family() != record.family {
        return Err(Error::Format(format!(
            "record family {} does not match instance kind {}",
            record.family,
            record.instance.family()
        )));
    }
    Ok(record)
}

/// Re-evaluates a stored counterexample through the same code path.
pub fn replay(path: &Path) -> Result<InequalityResult> {
    evaluate(&read_counterexample(path)?.instance)
}

/// Fixed-width table, one row per certificate.
pub fn summary_table(certificates: &[Certificate]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:<26} {:>7} {:>6} {:>5} {:>5} {:>13} {:>10} {:>8}",
        "family", "cell", "trials", "viol", "fail", "inc", "worst_margin", "max_ratio", "time_s"
    );
    for c in certificates {
        let _ = writeln!(
            s,
            "{:<14} {:<26} {:>7} {:>6} {:>5} {:>5} {:>13} {:>10} {:>8.2}",
            c.family.as_str(),
            c.cell.label(),
            c.trials,
            c.violations,
            c.failures,
            if c.inconclusive { "yes" } else { "no" },
            c.worst_margin.map_or("-".into(), |m| format!("{m:.4e}")),
            c.max_ratio.map_or("-".into(), |r| format!("{r:.4}")),
            c.runtime_s
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(families: &[InequalityFamily], trials: usize) -> SweepConfig {
        SweepConfig {
            families: families.to_vec(),
            trials,
            cuts: vec![[2, 2], [2, 3]],
            l_term_dims: vec![4],
            mixing_dims: vec![3],
            kittaneh_dims: vec![3],
            ancilla_dims: vec![1, 2],
            delta_t: vec![1e-4],
            ..SweepConfig::default()
        }
    }

    #[test]
    fn seeds_depend_on_every_component() {
        let c = Cell {
            dims: Some([1, 2, 2, 1]),
            ..Cell::default()
        };
        let d = Cell {
            dims: Some([1, 2, 3, 1]),
            ..Cell::default()
        };
        let s = trial_seed(0, InequalityFamily::Prop1, &c, 0);
        assert_eq!(s, trial_seed(0, InequalityFamily::Prop1, &c, 0));
        assert_ne!(s, trial_seed(1, InequalityFamily::Prop1, &c, 0));
        assert_ne!(s, trial_seed(0, InequalityFamily::HTerm, &c, 0));
        assert_ne!(s, trial_seed(0, InequalityFamily::Prop1, &d, 0));
        assert_ne!(s, trial_seed(0, InequalityFamily::Prop1, &c, 1));
    }

    #[test]
    fn every_family_certifies_a_small_sweep() {
        let config = small(&InequalityFamily::ALL, 3);
        let report = run_sweep(&config).unwrap();
        for c in &report.certificates {
            assert_eq!(c.passes + c.violations + c.failures, c.trials);
            assert!(c.ok(), "{c:?}");
        }
        let families: Vec<_> = report.certificates.iter().map(|c| c.family).collect();
        for f in InequalityFamily::ALL {
            assert!(families.contains(&f), "{f}");
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let config = small(&[InequalityFamily::Prop1, InequalityFamily::HTerm, InequalityFamily::Mixing], 5);
        let strip = |r: SweepReport| {
            r.certificates
                .into_iter()
                .map(|mut c| {
                    c.runtime_s = 0.0;
                    certificate_line(&c)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(run_sweep(&config).unwrap()), strip(run_sweep(&config).unwrap()));
    }

    #[test]
    fn worst_seed_reproduces_worst_margin() {
        let config = small(&[InequalityFamily::HTerm, InequalityFamily::Theorem2], 4);
        let report = run_sweep(&config).unwrap();
        for c in &report.certificates {
            let (_, r) = run_trial(&config, c.family, &c.cell, c.worst_seed.unwrap()).unwrap();
            assert!((r.margin - c.worst_margin.unwrap()).abs() <= 1e-15);
        }
    }

    #[test]
    fn forced_violation_round_trips_through_replay() {
        // a negative tolerance turns every trial into a counterexample
        let mut config = small(&[InequalityFamily::Mixing], 2);
        config.mixing_p = vec![0.5];
        config.tolerances.insert(InequalityFamily::Mixing, -1e3);
        assert!(config.validate().is_err());
        let cell = cells(&config, InequalityFamily::Mixing).remove(0);
        let (cert, counterexamples) = run_cell(&config, InequalityFamily::Mixing, &cell);
        assert_eq!(cert.violations, 2);
        let dir = tempfile::tempdir().unwrap();
        let paths = write_counterexamples(dir.path(), &counterexamples).unwrap();
        for (path, cex) in paths.iter().zip(&counterexamples) {
            let name = path.file_name().unwrap().to_str().unwrap();
            assert!(name.starts_with("mixing-") && name.ends_with(&format!("-{}.json", cex.seed)));
            let r = replay(path).unwrap();
            assert!((r.margin - cex.result.margin).abs() <= 1e-15);
        }
    }

    #[test]
    fn corrupted_record_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"family": "prop1", "seed": 1}"#).unwrap();
        assert!(matches!(replay(&path), Err(Error::Format(_))));
        std::fs::write(&path, "not json").unwrap();
        assert!(matches!(replay(&path), Err(Error::Format(_))));
    }

    #[test]
    fn inconclusive_when_trials_fail() {
        // p above the range instance_xy accepts makes every l_term trial fail
        let mut config = small(&[InequalityFamily::LTerm], 3);
        config.l_term_p = vec![0.125];
        let cell = Cell {
            dim: Some(4),
            p: Some(0.3),
            ..Cell::default()
        };
        let (cert, _) = run_cell(&config, InequalityFamily::LTerm, &cell);
        assert_eq!(cert.failures, 3);
        assert!(cert.inconclusive && !cert.ok());
        assert!(cert.worst_margin.is_none());
    }
}
