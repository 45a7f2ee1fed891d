//! JSON forms of states, generators and instances.
//!
//! A state is `{dims: [da, dA, dB, db], re: [[…]], im: [[…]]}`; a D×1 matrix
//! is a pure state and a D×D matrix a density matrix. A generator is
//! `{dims, H: {re, im}, Ls: [{re, im}, …]}` with H and every L on the AB
//! factor.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::LindbladGenerator;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::states::{DensityMatrix, DimensionSignature, PureState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        Self {
            re: (0..n).map(|i| m.row(i).iter().map(|z| z.re).collect()).collect(),
            im: (0..n).map(|i| m.row(i).iter().map(|z| z.im).collect()).collect(),
        }
    }

    pub fn column(v: &[C64]) -> Self {
        Self {
            re: v.iter().map(|z| vec![z.re]).collect(),
            im: v.iter().map(|z| vec![z.im]).collect(),
        }
    }

    /// Rows × columns, checking that `re` and `im` agree and are rectangular.
    fn shape(&self) -> Result<(usize, usize)> {
        let rows = self.re.len();
        if self.im.len() != rows || rows == 0 {
            return Err(Error::Format("re and im must have the same nonzero number of rows".into()));
        }
        let cols = self.re[0].len();
        if self.re.iter().chain(&self.im).any(|r| r.len() != cols) || cols == 0 {
            return Err(Error::Format("matrix rows must all have the same nonzero length".into()));
        }
        if self.re.iter().chain(&self.im).flatten().any(|x| !x.is_finite()) {
            return Err(Error::Format("matrix entries must be finite".into()));
        }
        Ok((rows, cols))
    }

    fn entries(&self) -> Vec<C64> {
        self.re
            .iter()
            .zip(&self.im)
            .flat_map(|(r, i)| r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)))
            .collect()
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let (rows, cols) = self.shape()?;
        if rows != cols {
            return Err(Error::Format(format!("expected a square matrix, got {rows}x{cols}")));
        }
        ComplexMatrix::from_vec(self.entries()).map_err(|e| Error::Format(e.to_string()))
    }
}

/// A pure state or a density matrix, as read from a state document.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl State {
    pub fn dims(&self) -> DimensionSignature {
        match self {
            State::Pure(psi) => psi.dims(),
            State::Mixed(rho) => rho.dims(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Pure(psi) => psi.density(),
            State::Mixed(rho) => rho.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&PureState> {
        match self {
            State::Pure(psi) => Some(psi),
            State::Mixed(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dims: [usize; 4],
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl StateJson {
    pub fn from_pure(psi: &PureState) -> Self {
        let m = MatrixJson::column(psi.amplitudes());
        Self {
            dims: psi.dims().factors(),
            re: m.re,
            im: m.im,
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let m = MatrixJson::from_matrix(rho.matrix());
        Self {
            dims: rho.dims().factors(),
            re: m.re,
            im: m.im,
        }
    }

    pub fn from_state(state: &State) -> Self {
        match state {
            State::Pure(psi) => Self::from_pure(psi),
            State::Mixed(rho) => Self::from_density(rho),
        }
    }

    pub fn decode(&self) -> Result<State> {
        let dims = DimensionSignature::try_from(self.dims)?;
        let m = MatrixJson {
            re: self.re.clone(),
            im: self.im.clone(),
        };
        let (rows, cols) = m.shape()?;
        if rows != dims.total() {
            return Err(Error::Format(format!("{rows} rows for total dimension {}", dims.total())));
        }
        match cols {
            1 => Ok(State::Pure(PureState::new(dims, m.entries())?)),
            c if c == rows => Ok(State::Mixed(DensityMatrix::new(dims, m.to_matrix()?)?)),
            c => Err(Error::Format(format!("state must be {rows}x1 or {rows}x{rows}, got {rows}x{c}"))),
        }
    }

    pub fn decode_pure(&self) -> Result<PureState> {
        match self.decode()? {
            State::Pure(psi) => Ok(psi),
            State::Mixed(_) => Err(Error::Format("expected a pure state (D x 1 amplitudes)".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorJson {
    pub dims: [usize; 4],
    #[serde(rename = "H")]
    pub h: MatrixJson,
    #[serde(rename = "Ls", default)]
    pub ls: Vec<MatrixJson>,
}

impl GeneratorJson {
    pub fn from_generator(gen: &LindbladGenerator) -> Self {
        Self {
            dims: gen.dims().factors(),
            h: MatrixJson::from_matrix(gen.hamiltonian()),
            ls: gen.lindblad_operators().iter().map(MatrixJson::from_matrix).collect(),
        }
    }

    pub fn decode(&self) -> Result<LindbladGenerator> {
        let dims = DimensionSignature::try_from(self.dims)?;
        let h = self.h.to_matrix()?;
        let ls = self.ls.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
        LindbladGenerator::new(dims, h, ls)
    }
}

/// Initial state plus generator, the input of `simulate` and `rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub state: StateJson,
    pub generator: GeneratorJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub struct Instance {
    pub state: State,
    pub generator: LindbladGenerator,
    pub seed: Option<u64>,
}

impl InstanceJson {
    pub fn new(state: &State, gen: &LindbladGenerator, seed: Option<u64>) -> Self {
        Self {
            state: StateJson::from_state(state),
            generator: GeneratorJson::from_generator(gen),
            seed,
        }
    }

    pub fn decode(&self) -> Result<Instance> {
        let state = self.state.decode()?;
        let generator = self.generator.decode()?;
        if state.dims() != generator.dims() {
            return Err(Error::Format("state and generator dims differ".into()));
        }
        Ok(Instance {
            state,
            generator,
            seed: self.seed,
        })
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
