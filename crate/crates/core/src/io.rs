//! Serializable document forms of the crate's data.
//!
//! Complex numbers are `{re, im}` objects, matrices are arrays of rows and
//! spins are given as twice their value. Coefficient indices are flattened
//! to integer lists:
//!
//! * single: `[L, M]`;
//! * product: `[L1, M1, L2, M2, ...]`;
//! * coupled: `[L1, ..., Ln, K12, ..., K, M]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{EulerAngles, SpinValue};
use crate::density::{BasisKind, CoeffKey, CoeffTable, DensityMatrix};
use crate::error::{Error, Result};
use crate::hamiltonian::{CouplingModel, SpinSystemSpec};
use crate::linalg::CMatrix;
use crate::multipole::{PointSource, SourceKind};
use crate::quadrature::GridSpec;
use crate::tensor::{CoupledLabel, TensorBasis, TensorIndex};
use crate::tomography::{Detection, ErrorCandidate, GridPoint, MomentRecord, PauliError, Tomogram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

pub type MatrixJson = Vec<Vec<ComplexJson>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    m.rows().map(|row| row.iter().map(|&z| z.into()).collect()).collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix> {
    CMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&z| z.into()).collect()).collect())
}

fn system_to_json(system: &[SpinValue]) -> Vec<u32> {
    system.iter().map(|s| s.twice()).collect()
}

fn system_from_json(twice: &[u32]) -> Result<Vec<SpinValue>> {
    if twice.is_empty() {
        return Err(Error::invalid("system must list at least one spin"));
    }
    twice
        .iter()
        .map(|&t| {
            if t == 0 || t > crate::angular::MAX_TWICE_J {
                Err(Error::invalid(format!("spin_twice {t} out of range 1..={}", crate::angular::MAX_TWICE_J)))
            } else {
                Ok(SpinValue::from_twice(t))
            }
        })
        .collect()
}

/// One element of an exported tensor basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisElementJson {
    #[serde(rename = "L")]
    pub rank: u32,
    #[serde(rename = "M")]
    pub m: i32,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDoc {
    pub spin_twice: u32,
    pub elements: Vec<BasisElementJson>,
}

impl From<&TensorBasis> for BasisDoc {
    fn from(b: &TensorBasis) -> Self {
        BasisDoc {
            spin_twice: b.spin().twice(),
            elements: b
                .elements()
                .iter()
                .map(|(idx, t)| BasisElementJson { rank: idx.rank, m: idx.m, matrix: matrix_to_json(t) })
                .collect(),
        }
    }
}

/// Density matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDoc {
    pub system: Vec<u32>,
    pub matrix: MatrixJson,
}

impl From<&DensityMatrix> for StateDoc {
    fn from(rho: &DensityMatrix) -> Self {
        StateDoc { system: system_to_json(rho.system()), matrix: matrix_to_json(rho.matrix()) }
    }
}

impl StateDoc {
    /// Parses and validates with the given tolerance.
    pub fn to_density(&self, tol: f64) -> Result<DensityMatrix> {
        DensityMatrix::with_tolerance(matrix_from_json(&self.matrix)?, system_from_json(&self.system)?, tol)
    }

    pub fn system(&self) -> Result<Vec<SpinValue>> {
        system_from_json(&self.system)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntryJson {
    pub index: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

/// Coefficient table file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffDoc {
    pub basis: BasisKind,
    pub system: Vec<u32>,
    pub entries: Vec<CoeffEntryJson>,
}

fn flatten_key(key: &CoeffKey) -> Vec<i64> {
    match key {
        CoeffKey::Sites(idx) => idx.iter().flat_map(|i| [i64::from(i.rank), i64::from(i.m)]).collect(),
        CoeffKey::Coupled { label, m } => label
            .ranks
            .iter()
            .chain(&label.couplings)
            .map(|&x| i64::from(x))
            .chain(std::iter::once(i64::from(*m)))
            .collect(),
    }
}

fn to_u32(x: i64) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::invalid(format!("rank {x} must be a non-negative integer")))
}

fn to_i32(x: i64) -> Result<i32> {
    i32::try_from(x).map_err(|_| Error::invalid(format!("projection {x} out of range")))
}

fn unflatten_key(kind: BasisKind, n: usize, index: &[i64]) -> Result<CoeffKey> {
    match kind {
        BasisKind::Single | BasisKind::Product => {
            if index.len() != 2 * n {
                return Err(Error::invalid(format!("index {index:?} should have {} entries", 2 * n)));
            }
            let idx = index.chunks(2).map(|p| Ok(TensorIndex::new(to_u32(p[0])?, to_i32(p[1])?))).collect::<Result<_>>()?;
            Ok(CoeffKey::Sites(idx))
        }
        BasisKind::Coupled => {
            if index.len() != 2 * n {
                return Err(Error::invalid(format!("coupled index {index:?} should have {} entries", 2 * n)));
            }
            let ranks = index[..n].iter().map(|&x| to_u32(x)).collect::<Result<_>>()?;
            let couplings = index[n..2 * n - 1].iter().map(|&x| to_u32(x)).collect::<Result<_>>()?;
            Ok(CoeffKey::Coupled { label: CoupledLabel { ranks, couplings }, m: to_i32(index[2 * n - 1])? })
        }
    }
}

impl From<&CoeffTable> for CoeffDoc {
    fn from(t: &CoeffTable) -> Self {
        CoeffDoc {
            basis: t.kind(),
            system: system_to_json(t.system()),
            entries: t.iter().map(|(k, v)| CoeffEntryJson { index: flatten_key(k), re: v.re, im: v.im }).collect(),
        }
    }
}

impl CoeffDoc {
    pub fn to_table(&self) -> Result<CoeffTable> {
        let system = system_from_json(&self.system)?;
        let n = system.len();
        let mut table = CoeffTable::new(system, self.basis)?;
        for e in &self.entries {
            let key = unflatten_key(self.basis, n, &e.index)?;
            if table.get(&key) != Complex64::new(0.0, 0.0) {
                return Err(Error::invalid(format!("duplicate coefficient index {:?}", e.index)));
            }
            table.insert(key, Complex64::new(e.re, e.im))?;
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPointJson {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordJson {
    pub point_index: usize,
    /// Total rank of the recorded label.
    #[serde(rename = "L")]
    pub rank: u32,
    pub ranks: Vec<u32>,
    pub couplings: Vec<u32>,
    pub value: f64,
}

/// Tomogram file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomogramDoc {
    pub system: Vec<u32>,
    pub grid_spec: GridSpec,
    pub seed: u64,
    pub noise_sigma: f64,
    pub grid: Vec<GridPointJson>,
    pub records: Vec<RecordJson>,
}

impl From<&Tomogram> for TomogramDoc {
    fn from(t: &Tomogram) -> Self {
        TomogramDoc {
            system: system_to_json(&t.system),
            grid_spec: t.grid_spec,
            seed: t.seed,
            noise_sigma: t.noise_sigma,
            grid: t
                .points
                .iter()
                .map(|p| GridPointJson { alpha: p.angles.alpha, beta: p.angles.beta, gamma: p.angles.gamma, weight: p.weight })
                .collect(),
            records: t
                .records
                .iter()
                .map(|r| RecordJson {
                    point_index: r.point_index,
                    rank: r.label.total_rank(),
                    ranks: r.label.ranks.clone(),
                    couplings: r.label.couplings.clone(),
                    value: r.value,
                })
                .collect(),
        }
    }
}

impl TomogramDoc {
    pub fn to_tomogram(&self) -> Result<Tomogram> {
        let system = system_from_json(&self.system)?;
        let points = self
            .grid
            .iter()
            .map(|p| GridPoint { angles: EulerAngles::new(p.alpha, p.beta, p.gamma), weight: p.weight })
            .collect();
        let records = self
            .records
            .iter()
            .map(|r| {
                let label = CoupledLabel { ranks: r.ranks.clone(), couplings: r.couplings.clone() };
                label.check(&system)?;
                if label.total_rank() != r.rank {
                    return Err(Error::invalid(format!("record L = {} disagrees with its label", r.rank)));
                }
                Ok(MomentRecord { point_index: r.point_index, label, value: r.value })
            })
            .collect::<Result<_>>()?;
        Ok(Tomogram { system, grid_spec: self.grid_spec, points, records, noise_sigma: self.noise_sigma, seed: self.seed })
    }
}

/// Error candidate as JSON: `"none"`, a single `{site, axis}` or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CandidateJson {
    Label(String),
    Single(PauliError),
    Product(Vec<PauliError>),
}

impl From<&ErrorCandidate> for CandidateJson {
    fn from(c: &ErrorCandidate) -> Self {
        match c.errors() {
            [] => CandidateJson::Label("none".into()),
            [e] => CandidateJson::Single(*e),
            many => CandidateJson::Product(many.to_vec()),
        }
    }
}

impl CandidateJson {
    pub fn to_candidate(&self) -> Result<ErrorCandidate> {
        match self {
            CandidateJson::Label(s) => s.parse(),
            CandidateJson::Single(e) => Ok(ErrorCandidate(vec![*e])),
            CandidateJson::Product(v) => Ok(ErrorCandidate(v.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerUpJson {
    pub candidate: CandidateJson,
    pub residual: f64,
}

/// Detection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionDoc {
    pub detected: CandidateJson,
    pub residual: f64,
    pub ambiguous: bool,
    pub runner_up: Option<RunnerUpJson>,
    pub tied: Vec<CandidateJson>,
    pub cap: u32,
}

impl DetectionDoc {
    pub fn new(d: &Detection, cap: u32) -> Self {
        DetectionDoc {
            detected: (&d.detected).into(),
            residual: d.residual,
            ambiguous: d.ambiguous,
            runner_up: d.runner_up.as_ref().map(|r| RunnerUpJson { candidate: (&r.candidate).into(), residual: r.residual }),
            tied: d.tied.iter().map(Into::into).collect(),
            cap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingJson {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "J")]
    pub value: f64,
}

/// Spin-chain specification file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDoc {
    pub n: usize,
    pub mu_b0: f64,
    #[serde(default)]
    pub couplings: Vec<CouplingJson>,
    #[serde(default)]
    pub model: CouplingModel,
}

impl ChainDoc {
    pub fn to_spec(&self) -> Result<SpinSystemSpec> {
        let mut spec = SpinSystemSpec::new(self.n, self.mu_b0)?;
        for c in &self.couplings {
            spec.set_coupling(c.i, c.j, c.value)?;
        }
        Ok(spec)
    }
}

/// Point-source distribution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcesDoc {
    pub sources: Vec<PointSource>,
    #[serde(default)]
    pub kind: SourceKind,
}
