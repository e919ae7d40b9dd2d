//! Spin operators and NMR-style Hamiltonians of spin-½ chains (ħ = 1).
//!
//! Site 0 is the leftmost Kronecker factor. The Zeeman energy scale `μB₀`
//! is a single parameter since μ and B₀ only appear as a product.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::VALIDITY_TOL;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, HermitianEigen, I, ONE, ZERO};

/// Largest chain accepted by the Hamiltonian builders (dimension 4096).
pub const MAX_SITES: usize = 12;

/// Cartesian axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::invalid(format!("unknown axis {other:?}"))),
        }
    }
}

/// Pauli matrix in the `(|↑>, |↓>)` basis.
pub fn pauli(axis: Axis) -> CMatrix {
    let m = match axis {
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, -I, I, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, -ONE],
    };
    CMatrix::from_flat(2, m.to_vec()).expect("2x2")
}

/// `op` acting on `site` of a register with the given local dimensions,
/// identities elsewhere.
pub fn embed_operator(op: &CMatrix, site: usize, dims: &[usize]) -> Result<CMatrix> {
    if site >= dims.len() {
        return Err(Error::invalid(format!("site {site} out of range for {} sites", dims.len())));
    }
    if op.dim() != dims[site] {
        return Err(Error::DimensionMismatch { expected: dims[site], found: op.dim() });
    }
    let left: usize = dims[..site].iter().product();
    let right: usize = dims[site + 1..].iter().product();
    Ok(CMatrix::identity(left).kron(op).kron(&CMatrix::identity(right)))
}

/// `E ⊗ ... ⊗ op ⊗ ... ⊗ E` on `n` qubits; for `n = 1` this is `op` itself.
pub fn embed_site(op: &CMatrix, site: usize, n: usize) -> Result<CMatrix> {
    check_sites(n)?;
    embed_operator(op, site, &vec![2; n])
}

fn check_sites(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("spin chain needs at least one site"));
    }
    if n > MAX_SITES {
        return Err(Error::invalid(format!("{n} sites exceed the limit of {MAX_SITES} (dimension 4096)")));
    }
    Ok(())
}

/// Total spin component `½ Σ_i σ_axis^(i)`.
pub fn total_spin_component(axis: Axis, n: usize) -> Result<CMatrix> {
    check_sites(n)?;
    let sigma = pauli(axis);
    let mut acc = CMatrix::zeros(1 << n);
    for site in 0..n {
        acc.add_scaled(Complex64::new(0.5, 0.0), &embed_site(&sigma, site, n)?);
    }
    Ok(acc)
}

/// `S² = S_x² + S_y² + S_z²` of the total spin, inter-site terms included.
pub fn total_spin_squared(n: usize) -> Result<CMatrix> {
    let mut acc = CMatrix::zeros(1 << n);
    for axis in Axis::ALL {
        let s = total_spin_component(axis, n)?;
        acc = &acc + &(&s * &s);
    }
    Ok(acc)
}

/// How the `J_ij` couplings act between two sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingModel {
    /// `J (σx σx + σy σy)`.
    #[default]
    XyPlane,
    /// `J (σx σx + σy σy + σz σz)`.
    Heisenberg,
}

impl CouplingModel {
    fn axes(self) -> &'static [Axis] {
        match self {
            CouplingModel::XyPlane => &[Axis::X, Axis::Y],
            CouplingModel::Heisenberg => &[Axis::X, Axis::Y, Axis::Z],
        }
    }
}

/// Parameters of an `n`-site spin-½ chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystemSpec {
    n: usize,
    mu_b0: f64,
    couplings: BTreeMap<(usize, usize), f64>,
}

impl SpinSystemSpec {
    pub fn new(n: usize, mu_b0: f64) -> Result<Self> {
        check_sites(n)?;
        if !mu_b0.is_finite() {
            return Err(Error::invalid("mu_b0 must be finite"));
        }
        Ok(SpinSystemSpec { n, mu_b0, couplings: BTreeMap::new() })
    }

    /// Sets `J_ij` (stored symmetrically). Re-setting a pair overwrites it.
    pub fn with_coupling(mut self, i: usize, j: usize, value: f64) -> Result<Self> {
        self.set_coupling(i, j, value)?;
        Ok(self)
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j {
            return Err(Error::invalid(format!("self-coupling J_{i}{i} is not allowed")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::invalid(format!("coupling ({i}, {j}) out of range for {} sites", self.n)));
        }
        if !value.is_finite() {
            return Err(Error::invalid("coupling must be finite"));
        }
        self.couplings.insert((i.min(j), i.max(j)), value);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu_b0(&self) -> f64 {
        self.mu_b0
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    /// Non-zero couplings as `(i, j, J)` with `i < j`.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.couplings.iter().map(|(&(i, j), &v)| (i, j, v))
    }
}

fn r(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Two-spin Hamiltonian
/// `-μB₀(σz⊗E) - μB₀(E⊗σz) + J₁₂(σx⊗σx) + J₁₂(σy⊗σy)`.
pub fn build_h2(spec: &SpinSystemSpec) -> Result<CMatrix> {
    if spec.n != 2 {
        return Err(Error::invalid(format!("H2 needs a two-site spec, got {}", spec.n)));
    }
    let e = CMatrix::identity(2);
    let (sx, sy, sz) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
    let j12 = spec.coupling(0, 1);
    let mut h = CMatrix::zeros(4);
    h.add_scaled(r(-spec.mu_b0), &sz.kron(&e));
    h.add_scaled(r(-spec.mu_b0), &e.kron(&sz));
    h.add_scaled(r(j12), &sx.kron(&sx));
    h.add_scaled(r(j12), &sy.kron(&sy));
    Ok(h)
}

/// Three-spin Hamiltonian with Zeeman terms on every site and `J₁₂`, `J₂₃`,
/// `J₃₁` couplings. Coupling operators sit in the tensor slots of the sites
/// they couple.
pub fn build_h3(spec: &SpinSystemSpec, model: CouplingModel) -> Result<CMatrix> {
    if spec.n != 3 {
        return Err(Error::invalid(format!("H3 needs a three-site spec, got {}", spec.n)));
    }
    let e = CMatrix::identity(2);
    let sz = pauli(Axis::Z);
    let mut h = CMatrix::zeros(8);
    h.add_scaled(r(-spec.mu_b0), &CMatrix::kron_all([&sz, &e, &e]));
    h.add_scaled(r(-spec.mu_b0), &CMatrix::kron_all([&e, &sz, &e]));
    h.add_scaled(r(-spec.mu_b0), &CMatrix::kron_all([&e, &e, &sz]));
    for &axis in model.axes() {
        let s = pauli(axis);
        h.add_scaled(r(spec.coupling(0, 1)), &CMatrix::kron_all([&s, &s, &e]));
        h.add_scaled(r(spec.coupling(1, 2)), &CMatrix::kron_all([&e, &s, &s]));
        // J₃₁ couples sites 3 and 1: operators in slots 1 and 3.
        h.add_scaled(r(spec.coupling(2, 0)), &CMatrix::kron_all([&s, &e, &s]));
    }
    Ok(h)
}

/// `-μB₀ Σ_i σz^(i) + Σ_{i<j} J_ij Σ_axes σ^(i) σ^(j)` for any chain length.
pub fn build_hn(spec: &SpinSystemSpec, model: CouplingModel) -> Result<CMatrix> {
    check_sites(spec.n)?;
    let n = spec.n;
    let mut h = CMatrix::zeros(1 << n);
    let sz = pauli(Axis::Z);
    for site in 0..n {
        h.add_scaled(r(-spec.mu_b0), &embed_site(&sz, site, n)?);
    }
    for (i, j, jij) in spec.couplings() {
        if jij == 0.0 {
            continue;
        }
        for &axis in model.axes() {
            let s = pauli(axis);
            let term = &embed_site(&s, i, n)? * &embed_site(&s, j, n)?;
            h.add_scaled(r(jij), &term);
        }
    }
    Ok(h)
}

/// Deterministic Hermitian eigensystem (ascending eigenvalues, column
/// eigenvectors). Rejects inputs that are not Hermitian within `1e-9`.
pub fn eigensystem(h: &CMatrix) -> Result<HermitianEigen> {
    hermitian_eigen(h, VALIDITY_TOL)
}

/// `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(&(a * b) - &(b * a))
}

/// Spectrum summary of a chain Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub mu_b0: f64,
    pub coupling_model: CouplingModel,
    pub couplings: Vec<CouplingEntry>,
    pub eigenvalues: Vec<f64>,
    /// Distinct eigenvalues (clusters within `1e-9 · max(1, ‖H‖)`).
    pub levels: Vec<f64>,
    /// Multiplicity of each entry of `levels`.
    pub degeneracies: Vec<usize>,
    /// `<v|S_z|v>` for every eigenvector, aligned with `eigenvalues`.
    pub sz_expectations: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "J")]
    pub value: f64,
}

pub fn spectrum_report(spec: &SpinSystemSpec, model: CouplingModel) -> Result<SpectrumReport> {
    let h = build_hn(spec, model)?;
    let eig = eigensystem(&h)?;
    let sz = total_spin_component(Axis::Z, spec.n)?;
    let tol = 1e-9 * h.max_abs().max(1.0);
    let mut levels: Vec<f64> = Vec::new();
    let mut degeneracies: Vec<usize> = Vec::new();
    let mut cluster: Vec<f64> = Vec::new();
    for &v in &eig.values {
        if let Some(&last) = cluster.last() {
            if (v - last).abs() > tol {
                levels.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
                degeneracies.push(cluster.len());
                cluster.clear();
            }
        }
        cluster.push(v);
    }
    if !cluster.is_empty() {
        levels.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
        degeneracies.push(cluster.len());
    }
    let sz_expectations = (0..h.dim())
        .map(|k| {
            let v = eig.vectors.column(k);
            let sv = sz.mul_vec(&v);
            v.iter().zip(&sv).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
        })
        .collect();
    Ok(SpectrumReport {
        n: spec.n,
        mu_b0: spec.mu_b0,
        coupling_model: model,
        couplings: spec.couplings().map(|(i, j, value)| CouplingEntry { i, j, value }).collect(),
        eigenvalues: eig.values,
        levels,
        degeneracies,
        sz_expectations,
    })
}
