//! Density matrices and their polarization-tensor coefficient tables.
//!
//! A coefficient table stores `c_k = Tr(B_k† A)` over an orthonormal operator
//! basis `{B_k}`, so that `A = Σ c_k B_k`. Three bases are supported:
//!
//! * `Single`: `T_{L,M}(S)` of one spin;
//! * `Product`: `T_{L1,M1}(S1) ⊗ ... ⊗ T_{Ln,Mn}(Sn)`;
//! * `Coupled`: iterated Clebsch–Gordan combinations of product tensors with
//!   definite total rank (see [`crate::tensor::coupled_operator`]).
//!
//! Tables are sparse: an absent entry is zero.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::angular::{big_d_unchecked, cg_unchecked, wigner_D_matrix, EulerAngles, Projection, SpinValue};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, ZERO};
use crate::tensor::{coupled_family, coupled_labels, coupled_operator, shared_basis, CoupledLabel, TensorIndex};

/// Default tolerance for Hermiticity, unit trace and positivity checks.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Operator basis a [`CoeffTable`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Single,
    Product,
    Coupled,
}

impl std::str::FromStr for BasisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(BasisKind::Single),
            "product" => Ok(BasisKind::Product),
            "coupled" => Ok(BasisKind::Coupled),
            other => Err(Error::invalid(format!("unknown basis kind {other:?}"))),
        }
    }
}

/// Key of one coefficient.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CoeffKey {
    /// One tensor index per site (a single-spin table has exactly one).
    Sites(Vec<TensorIndex>),
    Coupled { label: CoupledLabel, m: i32 },
}

impl CoeffKey {
    pub fn single(rank: u32, m: i32) -> Self {
        CoeffKey::Sites(vec![TensorIndex::new(rank, m)])
    }

    /// Multipole order of the basis element: `L` for one site, `Σ L_i` for a
    /// product element, the total rank `K` for a coupled element.
    pub fn rank(&self) -> u32 {
        match self {
            CoeffKey::Sites(idx) => idx.iter().map(|i| i.rank).sum(),
            CoeffKey::Coupled { label, .. } => label.total_rank(),
        }
    }
}

/// Sparse coefficient table over one of the tensor bases.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    system: Vec<SpinValue>,
    kind: BasisKind,
    entries: BTreeMap<CoeffKey, Complex64>,
}

impl CoeffTable {
    pub fn new(system: Vec<SpinValue>, kind: BasisKind) -> Result<Self> {
        if system.is_empty() {
            return Err(Error::invalid("coefficient table needs at least one spin"));
        }
        if kind == BasisKind::Single && system.len() != 1 {
            return Err(Error::invalid("single-spin table must describe exactly one spin"));
        }
        Ok(CoeffTable { system, kind, entries: BTreeMap::new() })
    }

    pub fn system(&self) -> &[SpinValue] {
        &self.system
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.system.iter().map(|s| s.dim()).product()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CoeffKey, &Complex64)> {
        self.entries.iter()
    }

    /// Value at `key`, zero if absent.
    pub fn get(&self, key: &CoeffKey) -> Complex64 {
        self.entries.get(key).copied().unwrap_or(ZERO)
    }

    pub fn check_key(&self, key: &CoeffKey) -> Result<()> {
        match (self.kind, key) {
            (BasisKind::Single | BasisKind::Product, CoeffKey::Sites(idx)) => {
                if idx.len() != self.system.len() {
                    return Err(Error::invalid(format!(
                        "index has {} sites, table has {}",
                        idx.len(),
                        self.system.len()
                    )));
                }
                idx.iter().zip(&self.system).try_for_each(|(i, s)| i.check(*s))
            }
            (BasisKind::Coupled, CoeffKey::Coupled { label, m }) => {
                label.check(&self.system)?;
                if m.unsigned_abs() > label.total_rank() {
                    return Err(Error::invalid(format!("projection {m} exceeds coupled rank {}", label.total_rank())));
                }
                Ok(())
            }
            _ => Err(Error::invalid(format!("key {key:?} does not belong to a {:?} table", self.kind))),
        }
    }

    /// Inserts a value after validating the key against the system.
    pub fn insert(&mut self, key: CoeffKey, value: Complex64) -> Result<()> {
        self.check_key(&key)?;
        self.entries.insert(key, value);
        Ok(())
    }

    pub(crate) fn insert_unchecked(&mut self, key: CoeffKey, value: Complex64) {
        self.entries.insert(key, value);
    }

    /// Entries whose rank is at most `max_rank`; kept values are copied bit for bit.
    pub fn restrict_to_rank(&self, max_rank: u32) -> CoeffTable {
        CoeffTable {
            system: self.system.clone(),
            kind: self.kind,
            entries: self.entries.iter().filter(|(k, _)| k.rank() <= max_rank).map(|(k, v)| (k.clone(), *v)).collect(),
        }
    }

    /// Drops entries with magnitude at or below `tol`.
    pub fn pruned(&self, tol: f64) -> CoeffTable {
        CoeffTable {
            system: self.system.clone(),
            kind: self.kind,
            entries: self.entries.iter().filter(|(_, v)| v.norm() > tol).map(|(k, v)| (k.clone(), *v)).collect(),
        }
    }

    fn same_space(&self, other: &CoeffTable) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::BasisMismatch { expected: self.kind, found: other.kind });
        }
        if self.system != other.system {
            return Err(Error::invalid("coefficient tables describe different spin systems"));
        }
        Ok(())
    }

    /// Entrywise `self + scale * other` over the union of keys.
    pub fn add_scaled(&self, scale: f64, other: &CoeffTable) -> Result<CoeffTable> {
        self.same_space(other)?;
        let mut out = self.clone();
        for (k, v) in &other.entries {
            *out.entries.entry(k.clone()).or_insert(ZERO) += scale * v;
        }
        Ok(out)
    }

    /// Euclidean distance over the union of keys.
    pub fn distance(&self, other: &CoeffTable) -> Result<f64> {
        self.same_space(other)?;
        let mut acc = 0.0;
        for (k, v) in &self.entries {
            acc += (v - other.get(k)).norm_sqr();
        }
        for (k, v) in &other.entries {
            if !self.entries.contains_key(k) {
                acc += v.norm_sqr();
            }
        }
        Ok(acc.sqrt())
    }

    /// `Σ |c|²`, which equals `Tr(A† A)` for the represented operator.
    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|v| v.norm_sqr()).sum()
    }

    /// Largest rank present with a non-zero value.
    pub fn max_rank(&self) -> u32 {
        self.entries.iter().filter(|(_, v)| v.norm() > 0.0).map(|(k, _)| k.rank()).max().unwrap_or(0)
    }
}

/// Pure state amplitudes in the descending-`m` (Kronecker-ordered) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes whose norm is `1 ± 1e-12`.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if amps.is_empty() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state vector norm {n} is not 1")));
        }
        Ok(StateVector { amps })
    }

    /// Rescales non-zero amplitudes to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(StateVector { amps: amps.into_iter().map(|a| a / n).collect() })
    }

    /// `a|0> + b|1>` for one qubit, `|0>` being spin up.
    pub fn qubit(a: Complex64, b: Complex64) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn projector(&self) -> CMatrix {
        CMatrix::outer(&self.amps, &self.amps)
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        let amps = self.amps.iter().flat_map(|a| other.amps.iter().map(move |b| a * b)).collect();
        StateVector { amps }
    }
}

/// Outcome of [`validate_density`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dimension_ok: bool,
    pub finite: bool,
    pub hermiticity_deviation: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks Hermiticity, unit trace, positivity and the dimension of the
/// system's product space. Never fails; problems are listed in the report.
pub fn validate_density(rho: &CMatrix, system: &[SpinValue], tol: f64) -> ValidationReport {
    let mut failures = Vec::new();
    let expected: usize = system.iter().map(|s| s.dim()).product();
    let dimension_ok = !system.is_empty() && expected == rho.dim();
    if !dimension_ok {
        failures.push(format!("dimension {} does not match spin system product {}", rho.dim(), expected));
    }
    let finite = rho.is_finite();
    if !finite {
        failures.push("matrix has non-finite entries".into());
    }
    let herm = rho.hermiticity_deviation();
    if herm > tol {
        failures.push(format!("not Hermitian: max |rho - rho^H| = {herm:e}"));
    }
    let trace_dev = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    if trace_dev > tol {
        failures.push(format!("trace deviates from 1 by {trace_dev:e}"));
    }
    let min_eig = if finite && rho.dim() > 0 {
        hermitian_eigen(rho, f64::INFINITY).map(|e| e.values[0]).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    if !(min_eig >= -tol) {
        failures.push(format!("not positive semidefinite: min eigenvalue {min_eig:e}"));
    }
    ValidationReport {
        dimension_ok,
        finite,
        hermiticity_deviation: herm,
        trace_deviation: trace_dev,
        min_eigenvalue: min_eig,
        tolerance: tol,
        passed: failures.is_empty(),
        failures,
    }
}

/// A validated density matrix on the product space of `system`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    system: Vec<SpinValue>,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, system: Vec<SpinValue>) -> Result<Self> {
        Self::with_tolerance(matrix, system, VALIDITY_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, system: Vec<SpinValue>, tol: f64) -> Result<Self> {
        let report = validate_density(&matrix, &system, tol);
        if !report.passed {
            return Err(Error::InvalidState(report.failures.join("; ")));
        }
        Ok(DensityMatrix { matrix, system })
    }

    /// Skips validation; callers guarantee the invariants (or, for truncated
    /// reconstructions, deliberately carry a candidate that may violate them).
    pub fn new_unchecked(matrix: CMatrix, system: Vec<SpinValue>) -> Self {
        DensityMatrix { matrix, system }
    }

    pub fn from_pure(state: &StateVector, system: Vec<SpinValue>) -> Result<Self> {
        Self::new(state.projector(), system)
    }

    /// `|ψ><ψ|` on `n` qubits.
    pub fn qubits_pure(state: &StateVector) -> Result<Self> {
        let n = state.dim().trailing_zeros() as usize;
        if 1 << n != state.dim() {
            return Err(Error::invalid(format!("dimension {} is not a power of two", state.dim())));
        }
        Self::from_pure(state, vec![SpinValue::HALF; n])
    }

    pub fn maximally_mixed(system: Vec<SpinValue>) -> Self {
        let d: usize = system.iter().map(|s| s.dim()).product();
        DensityMatrix { matrix: CMatrix::identity(d).scale_real(1.0 / d as f64), system }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn system(&self) -> &[SpinValue] {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.inner(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigen(&self.matrix, VALIDITY_TOL)?.values)
    }

    /// Applies a unitary: `U ρ U†`.
    pub fn conjugated(&self, u: &CMatrix) -> DensityMatrix {
        DensityMatrix { matrix: self.matrix.conjugate_by(u), system: self.system.clone() }
    }
}

fn basis_for(system: &[SpinValue], dim: usize) -> Result<()> {
    let expected: usize = system.iter().map(|s| s.dim()).product();
    if expected != dim {
        return Err(Error::DimensionMismatch { expected, found: dim });
    }
    Ok(())
}

/// Single-spin decomposition `c(L,M) = Tr(T†_{L,M} A)` of any square matrix.
pub fn decompose(a: &CMatrix, spin: SpinValue) -> Result<CoeffTable> {
    basis_for(&[spin], a.dim())?;
    let basis = shared_basis(spin);
    let mut table = CoeffTable::new(vec![spin], BasisKind::Single)?;
    for (idx, t) in basis.elements() {
        table.insert_unchecked(CoeffKey::Sites(vec![*idx]), t.inner(a));
    }
    Ok(table)
}

/// Decomposition of an operator on a multi-spin space in the chosen basis.
pub fn decompose_system(a: &CMatrix, system: &[SpinValue], kind: BasisKind) -> Result<CoeffTable> {
    basis_for(system, a.dim())?;
    match kind {
        BasisKind::Single => {
            if system.len() != 1 {
                return Err(Error::invalid("single-spin basis requires a one-spin system"));
            }
            decompose(a, system[0])
        }
        BasisKind::Product => {
            let mut table = CoeffTable::new(system.to_vec(), BasisKind::Product)?;
            for (key, op) in product_elements(system) {
                table.insert_unchecked(CoeffKey::Sites(key), op.inner(a));
            }
            Ok(table)
        }
        BasisKind::Coupled => {
            let mut table = CoeffTable::new(system.to_vec(), BasisKind::Coupled)?;
            for label in coupled_labels(system) {
                let k = label.total_rank() as i32;
                let family = coupled_family(system, &label)?;
                for (m, op) in (-k..=k).zip(family.iter()) {
                    table.insert_unchecked(CoeffKey::Coupled { label: label.clone(), m }, op.inner(a));
                }
            }
            Ok(table)
        }
    }
}

/// Every product-basis element as `(site indices, operator)`.
fn product_elements(system: &[SpinValue]) -> Vec<(Vec<TensorIndex>, CMatrix)> {
    let mut acc: Vec<(Vec<TensorIndex>, CMatrix)> = vec![(Vec::new(), CMatrix::identity(1))];
    for &s in system {
        let basis = shared_basis(s);
        acc = acc
            .into_iter()
            .flat_map(|(key, op)| {
                basis.elements().iter().map(move |(idx, t)| {
                    let mut k = key.clone();
                    k.push(*idx);
                    (k, op.kron(t))
                })
            })
            .collect();
    }
    acc
}

/// `Σ c_k B_k` in the table's basis; exact inverse of the decompositions.
pub fn reconstruct(table: &CoeffTable) -> Result<CMatrix> {
    let system = table.system();
    let mut out = CMatrix::zeros(table.dim());
    for (key, &v) in table.iter() {
        table.check_key(key)?;
        if v == ZERO {
            continue;
        }
        let op = match key {
            CoeffKey::Sites(idx) => {
                let factors: Vec<CMatrix> = idx
                    .iter()
                    .zip(system)
                    .map(|(i, s)| shared_basis(*s).get(*i).cloned())
                    .collect::<Result<_>>()?;
                CMatrix::kron_all(&factors)
            }
            CoeffKey::Coupled { label, m } => coupled_operator(system, label, *m)?,
        };
        out.add_scaled(v, &op);
    }
    Ok(out)
}

/// Left-associated Kronecker product `((ρ1 ⊗ ρ2) ⊗ ρ3) ⊗ ...`.
pub fn kron_density(states: &[DensityMatrix]) -> Result<DensityMatrix> {
    let first = states.first().ok_or_else(|| Error::invalid("kron_density needs at least one state"))?;
    let mut matrix = first.matrix.clone();
    let mut system = first.system.clone();
    for s in &states[1..] {
        matrix = matrix.kron(&s.matrix);
        system.extend_from_slice(&s.system);
    }
    Ok(DensityMatrix { matrix, system })
}

/// Product-basis table whose entries are products of the single-spin
/// coefficients: `c(idx1, ..., idxn) = Π c_i(idx_i)`.
pub fn product_coeffs(tables: &[CoeffTable]) -> Result<CoeffTable> {
    if tables.is_empty() {
        return Err(Error::invalid("product_coeffs needs at least one table"));
    }
    let mut system = Vec::new();
    let mut acc: Vec<(Vec<TensorIndex>, Complex64)> = vec![(Vec::new(), Complex64::new(1.0, 0.0))];
    for t in tables {
        if t.kind() != BasisKind::Single {
            return Err(Error::BasisMismatch { expected: BasisKind::Single, found: t.kind() });
        }
        system.push(t.system()[0]);
        let mut next = Vec::with_capacity(acc.len() * t.len());
        for (key, v) in &acc {
            for (k, c) in t.iter() {
                let CoeffKey::Sites(idx) = k else { unreachable!("single tables hold site keys") };
                let mut nk = key.clone();
                nk.push(idx[0]);
                next.push((nk, v * c));
            }
        }
        acc = next;
    }
    let mut out = CoeffTable::new(system, BasisKind::Product)?;
    for (k, v) in acc {
        out.insert_unchecked(CoeffKey::Sites(k), v);
    }
    Ok(out)
}

/// Product of the Clebsch–Gordan factors along the left-to-right coupling
/// chain of `label` for site projections `ms`.
fn coupling_chain_factor(label: &CoupledLabel, ms: &[i32]) -> f64 {
    let mut k_prev = label.ranks[0];
    let mut m_acc = ms[0];
    let mut f = 1.0;
    for ((&l, &k), &m) in label.ranks[1..].iter().zip(&label.couplings).zip(&ms[1..]) {
        let m_next = m_acc + m;
        if m_next.unsigned_abs() > k {
            return 0.0;
        }
        f *= cg_unchecked(
            SpinValue::integer(k_prev),
            Projection::integer(m_acc),
            SpinValue::integer(l),
            Projection::integer(m),
            SpinValue::integer(k),
            Projection::integer(m_next),
        );
        if f == 0.0 {
            return 0.0;
        }
        k_prev = k;
        m_acc = m_next;
    }
    f
}

/// All site-projection tuples for the given site ranks.
fn projection_tuples(ranks: &[u32]) -> Vec<Vec<i32>> {
    let mut acc: Vec<Vec<i32>> = vec![Vec::new()];
    for &l in ranks {
        let l = l as i32;
        acc = acc
            .into_iter()
            .flat_map(|v| {
                (-l..=l).map(move |m| {
                    let mut w = v.clone();
                    w.push(m);
                    w
                })
            })
            .collect();
    }
    acc
}

/// Converts a product-basis table to the coupled basis by iterated pairwise
/// Clebsch–Gordan coupling (one factor per coupling step).
pub fn couple_product_coeffs(table: &CoeffTable) -> Result<CoeffTable> {
    if table.kind() != BasisKind::Product {
        return Err(Error::BasisMismatch { expected: BasisKind::Product, found: table.kind() });
    }
    let system = table.system();
    let mut out = CoeffTable::new(system.to_vec(), BasisKind::Coupled)?;
    for label in coupled_labels(system) {
        let k = label.total_rank() as i32;
        let tuples = projection_tuples(&label.ranks);
        for m in -k..=k {
            let mut acc = ZERO;
            for ms in tuples.iter().filter(|ms| ms.iter().sum::<i32>() == m) {
                let f = coupling_chain_factor(&label, ms);
                if f == 0.0 {
                    continue;
                }
                let key = CoeffKey::Sites(label.ranks.iter().zip(ms).map(|(&l, &mm)| TensorIndex::new(l, mm)).collect());
                acc += f * table.get(&key);
            }
            out.insert_unchecked(CoeffKey::Coupled { label: label.clone(), m }, acc);
        }
    }
    Ok(out)
}

/// Two-spin coupling of a product-basis table.
pub fn couple_two_spin_coeffs(table: &CoeffTable) -> Result<CoeffTable> {
    if table.kind() != BasisKind::Product {
        return Err(Error::BasisMismatch { expected: BasisKind::Product, found: table.kind() });
    }
    if table.system().len() != 2 {
        return Err(Error::invalid(format!("expected a two-spin table, found {} spins", table.system().len())));
    }
    couple_product_coeffs(table)
}

/// Inverse of [`couple_product_coeffs`].
pub fn uncouple_coeffs(table: &CoeffTable) -> Result<CoeffTable> {
    if table.kind() != BasisKind::Coupled {
        return Err(Error::BasisMismatch { expected: BasisKind::Coupled, found: table.kind() });
    }
    let mut out = CoeffTable::new(table.system().to_vec(), BasisKind::Product)?;
    let mut acc: BTreeMap<Vec<TensorIndex>, Complex64> = BTreeMap::new();
    for (key, &v) in table.iter() {
        let CoeffKey::Coupled { label, m } = key else { unreachable!("coupled tables hold coupled keys") };
        for ms in projection_tuples(&label.ranks).into_iter().filter(|ms| ms.iter().sum::<i32>() == *m) {
            let f = coupling_chain_factor(label, &ms);
            if f == 0.0 {
                continue;
            }
            let idx: Vec<TensorIndex> = label.ranks.iter().zip(&ms).map(|(&l, &mm)| TensorIndex::new(l, mm)).collect();
            *acc.entry(idx).or_insert(ZERO) += f * v;
        }
    }
    for (k, v) in acc {
        out.insert_unchecked(CoeffKey::Sites(k), v);
    }
    Ok(out)
}

/// Collective rotation operator `D^{S1}(Ω) ⊗ ... ⊗ D^{Sn}(Ω)`.
pub fn collective_rotation(system: &[SpinValue], angles: EulerAngles) -> CMatrix {
    let factors: Vec<CMatrix> = system.iter().map(|&s| wigner_D_matrix(s, angles)).collect();
    CMatrix::kron_all(&factors)
}

/// `D ρ D†` with the same rotation applied to every spin of the system. A
/// one-spin system rotates as a single total spin.
pub fn rotate_density(rho: &DensityMatrix, angles: EulerAngles) -> DensityMatrix {
    rho.conjugated(&collective_rotation(&rho.system, angles))
}

/// Coefficient-space image of [`rotate_density`]: each rank block mixes
/// through its Wigner matrix, `c'_{M'} = Σ_M D^K_{M',M} c_M`.
pub fn rotate_coeffs(table: &CoeffTable, angles: EulerAngles) -> Result<CoeffTable> {
    let mut out = CoeffTable::new(table.system().to_vec(), table.kind())?;
    for (key, &v) in table.iter() {
        table.check_key(key)?;
        match key {
            CoeffKey::Coupled { label, m } => {
                let k = label.total_rank();
                let ks = SpinValue::integer(k);
                for mp in -(k as i32)..=(k as i32) {
                    let d = big_d_unchecked(ks, Projection::integer(mp), Projection::integer(*m), angles);
                    let nk = CoeffKey::Coupled { label: label.clone(), m: mp };
                    *out.entries.entry(nk).or_insert(ZERO) += d * v;
                }
            }
            CoeffKey::Sites(idx) => {
                let mut targets: Vec<(Vec<TensorIndex>, Complex64)> = vec![(Vec::new(), v)];
                for i in idx {
                    let ls = SpinValue::integer(i.rank);
                    targets = targets
                        .into_iter()
                        .flat_map(|(key, w)| {
                            TensorIndex::family(i.rank).map(move |t| {
                                let d = big_d_unchecked(ls, t.projection(), i.projection(), angles);
                                let mut nk = key.clone();
                                nk.push(t);
                                (nk, w * d)
                            })
                        })
                        .collect();
                }
                for (nk, w) in targets {
                    *out.entries.entry(CoeffKey::Sites(nk)).or_insert(ZERO) += w;
                }
            }
        }
    }
    Ok(out)
}

/// Random complex matrix with i.i.d. standard normal real and imaginary parts.
pub fn random_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let data = (0..dim * dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    CMatrix::from_flat(dim, data).expect("length matches")
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let amps: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    StateVector::normalized(amps).expect("gaussian vector is non-zero")
}

/// Random full-rank mixed state `G G† / Tr(G G†)` (Ginibre ensemble).
pub fn random_density<R: Rng + ?Sized>(system: &[SpinValue], rng: &mut R) -> DensityMatrix {
    let d: usize = system.iter().map(|s| s.dim()).product();
    let g = random_matrix(d, rng);
    let mut m = &g * &g.adjoint();
    let tr = m.trace().re;
    m = m.scale_real(1.0 / tr);
    for i in 0..d {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
    DensityMatrix { matrix: m, system: system.to_vec() }
}

/// Random pure state on `system` as a density matrix.
pub fn random_pure_density<R: Rng + ?Sized>(system: &[SpinValue], rng: &mut R) -> DensityMatrix {
    let d: usize = system.iter().map(|s| s.dim()).product();
    let psi = random_state(d, rng);
    DensityMatrix { matrix: psi.projector(), system: system.to_vec() }
}
