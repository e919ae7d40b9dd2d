//! Rotation tomography, rank-limited reconstruction and Pauli-error detection.
//!
//! A tomogram records, for every grid orientation `Ω` and every coupled
//! label `λ` of total rank `K` and adjoint parity `p`, the real moment
//!
//! ```text
//! m_λ(Ω) = Tr(ρ · R(Ω) H_λ R(Ω)†),     H_λ = i^p O_{λ,0},
//! ```
//!
//! where `R` is the collective rotation of the system and `H_λ` is Hermitian.
//! Since `H_λ` commutes with rotations about z, the moment does not depend on
//! `γ`. Orthogonality of the Wigner functions over the grid inverts it:
//!
//! ```text
//! c_{λ,M} = i^p (2K+1)/(8π²) Σ_Ω w(Ω) D^K_{M,0}(Ω) m_λ(Ω).
//! ```

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::angular::{big_d_unchecked, EulerAngles, Projection, SpinValue};
use crate::density::{
    collective_rotation, decompose_system, reconstruct, validate_density, BasisKind, CoeffKey, CoeffTable,
    DensityMatrix, StateVector, VALIDITY_TOL,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hamiltonian::{embed_operator, pauli, Axis};
use crate::linalg::{hermitian_eigen, hermitian_function, CMatrix};
use crate::quadrature::GridSpec;
use crate::tensor::{coupled_labels, coupled_operator, CoupledLabel};

/// Residual gap below which two detection candidates count as tied.
pub const AMBIGUITY_TOL: f64 = 1e-9;

/// Eigenvalues below this are treated as zero inside the fidelity.
const FIDELITY_EIG_FLOOR: f64 = 1e-12;

/// Largest total rank the apparatus can observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessibilityPolicy {
    pub max_observable_rank: u32,
}

impl Default for AccessibilityPolicy {
    fn default() -> Self {
        AccessibilityPolicy { max_observable_rank: 2 }
    }
}

/// Ranks of a system split by the accessibility policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankPartition {
    pub observable: Vec<u32>,
    pub unobservable: Vec<u32>,
}

/// Total ranks carried by the coupled basis of `system`, split at the cap.
pub fn accessible_ranks(system: &[SpinValue], policy: AccessibilityPolicy) -> Result<RankPartition> {
    check_system(system)?;
    let top: u32 = system.iter().map(|s| s.twice()).sum();
    let (observable, unobservable) = (0..=top).partition(|&k| k <= policy.max_observable_rank);
    Ok(RankPartition { observable, unobservable })
}

fn check_system(system: &[SpinValue]) -> Result<()> {
    if system.is_empty() {
        return Err(Error::invalid("spin system is empty"));
    }
    Ok(())
}

fn table_kind(system: &[SpinValue]) -> BasisKind {
    if system.len() == 1 {
        BasisKind::Single
    } else {
        BasisKind::Coupled
    }
}

fn key_for(system_len: usize, label: &CoupledLabel, m: i32) -> CoeffKey {
    if system_len == 1 {
        CoeffKey::single(label.ranks[0], m)
    } else {
        CoeffKey::Coupled { label: label.clone(), m }
    }
}

fn i_pow(p: u32) -> Complex64 {
    match p % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Grid, rank cap and noise of a simulated measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographySettings {
    pub grid: GridSpec,
    /// Records only labels with total rank up to the cap; `None` records all.
    pub policy: Option<AccessibilityPolicy>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl TomographySettings {
    /// Noise-free settings with the smallest grid that resolves every rank
    /// of `system`.
    pub fn exact_for(system: &[SpinValue]) -> Self {
        let top: u32 = system.iter().map(|s| s.twice()).sum();
        TomographySettings { grid: GridSpec::minimal_for_rank(top), policy: None, noise_sigma: 0.0, seed: 0 }
    }

    pub fn with_policy(mut self, policy: AccessibilityPolicy) -> Self {
        self.policy = Some(policy);
        self
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }
}

/// One orientation of the quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub angles: EulerAngles,
    pub weight: f64,
}

/// One measured moment.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRecord {
    pub point_index: usize,
    pub label: CoupledLabel,
    pub value: f64,
}

/// Simulated rotation tomogram. Records are ordered by point, then label.
#[derive(Debug, Clone, PartialEq)]
pub struct Tomogram {
    pub system: Vec<SpinValue>,
    pub grid_spec: GridSpec,
    pub points: Vec<GridPoint>,
    pub records: Vec<MomentRecord>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Tomogram {
    /// Distinct labels present in the records, sorted.
    pub fn labels(&self) -> Vec<CoupledLabel> {
        let mut out: Vec<CoupledLabel> = self.records.iter().map(|r| r.label.clone()).collect();
        out.sort();
        out.dedup();
        out
    }
}

/// `(label, H_λ)` for every recorded label.
fn observables(system: &[SpinValue], policy: Option<AccessibilityPolicy>) -> Result<Vec<(CoupledLabel, CMatrix)>> {
    coupled_labels(system)
        .into_iter()
        .filter(|l| policy.is_none_or(|p| l.total_rank() <= p.max_observable_rank))
        .map(|label| {
            let op = coupled_operator(system, &label, 0)?.scale(i_pow(label.adjoint_parity()));
            Ok((label, op))
        })
        .collect()
}

/// Simulates a tomogram of `rho` with the default executor.
pub fn simulate_tomogram(rho: &DensityMatrix, settings: &TomographySettings) -> Result<Tomogram> {
    simulate_tomogram_with(rho, settings, Exec::default())
}

/// Simulates a tomogram of `rho`. Grid points are evaluated independently
/// under `exec`; Gaussian noise is then added in record order from a
/// ChaCha8 stream seeded with `settings.seed`, so the output does not depend
/// on the executor.
pub fn simulate_tomogram_with(rho: &DensityMatrix, settings: &TomographySettings, exec: Exec) -> Result<Tomogram> {
    let system = rho.system().to_vec();
    check_system(&system)?;
    if !(settings.noise_sigma.is_finite() && settings.noise_sigma >= 0.0) {
        return Err(Error::invalid(format!("noise sigma must be finite and non-negative, got {}", settings.noise_sigma)));
    }
    let points: Vec<GridPoint> =
        settings.grid.points()?.into_iter().map(|(angles, weight)| GridPoint { angles, weight }).collect();
    let obs = observables(&system, settings.policy)?;

    let per_point: Vec<Vec<f64>> = exec.map_slice(&points, |pt| {
        let r = collective_rotation(&system, pt.angles);
        let frame = &(&r.adjoint() * rho.matrix()) * &r;
        obs.iter().map(|(_, h)| frame.trace_product(h).re).collect()
    });

    let mut records = Vec::with_capacity(points.len() * obs.len());
    for (point_index, values) in per_point.into_iter().enumerate() {
        for ((label, _), value) in obs.iter().zip(values) {
            records.push(MomentRecord { point_index, label: label.clone(), value });
        }
    }
    if settings.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, settings.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        for rec in &mut records {
            rec.value += normal.sample(&mut rng);
        }
    }
    Ok(Tomogram {
        system,
        grid_spec: settings.grid,
        points,
        records,
        noise_sigma: settings.noise_sigma,
        seed: settings.seed,
    })
}

/// Recovers the coefficient table (single-spin or coupled) from a tomogram.
/// Fails with [`Error::InadequateGrid`] if any recorded rank exceeds what the
/// grid integrates exactly.
pub fn invert_tomogram(tomo: &Tomogram) -> Result<CoeffTable> {
    check_system(&tomo.system)?;
    let exact = tomo.grid_spec.exact_rank().ok_or_else(|| {
        Error::InadequateGrid(format!("empty grid {}x{}", tomo.grid_spec.n_beta, tomo.grid_spec.n_alpha))
    })?;
    let expected_points = tomo.grid_spec.n_beta * tomo.grid_spec.n_alpha;
    if tomo.points.len() != expected_points {
        return Err(Error::InadequateGrid(format!(
            "grid {}x{} needs {expected_points} points, tomogram has {}",
            tomo.grid_spec.n_beta,
            tomo.grid_spec.n_alpha,
            tomo.points.len()
        )));
    }
    let total_weight: f64 = tomo.points.iter().map(|p| p.weight).sum();
    let full = 8.0 * std::f64::consts::PI * std::f64::consts::PI;
    if ((total_weight - full) / full).abs() > 1e-9 {
        return Err(Error::InadequateGrid(format!("grid weights sum to {total_weight}, expected 8π²")));
    }
    let labels = tomo.labels();
    for label in &labels {
        label.check(&tomo.system)?;
        if label.total_rank() > exact {
            return Err(Error::InadequateGrid(format!(
                "rank {} recorded but grid {}x{} is exact only up to rank {exact}",
                label.total_rank(),
                tomo.grid_spec.n_beta,
                tomo.grid_spec.n_alpha
            )));
        }
    }

    let mut table = CoeffTable::new(tomo.system.clone(), table_kind(&tomo.system))?;
    let mut acc: std::collections::BTreeMap<&CoupledLabel, Vec<Complex64>> = labels
        .iter()
        .map(|l| (l, vec![Complex64::new(0.0, 0.0); 2 * l.total_rank() as usize + 1]))
        .collect();
    for rec in &tomo.records {
        let pt = tomo
            .points
            .get(rec.point_index)
            .ok_or_else(|| Error::invalid(format!("record refers to missing grid point {}", rec.point_index)))?;
        let k = rec.label.total_rank();
        let ks = SpinValue::integer(k);
        let slot = acc.get_mut(&rec.label).expect("label collected above");
        for (j, m) in (-(k as i32)..=(k as i32)).enumerate() {
            let d = big_d_unchecked(ks, Projection::integer(m), Projection::integer(0), pt.angles);
            slot[j] += d * (pt.weight * rec.value);
        }
    }
    for (label, sums) in acc {
        let k = label.total_rank();
        let pre = i_pow(label.adjoint_parity()) * ((2 * k + 1) as f64 / full);
        for (j, m) in (-(k as i32)..=(k as i32)).enumerate() {
            table.insert(key_for(tomo.system.len(), label, m), pre * sums[j])?;
        }
    }
    Ok(table)
}

/// Diagnostics of a rank-truncated reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub max_rank: u32,
    pub kept_entries: usize,
    pub dropped_entries: usize,
    /// `‖ρ_full - ρ_truncated‖_F`, the root of the dropped weight.
    pub frobenius_deficit: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    /// Whether the truncated operator is still a valid density matrix.
    pub is_state: bool,
}

/// Reconstructs an operator from the entries of rank at most the policy cap.
/// The result is Hermitian with the original trace but need not be positive.
pub fn truncated_reconstruct(table: &CoeffTable, policy: AccessibilityPolicy) -> Result<(CMatrix, FidelityReport)> {
    if table.kind() == BasisKind::Product {
        return Err(Error::BasisMismatch { expected: BasisKind::Coupled, found: BasisKind::Product });
    }
    let kept = table.restrict_to_rank(policy.max_observable_rank);
    let matrix = reconstruct(&kept)?;
    let dropped: f64 = table.norm_sqr() - kept.norm_sqr();
    let eig = hermitian_eigen(&matrix, VALIDITY_TOL.max(1e-6))?;
    let min_eigenvalue = eig.values.first().copied().unwrap_or(0.0);
    let report = FidelityReport {
        max_rank: policy.max_observable_rank,
        kept_entries: kept.len(),
        dropped_entries: table.len() - kept.len(),
        frobenius_deficit: dropped.max(0.0).sqrt(),
        trace: matrix.trace().re,
        min_eigenvalue,
        is_state: validate_density(&matrix, table.system(), VALIDITY_TOL).passed,
    };
    Ok((matrix, report))
}

/// A Pauli operator acting on one spin-½ site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PauliError {
    pub site: usize,
    pub axis: Axis,
}

impl PauliError {
    pub const fn new(site: usize, axis: Axis) -> Self {
        PauliError { site, axis }
    }
}

impl fmt::Display for PauliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.axis, self.site)
    }
}

impl FromStr for PauliError {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        let axis: Axis = chars.next().map(String::from).unwrap_or_default().parse()?;
        let site = chars.as_str().parse().map_err(|_| Error::invalid(format!("bad error label {s:?}")))?;
        Ok(PauliError { site, axis })
    }
}

/// Product of Pauli errors applied left to right; empty means no error.
/// Ordering puts the identity first, then by site and axis.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ErrorCandidate(pub Vec<PauliError>);

impl ErrorCandidate {
    pub fn identity() -> Self {
        ErrorCandidate(Vec::new())
    }

    pub fn single(site: usize, axis: Axis) -> Self {
        ErrorCandidate(vec![PauliError::new(site, axis)])
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn errors(&self) -> &[PauliError] {
        &self.0
    }
}

impl fmt::Display for ErrorCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("none");
        }
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for ErrorCandidate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "none" || s == "I" {
            return Ok(ErrorCandidate::identity());
        }
        s.split('+').map(|p| p.trim().parse()).collect::<Result<_>>().map(ErrorCandidate)
    }
}

/// The identity followed by every single-site Pauli error on the spin-½
/// sites of `system`.
pub fn single_error_candidates(system: &[SpinValue]) -> Vec<ErrorCandidate> {
    let mut out = vec![ErrorCandidate::identity()];
    for (site, s) in system.iter().enumerate() {
        if *s == SpinValue::HALF {
            out.extend(Axis::ALL.iter().map(|&a| ErrorCandidate::single(site, a)));
        }
    }
    out
}

/// Full operator of a candidate on `system`.
pub fn error_operator(system: &[SpinValue], candidate: &ErrorCandidate) -> Result<CMatrix> {
    check_system(system)?;
    let dims: Vec<usize> = system.iter().map(|s| s.dim()).collect();
    let mut op = CMatrix::identity(dims.iter().product());
    for e in candidate.errors() {
        match system.get(e.site) {
            None => return Err(Error::invalid(format!("error site {} out of range for {} spins", e.site, system.len()))),
            Some(s) if *s != SpinValue::HALF => {
                return Err(Error::invalid(format!("Pauli error on site {} needs spin 1/2, found {s}", e.site)));
            }
            Some(_) => {}
        }
        op = &embed_operator(&pauli(e.axis), e.site, &dims)? * &op;
    }
    Ok(op)
}

/// `E|φ>` for a pure state of `system`.
pub fn apply_pauli_state(state: &StateVector, system: &[SpinValue], candidate: &ErrorCandidate) -> Result<StateVector> {
    let op = error_operator(system, candidate)?;
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: state.dim() });
    }
    StateVector::new(op.mul_vec(state.amplitudes()))
}

/// `E ρ E†`.
pub fn apply_pauli_density(rho: &DensityMatrix, candidate: &ErrorCandidate) -> Result<DensityMatrix> {
    let op = error_operator(rho.system(), candidate)?;
    Ok(rho.conjugated(&op))
}

/// Undoes `candidate` on an observed state. Pauli products are involutive up
/// to phase, so this applies the reversed product.
pub fn correct_error(observed: &DensityMatrix, candidate: &ErrorCandidate) -> Result<DensityMatrix> {
    let mut rev = candidate.0.clone();
    rev.reverse();
    apply_pauli_density(observed, &ErrorCandidate(rev))
}

/// Change an error makes to the rank-limited coefficients of the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSignature {
    pub candidate: ErrorCandidate,
    pub delta: CoeffTable,
}

/// Reference coefficients and candidate signatures, all restricted to the
/// observable ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureSet {
    pub policy: AccessibilityPolicy,
    pub reference: CoeffTable,
    /// Sorted in tie-breaking order, identity first.
    pub signatures: Vec<ErrorSignature>,
}

/// Signatures of `candidates` against the reference state. The basis is
/// single-spin for one spin and coupled otherwise.
pub fn build_signatures(
    reference: &DensityMatrix,
    candidates: &[ErrorCandidate],
    policy: AccessibilityPolicy,
) -> Result<SignatureSet> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let system = reference.system();
    let kind = table_kind(system);
    let cap = policy.max_observable_rank;
    let ref_table = decompose_system(reference.matrix(), system, kind)?.restrict_to_rank(cap);
    let mut sorted = candidates.to_vec();
    sorted.sort();
    sorted.dedup();
    let signatures = sorted
        .into_iter()
        .map(|candidate| {
            let moved = apply_pauli_density(reference, &candidate)?;
            let table = decompose_system(moved.matrix(), system, kind)?.restrict_to_rank(cap);
            let delta = table.add_scaled(-1.0, &ref_table)?;
            Ok(ErrorSignature { candidate, delta })
        })
        .collect::<Result<_>>()?;
    Ok(SignatureSet { policy, reference: ref_table, signatures })
}

/// Second-best candidate of a detection.
#[derive(Debug, Clone, PartialEq)]
pub struct RunnerUp {
    pub candidate: ErrorCandidate,
    pub residual: f64,
}

/// Outcome of nearest-signature matching.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub detected: ErrorCandidate,
    /// `‖observed - (reference + delta)‖` of the detected candidate.
    pub residual: f64,
    /// Set when another candidate is within [`AMBIGUITY_TOL`] of the best.
    pub ambiguous: bool,
    /// Every candidate tied with the detected one, detected first.
    pub tied: Vec<ErrorCandidate>,
    pub runner_up: Option<RunnerUp>,
}

/// Picks the candidate whose signature best explains `observed`. Entries of
/// `observed` above the policy cap are ignored.
pub fn detect_error(observed: &CoeffTable, set: &SignatureSet) -> Result<Detection> {
    if set.signatures.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if observed.kind() != set.reference.kind() {
        return Err(Error::BasisMismatch { expected: set.reference.kind(), found: observed.kind() });
    }
    let obs = observed.restrict_to_rank(set.policy.max_observable_rank);
    let mut scored: Vec<(f64, &ErrorCandidate)> = set
        .signatures
        .iter()
        .map(|sig| {
            let predicted = set.reference.add_scaled(1.0, &sig.delta)?;
            Ok((obs.distance(&predicted)?, &sig.candidate))
        })
        .collect::<Result<_>>()?;
    // Stable sort keeps the tie-breaking order among equal residuals.
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = scored[0].0;
    let mut tied: Vec<ErrorCandidate> =
        scored.iter().filter(|(r, _)| *r - best <= AMBIGUITY_TOL).map(|(_, c)| (*c).clone()).collect();
    tied.sort();
    let detected = tied[0].clone();
    let runner_up = scored
        .iter()
        .find(|(_, c)| **c != detected)
        .map(|(r, c)| RunnerUp { candidate: (*c).clone(), residual: *r });
    let residual = scored.iter().find(|(_, c)| **c == detected).map(|(r, _)| *r).unwrap_or(best);
    Ok(Detection { detected, residual, ambiguous: tied.len() > 1, tied, runner_up })
}

fn check_state(rho: &DensityMatrix, which: &str) -> Result<()> {
    let report = validate_density(rho.matrix(), rho.system(), VALIDITY_TOL);
    if !report.passed {
        return Err(Error::InvalidState(format!("{which} argument: {}", report.failures.join("; "))));
    }
    Ok(())
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    check_state(rho, "first")?;
    check_state(sigma, "second")?;
    let floor = |x: f64| if x > FIDELITY_EIG_FLOOR { x.sqrt() } else { 0.0 };
    let root = hermitian_function(rho.matrix(), VALIDITY_TOL, floor)?;
    let inner = &(&root * sigma.matrix()) * &root;
    let eig = hermitian_eigen(&inner, 1e-6)?;
    let s: f64 = eig.values.iter().map(|&x| floor(x)).sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// Convenience: noise-free coefficients of `rho` via simulate and invert.
pub fn tomographic_coeffs(rho: &DensityMatrix, settings: &TomographySettings, exec: Exec) -> Result<CoeffTable> {
    invert_tomogram(&simulate_tomogram_with(rho, settings, exec)?)
}
