use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use spintomo::density::{
    couple_product_coeffs, decompose_system, kron_density, reconstruct, rotate_density, validate_density,
};
use spintomo::hamiltonian::{spectrum_report, CouplingModel};
use spintomo::io::{
    matrix_to_json, BasisDoc, CandidateJson, ChainDoc, CoeffDoc, DetectionDoc, MatrixJson, SourcesDoc, StateDoc,
    TomogramDoc,
};
use spintomo::multipole::{potential_series, ObservationPoint};
use spintomo::quadrature::GridSpec;
use spintomo::tensor::shared_basis;
use spintomo::tomography::{
    accessible_ranks, apply_pauli_density, build_signatures, correct_error, detect_error, fidelity,
    invert_tomogram, simulate_tomogram_with, single_error_candidates, AccessibilityPolicy, ErrorCandidate,
    TomographySettings,
};
use spintomo::{BasisKind, CoeffTable, DensityMatrix, EulerAngles, Exec, SpinValue};

use crate::failure::{CliResult, Failure};
use crate::Command;

pub struct Context {
    pub tol: f64,
    pub exec: Exec,
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let name = display(path);
    let text = if name == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Failure::io(&name, e))?
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::io(&name, e))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::parse(&name, e))
}

fn in_file<T>(path: &Path, r: spintomo::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure::from(e).with_context("path", display(path)))
}

fn load_state(ctx: &Context, path: &Path) -> CliResult<DensityMatrix> {
    let doc: StateDoc = read_json(path)?;
    in_file(path, doc.to_density(ctx.tol))
}

fn parse_spin(raw: &str) -> CliResult<SpinValue> {
    raw.parse::<SpinValue>().map_err(|e| Failure::from(e).with_context("spin", raw))
}

fn to_value<T: Serialize>(doc: &T) -> CliResult<Value> {
    serde_json::to_value(doc).map_err(|e| Failure::new("internal", e.to_string(), Value::Null))
}

fn default_kind(system: &[SpinValue]) -> BasisKind {
    if system.len() == 1 {
        BasisKind::Single
    } else {
        BasisKind::Product
    }
}

fn rank_kind(system: &[SpinValue]) -> BasisKind {
    if system.len() == 1 {
        BasisKind::Single
    } else {
        BasisKind::Coupled
    }
}

#[derive(Serialize)]
struct CorrectionDoc {
    applied: CandidateJson,
    system: Vec<u32>,
    matrix: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
}

#[derive(Serialize)]
struct AccessDoc {
    system: Vec<u32>,
    cap: u32,
    observable: Vec<u32>,
    unobservable: Vec<u32>,
    observable_coefficients: u64,
    total_coefficients: u64,
}

const MAX_ACCESS_SITES: usize = 24;

/// Number of coupled labels of each total rank, indexed by rank.
fn rank_multiplicities(system: &[SpinValue]) -> Vec<u64> {
    let mut counts: Vec<u64> = vec![1];
    for (site, s) in system.iter().enumerate() {
        let top = s.twice() as usize;
        let mut next = vec![0u64; counts.len() + top];
        for (k, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for l in 0..=top {
                let range = if site == 0 { l..=l } else { k.abs_diff(l)..=(k + l) };
                for kk in range {
                    next[kk] += c;
                }
            }
        }
        counts = next;
    }
    counts
}

/// Observed data for detection: a coefficient file or a state file.
fn load_observed(ctx: &Context, path: &Path) -> CliResult<CoeffTable> {
    let raw: Value = read_json(path)?;
    let parse_err = |e: serde_json::Error| Failure::parse(&display(path), e);
    if raw.get("basis").is_some() {
        let doc: CoeffDoc = serde_json::from_value(raw).map_err(parse_err)?;
        let table = in_file(path, doc.to_table())?;
        if table.kind() == BasisKind::Product {
            return in_file(path, couple_product_coeffs(&table));
        }
        Ok(table)
    } else {
        let doc: StateDoc = serde_json::from_value(raw).map_err(parse_err)?;
        let rho = in_file(path, doc.to_density(ctx.tol))?;
        in_file(path, decompose_system(rho.matrix(), rho.system(), rank_kind(rho.system())))
    }
}

fn euler(alpha: f64, beta: f64, gamma: f64, degrees: bool) -> CliResult<EulerAngles> {
    let a = if degrees { EulerAngles::from_degrees(alpha, beta, gamma) } else { EulerAngles::new(alpha, beta, gamma) };
    if !a.is_finite() {
        return Err(Failure::new("invalid_argument", "angles must be finite", json!({ "alpha": alpha, "beta": beta, "gamma": gamma })));
    }
    Ok(a)
}

pub fn dispatch(ctx: &Context, command: Command) -> CliResult<Value> {
    match command {
        Command::Basis { spin } => {
            let s = parse_spin(&spin)?;
            to_value(&BasisDoc::from(shared_basis(s).as_ref()))
        }
        Command::Validate { state } => {
            let doc: StateDoc = read_json(&state)?;
            let system = in_file(&state, doc.system())?;
            let matrix = in_file(&state, spintomo::io::matrix_from_json(&doc.matrix))?;
            to_value(&validate_density(&matrix, &system, ctx.tol))
        }
        Command::Decompose { state, basis } => {
            let rho = load_state(ctx, &state)?;
            let kind = match basis {
                Some(b) => b.parse::<BasisKind>().map_err(Failure::from)?,
                None => default_kind(rho.system()),
            };
            let table = in_file(&state, decompose_system(rho.matrix(), rho.system(), kind))?;
            to_value(&CoeffDoc::from(&table))
        }
        Command::Reconstruct { coeffs } => {
            let doc: CoeffDoc = read_json(&coeffs)?;
            let table = in_file(&coeffs, doc.to_table())?;
            let m = in_file(&coeffs, reconstruct(&table))?;
            to_value(&StateDoc { system: doc.system.clone(), matrix: matrix_to_json(&m) })
        }
        Command::Rotate { state, angles } => {
            let rho = load_state(ctx, &state)?;
            let a = euler(angles.alpha, angles.beta, angles.gamma, angles.degrees)?;
            to_value(&StateDoc::from(&rotate_density(&rho, a)))
        }
        Command::Kron { states } => {
            let parts = states.iter().map(|p| load_state(ctx, p)).collect::<CliResult<Vec<_>>>()?;
            to_value(&StateDoc::from(&kron_density(&parts).map_err(Failure::from)?))
        }
        Command::Spectrum { chain, model } => {
            let doc: ChainDoc = read_json(&chain)?;
            let spec = in_file(&chain, doc.to_spec())?;
            let model = match model.as_deref() {
                None => doc.model,
                Some("xy_plane") => CouplingModel::XyPlane,
                Some("heisenberg") => CouplingModel::Heisenberg,
                Some(other) => {
                    return Err(Failure::new("invalid_argument", format!("unknown coupling model {other:?}"), json!({ "model": other })))
                }
            };
            to_value(&in_file(&chain, spectrum_report(&spec, model))?)
        }
        Command::TomoSimulate { state, grid, noise, seed, cap } => {
            let rho = load_state(ctx, &state)?;
            let top: u32 = rho.system().iter().map(|s| s.twice()).sum();
            let needed = GridSpec::minimal_for_rank(cap.map_or(top, |c| c.min(top)));
            let settings = TomographySettings {
                grid: GridSpec {
                    n_beta: grid.grid_beta.unwrap_or(needed.n_beta),
                    n_alpha: grid.grid_alpha.unwrap_or(needed.n_alpha),
                },
                policy: cap.map(|c| AccessibilityPolicy { max_observable_rank: c }),
                noise_sigma: noise,
                seed,
            };
            let tomo = simulate_tomogram_with(&rho, &settings, ctx.exec).map_err(Failure::from)?;
            to_value(&TomogramDoc::from(&tomo))
        }
        Command::TomoInvert { tomogram } => {
            let doc: TomogramDoc = read_json(&tomogram)?;
            let tomo = in_file(&tomogram, doc.to_tomogram())?;
            to_value(&CoeffDoc::from(&in_file(&tomogram, invert_tomogram(&tomo))?))
        }
        Command::Inject { state, error } => {
            let rho = load_state(ctx, &state)?;
            let cand: ErrorCandidate = error.parse().map_err(|e| Failure::from(e).with_context("error", error.as_str()))?;
            to_value(&StateDoc::from(&apply_pauli_density(&rho, &cand).map_err(Failure::from)?))
        }
        Command::Detect { reference, observed, cap } => {
            let rho = load_state(ctx, &reference)?;
            let table = load_observed(ctx, &observed)?;
            if table.system() != rho.system() {
                return Err(Failure::new(
                    "invalid_argument",
                    "reference and observed data describe different spin systems",
                    json!({ "reference": display(&reference), "observed": display(&observed) }),
                ));
            }
            let policy = AccessibilityPolicy { max_observable_rank: cap };
            let set = build_signatures(&rho, &single_error_candidates(rho.system()), policy).map_err(Failure::from)?;
            let det = detect_error(&table, &set).map_err(Failure::from)?;
            to_value(&DetectionDoc::new(&det, cap))
        }
        Command::Correct { observed, error, report, reference } => {
            let rho = load_state(ctx, &observed)?;
            let cand = match (error, report) {
                (Some(label), _) => label.parse().map_err(|e| Failure::from(e).with_context("error", label.as_str()))?,
                (None, Some(path)) => {
                    let doc: DetectionDoc = read_json(&path)?;
                    in_file(&path, doc.detected.to_candidate())?
                }
                (None, None) => return Err(Failure::usage("either --error or --report is required")),
            };
            let fixed = correct_error(&rho, &cand).map_err(Failure::from)?;
            let fid = match reference {
                Some(path) => Some(fidelity(&fixed, &load_state(ctx, &path)?).map_err(Failure::from)?),
                None => None,
            };
            let doc = StateDoc::from(&fixed);
            to_value(&CorrectionDoc { applied: (&cand).into(), system: doc.system, matrix: doc.matrix, fidelity: fid })
        }
        Command::Multipole { sources, lmax, r0, theta, phi, degrees } => {
            let doc: SourcesDoc = read_json(&sources)?;
            let (theta, phi) = if degrees { (theta.to_radians(), phi.to_radians()) } else { (theta, phi) };
            let point = ObservationPoint::new(r0, theta, phi).map_err(Failure::from)?;
            to_value(&in_file(&sources, potential_series(&doc.sources, lmax, point, doc.kind))?)
        }
        Command::Access { n, spin, cap } => {
            if n == 0 || n > MAX_ACCESS_SITES {
                return Err(Failure::new(
                    "invalid_argument",
                    format!("register size must be between 1 and {MAX_ACCESS_SITES}"),
                    json!({ "n": n }),
                ));
            }
            let s = parse_spin(&spin)?;
            let system = vec![s; n];
            let part = accessible_ranks(&system, AccessibilityPolicy { max_observable_rank: cap }).map_err(Failure::from)?;
            let multiplicity = rank_multiplicities(&system);
            let (mut observable_coefficients, mut total_coefficients) = (0u64, 0u64);
            for (k, &count) in multiplicity.iter().enumerate() {
                let entries = count * (2 * k as u64 + 1);
                total_coefficients += entries;
                if k as u32 <= cap {
                    observable_coefficients += entries;
                }
            }
            to_value(&AccessDoc {
                system: system.iter().map(|s| s.twice()).collect(),
                cap,
                observable: part.observable,
                unobservable: part.unobservable,
                observable_coefficients,
                total_coefficients,
            })
        }
    }
}
