//! Multipole expansion of the potential of point sources.
//!
//! The same expansion serves electric charges and magnetic moment strengths;
//! the [`SourceKind`] tag only labels reports.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{spherical_harmonic, Projection, SpinValue};
use crate::error::{Error, Result};

/// Relative size of the last term below which a series counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-9;

/// Point source at spherical position `(r, θ, φ)` with strength `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    pub e: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl PointSource {
    pub fn new(e: f64, r: f64, theta: f64, phi: f64) -> Result<Self> {
        let s = PointSource { e, r, theta, phi };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if ![self.e, self.r, self.theta, self.phi].iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("point source fields must be finite"));
        }
        if self.r < 0.0 {
            return Err(Error::invalid(format!("source radius must be non-negative, got {}", self.r)));
        }
        Ok(())
    }

    fn cartesian(&self) -> [f64; 3] {
        cartesian(self.r, self.theta, self.phi)
    }
}

/// Observation point `R₀` in spherical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationPoint {
    pub r0: f64,
    pub theta: f64,
    pub phi: f64,
}

impl ObservationPoint {
    pub fn new(r0: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(r0.is_finite() && r0 > 0.0 && theta.is_finite() && phi.is_finite()) {
            return Err(Error::invalid(format!("observation radius must be positive and finite, got {r0}")));
        }
        Ok(ObservationPoint { r0, theta, phi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    #[default]
    Electric,
    Magnetic,
}

fn cartesian(r: f64, theta: f64, phi: f64) -> [f64; 3] {
    [r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos()]
}

fn check_lm(l: u32, m: i32) -> Result<(SpinValue, Projection)> {
    if m.unsigned_abs() > l {
        return Err(Error::invalid(format!("|m| = {} exceeds l = {l}", m.unsigned_abs())));
    }
    Ok((SpinValue::integer(l), Projection::integer(m)))
}

fn norm_factor(l: u32) -> f64 {
    (4.0 * PI / (2 * l + 1) as f64).sqrt()
}

/// `Q_m^(l) = Σ_a e_a r_a^l √(4π/(2l+1)) Y_{l,m}(θ_a, φ_a)`.
pub fn multipole_moment(sources: &[PointSource], l: u32, m: i32) -> Result<Complex64> {
    let (ls, ms) = check_lm(l, m)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in sources {
        s.check()?;
        acc += s.e * s.r.powi(l as i32) * spherical_harmonic(ls, ms, s.theta, s.phi)?;
    }
    Ok(acc * norm_factor(l))
}

/// Order-`l` term `R₀^-(l+1) Σ_m √(4π/(2l+1)) Q_m^(l) conj(Y_{l,m}(Θ, Φ))`.
pub fn potential_term(sources: &[PointSource], l: u32, point: ObservationPoint) -> Result<Complex64> {
    let ls = SpinValue::integer(l);
    let mut acc = Complex64::new(0.0, 0.0);
    for m in -(l as i32)..=(l as i32) {
        let q = multipole_moment(sources, l, m)?;
        acc += q * spherical_harmonic(ls, Projection::integer(m), point.theta, point.phi)?.conj();
    }
    Ok(acc * norm_factor(l) / point.r0.powi(l as i32 + 1))
}

/// Direct sum `Σ_a e_a / |R₀ - r_a|`.
pub fn direct_potential(sources: &[PointSource], point: ObservationPoint) -> Result<f64> {
    let p = cartesian(point.r0, point.theta, point.phi);
    let mut acc = 0.0;
    for s in sources {
        s.check()?;
        let q = s.cartesian();
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
        if d == 0.0 {
            return Err(Error::invalid("observation point coincides with a source"));
        }
        acc += s.e / d;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub l: u32,
    pub value: f64,
}

/// Partial sums of the expansion compared against the direct sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultipoleReport {
    pub kind: SourceKind,
    pub terms: Vec<SeriesTerm>,
    pub total: f64,
    pub direct_sum: f64,
    pub rel_error: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Sums the expansion through `lmax`. Observation points inside the source
/// radius give a report with `converged = false` and a warning.
pub fn potential_series(
    sources: &[PointSource],
    lmax: u32,
    point: ObservationPoint,
    kind: SourceKind,
) -> Result<MultipoleReport> {
    let mut terms = Vec::with_capacity(lmax as usize + 1);
    for l in 0..=lmax {
        let t = potential_term(sources, l, point)?;
        let scale = t.re.abs().max(1.0);
        debug_assert!(t.im.abs() < 1e-12 * scale, "order {l} term has imaginary part {}", t.im);
        terms.push(SeriesTerm { l, value: t.re });
    }
    let total: f64 = terms.iter().map(|t| t.value).sum();
    let direct_sum = direct_potential(sources, point)?;
    let rel_error = if direct_sum != 0.0 { ((total - direct_sum) / direct_sum).abs() } else { (total - direct_sum).abs() };
    let max_r = sources.iter().map(|s| s.r).fold(0.0, f64::max);
    let last = terms.last().map(|t| t.value.abs()).unwrap_or(0.0);
    let tail_small = if total != 0.0 { last / total.abs() < CONVERGENCE_TOL } else { last < CONVERGENCE_TOL };
    let inside = point.r0 <= max_r;
    let warning = inside.then(|| {
        format!("observation radius {} lies within the source radius {max_r}; the series does not converge", point.r0)
    });
    Ok(MultipoleReport { kind, terms, total, direct_sum, rel_error, converged: tail_small && !inside, warning })
}

/// Basis label of `Y_{1,m}` in the spin-1 carrier space, ordered
/// `(m = -1, m = 0, m = +1)`. A bookkeeping map, not a numeric identity.
pub fn harmonic_basis_vector(l: u32, m: i32) -> Result<[f64; 3]> {
    if l != 1 {
        return Err(Error::invalid(format!("basis correspondence is defined for l = 1 only, got l = {l}")));
    }
    match m {
        1 => Ok([0.0, 0.0, 1.0]),
        0 => Ok([0.0, 1.0, 0.0]),
        -1 => Ok([1.0, 0.0, 0.0]),
        _ => Err(Error::invalid(format!("m = {m} out of range for l = 1"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(e: f64, r: f64, theta: f64, phi: f64) -> PointSource {
        PointSource::new(e, r, theta, phi).unwrap()
    }

    #[test]
    fn monopole_is_total_charge() {
        let s = [src(1.5, 0.3, 0.4, 1.0), src(-0.5, 0.9, 2.0, -1.0)];
        let q = multipole_moment(&s, 0, 0).unwrap();
        assert!((q.re - 1.0).abs() < 1e-14 && q.im.abs() < 1e-15);
        assert_eq!(multipole_moment(&[], 3, -2).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn on_axis_dipole_moment() {
        let q = multipole_moment(&[src(2.0, 0.7, 0.0, 0.0)], 1, 0).unwrap();
        assert!((q.re - 1.4).abs() < 1e-14);
        assert!(multipole_moment(&[], 1, 2).is_err());
    }

    #[test]
    fn dipole_pair_terms() {
        let (q, d, r0) = (1.3, 0.4, 5.0);
        let s = [src(q, d / 2.0, 0.0, 0.0), src(-q, d / 2.0, PI, 0.0)];
        let p = ObservationPoint::new(r0, 0.0, 0.0).unwrap();
        assert!(potential_term(&s, 0, p).unwrap().norm() < 1e-15);
        let t1 = potential_term(&s, 1, p).unwrap();
        assert!((t1.re - q * d / (r0 * r0)).abs() < 1e-14);
    }

    #[test]
    fn point_charge_at_origin_is_exact() {
        let s = [src(2.5, 0.0, 0.0, 0.0)];
        let p = ObservationPoint::new(4.0, 1.0, 2.0).unwrap();
        let rep = potential_series(&s, 0, p, SourceKind::Electric).unwrap();
        assert!((rep.total - 0.625).abs() < 1e-15);
        assert!(rep.rel_error < 1e-15);
    }

    #[test]
    fn inside_source_radius_warns() {
        let s = [src(1.0, 2.0, 0.3, 0.0)];
        let p = ObservationPoint::new(1.0, 0.5, 0.0).unwrap();
        let rep = potential_series(&s, 6, p, SourceKind::Magnetic).unwrap();
        assert!(!rep.converged);
        assert!(rep.warning.is_some());
    }

    #[test]
    fn basis_vector_map() {
        assert_eq!(harmonic_basis_vector(1, 0).unwrap(), [0.0, 1.0, 0.0]);
        assert_eq!(harmonic_basis_vector(1, 1).unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(harmonic_basis_vector(1, -1).unwrap(), [1.0, 0.0, 0.0]);
        assert!(harmonic_basis_vector(2, 0).is_err());
        assert!(harmonic_basis_vector(1, 2).is_err());
    }
}
