//! Gauss–Legendre rules and the product grid used for integration over SO(3).

use std::f64::consts::PI;

use crate::angular::EulerAngles;
use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, refined by Newton iteration.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Product quadrature over SO(3): Gauss–Legendre in `cos β`, uniform
/// trapezoid in `α`, and a single `γ = 0` node carrying the full `2π`.
///
/// Integrates `D^K_{M,0} · conj(D^K_{M',0})` exactly for every
/// `K <= min(n_beta - 1, (n_alpha - 1) / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub n_beta: usize,
    pub n_alpha: usize,
}

impl GridSpec {
    /// Smallest grid exact for ranks up to `max_rank`.
    pub fn minimal_for_rank(max_rank: u32) -> Self {
        GridSpec { n_beta: max_rank as usize + 1, n_alpha: 2 * max_rank as usize + 1 }
    }

    /// Highest rank integrated exactly by this grid.
    pub fn exact_rank(&self) -> Option<u32> {
        if self.n_beta == 0 || self.n_alpha == 0 {
            return None;
        }
        Some(((self.n_beta - 1).min((self.n_alpha - 1) / 2)) as u32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_beta == 0 || self.n_alpha == 0 {
            return Err(Error::InadequateGrid(format!(
                "grid needs at least one node per axis (n_beta = {}, n_alpha = {})",
                self.n_beta, self.n_alpha
            )));
        }
        Ok(())
    }

    /// Grid points with weights summing to `8π²`.
    pub fn points(&self) -> Result<Vec<(EulerAngles, f64)>> {
        self.validate()?;
        let (xs, ws) = gauss_legendre(self.n_beta);
        let d_alpha = 2.0 * PI / self.n_alpha as f64;
        let mut out = Vec::with_capacity(self.n_beta * self.n_alpha);
        for (x, w) in xs.iter().zip(&ws) {
            let beta = x.clamp(-1.0, 1.0).acos();
            for a in 0..self.n_alpha {
                let alpha = a as f64 * d_alpha;
                out.push((EulerAngles::new(alpha, beta, 0.0), w * d_alpha * 2.0 * PI));
            }
        }
        Ok(out)
    }
}
