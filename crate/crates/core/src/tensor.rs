//! Polarization (irreducible spherical tensor) operators `T_{L,M}(S)`.
//!
//! For a spin `S` the `(2S+1)²` operators
//!
//! ```text
//! <m'| T_{L,M}(S) |m> = sqrt((2L+1)/(2S+1)) · <S m; L M | S m'>
//! ```
//!
//! form an orthonormal basis of all `(2S+1) × (2S+1)` matrices under
//! `Tr(A† B)`, with `T†_{L,M} = (-1)^M T_{L,-M}`. Rotations act inside each
//! rank block through the rank-`L` Wigner matrix.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{big_d_unchecked, cg_unchecked, triangle, wigner_D_matrix, EulerAngles, Projection, SpinValue};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Rank `L` and projection `M` of a polarization tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TensorIndex {
    pub rank: u32,
    pub m: i32,
}

impl TensorIndex {
    pub const SCALAR: TensorIndex = TensorIndex { rank: 0, m: 0 };

    pub const fn new(rank: u32, m: i32) -> Self {
        TensorIndex { rank, m }
    }

    pub fn rank_spin(&self) -> SpinValue {
        SpinValue::integer(self.rank)
    }

    pub fn projection(&self) -> Projection {
        Projection::integer(self.m)
    }

    /// Validity for a spin `S`: `0 <= L <= 2S`, `|M| <= L`.
    pub fn check(&self, spin: SpinValue) -> Result<()> {
        if self.rank > spin.twice() {
            return Err(Error::invalid(format!(
                "tensor rank {} out of range [0, {}] for spin {spin}",
                self.rank,
                spin.twice()
            )));
        }
        if self.m.unsigned_abs() > self.rank {
            return Err(Error::invalid(format!("tensor projection {} exceeds rank {}", self.m, self.rank)));
        }
        Ok(())
    }

    /// Position in the canonical basis ordering (L ascending, M ascending).
    pub fn ordinal(&self) -> usize {
        let l = self.rank as usize;
        l * l + (self.m + self.rank as i32) as usize
    }

    /// All indices of a rank, `M` ascending.
    pub fn family(rank: u32) -> impl Iterator<Item = TensorIndex> {
        let r = rank as i32;
        (-r..=r).map(move |m| TensorIndex::new(rank, m))
    }

    /// Every index valid for `spin`, in canonical order.
    pub fn all(spin: SpinValue) -> impl Iterator<Item = TensorIndex> {
        (0..=spin.twice()).flat_map(TensorIndex::family)
    }
}

/// Builds `T_{L,M}(S)`. Non-zero entries satisfy `m' = m + M`.
pub fn polarization_tensor(spin: SpinValue, idx: TensorIndex) -> Result<CMatrix> {
    idx.check(spin)?;
    let dim = spin.dim();
    let norm = ((2 * idx.rank + 1) as f64 / dim as f64).sqrt();
    let (l, mm) = (idx.rank_spin(), idx.projection());
    let mut t = CMatrix::zeros(dim);
    for (col, m) in spin.projections().enumerate() {
        let mp = m + mm;
        if mp.twice().unsigned_abs() > spin.twice() {
            continue;
        }
        let row = spin.index_of(mp)?;
        let c = cg_unchecked(spin, m, l, mm, spin, mp);
        t[(row, col)] = Complex64::new(norm * c, 0.0);
    }
    Ok(t)
}

/// The full polarization-tensor basis of one spin.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    spin: SpinValue,
    elements: Vec<(TensorIndex, CMatrix)>,
}

impl TensorBasis {
    pub fn spin(&self) -> SpinValue {
        self.spin
    }

    /// `(index, operator)` pairs ordered by L ascending, then M ascending.
    pub fn elements(&self) -> &[(TensorIndex, CMatrix)] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, idx: TensorIndex) -> Result<&CMatrix> {
        idx.check(self.spin)?;
        Ok(&self.elements[idx.ordinal()].1)
    }

    pub fn max_rank(&self) -> u32 {
        self.spin.twice()
    }
}

/// Builds the `(2S+1)²`-element basis.
pub fn tensor_basis(spin: SpinValue) -> TensorBasis {
    let elements = TensorIndex::all(spin)
        .map(|idx| {
            let t = polarization_tensor(spin, idx).expect("canonical index is always valid");
            (idx, t)
        })
        .collect();
    TensorBasis { spin, elements }
}

/// Process-wide cache of tensor bases. Concurrent first calls may build the
/// same basis twice; both results are identical and one is kept.
pub fn shared_basis(spin: SpinValue) -> Arc<TensorBasis> {
    static CACHE: OnceLock<Mutex<HashMap<SpinValue, Arc<TensorBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&spin) {
        return Arc::clone(b);
    }
    let built = Arc::new(tensor_basis(spin));
    let mut guard = cache.lock().expect("basis cache poisoned");
    Arc::clone(guard.entry(spin).or_insert(built))
}

/// Rotated family `{R T_{L,M} R†}` for `M = -L..=L`, computed as the
/// combination `Σ_{M'} D^L_{M',M}(Ω) T_{L,M'}`.
pub fn rotate_tensor_family(basis: &TensorBasis, rank: u32, angles: EulerAngles) -> Result<Vec<CMatrix>> {
    if rank > basis.max_rank() {
        return Err(Error::invalid(format!("rank {rank} not present in spin-{} basis", basis.spin)));
    }
    let family: Vec<&CMatrix> = TensorIndex::family(rank).map(|i| &basis.elements[i.ordinal()].1).collect();
    if rank == 0 {
        return Ok(vec![family[0].clone()]);
    }
    let l = SpinValue::integer(rank);
    let dim = basis.spin.dim();
    Ok(TensorIndex::family(rank)
        .map(|target| {
            let mut acc = CMatrix::zeros(dim);
            for (src, t) in TensorIndex::family(rank).zip(&family) {
                let d = big_d_unchecked(l, src.projection(), target.projection(), angles);
                acc.add_scaled(d, t);
            }
            acc
        })
        .collect())
}

/// Same family as [`rotate_tensor_family`], by direct conjugation `R T R†`.
pub fn rotate_tensor_family_by_conjugation(
    basis: &TensorBasis,
    rank: u32,
    angles: EulerAngles,
) -> Result<Vec<CMatrix>> {
    if rank > basis.max_rank() {
        return Err(Error::invalid(format!("rank {rank} not present in spin-{} basis", basis.spin)));
    }
    let r = wigner_D_matrix(basis.spin, angles);
    Ok(TensorIndex::family(rank)
        .map(|i| basis.elements[i.ordinal()].1.conjugate_by(&r))
        .collect())
}

/// Unitary mapping product states `|m1>⊗|m2>` to coupled states `|S12, M12>`.
///
/// Rows are coupled states, blocked by `S12` descending from `S1+S2` to
/// `|S1-S2|`, `M12` descending inside a block. Columns are product states in
/// Kronecker order.
pub fn coupled_basis_transform(s1: SpinValue, s2: SpinValue) -> CMatrix {
    let (d1, d2) = (s1.dim(), s2.dim());
    let mut u = CMatrix::zeros(d1 * d2);
    let lo = (s1.twice() as i64 - s2.twice() as i64).unsigned_abs() as u32;
    let hi = s1.twice() + s2.twice();
    let mut row = 0;
    for t12 in (lo..=hi).rev().step_by(2) {
        let s12 = SpinValue::from_twice(t12);
        for m12 in s12.projections() {
            for (i1, m1) in s1.projections().enumerate() {
                for (i2, m2) in s2.projections().enumerate() {
                    let c = cg_unchecked(s1, m1, s2, m2, s12, m12);
                    u[(row, i1 * d2 + i2)] = Complex64::new(c, 0.0);
                }
            }
            row += 1;
        }
    }
    u
}

/// Total spins appearing in [`coupled_basis_transform`], in row-block order.
pub fn coupled_blocks(s1: SpinValue, s2: SpinValue) -> Vec<SpinValue> {
    let lo = (s1.twice() as i64 - s2.twice() as i64).unsigned_abs() as u32;
    let hi = s1.twice() + s2.twice();
    (lo..=hi).rev().step_by(2).map(SpinValue::from_twice).collect()
}

/// Label of an iterated-coupled tensor over several spins: site ranks
/// `L_1..L_n` and intermediate ranks `K_12, K_123, ..., K` (the last entry is
/// the total rank). A single site has no intermediate ranks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoupledLabel {
    pub ranks: Vec<u32>,
    pub couplings: Vec<u32>,
}

impl CoupledLabel {
    pub fn total_rank(&self) -> u32 {
        self.couplings.last().copied().unwrap_or_else(|| self.ranks.first().copied().unwrap_or(0))
    }

    /// Parity `p` with `O†_{K,M} = (-1)^{M+p} O_{K,-M}`.
    pub fn adjoint_parity(&self) -> u32 {
        let mut prev = self.ranks[0];
        let mut p = 0;
        for (l, &k) in self.ranks[1..].iter().zip(&self.couplings) {
            p += prev + l - k;
            prev = k;
        }
        p % 2
    }

    pub fn check(&self, system: &[SpinValue]) -> Result<()> {
        if self.ranks.len() != system.len() || self.couplings.len() + 1 != system.len().max(1) {
            return Err(Error::invalid(format!(
                "coupled label {:?}/{:?} does not match a {}-spin system",
                self.ranks,
                self.couplings,
                system.len()
            )));
        }
        for (&l, s) in self.ranks.iter().zip(system) {
            if l > s.twice() {
                return Err(Error::invalid(format!("rank {l} out of range for spin {s}")));
            }
        }
        let mut prev = self.ranks[0];
        for (&l, &k) in self.ranks[1..].iter().zip(&self.couplings) {
            if !triangle(SpinValue::integer(prev), SpinValue::integer(l), SpinValue::integer(k)) {
                return Err(Error::invalid(format!("coupling {prev} x {l} -> {k} violates the triangle rule")));
            }
            prev = k;
        }
        Ok(())
    }
}

/// Every coupled label of a spin system, sorted.
pub fn coupled_labels(system: &[SpinValue]) -> Vec<CoupledLabel> {
    fn extend(system: &[SpinValue], ranks: &mut Vec<u32>, couplings: &mut Vec<u32>, out: &mut Vec<CoupledLabel>) {
        let site = ranks.len();
        if site == system.len() {
            out.push(CoupledLabel { ranks: ranks.clone(), couplings: couplings.clone() });
            return;
        }
        for l in 0..=system[site].twice() {
            ranks.push(l);
            if site == 0 {
                extend(system, ranks, couplings, out);
            } else {
                let prev = if site == 1 { ranks[0] } else { couplings[site - 2] };
                for k in prev.abs_diff(l)..=(prev + l) {
                    couplings.push(k);
                    extend(system, ranks, couplings, out);
                    couplings.pop();
                }
            }
            ranks.pop();
        }
    }
    let mut out = Vec::new();
    if !system.is_empty() {
        extend(system, &mut Vec::new(), &mut Vec::new(), &mut out);
    }
    out.sort();
    out
}

/// One term of the expansion of a Kronecker product of two tensors over
/// coupled tensors: `T_{L1,M1} ⊗ T_{L2,M2} = Σ_K coeff · O^{(L1 L2)}_{K, M1+M2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledTerm {
    pub rank: u32,
    pub m: i32,
    pub coeff: f64,
}

/// Expansion of `T_{L1,M1}(S1) ⊗ T_{L2,M2}(S2)` over coupled operators of
/// total rank `|L1-L2|..=L1+L2`. Each coefficient is a single
/// Clebsch–Gordan factor `<L1 M1; L2 M2 | K M>`.
pub fn couple_tensor_product(
    s1: SpinValue,
    idx1: TensorIndex,
    s2: SpinValue,
    idx2: TensorIndex,
) -> Result<Vec<CoupledTerm>> {
    idx1.check(s1)?;
    idx2.check(s2)?;
    let m = idx1.m + idx2.m;
    Ok((idx1.rank.abs_diff(idx2.rank)..=(idx1.rank + idx2.rank))
        .filter(|&k| m.unsigned_abs() <= k)
        .map(|k| {
            let c = cg_unchecked(
                idx1.rank_spin(),
                idx1.projection(),
                idx2.rank_spin(),
                idx2.projection(),
                SpinValue::integer(k),
                Projection::integer(m),
            );
            CoupledTerm { rank: k, m, coeff: c }
        })
        .collect())
}

/// Coupled operator `O_{label, M}` on the product space of `system`, built by
/// iterated pairwise Clebsch–Gordan coupling of site tensors.
pub fn coupled_operator(system: &[SpinValue], label: &CoupledLabel, m: i32) -> Result<CMatrix> {
    let family = coupled_family(system, label)?;
    let k = label.total_rank();
    if m.unsigned_abs() > k {
        return Err(Error::invalid(format!("projection {m} exceeds coupled rank {k}")));
    }
    Ok(family[(m + k as i32) as usize].clone())
}

type FamilyKey = (Vec<SpinValue>, CoupledLabel);

/// All projections `O_{label, -K..=K}` of a coupled operator, indexed by
/// `M + K`. Families are cached per system and label.
pub fn coupled_family(system: &[SpinValue], label: &CoupledLabel) -> Result<Arc<Vec<CMatrix>>> {
    static CACHE: OnceLock<Mutex<HashMap<FamilyKey, Arc<Vec<CMatrix>>>>> = OnceLock::new();
    label.check(system)?;
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (system.to_vec(), label.clone());
    if let Some(f) = cache.lock().expect("family cache poisoned").get(&key) {
        return Ok(Arc::clone(f));
    }
    let built = Arc::new(build_coupled_family(system, label)?);
    let mut guard = cache.lock().expect("family cache poisoned");
    Ok(Arc::clone(guard.entry(key).or_insert(built)))
}

fn build_coupled_family(system: &[SpinValue], label: &CoupledLabel) -> Result<Vec<CMatrix>> {
    let first = shared_basis(system[0]);
    let mut rank = label.ranks[0];
    let mut family: Vec<CMatrix> = TensorIndex::family(rank).map(|i| first.elements[i.ordinal()].1.clone()).collect();
    for ((&l, &k), &spin) in label.ranks[1..].iter().zip(&label.couplings).zip(&system[1..]) {
        let site = shared_basis(spin);
        let dim = family[0].dim() * spin.dim();
        let mut next = Vec::with_capacity(2 * k as usize + 1);
        for mk in -(k as i32)..=(k as i32) {
            let mut acc = CMatrix::zeros(dim);
            for ma in -(rank as i32)..=(rank as i32) {
                let mb = mk - ma;
                if mb.unsigned_abs() > l {
                    continue;
                }
                let c = cg_unchecked(
                    SpinValue::integer(rank),
                    Projection::integer(ma),
                    SpinValue::integer(l),
                    Projection::integer(mb),
                    SpinValue::integer(k),
                    Projection::integer(mk),
                );
                if c == 0.0 {
                    continue;
                }
                let left = &family[(ma + rank as i32) as usize];
                let right = site.get(TensorIndex::new(l, mb))?;
                acc.add_scaled(Complex64::new(c, 0.0), &left.kron(right));
            }
            next.push(acc);
        }
        family = next;
        rank = k;
    }
    Ok(family)
}
