use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::ci::CiVector;
use crate::correlation::entropy;
use crate::error::{Error, Result};

/// Largest orbital subset whose reduced state is built explicitly.
pub const MAX_SUBSYSTEM_ORBITALS: usize = 6;

/// Reduced state of a group of orbitals.
///
/// The local basis is the product of single-orbital states
/// `{0, ↑, ↓, ↑↓}` with code `n_α + 2 n_β`; subset position `k` contributes
/// `code_k · 4^k` to the row index. A basis state carries its creators in
/// the order `α_0 β_0 α_1 β_1 …` over subset positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemState {
    pub orbital_subset: Vec<usize>,
    pub density: DMatrix<f64>,
}

impl SubsystemState {
    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.density.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        let eig: Vec<f64> = self.eigenvalues().into_iter().map(|x| x.max(0.0)).collect();
        entropy(&eig)
    }

    /// Occupation distribution `(λ0, λ1, λ2, λ3)` of subset position `k`,
    /// read off the diagonal.
    pub fn marginal(&self, k: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        for idx in 0..self.dim() {
            out[(idx >> (2 * k)) & 3] += self.density[(idx, idx)];
        }
        out
    }
}

/// Partial trace of `|Ψ⟩⟨Ψ|` over every orbital outside `subset`.
pub fn subsystem_density(v: &CiVector, subset: &[usize]) -> Result<SubsystemState> {
    let m = v.space.n_orbitals;
    if subset.len() > MAX_SUBSYSTEM_ORBITALS {
        return Err(Error::Capacity(format!(
            "subsystem of {} orbitals exceeds the limit of {MAX_SUBSYSTEM_ORBITALS}",
            subset.len()
        )));
    }
    let mut position = vec![None; m];
    for (k, &o) in subset.iter().enumerate() {
        if o >= m {
            return Err(Error::Domain(format!("orbital {o} outside 0..{m}")));
        }
        if position[o].replace(k).is_some() {
            return Err(Error::Domain(format!("orbital {o} repeated in subset")));
        }
    }
    let mask: u64 = subset.iter().map(|&o| 1u64 << o).sum();
    let n_sub = subset.len();
    let dim_a = 1usize << (2 * n_sub);

    // rank of each mode in the subset-first ordering
    let key = |spin: usize, o: usize| -> usize {
        match position[o] {
            Some(k) => 2 * k + spin,
            None => 2 * n_sub + spin * m + o,
        }
    };

    let mut columns: HashMap<(u64, u64), usize> = HashMap::new();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut keys = Vec::with_capacity(2 * m);
    for (det, c) in v.iter_nonzero() {
        keys.clear();
        keys.extend(crate::ci::determinant::bits(det.alpha).map(|o| key(0, o)));
        keys.extend(crate::ci::determinant::bits(det.beta).map(|o| key(1, o)));
        let mut inversions = 0usize;
        for (i, a) in keys.iter().enumerate() {
            inversions += keys[i + 1..].iter().filter(|b| *b < a).count();
        }
        let sign = if inversions.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut row = 0usize;
        for (k, &o) in subset.iter().enumerate() {
            let code = (det.alpha >> o & 1) + 2 * (det.beta >> o & 1);
            row |= (code as usize) << (2 * k);
        }
        let env = (det.alpha & !mask, det.beta & !mask);
        let next = columns.len();
        let col = *columns.entry(env).or_insert(next);
        entries.push((row, col, sign * c));
    }
    let mut psi = DMatrix::<f64>::zeros(dim_a, columns.len());
    for (r, c, x) in entries {
        psi[(r, c)] += x;
    }
    let rho = &psi * psi.transpose();
    Ok(SubsystemState {
        orbital_subset: subset.to_vec(),
        density: (&rho + rho.transpose()) * 0.5,
    })
}
