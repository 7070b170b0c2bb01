//! Orbital entropies and correlation measures, in nats.

use crate::ci::CiVector;
use crate::error::{Error, Result};
use crate::rdm::{orbital_spectrum, rdms_from_ci, subsystem_density, SpinRdms, SubsystemState};

/// Shannon entropy `-Σ p log p` with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// Entropy of a single-orbital spectrum `(λ0, λ1, λ2, λ3)`.
pub fn orbital_entropy(row: &[f64; 4]) -> Result<f64> {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || !sum.is_finite() {
        return Err(Error::Normalization { sum });
    }
    let clamped = row.map(|x| x.max(0.0));
    Ok(entropy(&clamped))
}

pub fn orbital_entropies(r: &SpinRdms) -> Result<Vec<f64>> {
    orbital_spectrum(r)?.lambdas.iter().map(orbital_entropy).collect()
}

/// `Σ_i S(ρ_i)`, the total orbital correlation of a pure state.
pub fn total_orbital_correlation(r: &SpinRdms) -> Result<f64> {
    Ok(orbital_entropies(r)?.iter().sum())
}

fn check_partition(m: usize, blocks: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; m];
    for &o in blocks.iter().flatten() {
        if o >= m {
            return Err(Error::Partition(format!("orbital {o} outside 0..{m}")));
        }
        if std::mem::replace(&mut seen[o], true) {
            return Err(Error::Partition(format!("orbital {o} appears twice")));
        }
    }
    if let Some(o) = seen.iter().position(|s| !s) {
        return Err(Error::Partition(format!("orbital {o} is not covered")));
    }
    if blocks.iter().any(Vec::is_empty) {
        return Err(Error::Partition("empty block".into()));
    }
    Ok(())
}

/// `Σ_J S(ρ_J)` over the blocks of a partition of all orbitals.
pub fn partition_correlation(v: &CiVector, partition: &[Vec<usize>]) -> Result<f64> {
    check_partition(v.space.n_orbitals, partition)?;
    partition
        .iter()
        .map(|block| Ok(subsystem_density(v, block)?.entropy()))
        .sum()
}

/// Split of the total correlation across an active/non-active cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRule {
    /// `S(ρ_A) + S(ρ_N)`, the correlation between the two blocks.
    pub i_an: f64,
    /// `Σ_{i∈A} S(ρ_i) − S(ρ_A)`.
    pub i_a: f64,
    /// `Σ_{i∈N} S(ρ_i) − S(ρ_N)`.
    pub i_n: f64,
    pub total: f64,
}

/// Decomposes the total correlation for the cut `active | rest`.
///
/// Every entropy is taken from an explicitly built reduced state, so the
/// total is independent of the RDM route.
pub fn sum_rule_decomposition(v: &CiVector, active: &[usize]) -> Result<SumRule> {
    let m = v.space.n_orbitals;
    let rest: Vec<usize> = (0..m).filter(|o| !active.contains(o)).collect();
    if active.len() + rest.len() != m {
        return Err(Error::Partition(format!(
            "active orbitals {active:?} are not distinct orbitals of 0..{m}"
        )));
    }
    let block = |b: &[usize]| -> Result<(f64, f64)> {
        if b.is_empty() {
            return Ok((0.0, 0.0));
        }
        let joint = subsystem_density(v, b)?.entropy();
        let singles = b
            .iter()
            .map(|&o| Ok(subsystem_density(v, &[o])?.entropy()))
            .sum::<Result<f64>>()?;
        Ok((joint, singles))
    };
    let (s_a, sum_a) = block(active)?;
    let (s_n, sum_n) = block(&rest)?;
    let i_an = s_a + s_n;
    let i_a = sum_a - s_a;
    let i_n = sum_n - s_n;
    Ok(SumRule {
        i_an,
        i_a,
        i_n,
        total: i_an + i_a + i_n,
    })
}

/// Shannon entropy of the squared CI coefficients.
pub fn ci_shannon_entropy(v: &CiVector) -> f64 {
    let w: Vec<f64> = v.coefficients.iter().map(|c| c * c).collect();
    entropy(&w)
}

/// `Σ_k S(ρ_k) − S(ρ)` for a mixed reduced state, with the single-orbital
/// states read from the diagonal of `ρ`.
pub fn mixed_state_correlation(state: &SubsystemState) -> Result<f64> {
    let singles = (0..state.orbital_subset.len())
        .map(|k| orbital_entropy(&state.marginal(k)))
        .sum::<Result<f64>>()?;
    Ok(singles - state.entropy())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub per_orbital_entropy: Vec<f64>,
    pub total_cost: f64,
    pub partition_terms: Option<SumRule>,
    pub ci_entropy: Option<f64>,
}

/// Entropies of `v` and, when `active` is given, the sum-rule split.
pub fn correlation_report(v: &CiVector, active: Option<&[usize]>) -> Result<CorrelationReport> {
    let per_orbital_entropy = orbital_entropies(&rdms_from_ci(v, false)?)?;
    let total_cost = per_orbital_entropy.iter().sum();
    let partition_terms = active.map(|a| sum_rule_decomposition(v, a)).transpose()?;
    Ok(CorrelationReport {
        per_orbital_entropy,
        total_cost,
        partition_terms,
        ci_entropy: Some(ci_shannon_entropy(v)),
    })
}
