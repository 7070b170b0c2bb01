use std::ops::Range;

use super::determinant::{binomial, strings, Determinant};
use crate::error::{Error, Result};
use crate::hamiltonian::MAX_ORBITALS;

/// Product space of alpha and beta occupation strings.
///
/// Determinant `(ia, ib)` sits at position `ia * beta_strings.len() + ib`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantSpace {
    pub n_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub alpha_strings: Vec<u64>,
    pub beta_strings: Vec<u64>,
    pub active_window: Option<Range<usize>>,
}

impl DeterminantSpace {
    /// Every string of the given electron counts.
    pub fn full(n_orbitals: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        if n_orbitals > MAX_ORBITALS || n_alpha > n_orbitals || n_beta > n_orbitals {
            return Err(Error::Domain(format!(
                "cannot place ({n_alpha}, {n_beta}) electrons in {n_orbitals} orbitals"
            )));
        }
        Ok(Self {
            n_orbitals,
            n_alpha,
            n_beta,
            alpha_strings: strings(n_orbitals, n_alpha),
            beta_strings: strings(n_orbitals, n_beta),
            active_window: None,
        })
    }

    /// Checks the string invariants: correct popcounts, strictly ascending.
    pub fn validate(&self) -> Result<()> {
        let check = |list: &[u64], n: usize, what: &str| -> Result<()> {
            if list.iter().any(|s| s.count_ones() as usize != n) {
                return Err(Error::Domain(format!("{what} string with wrong electron count")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Domain(format!("{what} strings not strictly ascending")));
            }
            if self.n_orbitals < 64 && list.iter().any(|&s| s >> self.n_orbitals != 0) {
                return Err(Error::Domain(format!("{what} string exceeds orbital count")));
            }
            Ok(())
        };
        check(&self.alpha_strings, self.n_alpha, "alpha")?;
        check(&self.beta_strings, self.n_beta, "beta")
    }

    pub fn dim(&self) -> usize {
        self.alpha_strings.len() * self.beta_strings.len()
    }

    pub fn is_complete(&self) -> bool {
        self.alpha_strings.len() == binomial(self.n_orbitals, self.n_alpha)
            && self.beta_strings.len() == binomial(self.n_orbitals, self.n_beta)
    }

    pub fn index_of(&self, det: &Determinant) -> Option<usize> {
        let ia = self.alpha_strings.binary_search(&det.alpha).ok()?;
        let ib = self.beta_strings.binary_search(&det.beta).ok()?;
        Some(ia * self.beta_strings.len() + ib)
    }

    pub fn determinant(&self, index: usize) -> Determinant {
        let nb = self.beta_strings.len();
        Determinant::new(self.alpha_strings[index / nb], self.beta_strings[index % nb])
    }
}

/// Coefficients of a determinant expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct CiVector {
    pub space: DeterminantSpace,
    pub coefficients: Vec<f64>,
    pub reference_index: usize,
}

impl CiVector {
    /// Builds a vector, normalizes it and fixes the global sign so that the
    /// reference coefficient is nonnegative (or, when it vanishes, the
    /// largest-magnitude coefficient is positive).
    pub fn new(space: DeterminantSpace, coefficients: Vec<f64>, reference_index: usize) -> Result<Self> {
        if coefficients.len() != space.dim() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a space of dimension {}",
                coefficients.len(),
                space.dim()
            )));
        }
        if reference_index >= space.dim() {
            return Err(Error::Dimension("reference index outside the space".into()));
        }
        let mut v = Self {
            space,
            coefficients,
            reference_index,
        };
        v.normalize()?;
        Ok(v)
    }

    /// A single determinant in a full space.
    pub fn single_determinant(n_orbitals: usize, det: Determinant) -> Result<Self> {
        let space = DeterminantSpace::full(n_orbitals, det.n_alpha(), det.n_beta())?;
        let idx = space
            .index_of(&det)
            .ok_or_else(|| Error::Domain("determinant outside its own space".into()))?;
        let mut c = vec![0.0; space.dim()];
        c[idx] = 1.0;
        Self::new(space, c, idx)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!("cannot normalize vector with norm {norm}")));
        }
        let c0 = self.coefficients[self.reference_index];
        let flip = if c0 != 0.0 {
            c0 < 0.0
        } else {
            let big = self
                .coefficients
                .iter()
                .copied()
                .fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
            big < 0.0
        };
        let scale = if flip { -1.0 / norm } else { 1.0 / norm };
        self.coefficients.iter_mut().for_each(|c| *c *= scale);
        Ok(())
    }

    pub fn reference(&self) -> Determinant {
        self.space.determinant(self.reference_index)
    }

    pub fn c0(&self) -> f64 {
        self.coefficients[self.reference_index]
    }

    pub fn coefficient(&self, det: &Determinant) -> f64 {
        self.space.index_of(det).map_or(0.0, |i| self.coefficients[i])
    }

    /// Nonzero entries as `(determinant, coefficient)`.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (Determinant, f64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, &c)| (self.space.determinant(i), c))
    }

    /// The same state in the complete product space of its orbital count.
    pub fn to_full_space(&self) -> Result<CiVector> {
        if self.space.is_complete() {
            return Ok(self.clone());
        }
        let mut full = DeterminantSpace::full(self.space.n_orbitals, self.space.n_alpha, self.space.n_beta)?;
        full.active_window = self.space.active_window.clone();
        let mut c = vec![0.0; full.dim()];
        for (det, v) in self.iter_nonzero() {
            let i = full.index_of(&det).expect("strings belong to the full space");
            c[i] = v;
        }
        let reference_index = full
            .index_of(&self.reference())
            .expect("reference belongs to the full space");
        Ok(CiVector {
            space: full,
            coefficients: c,
            reference_index,
        })
    }

    pub fn overlap(&self, other: &CiVector) -> f64 {
        self.iter_nonzero().map(|(d, c)| c * other.coefficient(&d)).sum()
    }
}
