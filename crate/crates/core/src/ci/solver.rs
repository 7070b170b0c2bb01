//! FCI and CASCI ground-state solvers.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::DMatrix;

use super::davidson::{davidson, DavidsonOptions};
use super::determinant::{below, Determinant, SpinOrbital};
use super::sigma::HamiltonianOperator;
use super::space::{CiVector, DeterminantSpace};
use crate::error::{Error, Result};
use crate::hamiltonian::{transform_integrals, MolecularHamiltonian, OrbitalBasis};
use crate::tensor::Tensor4;

#[derive(Debug, Clone)]
pub struct CiSolverOptions {
    pub max_determinants: usize,
    pub davidson: DavidsonOptions,
}

impl Default for CiSolverOptions {
    fn default() -> Self {
        Self {
            max_determinants: 2_000_000,
            davidson: DavidsonOptions::default(),
        }
    }
}

/// Active space of `n_electrons` in `n_orbitals` around the Fermi level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CasSpec {
    pub n_electrons: usize,
    pub n_orbitals: usize,
}

impl CasSpec {
    pub fn new(n_electrons: usize, n_orbitals: usize) -> Self {
        Self {
            n_electrons,
            n_orbitals,
        }
    }

    /// Number of doubly occupied core orbitals below the window.
    pub fn n_core(&self, h: &MolecularHamiltonian) -> Result<usize> {
        let n = h.n_electrons;
        if self.n_electrons > n || !(n - self.n_electrons).is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "CAS({},{}) leaves an odd or negative core for {n} electrons",
                self.n_electrons, self.n_orbitals
            )));
        }
        let n_core = (n - self.n_electrons) / 2;
        if n_core + self.n_orbitals > h.n_orbitals {
            return Err(Error::Domain(format!(
                "CAS({},{}) with {n_core} core orbitals exceeds {} orbitals",
                self.n_electrons, self.n_orbitals, h.n_orbitals
            )));
        }
        if n_core > h.n_alpha().min(h.n_beta())
            || h.n_alpha() - n_core > self.n_orbitals
            || h.n_beta() - n_core > self.n_orbitals
        {
            return Err(Error::Domain(format!(
                "CAS({},{}) cannot hold the open-shell electrons",
                self.n_electrons, self.n_orbitals
            )));
        }
        Ok(n_core)
    }

    pub fn window(&self, h: &MolecularHamiltonian) -> Result<Range<usize>> {
        let n_core = self.n_core(h)?;
        Ok(n_core..n_core + self.n_orbitals)
    }
}

/// Lowest `n_roots` eigenpairs of `h` in a complete determinant space.
///
/// Energies include `h.core_energy`.
pub fn solve_fci(
    h: &MolecularHamiltonian,
    space: &DeterminantSpace,
    n_roots: usize,
) -> Result<(Vec<f64>, Vec<CiVector>)> {
    solve_fci_with(h, space, n_roots, &CiSolverOptions::default())
}

pub fn solve_fci_with(
    h: &MolecularHamiltonian,
    space: &DeterminantSpace,
    n_roots: usize,
    opts: &CiSolverOptions,
) -> Result<(Vec<f64>, Vec<CiVector>)> {
    if space.dim() > opts.max_determinants {
        return Err(Error::Capacity(format!(
            "{} determinants exceeds the cap of {}",
            space.dim(),
            opts.max_determinants
        )));
    }
    let op = HamiltonianOperator::new(h, space)?;
    let diag = op.diagonal();
    let (vals, vecs) = davidson(|c| op.apply(c), &diag, n_roots, &opts.davidson)?;
    let reference = Determinant::aufbau(space.n_alpha, space.n_beta);
    let reference_index = space.index_of(&reference).unwrap_or(0);
    let vectors = vecs
        .into_iter()
        .map(|c| CiVector::new(space.clone(), c, reference_index))
        .collect::<Result<Vec<_>>>()?;
    Ok((vals, vectors))
}

/// Ground state of `h` in its full determinant space.
pub fn fci_ground_state(h: &MolecularHamiltonian) -> Result<(f64, CiVector)> {
    let space = DeterminantSpace::full(h.n_orbitals, h.n_alpha(), h.n_beta())?;
    let (e, mut v) = solve_fci(h, &space, 1)?;
    Ok((e[0], v.remove(0)))
}

#[derive(Debug, Clone)]
pub struct CasciSolution {
    pub energy: f64,
    /// Ground state embedded in the full orbital space (core occupied).
    pub vector: CiVector,
    pub window: Range<usize>,
}

/// Active-space Hamiltonian with the frozen core folded into the one-body
/// operator and the core energy.
pub fn active_space_hamiltonian(h: &MolecularHamiltonian, cas: CasSpec) -> Result<MolecularHamiltonian> {
    let n_core = cas.n_core(h)?;
    let g = &h.two_body;
    let mut e_core = h.core_energy;
    for c in 0..n_core {
        e_core += 2.0 * h.one_body[(c, c)];
        for d in 0..n_core {
            e_core += 2.0 * g.get(c, c, d, d) - g.get(c, d, d, c);
        }
    }
    let n_act = cas.n_orbitals;
    let mut one_body = DMatrix::zeros(n_act, n_act);
    for t in 0..n_act {
        for u in 0..n_act {
            let (tt, uu) = (t + n_core, u + n_core);
            let mut v = h.one_body[(tt, uu)];
            for c in 0..n_core {
                v += 2.0 * g.get(tt, uu, c, c) - g.get(tt, c, c, uu);
            }
            one_body[(t, u)] = v;
        }
    }
    let mut two_body = Tensor4::zeros(n_act);
    for t in 0..n_act {
        for u in 0..n_act {
            for v in 0..n_act {
                for w in 0..n_act {
                    two_body.set(t, u, v, w, g.get(t + n_core, u + n_core, v + n_core, w + n_core));
                }
            }
        }
    }
    let ms2 = h.ms2;
    Ok(MolecularHamiltonian {
        n_orbitals: n_act,
        n_electrons: cas.n_electrons,
        ms2,
        core_energy: e_core,
        one_body,
        two_body,
    })
}

/// CASCI ground state of `h` expressed in `basis`.
///
/// The active window is the `cas.n_orbitals` orbitals directly above the
/// doubly occupied core, so `basis` should already be sorted by occupation.
pub fn solve_casci(h: &MolecularHamiltonian, basis: &OrbitalBasis, cas: CasSpec) -> Result<CasciSolution> {
    let ht = transform_integrals(h, basis)?;
    solve_casci_in_place(&ht, cas, &CiSolverOptions::default())
}

/// CASCI on integrals that are already in the working basis.
pub fn solve_casci_in_place(h: &MolecularHamiltonian, cas: CasSpec, opts: &CiSolverOptions) -> Result<CasciSolution> {
    let window = cas.window(h)?;
    let n_core = window.start;
    let act = active_space_hamiltonian(h, cas)?;
    let act_space = DeterminantSpace::full(act.n_orbitals, h.n_alpha() - n_core, h.n_beta() - n_core)?;
    let (e, v) = solve_fci_with(&act, &act_space, 1, opts)?;
    let core = below(n_core);
    let embed = |s: &u64| (s << n_core) | core;
    let space = DeterminantSpace {
        n_orbitals: h.n_orbitals,
        n_alpha: h.n_alpha(),
        n_beta: h.n_beta(),
        alpha_strings: act_space.alpha_strings.iter().map(embed).collect(),
        beta_strings: act_space.beta_strings.iter().map(embed).collect(),
        active_window: Some(window.clone()),
    };
    let vector = CiVector::new(space, v[0].coefficients.clone(), v[0].reference_index)?;
    Ok(CasciSolution {
        energy: e[0],
        vector,
        window,
    })
}

/// `H |det⟩` as a list of `(determinant, amplitude)` pairs, built from
/// fermionic mode operators. Entries for the same determinant are merged.
pub fn apply_hamiltonian(h: &MolecularHamiltonian, det: &Determinant) -> Vec<(Determinant, f64)> {
    let m = h.n_orbitals;
    let mut out: HashMap<Determinant, f64> = HashMap::new();
    out.insert(*det, h.core_energy);
    let spin_orbitals: Vec<SpinOrbital> = (0..m)
        .map(SpinOrbital::alpha)
        .chain((0..m).map(SpinOrbital::beta))
        .collect();
    // Σ h_pq a†_p a_q
    for &q in &spin_orbitals {
        let Some((d1, s1)) = det.annihilate(q) else { continue };
        for &p in spin_orbitals.iter().filter(|p| p.spin == q.spin) {
            let v = h.one_body[(p.orbital, q.orbital)];
            if v == 0.0 {
                continue;
            }
            if let Some((d2, s2)) = d1.create(p) {
                *out.entry(d2).or_insert(0.0) += v * s1 * s2;
            }
        }
    }
    // ½ Σ (pq|rs) a†_p a†_r a_s a_q
    let g = &h.two_body;
    for &q in &spin_orbitals {
        let Some((d1, s1)) = det.annihilate(q) else { continue };
        for &s in &spin_orbitals {
            let Some((d2, s2)) = d1.annihilate(s) else { continue };
            for &r in spin_orbitals.iter().filter(|r| r.spin == s.spin) {
                let Some((d3, s3)) = d2.create(r) else { continue };
                for &p in spin_orbitals.iter().filter(|p| p.spin == q.spin) {
                    let v = g.get(p.orbital, q.orbital, r.orbital, s.orbital);
                    if v == 0.0 {
                        continue;
                    }
                    if let Some((d4, s4)) = d3.create(p) {
                        *out.entry(d4).or_insert(0.0) += 0.5 * v * s1 * s2 * s3 * s4;
                    }
                }
            }
        }
    }
    out.into_iter().filter(|(_, v)| *v != 0.0).collect()
}

/// Dense Hamiltonian matrix over `space`, built determinant by determinant
/// from mode operators. Independent of the sigma-vector code path.
pub fn dense_hamiltonian(h: &MolecularHamiltonian, space: &DeterminantSpace) -> DMatrix<f64> {
    let n = space.dim();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        for (d, v) in apply_hamiltonian(h, &space.determinant(j)) {
            if let Some(i) = space.index_of(&d) {
                a[(i, j)] += v;
            }
        }
    }
    a
}
