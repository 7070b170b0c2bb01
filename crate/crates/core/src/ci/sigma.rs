//! Hamiltonian-vector products on a complete determinant space.
//!
//! Uses `H = Σ_pq k_pq E_pq + ½ Σ_pqrs (pq|rs) E_pq E_rs` with
//! `k_pq = h_pq - ½ Σ_r (pr|rq)` and spin-summed `E_pq`.

use nalgebra::DMatrix;

use super::determinant::{bits, string_excite};
use super::space::DeterminantSpace;
use crate::error::{Error, Result};
use crate::hamiltonian::MolecularHamiltonian;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Excitation {
    /// compound index `p * m + q` of `E_pq`
    pub(crate) pq: u32,
    pub(crate) target: u32,
    pub(crate) sign: f64,
}

pub(crate) fn excitation_lists(strings: &[u64], m: usize) -> Vec<Vec<Excitation>> {
    strings
        .iter()
        .map(|&s| {
            let mut list = Vec::new();
            for q in bits(s) {
                for p in 0..m {
                    if let Some((t, sign)) = string_excite(s, p, q) {
                        let target = strings.binary_search(&t).expect("complete string list");
                        list.push(Excitation {
                            pq: (p * m + q) as u32,
                            target: target as u32,
                            sign,
                        });
                    }
                }
            }
            list
        })
        .collect()
}

/// Precomputed data for repeated `σ = H c` products.
pub struct HamiltonianOperator<'a> {
    h: &'a MolecularHamiltonian,
    space: &'a DeterminantSpace,
    alpha_exc: Vec<Vec<Excitation>>,
    beta_exc: Vec<Vec<Excitation>>,
    k: Vec<f64>,
    g: DMatrix<f64>,
}

impl<'a> HamiltonianOperator<'a> {
    pub fn new(h: &'a MolecularHamiltonian, space: &'a DeterminantSpace) -> Result<Self> {
        let m = h.n_orbitals;
        if space.n_orbitals != m {
            return Err(Error::Dimension(format!(
                "space has {} orbitals, Hamiltonian has {m}",
                space.n_orbitals
            )));
        }
        if !space.is_complete() {
            return Err(Error::Domain("sigma products need a complete string space".into()));
        }
        let mut k = vec![0.0; m * m];
        for p in 0..m {
            for q in 0..m {
                let exch: f64 = (0..m).map(|r| h.two_body.get(p, r, r, q)).sum();
                k[p * m + q] = h.one_body[(p, q)] - 0.5 * exch;
            }
        }
        let g = DMatrix::from_fn(m * m, m * m, |pq, rs| h.two_body.get(pq / m, pq % m, rs / m, rs % m));
        Ok(Self {
            h,
            space,
            alpha_exc: excitation_lists(&space.alpha_strings, m),
            beta_exc: excitation_lists(&space.beta_strings, m),
            k,
            g,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Diagonal matrix elements including the core energy.
    pub fn diagonal(&self) -> Vec<f64> {
        let h = self.h;
        let nb = self.space.beta_strings.len();
        let mut out = Vec::with_capacity(self.dim());
        for &sa in &self.space.alpha_strings {
            for &sb in &self.space.beta_strings[..nb] {
                out.push(diagonal_element(h, sa, sb));
            }
        }
        out
    }

    /// `σ = H c`.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        let m = self.h.n_orbitals;
        let m2 = m * m;
        let nb = self.space.beta_strings.len();
        let dim = self.dim();
        let mut sigma: Vec<f64> = c.iter().map(|x| x * self.h.core_energy).collect();
        if m == 0 {
            return sigma;
        }

        // D[(rs), J] = (E_rs c)_J
        let mut d = DMatrix::<f64>::zeros(m2, dim);
        self.for_each_excitation(
            |src, dst, pq, sign| {
                d[(pq, dst)] += sign * c[src];
            },
            nb,
        );

        // W[(pq), J] = ½ Σ_rs (pq|rs) D[(rs), J] + k_pq c_J
        let mut w = &self.g * &d;
        for (j, mut col) in w.column_iter_mut().enumerate() {
            for (pq, x) in col.iter_mut().enumerate() {
                *x = 0.5 * *x + self.k[pq] * c[j];
            }
        }

        // σ_J' += Σ_{pq} <J'|E_pq|J> W[(pq), J]
        self.for_each_excitation(
            |src, dst, pq, sign| {
                sigma[dst] += sign * w[(pq, src)];
            },
            nb,
        );
        sigma
    }

    fn for_each_excitation(&self, mut f: impl FnMut(usize, usize, usize, f64), nb: usize) {
        for (ia, list) in self.alpha_exc.iter().enumerate() {
            for e in list {
                let ja = e.target as usize;
                for ib in 0..nb {
                    f(ia * nb + ib, ja * nb + ib, e.pq as usize, e.sign);
                }
            }
        }
        let na = self.space.alpha_strings.len();
        for ia in 0..na {
            for (ib, list) in self.beta_exc.iter().enumerate() {
                for e in list {
                    f(ia * nb + ib, ia * nb + e.target as usize, e.pq as usize, e.sign);
                }
            }
        }
    }
}

/// Slater–Condon diagonal element `⟨D|H|D⟩` including the core energy.
pub(crate) fn diagonal_element(h: &MolecularHamiltonian, sa: u64, sb: u64) -> f64 {
    let g = &h.two_body;
    let occ_a: Vec<usize> = bits(sa).collect();
    let occ_b: Vec<usize> = bits(sb).collect();
    let mut e = h.core_energy;
    for &p in occ_a.iter().chain(&occ_b) {
        e += h.one_body[(p, p)];
    }
    for occ in [&occ_a, &occ_b] {
        for (i, &p) in occ.iter().enumerate() {
            for &q in &occ[..i] {
                e += g.get(p, p, q, q) - g.get(p, q, q, p);
            }
        }
    }
    for &p in &occ_a {
        for &q in &occ_b {
            e += g.get(p, p, q, q);
        }
    }
    e
}
