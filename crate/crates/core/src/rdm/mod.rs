//! Spin-resolved reduced density matrices and single-orbital spectra.
//!
//! Conventions, for spin `σ` and spatial orbitals `p, q, r, s`:
//!
//! * `γσ[p,q] = ⟨a†_pσ a_qσ⟩`
//! * `Γσσ[p,q,r,s] = ⟨a†_pσ a†_qσ a_sσ a_rσ⟩`
//! * `Γab[p,q,r,s] = ⟨a†_pα a†_qβ a_sβ a_rα⟩`
//!
//! The spin-summed 2-RDM is `Γ[p,q,r,s] = Σ_στ ⟨a†_pσ a†_qτ a_sτ a_rσ⟩`, whose
//! trace `Σ_pq Γ[p,q,p,q]` is `N(N-1)`.

mod dump;
mod subsystem;

pub use dump::{parse_rdm_dump, parse_rdm_dump_str, write_rdm_dump};
pub use subsystem::{subsystem_density, SubsystemState, MAX_SUBSYSTEM_ORBITALS};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::ci::determinant::bits;
use crate::ci::sigma::excitation_lists;
use crate::ci::CiVector;
use crate::error::{Error, Result};
use crate::hamiltonian::OrbitalBasis;
use crate::tensor::Tensor4;

/// Entries of a λ row above this negative value are clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-10;
/// Entries of a λ row below this negative value are rejected.
pub const POSITIVITY_FLOOR: f64 = 1e-8;

/// The three spin blocks of the 2-RDM.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinGamma2 {
    pub aa: Tensor4,
    pub bb: Tensor4,
    pub ab: Tensor4,
}

impl SpinGamma2 {
    pub fn spin_summed(&self) -> Tensor4 {
        let n = self.aa.dim();
        let mut out = Tensor4::zeros(n);
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.aa.get(p, q, r, s)
                            + self.bb.get(p, q, r, s)
                            + self.ab.get(p, q, r, s)
                            + self.ab.get(q, p, s, r);
                        out.set(p, q, r, s, v);
                    }
                }
            }
        }
        out
    }

    fn transform(&self, u: &DMatrix<f64>) -> Self {
        Self {
            aa: self.aa.transform(u),
            bb: self.bb.transform(u),
            ab: self.ab.transform(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinRdms {
    pub n_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub gamma_aa: DMatrix<f64>,
    pub gamma_bb: DMatrix<f64>,
    /// `⟨n_iα n_iβ⟩` for each orbital.
    pub pair_diag: Vec<f64>,
    pub gamma2: Option<SpinGamma2>,
}

impl SpinRdms {
    /// Spin-traced 1-RDM `γα + γβ`.
    pub fn spin_traced(&self) -> DMatrix<f64> {
        &self.gamma_aa + &self.gamma_bb
    }

    /// Diagonal of the spin-traced 1-RDM.
    pub fn occupations(&self) -> Vec<f64> {
        (0..self.n_orbitals)
            .map(|i| self.gamma_aa[(i, i)] + self.gamma_bb[(i, i)])
            .collect()
    }

    pub fn spin_summed_gamma2(&self) -> Result<Tensor4> {
        self.gamma2
            .as_ref()
            .map(SpinGamma2::spin_summed)
            .ok_or(Error::MissingData("2-RDM"))
    }

    /// Checks symmetry, traces and pair-density bounds to within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let m = self.n_orbitals;
        for (name, g, n) in [
            ("alpha", &self.gamma_aa, self.n_alpha),
            ("beta", &self.gamma_bb, self.n_beta),
        ] {
            if g.nrows() != m || g.ncols() != m {
                return Err(Error::Dimension(format!("{name} 1-RDM is {}x{}", g.nrows(), g.ncols())));
            }
            if (g - g.transpose()).amax() > tol {
                return Err(Error::Domain(format!("{name} 1-RDM is not symmetric")));
            }
            if (g.trace() - n as f64).abs() > tol {
                return Err(Error::Domain(format!(
                    "{name} 1-RDM trace {} differs from {n}",
                    g.trace()
                )));
            }
        }
        if self.pair_diag.len() != m {
            return Err(Error::Dimension(format!(
                "{} pair densities for {m} orbitals",
                self.pair_diag.len()
            )));
        }
        for (i, &p) in self.pair_diag.iter().enumerate() {
            let cap = self.gamma_aa[(i, i)].min(self.gamma_bb[(i, i)]);
            if p < -tol || p > cap + tol {
                return Err(Error::Domain(format!(
                    "pair density {p} of orbital {i} outside [0, {cap}]"
                )));
            }
        }
        if let Some(g2) = &self.gamma2 {
            for t in [&g2.aa, &g2.bb, &g2.ab] {
                if t.dim() != m {
                    return Err(Error::Dimension(format!("2-RDM block of dimension {}", t.dim())));
                }
            }
        }
        Ok(())
    }
}

const BLOCK: usize = 1024;

struct Partial {
    g1a: DVector<f64>,
    g1b: DVector<f64>,
    pair: Vec<f64>,
    caa: Option<DMatrix<f64>>,
    cbb: Option<DMatrix<f64>>,
    cab: Option<DMatrix<f64>>,
}

impl Partial {
    fn zeros(m: usize, with_gamma2: bool) -> Self {
        let m2 = m * m;
        let big = || with_gamma2.then(|| DMatrix::zeros(m2, m2));
        Self {
            g1a: DVector::zeros(m2),
            g1b: DVector::zeros(m2),
            pair: vec![0.0; m],
            caa: big(),
            cbb: big(),
            cab: big(),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.g1a += other.g1a;
        self.g1b += other.g1b;
        for (a, b) in self.pair.iter_mut().zip(other.pair) {
            *a += b;
        }
        for (a, b) in [
            (&mut self.caa, other.caa),
            (&mut self.cbb, other.cbb),
            (&mut self.cab, other.cab),
        ] {
            if let (Some(a), Some(b)) = (a.as_mut(), b) {
                *a += b;
            }
        }
        self
    }
}

/// 1- and (optionally) 2-RDMs of a CI vector.
///
/// Every element is evaluated as an overlap `(E Ψ)·(E' Ψ)` of two excited
/// images of the same state, so the resulting matrices are symmetric and
/// positive semidefinite up to rounding.
pub fn rdms_from_ci(v: &CiVector, with_gamma2: bool) -> Result<SpinRdms> {
    let v = v.to_full_space()?;
    let space = &v.space;
    let m = space.n_orbitals;
    let m2 = m * m;
    let psi = &v.coefficients;
    let nb = space.beta_strings.len();
    let dim = space.dim();
    let alpha_exc = excitation_lists(&space.alpha_strings, m);
    let beta_exc = excitation_lists(&space.beta_strings, m);

    let n_blocks = dim.div_ceil(BLOCK);
    let total = (0..n_blocks)
        .into_par_iter()
        .fold(
            || Partial::zeros(m, with_gamma2),
            |mut acc, blk| {
                let j0 = blk * BLOCK;
                let j1 = (j0 + BLOCK).min(dim);
                let width = j1 - j0;
                // column J holds (E_rp Ψ)_J in row r*m + p
                let mut a_img = DMatrix::<f64>::zeros(m2, width);
                let mut b_img = DMatrix::<f64>::zeros(m2, width);
                for j in j0..j1 {
                    let (ia, ib) = (j / nb, j % nb);
                    for e in &alpha_exc[ia] {
                        let (p, q) = (e.pq as usize / m, e.pq as usize % m);
                        let k = e.target as usize * nb + ib;
                        a_img[(q * m + p, j - j0)] += e.sign * psi[k];
                    }
                    for e in &beta_exc[ib] {
                        let (p, q) = (e.pq as usize / m, e.pq as usize % m);
                        let k = ia * nb + e.target as usize;
                        b_img[(q * m + p, j - j0)] += e.sign * psi[k];
                    }
                    let w = psi[j] * psi[j];
                    if w != 0.0 {
                        let both = space.alpha_strings[ia] & space.beta_strings[ib];
                        for i in bits(both) {
                            acc.pair[i] += w;
                        }
                    }
                }
                let psi_blk = DVector::from_column_slice(&psi[j0..j1]);
                acc.g1a += &a_img * &psi_blk;
                acc.g1b += &b_img * &psi_blk;
                if with_gamma2 {
                    let at = a_img.transpose();
                    let bt = b_img.transpose();
                    *acc.caa.as_mut().unwrap() += &a_img * &at;
                    *acc.cbb.as_mut().unwrap() += &b_img * &bt;
                    *acc.cab.as_mut().unwrap() += &a_img * &bt;
                }
                acc
            },
        )
        .reduce(|| Partial::zeros(m, with_gamma2), Partial::merge);

    // g1[(p*m+q)] = Σ_J Ψ_J (E_pq Ψ)_J = γ[p,q]
    let sym = |flat: &DVector<f64>| {
        let g = DMatrix::from_fn(m, m, |p, q| flat[p * m + q]);
        (&g + g.transpose()) * 0.5
    };
    let gamma_aa = sym(&total.g1a);
    let gamma_bb = sym(&total.g1b);

    let gamma2 = if with_gamma2 {
        let same = |c: &DMatrix<f64>, g: &DMatrix<f64>| {
            let mut t = Tensor4::zeros(m);
            for p in 0..m {
                for q in 0..m {
                    for r in 0..m {
                        for s in 0..m {
                            let mut x = c[(r * m + p, q * m + s)];
                            if q == r {
                                x -= g[(p, s)];
                            }
                            t.set(p, q, r, s, x);
                        }
                    }
                }
            }
            t
        };
        let cab = total.cab.as_ref().unwrap();
        let mut ab = Tensor4::zeros(m);
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for s in 0..m {
                        ab.set(p, q, r, s, cab[(r * m + p, q * m + s)]);
                    }
                }
            }
        }
        Some(SpinGamma2 {
            aa: same(total.caa.as_ref().unwrap(), &gamma_aa),
            bb: same(total.cbb.as_ref().unwrap(), &gamma_bb),
            ab,
        })
    } else {
        None
    };

    Ok(SpinRdms {
        n_orbitals: m,
        n_alpha: space.n_alpha,
        n_beta: space.n_beta,
        gamma_aa,
        gamma_bb,
        pair_diag: total.pair,
        gamma2,
    })
}

/// Single-orbital eigenvalues `(λ0, λ1, λ2, λ3)` for the local states
/// empty, up, down and doubly occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalSpectrum {
    pub lambdas: Vec<[f64; 4]>,
}

/// Unclamped λ row from the occupation numbers of one orbital.
#[inline]
pub fn lambda_row(gamma_a: f64, gamma_b: f64, pair: f64) -> [f64; 4] {
    [1.0 - gamma_a - gamma_b + pair, gamma_a - pair, gamma_b - pair, pair]
}

/// Per-orbital spectra. Negative entries down to `-POSITIVITY_FLOOR` are
/// clamped to zero; anything below raises a positivity error.
pub fn orbital_spectrum(r: &SpinRdms) -> Result<OrbitalSpectrum> {
    let mut lambdas = Vec::with_capacity(r.n_orbitals);
    for i in 0..r.n_orbitals {
        let mut row = lambda_row(r.gamma_aa[(i, i)], r.gamma_bb[(i, i)], r.pair_diag[i]);
        for x in row.iter_mut() {
            if *x < -POSITIVITY_FLOOR || !x.is_finite() {
                return Err(Error::Positivity { orbital: i, value: *x });
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        lambdas.push(row);
    }
    Ok(OrbitalSpectrum { lambdas })
}

/// RDMs in the orbitals given by the rows of `u`: `γ' = U γ Uᵀ` and the
/// same congruence on every index of each 2-RDM block.
pub fn rotate_rdms(r: &SpinRdms, u: &DMatrix<f64>) -> Result<SpinRdms> {
    let g2 = r.gamma2.as_ref().ok_or(Error::MissingData("2-RDM"))?;
    let m = r.n_orbitals;
    if u.nrows() != m || u.ncols() != m {
        return Err(Error::Dimension(format!(
            "rotation is {}x{}, RDMs have {m} orbitals",
            u.nrows(),
            u.ncols()
        )));
    }
    let gamma2 = g2.transform(u);
    let pair_diag = (0..m).map(|i| gamma2.ab.get(i, i, i, i)).collect();
    let rot = |g: &DMatrix<f64>| {
        let x = u * g * u.transpose();
        (&x + x.transpose()) * 0.5
    };
    Ok(SpinRdms {
        n_orbitals: m,
        n_alpha: r.n_alpha,
        n_beta: r.n_beta,
        gamma_aa: rot(&r.gamma_aa),
        gamma_bb: rot(&r.gamma_bb),
        pair_diag,
        gamma2: Some(gamma2),
    })
}

/// RDMs expressed in the orbitals of `basis`.
pub fn rotate_rdms_to_basis(r: &SpinRdms, basis: &OrbitalBasis) -> Result<SpinRdms> {
    rotate_rdms(r, &basis.rotation())
}

/// RDMs given in the orbitals of `basis`, expressed back in the reference orbitals.
pub fn rotate_rdms_from_basis(r: &SpinRdms, basis: &OrbitalBasis) -> Result<SpinRdms> {
    rotate_rdms(r, &basis.coefficients)
}

/// Frobenius distance between the spin-summed 2-RDMs.
pub fn rdm_distance(a: &SpinRdms, b: &SpinRdms) -> Result<f64> {
    if a.n_orbitals != b.n_orbitals {
        return Err(Error::Dimension(format!(
            "RDMs over {} and {} orbitals",
            a.n_orbitals, b.n_orbitals
        )));
    }
    Ok(a.spin_summed_gamma2()?.frobenius_distance(&b.spin_summed_gamma2()?))
}
