//! Second-quantized molecular Hamiltonians and orbital bases.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

/// Determinants are stored as 64-bit occupation strings.
pub const MAX_ORBITALS: usize = 64;

/// One- and two-electron integrals in a fixed orthonormal orbital basis.
///
/// `two_body` is in chemists' notation `(pq|rs)` and carries the full
/// 8-fold permutational symmetry of real orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularHamiltonian {
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    pub core_energy: f64,
    pub one_body: DMatrix<f64>,
    pub two_body: Tensor4,
}

impl MolecularHamiltonian {
    pub fn zeros(n_orbitals: usize, n_electrons: usize, ms2: i32) -> Self {
        Self {
            n_orbitals,
            n_electrons,
            ms2,
            core_energy: 0.0,
            one_body: DMatrix::zeros(n_orbitals, n_orbitals),
            two_body: Tensor4::zeros(n_orbitals),
        }
    }

    pub fn n_alpha(&self) -> usize {
        ((self.n_electrons as i64 + self.ms2 as i64) / 2) as usize
    }

    pub fn n_beta(&self) -> usize {
        ((self.n_electrons as i64 - self.ms2 as i64) / 2) as usize
    }

    /// Sets `h_pq` and `h_qp`.
    pub fn set_one_body(&mut self, p: usize, q: usize, v: f64) {
        self.one_body[(p, q)] = v;
        self.one_body[(q, p)] = v;
    }

    /// Sets `(pq|rs)` and all seven symmetry partners.
    pub fn set_two_body(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let g = &mut self.two_body;
        for (a, b) in [(p, q), (q, p)] {
            for (c, d) in [(r, s), (s, r)] {
                g.set(a, b, c, d, v);
                g.set(c, d, a, b, v);
            }
        }
    }

    /// Checks electron counts and the symmetry invariants.
    pub fn validate(&self) -> Result<()> {
        let m = self.n_orbitals;
        if m > MAX_ORBITALS {
            return Err(Error::Capacity(format!(
                "{m} orbitals exceeds the limit of {MAX_ORBITALS}"
            )));
        }
        if self.n_electrons > 2 * m {
            return Err(Error::Domain(format!(
                "{} electrons do not fit in {m} orbitals",
                self.n_electrons
            )));
        }
        let n = self.n_electrons as i64;
        let ms2 = self.ms2 as i64;
        if ms2.abs() > n || (n + ms2) % 2 != 0 || self.n_alpha() > m || self.n_beta() > m {
            return Err(Error::Domain(format!(
                "MS2={} is incompatible with {} electrons in {m} orbitals",
                self.ms2, self.n_electrons
            )));
        }
        if self.one_body.nrows() != m || self.one_body.ncols() != m || self.two_body.dim() != m {
            return Err(Error::Dimension("integral arrays do not match n_orbitals".into()));
        }
        let tol = 1e-12;
        for p in 0..m {
            for q in 0..p {
                if (self.one_body[(p, q)] - self.one_body[(q, p)]).abs() > tol {
                    return Err(Error::Domain(format!("h[{p},{q}] is not symmetric")));
                }
            }
        }
        let g = &self.two_body;
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for s in 0..m {
                        let v = g.get(p, q, r, s);
                        if (v - g.get(q, p, r, s)).abs() > tol
                            || (v - g.get(p, q, s, r)).abs() > tol
                            || (v - g.get(r, s, p, q)).abs() > tol
                        {
                            return Err(Error::Domain(format!("(pq|rs) symmetry broken at ({p}{q}|{r}{s})")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let one = (&self.one_body - &other.one_body).amax();
        let two = self.two_body.max_abs_diff(&other.two_body);
        one.max(two).max((self.core_energy - other.core_energy).abs())
    }
}

/// Where an orbital basis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    HfInit,
    Qio,
    NaturalOrbitals,
    Imported,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::HfInit => "HF-init",
            Provenance::Qio => "QIO",
            Provenance::NaturalOrbitals => "NO",
            Provenance::Imported => "imported",
        })
    }
}

/// Orthogonal change of orbital basis.
///
/// Column `k` of `coefficients` is orbital `k` expressed in the reference
/// orbitals, so integrals transform as `h' = Cᵀ h C`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalBasis {
    pub coefficients: DMatrix<f64>,
    pub provenance: Provenance,
}

impl OrbitalBasis {
    pub fn identity(n: usize) -> Self {
        Self {
            coefficients: DMatrix::identity(n, n),
            provenance: Provenance::HfInit,
        }
    }

    /// Wraps a matrix after checking `C Cᵀ = 1` to within `tol`.
    pub fn new(coefficients: DMatrix<f64>, provenance: Provenance, tol: f64) -> Result<Self> {
        let deviation = orthogonality_deviation(&coefficients)?;
        if deviation > tol {
            return Err(Error::Basis { deviation });
        }
        Ok(Self {
            coefficients,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.coefficients.nrows()
    }

    /// The matrix `U = Cᵀ` whose rows are the new orbitals.
    pub fn rotation(&self) -> DMatrix<f64> {
        self.coefficients.transpose()
    }

    /// `self` followed by `next`, where `next` is expressed in the orbitals of `self`.
    pub fn compose(&self, next: &OrbitalBasis) -> OrbitalBasis {
        OrbitalBasis {
            coefficients: &self.coefficients * &next.coefficients,
            provenance: next.provenance,
        }
    }

    /// Reorders columns so that new orbital `k` is old orbital `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> OrbitalBasis {
        let n = self.dim();
        OrbitalBasis {
            coefficients: DMatrix::from_fn(n, n, |i, k| self.coefficients[(i, perm[k])]),
            provenance: self.provenance,
        }
    }
}

pub(crate) fn orthogonality_deviation(c: &DMatrix<f64>) -> Result<f64> {
    if c.nrows() != c.ncols() {
        return Err(Error::Dimension(format!("basis matrix is {}x{}", c.nrows(), c.ncols())));
    }
    let n = c.nrows();
    Ok((c * c.transpose() - DMatrix::<f64>::identity(n, n)).amax())
}

/// Eigenvectors of the one-body operator in ascending order of eigenvalue,
/// each with its largest component made positive.
///
/// This is the starting basis of the optimization.
pub fn core_hamiltonian_basis(h: &MolecularHamiltonian) -> OrbitalBasis {
    let n = h.n_orbitals;
    let eig = nalgebra::SymmetricEigen::new(h.one_body.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut c = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        fix_sign(col.as_mut_slice());
        c.set_column(k, &col);
    }
    OrbitalBasis {
        coefficients: c,
        provenance: Provenance::HfInit,
    }
}

/// Flips `v` so its largest-magnitude component, the first on ties, is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Hubbard chain with nearest-neighbour hopping `-t` and on-site repulsion `u`.
///
/// For `n_sites == 2` the periodic bond coincides with the open one and is
/// not added twice.
pub fn make_hubbard(
    n_sites: usize,
    t: f64,
    u: f64,
    periodic: bool,
    n_electrons: usize,
) -> Result<MolecularHamiltonian> {
    if n_sites < 2 {
        return Err(Error::Domain(format!(
            "Hubbard chain needs at least 2 sites, got {n_sites}"
        )));
    }
    let ms2 = (n_electrons % 2) as i32;
    let mut h = MolecularHamiltonian::zeros(n_sites, n_electrons, ms2);
    for p in 0..n_sites - 1 {
        h.set_one_body(p, p + 1, -t);
    }
    if periodic && n_sites > 2 {
        h.set_one_body(0, n_sites - 1, -t);
    }
    for p in 0..n_sites {
        h.two_body.set(p, p, p, p, u);
    }
    h.validate()?;
    Ok(h)
}

/// Expresses `h` in the orbitals of `basis`.
pub fn transform_integrals(h: &MolecularHamiltonian, basis: &OrbitalBasis) -> Result<MolecularHamiltonian> {
    if basis.dim() != h.n_orbitals {
        return Err(Error::Dimension(format!(
            "basis has {} orbitals, Hamiltonian has {}",
            basis.dim(),
            h.n_orbitals
        )));
    }
    let deviation = orthogonality_deviation(&basis.coefficients)?;
    if deviation > 1e-8 {
        return Err(Error::Basis { deviation });
    }
    let u = basis.rotation();
    let one_body = &u * &h.one_body * u.transpose();
    // restore exact symmetry lost to rounding
    let one_body = (&one_body + one_body.transpose()) * 0.5;
    let mut two_body = h.two_body.transform(&u);
    symmetrize_eightfold(&mut two_body);
    Ok(MolecularHamiltonian {
        n_orbitals: h.n_orbitals,
        n_electrons: h.n_electrons,
        ms2: h.ms2,
        core_energy: h.core_energy,
        one_body,
        two_body,
    })
}

fn symmetrize_eightfold(g: &mut Tensor4) {
    let n = g.dim();
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q < r * (r + 1) / 2 + s {
                        continue;
                    }
                    let partners = [
                        (p, q, r, s),
                        (q, p, r, s),
                        (p, q, s, r),
                        (q, p, s, r),
                        (r, s, p, q),
                        (s, r, p, q),
                        (r, s, q, p),
                        (s, r, q, p),
                    ];
                    let first = g.get(p, q, r, s);
                    if partners.iter().all(|&(a, b, c, d)| g.get(a, b, c, d) == first) {
                        continue;
                    }
                    let mean = partners.iter().map(|&(a, b, c, d)| g.get(a, b, c, d)).sum::<f64>() / 8.0;
                    for (a, b, c, d) in partners {
                        g.set(a, b, c, d, mean);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hubbard_open_chain_has_no_wrap_bond() {
        let h = make_hubbard(4, 1.0, 4.0, false, 4).unwrap();
        assert_eq!(h.one_body[(0, 3)], 0.0);
        assert_eq!(h.one_body[(1, 2)], -1.0);
        assert_eq!(h.two_body.get(2, 2, 2, 2), 4.0);
        assert_eq!(h.two_body.get(1, 1, 2, 2), 0.0);
        assert_eq!(h.core_energy, 0.0);
        let p = make_hubbard(4, 1.0, 4.0, true, 4).unwrap();
        assert_eq!(p.one_body[(0, 3)], -1.0);
    }

    #[test]
    fn hubbard_rejects_single_site() {
        assert!(matches!(make_hubbard(1, 1.0, 1.0, false, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn identity_transform_is_bitwise_equal() {
        let h = make_hubbard(4, 1.0, 2.5, true, 4).unwrap();
        let t = transform_integrals(&h, &OrbitalBasis::identity(4)).unwrap();
        assert_eq!(t, h);
    }

    #[test]
    fn quarter_turn_flips_hopping_sign() {
        // columns: new orbital 0 = old 1, new orbital 1 = -old 0
        let c = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let basis = OrbitalBasis::new(c, Provenance::Imported, 1e-12).unwrap();
        let h = make_hubbard(2, 1.0, 4.0, false, 2).unwrap();
        let t = transform_integrals(&h, &basis).unwrap();
        assert!((t.one_body[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((t.two_body.get(0, 0, 0, 0) - 4.0).abs() < 1e-15);
        assert!((t.two_body.get(1, 1, 1, 1) - 4.0).abs() < 1e-15);
        assert!(t.two_body.get(0, 0, 1, 1).abs() < 1e-15);
    }

    #[test]
    fn non_orthogonal_basis_is_rejected() {
        let h = make_hubbard(2, 1.0, 4.0, false, 2).unwrap();
        let basis = OrbitalBasis {
            coefficients: DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            provenance: Provenance::Imported,
        };
        assert!(matches!(transform_integrals(&h, &basis), Err(Error::Basis { .. })));
    }

    #[test]
    fn setting_two_body_fills_all_partners() {
        let mut h = MolecularHamiltonian::zeros(2, 2, 0);
        h.set_two_body(0, 1, 0, 1, 0.7);
        for (p, q, r, s) in [(0, 1, 0, 1), (1, 0, 0, 1), (0, 1, 1, 0), (1, 0, 1, 0)] {
            assert_eq!(h.two_body.get(p, q, r, s), 0.7);
        }
        h.validate().unwrap();
    }
}
