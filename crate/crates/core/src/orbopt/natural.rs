use nalgebra::{DMatrix, SymmetricEigen};

use crate::hamiltonian::{fix_sign, OrbitalBasis, Provenance};
use crate::rdm::SpinRdms;

/// Occupations closer than this count as equal when ordering orbitals.
pub const OCCUPATION_TIE: f64 = 1e-9;

/// Eigenvectors of the spin-traced 1-RDM, by descending occupation.
///
/// Each column has its largest component positive. Within a group of
/// degenerate occupations columns are ordered by the index of their largest
/// component, so an already diagonal 1-RDM yields a pure permutation.
pub fn natural_orbitals(r: &SpinRdms) -> OrbitalBasis {
    natural_orbitals_masked(r, &vec![false; r.n_orbitals])
}

/// As [`natural_orbitals`], leaving orbitals flagged in `frozen` in place and
/// diagonalizing only the block of the others.
pub fn natural_orbitals_masked(r: &SpinRdms, frozen: &[bool]) -> OrbitalBasis {
    let m = r.n_orbitals;
    let free: Vec<usize> = (0..m).filter(|&i| !frozen[i]).collect();
    let d = r.spin_traced();
    let block = DMatrix::from_fn(free.len(), free.len(), |a, b| d[(free[a], free[b])]);
    let block = (&block + block.transpose()) * 0.5;
    let eig = SymmetricEigen::new(block);

    let mut cols: Vec<(f64, usize, Vec<f64>)> = (0..free.len())
        .map(|k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            fix_sign(&mut v);
            let lead = (0..v.len()).fold(0, |best, i| if v[i].abs() > v[best].abs() + 1e-12 { i } else { best });
            (eig.eigenvalues[k], lead, v)
        })
        .collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));
    // reorder each degenerate run by leading index
    let mut start = 0;
    while start < cols.len() {
        let mut end = start + 1;
        while end < cols.len() && cols[end - 1].0 - cols[end].0 < OCCUPATION_TIE {
            end += 1;
        }
        cols[start..end].sort_by_key(|c| c.1);
        start = end;
    }

    // frozen columns stay unit vectors; free columns only mix free rows
    let mut c = DMatrix::identity(m, m);
    for (slot, (_, _, v)) in free.iter().zip(&cols) {
        for (a, x) in v.iter().enumerate() {
            c[(free[a], *slot)] = *x;
        }
    }
    OrbitalBasis {
        coefficients: c,
        provenance: Provenance::NaturalOrbitals,
    }
}

/// Permutation that orders orbitals by non-increasing occupation, keeping
/// the original order of any pair within [`OCCUPATION_TIE`].
pub fn occupation_order(occupations: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = Vec::with_capacity(occupations.len());
    for k in 0..occupations.len() {
        let mut pos = perm.len();
        while pos > 0 && occupations[k] > occupations[perm[pos - 1]] + OCCUPATION_TIE {
            pos -= 1;
        }
        perm.insert(pos, k);
    }
    perm
}

/// Reorders the columns of `basis` by the occupations in `r`, which must be
/// expressed in `basis`. Returns the new basis and the permutation, where new
/// orbital `k` is old orbital `perm[k]`.
pub fn sort_by_occupation(basis: &OrbitalBasis, r: &SpinRdms) -> (OrbitalBasis, Vec<usize>) {
    let perm = occupation_order(&r.occupations());
    (basis.permuted(&perm), perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::fci_ground_state;
    use crate::hamiltonian::make_hubbard;
    use crate::rdm::{rdms_from_ci, rotate_rdms_to_basis};

    #[test]
    fn natural_orbitals_diagonalize_the_density() {
        let h = make_hubbard(5, 1.0, 3.0, false, 4).unwrap();
        let (_, v) = fci_ground_state(&h).unwrap();
        let r = rdms_from_ci(&v, true).unwrap();
        let b = natural_orbitals(&r);
        let c = &b.coefficients;
        assert!((c.transpose() * c - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
        let d = c.transpose() * r.spin_traced() * c;
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert!(d[(i, j)].abs() < 1e-10);
                }
            }
            if i > 0 {
                assert!(d[(i, i)] <= d[(i - 1, i - 1)] + 1e-12);
            }
        }
        let rotated = rotate_rdms_to_basis(&r, &b).unwrap();
        let (_, perm) = sort_by_occupation(&b, &rotated);
        assert_eq!(perm, (0..5).collect::<Vec<_>>());
    }

    #[test]
    fn diagonal_density_gives_a_permutation() {
        let mut r = rdms_from_ci(
            &crate::ci::CiVector::single_determinant(3, crate::ci::Determinant::from_orbitals(&[2], &[1])).unwrap(),
            false,
        )
        .unwrap();
        r.gamma_aa[(0, 0)] = 0.0;
        let b = natural_orbitals(&r);
        // occupations 0, 1, 1 -> tied pair keeps index order, then the empty orbital
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(b.coefficients, expected);
    }

    #[test]
    fn occupation_ordering() {
        assert_eq!(occupation_order(&[2.0, 1.5, 0.1]), vec![0, 1, 2]);
        assert_eq!(occupation_order(&[0.1, 1.5, 2.0]), vec![2, 1, 0]);
        assert_eq!(
            occupation_order(&[1.0, 1.0 + 1e-12, 0.5, 1.0 - 1e-12]),
            vec![0, 1, 3, 2]
        );
        assert!(occupation_order(&[]).is_empty());
    }

    #[test]
    fn masked_keeps_frozen_orbitals() {
        let h = make_hubbard(4, 1.0, 2.0, false, 4).unwrap();
        let (_, v) = fci_ground_state(&h).unwrap();
        let r = rdms_from_ci(&v, false).unwrap();
        let b = natural_orbitals_masked(&r, &[false, false, true, false]);
        for k in 0..4 {
            let expected = if k == 2 { 1.0 } else { 0.0 };
            assert_eq!(b.coefficients[(2, k)], expected);
            assert_eq!(b.coefficients[(k, 2)], expected);
        }
    }
}
