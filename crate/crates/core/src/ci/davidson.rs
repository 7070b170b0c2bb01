//! Davidson iteration for the lowest eigenpairs of a real symmetric operator.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DavidsonOptions {
    /// Residual 2-norm at which a root counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub max_subspace: usize,
    /// Spaces at or below this size are diagonalized densely.
    pub dense_threshold: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 300,
            max_subspace: 64,
            dense_threshold: 16,
        }
    }
}

/// Lowest `n_roots` eigenpairs of the operator `apply` with diagonal `diag`.
///
/// Eigenvectors are returned unnormalized-sign, unit-norm.
pub fn davidson(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    diag: &[f64],
    n_roots: usize,
    opts: &DavidsonOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = diag.len();
    if n_roots == 0 || n_roots > n {
        return Err(Error::Domain(format!(
            "cannot extract {n_roots} roots from dimension {n}"
        )));
    }
    if n <= opts.dense_threshold.max(n_roots) {
        return dense(&apply, n, n_roots);
    }

    let n_guess = (2 * n_roots).max(n_roots + 4).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    for &i in &order[..n_guess] {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        images.push(apply(&v));
        basis.push(v);
    }

    let mut best_residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let k = basis.len();
        let sub = DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &images[j]));
        let sub = (&sub + sub.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sub);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut ritz_vals = Vec::with_capacity(n_roots);
        let mut ritz_vecs = Vec::with_capacity(n_roots);
        let mut ritz_imgs = Vec::with_capacity(n_roots);
        let mut corrections = Vec::new();
        let mut worst = 0.0f64;
        for &r in &idx[..n_roots] {
            let theta = eig.eigenvalues[r];
            let y = eig.eigenvectors.column(r);
            let mut x = vec![0.0; n];
            let mut ax = vec![0.0; n];
            for (j, &yj) in y.iter().enumerate() {
                axpy(yj, &basis[j], &mut x);
                axpy(yj, &images[j], &mut ax);
            }
            let res: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - theta * b).collect();
            let rnorm = dot(&res, &res).sqrt();
            worst = worst.max(rnorm);
            if rnorm > opts.tol {
                let t: Vec<f64> = res
                    .iter()
                    .zip(diag)
                    .map(|(r, d)| {
                        let denom = theta - d;
                        let denom = if denom.abs() < 1e-4 {
                            1e-4f64.copysign(denom)
                        } else {
                            denom
                        };
                        r / denom
                    })
                    .collect();
                corrections.push(t);
            }
            ritz_vals.push(theta);
            ritz_vecs.push(x);
            ritz_imgs.push(ax);
        }
        best_residual = best_residual.min(worst);
        if worst <= opts.tol {
            let vecs = ritz_vecs
                .into_iter()
                .map(|mut v| {
                    let nrm = dot(&v, &v).sqrt();
                    v.iter_mut().for_each(|x| *x /= nrm);
                    v
                })
                .collect();
            return Ok((ritz_vals, vecs));
        }

        if basis.len() + corrections.len() > opts.max_subspace.min(n) {
            basis = ritz_vecs;
            images = ritz_imgs;
        }
        let mut added = 0;
        for mut t in corrections {
            for _ in 0..2 {
                for b in &basis {
                    let proj = dot(b, &t);
                    axpy(-proj, b, &mut t);
                }
            }
            let nrm = dot(&t, &t).sqrt();
            if nrm > 1e-10 && basis.len() < n {
                t.iter_mut().for_each(|x| *x /= nrm);
                images.push(apply(&t));
                basis.push(t);
                added += 1;
            }
        }
        if added == 0 {
            // subspace exhausted: fall back to the dense problem if it is tractable
            if n <= 4096 {
                return dense(&apply, n, n_roots);
            }
            break;
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        best_residual,
    })
}

fn dense(apply: &impl Fn(&[f64]) -> Vec<f64>, n: usize, n_roots: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = apply(&e);
        e[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let (vals, vecs) = lowest_eigenpairs(a, n_roots);
    Ok((vals, vecs))
}

/// Lowest eigenpairs of a dense symmetric matrix, ascending.
pub fn lowest_eigenpairs(a: DMatrix<f64>, n_roots: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = idx[..n_roots].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = idx[..n_roots]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (vals, vecs)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (i as f64) * 0.5 + 1.0
            } else if i.abs_diff(j) == 1 {
                -0.3
            } else if i.abs_diff(j) == 5 {
                0.05
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_eigenvalues() {
        let a = tridiagonal(300);
        let (ref_vals, _) = lowest_eigenpairs(a.clone(), 3);
        let apply = |x: &[f64]| -> Vec<f64> {
            let v = nalgebra::DVector::from_column_slice(x);
            (&a * v).iter().copied().collect()
        };
        let diag: Vec<f64> = (0..300).map(|i| a[(i, i)]).collect();
        let (vals, vecs) = davidson(apply, &diag, 3, &DavidsonOptions::default()).unwrap();
        for (v, r) in vals.iter().zip(&ref_vals) {
            assert!((v - r).abs() < 1e-10, "{v} vs {r}");
        }
        assert!((dot(&vecs[0], &vecs[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_many_roots() {
        let apply = |x: &[f64]| x.to_vec();
        assert!(davidson(apply, &[1.0, 2.0], 3, &DavidsonOptions::default()).is_err());
    }
}
