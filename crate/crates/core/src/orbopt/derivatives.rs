//! Analytic first and diagonal second derivatives of the total orbital
//! correlation with respect to Jacobi rotation angles.
//!
//! A rotation by `x` in the `(i, j)` plane only changes the spectra of
//! orbitals `i` and `j`, so each pair needs the derivatives of
//! `γα_oo`, `γβ_oo` and `⟨n_oα n_oβ⟩` for `o ∈ {i, j}` at `x = 0`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::correlation::total_orbital_correlation;
use crate::error::{Error, Result};
use crate::rdm::{orbital_spectrum, SpinRdms};
use crate::tensor::Tensor4;

/// λ values at or below this are treated as zero: they contribute nothing
/// to the cost or its derivatives.
pub const LAMBDA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QioDerivatives {
    pub cost: f64,
    /// Skew-symmetric, `gradient[(i, j)] = ∂F/∂x_ij`.
    pub gradient: DMatrix<f64>,
    /// Symmetric, `hessian[(i, j)] = ∂²F/∂x_ij²`; zero on the diagonal.
    pub hessian: DMatrix<f64>,
    /// Pairs `i < j` where a vanishing λ has a nonzero derivative, so the
    /// true curvature is unbounded and the value above is only the finite part.
    pub indeterminate: Vec<(usize, usize)>,
}

#[derive(Default, Clone, Copy)]
struct Change {
    ga: f64,
    gb: f64,
    pair: f64,
}

impl Change {
    fn lambdas(&self) -> [f64; 4] {
        [
            -self.ga - self.gb + self.pair,
            self.ga - self.pair,
            self.gb - self.pair,
            self.pair,
        ]
    }
}

/// `(d1, d2)` for orbitals `i` and `j` under a rotation in their plane.
fn pair_changes(r: &SpinRdms, ab: &Tensor4, i: usize, j: usize) -> [(Change, Change); 2] {
    let ga = &r.gamma_aa;
    let gb = &r.gamma_bb;
    let g = |p, q, s, t| ab.get(p, q, s, t);
    let d_ga = ga[(i, j)] + ga[(j, i)];
    let d_gb = gb[(i, j)] + gb[(j, i)];
    let dd_ga = 2.0 * (ga[(j, j)] - ga[(i, i)]);
    let dd_gb = 2.0 * (gb[(j, j)] - gb[(i, i)]);
    let d_pi = g(j, i, i, i) + g(i, j, i, i) + g(i, i, j, i) + g(i, i, i, j);
    let d_pj = -(g(i, j, j, j) + g(j, i, j, j) + g(j, j, i, j) + g(j, j, j, i));
    let mixed = g(i, i, j, j) + g(i, j, i, j) + g(i, j, j, i) + g(j, i, i, j) + g(j, i, j, i) + g(j, j, i, i);
    let dd_pi = -4.0 * g(i, i, i, i) + 2.0 * mixed;
    let dd_pj = -4.0 * g(j, j, j, j) + 2.0 * mixed;
    [
        (
            Change {
                ga: d_ga,
                gb: d_gb,
                pair: d_pi,
            },
            Change {
                ga: dd_ga,
                gb: dd_gb,
                pair: dd_pi,
            },
        ),
        (
            Change {
                ga: -d_ga,
                gb: -d_gb,
                pair: d_pj,
            },
            Change {
                ga: -dd_ga,
                gb: -dd_gb,
                pair: dd_pj,
            },
        ),
    ]
}

/// Cost, gradient and diagonal Hessian of the total orbital correlation.
pub fn qio_derivatives(r: &SpinRdms) -> Result<QioDerivatives> {
    let ab = &r.gamma2.as_ref().ok_or(Error::MissingData("2-RDM"))?.ab;
    let spectrum = orbital_spectrum(r)?;
    let cost = total_orbital_correlation(r)?;
    let m = r.n_orbitals;
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let values: Vec<(f64, f64, bool)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut grad = 0.0;
            let mut hess = 0.0;
            let mut indeterminate = false;
            for (o, (d1, d2)) in [i, j].into_iter().zip(pair_changes(r, ab, i, j)) {
                let lam = spectrum.lambdas[o];
                for ((l, a), b) in lam.iter().zip(d1.lambdas()).zip(d2.lambdas()) {
                    if *l > LAMBDA_FLOOR {
                        let log = l.ln();
                        grad -= log * a;
                        hess -= a * a / l + log * b;
                    } else if a.abs() > 1e-10 || b.abs() > 1e-10 {
                        indeterminate = true;
                    }
                }
            }
            (grad, hess, indeterminate)
        })
        .collect();
    let mut gradient = DMatrix::zeros(m, m);
    let mut hessian = DMatrix::zeros(m, m);
    let mut indeterminate = Vec::new();
    for (&(i, j), &(g, h, ind)) in pairs.iter().zip(&values) {
        gradient[(i, j)] = g;
        gradient[(j, i)] = -g;
        hessian[(i, j)] = h;
        hessian[(j, i)] = h;
        if ind {
            indeterminate.push((i, j));
        }
    }
    Ok(QioDerivatives {
        cost,
        gradient,
        hessian,
        indeterminate,
    })
}

pub fn qio_gradient(r: &SpinRdms) -> Result<DMatrix<f64>> {
    Ok(qio_derivatives(r)?.gradient)
}

/// Orbital pairs `(i, j)` with `i < j`.
pub type PairList = Vec<(usize, usize)>;

/// Diagonal Hessian with the list of indeterminate pairs.
pub fn qio_diag_hessian(r: &SpinRdms) -> Result<(DMatrix<f64>, PairList)> {
    let d = qio_derivatives(r)?;
    Ok((d.hessian, d.indeterminate))
}
