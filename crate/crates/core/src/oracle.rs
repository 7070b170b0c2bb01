//! Closed forms for two electrons in a singlet over two orbitals.
//!
//! The state is `p0 |Ψ0⟩ + p1 |Ψ1⟩ + p2 |Ψ2⟩` with `Ψ0` both electrons in
//! orbital 0, `Ψ2` both in orbital 1 and `Ψ1` the open-shell singlet
//! `(|α0 β1⟩ + |α1 β0⟩)/√2`. A real rotation by `θ` makes new orbital 0
//! `cos θ φ0 + sin θ φ1`, which maps the amplitudes to
//!
//! ```text
//! q0 = p0 c² + √2 p1 c s + p2 s²
//! q1 = (p2 − p0) sin 2θ / √2 + p1 cos 2θ
//! q2 = p0 s² − √2 p1 c s + p2 c²
//! ```
//!
//! and either orbital then has spectrum `{q0², q1²/2, q1²/2, q2²}`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::io::Write;

use crate::ci::{CiVector, Determinant, DeterminantSpace};
use crate::correlation::entropy;
use crate::error::{Error, Result};
use crate::format_sig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingletAmplitudes {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// Accumulated rotation angle, radians.
    pub theta: f64,
}

impl SingletAmplitudes {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<Self> {
        let sum = p0 * p0 + p1 * p1 + p2 * p2;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Normalization { sum });
        }
        Ok(Self { p0, p1, p2, theta: 0.0 })
    }

    /// The closed-shell pair `√x Ψ0 + √(1−x) Ψ2`.
    pub fn from_p0_sq(p0_sq: f64) -> Result<Self> {
        check_p0_sq(p0_sq)?;
        Ok(Self {
            p0: p0_sq.sqrt(),
            p1: 0.0,
            p2: (1.0 - p0_sq).sqrt(),
            theta: 0.0,
        })
    }

    /// `(λ_empty, λ_α, λ_β, λ_double)` of orbital 0.
    pub fn spectrum(&self) -> [f64; 4] {
        let half = 0.5 * self.p1 * self.p1;
        [self.p2 * self.p2, half, half, self.p0 * self.p0]
    }

    /// Entropy of one orbital, nats. Both orbitals share it.
    pub fn orbital_entropy(&self) -> f64 {
        entropy(&self.spectrum())
    }
}

fn check_p0_sq(p0_sq: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p0_sq) {
        return Err(Error::Domain(format!("p0² = {p0_sq} outside [0, 1]")));
    }
    Ok(())
}

pub fn rotate_amplitudes(s: &SingletAmplitudes, theta: f64) -> SingletAmplitudes {
    let (sn, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    SingletAmplitudes {
        p0: s.p0 * c * c + SQRT_2 * s.p1 * c * sn + s.p2 * sn * sn,
        p1: FRAC_1_SQRT_2 * s2 * (s.p2 - s.p0) + c2 * s.p1,
        p2: s.p0 * sn * sn - SQRT_2 * s.p1 * c * sn + s.p2 * c * c,
        theta: s.theta + theta,
    }
}

/// Smallest and largest single-orbital entropy over all real rotations of
/// the closed-shell pair with weight `p0_sq` on `Ψ0`.
pub fn minmax_entropy(p0_sq: f64) -> Result<(f64, f64)> {
    check_p0_sq(p0_sq)?;
    let p2_sq = 1.0 - p0_sq;
    let s_min = entropy(&[p0_sq, p2_sq]);
    let (p0, p2) = (p0_sq.sqrt(), p2_sq.sqrt());
    let plus = (0.5 * (p0 + p2)).powi(2);
    let minus = (0.5 * (p0 - p2)).powi(2);
    Ok((s_min, entropy(&[plus, minus, minus, plus])))
}

/// `(θ, S(θ))` for the closed-shell pair rotated by each angle of `grid`.
pub fn entropy_vs_theta(p0_sq: f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let s = SingletAmplitudes::from_p0_sq(p0_sq)?;
    Ok(grid
        .iter()
        .map(|&t| (t, rotate_amplitudes(&s, t).orbital_entropy()))
        .collect())
}

/// `n` evenly spaced points on `[a, b]`, both ends included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// The state as a determinant vector over two orbitals.
pub fn two_electron_state(s: &SingletAmplitudes) -> Result<CiVector> {
    let space = DeterminantSpace::full(2, 1, 1)?;
    let mut c = vec![0.0; space.dim()];
    let mut put = |a: usize, b: usize, v: f64| {
        let det = Determinant::from_orbitals(&[a], &[b]);
        c[space.index_of(&det).expect("complete space")] += v;
    };
    put(0, 0, s.p0);
    put(0, 1, FRAC_1_SQRT_2 * s.p1);
    put(1, 0, FRAC_1_SQRT_2 * s.p1);
    put(1, 1, s.p2);
    let r0 = space
        .index_of(&Determinant::from_orbitals(&[0], &[0]))
        .expect("complete space");
    CiVector::new(space, c, r0)
}

/// `(p0², S_min, S_max)` on `points` evenly spaced weights in `[0, 1]`.
pub fn oracle_curve(points: usize) -> Vec<(f64, f64, f64)> {
    linspace(0.0, 1.0, points)
        .into_iter()
        .map(|x| {
            let (lo, hi) = minmax_entropy(x).expect("grid lies in [0, 1]");
            (x, lo, hi)
        })
        .collect()
}

pub fn write_oracle_csv<W: Write>(curve: &[(f64, f64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "# qio-oracle v1")?;
    writeln!(out, "p0_sq,s_min,s_max")?;
    for &(x, lo, hi) in curve {
        writeln!(out, "{},{},{}", format_sig(x), format_sig(lo), format_sig(hi))?;
    }
    Ok(())
}

pub fn write_theta_csv<W: Write>(p0_sq: f64, curve: &[(f64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "# qio-oracle-theta v1 p0_sq={}", format_sig(p0_sq))?;
    writeln!(out, "theta,s_orbital")?;
    for &(t, s) in curve {
        writeln!(out, "{},{}", format_sig(t), format_sig(s))?;
    }
    Ok(())
}
