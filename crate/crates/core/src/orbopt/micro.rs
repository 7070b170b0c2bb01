//! Micro cycles: orbital rotations at a fixed state.

use nalgebra::DMatrix;

use super::derivatives::qio_derivatives;
use super::generator::RotationGenerator;
use crate::correlation::total_orbital_correlation;
use crate::error::{Error, Result};
use crate::hamiltonian::{OrbitalBasis, Provenance};
use crate::rdm::{rotate_rdms, SpinRdms};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Scale `α` of the quasi-Newton step.
    pub step_size: f64,
    /// Minimum effective curvature `δ` after the level shift.
    pub level_shift: f64,
    pub micro_cycles: usize,
    pub max_macro: usize,
    /// Hartree.
    pub energy_tol: f64,
    /// Nats, absolute.
    pub cost_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 0.2,
            level_shift: 1e-2,
            micro_cycles: 25,
            max_macro: 50,
            energy_tol: 1e-6,
            cost_tol: 1e-7,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("step size", self.step_size),
            ("level shift", self.level_shift),
            ("energy tolerance", self.energy_tol),
            ("cost tolerance", self.cost_tol),
        ] {
            if !(v.is_finite() && v > f64::EPSILON) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MicroResult {
    /// Accumulated rotation; row `k` is new orbital `k` in the input orbitals.
    pub rotation: DMatrix<f64>,
    /// The input RDMs expressed in the rotated orbitals.
    pub rdms: SpinRdms,
    /// Cost before the first step and after every accepted step.
    pub cost_trace: Vec<f64>,
    /// Generators of the accepted steps, in order.
    pub steps: Vec<RotationGenerator>,
    /// True when the cycle stopped on the cost tolerance or at a stationary point.
    pub converged: bool,
}

impl MicroResult {
    /// The rotation as a basis relative to the input orbitals.
    pub fn basis(&self) -> OrbitalBasis {
        OrbitalBasis {
            coefficients: self.rotation.transpose(),
            provenance: Provenance::Qio,
        }
    }

    pub fn cost_decrease(&self) -> f64 {
        self.cost_trace[0] - self.cost_trace[self.cost_trace.len() - 1]
    }

    /// The same steps replayed with every generator scaled by `s`.
    pub fn replay_scaled(&self, s: f64) -> OrbitalBasis {
        let n = self.rotation.nrows();
        let mut u = DMatrix::<f64>::identity(n, n);
        for g in &self.steps {
            u = g.scaled(s).exp() * u;
        }
        OrbitalBasis {
            coefficients: u.transpose(),
            provenance: Provenance::Qio,
        }
    }
}

const MAX_HALVINGS: usize = 10;

struct Trial {
    generator: RotationGenerator,
    rotation: DMatrix<f64>,
    rdms: SpinRdms,
    cost: f64,
}

/// Tries `gen`, halving it up to [`MAX_HALVINGS`] times until the cost drops.
fn line_search(r: &SpinRdms, cost: f64, gen: &RotationGenerator) -> Result<Option<Trial>> {
    let mut g = gen.clone();
    for _ in 0..=MAX_HALVINGS {
        let u = g.exp();
        let rdms = rotate_rdms(r, &u)?;
        // a trial that breaks positivity is simply too long
        if let Ok(c) = total_orbital_correlation(&rdms) {
            if c < cost {
                return Ok(Some(Trial {
                    generator: g,
                    rotation: u,
                    rdms,
                    cost: c,
                }));
            }
        }
        g = g.scaled(0.5);
    }
    Ok(None)
}

/// Minimizes the total orbital correlation of fixed RDMs over orbital
/// rotations. See [`micro_cycle_minimize_masked`].
pub fn micro_cycle_minimize(r: &SpinRdms, cfg: &OptimizerConfig) -> Result<MicroResult> {
    micro_cycle_minimize_masked(r, cfg, &vec![false; r.n_orbitals])
}

/// Each cycle re-centers at the current orbitals and proposes
/// `x_ij = −α G_ij / H̃_ij` with the shifted curvature
/// `H̃ = H − min(min H, 0) + δ`, so every `H̃_ij ≥ δ` and the step is a
/// descent direction. Steps that do not lower the cost are halved. When the
/// step fails or gains less than the cost tolerance and some pair has
/// negative curvature, a rotation of `±α` along the most negative pair is
/// tried as well, so saddle points and maxima are left rather than accepted.
/// Orbitals flagged in `frozen` are never rotated.
pub fn micro_cycle_minimize_masked(r: &SpinRdms, cfg: &OptimizerConfig, frozen: &[bool]) -> Result<MicroResult> {
    cfg.validate()?;
    let m = r.n_orbitals;
    if frozen.len() != m {
        return Err(Error::Dimension(format!(
            "{} freeze flags for {m} orbitals",
            frozen.len()
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .filter(|&(i, j)| !frozen[i] && !frozen[j])
        .collect();

    let mut cur = r.clone();
    let mut cost = total_orbital_correlation(&cur)?;
    let mut rotation = DMatrix::<f64>::identity(m, m);
    let mut cost_trace = vec![cost];
    let mut steps = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.micro_cycles {
        let d = qio_derivatives(&cur)?;
        let h_min = pairs
            .iter()
            .map(|&(i, j)| d.hessian[(i, j)])
            .fold(f64::INFINITY, f64::min);
        let shift = h_min.min(0.0);
        let mut upper = DMatrix::zeros(m, m);
        for &(i, j) in &pairs {
            let h_eff = d.hessian[(i, j)] - shift + cfg.level_shift;
            upper[(i, j)] = -cfg.step_size * d.gradient[(i, j)] / h_eff;
        }
        if upper.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite micro-cycle step".into()));
        }
        let step = RotationGenerator::from_upper(&upper);

        let mut trial = if step.norm() > 0.0 {
            line_search(&cur, cost, &step)?
        } else {
            None
        };
        let small = trial.as_ref().is_none_or(|t| cost - t.cost < cfg.cost_tol);
        if small {
            let mut negative: Vec<(usize, usize)> = pairs
                .iter()
                .copied()
                .filter(|&(i, j)| d.hessian[(i, j)] < 0.0 && !d.indeterminate.contains(&(i, j)))
                .collect();
            negative.sort_by(|a, b| d.hessian[*a].total_cmp(&d.hessian[*b]));
            'escape: for (i, j) in negative {
                for sign in [1.0, -1.0] {
                    let g = RotationGenerator::jacobi(m, i, j, sign * cfg.step_size);
                    if let Some(t) = line_search(&cur, cost, &g)? {
                        if trial.as_ref().is_none_or(|best| t.cost < best.cost) {
                            trial = Some(t);
                        }
                        break 'escape;
                    }
                }
            }
        }
        let Some(t) = trial else {
            converged = true;
            break;
        };
        let decrease = cost - t.cost;
        cur = t.rdms;
        cost = t.cost;
        rotation = t.rotation * rotation;
        cost_trace.push(cost);
        steps.push(t.generator);
        if decrease < cfg.cost_tol {
            converged = true;
            break;
        }
    }
    Ok(MicroResult {
        rotation,
        rdms: cur,
        cost_trace,
        steps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::{fci_ground_state, CiVector, Determinant};
    use crate::hamiltonian::make_hubbard;
    use crate::orbopt::natural_orbitals;
    use crate::rdm::{rdms_from_ci, rotate_rdms_to_basis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(m: usize, seed: u64, scale: f64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let upper = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-scale..scale));
        RotationGenerator::from_upper(&upper).exp()
    }

    #[test]
    fn single_determinant_is_left_alone() {
        let v = CiVector::single_determinant(4, Determinant::from_orbitals(&[0, 1], &[0, 2])).unwrap();
        let r = rdms_from_ci(&v, true).unwrap();
        let res = micro_cycle_minimize(&r, &OptimizerConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.cost_trace.len(), 1);
        assert_eq!(res.rotation, DMatrix::identity(4, 4));
    }

    #[test]
    fn cost_decreases_monotonically_and_replays() {
        let h = make_hubbard(4, 1.0, 4.0, false, 4).unwrap();
        let (_, v) = fci_ground_state(&h).unwrap();
        let r = rotate_rdms(&rdms_from_ci(&v, true).unwrap(), &random_rotation(4, 11, 0.5)).unwrap();
        let res = micro_cycle_minimize(&r, &OptimizerConfig::default()).unwrap();
        assert!(res.cost_trace.windows(2).all(|w| w[1] < w[0]));
        assert!(res.cost_decrease() > 0.0);
        let replay = res.replay_scaled(1.0);
        assert!((replay.coefficients - res.basis().coefficients).amax() < 1e-12);
        let again = rotate_rdms(&r, &res.rotation).unwrap();
        assert!((total_orbital_correlation(&again).unwrap() - res.cost_trace.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn frozen_orbitals_do_not_rotate() {
        let h = make_hubbard(4, 1.0, 2.0, true, 4).unwrap();
        let (_, v) = fci_ground_state(&h).unwrap();
        let r = rotate_rdms(&rdms_from_ci(&v, true).unwrap(), &random_rotation(4, 3, 0.4)).unwrap();
        let frozen = [false, true, false, false];
        let res = micro_cycle_minimize_masked(&r, &OptimizerConfig::default(), &frozen).unwrap();
        assert!(res.cost_decrease() > 0.0);
        for k in 0..4 {
            let expected = if k == 1 { 1.0 } else { 0.0 };
            assert_eq!(res.rotation[(1, k)], expected);
            assert_eq!(res.rotation[(k, 1)], expected);
        }
        assert!(micro_cycle_minimize_masked(&r, &OptimizerConfig::default(), &[false]).is_err());
    }

    #[test]
    fn descent_from_natural_orbitals_improves_on_them() {
        let cfg = OptimizerConfig {
            micro_cycles: 400,
            cost_tol: 1e-12,
            ..OptimizerConfig::default()
        };
        let mut strict = 0;
        for u in [2.0, 4.0, 8.0] {
            let h = make_hubbard(4, 1.0, u, false, 4).unwrap();
            let (_, v) = fci_ground_state(&h).unwrap();
            let r = rdms_from_ci(&v, true).unwrap();
            let no = rotate_rdms_to_basis(&r, &natural_orbitals(&r)).unwrap();
            let f_no = total_orbital_correlation(&no).unwrap();
            let res = micro_cycle_minimize(&no, &cfg).unwrap();
            let f_min = *res.cost_trace.last().unwrap();
            assert!(f_min <= f_no + 1e-6, "u={u}: {f_min} vs NO {f_no}");
            if f_min < f_no - 1e-6 {
                strict += 1;
            }
        }
        assert!(strict > 0);
    }

    #[test]
    fn random_starts_can_stall_in_a_local_minimum() {
        // from near the site basis at u=4 the descent settles well above the
        // value it reaches from the natural orbitals
        let cfg = OptimizerConfig {
            micro_cycles: 400,
            cost_tol: 1e-12,
            ..OptimizerConfig::default()
        };
        let h = make_hubbard(4, 1.0, 4.0, false, 4).unwrap();
        let (_, v) = fci_ground_state(&h).unwrap();
        let r = rdms_from_ci(&v, true).unwrap();
        let start = rotate_rdms(&r, &random_rotation(4, 2, 0.3)).unwrap();
        let local = micro_cycle_minimize(&start, &cfg).unwrap();
        assert!(local.converged);
        assert!(qio_derivatives(&local.rdms).unwrap().gradient.norm() < 1e-4);
        let no = rotate_rdms_to_basis(&r, &natural_orbitals(&r)).unwrap();
        let global = micro_cycle_minimize(&no, &cfg).unwrap();
        assert!(local.cost_trace.last().unwrap() > &(global.cost_trace.last().unwrap() + 0.5));
    }

    #[test]
    fn invalid_config() {
        let cfg = OptimizerConfig {
            step_size: 0.0,
            ..OptimizerConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = OptimizerConfig {
            cost_tol: f64::NAN,
            ..OptimizerConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
