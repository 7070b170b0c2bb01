//! Macro cycles: re-solve the state in the current orbitals, then rotate.

use std::io::Write;
use std::ops::Range;

use log::{debug, info, warn};
use nalgebra::DMatrix;

use super::derivatives::qio_derivatives;
use super::micro::{micro_cycle_minimize_masked, MicroResult, OptimizerConfig};
use super::natural::{natural_orbitals_masked, sort_by_occupation};
use crate::ci::amplitudes::{extract_cas_amplitudes, C0_THRESHOLD};
use crate::ci::{
    solve_casci_in_place, solve_fci_with, solve_tailored_in_place, CasSpec, CiSolverOptions, CiVector,
    DeterminantSpace, TailoredState,
};
use crate::error::{Error, Result};
use crate::format_sig;
use crate::hamiltonian::{transform_integrals, MolecularHamiltonian, OrbitalBasis, Provenance};
use crate::rdm::{rdm_distance, rdms_from_ci, rotate_rdms, rotate_rdms_from_basis, SpinRdms};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Fci,
    /// CASCI in the window, then variational external singles and doubles.
    Tailored(CasSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Minimize the total orbital correlation in micro cycles.
    Qio,
    /// Replace the orbitals by the natural orbitals of each state.
    NaturalOrbitals,
    /// Never change the orbitals.
    Fixed,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Qio => "qio",
            Scheme::NaturalOrbitals => "no",
            Scheme::Fixed => "identity",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MacroOptions {
    pub config: OptimizerConfig,
    pub solver: SolverKind,
    pub scheme: Scheme,
    /// Starting orbitals in the coordinates of the input Hamiltonian;
    /// the identity when absent.
    pub initial_basis: Option<OrbitalBasis>,
    /// RDMs in the input orbitals to measure ΔD against.
    pub reference_rdms: Option<SpinRdms>,
    /// Orbitals of the starting basis excluded from rotation; the flags
    /// follow their orbitals through every re-sort.
    pub frozen: Vec<usize>,
    pub ci: CiSolverOptions,
}

impl MacroOptions {
    pub fn new(solver: SolverKind, scheme: Scheme) -> Self {
        Self {
            config: OptimizerConfig::default(),
            solver,
            scheme,
            initial_basis: None,
            reference_rdms: None,
            frozen: Vec::new(),
            ci: CiSolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroRecord {
    pub iteration: usize,
    /// Hartree, including the core energy.
    pub energy: f64,
    /// Total orbital correlation of the state, nats.
    pub cost: f64,
    /// Frobenius norm of the upper triangle of the gradient.
    pub gradient_norm: f64,
    pub provenance: Provenance,
    pub active_window: Option<Range<usize>>,
    /// `tr(P_prev P) / n_active` for the projectors onto consecutive active
    /// spaces, in input coordinates; 1 when the window kept its orbitals.
    pub window_overlap: Option<f64>,
    pub casci_energy: Option<f64>,
    pub delta_d: Option<f64>,
    /// Cost reduction achieved by the micro cycles that followed this record.
    pub micro_decrease: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct QioReport {
    pub scheme: Scheme,
    pub records: Vec<MacroRecord>,
    /// Orbitals of the last record.
    pub final_basis: OrbitalBasis,
    /// RDMs of the last state, in `final_basis`.
    pub final_rdms: SpinRdms,
    pub final_vector: CiVector,
    pub final_tailored: Option<TailoredState>,
    pub converged: bool,
    /// Energies alternated beyond tolerance over the last five iterations.
    pub oscillation: bool,
}

impl QioReport {
    pub fn final_record(&self) -> &MacroRecord {
        self.records.last().expect("a report always holds the initial record")
    }
}

struct Solved {
    energy: f64,
    vector: CiVector,
    tailored: Option<TailoredState>,
    casci_energy: Option<f64>,
    window: Option<Range<usize>>,
}

fn solve(h: &MolecularHamiltonian, basis: &OrbitalBasis, opts: &MacroOptions) -> Result<Solved> {
    let ht = transform_integrals(h, basis)?;
    match opts.solver {
        SolverKind::Fci => {
            let space = DeterminantSpace::full(ht.n_orbitals, ht.n_alpha(), ht.n_beta())?;
            let (mut e, mut v) = solve_fci_with(&ht, &space, 1, &opts.ci)?;
            Ok(Solved {
                energy: e.remove(0),
                vector: v.remove(0),
                tailored: None,
                casci_energy: None,
                window: None,
            })
        }
        SolverKind::Tailored(cas) => {
            let casci = solve_casci_in_place(&ht, cas, &opts.ci)?;
            let amps = extract_cas_amplitudes(&casci.vector, C0_THRESHOLD)?;
            let sol = solve_tailored_in_place(&ht, &amps, opts.ci.max_determinants)?;
            Ok(Solved {
                energy: sol.energy,
                vector: sol.vector,
                tailored: Some(sol.state),
                casci_energy: Some(casci.energy),
                window: Some(casci.window),
            })
        }
    }
}

fn window_projector(basis: &OrbitalBasis, window: &Range<usize>) -> DMatrix<f64> {
    let c = basis.coefficients.columns(window.start, window.len());
    c * c.transpose()
}

fn oscillating(records: &[MacroRecord], tol: f64) -> bool {
    if records.len() < 6 {
        return false;
    }
    let e: Vec<f64> = records[records.len() - 6..].iter().map(|r| r.energy).collect();
    let d: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
    d.iter().all(|x| x.abs() > tol) && d.windows(2).all(|w| w[0] * w[1] < 0.0)
}

/// Alternates solving for the state and optimizing the orbitals.
///
/// Each iteration transforms the integrals into the current orbitals, solves,
/// builds RDMs and records energy, cost and gradient. The loop stops when
/// both the energy and the cost change by less than their tolerances, or
/// after `max_macro` updates. Otherwise the orbitals are updated by the
/// scheme and re-sorted by occupation, which also re-selects the reference
/// determinant and active window.
///
/// A reference weight below the CAS threshold after an update undoes half
/// of the last micro rotation, up to three times.
pub fn macro_loop(h: &MolecularHamiltonian, opts: &MacroOptions) -> Result<QioReport> {
    opts.config.validate()?;
    let m = h.n_orbitals;
    let mut basis = opts.initial_basis.clone().unwrap_or_else(|| OrbitalBasis::identity(m));
    if basis.dim() != m {
        return Err(Error::Dimension(format!(
            "initial basis has {} orbitals, Hamiltonian has {m}",
            basis.dim()
        )));
    }
    let mut frozen = vec![false; m];
    for &f in &opts.frozen {
        *frozen
            .get_mut(f)
            .ok_or_else(|| Error::Domain(format!("frozen orbital {f} outside 0..{m}")))? = true;
    }
    let at = |iteration: usize| {
        move |e: Error| Error::MacroIteration {
            iteration,
            source: Box::new(e),
        }
    };

    let mut records: Vec<MacroRecord> = Vec::new();
    let mut prev_projector: Option<DMatrix<f64>> = None;
    let mut last_micro: Option<(OrbitalBasis, Vec<bool>, SpinRdms, MicroResult)> = None;
    let mut converged = false;
    let mut oscillation = false;

    let mut iteration = 0;
    loop {
        let mut solved = solve(h, &basis, opts);
        let mut retreats = 0;
        while let Err(Error::ReferenceDegeneracy { c0, .. }) = &solved {
            let Some((prev_basis, prev_frozen, prev_rdms, micro)) = &last_micro else {
                break;
            };
            if retreats == 3 {
                break;
            }
            retreats += 1;
            warn!(
                "iteration {iteration}: reference weight {c0:.3e}, retreating half of the last rotation ({retreats}/3)"
            );
            let step = micro.replay_scaled(0.5f64.powi(retreats));
            let r = rotate_rdms(prev_rdms, &step.rotation())?;
            let (sorted, perm) = sort_by_occupation(&prev_basis.compose(&step), &r);
            basis = sorted;
            frozen = perm.iter().map(|&p| prev_frozen[p]).collect();
            solved = solve(h, &basis, opts);
        }
        let solved = solved.map_err(at(iteration))?;
        let rdms = rdms_from_ci(&solved.vector, true).map_err(at(iteration))?;
        let d = qio_derivatives(&rdms).map_err(at(iteration))?;
        let gradient_norm = d.gradient.upper_triangle().norm();
        let delta_d = match &opts.reference_rdms {
            Some(reference) => {
                let back = rotate_rdms_from_basis(&rdms, &basis).map_err(at(iteration))?;
                Some(rdm_distance(&back, reference).map_err(at(iteration))?)
            }
            None => None,
        };
        let window_overlap = solved.window.as_ref().map(|w| {
            let p = window_projector(&basis, w);
            let overlap = prev_projector
                .as_ref()
                .map_or(1.0, |q| (q * &p).trace() / w.len().max(1) as f64);
            prev_projector = Some(p);
            overlap
        });
        if let Some(o) = window_overlap {
            if o < 1.0 - 1e-6 {
                info!(
                    "iteration {iteration}: active space changed, overlap with previous window {}",
                    format_sig(o)
                );
            }
        }
        records.push(MacroRecord {
            iteration,
            energy: solved.energy,
            cost: d.cost,
            gradient_norm,
            provenance: basis.provenance,
            active_window: solved.window.clone(),
            window_overlap,
            casci_energy: solved.casci_energy,
            delta_d,
            micro_decrease: None,
        });
        info!(
            "iteration {iteration}: E = {} F = {} |G| = {}",
            format_sig(solved.energy),
            format_sig(d.cost),
            format_sig(gradient_norm)
        );

        if oscillating(&records, opts.config.energy_tol) && !oscillation {
            warn!("energies oscillate between macro iterations");
            oscillation = true;
        }
        let n = records.len();
        let settled = n >= 2
            && (records[n - 1].energy - records[n - 2].energy).abs() < opts.config.energy_tol
            && (records[n - 1].cost - records[n - 2].cost).abs() < opts.config.cost_tol;
        if opts.scheme == Scheme::Fixed || settled {
            converged = true;
        }
        if converged || iteration >= opts.config.max_macro {
            return Ok(QioReport {
                scheme: opts.scheme,
                records,
                final_basis: basis,
                final_rdms: rdms,
                final_vector: solved.vector,
                final_tailored: solved.tailored,
                converged,
                oscillation,
            });
        }

        let (step_basis, rotated) = match opts.scheme {
            Scheme::Qio => {
                let micro = micro_cycle_minimize_masked(&rdms, &opts.config, &frozen).map_err(at(iteration))?;
                debug!(
                    "iteration {iteration}: {} micro steps, cost {} -> {}",
                    micro.steps.len(),
                    format_sig(micro.cost_trace[0]),
                    format_sig(*micro.cost_trace.last().unwrap())
                );
                records.last_mut().unwrap().micro_decrease = Some(micro.cost_decrease());
                let step = micro.basis();
                let rotated = micro.rdms.clone();
                last_micro = Some((basis.clone(), frozen.clone(), rdms.clone(), micro));
                (step, rotated)
            }
            Scheme::NaturalOrbitals => {
                let step = natural_orbitals_masked(&rdms, &frozen);
                let rotated = rotate_rdms(&rdms, &step.rotation()).map_err(at(iteration))?;
                last_micro = None;
                (step, rotated)
            }
            Scheme::Fixed => unreachable!("fixed scheme converges at once"),
        };
        let (sorted, perm) = sort_by_occupation(&basis.compose(&step_basis), &rotated);
        basis = sorted;
        frozen = perm.iter().map(|&p| frozen[p]).collect();
        iteration += 1;
    }
}

/// Writes one CSV row per record after a schema comment line.
pub fn write_report_csv<W: Write>(report: &QioReport, mut out: W) -> Result<()> {
    writeln!(out, "# qio-report v1")?;
    writeln!(
        out,
        "macro_index,energy_hartree,f_qio_nats,grad_norm,delta_d,active_window"
    )?;
    for r in &report.records {
        let window = r
            .active_window
            .as_ref()
            .map(|w| format!("{}-{}", w.start, w.end.saturating_sub(1)))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration,
            format_sig(r.energy),
            format_sig(r.cost),
            format_sig(r.gradient_norm),
            r.delta_d.map(format_sig).unwrap_or_default(),
            window
        )?;
    }
    Ok(())
}
