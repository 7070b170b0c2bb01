use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qio_core::basis_file::{parse_basis, write_basis};
use qio_core::ci::{fci_ground_state, write_amplitudes, CasSpec, CiVector, DeterminantSpace};
use qio_core::correlation::correlation_report;
use qio_core::fcidump::parse_fcidump;
use qio_core::format_sig;
use qio_core::hamiltonian::{
    core_hamiltonian_basis, make_hubbard, transform_integrals, MolecularHamiltonian, OrbitalBasis, Provenance,
};
use qio_core::oracle::{entropy_vs_theta, linspace, oracle_curve, write_oracle_csv, write_theta_csv};
use qio_core::orbopt::{macro_loop, write_report_csv, MacroOptions, QioReport, RotationGenerator, Scheme, SolverKind};
use qio_core::rdm::{parse_rdm_dump, rdm_distance, rdms_from_ci, rotate_rdms_from_basis, write_rdm_dump, SpinRdms};

use crate::args::{
    CompareArgs, InputArgs, Model, OracleArgs, ReportArgs, RunArgs, SchemeArg, SolverArg, SolverArgs, StartArg,
};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// The run finished but flagged oscillation or non-convergence.
    Warning,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> qio_core::Result<()>) -> Result<()> {
    let mut out = output(Some(path))?;
    f(&mut out).with_context(|| format!("cannot write {}", path.display()))?;
    out.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

pub fn load_hamiltonian(input: &InputArgs) -> Result<MolecularHamiltonian> {
    if let Some(path) = &input.fcidump {
        return parse_fcidump(open(path)?).with_context(|| format!("cannot read FCIDUMP {}", path.display()));
    }
    match input.model {
        Some(Model::Hubbard) => {
            let n = input.electrons.unwrap_or(input.sites);
            Ok(make_hubbard(input.sites, input.t, input.u, input.periodic, n)?)
        }
        None => bail!("give either --fcidump or --model"),
    }
}

fn load_basis(path: &Path) -> Result<OrbitalBasis> {
    parse_basis(open(path)?).with_context(|| format!("cannot read basis {}", path.display()))
}

/// A random rotation `exp(κ)` with generator entries uniform in `±scale`.
pub fn random_rotation(m: usize, seed: u64, scale: f64) -> OrbitalBasis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-scale..=scale));
    OrbitalBasis {
        coefficients: RotationGenerator::from_upper(&upper).exp().transpose(),
        provenance: Provenance::Imported,
    }
}

fn starting_basis(h: &MolecularHamiltonian, s: &SolverArgs) -> Result<OrbitalBasis> {
    if let Some(path) = &s.initial_basis {
        return load_basis(path);
    }
    let base = match s.start {
        StartArg::Core => core_hamiltonian_basis(h),
        StartArg::Identity => OrbitalBasis::identity(h.n_orbitals),
    };
    Ok(match s.seed {
        Some(seed) => base.compose(&random_rotation(h.n_orbitals, seed, s.kick)),
        None => base,
    })
}

fn fci_feasible(h: &MolecularHamiltonian, limit: usize) -> bool {
    DeterminantSpace::full(h.n_orbitals, h.n_alpha(), h.n_beta()).is_ok_and(|s| s.dim() <= limit)
}

fn reference_rdms(h: &MolecularHamiltonian, s: &SolverArgs, opts: &MacroOptions) -> Result<Option<SpinRdms>> {
    if let Some(path) = &s.ref_rdm {
        let r = parse_rdm_dump(open(path)?).with_context(|| format!("cannot read RDM dump {}", path.display()))?;
        return Ok(Some(r));
    }
    if s.ref_fci {
        if !fci_feasible(h, opts.ci.max_determinants) {
            bail!(
                "--ref-fci: the FCI space exceeds {} determinants",
                opts.ci.max_determinants
            );
        }
        let (e, v) = fci_ground_state(h)?;
        info!("FCI reference energy {}", format_sig(e));
        return Ok(Some(rdms_from_ci(&v, true)?));
    }
    Ok(None)
}

fn macro_options(h: &MolecularHamiltonian, s: &SolverArgs, scheme: Scheme) -> Result<MacroOptions> {
    let solver = match (s.solver, s.cas) {
        (Some(SolverArg::Fci), _) | (None, None) => SolverKind::Fci,
        (Some(SolverArg::Tailored), Some((e, o))) | (None, Some((e, o))) => SolverKind::Tailored(CasSpec::new(e, o)),
        (Some(SolverArg::Tailored), None) => bail!("the tailored solver needs --cas"),
    };
    let mut opts = MacroOptions::new(solver, scheme);
    let c = &mut opts.config;
    if let Some(v) = s.alpha {
        c.step_size = v;
    }
    if let Some(v) = s.delta {
        c.level_shift = v;
    }
    if let Some(v) = s.micro {
        c.micro_cycles = v;
    }
    if let Some(v) = s.max_macro {
        c.max_macro = v;
    }
    if let Some(v) = s.energy_tol {
        c.energy_tol = v;
    }
    if let Some(v) = s.cost_tol {
        c.cost_tol = v;
    }
    opts.initial_basis = Some(starting_basis(h, s)?);
    opts.frozen = s.freeze.clone().unwrap_or_default();
    opts.reference_rdms = reference_rdms(h, s, &opts)?;
    Ok(opts)
}

fn scheme_of(s: SchemeArg) -> Scheme {
    match s {
        SchemeArg::Qio => Scheme::Qio,
        SchemeArg::No => Scheme::NaturalOrbitals,
        SchemeArg::Identity => Scheme::Fixed,
    }
}

fn run_scheme(h: &MolecularHamiltonian, opts: &MacroOptions) -> Result<QioReport> {
    let rep = macro_loop(h, opts)?;
    let last = rep.final_record();
    info!(
        "{}: {} macro iterations, E = {}, F = {}",
        opts.scheme.label(),
        last.iteration,
        format_sig(last.energy),
        format_sig(last.cost)
    );
    Ok(rep)
}

pub fn cmd_run(args: &RunArgs) -> Result<Outcome> {
    let h = load_hamiltonian(&args.input)?;
    let opts = macro_options(&h, &args.solver, scheme_of(args.scheme))?;
    let rep = run_scheme(&h, &opts)?;

    let mut out = output(args.out.as_deref())?;
    write_report_csv(&rep, &mut out)?;
    out.flush()?;
    if let Some(p) = &args.basis_out {
        write_file(p, |w| write_basis(&rep.final_basis, w))?;
    }
    if let Some(p) = &args.amps_out {
        let Some(ts) = &rep.final_tailored else {
            bail!("--amps-out needs the tailored solver");
        };
        write_file(p, |w| write_amplitudes(&ts.all_amplitudes(), w))?;
    }
    if let Some(p) = &args.dump_rdm {
        write_file(p, |w| write_rdm_dump(&rep.final_rdms, w))?;
    }

    if rep.oscillation {
        warn!("energies oscillate between macro iterations");
        return Ok(Outcome::Warning);
    }
    if !rep.converged && opts.config.max_macro > 0 {
        warn!("no convergence within {} macro iterations", opts.config.max_macro);
    }
    Ok(Outcome::Ok)
}

pub fn cmd_report(args: &ReportArgs) -> Result<Outcome> {
    let h = load_hamiltonian(&args.input)?;
    let h = match &args.basis {
        Some(p) => transform_integrals(&h, &load_basis(p)?)?,
        None => h,
    };
    if let Some(p) = &args.partition {
        p.check(h.n_orbitals).map_err(anyhow::Error::msg)?;
    }
    let (energy, v) = fci_ground_state(&h)?;
    let rep = correlation_report(&v, args.partition.as_ref().map(|p| p.active.as_slice()))?;

    let mut out = output(args.out.as_deref())?;
    writeln!(out, "# qio-correlation v1 energy_hartree={}", format_sig(energy))?;
    writeln!(out, "row,orbital,value_nats")?;
    for (k, s) in rep.per_orbital_entropy.iter().enumerate() {
        writeln!(out, "orbital_entropy,{k},{}", format_sig(*s))?;
    }
    writeln!(out, "total_cost,,{}", format_sig(rep.total_cost))?;
    if let Some(ci) = rep.ci_entropy {
        writeln!(out, "ci_entropy,,{}", format_sig(ci))?;
    }
    if let Some(t) = &rep.partition_terms {
        writeln!(out, "i_a_n,,{}", format_sig(t.i_an))?;
        writeln!(out, "i_a,,{}", format_sig(t.i_a))?;
        writeln!(out, "i_n,,{}", format_sig(t.i_n))?;
        writeln!(out, "partition_sum,,{}", format_sig(t.total))?;
    }
    out.flush()?;
    if let Some(p) = &args.dump_rdm {
        write_file(p, |w| write_rdm_dump(&rdms_from_ci(&v, true)?, w))?;
    }
    Ok(Outcome::Ok)
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<Outcome> {
    let mut out = output(args.out.as_deref())?;
    match args.p0sq {
        Some(x) => {
            let grid = linspace(0.0, std::f64::consts::PI, args.theta_points);
            write_theta_csv(x, &entropy_vs_theta(x, &grid)?, &mut out)?;
        }
        None => write_oracle_csv(&oracle_curve(args.points), &mut out)?,
    }
    out.flush()?;
    Ok(Outcome::Ok)
}

/// ΔD of the final state against `reference`, both in input coordinates.
fn final_delta_d(rep: &QioReport, reference: &SpinRdms) -> Result<f64> {
    let rdms = match rep.final_rdms.gamma2 {
        Some(_) => rep.final_rdms.clone(),
        None => rdms_from_ci(&rep.final_vector, true)?,
    };
    Ok(rdm_distance(
        &rotate_rdms_from_basis(&rdms, &rep.final_basis)?,
        reference,
    )?)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Outcome> {
    let h = load_hamiltonian(&args.input)?;
    let mut opts = macro_options(&h, &args.solver, Scheme::Fixed)?;
    if opts.reference_rdms.is_none() && fci_feasible(&h, opts.ci.max_determinants) {
        let (_, v): (f64, CiVector) = fci_ground_state(&h)?;
        opts.reference_rdms = Some(rdms_from_ci(&v, true)?);
    }

    let mut out = output(args.out.as_deref())?;
    writeln!(out, "# qio-compare v1")?;
    writeln!(
        out,
        "scheme,energy_hartree,f_qio_nats,iterations,delta_d,converged,flag"
    )?;
    let mut outcome = Outcome::Ok;
    for &s in &args.schemes {
        opts.scheme = scheme_of(s);
        let rep = run_scheme(&h, &opts)?;
        let last = rep.final_record();
        let delta_d = match &opts.reference_rdms {
            Some(r) => format_sig(final_delta_d(&rep, r)?),
            None => String::new(),
        };
        let flag = if rep.oscillation {
            "oscillation"
        } else if !rep.converged {
            "not-converged"
        } else {
            ""
        };
        if !flag.is_empty() {
            warn!("{} scheme: {flag}", opts.scheme.label());
            outcome = Outcome::Warning;
        }
        writeln!(
            out,
            "{},{},{},{},{delta_d},{},{flag}",
            opts.scheme.label(),
            format_sig(last.energy),
            format_sig(last.cost),
            last.iteration,
            rep.converged
        )?;
    }
    out.flush()?;
    Ok(outcome)
}
