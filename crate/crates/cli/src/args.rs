use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qio", version, about = "Quantum information-assisted orbital optimization")]
pub struct Cli {
    /// Worker threads for the numerical kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    pub log_level: LogLevel,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Quiet,
    Info,
    Debug,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize the orbitals and write the per-iteration report.
    Run(RunArgs),
    /// Orbital entropies and the sum-rule split of the FCI ground state.
    Report(ReportArgs),
    /// Closed-form entropy bounds of the two-electron singlet.
    Oracle(OracleArgs),
    /// Run several orbital schemes on the same system, one row each.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Hubbard,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Integrals in FCIDUMP format.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub fcidump: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub model: Option<Model>,

    #[arg(long, default_value_t = 6, requires = "model")]
    pub sites: usize,

    #[arg(long, default_value_t = 1.0, requires = "model")]
    pub t: f64,

    #[arg(long, default_value_t = 4.0, requires = "model")]
    pub u: f64,

    #[arg(long, requires = "model")]
    pub periodic: bool,

    /// Electron count of the model; half filling when absent.
    #[arg(long, requires = "model")]
    pub electrons: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Fci,
    Tailored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Qio,
    No,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    /// Eigenvectors of the one-body integrals.
    Core,
    /// The orbitals of the input integrals.
    Identity,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Active space as `electrons,orbitals`.
    #[arg(long, value_parser = parse_cas)]
    pub cas: Option<(usize, usize)>,

    /// Defaults to `tailored` when `--cas` is given and `fci` otherwise.
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,

    /// Quasi-Newton step scale.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Level shift of the diagonal Hessian.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Micro cycles per macro iteration.
    #[arg(long)]
    pub micro: Option<usize>,

    #[arg(long)]
    pub max_macro: Option<usize>,

    /// Energy tolerance of the macro loop, hartree.
    #[arg(long)]
    pub energy_tol: Option<f64>,

    /// Cost tolerance, nats.
    #[arg(long)]
    pub cost_tol: Option<f64>,

    #[arg(long, value_enum, default_value_t = StartArg::Core)]
    pub start: StartArg,

    /// Apply a random rotation drawn from this seed to the starting orbitals.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Largest generator entry of the random rotation.
    #[arg(long, default_value_t = 0.3)]
    pub kick: f64,

    /// Starting orbitals from a basis file; replaces `--start` and `--seed`.
    #[arg(long, conflicts_with = "seed")]
    pub initial_basis: Option<PathBuf>,

    /// Orbitals of the starting basis kept fixed, e.g. `0,3-4`.
    #[arg(long, value_parser = parse_index_list)]
    pub freeze: Option<Vec<usize>>,

    /// Reference RDMs in the input orbitals for ΔD.
    #[arg(long, conflicts_with = "ref_fci")]
    pub ref_rdm: Option<PathBuf>,

    /// Use the FCI ground state as the ΔD reference.
    #[arg(long)]
    pub ref_fci: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    #[arg(long, value_enum, default_value_t = SchemeArg::Qio)]
    pub scheme: SchemeArg,

    /// Report CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Final orbitals as a basis file.
    #[arg(long)]
    pub basis_out: Option<PathBuf>,

    /// Final tailored amplitudes.
    #[arg(long)]
    pub amps_out: Option<PathBuf>,

    /// Final RDMs, in the final orbitals.
    #[arg(long)]
    pub dump_rdm: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Orbitals to express the state in; the input orbitals when absent.
    #[arg(long)]
    pub basis: Option<PathBuf>,

    /// Two blocks covering every orbital, e.g. `0-2,3-5`.
    #[arg(long, value_parser = parse_partition)]
    pub partition: Option<Partition>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub dump_rdm: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Grid points over p0² in [0, 1].
    #[arg(long, default_value_t = 101)]
    pub points: usize,

    /// Write S(θ) for this weight instead of the bounds curve.
    #[arg(long)]
    pub p0sq: Option<f64>,

    /// Grid points over θ in [0, π].
    #[arg(long, default_value_t = 181)]
    pub theta_points: usize,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SchemeArg::Identity, SchemeArg::No, SchemeArg::Qio])]
    pub schemes: Vec<SchemeArg>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Two orbital blocks `A | N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub active: Vec<usize>,
    pub rest: Vec<usize>,
}

impl Partition {
    /// Checks that the blocks are disjoint and cover `0..m`.
    pub fn check(&self, m: usize) -> Result<(), String> {
        let mut all: Vec<usize> = self.active.iter().chain(&self.rest).copied().collect();
        all.sort_unstable();
        if all != (0..m).collect::<Vec<_>>() {
            return Err(format!("partition must split orbitals 0..{m} into two disjoint blocks"));
        }
        Ok(())
    }
}

fn parse_cas(s: &str) -> Result<(usize, usize), String> {
    let (e, o) = s.split_once(',').ok_or("expected `electrons,orbitals`")?;
    let e = e.trim().parse().map_err(|_| format!("bad electron count `{e}`"))?;
    let o = o.trim().parse().map_err(|_| format!("bad orbital count `{o}`"))?;
    Ok((e, o))
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad index `{t}`"));
    match s.split_once('-') {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty range `{s}`"));
            }
            Ok(a..=b)
        }
        None => {
            let a = num(s)?;
            Ok(a..=a)
        }
    }
}

pub fn parse_index_list(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        out.extend(parse_range(part)?);
    }
    Ok(out)
}

pub fn parse_partition(s: &str) -> Result<Partition, String> {
    let blocks: Vec<&str> = s.split(',').collect();
    if blocks.len() != 2 {
        return Err("expected two blocks such as `0-2,3-5`".into());
    }
    Ok(Partition {
        active: parse_range(blocks[0])?.collect(),
        rest: parse_range(blocks[1])?.collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn index_lists_and_partitions() {
        assert_eq!(parse_index_list("0,3-5").unwrap(), vec![0, 3, 4, 5]);
        assert!(parse_index_list("4-2").is_err());
        let p = parse_partition("0-2,3-5").unwrap();
        assert_eq!(p.active, vec![0, 1, 2]);
        assert!(p.check(6).is_ok());
        assert!(p.check(7).is_err());
        assert!(parse_partition("0-2").is_err());
        assert_eq!(parse_cas("2,2").unwrap(), (2, 2));
        assert!(parse_cas("2").is_err());
    }

    #[test]
    fn run_flags_parse() {
        let cli = Cli::try_parse_from([
            "qio",
            "run",
            "--model",
            "hubbard",
            "--sites",
            "4",
            "--u",
            "2",
            "--cas",
            "2,2",
            "--max-macro",
            "0",
        ])
        .unwrap();
        let Command::Run(run) = cli.command else {
            panic!("expected run")
        };
        assert_eq!(run.input.sites, 4);
        assert_eq!(run.solver.cas, Some((2, 2)));
        assert_eq!(run.solver.max_macro, Some(0));
        assert!(Cli::try_parse_from(["qio", "run"]).is_err());
        assert!(Cli::try_parse_from(["qio", "run", "--fcidump", "x", "--model", "hubbard"]).is_err());
    }
}
