use std::path::Path;
use std::process::{Command, Output};

use qio_core::basis_file::parse_basis_str;
use qio_core::fcidump::fcidump_to_string;
use qio_core::hamiltonian::make_hubbard;
use qio_core::rdm::parse_rdm_dump_str;

fn qio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qio"))
        .args(["--log-level", "quiet", "--threads", "2"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn hubbard_fcidump(dir: &Path, sites: usize, u: f64) -> String {
    let path = dir.join("hubbard.fcidump");
    let h = make_hubbard(sites, 1.0, u, false, sites).unwrap();
    std::fs::write(&path, fcidump_to_string(&h)).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn zero_macro_iterations_write_one_row() {
    let o = qio(&[
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
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.starts_with("# qio-report v1\nmacro_index,energy_hartree,f_qio_nats,grad_norm,delta_d,active_window\n")
    );
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][0], "0");
    assert_eq!(r[0][4], "");
}

#[test]
fn unreadable_fcidump_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.fcidump");
    let o = qio(&["run", "--fcidump", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("qio: error[io]:"), "{err}");
    assert!(err.contains("absent.fcidump"));
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_fcidump_names_the_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.fcidump");
    std::fs::write(&path, "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 1.0 3 1 1 1\n").unwrap();
    let o = qio(&["report", "--fcidump", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.starts_with("qio: error[index]:") || err.starts_with("qio: error[parse]:"),
        "{err}"
    );
}

#[test]
fn tailored_run_lowers_the_energy_and_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    let o = qio(&[
        "run",
        "--model",
        "hubbard",
        "--sites",
        "6",
        "--u",
        "4",
        "--cas",
        "2,2",
        "--solver",
        "tailored",
        "--seed",
        "7",
        "--ref-fci",
        "--out",
        &p("report.csv"),
        "--basis-out",
        &p("basis.txt"),
        "--amps-out",
        &p("amps.txt"),
        "--dump-rdm",
        &p("rdm.txt"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let r = rows(&std::fs::read_to_string(p("report.csv")).unwrap());
    assert!(r.len() > 2);
    let (first, last) = (num(&r[0][1]), num(&r[r.len() - 1][1]));
    assert!(last < first);
    assert!(last >= -3.092_565_33, "below the FCI energy: {last}");
    assert!(r.iter().all(|row| !row[4].is_empty() && row[5] == "2-3"));

    let basis = parse_basis_str(&std::fs::read_to_string(p("basis.txt")).unwrap()).unwrap();
    assert_eq!(basis.dim(), 6);
    let rdms = parse_rdm_dump_str(&std::fs::read_to_string(p("rdm.txt")).unwrap()).unwrap();
    assert_eq!(rdms.n_orbitals, 6);
    assert!(!std::fs::read_to_string(p("amps.txt")).unwrap().is_empty());
}

#[test]
fn runs_are_deterministic_for_a_seed() {
    let args = [
        "run",
        "--model",
        "hubbard",
        "--sites",
        "4",
        "--u",
        "4",
        "--seed",
        "3",
        "--max-macro",
        "4",
    ];
    let (a, b) = (qio(&args), qio(&args));
    assert_eq!(a.stdout, b.stdout);
    let c = qio(&[
        "run",
        "--model",
        "hubbard",
        "--sites",
        "4",
        "--u",
        "4",
        "--seed",
        "4",
        "--max-macro",
        "4",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn fci_run_keeps_the_energy() {
    let o = qio(&["run", "--model", "hubbard", "--sites", "4", "--u", "4", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    let e0 = num(&r[0][1]);
    assert!(r
        .iter()
        .all(|row| (num(&row[1]) - e0).abs() < 1e-8 && row[5].is_empty()));
    assert!(num(&r[r.len() - 1][2]) < num(&r[0][2]));
}

#[test]
fn oracle_default_grid() {
    let o = qio(&["oracle"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# qio-oracle v1\np0_sq,s_min,s_max\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 101);
    let log4 = 4f64.ln();
    for row in [&r[0], &r[100]] {
        assert_eq!(num(&row[1]), 0.0);
        assert!((num(&row[2]) - log4).abs() < 1e-8);
    }
    let mid = &r[50];
    assert!((num(&mid[0]) - 0.5).abs() < 1e-12);
    assert!((num(&mid[1]) - 2f64.ln()).abs() < 1e-8 && (num(&mid[2]) - 2f64.ln()).abs() < 1e-8);
}

#[test]
fn oracle_theta_curve() {
    let o = qio(&["oracle", "--p0sq", "0.3", "--theta-points", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# qio-oracle-theta v1 p0_sq=3.00000000e-1\ntheta,s_orbital\n"));
    assert_eq!(rows(&text).len(), 5);
    let bad = qio(&["oracle", "--p0sq", "1.5"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8(bad.stderr)
        .unwrap()
        .starts_with("qio: error[domain]:"));
}

#[test]
fn report_partition_sum_rule() {
    let dir = tempfile::tempdir().unwrap();
    let fcidump = hubbard_fcidump(dir.path(), 6, 4.0);
    let o = qio(&["report", "--fcidump", &fcidump, "--partition", "0-2,3-5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value = |name: &str| -> f64 {
        num(text
            .lines()
            .find(|l| l.starts_with(&format!("{name},")))
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap())
    };
    let singles: f64 = text
        .lines()
        .filter(|l| l.starts_with("orbital_entropy,"))
        .map(|l| num(l.rsplit(',').next().unwrap()))
        .sum();
    let total = value("total_cost");
    assert!(total >= 0.0);
    assert!((singles - total).abs() < 1e-7);
    // printed values carry nine significant digits
    let triple = value("i_a_n") + value("i_a") + value("i_n");
    assert!((triple - total).abs() < 1e-8 * total, "{triple} vs {total}");
    assert!((value("partition_sum") - total).abs() < 1e-8 * total);
    // the chain is mirror symmetric
    assert!((value("i_a") - value("i_n")).abs() < 1e-7);
}

#[test]
fn report_rejects_a_partial_partition() {
    let o = qio(&["report", "--model", "hubbard", "--sites", "6", "--partition", "0-2,3-4"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_lists_one_row_per_scheme() {
    let o = qio(&[
        "compare", "--model", "hubbard", "--sites", "6", "--u", "4", "--cas", "2,2", "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# qio-compare v1\nscheme,energy_hartree,f_qio_nats,iterations,delta_d,converged,flag\n"));
    let r = rows(&text);
    let labels: Vec<&str> = r.iter().map(|row| row[0].as_str()).collect();
    assert_eq!(labels, ["identity", "no", "qio"]);
    let energy = |k: usize| num(&r[k][1]);
    assert!(energy(2) <= energy(0) + 1e-9);
    assert!(r.iter().all(|row| !row[4].is_empty()));

    let one = qio(&["compare", "--model", "hubbard", "--sites", "4", "--schemes", "qio"]);
    assert_eq!(rows(&stdout(&one)).len(), 1);
}

#[test]
fn compare_flags_a_scheme_that_does_not_converge() {
    let o = qio(&[
        "compare",
        "--model",
        "hubbard",
        "--sites",
        "6",
        "--u",
        "4",
        "--cas",
        "2,2",
        "--seed",
        "7",
        "--schemes",
        "no",
        "--max-macro",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let r = rows(&stdout(&o));
    assert_eq!(r[0][5], "false");
    assert_eq!(r[0][6], "not-converged");
}

#[test]
fn tailored_solver_needs_an_active_space() {
    let o = qio(&["run", "--model", "hubbard", "--sites", "4", "--solver", "tailored"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_input_is_a_usage_error() {
    let o = qio(&["run"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(qio(&["--help"]).status.code(), Some(0));
}
