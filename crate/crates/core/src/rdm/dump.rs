//! Plain-text RDM dump.
//!
//! ```text
//! QIO-RDM 1 <M> <n_alpha> <n_beta> <has_gamma2: 0|1>
//! GAMMA_AA
//! <M rows of M values>
//! GAMMA_BB
//! <M rows of M values>
//! PAIR_DIAG
//! <M values>
//! GAMMA2_AA <count>          (only when has_gamma2 = 1)
//! <count records: p q r s value>
//! GAMMA2_BB <count>
//! ...
//! GAMMA2_AB <count>
//! ...
//! END
//! ```
//!
//! Indices are 0-based; 2-RDM records list the nonzero elements of each spin
//! block in the conventions of the parent module. Lines starting with `#`
//! and blank lines are ignored.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::{SpinGamma2, SpinRdms};
use crate::error::{Error, Result};
use crate::hamiltonian::MAX_ORBITALS;
use crate::tensor::Tensor4;

/// Largest orbital count whose dense 2-RDM blocks a dump may declare.
const MAX_DUMP_GAMMA2_ORBITALS: usize = 40;

pub fn write_rdm_dump<W: Write>(r: &SpinRdms, mut out: W) -> Result<()> {
    let m = r.n_orbitals;
    writeln!(
        out,
        "QIO-RDM 1 {m} {} {} {}",
        r.n_alpha,
        r.n_beta,
        u8::from(r.gamma2.is_some())
    )?;
    for (label, g) in [("GAMMA_AA", &r.gamma_aa), ("GAMMA_BB", &r.gamma_bb)] {
        writeln!(out, "{label}")?;
        for p in 0..m {
            let row: Vec<String> = (0..m).map(|q| format!("{:.17e}", g[(p, q)])).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
    }
    writeln!(out, "PAIR_DIAG")?;
    let row: Vec<String> = r.pair_diag.iter().map(|x| format!("{x:.17e}")).collect();
    writeln!(out, "{}", row.join(" "))?;
    if let Some(g2) = &r.gamma2 {
        for (label, t) in [("GAMMA2_AA", &g2.aa), ("GAMMA2_BB", &g2.bb), ("GAMMA2_AB", &g2.ab)] {
            let mut records = Vec::new();
            for p in 0..m {
                for q in 0..m {
                    for x in 0..m {
                        for y in 0..m {
                            let v = t.get(p, q, x, y);
                            if v != 0.0 {
                                records.push(format!("{p} {q} {x} {y} {v:.17e}"));
                            }
                        }
                    }
                }
            }
            writeln!(out, "{label} {}", records.len())?;
            for rec in records {
                writeln!(out, "{rec}")?;
            }
        }
    }
    writeln!(out, "END")?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next non-blank, non-comment line with its number.
    fn next(&mut self) -> Result<(usize, String)> {
        loop {
            let Some(text) = self.inner.next() else {
                return Err(Error::Parse {
                    line: self.line + 1,
                    msg: "unexpected end of input".into(),
                });
            };
            self.line += 1;
            let text = text?;
            let t = text.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok((self.line, t.to_string()));
            }
        }
    }

    fn expect(&mut self, label: &str) -> Result<Vec<String>> {
        let (line, text) = self.next()?;
        let mut tokens = text.split_whitespace();
        if tokens.next() != Some(label) {
            return Err(Error::Parse {
                line,
                msg: format!("expected section {label}"),
            });
        }
        Ok(tokens.map(str::to_string).collect())
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        let (line, text) = self.next()?;
        let out = text
            .split_whitespace()
            .map(|t| number(t, line))
            .collect::<Result<Vec<_>>>()?;
        if out.len() != n {
            return Err(Error::Parse {
                line,
                msg: format!("expected {n} values, found {}", out.len()),
            });
        }
        Ok(out)
    }
}

fn number(t: &str, line: usize) -> Result<f64> {
    let v: f64 = t.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid number {t:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Value { line });
    }
    Ok(v)
}

fn count(t: Option<&String>, line: usize, what: &str) -> Result<usize> {
    t.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing or invalid {what}"),
    })
}

pub fn parse_rdm_dump<R: BufRead>(reader: R) -> Result<SpinRdms> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    let header = lines.expect("QIO-RDM")?;
    let line = lines.line;
    if header.len() != 5 || header[0] != "1" {
        return Err(Error::Parse {
            line,
            msg: "header must read QIO-RDM 1 M n_alpha n_beta has_gamma2".into(),
        });
    }
    let m = count(header.get(1), line, "orbital count")?;
    let n_alpha = count(header.get(2), line, "alpha count")?;
    let n_beta = count(header.get(3), line, "beta count")?;
    let has_gamma2 = match header[4].as_str() {
        "0" => false,
        "1" => true,
        _ => {
            return Err(Error::Parse {
                line,
                msg: "has_gamma2 must be 0 or 1".into(),
            })
        }
    };
    if m > MAX_ORBITALS || n_alpha > m || n_beta > m {
        return Err(Error::Parse {
            line,
            msg: format!("inconsistent sizes M={m}, n_alpha={n_alpha}, n_beta={n_beta}"),
        });
    }
    if has_gamma2 && m > MAX_DUMP_GAMMA2_ORBITALS {
        return Err(Error::Parse {
            line,
            msg: format!("2-RDM over {m} orbitals is too large"),
        });
    }

    let mut matrix = |label: &str| -> Result<DMatrix<f64>> {
        lines.expect(label)?;
        let mut g = DMatrix::zeros(m, m);
        for p in 0..m {
            for (q, v) in lines.values(m)?.into_iter().enumerate() {
                g[(p, q)] = v;
            }
        }
        Ok(g)
    };
    let gamma_aa = matrix("GAMMA_AA")?;
    let gamma_bb = matrix("GAMMA_BB")?;
    lines.expect("PAIR_DIAG")?;
    let pair_diag = if m == 0 { Vec::new() } else { lines.values(m)? };

    let gamma2 = if has_gamma2 {
        let mut block = |label: &str| -> Result<Tensor4> {
            let rest = lines.expect(label)?;
            let line = lines.line;
            let n = count(rest.first(), line, "record count")?;
            if n > m.pow(4) {
                return Err(Error::Parse {
                    line,
                    msg: format!("{n} records exceed the {} elements of the block", m.pow(4)),
                });
            }
            let mut t = Tensor4::zeros(m);
            for _ in 0..n {
                let (line, text) = lines.next()?;
                let tok: Vec<&str> = text.split_whitespace().collect();
                if tok.len() != 5 {
                    return Err(Error::Parse {
                        line,
                        msg: "2-RDM record needs p q r s value".into(),
                    });
                }
                let mut idx = [0usize; 4];
                for (slot, t) in idx.iter_mut().zip(&tok[..4]) {
                    *slot = t.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("invalid index {t:?}"),
                    })?;
                    if *slot >= m {
                        return Err(Error::Index {
                            line,
                            msg: format!("index {slot} outside 0..{m}"),
                        });
                    }
                }
                let v = number(tok[4], line)?;
                t.set(idx[0], idx[1], idx[2], idx[3], v);
            }
            Ok(t)
        };
        Some(SpinGamma2 {
            aa: block("GAMMA2_AA")?,
            bb: block("GAMMA2_BB")?,
            ab: block("GAMMA2_AB")?,
        })
    } else {
        None
    };
    lines.expect("END")?;
    Ok(SpinRdms {
        n_orbitals: m,
        n_alpha,
        n_beta,
        gamma_aa,
        gamma_bb,
        pair_diag,
        gamma2,
    })
}

pub fn parse_rdm_dump_str(text: &str) -> Result<SpinRdms> {
    parse_rdm_dump(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::fci_ground_state;
    use crate::hamiltonian::make_hubbard;
    use crate::rdm::rdms_from_ci;

    #[test]
    fn round_trip_is_exact() {
        let h = make_hubbard(4, 1.0, 2.0, true, 4).unwrap();
        let (_, v) = fci_ground_state(&h).unwrap();
        for with in [false, true] {
            let r = rdms_from_ci(&v, with).unwrap();
            let mut buf = Vec::new();
            write_rdm_dump(&r, &mut buf).unwrap();
            let back = parse_rdm_dump(buf.as_slice()).unwrap();
            assert_eq!(back, r);
        }
    }

    #[test]
    fn malformed_dumps_are_rejected() {
        assert!(matches!(parse_rdm_dump_str(""), Err(Error::Parse { line: 1, .. })));
        assert!(parse_rdm_dump_str("QIO-RDM 2 1 1 1 0\n").is_err());
        let body = "QIO-RDM 1 1 1 0 1\nGAMMA_AA\n1\nGAMMA_BB\n0\nPAIR_DIAG\n0\nGAMMA2_AA 1\n0 0 1 0 1.0\n";
        assert!(matches!(parse_rdm_dump_str(body), Err(Error::Index { line: 9, .. })));
        let body = "QIO-RDM 1 1 1 0 0\nGAMMA_AA\nnan\n";
        assert!(matches!(parse_rdm_dump_str(body), Err(Error::Value { line: 3 })));
        let ok = "# comment\nQIO-RDM 1 1 1 0 0\nGAMMA_AA\n1\nGAMMA_BB\n0\nPAIR_DIAG\n0\nEND\n";
        assert_eq!(parse_rdm_dump_str(ok).unwrap().gamma_aa[(0, 0)], 1.0);
    }
}
