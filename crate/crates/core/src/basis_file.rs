//! Plain-text orbital basis.
//!
//! ```text
//! QIO-BASIS 1 <M> <provenance>
//! <M rows of M values: row p, column k is C[p][k]>
//! ```
//!
//! Column `k` is orbital `k` in the reference orbitals. Provenance is one of
//! `HF-init`, `QIO`, `NO`, `imported`. Blank lines and `#` comments are ignored.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::{OrbitalBasis, Provenance, MAX_ORBITALS};

/// Orthogonality tolerance applied to parsed bases.
pub const BASIS_TOLERANCE: f64 = 1e-8;

pub fn write_basis<W: Write>(basis: &OrbitalBasis, mut out: W) -> Result<()> {
    let m = basis.dim();
    writeln!(out, "QIO-BASIS 1 {m} {}", basis.provenance)?;
    for p in 0..m {
        let row: Vec<String> = (0..m).map(|k| format!("{:.17e}", basis.coefficients[(p, k)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

fn provenance(label: &str) -> Option<Provenance> {
    [
        Provenance::HfInit,
        Provenance::Qio,
        Provenance::NaturalOrbitals,
        Provenance::Imported,
    ]
    .into_iter()
    .find(|p| p.to_string() == label)
}

pub fn parse_basis<R: BufRead>(reader: R) -> Result<OrbitalBasis> {
    let mut rows = Vec::new();
    let mut header: Option<(usize, Provenance)> = None;
    let mut last = 0;
    for (n, text) in reader.lines().enumerate() {
        let line = n + 1;
        last = line;
        let text = text?;
        let t = text.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((m, _)) = header else {
            let tok: Vec<&str> = t.split_whitespace().collect();
            let parsed = match tok.as_slice() {
                ["QIO-BASIS", "1", m, p] => m.parse::<usize>().ok().zip(provenance(p)),
                _ => None,
            };
            let (m, p) = parsed.ok_or_else(|| Error::Parse {
                line,
                msg: "header must read QIO-BASIS 1 M provenance".into(),
            })?;
            if m > MAX_ORBITALS {
                return Err(Error::Parse {
                    line,
                    msg: format!("{m} orbitals exceed the limit of {MAX_ORBITALS}"),
                });
            }
            header = Some((m, p));
            continue;
        };
        if rows.len() == m {
            return Err(Error::Parse {
                line,
                msg: "trailing data after the last row".into(),
            });
        }
        let mut row = Vec::with_capacity(m);
        for tok in t.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid number {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Value { line });
            }
            row.push(v);
        }
        if row.len() != m {
            return Err(Error::Parse {
                line,
                msg: format!("expected {m} values, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    let Some((m, p)) = header else {
        return Err(Error::Parse {
            line: last + 1,
            msg: "missing QIO-BASIS header".into(),
        });
    };
    if rows.len() != m {
        return Err(Error::Parse {
            line: last + 1,
            msg: format!("expected {m} rows, found {}", rows.len()),
        });
    }
    OrbitalBasis::new(DMatrix::from_fn(m, m, |i, k| rows[i][k]), p, BASIS_TOLERANCE)
}

pub fn parse_basis_str(text: &str) -> Result<OrbitalBasis> {
    parse_basis(text.as_bytes())
}
