//! FCIDUMP reader and writer.
//!
//! The header is a Fortran namelist, `&FCI NORB=..,NELEC=..,MS2=..` closed by
//! `&END` or `/`. Each following record is `value p q r s` with 1-based
//! indices: `p q r s` is a two-electron integral `(pq|rs)`, `p q 0 0` a
//! one-electron integral and `0 0 0 0` the core energy. Point-group labels
//! (`ORBSYM`, `ISYM`) are accepted and ignored, as are orbital-energy
//! records `p 0 0 0`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::hamiltonian::{MolecularHamiltonian, MAX_ORBITALS};

const WRITE_CUTOFF: f64 = 1e-14;

pub fn parse_fcidump_str(text: &str) -> Result<MolecularHamiltonian> {
    parse_fcidump(text.as_bytes())
}

pub fn parse_fcidump<R: BufRead>(reader: R) -> Result<MolecularHamiltonian> {
    let mut lines = reader.lines().enumerate();

    let mut header = String::new();
    let mut header_done = false;
    let mut header_start = None;
    for (idx, line) in lines.by_ref() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if header_start.is_none() {
            if trimmed.is_empty() {
                continue;
            }
            if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected '&FCI' namelist header".into(),
                });
            }
            header_start = Some(lineno);
        }
        let (body, closed) = strip_terminator(trimmed);
        header.push_str(body);
        header.push(',');
        if closed {
            header_done = true;
            break;
        }
    }
    let header_line = header_start.unwrap_or(1);
    if !header_done {
        return Err(Error::Parse {
            line: header_line,
            msg: "unterminated namelist header".into(),
        });
    }
    let (norb, nelec, ms2) = parse_namelist(&header, header_line)?;

    let mut h = MolecularHamiltonian::zeros(norb, nelec, ms2);
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let value = parse_real(fields[0]).ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("bad value '{}'", fields[0]),
        })?;
        if !value.is_finite() {
            return Err(Error::Value { line: lineno });
        }
        let mut idx4 = [0usize; 4];
        for (slot, field) in idx4.iter_mut().zip(&fields[1..]) {
            let v: i64 = field.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad index '{field}'"),
            })?;
            if v < 0 || v as usize > norb {
                return Err(Error::Index {
                    line: lineno,
                    msg: format!("index {v} outside 0..={norb}"),
                });
            }
            *slot = v as usize;
        }
        match idx4 {
            [0, 0, 0, 0] => h.core_energy = value,
            [p, 0, 0, 0] if p > 0 => {}
            [p, q, 0, 0] if p > 0 && q > 0 => h.set_one_body(p - 1, q - 1, value),
            [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => h.set_two_body(p - 1, q - 1, r - 1, s - 1, value),
            _ => {
                return Err(Error::Index {
                    line: lineno,
                    msg: format!("index pattern {idx4:?} is not a valid integral class"),
                })
            }
        }
    }
    Ok(h)
}

fn strip_terminator(line: &str) -> (&str, bool) {
    let upper = line.to_ascii_uppercase();
    if let Some(pos) = upper.find("&END") {
        return (&line[..pos], true);
    }
    if let Some(pos) = line.find('/') {
        return (&line[..pos], true);
    }
    (line, false)
}

fn parse_namelist(header: &str, line: usize) -> Result<(usize, usize, i32)> {
    let body = header.trim_start();
    let body = &body[4.min(body.len())..];
    let err = |msg: String| Error::Parse { line, msg };

    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = None;
    let mut current_key: Option<String> = None;
    for token in body.split(|c: char| c == ',' || c.is_whitespace()) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let (key, value) = match token.split_once('=') {
            Some((k, v)) => {
                let k = k.trim().to_ascii_uppercase();
                if k.is_empty() {
                    return Err(err("namelist entry without a key".into()));
                }
                current_key = Some(k.clone());
                (k, v.trim())
            }
            None => match &current_key {
                // continuation of a list-valued key such as ORBSYM
                Some(k) => (k.clone(), token),
                None => return Err(err(format!("unexpected token '{token}'"))),
            },
        };
        if value.is_empty() {
            continue;
        }
        let as_int = || -> Result<i64> {
            value
                .parse::<i64>()
                .map_err(|_| err(format!("{key} expects an integer, got '{value}'")))
        };
        match key.as_str() {
            "NORB" => norb = Some(as_int()?),
            "NELEC" => nelec = Some(as_int()?),
            "MS2" => ms2 = Some(as_int()?),
            _ => {}
        }
    }
    let norb = norb.ok_or_else(|| err("missing NORB".into()))?;
    let nelec = nelec.ok_or_else(|| err("missing NELEC".into()))?;
    let ms2 = ms2.unwrap_or(0);
    if norb < 0 || norb as usize > MAX_ORBITALS {
        return Err(err(format!("NORB={norb} outside 0..={MAX_ORBITALS}")));
    }
    if nelec < 0 || nelec > 2 * norb {
        return Err(err(format!("NELEC={nelec} does not fit in {norb} orbitals")));
    }
    if ms2.abs() > nelec || (nelec + ms2) % 2 != 0 || (nelec + ms2.abs()) / 2 > norb {
        return Err(err(format!("MS2={ms2} incompatible with NELEC={nelec}")));
    }
    Ok((norb as usize, nelec as usize, ms2 as i32))
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>()
        .ok()
        .or_else(|| s.replace(['d', 'D'], "e").parse::<f64>().ok())
}

/// Writes the symmetry-unique integrals with magnitude above 1e-14.
///
/// Values are written with 17 significant digits, enough for an exact
/// round trip through [`parse_fcidump`].
pub fn write_fcidump<W: Write>(h: &MolecularHamiltonian, mut out: W) -> Result<()> {
    let m = h.n_orbitals;
    writeln!(out, " &FCI NORB={m},NELEC={},MS2={},", h.n_electrons, h.ms2)?;
    let orbsym = vec!["1"; m].join(",");
    writeln!(out, "  ORBSYM={orbsym},")?;
    writeln!(out, "  ISYM=1,")?;
    writeln!(out, " &END")?;
    let record = |out: &mut W, v: f64, i: [usize; 4]| -> std::io::Result<()> {
        writeln!(out, "{:>25.16e} {:>4} {:>4} {:>4} {:>4}", v, i[0], i[1], i[2], i[3])
    };
    let g = &h.two_body;
    for p in 0..m {
        for q in 0..=p {
            let pq = p * (p + 1) / 2 + q;
            for r in 0..m {
                for s in 0..=r {
                    if r * (r + 1) / 2 + s > pq {
                        continue;
                    }
                    let v = g.get(p, q, r, s);
                    if v.abs() > WRITE_CUTOFF {
                        record(&mut out, v, [p + 1, q + 1, r + 1, s + 1])?;
                    }
                }
            }
        }
    }
    for p in 0..m {
        for q in 0..=p {
            let v = h.one_body[(p, q)];
            if v.abs() > WRITE_CUTOFF {
                record(&mut out, v, [p + 1, q + 1, 0, 0])?;
            }
        }
    }
    record(&mut out, h.core_energy, [0, 0, 0, 0])?;
    Ok(())
}

pub fn fcidump_to_string(h: &MolecularHamiltonian) -> String {
    let mut buf = Vec::new();
    write_fcidump(h, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("FCIDUMP output is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::make_hubbard;

    const SMALL: &str = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n\
        1.0 1 1 1 1\n-1.0 1 1 0 0\n0.5 0 0 0 0\n";

    #[test]
    fn direct_field_mapping() {
        let h = parse_fcidump_str(SMALL).unwrap();
        assert_eq!(h.n_orbitals, 2);
        assert_eq!(h.n_electrons, 2);
        assert_eq!(h.two_body.get(0, 0, 0, 0), 1.0);
        assert_eq!(h.one_body[(0, 0)], -1.0);
        assert_eq!(h.core_energy, 0.5);
        assert_eq!(h.one_body[(1, 1)], 0.0);
    }

    #[test]
    fn record_expands_to_symmetry_partners() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0 /\n0.7 1 2 1 2\n";
        let h = parse_fcidump_str(text).unwrap();
        let g = &h.two_body;
        assert_eq!(g.get(0, 1, 0, 1), 0.7);
        assert_eq!(g.get(1, 0, 0, 1), 0.7);
        assert_eq!(g.get(0, 1, 1, 0), 0.7);
        assert_eq!(g.get(1, 0, 1, 0), 0.7);
        assert_eq!(g.get(0, 0, 1, 1), 0.0);
    }

    #[test]
    fn fortran_exponents_and_multiline_header() {
        let text =
            " &FCI NORB=  2,\n  NELEC=2,\n  MS2=0,\n  ORBSYM=1,\n  1,\n  UHF=.FALSE.\n &END\n  -1.25D+00 1 2 0 0\n";
        let h = parse_fcidump_str(text).unwrap();
        assert_eq!(h.one_body[(1, 0)], -1.25);
    }

    #[test]
    fn zero_hamiltonian_writes_only_core_line() {
        let h = crate::hamiltonian::MolecularHamiltonian::zeros(3, 2, 0);
        let text = fcidump_to_string(&h);
        let records: Vec<&str> = text.lines().skip_while(|l| !l.contains("&END")).skip(1).collect();
        assert_eq!(records.len(), 1);
        assert!(records[0].trim().ends_with("0    0    0    0"));
    }

    #[test]
    fn hubbard_record_counts() {
        for (periodic, hops) in [(true, 6), (false, 5)] {
            let h = make_hubbard(6, 1.0, 4.0, periodic, 6).unwrap();
            let text = fcidump_to_string(&h);
            let recs: Vec<Vec<&str>> = text
                .lines()
                .skip_while(|l| !l.contains("&END"))
                .skip(1)
                .map(|l| l.split_whitespace().collect())
                .collect();
            let one = recs.iter().filter(|r| r[3] == "0" && r[1] != "0").count();
            let two = recs.iter().filter(|r| r[3] != "0").count();
            assert_eq!(one, hops);
            assert_eq!(two, 6);
        }
    }

    #[test]
    fn malformed_header_reports_line() {
        let err = parse_fcidump_str("\n\nNORB=2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_fcidump_str("&FCI NELEC=2 /\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_fcidump_str("&FCI NORB=2,NELEC=2\n1.0 1 1 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn index_out_of_range() {
        let err = parse_fcidump_str("&FCI NORB=2,NELEC=2 /\n1.0 1 3 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Index { line: 2, .. }), "{err}");
        let err = parse_fcidump_str("&FCI NORB=2,NELEC=2 /\n1.0 0 0 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Index { .. }), "{err}");
    }

    #[test]
    fn non_finite_value() {
        let err = parse_fcidump_str("&FCI NORB=2,NELEC=2 /\nNaN 1 1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Value { line: 2 }), "{err}");
        let err = parse_fcidump_str("&FCI NORB=2,NELEC=2 /\ninf 1 1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Value { line: 2 }), "{err}");
    }
}
