//! Cluster amplitudes: storage, extraction from CAS vectors and a text
//! exchange format.
//!
//! Amplitudes refer to the operators `a†_a a_i` and `a†_a a†_b a_j a_i`
//! acting on the reference determinant. Doubles are stored once per
//! canonical key `i < j, a < b` (spin-orbital order) and are antisymmetric
//! under `i ↔ j` and `a ↔ b`.
//!
//! # File format
//!
//! One amplitude per line, `#` starts a comment:
//!
//! ```text
//! T1 <spin> i a value
//! T2 <spin> i j a b value
//! ```
//!
//! Indices are 0-based spatial orbitals. For `T1` the spin tag is `aa` or
//! `bb`. For `T2` it is `aa`, `bb` or `ab`; with `ab`, `i` and `a` are alpha
//! and `j` and `b` are beta.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::ops::Range;

use super::determinant::{Determinant, Spin, SpinOrbital};
use super::space::CiVector;
use crate::error::{Error, Result};

/// Default lower bound on `|c0|` for amplitude extraction.
pub const C0_THRESHOLD: f64 = 0.1;

pub type DoubleKey = [SpinOrbital; 4];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Amplitudes {
    pub t1: BTreeMap<(SpinOrbital, SpinOrbital), f64>,
    pub t2: BTreeMap<DoubleKey, f64>,
}

/// Sorts a pair, returning the permutation sign.
fn order_pair(x: SpinOrbital, y: SpinOrbital) -> (SpinOrbital, SpinOrbital, f64) {
    if x <= y {
        (x, y, 1.0)
    } else {
        (y, x, -1.0)
    }
}

impl Amplitudes {
    pub fn is_empty(&self) -> bool {
        self.t1.is_empty() && self.t2.is_empty()
    }

    pub fn len(&self) -> usize {
        self.t1.len() + self.t2.len()
    }

    pub fn t1(&self, i: SpinOrbital, a: SpinOrbital) -> f64 {
        self.t1.get(&(i, a)).copied().unwrap_or(0.0)
    }

    /// `t_ij^ab` for any index order.
    pub fn t2(&self, i: SpinOrbital, j: SpinOrbital, a: SpinOrbital, b: SpinOrbital) -> f64 {
        if i == j || a == b {
            return 0.0;
        }
        let (i, j, s1) = order_pair(i, j);
        let (a, b, s2) = order_pair(a, b);
        self.t2.get(&[i, j, a, b]).map_or(0.0, |v| s1 * s2 * v)
    }

    pub fn set_t1(&mut self, i: SpinOrbital, a: SpinOrbital, v: f64) -> Result<()> {
        if i.spin != a.spin {
            return Err(Error::Domain(format!("single {i}->{a} flips spin")));
        }
        self.t1.insert((i, a), v);
        Ok(())
    }

    /// Stores `t_ij^ab = v`, adjusting the sign for the canonical key.
    pub fn set_t2(&mut self, i: SpinOrbital, j: SpinOrbital, a: SpinOrbital, b: SpinOrbital, v: f64) -> Result<()> {
        if i == j || a == b {
            return Err(Error::Domain(format!("double {i}{j}->{a}{b} repeats an index")));
        }
        let mut occ = [i.spin, j.spin];
        let mut vir = [a.spin, b.spin];
        occ.sort();
        vir.sort();
        if occ != vir {
            return Err(Error::Domain(format!("double {i}{j}->{a}{b} changes spin")));
        }
        let (i, j, s1) = order_pair(i, j);
        let (a, b, s2) = order_pair(a, b);
        self.t2.insert([i, j, a, b], s1 * s2 * v);
        Ok(())
    }
}

/// Amplitudes extracted from a CAS vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CasAmplitudes {
    pub n_orbitals: usize,
    pub reference: Determinant,
    pub window: Range<usize>,
    pub c0: f64,
    pub amplitudes: Amplitudes,
}

/// Extracts `T1` and `T2` from the singles and doubles of `v` relative to
/// its reference determinant:
///
/// `t_i^a = c_i^a / c0`, `t_ij^ab = (c0 c_ij^ab − c_i^a c_j^b + c_i^b c_j^a) / c0²`,
///
/// where `c_i^a` and `c_ij^ab` are the coefficients of the operator-ordered
/// excited determinants. Only excitations inside the active window are
/// considered; higher excitations are dropped.
pub fn extract_cas_amplitudes(v: &CiVector, threshold: f64) -> Result<CasAmplitudes> {
    let c0 = v.c0();
    if c0.abs() <= threshold {
        return Err(Error::ReferenceDegeneracy { c0, threshold });
    }
    let m = v.space.n_orbitals;
    let window = v.space.active_window.clone().unwrap_or(0..m);
    let reference = v.reference();
    let (occ, vir) = partition_window(&reference, &window);

    let single =
        |i: SpinOrbital, a: SpinOrbital| -> f64 { reference.single(i, a).map_or(0.0, |(d, s)| s * v.coefficient(&d)) };

    let mut amps = Amplitudes::default();
    for &i in &occ {
        for &a in vir.iter().filter(|a| a.spin == i.spin) {
            let c = single(i, a);
            if c != 0.0 {
                amps.t1.insert((i, a), c / c0);
            }
        }
    }
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    let Some((d, s)) = reference.double(i, j, a, b) else {
                        continue;
                    };
                    let cd = s * v.coefficient(&d);
                    let disconnected = single(i, a) * single(j, b) - single(i, b) * single(j, a);
                    if cd == 0.0 && disconnected == 0.0 {
                        continue;
                    }
                    let spin_ok = {
                        let mut o = [i.spin, j.spin];
                        let mut w = [a.spin, b.spin];
                        o.sort();
                        w.sort();
                        o == w
                    };
                    if spin_ok {
                        amps.t2.insert([i, j, a, b], (c0 * cd - disconnected) / (c0 * c0));
                    }
                }
            }
        }
    }
    Ok(CasAmplitudes {
        n_orbitals: m,
        reference,
        window,
        c0,
        amplitudes: amps,
    })
}

/// Occupied and virtual spin orbitals of `reference` inside `window`, in
/// spin-orbital order.
pub(crate) fn partition_window(reference: &Determinant, window: &Range<usize>) -> (Vec<SpinOrbital>, Vec<SpinOrbital>) {
    let all: Vec<SpinOrbital> = window
        .clone()
        .map(SpinOrbital::alpha)
        .chain(window.clone().map(SpinOrbital::beta))
        .collect();
    let occ = all.iter().copied().filter(|s| reference.is_occupied(*s)).collect();
    let vir = all.iter().copied().filter(|s| !reference.is_occupied(*s)).collect();
    (occ, vir)
}

fn spin_tag(s: &str, line: usize) -> Result<(Spin, Spin)> {
    match s {
        "aa" => Ok((Spin::Alpha, Spin::Alpha)),
        "bb" => Ok((Spin::Beta, Spin::Beta)),
        "ab" => Ok((Spin::Alpha, Spin::Beta)),
        _ => Err(Error::Parse {
            line,
            msg: format!("unknown spin tag '{s}'"),
        }),
    }
}

/// Reads the amplitude text format. `n_orbitals` bounds the indices.
pub fn parse_amplitudes<R: BufRead>(reader: R, n_orbitals: usize) -> Result<Amplitudes> {
    let mut amps = Amplitudes::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse { line: lineno, msg };
        let (n_idx, kind) = match f[0] {
            "T1" => (2, 1),
            "T2" => (4, 2),
            other => return Err(parse_err(format!("unknown record '{other}'"))),
        };
        if f.len() != 3 + n_idx {
            return Err(parse_err(format!("expected {} fields, found {}", 3 + n_idx, f.len())));
        }
        let (s1, s2) = spin_tag(f[1], lineno)?;
        let mut idx = [0usize; 4];
        for (k, field) in f[2..2 + n_idx].iter().enumerate() {
            let v: usize = field.parse().map_err(|_| parse_err(format!("bad index '{field}'")))?;
            if v >= n_orbitals {
                return Err(Error::Index {
                    line: lineno,
                    msg: format!("orbital {v} outside 0..{n_orbitals}"),
                });
            }
            idx[k] = v;
        }
        let value: f64 = f[2 + n_idx]
            .parse()
            .map_err(|_| parse_err(format!("bad value '{}'", f[2 + n_idx])))?;
        if !value.is_finite() {
            return Err(Error::Value { line: lineno });
        }
        let so = |spin: Spin, orbital: usize| SpinOrbital { spin, orbital };
        let res = if kind == 1 {
            if s1 != s2 {
                return Err(parse_err("T1 records take 'aa' or 'bb'".into()));
            }
            amps.set_t1(so(s1, idx[0]), so(s1, idx[1]), value)
        } else {
            amps.set_t2(so(s1, idx[0]), so(s2, idx[1]), so(s1, idx[2]), so(s2, idx[3]), value)
        };
        res.map_err(|e| parse_err(e.to_string()))?;
    }
    Ok(amps)
}

pub fn parse_amplitudes_str(text: &str, n_orbitals: usize) -> Result<Amplitudes> {
    parse_amplitudes(text.as_bytes(), n_orbitals)
}

pub fn write_amplitudes<W: Write>(amps: &Amplitudes, mut out: W) -> Result<()> {
    writeln!(out, "# qio amplitudes v1")?;
    let tag = |s: Spin| match s {
        Spin::Alpha => "aa",
        Spin::Beta => "bb",
    };
    for (&(i, a), &v) in &amps.t1 {
        writeln!(out, "T1 {} {} {} {:.17e}", tag(i.spin), i.orbital, a.orbital, v)?;
    }
    for (&[i, j, a, b], &v) in &amps.t2 {
        let t = match (i.spin, j.spin) {
            (Spin::Alpha, Spin::Alpha) => "aa",
            (Spin::Beta, Spin::Beta) => "bb",
            _ => "ab",
        };
        writeln!(
            out,
            "T2 {t} {} {} {} {} {:.17e}",
            i.orbital, j.orbital, a.orbital, b.orbital, v
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::space::DeterminantSpace;

    const A0: SpinOrbital = SpinOrbital::alpha(0);
    const A1: SpinOrbital = SpinOrbital::alpha(1);
    const B0: SpinOrbital = SpinOrbital::beta(0);
    const B1: SpinOrbital = SpinOrbital::beta(1);

    #[test]
    fn antisymmetric_access() {
        let mut t = Amplitudes::default();
        t.set_t2(A0, B0, A1, B1, 0.25).unwrap();
        assert_eq!(t.t2(A0, B0, A1, B1), 0.25);
        assert_eq!(t.t2(B0, A0, A1, B1), -0.25);
        assert_eq!(t.t2(B0, A0, B1, A1), 0.25);
        assert!(t.set_t2(A0, A0, A1, B1, 1.0).is_err());
        assert!(t.set_t2(A0, B0, A1, A1, 1.0).is_err());
    }

    #[test]
    fn pure_reference_gives_zero_amplitudes() {
        let v = CiVector::single_determinant(2, Determinant::aufbau(1, 1)).unwrap();
        let cas = extract_cas_amplitudes(&v, C0_THRESHOLD).unwrap();
        assert_eq!(cas.c0, 1.0);
        assert!(cas.amplitudes.is_empty());
    }

    #[test]
    fn two_configuration_singlet() {
        let space = DeterminantSpace::full(2, 1, 1).unwrap();
        let mut c = vec![0.0; 4];
        let d0 = Determinant::aufbau(1, 1);
        let d2 = Determinant::from_orbitals(&[1], &[1]);
        let (c0, c2) = (0.9f64, -(1.0f64 - 0.81).sqrt());
        c[space.index_of(&d0).unwrap()] = c0;
        c[space.index_of(&d2).unwrap()] = c2;
        let v = CiVector::new(space.clone(), c, space.index_of(&d0).unwrap()).unwrap();
        let cas = extract_cas_amplitudes(&v, C0_THRESHOLD).unwrap();
        assert!(cas.amplitudes.t1.is_empty());
        // a†_1a a†_1b a_0b a_0a |D0> = sign |D2>
        let (_, s) = d0.double(A0, B0, A1, B1).unwrap();
        assert!((cas.amplitudes.t2(A0, B0, A1, B1) - s * c2 / c0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_reference_is_rejected() {
        let space = DeterminantSpace::full(2, 1, 1).unwrap();
        let v = CiVector::new(space, vec![0.05, 0.0, 0.0, 1.0], 0).unwrap();
        assert!(matches!(
            extract_cas_amplitudes(&v, C0_THRESHOLD),
            Err(Error::ReferenceDegeneracy { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let mut t = Amplitudes::default();
        t.set_t1(A0, A1, 0.125).unwrap();
        t.set_t1(B0, B1, -0.5).unwrap();
        t.set_t2(A0, B0, A1, B1, 0.3).unwrap();
        t.set_t2(
            SpinOrbital::alpha(0),
            SpinOrbital::alpha(2),
            A1,
            SpinOrbital::alpha(3),
            1e-3,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_amplitudes(&t, &mut buf).unwrap();
        let back = parse_amplitudes(buf.as_slice(), 4).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_amplitudes_str("T3 aa 0 1 0.1", 2),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_amplitudes_str("\nT1 aa 0 5 0.1", 2),
            Err(Error::Index { line: 2, .. })
        ));
        assert!(matches!(
            parse_amplitudes_str("T1 ab 0 1 0.1", 2),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_amplitudes_str("T1 aa 0 1 nan", 2),
            Err(Error::Value { .. })
        ));
        assert!(matches!(
            parse_amplitudes_str("T2 aa 0 0 1 1 0.1", 2),
            Err(Error::Parse { .. })
        ));
    }
}
