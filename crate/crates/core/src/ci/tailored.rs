//! Tailored singles-and-doubles state.
//!
//! The state is `C⁻¹ [1 + T1 + (T2 + ½ T1²)]|D0⟩` truncated at doubles,
//! with the active-window amplitudes frozen to their CAS values. External
//! amplitudes, those with at least one index outside the window, are chosen
//! to minimize the energy of this state. For fixed active amplitudes every
//! external single and double coefficient is a free linear parameter, so the
//! minimization reduces to the lowest eigenpair of the Hamiltonian projected
//! on `{Φ_CAS, external singles, external doubles}`.

use std::collections::HashMap;
use std::ops::Range;

use super::amplitudes::{Amplitudes, CasAmplitudes, DoubleKey};
use super::davidson::{davidson, DavidsonOptions};
use super::determinant::{Determinant, SpinOrbital};
use super::sigma::HamiltonianOperator;
use super::solver::apply_hamiltonian;
use super::space::{CiVector, DeterminantSpace};
use crate::error::{Error, Result};
use crate::hamiltonian::{transform_integrals, MolecularHamiltonian, OrbitalBasis};

#[derive(Debug, Clone, PartialEq)]
pub struct TailoredState {
    pub cas: CasAmplitudes,
    pub external: Amplitudes,
}

fn inside(window: &Range<usize>, so: &SpinOrbital) -> bool {
    window.contains(&so.orbital)
}

impl TailoredState {
    /// Pairs frozen CAS amplitudes with external ones, rejecting external
    /// amplitudes that lie entirely inside the active window.
    pub fn new(cas: CasAmplitudes, external: Amplitudes) -> Result<Self> {
        let w = &cas.window;
        if let Some(((i, a), _)) = external.t1.iter().find(|((i, a), _)| inside(w, i) && inside(w, a)) {
            return Err(Error::Domain(format!(
                "external single {i}->{a} lies inside the active window"
            )));
        }
        if let Some((k, _)) = external.t2.iter().find(|(k, _)| k.iter().all(|s| inside(w, s))) {
            return Err(Error::Domain(format!(
                "external double {k:?} lies inside the active window"
            )));
        }
        Ok(Self { cas, external })
    }

    /// Splits a flat amplitude set into active and external parts.
    pub fn from_amplitudes(
        n_orbitals: usize,
        reference: Determinant,
        window: Range<usize>,
        amplitudes: Amplitudes,
    ) -> Self {
        let mut cas = Amplitudes::default();
        let mut ext = Amplitudes::default();
        for (k, v) in amplitudes.t1 {
            if inside(&window, &k.0) && inside(&window, &k.1) {
                cas.t1.insert(k, v);
            } else {
                ext.t1.insert(k, v);
            }
        }
        for (k, v) in amplitudes.t2 {
            if k.iter().all(|s| inside(&window, s)) {
                cas.t2.insert(k, v);
            } else {
                ext.t2.insert(k, v);
            }
        }
        Self {
            cas: CasAmplitudes {
                n_orbitals,
                reference,
                window,
                c0: 1.0,
                amplitudes: cas,
            },
            external: ext,
        }
    }

    pub fn reference(&self) -> Determinant {
        self.cas.reference
    }

    pub fn n_orbitals(&self) -> usize {
        self.cas.n_orbitals
    }

    pub fn t1(&self, i: SpinOrbital, a: SpinOrbital) -> f64 {
        self.cas.amplitudes.t1(i, a) + self.external.t1(i, a)
    }

    pub fn t2(&self, i: SpinOrbital, j: SpinOrbital, a: SpinOrbital, b: SpinOrbital) -> f64 {
        self.cas.amplitudes.t2(i, j, a, b) + self.external.t2(i, j, a, b)
    }

    /// Active and external amplitudes merged into one set.
    pub fn all_amplitudes(&self) -> Amplitudes {
        let mut out = self.cas.amplitudes.clone();
        out.t1.extend(self.external.t1.iter().map(|(k, v)| (*k, *v)));
        out.t2.extend(self.external.t2.iter().map(|(k, v)| (*k, *v)));
        out
    }
}

fn occupied_and_virtual(reference: &Determinant, m: usize) -> (Vec<SpinOrbital>, Vec<SpinOrbital>) {
    super::amplitudes::partition_window(reference, &(0..m))
}

fn spin_conserving(i: SpinOrbital, j: SpinOrbital, a: SpinOrbital, b: SpinOrbital) -> bool {
    let mut o = [i.spin, j.spin];
    let mut v = [a.spin, b.spin];
    o.sort();
    v.sort();
    o == v
}

#[derive(Debug, Clone, Copy)]
enum Excitation {
    Single(SpinOrbital, SpinOrbital),
    Double(DoubleKey),
}

impl Excitation {
    fn is_external(&self, window: &Range<usize>) -> bool {
        match self {
            Excitation::Single(i, a) => !(inside(window, i) && inside(window, a)),
            Excitation::Double(k) => !k.iter().all(|s| inside(window, s)),
        }
    }

    fn apply(&self, reference: &Determinant) -> (Determinant, f64) {
        match *self {
            Excitation::Single(i, a) => reference.single(i, a),
            Excitation::Double([i, j, a, b]) => reference.double(i, j, a, b),
        }
        .expect("excitation of the reference is valid")
    }
}

/// Every spin-conserving single `(i, a)` and canonical double
/// `(i < j, a < b)` of the reference, singles first.
fn excitations(reference: &Determinant, m: usize) -> Vec<Excitation> {
    let (occ, vir) = occupied_and_virtual(reference, m);
    let mut out = Vec::new();
    for &i in &occ {
        for &a in vir.iter().filter(|a| a.spin == i.spin) {
            out.push(Excitation::Single(i, a));
        }
    }
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    if spin_conserving(i, j, a, b) {
                        out.push(Excitation::Double([i, j, a, b]));
                    }
                }
            }
        }
    }
    out
}

/// Normalized determinant vector of the tailored singles-and-doubles state
/// in the complete space of the reference's orbital and electron counts.
///
/// Each canonical double receives `t_ij^ab + t_i^a t_j^b − t_i^b t_j^a`,
/// which is the doubles block of `exp(T1 + T2)|D0⟩`.
pub fn build_cisd_state(ts: &TailoredState) -> Result<CiVector> {
    let reference = ts.reference();
    let m = ts.n_orbitals();
    let space = DeterminantSpace::full(m, reference.n_alpha(), reference.n_beta())?;
    let mut c = vec![0.0; space.dim()];
    let r0 = space
        .index_of(&reference)
        .ok_or_else(|| Error::Domain("reference outside its space".into()))?;
    c[r0] = 1.0;
    for exc in excitations(&reference, m) {
        let value = match exc {
            Excitation::Single(i, a) => ts.t1(i, a),
            Excitation::Double([i, j, a, b]) => {
                ts.t2(i, j, a, b) + ts.t1(i, a) * ts.t1(j, b) - ts.t1(i, b) * ts.t1(j, a)
            }
        };
        if value != 0.0 {
            let (d, sign) = exc.apply(&reference);
            let idx = space.index_of(&d).expect("excitation stays in the space");
            c[idx] += sign * value;
        }
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite amplitude in CISD state".into()));
    }
    CiVector::new(space, c, r0)
}

#[derive(Debug, Clone)]
pub struct TailoredSolution {
    pub state: TailoredState,
    /// Energy of the tailored state, including the core energy.
    pub energy: f64,
    /// The same state as a normalized determinant vector.
    pub vector: CiVector,
    /// Norm of the energy gradient with respect to the external coefficients.
    pub stationarity: f64,
}

/// Optimizes the external amplitudes with the CAS block frozen.
pub fn solve_tailored_external(
    h: &MolecularHamiltonian,
    basis: &OrbitalBasis,
    cas: &CasAmplitudes,
) -> Result<TailoredSolution> {
    let ht = transform_integrals(h, basis)?;
    solve_tailored_in_place(&ht, cas, 2_000_000)
}

/// As [`solve_tailored_external`] with integrals already in the working basis.
pub fn solve_tailored_in_place(
    h: &MolecularHamiltonian,
    cas: &CasAmplitudes,
    max_determinants: usize,
) -> Result<TailoredSolution> {
    let m = h.n_orbitals;
    if cas.n_orbitals != m {
        return Err(Error::Dimension(format!(
            "CAS amplitudes span {} orbitals, Hamiltonian has {m}",
            cas.n_orbitals
        )));
    }
    let reference = cas.reference;
    if reference.n_alpha() != h.n_alpha() || reference.n_beta() != h.n_beta() {
        return Err(Error::Dimension(
            "reference electron count differs from Hamiltonian".into(),
        ));
    }
    let fixed_state = TailoredState::new(cas.clone(), Amplitudes::default())?;
    let fixed = build_cisd_state(&fixed_state)?;
    let space = fixed.space.clone();
    if space.dim() > max_determinants {
        return Err(Error::Capacity(format!(
            "{} determinants exceeds the cap of {max_determinants}",
            space.dim()
        )));
    }

    // external determinants, each reached by exactly one excitation
    let w = &cas.window;
    let external_exc: Vec<Excitation> = excitations(&reference, m)
        .into_iter()
        .filter(|e| e.is_external(w))
        .collect();
    let mut ext: Vec<Determinant> = external_exc.iter().map(|e| e.apply(&reference).0).collect();
    ext.sort();
    ext.dedup();
    let slot: HashMap<Determinant, usize> = ext.iter().enumerate().map(|(k, d)| (*d, k + 1)).collect();
    let n = ext.len() + 1;

    let op = HamiltonianOperator::new(h, &space)?;
    let h_fixed = op.apply(&fixed.coefficients);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    rows[0].push((0, dot(&fixed.coefficients, &h_fixed)));
    for (k, d) in ext.iter().enumerate() {
        let v = h_fixed[space.index_of(d).expect("excitation in space")];
        if v != 0.0 {
            rows[0].push((k + 1, v));
            rows[k + 1].push((0, v));
        }
    }
    for (l, d) in ext.iter().enumerate() {
        for (target, v) in apply_hamiltonian(h, d) {
            if let Some(&k) = slot.get(&target) {
                rows[k].push((l + 1, v));
            }
        }
    }
    let diag: Vec<f64> = (0..n)
        .map(|k| rows[k].iter().filter(|(j, _)| *j == k).map(|(_, v)| v).sum())
        .collect();
    let matvec = |x: &[f64]| -> Vec<f64> {
        rows.iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    };
    let opts = DavidsonOptions {
        tol: 1e-9,
        ..Default::default()
    };
    let (vals, vecs) = davidson(matvec, &diag, 1, &opts)?;
    let energy = vals[0];
    let y = &vecs[0];

    let ref_index = space.index_of(&reference).expect("reference in space");
    let ref_weight = y[0] * fixed.coefficients[ref_index];
    if ref_weight.abs() < 1e-12 {
        return Err(Error::ReferenceDegeneracy {
            c0: ref_weight,
            threshold: 1e-12,
        });
    }
    let scale = 1.0 / ref_weight;

    let residual = matvec(y)
        .iter()
        .zip(y)
        .skip(1)
        .map(|(hy, yk)| (hy - energy * yk).powi(2))
        .sum::<f64>()
        .sqrt();
    let stationarity = 2.0 * residual * scale.abs();

    // intermediate-normalized coefficient of each external determinant
    let coeff = |d: &Determinant| slot.get(d).map_or(0.0, |&k| y[k] * scale);
    let mut external = Amplitudes::default();
    for exc in &external_exc {
        if let Excitation::Single(i, a) = *exc {
            let (d, s) = exc.apply(&reference);
            let c = s * coeff(&d);
            if c != 0.0 {
                external.t1.insert((i, a), c);
            }
        }
    }
    let with_singles = TailoredState {
        cas: cas.clone(),
        external: external.clone(),
    };
    for exc in &external_exc {
        if let Excitation::Double(k) = *exc {
            let [i, j, a, b] = k;
            let (d, s) = exc.apply(&reference);
            let disconnected =
                with_singles.t1(i, a) * with_singles.t1(j, b) - with_singles.t1(i, b) * with_singles.t1(j, a);
            let t = s * coeff(&d) - disconnected;
            if t != 0.0 {
                external.t2.insert(k, t);
            }
        }
    }
    let state = TailoredState::new(cas.clone(), external)?;
    let vector = build_cisd_state(&state)?;
    Ok(TailoredSolution {
        state,
        energy,
        vector,
        stationarity,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::amplitudes::{extract_cas_amplitudes, C0_THRESHOLD};
    use crate::ci::solver::{fci_ground_state, solve_casci_in_place, CasSpec, CiSolverOptions};
    use crate::hamiltonian::{core_hamiltonian_basis, make_hubbard};

    fn energy_of(h: &MolecularHamiltonian, v: &CiVector) -> f64 {
        let op = HamiltonianOperator::new(h, &v.space).unwrap();
        dot(&v.coefficients, &op.apply(&v.coefficients))
    }

    fn mo_hubbard(n: usize, u: f64) -> MolecularHamiltonian {
        let h = make_hubbard(n, 1.0, u, false, n).unwrap();
        transform_integrals(&h, &core_hamiltonian_basis(&h)).unwrap()
    }

    #[test]
    fn two_electron_cas_state_is_reproduced() {
        let h = mo_hubbard(4, 4.0);
        let cas = solve_casci_in_place(&h, CasSpec::new(2, 2), &CiSolverOptions::default()).unwrap();
        let amps = extract_cas_amplitudes(&cas.vector, C0_THRESHOLD).unwrap();
        let state = TailoredState::new(amps, Amplitudes::default()).unwrap();
        let built = build_cisd_state(&state).unwrap();
        let full = cas.vector.to_full_space().unwrap();
        assert!((built.overlap(&full) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_lies_between_fci_and_casci() {
        let h = mo_hubbard(6, 4.0);
        let (e_fci, _) = fci_ground_state(&h).unwrap();
        let cas = solve_casci_in_place(&h, CasSpec::new(2, 2), &CiSolverOptions::default()).unwrap();
        let amps = extract_cas_amplitudes(&cas.vector, C0_THRESHOLD).unwrap();
        let sol = solve_tailored_in_place(&h, &amps, 1 << 20).unwrap();
        assert!(e_fci <= sol.energy + 1e-10, "{e_fci} > {}", sol.energy);
        assert!(sol.energy <= cas.energy + 1e-10, "{} > {}", sol.energy, cas.energy);
        assert!(
            sol.energy < cas.energy - 1e-3,
            "external amplitudes should lower the energy"
        );
        assert!(sol.stationarity < 1e-7, "stationarity {}", sol.stationarity);
        assert!((energy_of(&h, &sol.vector) - sol.energy).abs() < 1e-9);
        assert_eq!(sol.state.cas, amps);
    }

    #[test]
    fn external_amplitudes_are_a_minimum() {
        let h = mo_hubbard(4, 2.0);
        let cas = solve_casci_in_place(&h, CasSpec::new(2, 2), &CiSolverOptions::default()).unwrap();
        let amps = extract_cas_amplitudes(&cas.vector, C0_THRESHOLD).unwrap();
        let sol = solve_tailored_in_place(&h, &amps, 1 << 20).unwrap();
        assert!(!sol.state.external.t2.is_empty());
        for (key, &t) in sol.state.external.t2.iter().take(6) {
            for step in [-1e-3, 1e-3] {
                let mut trial = sol.state.clone();
                trial.external.t2.insert(*key, t + step);
                let e = energy_of(&h, &build_cisd_state(&trial).unwrap());
                assert!(e >= sol.energy - 1e-12, "moving {key:?} by {step} lowered the energy");
            }
        }
    }

    #[test]
    fn complete_active_space_leaves_nothing_external() {
        let h = mo_hubbard(2, 3.0);
        let (e_fci, _) = fci_ground_state(&h).unwrap();
        let cas = solve_casci_in_place(&h, CasSpec::new(2, 2), &CiSolverOptions::default()).unwrap();
        let amps = extract_cas_amplitudes(&cas.vector, C0_THRESHOLD).unwrap();
        let sol = solve_tailored_in_place(&h, &amps, 1 << 20).unwrap();
        assert!(sol.state.external.is_empty());
        assert!((sol.energy - e_fci).abs() < 1e-10);
    }

    #[test]
    fn active_amplitude_cannot_be_external() {
        let h = mo_hubbard(4, 4.0);
        let cas = solve_casci_in_place(&h, CasSpec::new(2, 2), &CiSolverOptions::default()).unwrap();
        let amps = extract_cas_amplitudes(&cas.vector, C0_THRESHOLD).unwrap();
        let mut ext = Amplitudes::default();
        ext.set_t1(SpinOrbital::alpha(1), SpinOrbital::alpha(2), 0.1).unwrap();
        assert!(TailoredState::new(amps.clone(), ext).is_err());
        let mut ext = Amplitudes::default();
        ext.set_t1(SpinOrbital::alpha(0), SpinOrbital::alpha(2), 0.1).unwrap();
        assert!(TailoredState::new(amps, ext).is_ok());
    }

    #[test]
    fn flat_amplitudes_split_by_window() {
        let mut all = Amplitudes::default();
        all.set_t1(SpinOrbital::alpha(1), SpinOrbital::alpha(2), 0.1).unwrap();
        all.set_t1(SpinOrbital::beta(0), SpinOrbital::beta(3), 0.2).unwrap();
        let ts = TailoredState::from_amplitudes(4, Determinant::aufbau(2, 2), 1..3, all.clone());
        assert_eq!(ts.cas.amplitudes.len(), 1);
        assert_eq!(ts.external.len(), 1);
        assert_eq!(ts.all_amplitudes(), all);
    }

    fn cas_for(reference: Determinant, m: usize, window: Range<usize>) -> CasAmplitudes {
        CasAmplitudes {
            n_orbitals: m,
            reference,
            window,
            c0: 1.0,
            amplitudes: Amplitudes::default(),
        }
    }

    #[test]
    fn product_of_singles_fills_the_double() {
        // two electrons in three orbitals, one α and one β single of size τ
        let tau = 0.37;
        let reference = Determinant::aufbau(1, 1);
        let mut ext = Amplitudes::default();
        ext.set_t1(SpinOrbital::alpha(0), SpinOrbital::alpha(2), tau).unwrap();
        ext.set_t1(SpinOrbital::beta(0), SpinOrbital::beta(2), tau).unwrap();
        let ts = TailoredState::new(cas_for(reference, 3, 0..2), ext).unwrap();
        let v = build_cisd_state(&ts).unwrap();
        let c0 = v.coefficient(&reference);
        let (single, s1) = reference.single(SpinOrbital::alpha(0), SpinOrbital::alpha(2)).unwrap();
        let (double, s2) = reference
            .double(
                SpinOrbital::alpha(0),
                SpinOrbital::beta(0),
                SpinOrbital::alpha(2),
                SpinOrbital::beta(2),
            )
            .unwrap();
        assert!((v.coefficient(&single) / c0 - s1 * tau).abs() < 1e-15);
        assert!((v.coefficient(&double) / c0 - s2 * tau * tau).abs() < 1e-15);
        let norm = (1.0 + 2.0 * tau * tau + tau.powi(4)).sqrt();
        assert!((c0 - 1.0 / norm).abs() < 1e-15);
        assert_eq!(v.iter_nonzero().count(), 4);
    }

    #[test]
    fn random_amplitudes_give_a_normalized_state() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let reference = Determinant::aufbau(2, 2);
        let mut ext = Amplitudes::default();
        for _ in 0..12 {
            let (i, a) = (rng.gen_range(0..2), rng.gen_range(2..5));
            let spin = rng.gen_bool(0.5);
            let (i, a) = if spin {
                (SpinOrbital::alpha(i), SpinOrbital::alpha(a))
            } else {
                (SpinOrbital::beta(i), SpinOrbital::beta(a))
            };
            ext.set_t1(i, a, rng.gen_range(-0.3..0.3)).unwrap();
        }
        ext.set_t2(
            SpinOrbital::alpha(0),
            SpinOrbital::beta(1),
            SpinOrbital::alpha(3),
            SpinOrbital::beta(4),
            0.05,
        )
        .unwrap();
        let ts = TailoredState::from_amplitudes(5, reference, 1..3, ext.clone());
        assert_eq!(ts.all_amplitudes(), ext);
        let v = build_cisd_state(&ts).unwrap();
        let norm: f64 = v.coefficients.iter().map(|c| c * c).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        assert!(v.c0() > 0.0);
    }
}
