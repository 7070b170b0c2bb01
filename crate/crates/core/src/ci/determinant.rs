//! Occupation-string determinants and fermionic mode operators.
//!
//! A determinant `|α, β⟩` is the product of all occupied alpha creation
//! operators in ascending orbital order followed by all occupied beta ones,
//! acting on the vacuum. Every sign below follows from that ordering.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Alpha,
    Beta,
}

/// A spin orbital. Ordering puts every alpha orbital before every beta one,
/// matching the mode order inside a [`Determinant`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinOrbital {
    pub spin: Spin,
    pub orbital: usize,
}

impl SpinOrbital {
    pub const fn alpha(orbital: usize) -> Self {
        Self {
            spin: Spin::Alpha,
            orbital,
        }
    }

    pub const fn beta(orbital: usize) -> Self {
        Self {
            spin: Spin::Beta,
            orbital,
        }
    }
}

impl fmt::Display for SpinOrbital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.spin {
            Spin::Alpha => write!(f, "{}a", self.orbital),
            Spin::Beta => write!(f, "{}b", self.orbital),
        }
    }
}

#[inline]
pub(crate) fn below(p: usize) -> u64 {
    if p >= 64 {
        u64::MAX
    } else {
        (1u64 << p) - 1
    }
}

/// `(-1)^(number of set bits below p)`.
#[inline]
pub(crate) fn parity_below(s: u64, p: usize) -> f64 {
    if (s & below(p)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `a†_p a_q` on a single-spin string. Returns the target string and sign.
#[inline]
pub(crate) fn string_excite(s: u64, p: usize, q: usize) -> Option<(u64, f64)> {
    if s & (1 << q) == 0 {
        return None;
    }
    let removed = s & !(1 << q);
    if removed & (1 << p) != 0 {
        return None;
    }
    let sign = parity_below(s, q) * parity_below(removed, p);
    Some((removed | (1 << p), sign))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Determinant {
    pub alpha: u64,
    pub beta: u64,
}

impl Determinant {
    pub const fn new(alpha: u64, beta: u64) -> Self {
        Self { alpha, beta }
    }

    /// Lowest `n_alpha` alpha and `n_beta` beta orbitals occupied.
    pub fn aufbau(n_alpha: usize, n_beta: usize) -> Self {
        Self {
            alpha: below(n_alpha),
            beta: below(n_beta),
        }
    }

    pub fn from_orbitals(alpha: &[usize], beta: &[usize]) -> Self {
        Self {
            alpha: alpha.iter().fold(0, |s, &p| s | 1 << p),
            beta: beta.iter().fold(0, |s, &p| s | 1 << p),
        }
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha.count_ones() as usize
    }

    pub fn n_beta(&self) -> usize {
        self.beta.count_ones() as usize
    }

    pub fn is_occupied(&self, so: SpinOrbital) -> bool {
        let s = match so.spin {
            Spin::Alpha => self.alpha,
            Spin::Beta => self.beta,
        };
        s & (1 << so.orbital) != 0
    }

    /// Occupied spin orbitals in mode order.
    pub fn occupied(&self) -> Vec<SpinOrbital> {
        bits(self.alpha)
            .map(SpinOrbital::alpha)
            .chain(bits(self.beta).map(SpinOrbital::beta))
            .collect()
    }

    #[inline]
    fn sign_before(&self, so: SpinOrbital) -> f64 {
        match so.spin {
            Spin::Alpha => parity_below(self.alpha, so.orbital),
            Spin::Beta => {
                let a = if self.alpha.count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                a * parity_below(self.beta, so.orbital)
            }
        }
    }

    /// `a_so |self⟩`.
    pub fn annihilate(&self, so: SpinOrbital) -> Option<(Determinant, f64)> {
        if !self.is_occupied(so) {
            return None;
        }
        let sign = self.sign_before(so);
        let mut d = *self;
        match so.spin {
            Spin::Alpha => d.alpha &= !(1 << so.orbital),
            Spin::Beta => d.beta &= !(1 << so.orbital),
        }
        Some((d, sign))
    }

    /// `a†_so |self⟩`.
    pub fn create(&self, so: SpinOrbital) -> Option<(Determinant, f64)> {
        if self.is_occupied(so) {
            return None;
        }
        let sign = self.sign_before(so);
        let mut d = *self;
        match so.spin {
            Spin::Alpha => d.alpha |= 1 << so.orbital,
            Spin::Beta => d.beta |= 1 << so.orbital,
        }
        Some((d, sign))
    }

    /// `a†_a a_i |self⟩`.
    pub fn single(&self, i: SpinOrbital, a: SpinOrbital) -> Option<(Determinant, f64)> {
        let (d, s1) = self.annihilate(i)?;
        let (d, s2) = d.create(a)?;
        Some((d, s1 * s2))
    }

    /// `a†_a a†_b a_j a_i |self⟩`.
    pub fn double(&self, i: SpinOrbital, j: SpinOrbital, a: SpinOrbital, b: SpinOrbital) -> Option<(Determinant, f64)> {
        let (d, s1) = self.annihilate(i)?;
        let (d, s2) = d.annihilate(j)?;
        let (d, s3) = d.create(b)?;
        let (d, s4) = d.create(a)?;
        Some((d, s1 * s2 * s3 * s4))
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{:b},{:b}>", self.alpha, self.beta)
    }
}

/// Indices of the set bits of `s`, ascending.
pub fn bits(mut s: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if s == 0 {
            None
        } else {
            let p = s.trailing_zeros() as usize;
            s &= s - 1;
            Some(p)
        }
    })
}

/// All strings of `n_orbitals` bits with `n_electrons` set, ascending.
pub fn strings(n_orbitals: usize, n_electrons: usize) -> Vec<u64> {
    if n_electrons > n_orbitals {
        return Vec::new();
    }
    if n_electrons == 0 {
        return vec![0];
    }
    let limit: u128 = 1u128 << n_orbitals;
    let mut out = Vec::new();
    let mut s: u64 = below(n_electrons);
    loop {
        out.push(s);
        // Gosper's hack: next integer with the same popcount
        let c = s & s.wrapping_neg();
        let r = s.wrapping_add(c);
        if r == 0 {
            break;
        }
        let next = (((r ^ s) >> 2) / c) | r;
        if (next as u128) >= limit {
            break;
        }
        s = next;
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
