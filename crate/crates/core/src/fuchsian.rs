//! Poincaré theta series for a rank-2 free Fuchsian group.
//!
//! The generators are
//!
//! ```text
//! g1(z) = (z + s) / (s z + 1),     g2(z) = (z + i s) / (-i s z + 1),   s = sqrt(2)/2,
//! ```
//!
//! whose quotient is a once-punctured torus. Their isometric circles
//! `|z -+ sqrt 2| = 1`, `|z -+ i sqrt 2| = 1` bound the fundamental domain
//! around the origin.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_WORD_LENGTH: usize = 6;

/// Cap on the number of enumerated group elements.
pub const MAX_WORDS: usize = 1 << 22;

/// Reduction steps allowed when pulling a point into the fundamental domain.
pub const MAX_REDUCTION_STEPS: usize = 100;

/// Radius at which points on or beyond the unit circle are sampled.
pub const BOUNDARY_RADIUS: f64 = 1.0 - 1e-9;

/// Linear-fractional map `(a z + b) / (c z + d)` normalized to `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { a: one, b: zero, c: zero, d: one }
    }

    /// Builds the map and rescales the matrix to unit determinant.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            return Err(Error::Degenerate("singular Mobius matrix".into()));
        }
        let s = det.sqrt();
        Ok(Self { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        Mobius {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let t = self.c * z + self.d;
        1.0 / (t * t)
    }
}

/// The two generators, normalized to determinant one.
pub fn standard_generators() -> [Mobius; 2] {
    let one = Complex64::new(1.0, 0.0);
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let is = Complex64::new(0.0, FRAC_1_SQRT_2);
    [
        Mobius::new(one, s, s, one).expect("nonsingular"),
        Mobius::new(one, is, -is, one).expect("nonsingular"),
    ]
}

/// A freely reduced word in `g1, g2, g1^-1, g2^-1` and the map it denotes.
///
/// Letters are `0 = g1`, `1 = g2`, `2 = g1^-1`, `3 = g2^-1`; the map is the
/// composition left to right, `letters[0] ∘ letters[1] ∘ ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    pub letters: Vec<u8>,
    pub map: Mobius,
}

fn inverse_letter(l: u8) -> u8 {
    (l + 2) % 4
}

/// All freely reduced words of length at most `L`.
#[derive(Debug, Clone)]
pub struct GroupEnumeration {
    word_length: usize,
    generators: [Mobius; 4],
    words: Vec<Word>,
}

/// `1 + 2 (3^L - 1)` reduced words have length at most `L`.
pub fn word_count(length: usize) -> Option<usize> {
    let pow = 3usize.checked_pow(u32::try_from(length).ok()?)?;
    (pow - 1).checked_mul(2)?.checked_add(1)
}

pub fn enumerate_group(length: usize) -> Result<GroupEnumeration> {
    match word_count(length) {
        Some(c) if c <= MAX_WORDS => {}
        _ => {
            return Err(Error::Resource(format!(
                "word length {length} exceeds the cap of {MAX_WORDS} group elements"
            )))
        }
    }
    let [g1, g2] = standard_generators();
    let generators = [g1, g2, g1.inverse(), g2.inverse()];

    let mut words = vec![Word { letters: Vec::new(), map: Mobius::identity() }];
    let mut frontier = 0..1;
    for _ in 0..length {
        let start = words.len();
        for i in frontier.clone() {
            let last = words[i].letters.last().copied();
            for l in 0..4u8 {
                if Some(inverse_letter(l)) == last {
                    continue;
                }
                let mut letters = words[i].letters.clone();
                letters.push(l);
                let map = words[i].map.compose(&generators[l as usize]);
                words.push(Word { letters, map });
            }
        }
        frontier = start..words.len();
    }
    Ok(GroupEnumeration { word_length: length, generators, words })
}

impl GroupEnumeration {
    pub fn word_length(&self) -> usize {
        self.word_length
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `g1, g2, g1^-1, g2^-1`.
    pub fn generators(&self) -> &[Mobius; 4] {
        &self.generators
    }

    /// Truncated series `sum over words of gamma'(z)^2`, evaluated as is.
    pub fn theta_truncated(&self, z: Complex64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for w in &self.words {
            let t = w.map.c * z + w.map.d;
            let t2 = t * t;
            sum += 1.0 / (t2 * t2);
        }
        sum
    }

    /// Moves `z` toward the origin by generators until no generator lowers
    /// `|z|`. Returns the reduced point and the accumulated map `h` with
    /// `h(z) = reduced`.
    pub fn reduce(&self, z: Complex64) -> (Complex64, Mobius) {
        let mut h = Mobius::identity();
        let mut cur = z;
        for _ in 0..MAX_REDUCTION_STEPS {
            let (best, image) = self
                .generators
                .iter()
                .map(|g| (g, g.apply(cur)))
                .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .expect("four generators");
            if image.norm() >= cur.norm() * (1.0 - 1e-14) {
                break;
            }
            h = best.compose(&h);
            cur = image;
        }
        (cur, h)
    }
}

fn check_disk(z: Complex64) -> Result<()> {
    if !(z.norm() < 1.0) {
        return Err(Error::Domain(format!("theta series needs |z| < 1, got |z| = {}", z.norm())));
    }
    Ok(())
}

/// Theta series with fundamental-domain reduction: the truncated sum is only
/// evaluated at the reduced point `h(z)` and transported back through
/// `Theta(z) = Theta(h(z)) h'(z)^2`.
pub fn theta_series(group: &GroupEnumeration, z: Complex64) -> Result<Complex64> {
    check_disk(z)?;
    let (reduced, h) = group.reduce(z);
    let d = h.derivative(z);
    Ok(group.theta_truncated(reduced) * d * d)
}

/// Teichmüller-type Beltrami differential `c conj(Theta) / |Theta|`.
///
/// It has constant modulus `|c|` and satisfies
/// `mu(gamma z) conj(gamma'(z)) / gamma'(z) = mu(z)` for every group element.
pub fn fuchsian_mu(c: f64, group: &GroupEnumeration, z: Complex64) -> Result<Complex64> {
    if !(c.abs() < 1.0) {
        return Err(Error::InadmissibleField(format!("|c| = {} >= 1", c.abs())));
    }
    let theta = theta_series(group, z)?;
    let modulus = theta.norm();
    if modulus < 1e-12 {
        return Err(Error::Domain(format!("theta series vanishes at z = {z}")));
    }
    Ok(c * theta.conj() / modulus)
}
