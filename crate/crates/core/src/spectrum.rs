//! Hamiltonian spectra: distinct energy levels with integer multiplicities.
//!
//! Spectra are the only footprint a Hamiltonian leaves in the analytic
//! engines. Levels are stored de-duplicated (degeneracy lives in the
//! multiplicities) and are carried both as floats and as exact rationals;
//! the exact view feeds the residue engine, which cannot tolerate rounding.

use std::path::Path;

use num::rational::BigRational;
use num::traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::{binomial_u128, format_exact, parse_exact, rational_from_f64};

/// Relative tolerance (times the largest gap) below which numerically
/// coincident levels are merged. Near-coincident floats would blow up the
/// 1/ΔE powers in the residue coefficients.
pub const MERGE_TOLERANCE_REL: f64 = 1e-12;

/// An ascending list of distinct energy levels with multiplicities.
///
/// Invariants enforced at construction: levels strictly increasing, all
/// multiplicities ≥ 1, total dimension ≥ 2. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    levels: Vec<f64>,
    exact_levels: Vec<BigRational>,
    multiplicities: Vec<u64>,
    dim: u64,
}

impl Spectrum {
    /// Build from float levels. Every finite float is promoted to the exact
    /// rational it represents, so the exact evaluators stay available.
    pub fn new(levels: Vec<f64>, multiplicities: Vec<u64>) -> Result<Self> {
        let exact = levels
            .iter()
            .map(|&e| rational_from_f64(e))
            .collect::<Result<Vec<_>>>()?;
        Self::from_exact(exact, multiplicities)
    }

    /// Build from exact rational levels.
    pub fn from_exact(levels: Vec<BigRational>, multiplicities: Vec<u64>) -> Result<Self> {
        if levels.len() != multiplicities.len() {
            return Err(Error::InvalidSpectrum(format!(
                "{} levels but {} multiplicities",
                levels.len(),
                multiplicities.len()
            )));
        }
        if levels.is_empty() {
            return Err(Error::InvalidSpectrum("empty level list".into()));
        }
        for w in levels.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidSpectrum(format!(
                    "levels not strictly increasing: {} then {}",
                    format_exact(&w[0]),
                    format_exact(&w[1])
                )));
            }
        }
        if multiplicities.iter().any(|&n| n == 0) {
            return Err(Error::InvalidSpectrum("zero multiplicity".into()));
        }
        let dim = multiplicities.iter().try_fold(0u64, |acc, &n| {
            acc.checked_add(n)
                .ok_or_else(|| Error::OverflowGuard("total dimension exceeds u64".into()))
        })?;
        if dim < 2 {
            return Err(Error::InvalidDimension(format!("dimension {dim} < 2")));
        }
        let floats: Vec<f64> = levels
            .iter()
            .map(|r| {
                r.to_f64()
                    .ok_or_else(|| Error::OverflowGuard("level outside f64 range".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            levels: floats,
            exact_levels: levels,
            multiplicities,
            dim,
        })
    }

    /// Merge levels separated by less than `tol` (absolute), summing their
    /// multiplicities. The lowest member of each cluster is kept as the
    /// representative. Input pairs must be sorted ascending.
    pub fn from_unmerged(
        mut pairs: Vec<(BigRational, u64)>,
        tol: f64,
    ) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut levels: Vec<BigRational> = Vec::new();
        let mut mults: Vec<u64> = Vec::new();
        for (e, n) in pairs {
            match levels.last() {
                Some(last) if near(last, &e, tol) => *mults.last_mut().unwrap() += n,
                _ => {
                    levels.push(e);
                    mults.push(n);
                }
            }
        }
        Self::from_exact(levels, mults)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn exact_levels(&self) -> &[BigRational] {
        &self.exact_levels
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    /// Number of distinct levels D.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Total Hilbert-space dimension d = Σ n_k.
    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0]
    }

    pub fn max_energy(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    pub fn span(&self) -> f64 {
        self.max_energy() - self.ground_energy()
    }

    /// Levels repeated according to multiplicity, ascending, length d.
    pub fn flattened(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim as usize);
        for (e, &n) in self.levels.iter().zip(&self.multiplicities) {
            out.extend(std::iter::repeat(*e).take(n as usize));
        }
        out
    }

    /// Translate all levels so the ground state sits at zero. Idempotent and
    /// gap-preserving.
    pub fn shift_to_ground(&self) -> Spectrum {
        let e0 = self.exact_levels[0].clone();
        let levels = self
            .exact_levels
            .iter()
            .map(|e| e - &e0)
            .collect::<Vec<_>>();
        Spectrum::from_exact(levels, self.multiplicities.clone())
            .expect("shift preserves validity")
    }

    /// Map each level through an exact function, keeping multiplicities.
    /// Fails if the image is no longer strictly increasing.
    pub fn map_levels<F>(&self, f: F) -> Result<Spectrum>
    where
        F: Fn(&BigRational) -> BigRational,
    {
        let levels = self.exact_levels.iter().map(&f).collect::<Vec<_>>();
        Spectrum::from_exact(levels, self.multiplicities.clone())
    }

    /// Stable content hash used to key coefficient caches and provenance
    /// records.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for (e, n) in self.exact_levels.iter().zip(&self.multiplicities) {
            h.update(format_exact(e).as_bytes());
            h.update(b":");
            h.update(n.to_string().as_bytes());
            h.update(b";");
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Load a custom spectrum from JSON: `{"levels": [...], "multiplicities":
    /// [...]}`. Levels may be numbers or exact `"p/q"` strings.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            levels: Vec<serde_json::Value>,
            multiplicities: Vec<u64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        let levels = raw
            .levels
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => parse_exact(s),
                serde_json::Value::Number(n) => {
                    let x = n
                        .as_f64()
                        .ok_or_else(|| Error::InvalidArgument(format!("bad level {n}")))?;
                    rational_from_f64(x)
                }
                other => Err(Error::InvalidArgument(format!("bad level entry {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs = levels.into_iter().zip(raw.multiplicities).collect();
        Spectrum::from_unmerged(pairs, 0.0)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct Raw<'a> {
            levels: Vec<String>,
            multiplicities: &'a [u64],
        }
        serde_json::to_string_pretty(&Raw {
            levels: self.exact_levels.iter().map(format_exact).collect(),
            multiplicities: &self.multiplicities,
        })
        .expect("serializing a spectrum cannot fail")
    }
}

fn near(a: &BigRational, b: &BigRational, tol: f64) -> bool {
    if a == b {
        return true;
    }
    if tol == 0.0 {
        return false;
    }
    (b - a).abs().to_f64().map(|d| d <= tol).unwrap_or(false)
}

/// Built-in model families plus user-supplied spectra.
///
/// Scalar parameters keep their exact rational values (decimal CLI input is
/// parsed exactly) so that model rebuilds under perturbed parameters stay in
/// the exact domain.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// Equally spaced non-degenerate ladder E_k = ħω·k, k = 0..d-1.
    Linear { d: u64, hbar_omega: BigRational },
    /// N non-interacting spin-1/2 particles in a field B.
    SpinChain { n: u64, b: BigRational },
    /// Curie-Weiss Heisenberg model: N spins, field B, coupling J.
    CurieWeiss {
        n: u64,
        b: BigRational,
        j: BigRational,
    },
    Custom(Spectrum),
}

impl ModelSpec {
    pub fn build(&self) -> Result<Spectrum> {
        match self {
            ModelSpec::Linear { d, hbar_omega } => linear_spectrum_exact(*d, hbar_omega.clone()),
            ModelSpec::SpinChain { n, b } => noninteracting_spins_exact(*n, b.clone()),
            ModelSpec::CurieWeiss { n, b, j } => {
                curie_weiss_exact(*n, b.clone(), j.clone())
            }
            ModelSpec::Custom(s) => Ok(s.clone()),
        }
    }

    /// Same model with the magnetic field shifted by an exact amount.
    /// Only the spin models expose a field.
    pub fn with_field_shift(&self, delta: &BigRational) -> Result<ModelSpec> {
        match self {
            ModelSpec::SpinChain { n, b } => Ok(ModelSpec::SpinChain {
                n: *n,
                b: b + delta,
            }),
            ModelSpec::CurieWeiss { n, b, j } => Ok(ModelSpec::CurieWeiss {
                n: *n,
                b: b + delta,
                j: j.clone(),
            }),
            _ => Err(Error::InvalidArgument(
                "field shift requires a spin-chain or Curie-Weiss model".into(),
            )),
        }
    }

    /// Number of spins for the spin models.
    pub fn num_spins(&self) -> Option<u64> {
        match self {
            ModelSpec::SpinChain { n, .. } | ModelSpec::CurieWeiss { n, .. } => Some(*n),
            _ => None,
        }
    }
}

/// E_k = ħω·k for k = 0..d-1, all multiplicities one.
pub fn linear_spectrum(d: u64, hbar_omega: f64) -> Result<Spectrum> {
    if !(hbar_omega > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "level spacing must be positive, got {hbar_omega}"
        )));
    }
    linear_spectrum_exact(d, rational_from_f64(hbar_omega)?)
}

pub fn linear_spectrum_exact(d: u64, hbar_omega: BigRational) -> Result<Spectrum> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("linear spectrum needs d ≥ 2, got {d}")));
    }
    if !hbar_omega.is_positive() {
        return Err(Error::InvalidArgument("level spacing must be positive".into()));
    }
    let levels = (0..d)
        .map(|k| &hbar_omega * BigRational::from_integer(k.into()))
        .collect();
    Spectrum::from_exact(levels, vec![1; d as usize])
}

/// N non-interacting spin-1/2 particles: E_k = -(N/2 - k)B with binomial
/// multiplicities, D = N+1 distinct levels, dim 2^N.
pub fn noninteracting_spins(n: u64, b: f64) -> Result<Spectrum> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("field must be positive, got {b}")));
    }
    noninteracting_spins_exact(n, rational_from_f64(b)?)
}

pub fn noninteracting_spins_exact(n: u64, b: BigRational) -> Result<Spectrum> {
    if n < 1 {
        return Err(Error::InvalidSize("spin chain needs N ≥ 1".into()));
    }
    if n > 62 {
        return Err(Error::OverflowGuard(format!(
            "N = {n} > 62: binomial multiplicities exceed 64-bit"
        )));
    }
    if !b.is_positive() {
        return Err(Error::InvalidArgument("field must be positive".into()));
    }
    let half = BigRational::new(1.into(), 2.into());
    let levels = (0..=n)
        .map(|k| {
            // E_k = -(N/2 - k) B
            let coeff = BigRational::from_integer(k.into()) - &half * BigRational::from_integer(n.into());
            coeff * &b
        })
        .collect::<Vec<_>>();
    let mults = (0..=n)
        .map(|k| {
            let m = binomial_u128(n, k)?;
            u64::try_from(m)
                .map_err(|_| Error::OverflowGuard(format!("binomial({n},{k}) exceeds u64")))
        })
        .collect::<Result<Vec<_>>>()?;
    Spectrum::from_exact(levels, mults)
}

/// Curie-Weiss Heisenberg levels E_{s,m} = -B m - (J/2N)(s(s+1) - 3N/4).
///
/// s runs from 0 (even N) or 1/2 (odd N) up to N/2, m from -s to s; each
/// (s, m) energy carries the multiplet count n_s = C(N, N/2-s) - C(N, N/2-s-1).
/// Numerically coincident energies are merged.
pub fn curie_weiss(n: u64, b: f64, j: f64) -> Result<Spectrum> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("field must be positive, got {b}")));
    }
    if !j.is_finite() {
        return Err(Error::InvalidArgument("coupling must be finite".into()));
    }
    curie_weiss_exact(n, rational_from_f64(b)?, rational_from_f64(j)?)
}

pub fn curie_weiss_exact(n: u64, b: BigRational, j: BigRational) -> Result<Spectrum> {
    if n < 1 {
        return Err(Error::InvalidSize("Curie-Weiss needs N ≥ 1".into()));
    }
    if n > 62 {
        return Err(Error::OverflowGuard(format!(
            "N = {n} > 62: multiplet counts exceed 64-bit"
        )));
    }
    if !b.is_positive() {
        return Err(Error::InvalidArgument("field must be positive".into()));
    }
    // Work with twice the spin quantum numbers so everything stays integer.
    let two_s_min = if n % 2 == 0 { 0 } else { 1 };
    let mut pairs: Vec<(BigRational, u64)> = Vec::new();
    let mut max_gap = 0.0f64;
    let mut prev: Option<f64> = None;
    let four = BigRational::from_integer(4.into());
    // J/(2N) and the constant 3N/4 inside the bracket
    let j_over_2n = &j / BigRational::from_integer((2 * n).into());
    let three_n_over_4 = BigRational::from_integer((3 * n).into()) / &four;
    let mut two_s = n as i64; // start from s = N/2 down to s_min
    while two_s >= two_s_min {
        let s_units = (n as i64 - two_s) / 2; // N/2 - s, a non-negative integer
        // n_s = C(N, N/2-s) - C(N, N/2-s-1)
        let n_s = {
            let upper = binomial_u128(n, s_units as u64)?;
            let lower = if s_units == 0 {
                0
            } else {
                binomial_u128(n, (s_units - 1) as u64)?
            };
            let diff = upper
                .checked_sub(lower)
                .ok_or_else(|| Error::InvalidSpectrum("negative multiplet count".into()))?;
            u64::try_from(diff)
                .map_err(|_| Error::OverflowGuard("multiplet count exceeds u64".into()))?
        };
        if n_s > 0 {
            // s(s+1) = (2s)(2s+2)/4
            let s_s1 = BigRational::from_integer((two_s * (two_s + 2)).into()) / &four;
            let bracket = &s_s1 - &three_n_over_4;
            let interaction = &j_over_2n * bracket;
            let mut two_m = -two_s;
            while two_m <= two_s {
                // E = -B m - (J/2N)(s(s+1) - 3N/4)
                let m = BigRational::from_integer(two_m.into())
                    / BigRational::from_integer(2.into());
                let e = -(&b * m) - &interaction;
                let ef = e.to_f64().unwrap_or(f64::NAN);
                if let Some(p) = prev {
                    max_gap = max_gap.max((ef - p).abs());
                }
                prev = Some(ef);
                pairs.push((e, n_s));
                two_m += 2;
            }
        }
        two_s -= 2;
    }
    // Tolerance relative to the largest raw gap; exact duplicates always merge.
    let tol = if max_gap.is_finite() {
        MERGE_TOLERANCE_REL * max_gap
    } else {
        0.0
    };
    Spectrum::from_unmerged(pairs, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::rational::BigRational;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn linear_matches_definition() {
        let s = linear_spectrum(3, 1.0).unwrap();
        assert_eq!(s.levels(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.multiplicities(), &[1, 1, 1]);
        assert_eq!(s.dim(), 3);

        let s = linear_spectrum(2, 1.0).unwrap();
        assert_eq!(s.levels(), &[0.0, 1.0]);

        let s = linear_spectrum(6, 0.5).unwrap();
        assert_eq!(s.levels(), &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5]);

        assert!(matches!(
            linear_spectrum(1, 1.0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn spin_chain_levels_and_degeneracies() {
        let s = noninteracting_spins(2, 1.0).unwrap();
        assert_eq!(s.levels(), &[-1.0, 0.0, 1.0]);
        assert_eq!(s.multiplicities(), &[1, 2, 1]);
        assert_eq!(s.dim(), 4);

        let s = noninteracting_spins(1, 1.0).unwrap();
        assert_eq!(s.levels(), &[-0.5, 0.5]);
        assert_eq!(s.multiplicities(), &[1, 1]);

        let s = noninteracting_spins(4, 2.0).unwrap();
        assert_eq!(s.levels(), &[-4.0, -2.0, 0.0, 2.0, 4.0]);
        assert_eq!(s.multiplicities(), &[1, 4, 6, 4, 1]);
        assert_eq!(s.dim(), 16);

        assert!(matches!(noninteracting_spins(0, 1.0), Err(Error::InvalidSize(_))));
        assert!(matches!(noninteracting_spins(63, 1.0), Err(Error::OverflowGuard(_))));
    }

    #[test]
    fn curie_weiss_hand_enumeration_n2() {
        // N=2, B=1, J=1: singlet at +3/8, triplet at {-9/8, -1/8, 7/8}
        let s = curie_weiss(2, 1.0, 1.0).unwrap();
        assert_eq!(s.num_levels(), 4);
        let expect = [rat(-9, 8), rat(-1, 8), rat(3, 8), rat(7, 8)];
        assert_eq!(s.exact_levels(), &expect);
        assert_eq!(s.multiplicities(), &[1, 1, 1, 1]);
        assert_eq!(s.dim(), 4);
    }

    #[test]
    fn curie_weiss_j_zero_reduces_to_free_spins() {
        for n in 1..=4u64 {
            let cw = curie_weiss(n, 1.0, 0.0).unwrap();
            let free = noninteracting_spins(n, 1.0).unwrap();
            assert_eq!(cw.exact_levels(), free.exact_levels());
            assert_eq!(cw.multiplicities(), free.multiplicities());
        }
    }

    #[test]
    fn curie_weiss_n3_dimension_counts() {
        let s = curie_weiss(3, 1.0, 0.5).unwrap();
        assert_eq!(s.dim(), 8);
        // s=3/2 multiplet (n_s=1) at -m-1/8; s=1/2 (n_s=2) at -m+1/8
        let expect = [
            rat(-13, 8),
            rat(-5, 8),
            rat(-3, 8),
            rat(3, 8),
            rat(5, 8),
            rat(11, 8),
        ];
        assert_eq!(s.exact_levels(), &expect);
        assert_eq!(s.multiplicities(), &[1, 1, 2, 1, 2, 1]);
    }

    #[test]
    fn shift_to_ground_translates() {
        let s = Spectrum::new(vec![-1.0, 0.0, 1.0], vec![1, 2, 1]).unwrap();
        let t = s.shift_to_ground();
        assert_eq!(t.levels(), &[0.0, 1.0, 2.0]);
        assert_eq!(t.multiplicities(), &[1, 2, 1]);
        // idempotent
        assert_eq!(t.shift_to_ground().levels(), t.levels());

        let u = Spectrum::new(vec![-4.0, -2.0, 0.0, 2.0, 4.0], vec![1, 4, 6, 4, 1]).unwrap();
        assert_eq!(u.shift_to_ground().levels(), &[0.0, 2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn json_round_trip_with_rationals() {
        let text = r#"{"levels": [0, "1/3", 0.5], "multiplicities": [1, 2, 1]}"#;
        let s = Spectrum::from_json_str(text).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.exact_levels()[1], rat(1, 3));
        let back = Spectrum::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn invalid_spectra_are_rejected() {
        assert!(Spectrum::new(vec![0.0, 0.0], vec![1, 1]).is_err());
        assert!(Spectrum::new(vec![1.0, 0.0], vec![1, 1]).is_err());
        assert!(Spectrum::new(vec![0.0, 1.0], vec![1, 0]).is_err());
        assert!(Spectrum::new(vec![0.0], vec![1]).is_err());
    }

    #[test]
    fn content_hash_tracks_content() {
        let a = linear_spectrum(3, 1.0).unwrap();
        let b = linear_spectrum(3, 1.0).unwrap();
        let c = linear_spectrum(3, 0.5).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
