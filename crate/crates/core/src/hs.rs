//! Hilbert-Schmidt integrated density of states as an exact piecewise
//! polynomial of degree d²-1.
//!
//! For each distinct level k the residue of the partition-function pole
//! contributes terms g_{k,m} (E-E_k)^{m+d(d-n_k)} / (m+d(d-n_k))!. The
//! g_{k,m} are Taylor coefficients of Π_{j≠k} (ΔE_jk + z)^{-n_j d} divided
//! by (n_k d - m - 1)!; they are computed by the logarithmic-derivative
//! power-sum recurrence rather than by enumerating integer compositions,
//! which would be exponential in the number of levels.
//!
//! The raw (unnormalized) polynomial is pinned so that its plateau — the
//! constant value for E ≥ E_max — equals 1/(d²-1)! independently of the
//! spectrum. All E-dependence above the top level cancels exactly; that
//! cancellation exercises every coefficient and is the module's strongest
//! self-test. Because the plateau is catastrophic cancellation territory in
//! floating point, exact rational arithmetic is the default; floats are an
//! explicit opt-in.

use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{factorials, format_exact, ln_rational, parse_exact, rational_from_f64};
use crate::spectrum::Spectrum;

/// Arithmetic backing for a coefficient table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsMode {
    /// Exact rationals end to end (default).
    Exact,
    /// Double precision; fails loudly on overflow.
    Float,
}

#[derive(Debug, Clone)]
struct LevelTerms {
    /// Lowest exponent for this level: d(d - n_k).
    exponent_base: usize,
    /// g_{k,m} for m = 0..n_k d, exact.
    g: Vec<BigRational>,
    /// g_{k,m} / (exponent_base + m)!, the coefficient actually summed.
    term: Vec<BigRational>,
}

#[derive(Debug, Clone)]
struct LevelTermsF64 {
    exponent_base: usize,
    term: Vec<f64>,
}

type LevelCell = std::sync::OnceLock<std::result::Result<LevelTerms, String>>;

#[derive(Debug)]
enum Backend {
    /// Exact rationals; per-level coefficients are built lazily because an
    /// evaluation at E only touches levels with E_k ≤ E, and the
    /// perturbation engine lives almost entirely near the ground shell.
    Exact {
        fact: Vec<BigInt>,
        cells: Vec<LevelCell>,
        plateau: std::sync::OnceLock<std::result::Result<BigRational, String>>,
    },
    Float {
        levels: Vec<LevelTermsF64>,
        plateau: f64,
    },
}

impl Clone for Backend {
    fn clone(&self) -> Self {
        match self {
            Backend::Exact { fact, cells, plateau } => {
                let new_cells: Vec<LevelCell> = cells
                    .iter()
                    .map(|c| {
                        let cell = LevelCell::new();
                        if let Some(v) = c.get() {
                            let _ = cell.set(v.clone());
                        }
                        cell
                    })
                    .collect();
                let new_plateau = std::sync::OnceLock::new();
                if let Some(v) = plateau.get() {
                    let _ = new_plateau.set(v.clone());
                }
                Backend::Exact {
                    fact: fact.clone(),
                    cells: new_cells,
                    plateau: new_plateau,
                }
            }
            Backend::Float { levels, plateau } => Backend::Float {
                levels: levels.clone(),
                plateau: *plateau,
            },
        }
    }
}

/// Residue coefficients for one spectrum, plus the evaluation machinery.
#[derive(Debug, Clone)]
pub struct HsCoefficientTable {
    spectrum: Spectrum,
    backend: Backend,
}

/// Build the exact coefficient table (default mode).
pub fn hs_coefficients(spectrum: &Spectrum) -> Result<HsCoefficientTable> {
    build(spectrum, HsMode::Exact)
}

/// Build a double-precision table (explicit opt-in).
pub fn hs_coefficients_float(spectrum: &Spectrum) -> Result<HsCoefficientTable> {
    build(spectrum, HsMode::Float)
}

fn build(spectrum: &Spectrum, mode: HsMode) -> Result<HsCoefficientTable> {
    let d = spectrum.dim();
    let d_sq = d
        .checked_mul(d)
        .filter(|&s| s <= 1 << 16)
        .ok_or_else(|| Error::OverflowGuard(format!("d² too large for the residue engine (d = {d})")))?
        as usize;
    match mode {
        HsMode::Exact => Ok(HsCoefficientTable {
            spectrum: spectrum.clone(),
            backend: Backend::Exact {
                fact: factorials(d_sq),
                cells: (0..spectrum.num_levels()).map(|_| LevelCell::new()).collect(),
                plateau: std::sync::OnceLock::new(),
            },
        }),
        HsMode::Float => {
            let float = build_float(spectrum, d_sq)?;
            let plateau = eval_float(&float, spectrum, spectrum.max_energy());
            if !plateau.is_finite() || plateau <= 0.0 {
                return Err(Error::PrecisionFailure(format!(
                    "float plateau evaluated to {plateau}"
                )));
            }
            Ok(HsCoefficientTable {
                spectrum: spectrum.clone(),
                backend: Backend::Float {
                    levels: float,
                    plateau,
                },
            })
        }
    }
}

fn build_exact_level(spectrum: &Spectrum, fact: &[BigInt], k: usize) -> Result<LevelTerms> {
    let d = spectrum.dim();
    let lv = spectrum.exact_levels();
    let n = spectrum.multiplicities();
    {
        let nk_d = (n[k] * d) as usize;
        let exponent_base = (d * (d - n[k])) as usize;
        // Per other level: (gap ΔE_jk = E_j - E_k, weight n_j d).
        let mut gaps: Vec<(BigRational, usize)> = Vec::with_capacity(lv.len() - 1);
        for j in 0..lv.len() {
            if j == k {
                continue;
            }
            let gap = &lv[j] - &lv[k];
            if gap.is_zero() {
                return Err(Error::DegenerateGap(
                    spectrum.levels()[j],
                    spectrum.levels()[k],
                ));
            }
            gaps.push((gap, (n[j] * d) as usize));
        }
        // c_0 = Π ΔE^{-n_j d}
        let mut c0 = BigRational::one();
        for (gap, w) in &gaps {
            c0 *= gap.pow(-(*w as i32));
        }
        // Power sums t_r = (-1)^{r+1} Σ_j n_j d / ΔE^{r+1} drive
        // (m+1) c_{m+1} = Σ_i c_i t_{m-i}.
        let mut inv: Vec<BigRational> = gaps.iter().map(|(g, _)| g.recip()).collect();
        let mut t: Vec<BigRational> = Vec::with_capacity(nk_d.saturating_sub(1));
        for r in 0..nk_d.saturating_sub(1) {
            let mut s = BigRational::zero();
            for ((_, w), ipow) in gaps.iter().zip(&inv) {
                s += BigRational::from_integer((*w).into()) * ipow;
            }
            if r % 2 == 0 {
                s = -s;
            }
            t.push(s);
            for (g, ipow) in gaps.iter().map(|(g, _)| g).zip(inv.iter_mut()) {
                *ipow /= g;
            }
        }
        let mut c: Vec<BigRational> = Vec::with_capacity(nk_d);
        c.push(c0);
        for m in 0..nk_d - 1 {
            let mut acc = BigRational::zero();
            for i in 0..=m {
                acc += &c[i] * &t[m - i];
            }
            c.push(acc / BigRational::from_integer((m as i64 + 1).into()));
        }
        let mut g = Vec::with_capacity(nk_d);
        let mut term = Vec::with_capacity(nk_d);
        for (m, cm) in c.into_iter().enumerate() {
            let gkm = &cm / BigRational::from_integer(fact[nk_d - m - 1].clone());
            term.push(&gkm / BigRational::from_integer(fact[exponent_base + m].clone()));
            g.push(gkm);
        }
        Ok(LevelTerms {
            exponent_base,
            g,
            term,
        })
    }
}

fn build_float(spectrum: &Spectrum, d_sq: usize) -> Result<Vec<LevelTermsF64>> {
    let d = spectrum.dim();
    let lv = spectrum.levels();
    let n = spectrum.multiplicities();
    let mut ln_fact = vec![0.0f64; d_sq + 1];
    for i in 1..=d_sq {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let mut out = Vec::with_capacity(lv.len());
    for k in 0..lv.len() {
        let nk_d = (n[k] * d) as usize;
        let exponent_base = (d * (d - n[k])) as usize;
        let gaps: Vec<(f64, f64)> = (0..lv.len())
            .filter(|&j| j != k)
            .map(|j| (lv[j] - lv[k], (n[j] * d) as f64))
            .collect();
        let mut c0 = 1.0f64;
        for (gap, w) in &gaps {
            c0 *= gap.powi(-(*w as i32));
        }
        let mut inv: Vec<f64> = gaps.iter().map(|(g, _)| 1.0 / g).collect();
        let mut t = Vec::with_capacity(nk_d.saturating_sub(1));
        for r in 0..nk_d.saturating_sub(1) {
            let mut s = 0.0;
            for ((_, w), ipow) in gaps.iter().zip(&inv) {
                s += w * ipow;
            }
            t.push(if r % 2 == 0 { -s } else { s });
            for ((g, _), ipow) in gaps.iter().zip(inv.iter_mut()) {
                *ipow /= g;
            }
        }
        let mut c = Vec::with_capacity(nk_d);
        c.push(c0);
        for m in 0..nk_d - 1 {
            let mut acc = 0.0;
            for i in 0..=m {
                acc += c[i] * t[m - i];
            }
            c.push(acc / (m as f64 + 1.0));
        }
        let term: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(m, cm)| {
                // g / ((n_k d - m - 1)! (base+m)!) via logs to dodge overflow
                let ln_scale = ln_fact[nk_d - m - 1] + ln_fact[exponent_base + m];
                let sign = cm.signum();
                sign * (cm.abs().ln() - ln_scale).exp()
            })
            .collect();
        if term.iter().any(|x| !x.is_finite() && *x != 0.0) || term.iter().any(|x| x.is_nan()) {
            return Err(Error::PrecisionFailure(
                "residue coefficients overflow f64; use exact mode".into(),
            ));
        }
        out.push(LevelTermsF64 {
            exponent_base,
            term,
        });
    }
    Ok(out)
}

fn level_omega_exact(lt: &LevelTerms, x: &BigRational) -> BigRational {
    // Horner in x, then scale by x^base.
    let mut acc = BigRational::zero();
    for c in lt.term.iter().rev() {
        acc = acc * x + c;
    }
    acc * x.pow(lt.exponent_base as i32)
}

fn level_density_exact(lt: &LevelTerms, x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for (m, c) in lt.term.iter().enumerate().rev() {
        let q = BigRational::from_integer(((lt.exponent_base + m) as i64).into());
        acc = acc * x + c * q;
    }
    acc * x.pow(lt.exponent_base as i32 - 1)
}

fn eval_float(levels: &[LevelTermsF64], spectrum: &Spectrum, e: f64) -> f64 {
    let lv = spectrum.levels();
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    for (k, lt) in levels.iter().enumerate() {
        if lv[k] > e {
            continue;
        }
        let x = e - lv[k];
        let mut acc = 0.0f64;
        for c in lt.term.iter().rev() {
            acc = acc * x + c;
        }
        let v = acc * x.powi(lt.exponent_base as i32);
        let t = total + v;
        comp += if total.abs() >= v.abs() {
            (total - t) + v
        } else {
            (v - t) + total
        };
        total = t;
    }
    total + comp
}

fn eval_float_density(levels: &[LevelTermsF64], spectrum: &Spectrum, e: f64) -> f64 {
    let lv = spectrum.levels();
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    for (k, lt) in levels.iter().enumerate() {
        if lv[k] > e {
            continue;
        }
        let x = e - lv[k];
        let mut acc = 0.0f64;
        for (m, c) in lt.term.iter().enumerate().rev() {
            acc = acc * x + c * (lt.exponent_base + m) as f64;
        }
        let v = acc * x.powi(lt.exponent_base as i32 - 1);
        let t = total + v;
        comp += if total.abs() >= v.abs() {
            (total - t) + v
        } else {
            (v - t) + total
        };
        total = t;
    }
    total + comp
}

impl HsCoefficientTable {
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.backend, Backend::Exact { .. })
    }

    /// Coefficients for one distinct level, built on first use.
    fn level(&self, k: usize) -> Result<&LevelTerms> {
        match &self.backend {
            Backend::Exact { fact, cells, .. } => cells[k]
                .get_or_init(|| {
                    build_exact_level(&self.spectrum, fact, k).map_err(|e| e.to_string())
                })
                .as_ref()
                .map_err(|e| Error::InvalidSpectrum(e.clone())),
            Backend::Float { .. } => Err(Error::InvalidArgument(
                "table was built in float mode".into(),
            )),
        }
    }

    /// Number of coefficients stored for distinct level `k` (equals n_k d).
    pub fn coefficient_count(&self, k: usize) -> usize {
        (self.spectrum.multiplicities()[k] * self.spectrum.dim()) as usize
    }

    /// Highest polynomial exponent across all levels (equals d²-1).
    pub fn max_exponent(&self) -> usize {
        let d = self.spectrum.dim();
        (0..self.spectrum.num_levels())
            .map(|k| {
                let n_k = self.spectrum.multiplicities()[k];
                (d * (d - n_k) + n_k * d) as usize - 1
            })
            .max()
            .unwrap()
    }

    /// Raw coefficients g_{k,m} (exact tables only).
    pub fn g_exact(&self, k: usize) -> Result<Vec<BigRational>> {
        Ok(self.level(k)?.g.clone())
    }

    /// The raw plateau value Ω_raw(E ≥ E_max). In exact mode this is an
    /// exact rational equal to 1/(d²-1)! for every spectrum.
    pub fn plateau_raw_exact(&self) -> Result<&BigRational> {
        match &self.backend {
            Backend::Exact { plateau, .. } => plateau
                .get_or_init(|| {
                    let top = rational_from_f64(self.spectrum.max_energy())
                        .map_err(|e| e.to_string())?;
                    self.omega_raw_exact(&top).map_err(|e| e.to_string())
                })
                .as_ref()
                .map_err(|e| Error::InvalidSpectrum(e.clone())),
            Backend::Float { .. } => Err(Error::InvalidArgument(
                "table was built in float mode".into(),
            )),
        }
    }

    pub fn plateau_raw(&self) -> f64 {
        match &self.backend {
            Backend::Exact { .. } => self
                .plateau_raw_exact()
                .ok()
                .and_then(|p| p.to_f64())
                .unwrap_or(f64::NAN),
            Backend::Float { plateau, .. } => *plateau,
        }
    }

    /// Raw integrated density of states at exact `e`.
    pub fn omega_raw_exact(&self, e: &BigRational) -> Result<BigRational> {
        let mut total = BigRational::zero();
        for k in 0..self.spectrum.num_levels() {
            let ek = &self.spectrum.exact_levels()[k];
            if ek > e {
                break;
            }
            let x = e - ek;
            total += level_omega_exact(self.level(k)?, &x);
        }
        Ok(total)
    }

    pub fn density_raw_exact(&self, e: &BigRational) -> Result<BigRational> {
        let mut total = BigRational::zero();
        for k in 0..self.spectrum.num_levels() {
            let ek = &self.spectrum.exact_levels()[k];
            if ek > e {
                break;
            }
            let x = e - ek;
            total += level_density_exact(self.level(k)?, &x);
        }
        Ok(total)
    }

    /// Raw Ω(E). Returns 0 below the ground level; the delta in the defining
    /// integral never fires there. Exact tables always take the exact path
    /// (the float view loses digits to plateau cancellation as d grows).
    pub fn omega_raw(&self, e: f64) -> Result<f64> {
        if e.is_nan() {
            return Err(Error::InvalidArgument("NaN energy".into()));
        }
        if e < self.spectrum.ground_energy() {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::Exact { .. } => Ok(self
                .omega_raw_exact(&rational_from_f64(e)?)?
                .to_f64()
                .unwrap_or(0.0)),
            Backend::Float { levels, .. } => Ok(eval_float(levels, &self.spectrum, e)),
        }
    }

    pub fn density_raw(&self, e: f64) -> Result<f64> {
        if e.is_nan() {
            return Err(Error::InvalidArgument("NaN energy".into()));
        }
        if e < self.spectrum.ground_energy() || e > self.spectrum.max_energy() {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::Exact { .. } => Ok(self
                .density_raw_exact(&rational_from_f64(e)?)?
                .to_f64()
                .unwrap_or(0.0)),
            Backend::Float { levels, .. } => Ok(eval_float_density(levels, &self.spectrum, e)),
        }
    }

    /// Plateau-normalized Ω ∈ [0, 1]. The exact path divides rationals, so
    /// the ratio survives even when numerator and denominator both sit far
    /// outside the f64 range.
    pub fn omega_norm(&self, e: f64) -> Result<f64> {
        if e.is_nan() {
            return Err(Error::InvalidArgument("NaN energy".into()));
        }
        if e < self.spectrum.ground_energy() {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::Exact { .. } => {
                let v = self.omega_raw_exact(&rational_from_f64(e)?)?;
                let plateau = self.plateau_raw_exact()?;
                Ok((v / plateau).to_f64().unwrap_or(0.0))
            }
            Backend::Float { levels, plateau } => {
                Ok(eval_float(levels, &self.spectrum, e) / plateau)
            }
        }
    }

    pub fn density_norm(&self, e: f64) -> Result<f64> {
        if e.is_nan() {
            return Err(Error::InvalidArgument("NaN energy".into()));
        }
        if e < self.spectrum.ground_energy() || e > self.spectrum.max_energy() {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::Exact { .. } => {
                let v = self.density_raw_exact(&rational_from_f64(e)?)?;
                let plateau = self.plateau_raw_exact()?;
                Ok((v / plateau).to_f64().unwrap_or(0.0))
            }
            Backend::Float { levels, plateau } => {
                Ok(eval_float_density(levels, &self.spectrum, e) / plateau)
            }
        }
    }

    /// ln Ω_raw(E), computed through the exact path when available so that
    /// values far below the f64 underflow threshold keep full log accuracy.
    pub fn ln_omega_raw(&self, e: f64) -> Result<f64> {
        if e.is_nan() {
            return Err(Error::InvalidArgument("NaN energy".into()));
        }
        if e <= self.spectrum.ground_energy() {
            return Ok(f64::NEG_INFINITY);
        }
        match &self.backend {
            Backend::Exact { .. } => {
                let v = self.omega_raw_exact(&rational_from_f64(e)?)?;
                if !v.is_positive() {
                    return Ok(f64::NEG_INFINITY);
                }
                ln_rational(&v)
            }
            Backend::Float { levels, .. } => {
                let v = eval_float(levels, &self.spectrum, e);
                Ok(if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
            }
        }
    }

    pub fn ln_density_raw(&self, e: f64) -> Result<f64> {
        if e.is_nan() {
            return Err(Error::InvalidArgument("NaN energy".into()));
        }
        if e <= self.spectrum.ground_energy() {
            return Ok(f64::NEG_INFINITY);
        }
        match &self.backend {
            Backend::Exact { .. } => {
                let v = self.density_raw_exact(&rational_from_f64(e)?)?;
                if !v.is_positive() {
                    return Ok(f64::NEG_INFINITY);
                }
                ln_rational(&v)
            }
            Backend::Float { levels, .. } => {
                let v = eval_float_density(levels, &self.spectrum, e);
                Ok(if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
            }
        }
    }

    /// Exact ratio Ω_raw(a)/Ω_raw(b) as a rational (exact tables only).
    pub fn omega_ratio_exact(&self, a: f64, b: f64) -> Result<BigRational> {
        let num = self.omega_raw_exact(&rational_from_f64(a)?)?;
        let den = self.omega_raw_exact(&rational_from_f64(b)?)?;
        if !den.is_positive() {
            return Err(Error::Domain("ratio denominator not positive".into()));
        }
        Ok(num / den)
    }

    /// Serialize the coefficient table (exact mode) to JSON for caching.
    pub fn to_json_string(&self) -> Result<String> {
        if !self.is_exact() {
            return Err(Error::InvalidArgument("only exact tables are cached".into()));
        }
        let mut entries = Vec::with_capacity(self.spectrum.num_levels());
        for k in 0..self.spectrum.num_levels() {
            let lt = self.level(k)?;
            entries.push(TableEntryJson {
                exponent_base: lt.exponent_base,
                g: lt.g.iter().map(format_exact).collect(),
            });
        }
        let doc = TableJson {
            spectrum_hash: self.spectrum.content_hash(),
            levels: self
                .spectrum
                .exact_levels()
                .iter()
                .map(format_exact)
                .collect(),
            multiplicities: self.spectrum.multiplicities().to_vec(),
            entries,
            plateau: format_exact(self.plateau_raw_exact()?),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Rebuild a table from its JSON cache form.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: TableJson = serde_json::from_str(text)?;
        let levels = doc
            .levels
            .iter()
            .map(|s| parse_exact(s))
            .collect::<Result<Vec<_>>>()?;
        let spectrum = Spectrum::from_exact(levels, doc.multiplicities)?;
        let d = spectrum.dim();
        let d_sq = (d * d) as usize;
        let fact = factorials(d_sq);
        let mut cells = Vec::with_capacity(doc.entries.len());
        for (k, entry) in doc.entries.iter().enumerate() {
            let nk_d = (spectrum.multiplicities()[k] * d) as usize;
            if entry.g.len() != nk_d {
                return Err(Error::InvalidArgument(format!(
                    "level {k}: expected {nk_d} coefficients, found {}",
                    entry.g.len()
                )));
            }
            let g = entry
                .g
                .iter()
                .map(|s| parse_exact(s))
                .collect::<Result<Vec<_>>>()?;
            let term = g
                .iter()
                .enumerate()
                .map(|(m, gkm)| {
                    gkm / BigRational::from_integer(fact[entry.exponent_base + m].clone())
                })
                .collect();
            let cell = LevelCell::new();
            let _ = cell.set(Ok(LevelTerms {
                exponent_base: entry.exponent_base,
                g,
                term,
            }));
            cells.push(cell);
        }
        let plateau_val = parse_exact(&doc.plateau)?;
        let plateau = std::sync::OnceLock::new();
        let _ = plateau.set(Ok(plateau_val));
        Ok(HsCoefficientTable {
            spectrum,
            backend: Backend::Exact {
                fact,
                cells,
                plateau,
            },
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    spectrum_hash: String,
    levels: Vec<String>,
    multiplicities: Vec<u64>,
    entries: Vec<TableEntryJson>,
    plateau: String,
}

#[derive(Serialize, Deserialize)]
struct TableEntryJson {
    exponent_base: usize,
    g: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{linear_spectrum, noninteracting_spins, Spectrum};
    use num::BigInt;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    /// Direct composition-sum evaluation of the g coefficients, kept
    /// independent of the recurrence so it can serve as its oracle.
    fn g_by_enumeration(spectrum: &Spectrum, k: usize, m: usize) -> BigRational {
        let d = spectrum.dim();
        let lv = spectrum.exact_levels();
        let n = spectrum.multiplicities();
        let others: Vec<usize> = (0..lv.len()).filter(|&j| j != k).collect();
        let fact = factorials((d * d) as usize + m + 2);
        let nk_d = (n[k] * d) as usize;
        let mut total = BigRational::zero();
        let mut comp = vec![0usize; others.len()];
        loop {
            if comp.iter().sum::<usize>() == m {
                let mut prod = BigRational::one();
                for (idx, &j) in others.iter().enumerate() {
                    let mj = comp[idx];
                    let njd = (n[j] * d) as usize;
                    // C(n_j d + m_j - 1, m_j)
                    let binom = BigRational::from_integer(
                        &fact[njd + mj - 1] / (&fact[mj] * &fact[njd - 1]),
                    );
                    let gap = &lv[j] - &lv[k];
                    prod *= binom * gap.pow(-((njd + mj) as i32));
                }
                total += prod;
            }
            // odometer over compositions with entries in [0, m]
            let mut i = 0;
            loop {
                if i == comp.len() {
                    let sign = if m % 2 == 0 { 1 } else { -1 };
                    return BigRational::from_integer(sign.into()) * total
                        / BigRational::from_integer(fact[nk_d - m - 1].clone());
                }
                comp[i] += 1;
                if comp[i] > m {
                    comp[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    #[test]
    fn recurrence_matches_composition_enumeration() {
        let s = linear_spectrum(3, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        for k in 0..3 {
            for m in 0..table.coefficient_count(k) {
                let direct = g_by_enumeration(&s, k, m);
                assert_eq!(table.g_exact(k).unwrap()[m], direct, "level {k} m {m}");
            }
        }
        // degenerate spectrum exercises the n_j d ≠ d path
        let s = noninteracting_spins(2, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        for k in 0..3 {
            for m in 0..table.coefficient_count(k).min(4) {
                let direct = g_by_enumeration(&s, k, m);
                assert_eq!(table.g_exact(k).unwrap()[m], direct, "level {k} m {m}");
            }
        }
    }

    #[test]
    fn qubit_reduces_to_the_corrected_cubic() {
        // Ω_raw = x²/2 - x³/3 with x = E/ε; plateau-normalized 3x² - 2x³.
        let s = linear_spectrum(2, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        let omega_half = table.omega_raw_exact(&rat(1, 2)).unwrap();
        assert_eq!(omega_half, rat(1, 12));
        let plateau = table.plateau_raw_exact().unwrap();
        assert_eq!(plateau, &rat(1, 6));
        // Ω(1/2)/Ω(1) = 1/2 exactly
        assert_eq!(omega_half / plateau, rat(1, 2));
        // ω(0) = 0 and ω(ε) = 0: the symmetry check the printed form fails
        assert_eq!(table.density_raw_exact(&rat(0, 1)).unwrap(), rat(0, 1));
        assert_eq!(table.density_raw_exact(&rat(1, 1)).unwrap(), rat(0, 1));
        // ω raw at 1/2 is x - x² = 1/4
        assert_eq!(table.density_raw_exact(&rat(1, 2)).unwrap(), rat(1, 4));
    }

    #[test]
    fn plateau_is_inverse_factorial_for_many_spectra() {
        for d in 2..=6u64 {
            let s = linear_spectrum(d, 1.0).unwrap();
            let table = hs_coefficients(&s).unwrap();
            let expect = BigRational::new(
                BigInt::from(1),
                factorials((d * d) as usize - 1).last().unwrap().clone(),
            );
            assert_eq!(table.plateau_raw_exact().unwrap(), &expect, "d = {d}");
        }
        for n in 1..=3u64 {
            let s = noninteracting_spins(n, 1.0).unwrap();
            let table = hs_coefficients(&s).unwrap();
            let d = s.dim();
            let expect = BigRational::new(
                BigInt::from(1),
                factorials((d * d) as usize - 1).last().unwrap().clone(),
            );
            assert_eq!(table.plateau_raw_exact().unwrap(), &expect, "N = {n}");
        }
    }

    #[test]
    fn plateau_is_constant_above_the_top_level() {
        let s = noninteracting_spins(2, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        let p = table.plateau_raw_exact().unwrap().clone();
        for e in [rat(1, 1), rat(3, 2), rat(7, 1), rat(1000, 1)] {
            assert_eq!(table.omega_raw_exact(&e).unwrap(), p);
        }
    }

    #[test]
    fn spin_chain_entry_counts() {
        let s = noninteracting_spins(2, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        assert_eq!(table.coefficient_count(0), 4);
        assert_eq!(table.coefficient_count(1), 8);
        assert_eq!(table.coefficient_count(2), 4);
    }

    #[test]
    fn full_polynomial_degree_is_d_squared_minus_one() {
        let s = linear_spectrum(3, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        assert_eq!(table.max_exponent(), 8);
    }

    #[test]
    fn ground_shell_flatness() {
        // Ω and its first d(d-n_0)-1 derivatives vanish at E_0: the lowest
        // exponent present is d(d-n_0), so Ω(E_0+x) ~ x^{d(d-n_0)}.
        let s = linear_spectrum(3, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        let x = rat(1, 1_000_000);
        let v = table.omega_raw_exact(&x).unwrap();
        let lead: BigRational = table.g_exact(0).unwrap()[0].clone()
            / BigRational::from_integer(factorials(6)[6].clone())
            * x.pow(6);
        let ratio = (v / lead).to_f64().unwrap();
        assert!((ratio - 1.0).abs() < 1e-5, "ratio {ratio}");
    }

    #[test]
    fn float_mode_tracks_exact_cdf_for_small_d() {
        // The float plateau loses digits to cancellation as d grows and the
        // loss propagates uniformly into the normalized CDF: ~1e-13 at
        // d = 3, ~1e-9 at d = 4, ~2e-4 at d = 5. Exact mode is the default
        // for exactly this reason.
        for (d, tol) in [(2u64, 1e-12), (3, 1e-11), (4, 1e-8), (5, 3e-4)] {
            let s = linear_spectrum(d, 1.0).unwrap();
            let exact = hs_coefficients(&s).unwrap();
            let float = hs_coefficients_float(&s).unwrap();
            for i in 1..40 {
                let e = s.ground_energy() + s.span() * i as f64 / 40.0;
                let a = exact.omega_norm(e).unwrap();
                let b = float.omega_norm(e).unwrap();
                assert!(
                    (a - b).abs() <= tol * a.max(1e-300),
                    "d {d} e {e}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn degeneracy_is_the_limit_of_split_levels() {
        // Split the doubly degenerate middle level of the N=2 chain by η and
        // extrapolate η → 0 linearly; compare against the exact merged value.
        let merged = noninteracting_spins(2, 1.0).unwrap();
        let table = hs_coefficients(&merged).unwrap();
        let e = rat(1, 2);
        let exact_val = table.omega_raw_exact(&e).unwrap().to_f64().unwrap();
        let split_val = |eta: f64| -> f64 {
            let s = Spectrum::new(vec![-1.0, -eta / 2.0, eta / 2.0, 1.0], vec![1, 1, 1, 1])
                .unwrap();
            let t = hs_coefficients(&s).unwrap();
            t.omega_raw_exact(&e).unwrap().to_f64().unwrap()
        };
        let (eta1, eta2) = (1e-4, 1e-5);
        let (v1, v2) = (split_val(eta1), split_val(eta2));
        let extrapolated = (v2 * eta1 - v1 * eta2) / (eta1 - eta2);
        assert!(
            (extrapolated - exact_val).abs() < 1e-8 * exact_val.abs(),
            "{extrapolated} vs {exact_val}"
        );
    }

    #[test]
    fn json_cache_round_trips() {
        let s = noninteracting_spins(2, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        let text = table.to_json_string().unwrap();
        let back = HsCoefficientTable::from_json_str(&text).unwrap();
        assert_eq!(back.spectrum().content_hash(), s.content_hash());
        assert_eq!(
            back.omega_raw_exact(&rat(1, 3)).unwrap(),
            table.omega_raw_exact(&rat(1, 3)).unwrap()
        );
    }

    #[test]
    fn below_ground_is_zero_and_nan_rejected() {
        let s = linear_spectrum(2, 1.0).unwrap();
        let table = hs_coefficients(&s).unwrap();
        assert_eq!(table.omega_raw(-0.5).unwrap(), 0.0);
        assert!(table.omega_raw(f64::NAN).is_err());
    }
}
