//! The shared evaluable contract: one ensemble, one spectrum, evaluators
//! for Ω(E) and ω(E), and a normalization mode.

use serde::{Deserialize, Serialize};

use crate::bh::{BhDos, BhOptions};
use crate::error::{Error, Result};
use crate::exact::{ln_rational, ln_rational_ratio, rational_from_f64};
use crate::hs::{hs_coefficients, hs_coefficients_float, HsCoefficientTable};
use crate::pure::{PureDos, PureOptions};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ensemble {
    HilbertSchmidt,
    BuresHall,
    PureHaar,
}

impl Ensemble {
    pub fn tag(&self) -> &'static str {
        match self {
            Ensemble::HilbertSchmidt => "hs",
            Ensemble::BuresHall => "bh",
            Ensemble::PureHaar => "pure",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" | "hilbert-schmidt" => Ok(Ensemble::HilbertSchmidt),
            "bh" | "bures-hall" => Ok(Ensemble::BuresHall),
            "pure" | "haar" => Ok(Ensemble::PureHaar),
            other => Err(Error::InvalidArgument(format!("unknown ensemble {other:?}"))),
        }
    }
}

/// How Ω (and ω with it) is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Ω(E_max) = 1: a proper CDF, directly comparable to Monte Carlo.
    #[default]
    Plateau,
    /// The engine's raw convention. λ-independent under spectrum
    /// perturbations at fixed dimension, which is what the perturbation
    /// formula differentiates.
    Raw,
}

/// Factory for `DosFunction`s; a pure value, safe to share across threads.
#[derive(Debug, Clone)]
pub struct DosBuilder {
    ensemble: Ensemble,
    normalization: Normalization,
    hs_float: bool,
    bh_options: BhOptions,
    pure_split: Option<f64>,
}

impl DosBuilder {
    pub fn new(ensemble: Ensemble) -> Self {
        DosBuilder {
            ensemble,
            normalization: Normalization::Plateau,
            hs_float: false,
            bh_options: BhOptions::default(),
            pure_split: Some(1e-3),
        }
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }

    /// Opt into double-precision residue tables for the HS engine.
    pub fn hs_float(mut self, yes: bool) -> Self {
        self.hs_float = yes;
        self
    }

    /// Relative tolerance of the Bures-Hall quadrature.
    pub fn bh_rel_tol(mut self, tol: f64) -> Self {
        self.bh_options.rel_tol = tol;
        self
    }

    pub fn bh_degeneracy_split(mut self, rel: f64) -> Self {
        self.bh_options.degeneracy_split_rel = rel;
        self
    }

    /// Degeneracy splitting for the pure-state closed form (`None` refuses
    /// degenerate spectra, matching the strict contract).
    pub fn pure_degeneracy_split(mut self, rel: Option<f64>) -> Self {
        self.pure_split = rel;
        self
    }

    /// Estimated absolute noise of one ln Ω evaluation, used by the
    /// finite-difference engine's convergence gate. Exact residue tables
    /// are limited only by the final log conversion; the Bures-Hall
    /// quadrature loses more to cancellation across segment halves.
    pub fn ln_noise_estimate(&self) -> f64 {
        match self.ensemble {
            Ensemble::HilbertSchmidt => {
                if self.hs_float {
                    1e-9
                } else {
                    1e-13
                }
            }
            Ensemble::BuresHall => (self.bh_options.rel_tol * 100.0).max(5e-9),
            Ensemble::PureHaar => 1e-12,
        }
    }

    pub fn build(&self, spectrum: &Spectrum) -> Result<DosFunction> {
        let kind = match self.ensemble {
            Ensemble::HilbertSchmidt => {
                let table = if self.hs_float {
                    hs_coefficients_float(spectrum)?
                } else {
                    hs_coefficients(spectrum)?
                };
                DosKind::Hs(table)
            }
            Ensemble::BuresHall => {
                DosKind::Bh(BhDos::new(spectrum, self.bh_options.clone())?)
            }
            Ensemble::PureHaar => DosKind::Pure(PureDos::new(
                spectrum,
                PureOptions {
                    degeneracy_split_rel: self.pure_split,
                },
            )?),
        };
        Ok(DosFunction {
            kind,
            normalization: self.normalization,
            spectrum: spectrum.clone(),
        })
    }
}

#[derive(Debug, Clone)]
enum DosKind {
    Hs(HsCoefficientTable),
    Bh(BhDos),
    Pure(PureDos),
}

/// An evaluable (Ω, ω) pair for one ensemble over one spectrum.
#[derive(Debug, Clone)]
pub struct DosFunction {
    kind: DosKind,
    normalization: Normalization,
    spectrum: Spectrum,
}

impl DosFunction {
    pub fn ensemble(&self) -> Ensemble {
        match &self.kind {
            DosKind::Hs(_) => Ensemble::HilbertSchmidt,
            DosKind::Bh(_) => Ensemble::BuresHall,
            DosKind::Pure(_) => Ensemble::PureHaar,
        }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Ground energy of the evaluator's working spectrum (the η-split copy
    /// for degenerate Bures-Hall spectra, hence "working").
    pub fn ground_energy(&self) -> f64 {
        match &self.kind {
            DosKind::Bh(b) => b.ground_energy(),
            _ => self.spectrum.ground_energy(),
        }
    }

    pub fn max_energy(&self) -> f64 {
        match &self.kind {
            DosKind::Bh(b) => b.max_energy(),
            _ => self.spectrum.max_energy(),
        }
    }

    pub fn span(&self) -> f64 {
        self.max_energy() - self.ground_energy()
    }

    /// Integrated density of states, scaled per the normalization mode.
    pub fn omega(&self, e: f64) -> Result<f64> {
        match (&self.kind, self.normalization) {
            (DosKind::Hs(t), Normalization::Raw) => t.omega_raw(e),
            (DosKind::Hs(t), Normalization::Plateau) => t.omega_norm(e),
            (DosKind::Bh(b), Normalization::Raw) => b.omega_raw(e),
            (DosKind::Bh(b), Normalization::Plateau) => b.omega_norm(e),
            (DosKind::Pure(p), _) => p.omega(e),
        }
    }

    /// Density of states ω(E) = dΩ/dE under the same normalization.
    pub fn density(&self, e: f64) -> Result<f64> {
        match (&self.kind, self.normalization) {
            (DosKind::Hs(t), Normalization::Raw) => t.density_raw(e),
            (DosKind::Hs(t), Normalization::Plateau) => t.density_norm(e),
            (DosKind::Bh(b), Normalization::Raw) => b.density_raw(e),
            (DosKind::Bh(b), Normalization::Plateau) => b.density_norm(e),
            (DosKind::Pure(p), _) => p.density(e),
        }
    }

    /// ln Ω in the raw convention; -∞ at or below the ground shell. This is
    /// the quantity the perturbation engine differentiates, and it stays
    /// accurate far below the f64 underflow threshold.
    pub fn ln_omega_raw(&self, e: f64) -> Result<f64> {
        match &self.kind {
            DosKind::Hs(t) => t.ln_omega_raw(e),
            DosKind::Bh(b) => b.ln_omega_raw(e),
            DosKind::Pure(p) => {
                let v = p.omega(e)?;
                Ok(if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
            }
        }
    }

    pub fn ln_density_raw(&self, e: f64) -> Result<f64> {
        match &self.kind {
            DosKind::Hs(t) => t.ln_density_raw(e),
            DosKind::Bh(b) => b.ln_density_raw(e),
            DosKind::Pure(p) => {
                let v = p.density(e)?;
                Ok(if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
            }
        }
    }

    pub fn ln_plateau_raw(&self) -> Result<f64> {
        match &self.kind {
            DosKind::Hs(t) => {
                if t.is_exact() {
                    ln_rational(t.plateau_raw_exact()?)
                } else {
                    Ok(t.plateau_raw().ln())
                }
            }
            DosKind::Bh(b) => {
                let p = b.plateau_raw()?;
                Ok(p.ln())
            }
            DosKind::Pure(_) => Ok(0.0),
        }
    }

    /// Microcanonical temperature T(E) = Ω(E)/ω(E), normalization-free.
    pub fn temperature(&self, e: f64) -> Result<f64> {
        match &self.kind {
            DosKind::Hs(t) if t.is_exact() => {
                let er = rational_from_f64(e)?;
                let num = t.omega_raw_exact(&er)?;
                let den = t.density_raw_exact(&er)?;
                use num::traits::{Signed, ToPrimitive};
                if !den.is_positive() {
                    return Ok(f64::INFINITY);
                }
                Ok((num / den).to_f64().unwrap_or(f64::INFINITY))
            }
            _ => {
                let ln_o = self.ln_omega_raw(e)?;
                let ln_w = self.ln_density_raw(e)?;
                if ln_w == f64::NEG_INFINITY {
                    return Ok(f64::INFINITY);
                }
                Ok((ln_o - ln_w).exp())
            }
        }
    }

    /// ln(Ω_self(E) / Ω_other(E)) in the raw convention, taking the exact
    /// path when both sides carry exact residue tables. The perturbation
    /// engine differences nearly identical volumes; the exact route keeps
    /// those differences meaningful at any magnitude.
    pub fn ln_omega_raw_ratio(&self, other: &DosFunction, e: f64) -> Result<f64> {
        if let (DosKind::Hs(a), DosKind::Hs(b)) = (&self.kind, &other.kind) {
            if a.is_exact() && b.is_exact() {
                let er = rational_from_f64(e)?;
                let num = a.omega_raw_exact(&er)?;
                let den = b.omega_raw_exact(&er)?;
                use num::traits::Signed;
                if num.is_positive() && den.is_positive() {
                    return ln_rational_ratio(&num, &den);
                }
            }
        }
        Ok(self.ln_omega_raw(e)? - other.ln_omega_raw(e)?)
    }
}

/// Tabulated CDF with analytic endpoint derivatives, for bulk evaluation
/// (Kolmogorov-Smirnov sweeps over millions of sample energies). Cubic
/// Hermite interpolation on a uniform grid; both Ω and ω come from the
/// analytic evaluators.
#[derive(Debug, Clone)]
pub struct CdfTable {
    e0: f64,
    emax: f64,
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl CdfTable {
    pub fn build(dos: &DosFunction, points: usize) -> Result<CdfTable> {
        let n = points.max(16);
        let e0 = dos.ground_energy();
        let emax = dos.max_energy();
        let step = (emax - e0) / (n - 1) as f64;
        let plateau = match dos.normalization() {
            Normalization::Plateau => 1.0,
            Normalization::Raw => dos.omega(emax)?,
        };
        let mut values = Vec::with_capacity(n);
        let mut derivs = Vec::with_capacity(n);
        for i in 0..n {
            let e = if i + 1 == n { emax } else { e0 + step * i as f64 };
            values.push(dos.omega(e)? / plateau);
            derivs.push(dos.density(e)? / plateau);
        }
        Ok(CdfTable {
            e0,
            emax,
            step,
            values,
            derivs,
        })
    }

    pub fn eval(&self, e: f64) -> f64 {
        if e <= self.e0 {
            return 0.0;
        }
        if e >= self.emax {
            return 1.0;
        }
        let x = (e - self.e0) / self.step;
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let t = x - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i] * self.step, self.derivs[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        v.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::linear_spectrum;

    #[test]
    fn plateau_mode_is_a_cdf() {
        let s = linear_spectrum(3, 1.0).unwrap();
        for ens in [Ensemble::HilbertSchmidt, Ensemble::BuresHall, Ensemble::PureHaar] {
            let dos = DosBuilder::new(ens).build(&s).unwrap();
            assert!(dos.omega(s.ground_energy()).unwrap().abs() < 1e-12);
            assert!((dos.omega(s.max_energy()).unwrap() - 1.0).abs() < 1e-9, "{ens:?}");
            let mut prev = -1e-12;
            for i in 0..=32 {
                let e = 2.0 * i as f64 / 32.0;
                let v = dos.omega(e).unwrap();
                assert!(v + 1e-9 >= prev, "{ens:?} not monotone at {e}");
                prev = v;
            }
        }
    }

    #[test]
    fn temperature_consistent_across_paths() {
        let s = linear_spectrum(2, 1.0).unwrap();
        let hs = DosBuilder::new(Ensemble::HilbertSchmidt).build(&s).unwrap();
        // corrected cubic: T(1/2) = Ω/ω = (1/12)/(1/4) = 1/3
        assert!((hs.temperature(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_table_tracks_the_function() {
        let s = linear_spectrum(3, 1.0).unwrap();
        let dos = DosBuilder::new(Ensemble::PureHaar).build(&s).unwrap();
        let table = CdfTable::build(&dos, 257).unwrap();
        for i in 0..=100 {
            let e = 2.0 * i as f64 / 100.0;
            let a = table.eval(e);
            let b = dos.omega(e).unwrap();
            assert!((a - b).abs() < 1e-8, "E = {e}: {a} vs {b}");
        }
    }
}
