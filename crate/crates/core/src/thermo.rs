//! Volume entropy, microcanonical temperature, and every observable that
//! comes out of the static response of the entropy to a Hamiltonian
//! perturbation: ⟨O⟩_E = -T(E) ∂S_λ(E)/∂λ at λ = 0.
//!
//! The λ-derivative is a central finite difference with one Richardson
//! step, taken on ln Ω in the *raw* normalization. The raw convention is
//! λ-independent at fixed dimension, so differences of ln Ω_raw are the
//! honest derivative; plateau normalization would inject spurious
//! λ-dependence through the moving top level. This is the single most
//! error-prone spot in the pipeline and has its own regression tests
//! (a uniform shift must return ⟨1⟩ = 1, a pure rescaling ⟨H⟩ = E).

use std::collections::BTreeMap;

use serde::Serialize;

use num::rational::BigRational;
use num::traits::One;

use crate::dos::{DosBuilder, DosFunction};
use crate::error::{Error, Result};
use crate::exact::rational_from_f64;
use crate::spectrum::{ModelSpec, Spectrum};

/// Volume entropy S(E) = ln Ω(E) with the plateau convention S(E_max) = 0.
/// Returns -∞ at or below the ground shell.
pub fn entropy(dos: &DosFunction, e: f64) -> Result<f64> {
    let ln_raw = dos.ln_omega_raw(e)?;
    if ln_raw == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(ln_raw - dos.ln_plateau_raw()?)
}

/// Microcanonical temperature T(E) = Ω(E)/ω(E) ≥ 0.
pub fn temperature(dos: &DosFunction, e: f64) -> Result<f64> {
    dos.temperature(e)
}

#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub energy: f64,
    /// More than one sign change was seen while scanning the bracket; the
    /// smallest root is returned.
    pub multiple: bool,
}

/// Invert T(E) = T_target by scanning for a sign change and bisecting.
/// Derivative-free on purpose: ω may vanish at the endpoints.
pub fn energy_at_temperature(
    dos: &DosFunction,
    t_target: f64,
    bracket: Option<(f64, f64)>,
) -> Result<RootResult> {
    if !(t_target >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be non-negative, got {t_target}"
        )));
    }
    let e0 = dos.ground_energy();
    let emax = dos.max_energy();
    let span = emax - e0;
    if t_target == 0.0 {
        return Ok(RootResult {
            energy: e0,
            multiple: false,
        });
    }
    let (lo, hi) = bracket.unwrap_or((e0 + 1e-9 * span, emax - 1e-9 * span));
    if !(lo < hi) {
        return Err(Error::BracketFailure(lo, hi));
    }
    let g = |e: f64| -> Result<f64> { Ok(dos.temperature(e)? - t_target) };
    const SCAN: usize = 48;
    let mut prev_e = lo;
    let mut prev_g = g(lo)?;
    let mut first: Option<(f64, f64)> = None;
    let mut changes = 0usize;
    for i in 1..=SCAN {
        let e = lo + (hi - lo) * i as f64 / SCAN as f64;
        let cur = g(e)?;
        if prev_g == 0.0 || prev_g.signum() != cur.signum() {
            changes += 1;
            if first.is_none() {
                first = Some((prev_e, e));
            }
        }
        prev_e = e;
        prev_g = cur;
    }
    let (mut a, mut b) = first.ok_or(Error::BracketFailure(lo, hi))?;
    let mut ga = g(a)?;
    let tol = 1e-10 * span;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m)?;
        if ga.signum() == gm.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(RootResult {
        energy: 0.5 * (a + b),
        multiple: changes > 1,
    })
}

/// The Hamiltonian perturbations H ↦ H + λO realized as spectrum maps.
#[derive(Debug, Clone)]
pub enum Perturbation {
    /// O = H²: every level E ↦ E + λE², multiplicities unchanged.
    EnergySquared,
    /// B ↦ B + λ for the spin models; O = ∂H/∂B.
    FieldShift,
    /// O projects onto one unit of distinct level k: that unit moves to
    /// E_k + λ, leaving multiplicity n_k - 1 behind.
    LevelProjector(usize),
    /// O = H: the pure rescaling H ↦ (1+λ)H. ⟨H⟩ must come back as E.
    Scale,
    /// O = 1: H ↦ H + λ. ⟨1⟩ must come back as 1.
    UniformShift,
}

/// A map λ ↦ Spectrum encoding H + λO, exact at every λ that is exact.
#[derive(Debug, Clone)]
pub struct PerturbedFamily {
    base: Spectrum,
    model: Option<ModelSpec>,
    kind: Perturbation,
}

impl PerturbedFamily {
    pub fn energy_squared(base: &Spectrum) -> Self {
        PerturbedFamily {
            base: base.clone(),
            model: None,
            kind: Perturbation::EnergySquared,
        }
    }

    pub fn scale(base: &Spectrum) -> Self {
        PerturbedFamily {
            base: base.clone(),
            model: None,
            kind: Perturbation::Scale,
        }
    }

    pub fn uniform_shift(base: &Spectrum) -> Self {
        PerturbedFamily {
            base: base.clone(),
            model: None,
            kind: Perturbation::UniformShift,
        }
    }

    pub fn level_projector(base: &Spectrum, k: usize) -> Result<Self> {
        if k >= base.num_levels() {
            return Err(Error::InvalidArgument(format!(
                "level index {k} out of range for {} levels",
                base.num_levels()
            )));
        }
        Ok(PerturbedFamily {
            base: base.clone(),
            model: None,
            kind: Perturbation::LevelProjector(k),
        })
    }

    pub fn field_shift(model: &ModelSpec) -> Result<Self> {
        model.with_field_shift(&BigRational::one())?; // validates the model kind
        Ok(PerturbedFamily {
            base: model.build()?,
            model: Some(model.clone()),
            kind: Perturbation::FieldShift,
        })
    }

    pub fn base(&self) -> &Spectrum {
        &self.base
    }

    pub fn spectrum_at(&self, lambda: f64) -> Result<Spectrum> {
        if lambda == 0.0 {
            return Ok(self.base.clone());
        }
        let lam = rational_from_f64(lambda)?;
        match &self.kind {
            Perturbation::EnergySquared => self.base.map_levels(|e| e + &lam * e * e),
            Perturbation::Scale => {
                let f = BigRational::one() + &lam;
                self.base.map_levels(|e| &f * e)
            }
            Perturbation::UniformShift => self.base.map_levels(|e| e + &lam),
            Perturbation::FieldShift => self
                .model
                .as_ref()
                .expect("field shift carries its model")
                .with_field_shift(&lam)?
                .build(),
            Perturbation::LevelProjector(k) => {
                let mut pairs: Vec<(BigRational, u64)> = Vec::new();
                for (i, (e, &n)) in self
                    .base
                    .exact_levels()
                    .iter()
                    .zip(self.base.multiplicities())
                    .enumerate()
                {
                    if i == *k {
                        if n > 1 {
                            pairs.push((e.clone(), n - 1));
                        }
                        pairs.push((e + &lam, 1));
                    } else {
                        pairs.push((e.clone(), n));
                    }
                }
                Spectrum::from_unmerged(pairs, 0.0)
            }
        }
    }

    /// Default λ step: 1e-4 in the family's natural units.
    pub fn default_step(&self) -> f64 {
        let span = self.base.span();
        let scale = self
            .base
            .levels()
            .iter()
            .fold(span, |m, e| m.max(e.abs()));
        match self.kind {
            Perturbation::EnergySquared => 1e-4 / (scale * scale / span).max(f64::MIN_POSITIVE),
            Perturbation::Scale => 1e-4,
            Perturbation::UniformShift | Perturbation::FieldShift => 1e-4 * span,
            Perturbation::LevelProjector(_) => 1e-4 * span,
        }
    }

    /// Upper bound on |∂E_0/∂λ|, used to keep the shell from crossing the
    /// perturbed ground state.
    pub fn ground_sensitivity(&self) -> f64 {
        let e0 = self.base.ground_energy();
        match self.kind {
            Perturbation::EnergySquared => e0 * e0,
            Perturbation::Scale => e0.abs(),
            Perturbation::UniformShift => 1.0,
            Perturbation::LevelProjector(k) => {
                if k == 0 && self.base.multiplicities()[0] == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            Perturbation::FieldShift => match &self.model {
                Some(m) => m.num_spins().map(|n| n as f64 / 2.0).unwrap_or(1.0),
                None => 1.0,
            },
        }
    }
}

/// Knobs for the finite-difference engine.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiffOptions {
    /// λ step; defaults to the family's natural 1e-4 scale.
    pub step: Option<f64>,
    /// Absolute noise of one ln Ω evaluation. Defaults to the builder's
    /// own estimate; override only for unusual evaluators.
    pub ln_noise: Option<f64>,
}

fn central_difference(
    builder: &DosBuilder,
    family: &PerturbedFamily,
    e: f64,
    h: f64,
) -> Result<f64> {
    let sp = family.spectrum_at(h)?;
    let sm = family.spectrum_at(-h)?;
    for s in [&sp, &sm] {
        if e <= s.ground_energy() {
            return Err(Error::StepTooLarge(format!(
                "perturbed ground {} reaches the shell energy {e}",
                s.ground_energy()
            )));
        }
    }
    let (dp, dm) = rayon::join(|| builder.build(&sp), || builder.build(&sm));
    let (dp, dm) = (dp?, dm?);
    Ok(dp.ln_omega_raw_ratio(&dm, e)? / (2.0 * h))
}

/// ∂S_λ(E)/∂λ at λ = 0 by central differences at h and h/2 with one
/// Richardson extrapolation.
pub fn entropy_lambda_derivative(
    builder: &DosBuilder,
    family: &PerturbedFamily,
    e: f64,
    options: DiffOptions,
) -> Result<f64> {
    let mut h = options.step.unwrap_or_else(|| family.default_step());
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("bad step {h}")));
    }
    // Keep the perturbed ground states safely below the shell. The cap is
    // conservative: near the ground the entropy varies like ln(E - E_0(λ)),
    // so the difference truncation scales as (h·sens/margin)² and must stay
    // under the 1e-4 convergence gate.
    let sens = family.ground_sensitivity();
    if sens > 0.0 {
        let margin = e - family.base().ground_energy();
        if margin <= 0.0 {
            return Err(Error::StepTooLarge(format!(
                "shell energy {e} is at or below the ground state"
            )));
        }
        h = h.min(0.01 * margin / sens);
    }
    // Round the step down to a power of two: exact-arithmetic evaluators
    // then see a tiny-denominator rational λ instead of a 53-bit one.
    h = (2.0f64).powi(h.log2().floor() as i32);
    let d1 = central_difference(builder, family, e, h)?;
    let d2 = central_difference(builder, family, e, 0.5 * h)?;
    let richardson = (4.0 * d2 - d1) / 3.0;
    // The two estimates must agree to 1e-4 relative, up to the evaluator's
    // own noise: a single ln Ω carries ~ln_noise of error, which the h/2
    // difference amplifies to ~6 ln_noise / h.
    let ln_noise = options
        .ln_noise
        .unwrap_or_else(|| builder.ln_noise_estimate());
    let noise = 6.0 * ln_noise / h;
    if (d1 - d2).abs() > 1e-4 * richardson.abs() + noise {
        return Err(Error::NonConvergence(d1, d2));
    }
    Ok(richardson)
}

/// ⟨O⟩_E = -T(E) ∂S_λ(E)/∂λ for the observable behind `family`.
pub fn observable_expectation(
    builder: &DosBuilder,
    family: &PerturbedFamily,
    e: f64,
    options: DiffOptions,
) -> Result<f64> {
    let dos0 = builder.build(family.base())?;
    let t = dos0.temperature(e)?;
    let deriv = entropy_lambda_derivative(builder, family, e, options)?;
    Ok(-t * deriv)
}

/// Energy uncertainty δE(E) = √(⟨H²⟩_E - E²).
///
/// The shells at the spectrum edges are the pure extremal eigenstate
/// blocks, where the uncertainty is identically zero; those two points are
/// returned directly. Everything else goes through the perturbation engine
/// on the ground-shifted spectrum (δE is shift-invariant, and shifting
/// pins the ground level at zero so H ↦ H + λH² cannot move it).
pub fn energy_variance(
    builder: &DosBuilder,
    spectrum: &Spectrum,
    e: f64,
    options: DiffOptions,
) -> Result<f64> {
    if e < spectrum.ground_energy() || e > spectrum.max_energy() {
        return Err(Error::Domain(format!(
            "energy {e} outside the spectrum range"
        )));
    }
    if e == spectrum.ground_energy() || e == spectrum.max_energy() {
        return Ok(0.0);
    }
    let shifted = spectrum.shift_to_ground();
    let x = e - spectrum.ground_energy();
    let family = PerturbedFamily::energy_squared(&shifted);
    let h2 = observable_expectation(builder, &family, x, options)?;
    Ok((h2 - x * x).max(0.0).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelPopulation {
    pub level: f64,
    pub multiplicity: u64,
    /// Population of one unit within the level's degenerate block.
    pub population: f64,
}

#[derive(Debug, Clone)]
pub struct Populations {
    pub per_level: Vec<LevelPopulation>,
    /// Σ n_k p_k before renormalization; should be 1 up to engine error.
    pub raw_total: f64,
}

/// Per-unit eigenlevel populations of the average state, via one level
/// projector per distinct level. Levels are reported in ascending order,
/// which pins the convention: the first entry tends to 1 as E → E_0.
pub fn average_state_populations(
    builder: &DosBuilder,
    spectrum: &Spectrum,
    e: f64,
    options: DiffOptions,
) -> Result<Populations> {
    let mut per_level = Vec::with_capacity(spectrum.num_levels());
    for k in 0..spectrum.num_levels() {
        let family = PerturbedFamily::level_projector(spectrum, k)?;
        let p = observable_expectation(builder, &family, e, options)?;
        per_level.push(LevelPopulation {
            level: spectrum.levels()[k],
            multiplicity: spectrum.multiplicities()[k],
            population: p,
        });
    }
    let raw_total: f64 = per_level
        .iter()
        .map(|lp| lp.multiplicity as f64 * lp.population)
        .sum();
    if raw_total > 0.0 {
        for lp in per_level.iter_mut() {
            lp.population /= raw_total;
        }
    }
    Ok(Populations {
        per_level,
        raw_total,
    })
}

/// Magnetization M(E) = tr(S_z ρ̄) = T(E) ∂S/∂B for the spin models.
///
/// The field enters as H = -B S_z - …, so the λ-observable of a field
/// shift is -S_z and the expectation flips sign.
pub fn magnetization(
    builder: &DosBuilder,
    model: &ModelSpec,
    e: f64,
    options: DiffOptions,
) -> Result<f64> {
    let family = PerturbedFamily::field_shift(model)?;
    Ok(-observable_expectation(builder, &family, e, options)?)
}

/// One row of a tabulated thermodynamic curve.
#[derive(Debug, Clone, Serialize)]
pub struct ThermoRecord {
    /// Shell energy (energy units).
    pub e: f64,
    /// Volume entropy (dimensionless, S(E_max) = 0).
    pub s: f64,
    /// Temperature (energy units).
    pub t: f64,
    /// Energy uncertainty δE (energy units), when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    /// Named extras (magnetization, populations, …).
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub observables: BTreeMap<String, f64>,
}

/// Tabulated (E, S, T, δE, observables) records for export.
#[derive(Debug, Clone, Serialize)]
pub struct ThermoCurve {
    pub ensemble: String,
    pub spectrum_hash: String,
    pub grid: String,
    pub records: Vec<ThermoRecord>,
}

impl ThermoCurve {
    pub fn new(
        ensemble: String,
        spectrum_hash: String,
        grid: String,
        records: Vec<ThermoRecord>,
    ) -> Result<Self> {
        for w in records.windows(2) {
            if w[0].e >= w[1].e {
                return Err(Error::InvalidArgument(format!(
                    "curve energies must be strictly increasing ({} then {})",
                    w[0].e, w[1].e
                )));
            }
        }
        if let Some(r) = records.iter().find(|r| r.t < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "negative temperature {} at E = {}",
                r.t, r.e
            )));
        }
        Ok(ThermoCurve {
            ensemble,
            spectrum_hash,
            grid,
            records,
        })
    }

    /// Column names beyond (E, S, T), in output order.
    fn extra_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        if self.records.iter().any(|r| r.delta_e.is_some()) {
            cols.push("deltaE".into());
        }
        let mut named: Vec<String> = self
            .records
            .iter()
            .flat_map(|r| r.observables.keys().cloned())
            .collect();
        named.sort();
        named.dedup();
        cols.extend(named);
        cols
    }

    /// CSV body: header row (units in the names), one record per row.
    /// Callers prepend their own provenance comment lines.
    pub fn to_csv_string(&self) -> String {
        let extras = self.extra_columns();
        let mut out = String::new();
        out.push_str("E,S,T");
        for c in &extras {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{},{}", r.e, r.s, r.t));
            for c in &extras {
                let v = if c == "deltaE" {
                    r.delta_e
                } else {
                    r.observables.get(c).copied()
                };
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dos::{DosBuilder, Ensemble};
    use crate::spectrum::{curie_weiss, linear_spectrum, noninteracting_spins};

    fn hs() -> DosBuilder {
        DosBuilder::new(Ensemble::HilbertSchmidt)
    }

    fn bh() -> DosBuilder {
        DosBuilder::new(Ensemble::BuresHall).bh_rel_tol(1e-12)
    }

    #[test]
    fn entropy_anchors_for_the_qubit() {
        let s = linear_spectrum(2, 1.0).unwrap();
        let bh_dos = bh().build(&s).unwrap();
        assert!(entropy(&bh_dos, 1.0).unwrap().abs() < 1e-9);
        assert!((entropy(&bh_dos, 0.5).unwrap() - 0.5f64.ln()).abs() < 1e-9);
        let hs_dos = hs().build(&s).unwrap();
        assert!((entropy(&hs_dos, 0.5).unwrap() - 0.5f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&hs_dos, 0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn qubit_temperature_from_the_cubic() {
        let s = linear_spectrum(2, 1.0).unwrap();
        let dos = hs().build(&s).unwrap();
        assert!((temperature(&dos, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_inversion_round_trip() {
        let s = linear_spectrum(4, 1.0).unwrap();
        let dos = bh().build(&s).unwrap();
        let root = energy_at_temperature(&dos, 0.5, None).unwrap();
        let back = temperature(&dos, root.energy).unwrap();
        assert!((back - 0.5).abs() < 1e-8, "T = {back}");
        // T = 0 pins the ground state
        assert_eq!(energy_at_temperature(&dos, 0.0, None).unwrap().energy, 0.0);
    }

    #[test]
    fn uniform_shift_returns_one() {
        let s = linear_spectrum(3, 1.0).unwrap();
        for builder in [hs(), bh()] {
            let family = PerturbedFamily::uniform_shift(&s);
            let one =
                observable_expectation(&builder, &family, 1.2, DiffOptions::default()).unwrap();
            assert!((one - 1.0).abs() < 1e-7, "{one}");
        }
    }

    #[test]
    fn scale_family_returns_the_energy() {
        let s = linear_spectrum(3, 1.0).unwrap();
        for builder in [hs(), bh()] {
            for e in [0.5, 1.0, 1.5] {
                let family = PerturbedFamily::scale(&s);
                let h = observable_expectation(&builder, &family, e, DiffOptions::default())
                    .unwrap();
                assert!(
                    (h - e).abs() < 1e-6 * e,
                    "{:?}: ⟨H⟩ = {h} at E = {e}",
                    builder.ensemble()
                );
            }
        }
    }

    #[test]
    fn qubit_populations_match_the_average_state() {
        // ρ̄ = diag(1-E/ε, E/ε) in ascending-level order, same for HS and BH.
        let s = linear_spectrum(2, 1.0).unwrap();
        for builder in [hs(), bh()] {
            for e in [0.25, 0.5, 0.8] {
                let pops =
                    average_state_populations(&builder, &s, e, DiffOptions::default()).unwrap();
                assert!((pops.raw_total - 1.0).abs() < 1e-6);
                assert!(
                    (pops.per_level[0].population - (1.0 - e)).abs() < 1e-6,
                    "{:?} ground pop at {e}: {}",
                    builder.ensemble(),
                    pops.per_level[0].population
                );
                assert!((pops.per_level[1].population - e).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn qubit_variance_closed_form() {
        // δE² = E(ε-E) for the qubit (both measures share the average state).
        let s = linear_spectrum(2, 1.0).unwrap();
        let builder = hs();
        for e in [0.2, 0.5, 0.9] {
            let de = energy_variance(&builder, &s, e, DiffOptions::default()).unwrap();
            let expect = (e * (1.0 - e)).sqrt();
            assert!((de - expect).abs() < 1e-6, "E = {e}: {de} vs {expect}");
        }
        assert_eq!(
            energy_variance(&builder, &s, 0.0, DiffOptions::default()).unwrap(),
            0.0
        );
        assert_eq!(
            energy_variance(&builder, &s, 1.0, DiffOptions::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_spin_magnetization_signs() {
        let model = ModelSpec::SpinChain {
            n: 1,
            b: BigRational::one(),
        };
        let builder = hs();
        // near the ground state M → +1/2; at the mid-shell M = 0
        let near_ground =
            magnetization(&builder, &model, -0.5 + 1e-6, DiffOptions::default()).unwrap();
        assert!((near_ground - 0.5).abs() < 1e-3, "{near_ground}");
        let mid = magnetization(&builder, &model, 0.0, DiffOptions::default()).unwrap();
        assert!(mid.abs() < 1e-8, "{mid}");
    }

    #[test]
    fn curie_weiss_magnetization_near_ground() {
        let model = ModelSpec::CurieWeiss {
            n: 2,
            b: BigRational::one(),
            j: BigRational::new(1.into(), 5.into()),
        };
        let s = model.build().unwrap();
        let e = s.ground_energy() + 1e-6 * s.span();
        let m = magnetization(&hs(), &model, e, DiffOptions::default()).unwrap();
        assert!((m - 1.0).abs() < 1e-3, "M = {m}");
    }

    #[test]
    fn level_projector_handles_degenerate_levels() {
        let s = noninteracting_spins(2, 1.0).unwrap();
        let family = PerturbedFamily::level_projector(&s, 1).unwrap();
        let perturbed = family.spectrum_at(1e-6).unwrap();
        assert_eq!(perturbed.num_levels(), 4);
        assert_eq!(perturbed.multiplicities(), &[1, 1, 1, 1]);
        assert_eq!(family.spectrum_at(0.0).unwrap(), s);
    }

    #[test]
    fn step_too_large_is_reported() {
        let s = noninteracting_spins(1, 1.0).unwrap();
        let family = PerturbedFamily::uniform_shift(&s);
        // shell right above the ground state with an enormous step
        let err = entropy_lambda_derivative(
            &hs(),
            &family,
            -0.5 + 1e-9,
            DiffOptions {
                step: Some(0.5),
                ln_noise: None,
            },
        );
        // the engine shrinks the step instead of failing
        assert!(err.is_ok());
    }

    #[test]
    fn curve_validation_and_csv() {
        let records = vec![
            ThermoRecord {
                e: 0.0,
                s: -1.0,
                t: 0.1,
                delta_e: Some(0.0),
                observables: BTreeMap::new(),
            },
            ThermoRecord {
                e: 1.0,
                s: 0.0,
                t: 0.7,
                delta_e: Some(0.2),
                observables: BTreeMap::new(),
            },
        ];
        let curve = ThermoCurve::new("bh".into(), "ff".into(), "lin".into(), records).unwrap();
        let csv = curve.to_csv_string();
        assert!(csv.starts_with("E,S,T,deltaE\n"));
        assert_eq!(csv.lines().count(), 3);
        // strictly increasing energies enforced
        let bad = ThermoCurve::new(
            "bh".into(),
            "ff".into(),
            "lin".into(),
            vec![
                ThermoRecord {
                    e: 1.0,
                    s: 0.0,
                    t: 0.1,
                    delta_e: None,
                    observables: BTreeMap::new(),
                },
                ThermoRecord {
                    e: 0.5,
                    s: 0.0,
                    t: 0.1,
                    delta_e: None,
                    observables: BTreeMap::new(),
                },
            ],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn curie_weiss_j0_matches_free_spins_everywhere() {
        let cw = curie_weiss(2, 1.0, 0.0).unwrap();
        let free = noninteracting_spins(2, 1.0).unwrap();
        let d1 = hs().build(&cw).unwrap();
        let d2 = hs().build(&free).unwrap();
        for e in [-0.7, 0.0, 0.4] {
            assert_eq!(d1.omega(e).unwrap(), d2.omega(e).unwrap());
        }
    }
}
