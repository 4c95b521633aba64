//! Monte Carlo oracle: sample random density matrices under the
//! Hilbert-Schmidt, Bures-Hall, or pure-Haar measure, estimate densities of
//! states empirically, compute shell-conditioned averages, and verify the
//! stationarity of the average state.
//!
//! Determinism contract: the sample stream is partitioned into fixed-size
//! chunks; chunk c draws from a counter-based substream (ChaCha with the
//! stream id set to c) and partial results merge in canonical chunk order.
//! Estimates are bit-identical for a given seed regardless of thread count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dos::Ensemble;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

const CHUNK: u64 = 8192;

/// Configuration for the Monte Carlo estimators.
#[derive(Debug, Clone, Serialize)]
pub struct McConfig {
    pub ensemble: Ensemble,
    pub samples: u64,
    pub seed: u64,
    /// Histogram bin count (≥ 10).
    pub bins: usize,
    /// Energy shell for the conditional estimators.
    pub shell: Option<Shell>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Shell {
    pub center: f64,
    pub half_width: f64,
}

impl McConfig {
    pub fn new(ensemble: Ensemble, samples: u64, seed: u64) -> Self {
        McConfig {
            ensemble,
            samples,
            seed,
            bins: 100,
            shell: None,
        }
    }

    pub fn with_bins(mut self, bins: usize) -> Self {
        self.bins = bins;
        self
    }

    pub fn with_shell(mut self, center: f64, half_width: f64) -> Self {
        self.shell = Some(Shell {
            center,
            half_width,
        });
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        if self.bins < 10 {
            return Err(Error::InvalidArgument(format!(
                "need at least 10 bins, got {}",
                self.bins
            )));
        }
        if let Some(s) = &self.shell {
            if !(s.half_width > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "shell half-width must be positive, got {}",
                    s.half_width
                )));
            }
        }
        Ok(())
    }
}

/// One sampled density matrix with its energy tr(Hρ) cached.
#[derive(Debug, Clone)]
pub struct DensityMatrixSample {
    pub matrix: DMatrix<Complex64>,
    pub energy: f64,
}

fn complex_gaussian(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the R-diagonal
/// phase correction (plain QR is not Haar; the correction makes the
/// factorization unique and restores invariance).
pub fn haar_unitary(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let g = complex_gaussian(d, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Hilbert-Schmidt sample: ρ = GG†/tr(GG†) with G a square Ginibre matrix.
pub fn sample_hs_matrix(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let g = complex_gaussian(d, rng);
    let w = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| w[(i, i)].re).sum();
    w / Complex64::new(tr, 0.0)
}

/// Bures-Hall sample: ρ ∝ (1+U) GG† (1+U†) with U Haar, trace-normalized.
pub fn sample_bh_matrix(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let g = complex_gaussian(d, rng);
    let u = haar_unitary(d, rng);
    let one_plus_u = DMatrix::identity(d, d) + u;
    let w = &one_plus_u * (&g * g.adjoint()) * one_plus_u.adjoint();
    let tr: f64 = (0..d).map(|i| w[(i, i)].re).sum();
    w / Complex64::new(tr, 0.0)
}

/// Haar pure state as a rank-1 density matrix.
pub fn sample_pure_matrix(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let mut psi: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in psi.iter_mut() {
        *z /= norm;
    }
    DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj())
}

fn sample_matrix(ensemble: Ensemble, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    match ensemble {
        Ensemble::HilbertSchmidt => sample_hs_matrix(d, rng),
        Ensemble::BuresHall => sample_bh_matrix(d, rng),
        Ensemble::PureHaar => sample_pure_matrix(d, rng),
    }
}

/// Draw one sample and cache its energy against the given spectrum
/// (H is diagonal in this basis: tr(Hρ) = Σ E_i ρ_ii).
pub fn sample_density_matrix(
    ensemble: Ensemble,
    spectrum: &Spectrum,
    rng: &mut ChaCha8Rng,
) -> DensityMatrixSample {
    let flat = spectrum.flattened();
    let m = sample_matrix(ensemble, flat.len(), rng);
    let energy = (0..flat.len()).map(|i| flat[i] * m[(i, i)].re).sum();
    DensityMatrixSample { matrix: m, energy }
}

/// Sanity checks on a sampled state: Hermitian and unit trace to 1e-12,
/// eigenvalues ≥ -1e-12.
pub fn validate_sample(m: &DMatrix<Complex64>) -> Result<()> {
    let d = m.nrows();
    let tr: f64 = (0..d).map(|i| m[(i, i)].re).sum();
    if (tr - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("trace {tr} ≠ 1")));
    }
    for i in 0..d {
        for j in 0..d {
            let diff = (m[(i, j)] - m[(j, i)].conj()).norm();
            if diff > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "not Hermitian at ({i},{j}): {diff}"
                )));
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    for ev in eig.eigenvalues.iter() {
        if *ev < -1e-12 {
            return Err(Error::InvalidArgument(format!("negative eigenvalue {ev}")));
        }
    }
    Ok(())
}

fn rng_for_chunk(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Energies tr(Hρ) of `samples` draws, deterministic given the seed,
/// computed in parallel chunks and concatenated in canonical order.
pub fn sample_energies(
    ensemble: Ensemble,
    spectrum: &Spectrum,
    samples: u64,
    seed: u64,
) -> Vec<f64> {
    let flat = spectrum.flattened();
    let d = flat.len();
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for_chunk(seed, c);
            let n = if c + 1 == chunks {
                samples - c * CHUNK
            } else {
                CHUNK
            };
            let mut out = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let m = sample_matrix(ensemble, d, &mut rng);
                out.push((0..d).map(|i| flat[i] * m[(i, i)].re).sum());
            }
            out
        })
        .collect::<Vec<Vec<f64>>>()
        .concat()
}

/// Histogram of tr(Hρ) over [E_0, E_max] with Wilson-interval standard
/// errors per bin. Deterministic given the seed.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Normalized density estimate per bin (integrates to ~1).
    pub density: Vec<f64>,
    /// Wilson-interval half-width on the density, per bin.
    pub density_se: Vec<f64>,
    pub total_samples: u64,
    pub in_range: u64,
    pub seed: u64,
    pub ensemble: String,
    pub spectrum_hash: String,
}

pub fn estimate_dos_mc(config: &McConfig, spectrum: &Spectrum) -> Result<Histogram> {
    config.validate()?;
    let energies = sample_energies(config.ensemble, spectrum, config.samples, config.seed);
    let lo = spectrum.ground_energy();
    let hi = spectrum.max_energy();
    let bins = config.bins;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut in_range = 0u64;
    for &e in &energies {
        if e < lo || e > hi {
            continue;
        }
        let mut idx = ((e - lo) / width) as usize;
        if idx >= bins {
            idx = bins - 1;
        }
        counts[idx] += 1;
        in_range += 1;
    }
    if in_range == 0 {
        return Err(Error::EmptyHistogram);
    }
    let n = config.samples as f64;
    let mut density = Vec::with_capacity(bins);
    let mut density_se = Vec::with_capacity(bins);
    for &c in &counts {
        let p = c as f64 / n;
        density.push(p / width);
        // Wilson interval half-width at z = 1
        let z2 = 1.0;
        let hw = (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
        density_se.push(hw / width);
    }
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    Ok(Histogram {
        edges,
        counts,
        density,
        density_se,
        total_samples: config.samples,
        in_range,
        seed: config.seed,
        ensemble: config.ensemble.tag().into(),
        spectrum_hash: spectrum.content_hash(),
    })
}

impl Histogram {
    /// CSV body: bin centers, density, standard error.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("E,density,se,count\n");
        for i in 0..self.counts.len() {
            let center = 0.5 * (self.edges[i] + self.edges[i + 1]);
            out.push_str(&format!(
                "{},{},{},{}\n",
                center, self.density[i], self.density_se[i], self.counts[i]
            ));
        }
        out
    }
}

/// Accumulated shell statistics, merged in canonical chunk order.
struct ShellAccum {
    accepted: u64,
    sum_re: DMatrix<f64>,
    sum_im: DMatrix<f64>,
    sum_re2: DMatrix<f64>,
    sum_im2: DMatrix<f64>,
    sum_e: f64,
    sum_e2: f64,
    sum_h2: f64,
    sum_h2_sq: f64,
    sum_purity: f64,
}

impl ShellAccum {
    fn new(d: usize) -> Self {
        ShellAccum {
            accepted: 0,
            sum_re: DMatrix::zeros(d, d),
            sum_im: DMatrix::zeros(d, d),
            sum_re2: DMatrix::zeros(d, d),
            sum_im2: DMatrix::zeros(d, d),
            sum_e: 0.0,
            sum_e2: 0.0,
            sum_h2: 0.0,
            sum_h2_sq: 0.0,
            sum_purity: 0.0,
        }
    }

    fn push(&mut self, m: &DMatrix<Complex64>, e: f64, flat: &[f64]) {
        self.accepted += 1;
        let d = flat.len();
        for i in 0..d {
            for j in 0..d {
                let z = m[(i, j)];
                self.sum_re[(i, j)] += z.re;
                self.sum_im[(i, j)] += z.im;
                self.sum_re2[(i, j)] += z.re * z.re;
                self.sum_im2[(i, j)] += z.im * z.im;
            }
        }
        self.sum_e += e;
        self.sum_e2 += e * e;
        let h2: f64 = (0..d).map(|i| flat[i] * flat[i] * m[(i, i)].re).sum();
        self.sum_h2 += h2;
        self.sum_h2_sq += h2 * h2;
        let purity: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        self.sum_purity += purity;
    }

    fn merge(mut self, other: ShellAccum) -> ShellAccum {
        self.accepted += other.accepted;
        self.sum_re += other.sum_re;
        self.sum_im += other.sum_im;
        self.sum_re2 += other.sum_re2;
        self.sum_im2 += other.sum_im2;
        self.sum_e += other.sum_e;
        self.sum_e2 += other.sum_e2;
        self.sum_h2 += other.sum_h2;
        self.sum_h2_sq += other.sum_h2_sq;
        self.sum_purity += other.sum_purity;
        self
    }
}

/// Shell-conditioned estimate of the average state ρ̄(E) and the first two
/// conditional energy moments.
#[derive(Debug, Clone)]
pub struct ConditionalShell {
    pub mean: DMatrix<Complex64>,
    /// Standard error of the mean, separately for real and imaginary parts.
    pub se_re: DMatrix<f64>,
    pub se_im: DMatrix<f64>,
    /// Conditional mean of tr(Hρ) (bias diagnostic for the hard window).
    pub mean_energy: f64,
    pub se_energy: f64,
    /// Conditional mean of tr(H²ρ) and its standard error.
    pub mean_h2: f64,
    pub se_h2: f64,
    pub mean_purity: f64,
    pub accepted: u64,
    pub acceptance: f64,
    pub shell: Shell,
    /// The window was widened to reach a workable acceptance rate.
    pub widened: bool,
}

pub fn conditional_average_state(
    config: &McConfig,
    spectrum: &Spectrum,
) -> Result<ConditionalShell> {
    config.validate()?;
    let shell = config
        .shell
        .ok_or_else(|| Error::InvalidArgument("conditional estimate needs a shell".into()))?;
    let mut half_width = shell.half_width;
    let mut widened = false;
    // Double the window until the acceptance rate is workable; stop once
    // the window would stop looking like a shell at all.
    let max_width = spectrum.span();
    loop {
        let acc = run_shell(config, spectrum, shell.center, half_width);
        let acceptance = acc.accepted as f64 / config.samples as f64;
        if acceptance < 1e-4 {
            if half_width >= max_width {
                return Err(Error::ShellEmpty {
                    center: shell.center,
                    half_width,
                });
            }
            half_width = (half_width * 2.0).min(max_width);
            widened = true;
            continue;
        }
        let d = spectrum.dim() as usize;
        let n = acc.accepted as f64;
        let mean = DMatrix::from_fn(d, d, |i, j| {
            Complex64::new(acc.sum_re[(i, j)] / n, acc.sum_im[(i, j)] / n)
        });
        let se = |sum: &DMatrix<f64>, sum2: &DMatrix<f64>| {
            DMatrix::from_fn(d, d, |i, j| {
                let m = sum[(i, j)] / n;
                let var = (sum2[(i, j)] / n - m * m).max(0.0);
                (var / n).sqrt()
            })
        };
        let se_re = se(&acc.sum_re, &acc.sum_re2);
        let se_im = se(&acc.sum_im, &acc.sum_im2);
        let mean_energy = acc.sum_e / n;
        let var_e = (acc.sum_e2 / n - mean_energy * mean_energy).max(0.0);
        let mean_h2 = acc.sum_h2 / n;
        let var_h2 = (acc.sum_h2_sq / n - mean_h2 * mean_h2).max(0.0);
        return Ok(ConditionalShell {
            mean,
            se_re,
            se_im,
            mean_energy,
            se_energy: (var_e / n).sqrt(),
            mean_h2,
            se_h2: (var_h2 / n).sqrt(),
            mean_purity: acc.sum_purity / n,
            accepted: acc.accepted,
            acceptance,
            shell: Shell {
                center: shell.center,
                half_width,
            },
            widened,
        });
    }
}

fn run_shell(config: &McConfig, spectrum: &Spectrum, center: f64, half_width: f64) -> ShellAccum {
    let flat = spectrum.flattened();
    let d = flat.len();
    let chunks = config.samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for_chunk(config.seed, c);
            let n = if c + 1 == chunks {
                config.samples - c * CHUNK
            } else {
                CHUNK
            };
            let mut acc = ShellAccum::new(d);
            for _ in 0..n {
                let m = sample_matrix(config.ensemble, d, &mut rng);
                let e: f64 = (0..d).map(|i| flat[i] * m[(i, i)].re).sum();
                if (e - center).abs() <= half_width {
                    acc.push(&m, e, &flat);
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(ShellAccum::new(d), ShellAccum::merge)
}

/// Ratio of the Frobenius norm of [ρ̄_MC, H] to its null-hypothesis RMS
/// (propagated from the per-entry standard errors). Stationarity holds when
/// the ratio is small; the conventional gate is 3.
#[derive(Debug, Clone)]
pub struct StationarityReport {
    pub statistic: f64,
    pub commutator_norm: f64,
    pub null_rms: f64,
    pub accepted: u64,
}

pub fn stationarity_check(config: &McConfig, spectrum: &Spectrum) -> Result<StationarityReport> {
    let shell = conditional_average_state(config, spectrum)?;
    let flat = spectrum.flattened();
    let d = flat.len();
    let mut norm_sq = 0.0;
    let mut null_ms = 0.0;
    for i in 0..d {
        for j in 0..d {
            let gap = flat[j] - flat[i];
            if gap == 0.0 {
                continue;
            }
            norm_sq += shell.mean[(i, j)].norm_sqr() * gap * gap;
            let se2 = shell.se_re[(i, j)].powi(2) + shell.se_im[(i, j)].powi(2);
            null_ms += se2 * gap * gap;
        }
    }
    let norm = norm_sq.sqrt();
    let null_rms = null_ms.sqrt();
    Ok(StationarityReport {
        statistic: if null_rms > 0.0 { norm / null_rms } else { f64::INFINITY },
        commutator_norm: norm,
        null_rms,
        accepted: shell.accepted,
    })
}

/// Unconditioned mean purity tr(ρ²) with its standard error.
pub fn mean_purity(ensemble: Ensemble, d: usize, samples: u64, seed: u64) -> (f64, f64) {
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for_chunk(seed, c);
            let n = if c + 1 == chunks {
                samples - c * CHUNK
            } else {
                CHUNK
            };
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let m = sample_matrix(ensemble, d, &mut rng);
                let p: f64 = m.iter().map(|z| z.norm_sqr()).sum();
                s += p;
                s2 += p * p;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partials
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Kolmogorov-Smirnov distance between a continuous CDF and the empirical
/// CDF of the samples. Sorts a copy of the sample vector.
pub fn ks_distance<F: Fn(f64) -> f64>(cdf: F, samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.max(lo));
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::spectrum::{linear_spectrum, noninteracting_spins};

    fn rng(seed: u64) -> ChaCha8Rng {
        rng_for_chunk(seed, 0)
    }

    #[test]
    fn samples_are_valid_states() {
        let mut r = rng(7);
        for d in [2usize, 4] {
            for ens in [Ensemble::HilbertSchmidt, Ensemble::BuresHall, Ensemble::PureHaar] {
                for _ in 0..25 {
                    let m = sample_matrix(ens, d, &mut r);
                    validate_sample(&m).unwrap();
                }
            }
        }
    }

    #[test]
    fn pure_states_have_unit_purity() {
        let mut r = rng(3);
        for _ in 0..50 {
            let m = sample_pure_matrix(3, &mut r);
            let p: f64 = m.iter().map(|z| z.norm_sqr()).sum();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = rng(11);
        let u = haar_unitary(4, &mut r);
        let id = &u * u.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)].re - expect).abs() < 1e-12);
                assert!(id[(i, j)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn energies_are_deterministic_and_thread_independent() {
        let s = linear_spectrum(3, 1.0).unwrap();
        let a = sample_energies(Ensemble::BuresHall, &s, 20_000, 42);
        let b = sample_energies(Ensemble::BuresHall, &s, 20_000, 42);
        assert_eq!(a, b);
        // serial pool must agree with the default pool
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| sample_energies(Ensemble::BuresHall, &s, 20_000, 42));
        assert_eq!(a, c);
        let d = sample_energies(Ensemble::BuresHall, &s, 20_000, 43);
        assert_ne!(a, d);
    }

    #[test]
    fn mean_state_is_maximally_mixed() {
        let s = linear_spectrum(3, 1.0).unwrap();
        let cfg = McConfig::new(Ensemble::HilbertSchmidt, 40_000, 5)
            .with_shell(1.0, 10.0); // shell covers everything
        let shell = conditional_average_state(&cfg, &s).unwrap();
        assert_eq!(shell.accepted, 40_000);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 / 3.0 } else { 0.0 };
                let z = shell.mean[(i, j)];
                let tol = 5.0 * (shell.se_re[(i, j)] + shell.se_im[(i, j)]).max(1e-4);
                assert!(
                    (z.re - expect).abs() < tol && z.im.abs() < tol,
                    "entry ({i},{j}) = {z}"
                );
            }
        }
    }

    #[test]
    fn hs_qubit_gap_statistic_matches_simplex_quadrature() {
        // d=2 HS eigenvalue density on the simplex is ∝ (r₁-r₀)²; the mean
        // squared gap from 1-D quadrature is ∫x⁴/∫x² = 3/5.
        let oracle = {
            let num = quad::integrate(|x| x * x * x * x, 0.0, 1.0, 1e-12, 0.0, 1 << 10).value;
            let den = quad::integrate(|x| x * x, 0.0, 1.0, 1e-12, 0.0, 1 << 10).value;
            num / den
        };
        assert!((oracle - 0.6).abs() < 1e-10);
        let mut r = rng(21);
        let n = 60_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let m = sample_hs_matrix(2, &mut r);
            // eigenvalue gap of a trace-1 Hermitian 2x2 matrix
            let a = m[(0, 0)].re;
            let b = m[(1, 1)].re;
            let off = m[(0, 1)].norm_sqr();
            let gap2 = (a - b) * (a - b) + 4.0 * off;
            acc += gap2;
        }
        let mean = acc / n as f64;
        assert!(
            (mean - oracle).abs() < 0.01,
            "mean gap² {mean} vs oracle {oracle}"
        );
    }

    #[test]
    fn bh_qubit_radial_density() {
        // Bloch radius r = √(2 tr ρ² - 1) under the BH measure has CDF
        // (2/π)(arcsin r - r√(1-r²)).
        let mut r = rng(33);
        let n = 50_000;
        let mut radii = Vec::with_capacity(n);
        for _ in 0..n {
            let m = sample_bh_matrix(2, &mut r);
            let p: f64 = m.iter().map(|z| z.norm_sqr()).sum();
            radii.push((2.0 * p - 1.0).max(0.0).sqrt());
        }
        let cdf = |x: f64| {
            let x = x.clamp(0.0, 1.0);
            (2.0 / std::f64::consts::PI) * (x.asin() - x * (1.0 - x * x).sqrt())
        };
        let d = ks_distance(cdf, &radii);
        assert!(d < 0.012, "KS {d}");
    }

    #[test]
    fn pure_population_is_beta_distributed() {
        // p₀ = |⟨0|ψ⟩|² ~ Beta(1, d-1): CDF 1 - (1-x)^{d-1}.
        let mut r = rng(17);
        let d = 4;
        let n = 50_000;
        let mut pops = Vec::with_capacity(n);
        for _ in 0..n {
            let m = sample_pure_matrix(d, &mut r);
            pops.push(m[(0, 0)].re);
        }
        let cdf = |x: f64| 1.0 - (1.0 - x.clamp(0.0, 1.0)).powi(3);
        let ks = ks_distance(cdf, &pops);
        assert!(ks < 0.012, "KS {ks}");
    }

    #[test]
    fn qubit_energy_is_uniform_for_pure_states() {
        let s = linear_spectrum(2, 1.0).unwrap();
        let energies = sample_energies(Ensemble::PureHaar, &s, 50_000, 9);
        let ks = ks_distance(|e| e.clamp(0.0, 1.0), &energies);
        assert!(ks < 0.012, "KS {ks}");
    }

    #[test]
    fn histogram_shapes_and_errors() {
        let s = noninteracting_spins(2, 1.0).unwrap();
        let cfg = McConfig::new(Ensemble::HilbertSchmidt, 30_000, 1).with_bins(40);
        let h = estimate_dos_mc(&cfg, &s).unwrap();
        assert_eq!(h.counts.len(), 40);
        assert_eq!(h.in_range, 30_000);
        // density integrates to one
        let width = h.edges[1] - h.edges[0];
        let total: f64 = h.density.iter().map(|d| d * width).sum();
        assert!((total - 1.0).abs() < 1e-9);
        // symmetric spectrum: density roughly symmetric
        let lo: f64 = h.density[..20].iter().sum();
        let hi: f64 = h.density[20..].iter().sum();
        assert!((lo - hi).abs() / (lo + hi) < 0.05);
        assert!(h.density_se.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn conditional_shell_pins_the_energy() {
        let s = linear_spectrum(2, 1.0).unwrap();
        let cfg = McConfig::new(Ensemble::BuresHall, 40_000, 2).with_shell(0.5, 0.01);
        let shell = conditional_average_state(&cfg, &s).unwrap();
        assert!(!shell.widened);
        assert!((shell.mean_energy - 0.5).abs() < 0.01);
        // qubit at the mid-shell: ρ̄ = 1/2
        assert!((shell.mean[(0, 0)].re - 0.5).abs() < 5.0 * shell.se_re[(0, 0)].max(1e-3));
        // far-too-narrow shell gets widened instead of failing
        let cfg = McConfig::new(Ensemble::BuresHall, 5_000, 2).with_shell(0.5, 1e-9);
        let shell = conditional_average_state(&cfg, &s).unwrap();
        assert!(shell.widened);
    }

    #[test]
    fn stationarity_holds_for_all_ensembles() {
        let s = linear_spectrum(3, 1.0).unwrap();
        for ens in [Ensemble::HilbertSchmidt, Ensemble::BuresHall, Ensemble::PureHaar] {
            let cfg = McConfig::new(ens, 30_000, 4).with_shell(1.0, 0.05);
            let rep = stationarity_check(&cfg, &s).unwrap();
            assert!(
                rep.statistic < 3.0,
                "{ens:?}: statistic {}",
                rep.statistic
            );
        }
    }

    #[test]
    fn bh_is_less_concentrated_than_hs() {
        // mean purity BH > mean purity HS at fixed d
        let (bh, bh_se) = mean_purity(Ensemble::BuresHall, 3, 30_000, 77);
        let (hs, hs_se) = mean_purity(Ensemble::HilbertSchmidt, 3, 30_000, 77);
        let sep = (bh - hs) / (bh_se * bh_se + hs_se * hs_se).sqrt();
        assert!(sep > 5.0, "separation {sep} (bh {bh}, hs {hs})");
    }

    #[test]
    fn ks_distance_on_known_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_distance(|x| x, &xs);
        assert!(d < 0.001);
        let d = ks_distance(|x| x * x, &xs);
        assert!(d > 0.2);
    }
}
