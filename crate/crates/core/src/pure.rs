//! Density of states for the pure-state (Haar) microcanonical ensemble.
//!
//! For a Haar-random |ψ⟩ the populations p_k = |⟨k|ψ⟩|² are uniform on the
//! probability simplex, so the energy ⟨ψ|H|ψ⟩ = Σ p_k E_k carries the
//! classic simplex-projection density
//!
//!   ω(E) = (d-1) Σ_k (E_k - E)₊^{d-2} / Π_{j≠k} (E_k - E_j),
//!
//! a piecewise polynomial that already integrates to one. The divided
//! differences cancel catastrophically near whichever end of the spectrum
//! the truncation leaves many active terms, so the mirrored form (powers of
//! E - E_k) is used on the lower half of the domain and the original form
//! on the upper half.

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone)]
pub struct PureOptions {
    /// Split exactly degenerate levels by this fraction of the span instead
    /// of refusing them. `None` keeps the strict non-degenerate contract.
    pub degeneracy_split_rel: Option<f64>,
}

impl Default for PureOptions {
    fn default() -> Self {
        PureOptions {
            degeneracy_split_rel: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PureDos {
    spectrum: Spectrum,
    /// Working levels (split if requested), ascending, all simple.
    levels: Vec<f64>,
    /// Π_{j≠k} (E_j - E_k): denominators for the lower-half (mirrored) form.
    left_denom: Vec<f64>,
    /// Π_{j≠k} (E_k - E_j): denominators for the upper-half form.
    right_denom: Vec<f64>,
}

impl PureDos {
    pub fn new(spectrum: &Spectrum, options: PureOptions) -> Result<Self> {
        let degenerate = spectrum.multiplicities().iter().any(|&n| n > 1);
        let levels: Vec<f64> = if !degenerate {
            spectrum.levels().to_vec()
        } else {
            match options.degeneracy_split_rel {
                None => {
                    return Err(Error::UnsupportedDegenerate(
                        "pure-state closed form needs simple levels; \
                         split them or fall back to the Monte Carlo estimate"
                            .into(),
                    ))
                }
                Some(rel) => {
                    let span = spectrum.span();
                    let min_gap = spectrum
                        .levels()
                        .windows(2)
                        .map(|w| w[1] - w[0])
                        .fold(f64::INFINITY, f64::min);
                    let max_mult = *spectrum.multiplicities().iter().max().unwrap() as f64;
                    let eta = (rel * span).min(0.25 * min_gap / max_mult);
                    let mut out = Vec::with_capacity(spectrum.dim() as usize);
                    for (&e, &n) in spectrum.levels().iter().zip(spectrum.multiplicities()) {
                        let n = n as i64;
                        for i in 0..n {
                            out.push(e + eta * (i as f64 - 0.5 * (n - 1) as f64));
                        }
                    }
                    out
                }
            }
        };
        let d = levels.len();
        if d < 2 {
            return Err(Error::InvalidDimension("need at least two levels".into()));
        }
        let mut left = vec![1.0f64; d];
        let mut right = vec![1.0f64; d];
        for k in 0..d {
            for j in 0..d {
                if j == k {
                    continue;
                }
                left[k] *= levels[j] - levels[k];
                right[k] *= levels[k] - levels[j];
            }
            if left[k] == 0.0 || !left[k].is_finite() {
                return Err(Error::DegenerateGap(levels[k], levels[k]));
            }
        }
        Ok(PureDos {
            spectrum: spectrum.clone(),
            levels,
            left_denom: left,
            right_denom: right,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0]
    }

    pub fn max_energy(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    fn dim(&self) -> usize {
        self.levels.len()
    }

    /// Ω(E): the CDF of ⟨ψ|H|ψ⟩, exactly 0 below and 1 above the spectrum.
    pub fn omega(&self, e: f64) -> Result<f64> {
        if e.is_nan() {
            return Err(Error::InvalidArgument("NaN energy".into()));
        }
        if e <= self.ground_energy() {
            return Ok(0.0);
        }
        if e >= self.max_energy() {
            return Ok(1.0);
        }
        let d = self.dim();
        let mid = 0.5 * (self.ground_energy() + self.max_energy());
        let mut acc = 0.0f64;
        let mut comp = 0.0f64;
        if e <= mid {
            for k in 0..d {
                if self.levels[k] >= e {
                    break;
                }
                let v = (e - self.levels[k]).powi(d as i32 - 1) / self.left_denom[k];
                let t = acc + v;
                comp += if acc.abs() >= v.abs() {
                    (acc - t) + v
                } else {
                    (v - t) + acc
                };
                acc = t;
            }
            Ok((acc + comp).clamp(0.0, 1.0))
        } else {
            for k in (0..d).rev() {
                if self.levels[k] <= e {
                    break;
                }
                let v = (self.levels[k] - e).powi(d as i32 - 1) / self.right_denom[k];
                let t = acc + v;
                comp += if acc.abs() >= v.abs() {
                    (acc - t) + v
                } else {
                    (v - t) + acc
                };
                acc = t;
            }
            Ok((1.0 - (acc + comp)).clamp(0.0, 1.0))
        }
    }

    /// ω(E): the density, continuous across the knots for d ≥ 4.
    pub fn density(&self, e: f64) -> Result<f64> {
        if e.is_nan() {
            return Err(Error::InvalidArgument("NaN energy".into()));
        }
        if e <= self.ground_energy() || e >= self.max_energy() {
            return Ok(0.0);
        }
        let d = self.dim();
        let mid = 0.5 * (self.ground_energy() + self.max_energy());
        let scale = (d - 1) as f64;
        let mut acc = 0.0f64;
        if e <= mid {
            for k in 0..d {
                if self.levels[k] >= e {
                    break;
                }
                acc += (e - self.levels[k]).powi(d as i32 - 2) / self.left_denom[k];
            }
            Ok((scale * acc).max(0.0))
        } else {
            for k in (0..d).rev() {
                if self.levels[k] <= e {
                    break;
                }
                acc += (self.levels[k] - e).powi(d as i32 - 2) / self.right_denom[k];
            }
            Ok((scale * acc).max(0.0))
        }
    }
}

/// Density of ⟨ψ|H|ψ⟩ for Haar ψ (strict contract: simple levels only).
pub fn pure_omega_density(spectrum: &Spectrum, e: f64) -> Result<f64> {
    PureDos::new(spectrum, PureOptions::default())?.density(e)
}

/// Integrated density of states, plateau-normalized (the plateau is one).
pub fn pure_omega_integrated(spectrum: &Spectrum, e: f64) -> Result<f64> {
    PureDos::new(spectrum, PureOptions::default())?.omega(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::spectrum::{linear_spectrum, noninteracting_spins};

    #[test]
    fn qubit_is_uniform() {
        let s = linear_spectrum(2, 1.0).unwrap();
        let dos = PureDos::new(&s, PureOptions::default()).unwrap();
        for e in [0.1, 0.3, 0.62, 0.9] {
            assert!((dos.density(e).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((dos.omega(0.5).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn d3_tent_density() {
        let s = linear_spectrum(3, 1.0).unwrap();
        let dos = PureDos::new(&s, PureOptions::default()).unwrap();
        // tent on [0,2] peaking at 1 with height 1
        assert!((dos.density(1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((dos.density(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((dos.omega(1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((dos.omega(2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        for d in 2..=6u64 {
            let s = linear_spectrum(d, 1.0).unwrap();
            let dos = PureDos::new(&s, PureOptions::default()).unwrap();
            let r = quad::integrate(
                |e| dos.density(e).unwrap(),
                0.0,
                (d - 1) as f64,
                1e-10,
                0.0,
                1 << 14,
            );
            assert!((r.value - 1.0).abs() < 1e-8, "d = {d}: {}", r.value);
        }
    }

    #[test]
    fn halves_agree_at_the_crossover() {
        let s = linear_spectrum(5, 1.0).unwrap();
        let dos = PureDos::new(&s, PureOptions::default()).unwrap();
        let mid = 2.0;
        let a = dos.omega(mid - 1e-9).unwrap();
        let b = dos.omega(mid + 1e-9).unwrap();
        assert!((a - b).abs() < 1e-8);
        let da = dos.density(mid - 1e-9).unwrap();
        let db = dos.density(mid + 1e-9).unwrap();
        assert!((da - db).abs() < 1e-8);
    }

    #[test]
    fn continuous_across_knots() {
        let s = linear_spectrum(5, 1.0).unwrap();
        let dos = PureDos::new(&s, PureOptions::default()).unwrap();
        for knot in [1.0, 3.0] {
            let a = dos.density(knot - 1e-9).unwrap();
            let b = dos.density(knot + 1e-9).unwrap();
            assert!((a - b).abs() < 1e-6, "knot {knot}: {a} vs {b}");
        }
    }

    #[test]
    fn density_matches_omega_derivative() {
        let s = linear_spectrum(4, 1.0).unwrap();
        let dos = PureDos::new(&s, PureOptions::default()).unwrap();
        for e in [0.4, 1.1, 1.9, 2.6] {
            let h = 1e-6;
            let fd = (dos.omega(e + h).unwrap() - dos.omega(e - h).unwrap()) / (2.0 * h);
            let an = dos.density(e).unwrap();
            assert!((fd - an).abs() < 1e-7, "E = {e}: {fd} vs {an}");
        }
    }

    #[test]
    fn degenerate_needs_opt_in() {
        let s = noninteracting_spins(2, 1.0).unwrap();
        assert!(matches!(
            PureDos::new(&s, PureOptions::default()),
            Err(Error::UnsupportedDegenerate(_))
        ));
        let dos = PureDos::new(
            &s,
            PureOptions {
                degeneracy_split_rel: Some(1e-3),
            },
        )
        .unwrap();
        // CDF sane and monotone
        let mut prev = 0.0;
        for i in 0..=20 {
            let e = -1.0 + 2.0 * i as f64 / 20.0;
            let v = dos.omega(e).unwrap();
            assert!(v + 1e-9 >= prev);
            prev = v;
        }
    }

    #[test]
    fn outside_domain() {
        let s = linear_spectrum(3, 1.0).unwrap();
        let dos = PureDos::new(&s, PureOptions::default()).unwrap();
        assert_eq!(dos.density(-1.0).unwrap(), 0.0);
        assert_eq!(dos.density(5.0).unwrap(), 0.0);
        assert_eq!(dos.omega(-1.0).unwrap(), 0.0);
        assert_eq!(dos.omega(5.0).unwrap(), 1.0);
    }
}
