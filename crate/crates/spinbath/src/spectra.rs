//! ENDOR resonance positions and spectrum synthesis, plus
//! stretched-exponential fitting of coherence decays.

use crate::error::{invalid, Result};

/// One hyperfine coupling feeding the spectrum synthesis. Couplings are
/// angular frequencies (rad s^-1); the anisotropic part `t_aniso` is zero
/// for purely isotropic lines.
#[derive(Debug, Clone, Copy)]
pub struct EndorCoupling {
    pub a_iso: f64,
    pub t_aniso: f64,
    /// Angle between the field and the donor-nucleus axis, radians.
    /// Ignored for isotropic lines.
    pub theta: f64,
    /// Peak area, arbitrary units.
    pub amplitude: f64,
    /// Shared full width at half maximum, Hz.
    pub fwhm: f64,
}

/// Isotropic ENDOR resonance offset for central level polarisation `p_i`:
/// |gamma_n B + a_iso P_i / 2| / 2 pi, in Hz.
pub fn endor_resonance_iso(gamma_n: f64, b_field: f64, a_iso: f64, p_i: f64) -> Result<f64> {
    if b_field < 0.0 {
        return Err(invalid("field must be non-negative"));
    }
    Ok((gamma_n * b_field + 0.5 * a_iso * p_i).abs() / std::f64::consts::TAU)
}

/// Anisotropic ENDOR resonance for coupling (a_iso, T) at angle theta:
/// the exact splitting of the conditional nuclear doublet,
/// sqrt([gn B + a_perp P/2]^2 sin^2 + [gn B + a_par P/2]^2 cos^2) / 2 pi,
/// with a_par = a_iso + 2T, a_perp = a_iso - T. Reduces to the isotropic
/// form at T = 0.
pub fn endor_resonance_aniso(
    gamma_n: f64,
    b_field: f64,
    a_iso: f64,
    t_aniso: f64,
    theta: f64,
    p_i: f64,
) -> Result<f64> {
    if b_field < 0.0 {
        return Err(invalid("field must be non-negative"));
    }
    let a_par = a_iso + 2.0 * t_aniso;
    let a_perp = a_iso - t_aniso;
    let (s, c) = theta.sin_cos();
    let perp = gamma_n * b_field + 0.5 * a_perp * p_i;
    let par = gamma_n * b_field + 0.5 * a_par * p_i;
    Ok((perp * perp * s * s + par * par * c * c).sqrt() / std::f64::consts::TAU)
}

/// Sum of equal-width Gaussians at the upper- and lower-level resonance
/// positions of every coupling, evaluated on a sorted frequency grid (Hz).
pub fn synthesize_spectrum(
    couplings: &[EndorCoupling],
    gamma_n: f64,
    b_field: f64,
    p_upper: f64,
    p_lower: f64,
    grid_hz: &[f64],
) -> Result<Vec<f64>> {
    if grid_hz.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("frequency grid must be sorted"));
    }
    let mut intensity = vec![0.0; grid_hz.len()];
    for coupling in couplings {
        if !(coupling.fwhm > 0.0) {
            return Err(invalid("linewidth must be positive"));
        }
        let sigma = coupling.fwhm / (8.0 * 2.0_f64.ln()).sqrt();
        let norm = coupling.amplitude / (sigma * std::f64::consts::TAU.sqrt());
        for p_i in [p_upper, p_lower] {
            let center = endor_resonance_aniso(
                gamma_n,
                b_field,
                coupling.a_iso,
                coupling.t_aniso,
                coupling.theta,
                p_i,
            )?;
            for (v, &f) in intensity.iter_mut().zip(grid_hz) {
                let x = (f - center) / sigma;
                *v += norm * (-0.5 * x * x).exp();
            }
        }
    }
    Ok(intensity)
}

/// Fit of exp(-t/T2' - (t/T2)^n) to a decay, with the model-free 1/e
/// crossing alongside.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub t2: f64,
    pub t2_prime: f64,
    pub exponent: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// First downward 1/e crossing by linear interpolation, if any.
    pub one_over_e: Option<f64>,
}

fn model(t: f64, t2: f64, n: f64, rate_prime: f64) -> f64 {
    let stretched = if t2.is_infinite() { 0.0 } else { (t / t2).powf(n) };
    (-t * rate_prime - stretched).exp()
}

fn rms(times: &[f64], values: &[f64], t2: f64, n: f64, rate_prime: f64) -> f64 {
    let sum: f64 = times
        .iter()
        .zip(values)
        .map(|(&t, &v)| {
            let d = model(t, t2, n, rate_prime) - v;
            d * d
        })
        .sum();
    (sum / times.len() as f64).sqrt()
}

/// Moving average with an odd window, used to pre-smooth oscillatory
/// dynamical-decoupling traces before the 1/e search.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 || values.is_empty() {
        return values.to_vec();
    }
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// First downward crossing of 1/e, by linear interpolation on the samples.
pub fn one_over_e_time(times: &[f64], values: &[f64]) -> Option<f64> {
    let target = (-1.0_f64).exp();
    for i in 1..values.len().min(times.len()) {
        if values[i - 1] >= target && values[i] < target {
            let frac = (values[i - 1] - target) / (values[i - 1] - values[i]);
            return Some(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    None
}

/// Least-squares fit of exp(-t/T2' - (t/T2)^n) by a coarse grid search over
/// (T2, n, 1/T2') followed by cyclic golden-section refinement. The
/// exponent is constrained to (0.5, 4]. Traces that never reach 1/e come
/// back flagged with an infinite T2.
pub fn fit_decay(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(invalid("need at least 8 (time, value) samples"));
    }
    let one_over_e = one_over_e_time(times, values);
    let t_scale = match one_over_e {
        Some(t) => t,
        None => {
            // Not enough decay to pin the stretched time constant.
            return Ok(DecayFit {
                t2: f64::INFINITY,
                t2_prime: f64::INFINITY,
                exponent: 1.0,
                residual: f64::NAN,
                one_over_e: None,
            });
        }
    };

    let mut best = (t_scale, 2.0, 0.0);
    let mut best_res = f64::INFINITY;
    for i in 0..40 {
        let t2 = t_scale * (10.0_f64).powf(-0.7 + 1.4 * i as f64 / 39.0);
        for j in 0..36 {
            let n = 0.55 + 3.45 * j as f64 / 35.0;
            for k in 0..8 {
                let rate_prime = if k == 0 {
                    0.0
                } else {
                    (10.0_f64).powf(-3.0 + 3.0 * (k - 1) as f64 / 6.0) / t_scale
                };
                let r = rms(times, values, t2, n, rate_prime);
                if r < best_res {
                    best_res = r;
                    best = (t2, n, rate_prime);
                }
            }
        }
    }

    // Cyclic golden-section refinement of each coordinate.
    let golden = |mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        for _ in 0..60 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = f(x2);
            }
        }
        if f1 < f2 {
            x1
        } else {
            x2
        }
    };
    for cycle in 0..24 {
        let (t2, n, rp) = best;
        let w = if cycle < 8 { 0.5 } else { 0.12 };
        let t2 = golden(t2 * (1.0 - w), t2 * (1.0 + w), &|x| {
            rms(times, values, x, n, rp)
        });
        let n2 = golden((n - 0.4).max(0.5), (n + 0.4).min(4.0), &|x| {
            rms(times, values, t2, x, rp)
        });
        let rp2 = golden(0.0, (rp * 3.0).max(0.3 / t_scale), &|x| {
            rms(times, values, t2, n2, x)
        });
        best = (t2, n2, rp2);
        best_res = rms(times, values, t2, n2, rp2);
    }

    Ok(DecayFit {
        t2: best.0,
        t2_prime: if best.2 > 0.0 {
            1.0 / best.2
        } else {
            f64::INFINITY
        },
        exponent: best.1,
        residual: best_res,
        one_over_e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::donor::{self, AdiabaticState, DonorParameters, GAMMA_29SI};
    use num_complex::Complex64;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn zeeman_line_at_known_field() {
        // Decoupled nucleus: the line sits at the nuclear Zeeman frequency.
        let f = endor_resonance_iso(GAMMA_29SI, 0.4799, 5e6, 0.0).unwrap();
        assert!((f - 4.06e6).abs() < 0.01e6, "f = {f}");
    }

    #[test]
    fn aniso_reduces_to_iso_at_zero_t() {
        for theta in [0.0, 0.4, 1.2] {
            let iso = endor_resonance_iso(GAMMA_29SI, 0.3, 4e6, 0.7).unwrap();
            let aniso = endor_resonance_aniso(GAMMA_29SI, 0.3, 4e6, 0.0, theta, 0.7).unwrap();
            assert!((iso - aniso).abs() <= 1e-9 * iso);
        }
    }

    #[test]
    fn aniso_matches_block_hamiltonian() {
        // Oracle: diagonalise the conditional 2x2 nuclear block
        // [gn B/2 + alpha P/4, beta P/4; beta P/4, -gn B/2 - alpha P/4]
        // and compare the splitting with the closed form.
        let p = DonorParameters::builtin("bi").unwrap();
        let b = 0.4799;
        let (a_iso, t_aniso) = (
            3.36e6 * std::f64::consts::TAU,
            2.56e6 * std::f64::consts::TAU,
        );
        for (u, l) in [(11, 10), (12, 9)] {
            for state_index in [u, l] {
                let st = AdiabaticState::from_index(state_index, p.spin2).unwrap();
                let p_i = donor::polarisation(&p, b, &st);
                for k in 0..=16 {
                    let theta = std::f64::consts::PI * k as f64 / 16.0;
                    let a_par = a_iso + 2.0 * t_aniso;
                    let a_perp = a_iso - t_aniso;
                    let alpha = a_par * theta.cos().powi(2) + a_perp * theta.sin().powi(2);
                    let beta = 3.0 * t_aniso * theta.sin() * theta.cos();
                    let diag = 0.5 * GAMMA_29SI * b + 0.25 * alpha * p_i;
                    let off = 0.25 * beta * p_i;
                    let split = 2.0 * (diag * diag + off * off).sqrt() / std::f64::consts::TAU;
                    let formula =
                        endor_resonance_aniso(GAMMA_29SI, b, a_iso, t_aniso, theta, p_i).unwrap();
                    assert!(
                        (split - formula).abs() <= 1e-6 * split,
                        "theta = {theta}: block {split} vs formula {formula}"
                    );
                }
            }
        }
    }

    #[test]
    fn comb_collapses_at_the_working_point() {
        let p = DonorParameters::builtin("bi").unwrap();
        let owp = donor::find_owp(&p, 12, 9, (0.1, 0.3)).unwrap().unwrap();
        let s12 = AdiabaticState::from_index(12, p.spin2).unwrap();
        let s9 = AdiabaticState::from_index(9, p.spin2).unwrap();
        let couplings_mhz = [0.5, 1.2, 2.2, 3.1, 4.5, 6.0];
        let spread = |b: f64| -> f64 {
            let pu = donor::polarisation(&p, b, &s12);
            let pl = donor::polarisation(&p, b, &s9);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &mhz in &couplings_mhz {
                let a = mhz * 1e6 * std::f64::consts::TAU;
                for p_i in [pu, pl] {
                    let f = endor_resonance_iso(GAMMA_29SI, b, a, p_i).unwrap();
                    lo = lo.min(f);
                    hi = hi.max(f);
                }
            }
            hi - lo
        };
        let wide = spread(0.4799);
        let narrow = spread(owp);
        assert!(
            narrow < wide / 10.0,
            "comb width {narrow} Hz at the OWP vs {wide} Hz at high field"
        );
    }

    #[test]
    fn single_coupling_at_owp_gives_one_peak() {
        let coupling = EndorCoupling {
            a_iso: 3e6 * std::f64::consts::TAU,
            t_aniso: 0.0,
            theta: 0.0,
            amplitude: 1.0,
            fwhm: 0.12e6,
        };
        let grid: Vec<f64> = (0..4000).map(|i| 1e6 + i as f64 * 2e3).collect();
        // Equal polarisations: upper and lower peaks coincide.
        let spec = synthesize_spectrum(&[coupling], GAMMA_29SI, 0.188, 0.1, 0.1, &grid).unwrap();
        let max = spec.iter().cloned().fold(0.0_f64, f64::max);
        let above: Vec<usize> = (0..grid.len()).filter(|&i| spec[i] > max / 2.0).collect();
        // Contiguous half-maximum region: one peak.
        assert!(above.windows(2).all(|w| w[1] - w[0] == 1));
        let fwhm_hz = (above.len() - 1) as f64 * 2e3;
        assert!((fwhm_hz - 0.12e6).abs() < 0.015e6, "width {fwhm_hz}");
    }

    #[test]
    fn spectrum_area_stable_under_grid_refinement_and_linear() {
        let couplings = vec![
            EndorCoupling {
                a_iso: 2e6 * std::f64::consts::TAU,
                t_aniso: 0.0,
                theta: 0.0,
                amplitude: 1.0,
                fwhm: 0.12e6,
            },
            EndorCoupling {
                a_iso: 5e6 * std::f64::consts::TAU,
                t_aniso: 0.0,
                theta: 0.0,
                amplitude: 0.5,
                fwhm: 0.12e6,
            },
        ];
        let area = |n: usize| -> f64 {
            let grid: Vec<f64> = (0..n).map(|i| 1e6 + 9e6 * i as f64 / (n - 1) as f64).collect();
            let spec =
                synthesize_spectrum(&couplings, GAMMA_29SI, 0.4799, 0.9, -0.8, &grid).unwrap();
            let h = grid[1] - grid[0];
            spec.iter().sum::<f64>() * h
        };
        let coarse = area(2_000);
        let fine = area(20_000);
        assert!((coarse - fine).abs() <= 1e-3 * fine.abs());
        // Total area = sum of amplitudes over both levels.
        assert!((fine - 2.0 * 1.5).abs() <= 1e-3 * fine);
        // Linearity in the amplitudes.
        let grid: Vec<f64> = (0..2000).map(|i| 1e6 + 9e6 * i as f64 / 1999.0).collect();
        let s1 = synthesize_spectrum(&couplings[..1], GAMMA_29SI, 0.4799, 0.9, -0.8, &grid).unwrap();
        let s2 = synthesize_spectrum(&couplings[1..], GAMMA_29SI, 0.4799, 0.9, -0.8, &grid).unwrap();
        let s12 = synthesize_spectrum(&couplings, GAMMA_29SI, 0.4799, 0.9, -0.8, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((s12[i] - s1[i] - s2[i]).abs() <= 1e-12 * s12[i].max(1e-12));
        }
    }

    #[test]
    fn fit_recovers_exact_gaussian() {
        let times: Vec<f64> = (0..128).map(|i| i as f64 * 3e-3 / 127.0).collect();
        let values: Vec<f64> = times.iter().map(|&t| (-(t / 1e-3).powi(2)).exp()).collect();
        let fit = fit_decay(&times, &values).unwrap();
        assert!((fit.t2 - 1e-3).abs() <= 1e-6, "T2 = {}", fit.t2);
        assert!((fit.exponent - 2.0).abs() <= 1e-2, "n = {}", fit.exponent);
        assert!(fit.t2_prime > 0.1, "T2' = {}", fit.t2_prime);
        let crossing = fit.one_over_e.unwrap();
        assert!((crossing - 1e-3).abs() <= 2e-5);
        assert!((fit.t2 - crossing).abs() <= 0.02 * fit.t2);
    }

    #[test]
    fn fit_recovers_stretched_exponential_with_noise() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(9);
        let t2_true = 0.5e-3;
        let n_true = 2.3;
        let times: Vec<f64> = (0..128).map(|i| i as f64 * 2e-3 / 127.0).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| (-(t / t2_true).powf(n_true)).exp() + rng.gen_range(-0.01..0.01))
            .collect();
        let fit = fit_decay(&times, &values).unwrap();
        assert!((fit.t2 - t2_true).abs() <= 0.05 * t2_true, "T2 = {}", fit.t2);
        assert!((fit.exponent - n_true).abs() <= 0.2, "n = {}", fit.exponent);
    }

    #[test]
    fn fit_flags_non_decaying_trace() {
        let times: Vec<f64> = (0..64).map(|i| i as f64 * 1e-3).collect();
        let values = vec![1.0; 64];
        let fit = fit_decay(&times, &values).unwrap();
        assert!(fit.t2.is_infinite());
        assert!(fit.one_over_e.is_none());
    }

    #[test]
    fn smoothing_tames_oscillatory_traces() {
        let times: Vec<f64> = (0..256).map(|i| i as f64 * 4e-3 / 255.0).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| (-(t / 1e-3).powi(2)).exp() * (1.0 + 0.2 * (t * 40e3).sin()))
            .collect();
        let smooth = moving_average(&values, 5);
        let t_raw = one_over_e_time(&times, &values).unwrap();
        let t_smooth = one_over_e_time(&times, &smooth).unwrap();
        assert!((t_smooth - 1e-3).abs() <= (t_raw - 1e-3).abs() + 1e-6);
        assert!((t_smooth - 1e-3).abs() <= 0.1e-3);
    }

    #[test]
    fn complex_trace_modulus_helper() {
        // The fitting interface takes |L| samples; check a complex trace's
        // moduli pipeline end to end.
        let times: Vec<f64> = (0..64).map(|i| i as f64 * 1e-3 / 63.0).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                Complex64::from_polar((-(t / 0.4e-3).powi(2)).exp(), 3.0 * t / 1e-3).norm()
            })
            .collect();
        let fit = fit_decay(&times, &values).unwrap();
        assert!((fit.t2 - 0.4e-3).abs() <= 0.01 * 0.4e-3);
    }
}
