//! Central spin model of a Group V donor in silicon: Zeeman plus isotropic
//! hyperfine Hamiltonian, its closed-form eigensystem, polarisations,
//! frequency-field gradients and finders for the special magnetic fields
//! (optimal working points, clock transitions, cancellation resonances).
//!
//! Energies are angular frequencies in rad s^-1 throughout. The adiabatic
//! levels |+,m> / |-,m> mix the Zeeman product basis within doublets of
//! constant m = m_S + m_I; integer level labels count from 1 in order of
//! increasing energy.

use num_complex::Complex64;

use crate::algebra::{self, embed, CMatrix, CVector, ProductSpace};
use crate::error::{invalid, Result};

/// Gyromagnetic ratio of a donor electron in silicon, rad s^-1 T^-1.
pub const GAMMA_E_SILICON: f64 = 1.7591e11;
/// Gyromagnetic ratio of a 29Si nucleus, rad s^-1 T^-1.
pub const GAMMA_29SI: f64 = 5.31903e7;

/// Donor parameters. `spin2` holds twice the host nuclear spin quantum
/// number so half-integers stay exact.
#[derive(Debug, Clone, PartialEq)]
pub struct DonorParameters {
    pub name: String,
    /// Electron gyromagnetic ratio, rad s^-1 T^-1.
    pub gamma_e: f64,
    /// Host nuclear gyromagnetic ratio (signed), rad s^-1 T^-1.
    pub gamma_host: f64,
    /// Twice the host nuclear spin quantum number I.
    pub spin2: u32,
    /// Isotropic hyperfine constant A, rad s^-1.
    pub hyperfine_a: f64,
    /// Donor electron ionization energy, eV.
    pub ionization_energy_ev: f64,
}

impl DonorParameters {
    /// Built-in Group V donors. Accepts element names or symbols.
    pub fn builtin(name: &str) -> Result<Self> {
        let (name, gamma_host, spin2, hyperfine_a, ionization) =
            match name.to_ascii_lowercase().as_str() {
                "p" | "phosphorus" => ("phosphorus", -108.41e6, 1, 7.3846e8, 0.044),
                "as" | "arsenic" => ("arsenic", -45.95e6, 3, 1.2467e9, 0.049),
                "sb" | "antimony" => ("antimony", -64.44e6, 5, 1.174e9, 0.040),
                "bi" | "bismuth" => ("bismuth", -43.775e6, 9, 9.2702e9, 0.069),
                other => return Err(invalid(format!("unknown donor '{other}'"))),
            };
        Ok(Self {
            name: name.to_string(),
            gamma_e: GAMMA_E_SILICON,
            gamma_host,
            spin2,
            hyperfine_a,
            ionization_energy_ev: ionization,
        })
    }

    /// Load a donor from a key-value text file. Keys: `gamma_e`,
    /// `gamma_host` (M rad s^-1 T^-1), `spin_host` (e.g. `9/2`),
    /// `hyperfine_A` (M rad s^-1), `ionization_energy` (eV).
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut gamma_e = None;
        let mut gamma_host = None;
        let mut spin2 = None;
        let mut hyperfine = None;
        let mut ionization = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                crate::Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| crate::Error::Parse(format!("bad number '{v}' for {key}")))
            };
            match key {
                "gamma_e" => gamma_e = Some(parse(value)? * 1e6),
                "gamma_host" => gamma_host = Some(parse(value)? * 1e6),
                "spin_host" => {
                    let s = if let Some((num, den)) = value.split_once('/') {
                        parse(num.trim())? / parse(den.trim())?
                    } else {
                        parse(value)?
                    };
                    let twice = 2.0 * s;
                    if twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
                        return Err(crate::Error::Parse(format!("bad spin_host '{value}'")));
                    }
                    spin2 = Some(twice.round() as u32);
                }
                "hyperfine_A" => hyperfine = Some(parse(value)? * 1e6),
                "ionization_energy" => ionization = Some(parse(value)?),
                other => return Err(crate::Error::Parse(format!("unknown donor key '{other}'"))),
            }
        }
        let missing = |what: &str| crate::Error::Parse(format!("donor file missing {what}"));
        Ok(Self {
            name: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "custom".into()),
            gamma_e: gamma_e.ok_or_else(|| missing("gamma_e"))?,
            gamma_host: gamma_host.ok_or_else(|| missing("gamma_host"))?,
            spin2: spin2.ok_or_else(|| missing("spin_host"))?,
            hyperfine_a: hyperfine.ok_or_else(|| missing("hyperfine_A"))?,
            ionization_energy_ev: ionization.ok_or_else(|| missing("ionization_energy"))?,
        })
    }

    /// delta = gamma_host / gamma_e (dimensionless, |delta| << 1).
    pub fn delta(&self) -> f64 {
        self.gamma_host / self.gamma_e
    }

    /// Host nuclear spin I as a float.
    pub fn spin_host(&self) -> f64 {
        self.spin2 as f64 / 2.0
    }

    /// Hilbert-space dimension 2(2I + 1) = 4I + 2.
    pub fn dimension(&self) -> usize {
        2 * (self.spin2 as usize + 1)
    }
}

/// Adiabatic level label: branch sign and twice the quantum number
/// m = m_S + m_I.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdiabaticState {
    /// +1 or -1 branch.
    pub sign: i8,
    /// Twice m; |m2| <= spin2 + 1.
    pub m2: i32,
}

impl AdiabaticState {
    pub fn new(sign: i8, m2: i32, spin2: u32) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(invalid("branch sign must be +1 or -1"));
        }
        let limit = spin2 as i32 + 1;
        if m2.abs() > limit || (m2 - limit).rem_euclid(2) != 0 {
            return Err(invalid(format!("m2 = {m2} invalid for spin2 = {spin2}")));
        }
        // The only states at |m| = I + 1/2 are |+, I+1/2> and |-, -(I+1/2)>.
        if (m2 == limit && sign != 1) || (m2 == -limit && sign != -1) {
            return Err(invalid(format!("no ({sign}, {m2}) level exists")));
        }
        Ok(Self { sign, m2 })
    }

    /// Map a 1-based energy-ordered index to the adiabatic label.
    pub fn from_index(index: usize, spin2: u32) -> Result<Self> {
        let d = 2 * (spin2 as usize + 1);
        if index == 0 || index > d {
            return Err(invalid(format!("level index {index} out of 1..={d}")));
        }
        let i = index as i32;
        let i2 = spin2 as i32;
        let sign = if i >= i2 + 2 { 1 } else { -1 };
        let m2 = 2 * (i2 + 1 - i).abs() - i2 - 1;
        Ok(Self { sign, m2 })
    }

    /// Inverse of [`AdiabaticState::from_index`].
    pub fn index(&self, spin2: u32) -> usize {
        let i2 = spin2 as i32;
        let i = if self.sign > 0 {
            (3 * i2 + 3 + self.m2) / 2
        } else {
            (i2 + 1 - self.m2) / 2
        };
        i as usize
    }

    pub fn m(&self) -> f64 {
        self.m2 as f64 / 2.0
    }
}

/// Closed-form solution of one adiabatic doublet block. Dimensionless
/// quantities are in units of the hyperfine constant A.
#[derive(Debug, Clone, Copy)]
pub struct DoubletSolution {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub r: f64,
    pub omega: f64,
    pub delta_m: f64,
    pub epsilon: f64,
    /// Energies of the two branches of this doublet, rad s^-1.
    pub energy_plus: f64,
    pub energy_minus: f64,
}

/// One analytic level: label, doublet solution and its own energy.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticLevel {
    pub state: AdiabaticState,
    /// 1-based position in order of increasing energy.
    pub index: usize,
    pub doublet: DoubletSolution,
    pub energy: f64,
}

fn doublet_solution(p: &DonorParameters, b_field: f64, m2: i32) -> DoubletSolution {
    let a_hf = p.hyperfine_a;
    let delta = p.delta();
    let wt = p.gamma_e * b_field / a_hf;
    let m = m2 as f64 / 2.0;
    let i_spin = p.spin_host();
    let limit = p.spin2 as i32 + 1;

    if m2.abs() == limit {
        // Unmixed single states |+, I+1/2> and |-, -(I+1/2)>.
        let sign = m2.signum() as f64;
        let omega0 = p.gamma_e * b_field;
        let energy = sign * 0.5 * omega0 * (1.0 + 2.0 * delta * i_spin) + 0.5 * a_hf * i_spin;
        return DoubletSolution {
            a: 1.0,
            b: 0.0,
            theta: 0.0,
            r: 0.0,
            omega: 0.0,
            delta_m: 0.0,
            epsilon: 0.0,
            energy_plus: energy,
            energy_minus: energy,
        };
    }

    // 2x2 block on {|up, m-1/2>, |down, m+1/2>}. Diagonalising the donor
    // Hamiltonian puts (1 - delta) in the sigma_z coefficient; that sign is
    // what makes the closed forms agree with numerics to machine precision.
    let omega = m + wt * (1.0 - delta);
    let delta_m2 = (i_spin + 0.5).powi(2) - m * m;
    let delta_m = delta_m2.sqrt();
    let r = (omega * omega + delta_m2).sqrt();
    let theta = delta_m.atan2(omega);
    let epsilon = 0.5 * (1.0 - 4.0 * wt * m * delta);
    DoubletSolution {
        a: (0.5 * theta).cos(),
        b: (0.5 * theta).sin(),
        theta,
        r,
        omega,
        delta_m,
        epsilon,
        energy_plus: 0.5 * a_hf * (-epsilon + r),
        energy_minus: 0.5 * a_hf * (-epsilon - r),
    }
}

/// All 4I + 2 analytic levels at `b_field`, sorted by increasing energy.
pub fn analytic_eigensystem(p: &DonorParameters, b_field: f64) -> Vec<AnalyticLevel> {
    let limit = p.spin2 as i32 + 1;
    let mut levels = Vec::with_capacity(p.dimension());
    for m2 in (-limit..=limit).step_by(2) {
        let doublet = doublet_solution(p, b_field, m2);
        if m2.abs() == limit {
            let sign = m2.signum() as i8;
            levels.push(AnalyticLevel {
                state: AdiabaticState { sign, m2 },
                index: 0,
                doublet,
                energy: doublet.energy_plus,
            });
        } else {
            for sign in [-1i8, 1] {
                levels.push(AnalyticLevel {
                    state: AdiabaticState { sign, m2 },
                    index: 0,
                    doublet,
                    energy: if sign > 0 {
                        doublet.energy_plus
                    } else {
                        doublet.energy_minus
                    },
                });
            }
        }
    }
    levels.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    for (pos, level) in levels.iter_mut().enumerate() {
        level.index = pos + 1;
    }
    levels
}

/// Analytic level for a given label without building the whole system.
pub fn level(p: &DonorParameters, b_field: f64, state: &AdiabaticState) -> AnalyticLevel {
    let doublet = doublet_solution(p, b_field, state.m2);
    AnalyticLevel {
        state: *state,
        index: state.index(p.spin2),
        doublet,
        energy: if state.sign > 0 {
            doublet.energy_plus
        } else {
            doublet.energy_minus
        },
    }
}

fn state_from_index(p: &DonorParameters, index: usize) -> Result<AdiabaticState> {
    AdiabaticState::from_index(index, p.spin2)
}

/// Donor Hamiltonian as a dense matrix on the Zeeman product basis
/// (electron factor first, magnetic quantum numbers descending).
pub fn donor_hamiltonian(p: &DonorParameters, b_field: f64) -> Result<CMatrix> {
    if b_field < 0.0 {
        return Err(invalid("magnetic field must be non-negative"));
    }
    let s_ops = algebra::build_spin_operators(0.5)?;
    let i_ops = algebra::build_spin_operators(p.spin_host())?;
    let space = ProductSpace::new(vec![2, p.spin2 as usize + 1])?;
    let sz = embed(&s_ops.sz, 0, &space)?;
    let iz = embed(&i_ops.sz, 1, &space)?;
    let dot = &sz * &iz
        + (embed(&s_ops.s_plus, 0, &space)? * embed(&i_ops.s_minus, 1, &space)?
            + embed(&s_ops.s_minus, 0, &space)? * embed(&i_ops.s_plus, 1, &space)?)
        .scale(0.5);
    let omega0 = p.gamma_e * b_field;
    Ok((&sz + iz.scale(p.delta())).scale(omega0) + dot.scale(p.hyperfine_a))
}

/// Eigenvector of an adiabatic level in the Zeeman product basis.
pub fn zeeman_vector(p: &DonorParameters, b_field: f64, state: &AdiabaticState) -> CVector {
    let lvl = level(p, b_field, state);
    let dim_i = p.spin2 as usize + 1;
    let mut v = CVector::zeros(2 * dim_i);
    let i2 = p.spin2 as i32;
    // alpha multiplies |up, m - 1/2>, beta multiplies |down, m + 1/2>.
    let (alpha, beta) = if state.sign > 0 {
        (lvl.doublet.a, lvl.doublet.b)
    } else {
        (-lvl.doublet.b, lvl.doublet.a)
    };
    let up_mi2 = state.m2 - 1;
    let down_mi2 = state.m2 + 1;
    if up_mi2.abs() <= i2 {
        let row = ((i2 - up_mi2) / 2) as usize;
        v[row] = Complex64::new(alpha, 0.0);
    }
    if down_mi2.abs() <= i2 {
        let row = dim_i + ((i2 - down_mi2) / 2) as usize;
        v[row] = Complex64::new(beta, 0.0);
    }
    v
}

/// Polarisation P_i = 2 <i|S_z|i> of an adiabatic level; +/-1 when unmixed.
pub fn polarisation(p: &DonorParameters, b_field: f64, state: &AdiabaticState) -> f64 {
    if state.m2.abs() == p.spin2 as i32 + 1 {
        return state.sign as f64;
    }
    let lvl = level(p, b_field, state);
    state.sign as f64 * lvl.doublet.theta.cos()
}

/// Host nuclear z-projection expectation <I_z> = m - P_i / 2.
pub fn iz_expectation(p: &DonorParameters, b_field: f64, state: &AdiabaticState) -> f64 {
    state.m() - 0.5 * polarisation(p, b_field, state)
}

/// Transition frequency (E_u - E_l) / 2 pi in Hz for 1-based level indices.
pub fn transition_frequency(
    p: &DonorParameters,
    b_field: f64,
    upper: usize,
    lower: usize,
) -> Result<f64> {
    if upper == lower {
        return Err(invalid("upper and lower levels must differ"));
    }
    let u = level(p, b_field, &state_from_index(p, upper)?);
    let l = level(p, b_field, &state_from_index(p, lower)?);
    Ok((u.energy - l.energy) / std::f64::consts::TAU)
}

/// Frequency-field gradient df/dB in Hz T^-1, from the Hellmann-Feynman
/// expectation values of the two Zeeman operators.
pub fn df_db(p: &DonorParameters, b_field: f64, upper: usize, lower: usize) -> Result<f64> {
    if upper == lower {
        return Err(invalid("upper and lower levels must differ"));
    }
    let su = state_from_index(p, upper)?;
    let sl = state_from_index(p, lower)?;
    let pu = polarisation(p, b_field, &su);
    let pl = polarisation(p, b_field, &sl);
    let izu = iz_expectation(p, b_field, &su);
    let izl = iz_expectation(p, b_field, &sl);
    Ok((0.5 * p.gamma_e * (pu - pl) + p.gamma_host * (izu - izl)) / std::f64::consts::TAU)
}

fn bisect(mut lo: f64, mut hi: f64, mut flo: f64, f: &mut dyn FnMut(f64) -> f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm >= 0.0) == (flo >= 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scan for a sign change of `f` on [lo, hi] with the given step, then
/// bisect. Returns the first root, or None without a sign change.
fn scan_root(lo: f64, hi: f64, step: f64, f: &mut dyn FnMut(f64) -> f64, tol: f64) -> Option<f64> {
    let mut b_prev = lo;
    let mut f_prev = f(lo);
    while b_prev < hi {
        let b = (b_prev + step).min(hi);
        let fb = f(b);
        if f_prev == 0.0 {
            return Some(b_prev);
        }
        if (fb >= 0.0) != (f_prev >= 0.0) {
            return Some(bisect(b_prev, b, f_prev, f, tol));
        }
        b_prev = b;
        f_prev = fb;
    }
    None
}

/// Optimal working point: field where P_u = P_l inside the bracket, found
/// by bisection on a sign change of the polarisation difference scanned in
/// 1 mT steps. Absence of a sign change is a valid result (`None`).
pub fn find_owp(
    p: &DonorParameters,
    upper: usize,
    lower: usize,
    bracket: (f64, f64),
) -> Result<Option<f64>> {
    if !(bracket.0.is_finite() && bracket.1.is_finite() && bracket.0 < bracket.1) {
        return Err(invalid("bracket must be a finite, ordered field range"));
    }
    let su = state_from_index(p, upper)?;
    let sl = state_from_index(p, lower)?;
    let mut f = |b: f64| polarisation(p, b, &su) - polarisation(p, b, &sl);
    Ok(scan_root(bracket.0, bracket.1, 1e-3, &mut f, 1e-12))
}

/// Clock transition: field where df/dB = 0 inside the bracket.
pub fn find_clock_transition(
    p: &DonorParameters,
    upper: usize,
    lower: usize,
    bracket: (f64, f64),
) -> Result<Option<f64>> {
    if !(bracket.0.is_finite() && bracket.1.is_finite() && bracket.0 < bracket.1) {
        return Err(invalid("bracket must be a finite, ordered field range"));
    }
    df_db(p, bracket.0, upper, lower)?;
    let mut f = |b: f64| df_db(p, b, upper, lower).unwrap();
    Ok(scan_root(bracket.0, bracket.1, 1e-3, &mut f, 1e-12))
}

/// Cancellation resonance of the doublet `m2`: the field where the
/// sigma_z coefficient Omega_m vanishes, omega0 (1 - delta) = -m A.
pub fn cancellation_resonance(p: &DonorParameters, m2: i32) -> Result<f64> {
    let max = p.spin2 as i32 - 1;
    if m2 > 0 || m2 < -max {
        return Err(invalid(format!(
            "cancellation resonances need -(I - 1/2) <= m <= 0, got m2 = {m2}"
        )));
    }
    let m = m2 as f64 / 2.0;
    Ok(-m * p.hyperfine_a / (p.gamma_e * (1.0 - p.delta())))
}

/// ESR transition amplitude |<u|S_x|l>| from the analytic amplitudes.
/// Zero unless the levels differ by exactly one in m.
pub fn transition_amplitude(
    p: &DonorParameters,
    b_field: f64,
    upper: usize,
    lower: usize,
) -> Result<f64> {
    if upper == lower {
        return Err(invalid("upper and lower levels must differ"));
    }
    let su = state_from_index(p, upper)?;
    let sl = state_from_index(p, lower)?;
    if (su.m2 - sl.m2).abs() != 2 {
        return Ok(0.0);
    }
    let (hi, lo) = if su.m2 > sl.m2 { (su, sl) } else { (sl, su) };
    let lvl_hi = level(p, b_field, &hi);
    let lvl_lo = level(p, b_field, &lo);
    let alpha_hi = if hi.sign > 0 {
        lvl_hi.doublet.a
    } else {
        -lvl_hi.doublet.b
    };
    let beta_lo = if lo.sign > 0 {
        lvl_lo.doublet.b
    } else {
        lvl_lo.doublet.a
    };
    Ok((0.5 * alpha_hi * beta_lo).abs())
}

/// One located magnetic-resonance line.
#[derive(Debug, Clone, Copy)]
pub struct ResonanceLine {
    pub upper: usize,
    pub lower: usize,
    pub field: f64,
    pub amplitude: f64,
}

/// All fields in `(b_min, b_max]` where a pair of levels is split by
/// `frequency` Hz with transition amplitude at least `amp_threshold`.
/// A threshold of 0.05 keeps the dipole-allowed lines while rejecting
/// doubly-forbidden crossings whose intensity is below a percent of the
/// strong lines.
pub fn esr_resonance_fields(
    p: &DonorParameters,
    frequency: f64,
    b_range: (f64, f64),
    amp_threshold: f64,
) -> Vec<ResonanceLine> {
    let d = p.dimension();
    let mut lines = Vec::new();
    let step = 1e-3;
    for upper in 2..=d {
        for lower in 1..upper {
            let su = AdiabaticState::from_index(upper, p.spin2).unwrap();
            let sl = AdiabaticState::from_index(lower, p.spin2).unwrap();
            if (su.m2 - sl.m2).abs() != 2 {
                continue;
            }
            let mut f = |b: f64| transition_frequency(p, b, upper, lower).unwrap() - frequency;
            // Line frequencies have at most one interior extremum, so roots
            // are isolated on a millitesla scan.
            let mut lo = b_range.0.max(step);
            while let Some(b) = scan_root(lo, b_range.1, step, &mut f, 1e-7) {
                let amplitude = transition_amplitude(p, b, upper, lower).unwrap();
                if amplitude >= amp_threshold {
                    lines.push(ResonanceLine {
                        upper,
                        lower,
                        field: b,
                        amplitude,
                    });
                }
                lo = b + 2.0 * step;
                if lo >= b_range.1 {
                    break;
                }
            }
        }
    }
    lines.sort_by(|a, b| a.field.partial_cmp(&b.field).unwrap());
    lines
}

/// Rabi transition probability for excitation amplitude `nu1`, excitation
/// frequency `nu` and level splitting `nu_b`, all in Hz.
pub fn rabi_probability(nu1: f64, nu: f64, nu_b: f64, t: f64, t0: f64) -> Result<f64> {
    if nu1 <= 0.0 {
        return Err(invalid("excitation amplitude nu1 must be positive"));
    }
    let nu_r = (nu1 * nu1 + (nu - nu_b).powi(2)).sqrt();
    let s = (std::f64::consts::PI * nu_r * (t - t0)).sin();
    Ok((nu1 / nu_r).powi(2) * s * s)
}
