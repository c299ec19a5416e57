//! Closed-form pair-correlation theory: conditional two-level evolution of
//! a flip-flopping bath pair, free-induction and echo envelopes, per-pair
//! T2 weights and the analytic T2 estimate.
//!
//! A bath pair seen by the central spin in level i precesses about the
//! effective field (C12, 0, z_i) on the flip-flop basis {|ud>, |du>},
//! with conditional Hamiltonian h_i = (z_i sigma_z + C12 sigma_x)/4.
//! For the hybrid qubit z_i = P_i (J_1 - J_2); for a nuclear qubit inside
//! the frozen core z_+/- = Delta_e +/- (C_1A - C_2A).

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// A flip-flopping bath pair with central-state-conditional detunings.
/// All entries are angular frequencies in rad s^-1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudospinPair {
    /// Intra-pair flip-flop strength (dipolar, plus any mediated part).
    pub c12: f64,
    /// Detuning conditional on the upper central level.
    pub z_upper: f64,
    /// Detuning conditional on the lower central level.
    pub z_lower: f64,
}

impl PseudospinPair {
    /// Pair coupled to the hybrid qubit: detunings P_i (J1 - J2).
    pub fn electron(c12: f64, delta_j: f64, p_upper: f64, p_lower: f64) -> Self {
        Self {
            c12,
            z_upper: p_upper * delta_j,
            z_lower: p_lower * delta_j,
        }
    }

    /// Pair coupled to a nuclear qubit: a state-independent electronic
    /// detuning plus the state-dependent dipolar part
    /// delta_n = C_1A - C_2A.
    pub fn nuclear(c12: f64, delta_e: f64, delta_n: f64) -> Self {
        Self {
            c12,
            z_upper: delta_e + delta_n,
            z_lower: delta_e - delta_n,
        }
    }

    /// Add the electron-mediated flip-flop correction to the pair strength.
    pub fn with_mediated(mut self, correction: f64) -> Self {
        self.c12 += correction;
        self
    }

    /// Precession rates and pseudofield angles (omega_u, omega_l,
    /// theta_u, theta_l); omega_i = sqrt(C12^2 + z_i^2)/4,
    /// theta_i = atan2(C12, z_i).
    pub fn pair_frequencies(&self) -> (f64, f64, f64, f64) {
        let omega_u = 0.25 * (self.c12 * self.c12 + self.z_upper * self.z_upper).sqrt();
        let omega_l = 0.25 * (self.c12 * self.c12 + self.z_lower * self.z_lower).sqrt();
        let theta_u = self.c12.atan2(self.z_upper);
        let theta_l = self.c12.atan2(self.z_lower);
        (omega_u, omega_l, theta_u, theta_l)
    }

    /// Free-induction pair coherence at time t for a flip-flop initial
    /// state: two slow terms at omega_u - omega_l beat against two fast
    /// terms at omega_u + omega_l.
    pub fn fid_decay(&self, t: f64) -> Complex64 {
        let (omega_u, omega_l, theta_u, theta_l) = self.pair_frequencies();
        let theta_minus = 0.5 * (theta_u - theta_l);
        let theta_plus = 0.5 * (theta_u + theta_l);
        let omega_minus = omega_u - omega_l;
        let omega_plus = omega_u + omega_l;
        let d_plus = 0.5 * theta_minus.cos() * (theta_minus.cos() + theta_plus.cos());
        let d_minus = 0.5 * theta_minus.cos() * (theta_minus.cos() - theta_plus.cos());
        let r_plus = 0.5 * theta_minus.sin() * (theta_minus.sin() - theta_plus.sin());
        let r_minus = 0.5 * theta_minus.sin() * (theta_minus.sin() + theta_plus.sin());
        Complex64::from_polar(d_plus, -omega_minus * t)
            + Complex64::from_polar(d_minus, omega_minus * t)
            + Complex64::from_polar(r_plus, -omega_plus * t)
            + Complex64::from_polar(r_minus, omega_plus * t)
    }

    /// Components of the echo-block unitary T_u(tau) T_l(tau) written as
    /// A0 - i A . sigma on the flip-flop basis.
    pub fn cpmg_a_vector(&self, tau: f64) -> CpmgAVector {
        let (omega_u, omega_l, theta_u, theta_l) = self.pair_frequencies();
        let (su, cu) = (omega_u * tau).sin_cos();
        let (sl, cl) = (omega_l * tau).sin_cos();
        CpmgAVector {
            a0: cu * cl - su * sl * (theta_u - theta_l).cos(),
            ax: sl * cu * theta_l.sin() + cl * su * theta_u.sin(),
            ay: -su * sl * (theta_u - theta_l).sin(),
            az: sl * cu * theta_l.cos() + cl * su * theta_u.cos(),
        }
    }

    /// Complex single-flip-flop-state Hahn overlap at total time t = 2 tau:
    /// 1 - 2 A_y (A_y - i A_x).
    pub fn hahn_overlap(&self, t: f64) -> Complex64 {
        let a = self.cpmg_a_vector(0.5 * t);
        Complex64::new(1.0 - 2.0 * a.ay * a.ay, 2.0 * a.ax * a.ay)
    }

    /// Hahn-echo envelope |L(2 tau)| for one flip-flop initial state.
    /// Reduces to sqrt(1 - 4 A_y^2 A_0^2) whenever the slow beat component
    /// A_z is negligible.
    pub fn hahn_decay(&self, t: f64) -> f64 {
        self.hahn_overlap(t).norm()
    }

    /// Thermally averaged even-pulse CPMG envelope at total time
    /// t = 2 N tau: 1 - 2 A_y^2 sin^2(N phi / 2) / (A_y^2 + A_0^2),
    /// with cos phi = A_0(2 tau). Exact for the average over the two
    /// flip-flop initial states.
    pub fn cpmg_even_decay(&self, pulses: u32, tau: f64) -> Result<f64> {
        if pulses == 0 || pulses % 2 != 0 {
            return Err(invalid("even-pulse envelope needs an even pulse count"));
        }
        if tau < 0.0 {
            return Err(invalid("pulse interval must be non-negative"));
        }
        let a = self.cpmg_a_vector(tau);
        let denom = a.ay * a.ay + a.a0 * a.a0;
        if denom < 1e-300 || a.ay == 0.0 {
            return Ok(1.0);
        }
        let cos_phi = self.cpmg_a_vector(2.0 * tau).a0.clamp(-1.0, 1.0);
        let phi = cos_phi.acos();
        let s = (0.5 * pulses as f64 * phi).sin();
        Ok(1.0 - 2.0 * a.ay * a.ay / denom * s * s)
    }

    /// Contribution of the pair to the decay rate,
    /// 1/T2 = |sin theta_u - sin theta_l| (omega_u + omega_l) / 4:
    /// the difference in precession radii times the mean precession rate.
    pub fn t2_weight(&self) -> f64 {
        let (omega_u, omega_l, theta_u, theta_l) = self.pair_frequencies();
        0.5 * (theta_u.sin() - theta_l.sin()).abs() * 0.5 * (omega_u + omega_l)
    }
}

/// Unitary components of one echo block; a0^2 + ax^2 + ay^2 + az^2 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpmgAVector {
    pub a0: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl CpmgAVector {
    pub fn norm_squared(&self) -> f64 {
        self.a0 * self.a0 + self.ax * self.ax + self.ay * self.ay + self.az * self.az
    }
}

/// Total T2 from per-pair rates: 1/T2^2 = sum of squared rates.
/// Infinite when every weight vanishes.
pub fn total_t2(weights: &[f64]) -> f64 {
    let sum: f64 = weights.iter().map(|w| w * w).sum();
    if sum > 0.0 {
        1.0 / sum.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Pulse-sequence variant for the closed-form T2 estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceMode {
    Fid,
    Hahn,
}

/// Polarisation-ratio threshold below which the echo estimate doubles the
/// free-induction one; far from that regime the two agree within 10%.
pub const HAHN_FID_THRESHOLD: f64 = 0.2;

/// Closed-form T2 estimate and its regime bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct T2Estimate {
    pub t2: f64,
    /// True when P_u = P_l: the estimate diverges at the working point.
    pub owp: bool,
    /// Echo-to-FID scale factor applied (1 or 2).
    pub hahn_factor: f64,
}

/// T2 = C_bar (|P_u| + |P_l|) / |P_u - P_l|, with the echo variant scaled
/// by 2 in the near-working-point regime |P_u - P_l| < 0.2 (|P_u| + |P_l|).
pub fn t2_formula(p_upper: f64, p_lower: f64, c_bar: f64, mode: SequenceMode) -> Result<T2Estimate> {
    if !(c_bar > 0.0) {
        return Err(invalid("prefactor must be positive"));
    }
    let num = p_upper.abs() + p_lower.abs();
    let den = (p_upper - p_lower).abs();
    let hahn_factor = match mode {
        SequenceMode::Fid => 1.0,
        SequenceMode::Hahn => {
            if den < HAHN_FID_THRESHOLD * num {
                2.0
            } else {
                1.0
            }
        }
    };
    if den == 0.0 {
        return Ok(T2Estimate {
            t2: f64::INFINITY,
            owp: true,
            hahn_factor,
        });
    }
    Ok(T2Estimate {
        t2: hahn_factor * c_bar * num / den,
        owp: false,
        hahn_factor,
    })
}

/// Dipolar prefactor from the realized pair census,
/// C_bar = 4 / sqrt(sum over pairs of C12^2), with the dipolar strengths
/// entering as cyclic frequencies (Hz).
pub fn prefactor(c12_radps: &[f64]) -> Result<f64> {
    let sum: f64 = c12_radps
        .iter()
        .map(|c| (c / std::f64::consts::TAU).powi(2))
        .sum();
    if !(sum > 0.0) {
        return Err(invalid("prefactor needs at least one non-zero pair"));
    }
    Ok(4.0 / sum.sqrt())
}

/// One record of the per-pair weight dump.
#[derive(Debug, Clone, Copy)]
pub struct WeightRecord {
    pub delta_j: f64,
    pub c12: f64,
    pub inv_t2_squared: f64,
    pub shell_id: u32,
}
