//! Parameter types and the dressed-frame transformation.
//!
//! Everything downstream works in units of the emitter decay rate γ:
//! [`SystemParams::new`] divides all rates and frequencies by the supplied γ
//! so that `gamma == 1.0` always holds internally.

use thiserror::Error;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380_649e-23;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} violates `{requirement}`")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
}

/// How the fast rotating terms of the emitter–cavity interaction are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Drop the fast terms entirely.
    Secular,
    /// Keep their leading contribution: the frequency pull `delta_bar` and the
    /// excitation-dependent dispersive shift `beta`.
    BeyondSecular,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Secular => "secular",
            Mode::BeyondSecular => "beyond",
        }
    }
}

/// Laboratory-frame inputs, stored in units of γ.
///
/// `rabi` is the half-Rabi frequency Ω of the drive, `detuning` is
/// Δ = ω_emitter − ω_laser, `omega_ph` the cavity phonon frequency, `g` the
/// emitter–cavity coupling, `gamma_c` the pure dephasing rate, `kappa` the
/// cavity damping rate and `nbar` the thermal occupation of the cavity bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub rabi: f64,
    pub detuning: f64,
    pub omega_ph: f64,
    pub g: f64,
    pub gamma: f64,
    pub gamma_c: f64,
    pub kappa: f64,
    pub nbar: f64,
}

fn require(ok: bool, name: &'static str, value: f64, req: &'static str) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            requirement: req,
        })
    }
}

impl SystemParams {
    /// Validates sign constraints and normalizes every rate/frequency by `gamma`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rabi: f64,
        detuning: f64,
        omega_ph: f64,
        g: f64,
        gamma: f64,
        gamma_c: f64,
        kappa: f64,
        nbar: f64,
    ) -> Result<Self, ModelError> {
        require(rabi > 0.0, "rabi", rabi, "> 0")?;
        require(detuning.is_finite(), "detuning", detuning, "finite")?;
        require(omega_ph > 0.0, "omega_ph", omega_ph, "> 0")?;
        require(g >= 0.0, "g", g, ">= 0")?;
        require(gamma > 0.0, "gamma", gamma, "> 0")?;
        require(gamma_c >= 0.0, "gamma_c", gamma_c, ">= 0")?;
        require(kappa > 0.0, "kappa", kappa, "> 0")?;
        require(nbar >= 0.0, "nbar", nbar, ">= 0")?;
        Ok(SystemParams {
            rabi: rabi / gamma,
            detuning: detuning / gamma,
            omega_ph: omega_ph / gamma,
            g: g / gamma,
            gamma: 1.0,
            gamma_c: gamma_c / gamma,
            kappa: kappa / gamma,
            nbar,
        })
    }

    /// Cavity damping rate from a quality factor: κ = ω_ph / Q.
    pub fn kappa_from_quality(omega_ph: f64, q: f64) -> f64 {
        omega_ph / q
    }
}

/// Derived dressed-frame quantities.
///
/// `theta` ∈ (0, π/2) is the mixing angle of the dressed basis, `omega_bar`
/// half the dressed splitting, `delta_eff = omega_ph − 2·omega_bar +
/// 2·delta_bar` the effective cavity detuning seen by the slow coupling, and
/// `gamma_plus`/`gamma_minus`/`gamma_zero` the dressed relaxation rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedFrame {
    pub theta: f64,
    pub omega_bar: f64,
    pub delta_bar: f64,
    pub beta: f64,
    pub delta_eff: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_zero: f64,
    pub mode: Mode,
}

impl DressedFrame {
    pub fn sin_2theta(&self) -> f64 {
        (2.0 * self.theta).sin()
    }

    pub fn cos_2theta(&self) -> f64 {
        (2.0 * self.theta).cos()
    }

    /// Total dressed dephasing rate Γ = γ₊ + γ₋ + 4γ₀ of the coherence families.
    pub fn total_rate(&self) -> f64 {
        self.gamma_plus + self.gamma_minus + 4.0 * self.gamma_zero
    }

    /// The dressed dissipator assumes the splitting dominates the decay,
    /// 2·omega_bar ≫ γ; below 10γ the description degrades silently.
    pub fn rate_separation_ok(&self) -> bool {
        2.0 * self.omega_bar >= 10.0
    }
}

/// Dressed-frame transformation.
///
/// The mixing angle is fixed by the two-argument arctangent,
/// 2θ = atan2(2Ω, Δ) ∈ (0, π), so that sin 2θ = Ω/Ω̄ > 0 and
/// cos 2θ = Δ/(2Ω̄) carries the sign of the detuning; negative Δ gives
/// θ > π/4. In [`Mode::Secular`] the fast-term corrections `delta_bar` and
/// `beta` are exactly zero.
pub fn dress(params: &SystemParams, mode: Mode) -> DressedFrame {
    let two_theta = f64::atan2(2.0 * params.rabi, params.detuning);
    let theta = 0.5 * two_theta;
    let omega_bar = (params.rabi.powi(2) + (0.5 * params.detuning).powi(2)).sqrt();
    let s2 = two_theta.sin();
    let c2 = two_theta.cos();
    // Unreachable for valid params (omega_ph > 0, omega_bar > 0); guards the
    // denominators below.
    assert!(
        params.omega_ph + 2.0 * omega_bar > 0.0,
        "degenerate frame: omega_ph + 2*omega_bar must be positive"
    );

    let (delta_bar, beta) = match mode {
        Mode::Secular => (0.0, 0.0),
        Mode::BeyondSecular => {
            let g2 = params.g * params.g;
            let delta_bar = 0.5
                * g2
                * (c2 / params.omega_ph - s2 * s2 / (4.0 * (params.omega_ph + 2.0 * omega_bar)));
            let beta = g2 * s2 * s2 / (4.0 * (params.omega_ph + 2.0 * omega_bar));
            (delta_bar, beta)
        }
    };

    let (sin_t, cos_t) = (theta.sin(), theta.cos());
    let gamma_plus = params.gamma * cos_t.powi(4) + 0.25 * params.gamma_c * s2 * s2;
    let gamma_minus = params.gamma * sin_t.powi(4) + 0.25 * params.gamma_c * s2 * s2;
    let gamma_zero = 0.25 * (params.gamma * s2 * s2 + params.gamma_c * c2 * c2);

    DressedFrame {
        theta,
        omega_bar,
        delta_bar,
        beta,
        delta_eff: params.omega_ph - 2.0 * omega_bar + 2.0 * delta_bar,
        gamma_plus,
        gamma_minus,
        gamma_zero,
        mode,
    }
}

/// Bose–Einstein occupation of the cavity mode at temperature `temperature`
/// (Kelvin). `omega_ph` is in units of γ; `unit_scale` is γ itself in rad/s,
/// so the absolute mode frequency is `omega_ph * unit_scale`.
///
/// Returns exactly 0 at `temperature <= 0`.
pub fn thermal_occupation(omega_ph: f64, temperature: f64, unit_scale: f64) -> f64 {
    assert!(omega_ph > 0.0 && unit_scale > 0.0);
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega_ph * unit_scale / (KB * temperature);
    1.0 / x.exp_m1()
}
