//! Downlink beam-spread and transmission-efficiency budget.
//!
//! The beam leaves the transmitter with waist `omega_0 = 0.316 D_T`,
//! spreads by diffraction and turbulence to `omega_L` at range `l`,
//! inflates to `omega_LP` under pointing error, and illuminates the
//! receiver aperture. The boundary layer enters the budget only through
//! the Strehl ratio factor of `eta_0`; deflection is reported separately
//! for pointing pre-compensation.

use thiserror::Error;

/// Transmitter telescope and source parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitterParams {
    /// Aperture diameter, metres.
    pub d_t: f64,
    /// Pointing error, radians.
    pub sigma_t: f64,
    /// Wavelength, metres.
    pub lambda_m: f64,
    /// Gaussian waist radius, metres; always `0.316 * d_t`.
    pub omega_0: f64,
}

impl TransmitterParams {
    pub fn new(d_t: f64, sigma_t: f64, lambda_m: f64) -> Result<Self, LinkError> {
        if !(d_t > 0.0) {
            return Err(LinkError::InvalidParameter("transmitter diameter"));
        }
        if !(sigma_t >= 0.0) {
            return Err(LinkError::InvalidParameter("pointing error"));
        }
        if !(lambda_m > 0.0) {
            return Err(LinkError::InvalidParameter("wavelength"));
        }
        Ok(Self { d_t, sigma_t, lambda_m, omega_0: waist_radius(d_t) })
    }
}

/// Turbulence and extinction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereParams {
    /// Fried parameter in zenith, metres.
    pub r_0: f64,
    /// Extinction optical thickness, sea level to altitude, zenith.
    pub beta: f64,
}

impl AtmosphereParams {
    pub fn new(r_0: f64, beta: f64) -> Result<Self, LinkError> {
        if !(r_0 > 0.0) {
            return Err(LinkError::InvalidParameter("Fried parameter"));
        }
        if !(beta >= 0.0) {
            return Err(LinkError::InvalidParameter("extinction optical thickness"));
        }
        Ok(Self { r_0, beta })
    }
}

/// Ground-station receiver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverParams {
    /// Aperture diameter, metres.
    pub d_r: f64,
    /// Receiving optics efficiency.
    pub eta_s: f64,
    /// Detector efficiency.
    pub eta_d: f64,
}

impl ReceiverParams {
    pub fn new(d_r: f64, eta_s: f64, eta_d: f64) -> Result<Self, LinkError> {
        if !(d_r > 0.0) {
            return Err(LinkError::InvalidParameter("receiver diameter"));
        }
        if !(eta_s > 0.0 && eta_s <= 1.0) {
            return Err(LinkError::InvalidParameter("optics efficiency"));
        }
        if !(eta_d > 0.0 && eta_d <= 1.0) {
            return Err(LinkError::InvalidParameter("detector efficiency"));
        }
        Ok(Self { d_r, eta_s, eta_d })
    }
}

/// Per-timestep link budget values.
#[derive(Debug, Clone, Copy)]
pub struct LinkSample {
    pub omega_l: f64,
    pub omega_lp: f64,
    pub eta_0: f64,
    pub eta: f64,
    pub loss_db: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("zenith angle must lie in [0, pi/2), got {0}")]
    ZenithOutOfRange(f64),
    #[error("invalid {0}")]
    InvalidParameter(&'static str),
}

/// Waist radius of the transmitted Gaussian beam, `0.316 D_T`.
pub fn waist_radius(d_t: f64) -> f64 {
    0.316 * d_t
}

/// Beam waist at range `l` prior to pointing errors:
/// `omega_L = l (lambda / (pi omega_0)) [1 + 0.83 sec(theta) (D_T/r_0)^(5/3)]^(3/5)`.
pub fn beam_waist_turbulent(
    l: f64,
    lambda_m: f64,
    omega_0: f64,
    theta: f64,
    d_t: f64,
    r_0: f64,
) -> Result<f64, LinkError> {
    if !(theta >= 0.0) || theta >= std::f64::consts::FRAC_PI_2 {
        return Err(LinkError::ZenithOutOfRange(theta));
    }
    let sec = 1.0 / theta.cos();
    let bracket = 1.0 + 0.83 * sec * (d_t / r_0).powf(5.0 / 3.0);
    Ok(l * lambda_m / (std::f64::consts::PI * omega_0) * bracket.powf(3.0 / 5.0))
}

/// Effective beam waist including pointing error,
/// `sqrt(omega_L^2 + (sigma_T l)^2)`.
pub fn effective_beam_waist(omega_l: f64, sigma_t: f64, l: f64) -> f64 {
    omega_l.hypot(sigma_t * l)
}

/// Normalized arrival intensity as printed in the source relation,
/// `(2 / (pi omega_LP)) exp(-2 r^2 / omega_LP^2)`.
///
/// The prefactor is dimensionally 1/m rather than 1/m^2; the
/// area-normalized form is [`intensity_profile_normalized`]. Neither
/// enters the efficiency chain, which integrates the aperture directly.
pub fn intensity_profile(r: f64, omega_lp: f64) -> f64 {
    2.0 / (std::f64::consts::PI * omega_lp) * (-2.0 * r * r / (omega_lp * omega_lp)).exp()
}

/// Gaussian intensity with unit integral over the receiver plane.
pub fn intensity_profile_normalized(r: f64, omega_lp: f64) -> f64 {
    2.0 / (std::f64::consts::PI * omega_lp * omega_lp)
        * (-2.0 * r * r / (omega_lp * omega_lp)).exp()
}

/// Transmission efficiency onto the receiving telescope:
/// `eta_0 = SR exp(-beta sec theta) {1 - exp[-0.5 (D_R/omega_LP)^2]}`.
pub fn transmission_efficiency(
    sr: f64,
    beta: f64,
    theta: f64,
    d_r: f64,
    omega_lp: f64,
) -> Result<f64, LinkError> {
    if !(theta >= 0.0) || theta >= std::f64::consts::FRAC_PI_2 {
        return Err(LinkError::ZenithOutOfRange(theta));
    }
    let sec = 1.0 / theta.cos();
    let ratio = d_r / omega_lp;
    Ok(sr * (-beta * sec).exp() * (1.0 - (-0.5 * ratio * ratio).exp()))
}

/// Total photon transmission efficiency `eta = eta_0 eta_s eta_d`.
pub fn total_efficiency(eta_0: f64, eta_s: f64, eta_d: f64) -> f64 {
    eta_0 * eta_s * eta_d
}

/// Channel loss in dB for an efficiency.
pub fn loss_db(eta: f64) -> f64 {
    -10.0 * eta.log10()
}

/// Assemble the full link sample for one timestep.
///
/// `extra_pointing_m` is an additional transverse displacement (an
/// uncompensated deflection offset) added in quadrature to the pointing
/// term; zero when deflection is pre-compensated.
pub fn evaluate_link(
    tx: &TransmitterParams,
    atm: &AtmosphereParams,
    rx: &ReceiverParams,
    sr: f64,
    l: f64,
    theta: f64,
    extra_pointing_m: f64,
) -> Result<LinkSample, LinkError> {
    let omega_l = beam_waist_turbulent(l, tx.lambda_m, tx.omega_0, theta, tx.d_t, atm.r_0)?;
    let pointing = (tx.sigma_t * l).hypot(extra_pointing_m);
    let omega_lp = omega_l.hypot(pointing);
    let eta_0 = transmission_efficiency(sr, atm.beta, theta, rx.d_r, omega_lp)?;
    let eta = total_efficiency(eta_0, rx.eta_s, rx.eta_d);
    Ok(LinkSample { omega_l, omega_lp, eta_0, eta, loss_db: loss_db(eta) })
}
