//! Vacuum + weak decoy BB84 secure key rate chain.
//!
//! Given the photon transmission efficiency `eta`, the chain computes the
//! signal and decoy gains, the overall QBER, the single-photon gain lower
//! bound and error-rate upper bound, and the secure key rate
//! `R = q { Q_1 [1 - H_2(e_1)] - Q_mu f H_2(E_mu) }`, clamped at zero and
//! forced to zero once the QBER reaches the configured cutoff.

use thiserror::Error;

/// Decoy-BB84 protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Signal intensity (mean photon number).
    pub mu: f64,
    /// Decoy intensity.
    pub nu: f64,
    /// Signal / decoy / vacuum state probabilities.
    pub p_s: f64,
    pub p_d: f64,
    pub p_v: f64,
    /// System repetition rate, Hz.
    pub n_rep: f64,
    /// Information reconciliation efficiency, >= 1.
    pub f_ec: f64,
    /// Protocol efficiency factor; defaults to `p_s / 2`.
    pub q: f64,
    /// QBER at or above which the rate is forced to zero.
    pub qber_cutoff: f64,
}

impl ProtocolParams {
    pub fn new(
        mu: f64,
        nu: f64,
        p_s: f64,
        p_d: f64,
        p_v: f64,
        n_rep: f64,
        f_ec: f64,
    ) -> Result<Self, DecoyError> {
        let params = Self { mu, nu, p_s, p_d, p_v, n_rep, f_ec, q: p_s / 2.0, qber_cutoff: 0.10 };
        params.validate()?;
        Ok(params)
    }

    pub fn with_q(mut self, q: f64) -> Result<Self, DecoyError> {
        self.q = q;
        self.validate()?;
        Ok(self)
    }

    pub fn with_qber_cutoff(mut self, cutoff: f64) -> Result<Self, DecoyError> {
        self.qber_cutoff = cutoff;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), DecoyError> {
        if !(self.mu > 0.0) || !(self.nu > 0.0) || self.nu >= self.mu {
            return Err(DecoyError::InvalidParameter("intensities must satisfy 0 < nu < mu"));
        }
        if (self.p_s + self.p_d + self.p_v - 1.0).abs() > 1e-9
            || self.p_s <= 0.0
            || self.p_d < 0.0
            || self.p_v < 0.0
        {
            return Err(DecoyError::InvalidParameter("state probabilities must sum to 1"));
        }
        if !(self.n_rep > 0.0) {
            return Err(DecoyError::InvalidParameter("repetition rate must be positive"));
        }
        if !(self.f_ec >= 1.0) {
            return Err(DecoyError::InvalidParameter("reconciliation efficiency must be >= 1"));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(DecoyError::InvalidParameter("q must lie in (0, 1]"));
        }
        if !(self.qber_cutoff > 0.0 && self.qber_cutoff <= 0.5) {
            return Err(DecoyError::InvalidParameter("QBER cutoff must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

/// Detector and error model of the receiving system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    /// Dark count probability per pulse (Y_0).
    pub y_0: f64,
    /// Error rate of dark counts, conventionally 0.5.
    pub e_0: f64,
    /// Misalignment error rate.
    pub e_d: f64,
}

impl DetectorModel {
    pub fn new(y_0: f64, e_d: f64) -> Result<Self, DecoyError> {
        let det = Self { y_0, e_0: 0.5, e_d };
        det.validate()?;
        Ok(det)
    }

    pub fn validate(&self) -> Result<(), DecoyError> {
        if !(self.y_0 >= 0.0 && self.y_0 < 1.0) {
            return Err(DecoyError::InvalidParameter("dark count rate must lie in [0, 1)"));
        }
        if !(self.e_0 >= 0.0 && self.e_0 <= 0.5) {
            return Err(DecoyError::InvalidParameter("dark count error rate must lie in [0, 0.5]"));
        }
        if !(self.e_d >= 0.0 && self.e_d < 0.5) {
            return Err(DecoyError::InvalidParameter("misalignment error must lie in [0, 0.5)"));
        }
        Ok(())
    }
}

/// Output of the key-rate chain at one efficiency point.
#[derive(Debug, Clone, Copy)]
pub struct KeyRateSample {
    pub q_mu: f64,
    pub e_mu: f64,
    pub q_nu: f64,
    pub e_nu_q_nu: f64,
    /// Single-photon gain lower bound, clamped at zero.
    pub q1_lower: f64,
    pub y1_lower: f64,
    /// Single-photon error upper bound; 0.5 when no yield survives.
    pub e1_upper: f64,
    /// Secure bits per pulse, clamped at zero.
    pub r_per_pulse: f64,
    /// Secure bits per second, `r_per_pulse * n_rep`.
    pub r_bps: f64,
    /// True when a negative intermediate bound was clamped.
    pub clamped: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum DecoyError {
    #[error("binary entropy argument {0} outside [0, 1]")]
    EntropyDomain(f64),
    #[error("signal gain is zero; QBER undefined")]
    ZeroGain,
    #[error("decoy bound degenerate: mu nu - nu^2 = 0")]
    DegenerateIntensities,
    #[error("no single-photon yield; error bound undefined")]
    NoSinglePhotonYield,
    #[error("invalid protocol parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("efficiency {0} outside [0, 1]")]
    EfficiencyOutOfRange(f64),
}

/// Binary Shannon entropy with the `0 log 0 = 0` convention.
pub fn binary_entropy(x: f64) -> Result<f64, DecoyError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(DecoyError::EntropyDomain(x));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Gain of states with intensity `mu`: `Q = Y_0 + 1 - exp(-eta mu)`.
///
/// `1 - exp(-x)` is evaluated as `-expm1(-x)` so low-efficiency gains keep
/// full precision.
pub fn gain_signal(eta: f64, mu: f64, y_0: f64) -> f64 {
    y_0 - (-eta * mu).exp_m1()
}

/// Overall QBER of signal states:
/// `E_mu = [e_0 Y_0 + e_d (1 - exp(-eta mu))] / Q_mu`.
pub fn qber_signal(eta: f64, mu: f64, y_0: f64, e_0: f64, e_d: f64) -> Result<f64, DecoyError> {
    let q_mu = gain_signal(eta, mu, y_0);
    if q_mu <= 0.0 {
        return Err(DecoyError::ZeroGain);
    }
    Ok((e_0 * y_0 - e_d * (-eta * mu).exp_m1()) / q_mu)
}

/// Lower bound on the single-photon gain (vacuum + weak decoy bound).
///
/// Returns the raw bound; it can be negative at extreme loss and callers
/// clamp it (the chain records the clamp in [`KeyRateSample::clamped`]).
pub fn single_photon_gain_lower(
    q_mu: f64,
    q_nu: f64,
    mu: f64,
    nu: f64,
    y_0: f64,
) -> Result<f64, DecoyError> {
    let denom = mu * nu - nu * nu;
    if denom == 0.0 {
        return Err(DecoyError::DegenerateIntensities);
    }
    let lead = mu * mu * (-mu).exp() / denom;
    let bracket = q_nu * nu.exp()
        - q_mu * mu.exp() * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * y_0;
    Ok(lead * bracket)
}

/// Error gain of decoy states: `E_nu Q_nu = e_0 Y_0 + e_d (1 - exp(-eta nu))`.
pub fn decoy_error_gain(eta: f64, nu: f64, y_0: f64, e_0: f64, e_d: f64) -> f64 {
    e_0 * y_0 - e_d * (-eta * nu).exp_m1()
}

/// Upper bound on the single-photon error rate:
/// `e_1 <= (E_nu Q_nu e^nu - e_0 Y_0) / (Y_1^L nu)` with
/// `Y_1^L = Q_1^L / (mu e^-mu)`.
pub fn single_photon_error_upper(
    e_nu_q_nu: f64,
    q1_lower: f64,
    mu: f64,
    nu: f64,
    e_0: f64,
    y_0: f64,
) -> Result<f64, DecoyError> {
    let y1 = q1_lower / (mu * (-mu).exp());
    if y1 * nu <= 0.0 {
        return Err(DecoyError::NoSinglePhotonYield);
    }
    let numerator = e_nu_q_nu * nu.exp() - e_0 * y_0;
    Ok(numerator.max(0.0) / (y1 * nu))
}

/// Full key-rate chain at efficiency `eta`.
pub fn secure_key_rate(
    params: &ProtocolParams,
    det: &DetectorModel,
    eta: f64,
) -> Result<KeyRateSample, DecoyError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(DecoyError::EfficiencyOutOfRange(eta));
    }
    let (mu, nu) = (params.mu, params.nu);
    let q_mu = gain_signal(eta, mu, det.y_0);
    let e_mu = qber_signal(eta, mu, det.y_0, det.e_0, det.e_d)?;
    let q_nu = gain_signal(eta, nu, det.y_0);
    let e_nu_q_nu = decoy_error_gain(eta, nu, det.y_0, det.e_0, det.e_d);

    let mut clamped = false;
    let q1_raw = single_photon_gain_lower(q_mu, q_nu, mu, nu, det.y_0)?;
    let q1_lower = if q1_raw < 0.0 {
        clamped = true;
        0.0
    } else {
        q1_raw
    };
    let y1_lower = q1_lower / (mu * (-mu).exp());

    let e1_upper = if q1_lower > 0.0 {
        let raw = e_nu_q_nu * nu.exp() - det.e_0 * det.y_0;
        if raw < 0.0 {
            clamped = true;
        }
        raw.max(0.0) / (y1_lower * nu)
    } else {
        // No single-photon yield survives the bound; maximally pessimistic.
        clamped = true;
        0.5
    };

    // Error rates at or above 1/2 carry no single-photon key material.
    let e1_for_entropy = e1_upper.min(0.5);
    let r_raw = params.q
        * (q1_lower * (1.0 - binary_entropy(e1_for_entropy)?)
            - q_mu * params.f_ec * binary_entropy(e_mu)?);
    let r_per_pulse = if e_mu >= params.qber_cutoff { 0.0 } else { r_raw.max(0.0) };

    Ok(KeyRateSample {
        q_mu,
        e_mu,
        q_nu,
        e_nu_q_nu,
        q1_lower,
        y1_lower,
        e1_upper,
        r_per_pulse,
        r_bps: r_per_pulse * params.n_rep,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_rel(a: f64, b: f64, tol: f64) -> bool {
        if b == 0.0 {
            return a.abs() <= tol;
        }
        ((a - b) / b).abs() <= tol
    }

    fn table1_params() -> ProtocolParams {
        ProtocolParams::new(0.8, 0.1, 0.5, 0.25, 0.25, 1e8, 1.16).unwrap()
    }

    fn table1_detector() -> DetectorModel {
        DetectorModel::new(2e-6, 0.01).unwrap()
    }

    #[test]
    fn entropy_fixed_points() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // Frozen from 50-digit evaluation.
        assert!(approx_rel(binary_entropy(0.11).unwrap(), 0.499915958164528, 1e-14));
        assert_eq!(binary_entropy(-0.1), Err(DecoyError::EntropyDomain(-0.1)));
        assert_eq!(binary_entropy(1.1), Err(DecoyError::EntropyDomain(1.1)));
    }

    #[test]
    fn gain_signal_examples() {
        assert_eq!(gain_signal(0.0, 0.8, 2e-6), 2e-6);
        // Frozen direct evaluation.
        assert!(approx_rel(gain_signal(1.0, 0.8, 2e-6), 0.55067303588277841, 1e-14));
        let mut prev = 0.0;
        for k in 1..=50 {
            let q = gain_signal(k as f64 / 50.0, 0.8, 2e-6);
            assert!(q > prev);
            prev = q;
        }
    }

    #[test]
    fn qber_signal_examples() {
        // Dark counts only.
        assert_eq!(qber_signal(0.0, 0.8, 2e-6, 0.5, 0.01).unwrap(), 0.5);
        // Strong signal: misalignment floor (asymptote, Y_0 residual ~2e-4).
        let e = qber_signal(1.0, 0.8, 2e-6, 0.5, 0.01).unwrap();
        assert!(approx_rel(e, 0.01, 1e-3));
        // Frozen direct evaluation.
        assert!(approx_rel(
            qber_signal(1e-4, 0.8, 2e-6, 0.5, 0.01).unwrap(),
            0.021951685907012752,
            1e-13
        ));
        assert_eq!(qber_signal(0.0, 0.8, 0.0, 0.5, 0.01), Err(DecoyError::ZeroGain));
    }

    #[test]
    fn single_photon_gain_frozen_value() {
        let eta = 0.01;
        let q_mu = gain_signal(eta, 0.8, 2e-6);
        let q_nu = gain_signal(eta, 0.1, 2e-6);
        let q1 = single_photon_gain_lower(q_mu, q_nu, 0.8, 0.1, 2e-6).unwrap();
        // Frozen from 50-digit evaluation of the bound chain.
        assert!(approx_rel(q1, 0.003400348044997427, 1e-12));
        assert!(q1 <= q_mu);
    }

    #[test]
    fn single_photon_gain_degenerate_error() {
        assert_eq!(
            single_photon_gain_lower(0.1, 0.01, 0.8, 0.0, 2e-6),
            Err(DecoyError::DegenerateIntensities)
        );
    }

    #[test]
    fn single_photon_gain_bounded_by_poisson_channel() {
        // The bound never exceeds the true single-photon gain
        // mu e^-mu (Y_0 + eta) of the channel model that generated the
        // gains. Deterministic pseudo-random parameter sweep.
        let mut seed = 0x12345678u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let eta = 10f64.powf(-6.0 * next());
            let mu = 0.3 + 0.7 * next();
            let nu = 0.05 + 0.5 * (mu - 0.05) * next();
            let y_0 = 1e-4 * next();
            let q_mu = gain_signal(eta, mu, y_0);
            let q_nu = gain_signal(eta, nu, y_0);
            let q1 = single_photon_gain_lower(q_mu, q_nu, mu, nu, y_0).unwrap();
            let truth = mu * (-mu).exp() * (y_0 + eta);
            assert!(q1 <= truth + 1e-15, "eta={eta} mu={mu} nu={nu}: {q1} > {truth}");
        }
    }

    #[test]
    fn decoy_error_gain_examples() {
        assert_eq!(decoy_error_gain(0.0, 0.1, 2e-6, 0.5, 0.01), 1e-6);
        // Frozen direct evaluation.
        assert!(approx_rel(
            decoy_error_gain(0.01, 0.1, 2e-6, 0.5, 0.01),
            1.0995001666250083e-5,
            1e-13
        ));
        assert!(
            decoy_error_gain(0.02, 0.1, 2e-6, 0.5, 0.01)
                > decoy_error_gain(0.01, 0.1, 2e-6, 0.5, 0.01)
        );
    }

    #[test]
    fn single_photon_error_frozen_value() {
        let eta = 0.01;
        let q_mu = gain_signal(eta, 0.8, 2e-6);
        let q_nu = gain_signal(eta, 0.1, 2e-6);
        let q1 = single_photon_gain_lower(q_mu, q_nu, 0.8, 0.1, 2e-6).unwrap();
        let enqn = decoy_error_gain(eta, 0.1, 2e-6, 0.5, 0.01);
        let e1 = single_photon_error_upper(enqn, q1, 0.8, 0.1, 0.5, 2e-6).unwrap();
        // Frozen from 50-digit evaluation.
        assert!(approx_rel(e1, 0.011788504499417315, 1e-12));
    }

    #[test]
    fn single_photon_error_asymptote_and_bound() {
        // Perfect channel without dark counts: e_1 upper bound sits near e_d.
        let q_mu = gain_signal(1.0, 0.8, 0.0);
        let q_nu = gain_signal(1.0, 0.1, 0.0);
        let q1 = single_photon_gain_lower(q_mu, q_nu, 0.8, 0.1, 0.0).unwrap();
        let enqn = decoy_error_gain(1.0, 0.1, 0.0, 0.5, 0.01);
        let e1 = single_photon_error_upper(enqn, q1, 0.8, 0.1, 0.5, 0.0).unwrap();
        assert!((e1 / 0.01 - 1.0).abs() < 0.1, "e1 = {e1}");

        // Upper-bound property against the generating channel model.
        let mut seed = 0x9e3779b9u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let eta = 10f64.powf(-4.0 * next());
            let y_0 = 1e-5 * next();
            let (mu, nu, e_0, e_d) = (0.8, 0.1, 0.5, 0.01);
            let q_mu = gain_signal(eta, mu, y_0);
            let q_nu = gain_signal(eta, nu, y_0);
            let q1 = single_photon_gain_lower(q_mu, q_nu, mu, nu, y_0).unwrap();
            if q1 <= 0.0 {
                continue;
            }
            let enqn = decoy_error_gain(eta, nu, y_0, e_0, e_d);
            let e1 = single_photon_error_upper(enqn, q1, mu, nu, e_0, y_0).unwrap();
            let y1_true = y_0 + eta;
            let e1_true = (e_0 * y_0 + e_d * eta) / y1_true;
            assert!(e1 >= e1_true - 1e-12, "eta={eta}: {e1} < {e1_true}");
        }
    }

    #[test]
    fn single_photon_error_no_yield() {
        assert_eq!(
            single_photon_error_upper(1e-6, 0.0, 0.8, 0.1, 0.5, 2e-6),
            Err(DecoyError::NoSinglePhotonYield)
        );
    }

    #[test]
    fn key_rate_frozen_value() {
        let sample = secure_key_rate(&table1_params(), &table1_detector(), 0.01).unwrap();
        // Frozen from 50-digit evaluation of the full chain.
        assert!(approx_rel(sample.r_per_pulse, 5.8289333149599185e-4, 1e-12));
        assert!(approx_rel(sample.r_bps, 58289.333149599185, 1e-12));
        assert!(!sample.clamped);
        assert!(sample.q1_lower <= sample.q_mu);
        assert!(sample.e_mu <= 0.5);
    }

    #[test]
    fn key_rate_zero_at_zero_efficiency() {
        let sample = secure_key_rate(&table1_params(), &table1_detector(), 0.0).unwrap();
        assert_eq!(sample.r_per_pulse, 0.0);
        assert_eq!(sample.r_bps, 0.0);
        assert_eq!(sample.e_mu, 0.5);
    }

    #[test]
    fn key_rate_cutoff_regime() {
        // eta = 8e-6 puts the QBER near 0.127, beyond the 10% cutoff.
        let sample = secure_key_rate(&table1_params(), &table1_detector(), 8e-6).unwrap();
        assert!(sample.e_mu > 0.10);
        assert_eq!(sample.r_per_pulse, 0.0);
    }

    #[test]
    fn key_rate_nondecreasing_in_eta() {
        let params = table1_params();
        let det = table1_detector();
        let mut prev = -1.0;
        for k in 0..=100 {
            let eta = k as f64 / 100.0;
            let r = secure_key_rate(&params, &det, eta).unwrap().r_per_pulse;
            assert!(r >= prev, "eta={eta}: {r} < {prev}");
            prev = r;
        }
    }

    #[test]
    fn key_rate_clean_system_has_no_errors() {
        // e_d = 0 and Y_0 = 0 give zero QBER and zero single-photon error.
        let params = table1_params();
        let det = DetectorModel::new(0.0, 0.0).unwrap();
        let sample = secure_key_rate(&params, &det, 0.3).unwrap();
        assert_eq!(sample.e_mu, 0.0);
        assert_eq!(sample.e1_upper, 0.0);
        assert!(sample.r_per_pulse > 0.0);
    }

    #[test]
    fn key_rate_rejects_bad_inputs() {
        assert!(matches!(
            secure_key_rate(&table1_params(), &table1_detector(), 1.5),
            Err(DecoyError::EfficiencyOutOfRange(_))
        ));
        assert!(ProtocolParams::new(0.8, 0.9, 0.5, 0.25, 0.25, 1e8, 1.16).is_err());
        assert!(ProtocolParams::new(0.8, 0.1, 0.5, 0.3, 0.25, 1e8, 1.16).is_err());
        assert!(ProtocolParams::new(0.8, 0.1, 0.5, 0.25, 0.25, 1e8, 0.9).is_err());
        assert!(table1_params().with_q(0.0).is_err());
        assert!(table1_params().with_qber_cutoff(0.6).is_err());
        assert!(DetectorModel::new(-1e-6, 0.01).is_err());
        assert!(DetectorModel::new(2e-6, 0.5).is_err());
    }
}
