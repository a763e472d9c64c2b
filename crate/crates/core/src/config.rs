//! Simulation configuration and the line-oriented `key = value` format.
//!
//! All quantities are SI: seconds, hertz, watts per hertz, joules. The PT
//! energy supply `e_p` is given in joules and divided by the bandwidth when
//! read, unless `e_p_per_hz = true`.

use std::fmt;
use std::str::FromStr;

use crate::channel::{FadingParams, NetworkTopology};
use crate::linalg::{Correlation, OmpOptions, DEFAULT_HERMITIAN_TOL, DEFAULT_OMP_RESIDUAL_TOL};
use crate::schemes::SchemeId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key \"{key}\"")]
    UnknownKey { key: String },
    #[error("invalid value for \"{key}\": {message}")]
    InvalidValue { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::InvalidValue {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// Every configuration key, in the order they are documented.
pub const CONFIG_KEYS: &[&str] = &[
    "n_secondary",
    "slots",
    "slot_duration",
    "bandwidth",
    "eta",
    "kappa",
    "p_s",
    "p_c",
    "e_p",
    "e_p_per_hz",
    "k_r",
    "k_beam",
    "alpha",
    "scheme",
    "seed",
    "mean_gain",
    "omp_normalized",
    "omp_residual_tol",
    "hermitian_tol",
    "paper_literal_interference",
    "paper_literal_r",
    "paper_literal_rate",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of secondary nodes `N` (transmitters plus receivers).
    pub n_secondary: usize,
    pub slots: usize,
    /// Slot duration `T`, seconds.
    pub slot_duration: f64,
    /// Bandwidth `W`, hertz.
    pub bandwidth: f64,
    /// RF-to-DC conversion efficiency.
    pub eta: f64,
    /// Noise power spectral density, W/Hz.
    pub kappa: f64,
    /// Secondary data transmit power, W/Hz.
    pub p_s: f64,
    /// Cooperation power (PT powering and relaying), W/Hz. Follows `p_s` when unset.
    pub p_c: Option<f64>,
    /// PT energy supply per slot, joules (or J/Hz with `e_p_per_hz`).
    pub e_p: f64,
    pub e_p_per_hz: bool,
    /// Relay sparsity; 0 disables the third stage.
    pub k_r: usize,
    /// Beamforming set size; defaults to `N - 2`.
    pub k_beam: Option<usize>,
    pub alpha: f64,
    pub scheme: SchemeId,
    pub seed: u64,
    pub mean_gain: f64,
    pub omp_normalized: bool,
    pub omp_residual_tol: f64,
    pub hermitian_tol: f64,
    /// Second-PSA interference uses each interferer's own-link gain.
    pub paper_literal_interference: bool,
    /// MMSE covariance uses `√P_p h h^†`.
    pub paper_literal_r: bool,
    /// Relay SNR term omits the `P_p` factor.
    pub paper_literal_rate: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_secondary: 50,
            slots: 4000,
            slot_duration: 1e-3,
            bandwidth: 1e6,
            eta: 0.8,
            kappa: 0.01e-6,
            p_s: 0.1e-6,
            p_c: None,
            e_p: 50e-6,
            e_p_per_hz: false,
            k_r: 5,
            k_beam: None,
            alpha: 0.5,
            scheme: SchemeId::First,
            seed: 1,
            mean_gain: 1.0,
            omp_normalized: true,
            omp_residual_tol: DEFAULT_OMP_RESIDUAL_TOL,
            hermitian_tol: DEFAULT_HERMITIAN_TOL,
            paper_literal_interference: false,
            paper_literal_r: false,
            paper_literal_rate: false,
        }
    }
}

impl SimConfig {
    pub fn topology(&self) -> NetworkTopology {
        NetworkTopology::new(self.n_secondary).expect("validated configuration")
    }

    pub fn fading(&self) -> FadingParams {
        FadingParams::new(self.mean_gain).expect("validated configuration")
    }

    /// `E_p` in J/Hz.
    pub fn energy_per_hz(&self) -> f64 {
        if self.e_p_per_hz {
            self.e_p
        } else {
            self.e_p / self.bandwidth
        }
    }

    pub fn cooperation_power(&self) -> f64 {
        self.p_c.unwrap_or(self.p_s)
    }

    /// Requested beamforming set size before clamping to `N - 2`.
    pub fn requested_beam_size(&self) -> usize {
        self.k_beam.unwrap_or(self.n_secondary.saturating_sub(2))
    }

    pub fn omp_options(&self) -> OmpOptions {
        OmpOptions {
            correlation: if self.omp_normalized {
                Correlation::Normalized
            } else {
                Correlation::Raw
            },
            residual_tol: self.omp_residual_tol,
            ..OmpOptions::default()
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "n_secondary" => self.n_secondary = parse(key, value)?,
            "slots" => self.slots = parse(key, value)?,
            "slot_duration" => self.slot_duration = parse(key, value)?,
            "bandwidth" => self.bandwidth = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "p_s" => self.p_s = parse(key, value)?,
            "p_c" => self.p_c = Some(parse(key, value)?),
            "e_p" => self.e_p = parse(key, value)?,
            "e_p_per_hz" => self.e_p_per_hz = parse(key, value)?,
            "k_r" => self.k_r = parse(key, value)?,
            "k_beam" => self.k_beam = Some(parse(key, value)?),
            "alpha" => self.alpha = parse(key, value)?,
            "scheme" => self.scheme = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "mean_gain" => self.mean_gain = parse(key, value)?,
            "omp_normalized" => self.omp_normalized = parse(key, value)?,
            "omp_residual_tol" => self.omp_residual_tol = parse(key, value)?,
            "hermitian_tol" => self.hermitian_tol = parse(key, value)?,
            "paper_literal_interference" => self.paper_literal_interference = parse(key, value)?,
            "paper_literal_r" => self.paper_literal_r = parse(key, value)?,
            "paper_literal_rate" => self.paper_literal_rate = parse(key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_secondary < 2 || !self.n_secondary.is_multiple_of(2) {
            return Err(ConfigError::invalid(
                "n_secondary",
                "must be an even integer >= 2",
            ));
        }
        if self.slots == 0 {
            return Err(ConfigError::invalid("slots", "must be positive"));
        }
        positive("slot_duration", self.slot_duration)?;
        positive("bandwidth", self.bandwidth)?;
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(ConfigError::invalid("eta", "must lie in [0, 1]"));
        }
        positive("kappa", self.kappa)?;
        positive("p_s", self.p_s)?;
        if let Some(p_c) = self.p_c {
            positive("p_c", p_c)?;
        }
        if !(self.e_p >= 0.0) || !self.e_p.is_finite() {
            return Err(ConfigError::invalid("e_p", "must be finite and >= 0"));
        }
        if self.k_r > self.n_secondary {
            return Err(ConfigError::invalid(
                "k_r",
                format!("must not exceed n_secondary = {}", self.n_secondary),
            ));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(ConfigError::invalid("alpha", "must lie in [0, 1)"));
        }
        positive("mean_gain", self.mean_gain)?;
        positive("omp_residual_tol", self.omp_residual_tol)?;
        positive("hermitian_tol", self.hermitian_tol)?;
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "must be positive and finite"))
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigError::invalid(key, format!("{value:?}: {e}")))
}

/// Builds a configuration from file contents and flag overrides.
///
/// Precedence is defaults < file < overrides. Duplicate keys within the
/// file are rejected.
pub fn parse_config(
    file_bytes: &[u8],
    overrides: &[(String, String)],
) -> Result<SimConfig, ConfigError> {
    let text = std::str::from_utf8(file_bytes).map_err(|e| ConfigError::Parse {
        line: 0,
        message: format!("not valid UTF-8: {e}"),
    })?;

    let mut cfg = SimConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                message: "empty key or value".to_string(),
            });
        }
        if seen.contains(&key) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key \"{key}\""),
            });
        }
        seen.push(key);
        cfg.set(key, value)?;
    }

    for (key, value) in overrides {
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
