//! Free-space link budget between UAVs.
//!
//! All quantities stay in the log domain (dB, dBm); nothing here converts to
//! linear power.

use log::warn;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Distances below this are clamped before entering the Friis formula.
pub const MIN_DISTANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CarrierSenseMode {
    /// Sensed iff received power reaches `cs_threshold_dbm`.
    #[default]
    PowerThreshold,
    /// Sensed iff the link is usable.
    UsableLink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Minimum SNR (exclusive) for a usable link.
    pub snr_threshold_db: f64,
    pub cs_threshold_dbm: f64,
    pub cs_mode: CarrierSenseMode,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
}

impl Default for RadioParams {
    /// 802.11ac channel 50 (5250 MHz, 160 MHz wide) at 0 dBm.
    fn default() -> Self {
        Self {
            tx_power_dbm: 0.0,
            frequency_hz: 5.25e9,
            bandwidth_hz: 160e6,
            noise_figure_db: 7.0,
            snr_threshold_db: 5.0,
            cs_threshold_dbm: -82.0,
            cs_mode: CarrierSenseMode::PowerThreshold,
            tx_gain_db: 0.0,
            rx_gain_db: 0.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::InvalidParam(format!("bandwidth must be > 0, got {}", self.bandwidth_hz)));
        }
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::InvalidParam(format!("frequency must be > 0, got {}", self.frequency_hz)));
        }
        // +inf is allowed: it disables every link
        if self.snr_threshold_db.is_nan() {
            return Err(Error::InvalidParam("snr threshold is NaN".into()));
        }
        if self.cs_threshold_dbm.is_nan() {
            return Err(Error::InvalidParam("carrier-sense threshold is NaN".into()));
        }
        for (name, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_figure_db", self.noise_figure_db),
            ("tx_gain_db", self.tx_gain_db),
            ("rx_gain_db", self.rx_gain_db),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn noise_floor_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// Clamps coincident or near-coincident nodes to [`MIN_DISTANCE`].
pub fn effective_distance(distance: f64) -> f64 {
    if distance < MIN_DISTANCE {
        warn!("nodes {distance} m apart, clamping to {MIN_DISTANCE} m");
        MIN_DISTANCE
    } else {
        distance
    }
}

fn check_distance(distance: f64) -> Result<()> {
    if distance > 0.0 && distance.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance must be positive and finite, got {distance}")))
    }
}

/// Friis free-space loss, `20·log10(4π·d·f/c)`.
pub fn path_loss_db(distance: f64, params: &RadioParams) -> Result<f64> {
    check_distance(distance)?;
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance * params.frequency_hz / SPEED_OF_LIGHT).log10())
}

pub fn received_power_dbm(distance: f64, params: &RadioParams) -> Result<f64> {
    Ok(params.tx_power_dbm + params.tx_gain_db + params.rx_gain_db - path_loss_db(distance, params)?)
}

pub fn snr_db(distance: f64, params: &RadioParams) -> Result<f64> {
    Ok(received_power_dbm(distance, params)? - params.noise_floor_dbm())
}

pub fn link_usable(distance: f64, params: &RadioParams) -> bool {
    let d = effective_distance(distance);
    snr_db(d, params).is_ok_and(|snr| snr > params.snr_threshold_db)
}

pub fn in_carrier_sense(distance: f64, params: &RadioParams) -> bool {
    match params.cs_mode {
        CarrierSenseMode::UsableLink => link_usable(distance, params),
        CarrierSenseMode::PowerThreshold => {
            let d = effective_distance(distance);
            received_power_dbm(d, params).is_ok_and(|p| p >= params.cs_threshold_dbm)
        }
    }
}

/// SNR-indexed PHY rates, as an ideal rate controller would pick them.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    entries: Vec<(f64, f64)>,
}

impl RateTable {
    /// `entries` are `(min_snr_db, rate_bps)` pairs, both strictly increasing.
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParam("rate table is empty".into()));
        }
        for &(snr, rate) in &entries {
            if !snr.is_finite() || !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::InvalidParam(format!("bad rate table entry ({snr}, {rate})")));
            }
        }
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err(Error::InvalidParam(format!(
                    "rate table not strictly increasing at ({}, {})",
                    w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn max_rate(&self) -> f64 {
        self.entries[self.entries.len() - 1].1
    }
}

impl Default for RateTable {
    /// VHT MCS 0–9, one spatial stream, 160 MHz, 800 ns guard interval.
    fn default() -> Self {
        const MIN_SNR: [f64; 10] = [5.0, 8.0, 11.0, 14.0, 18.0, 22.0, 24.0, 26.0, 30.0, 32.0];
        const MBPS: [f64; 10] = [58.5, 117.0, 175.5, 234.0, 351.0, 468.0, 526.5, 585.0, 702.0, 780.0];
        Self {
            entries: MIN_SNR.iter().zip(MBPS).map(|(&s, r)| (s, r * 1e6)).collect(),
        }
    }
}

/// Highest rate whose minimum SNR is at most `snr`; 0 below the table.
pub fn phy_rate(snr: f64, table: &RateTable) -> f64 {
    let n = table.entries.partition_point(|&(min_snr, _)| min_snr <= snr);
    if n == 0 {
        0.0
    } else {
        table.entries[n - 1].1
    }
}

/// Logistic frame-error curve `1 / (1 + exp(k·(snr − m)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerCurve {
    pub steepness: f64,
    pub midpoint_db: f64,
}

impl FerCurve {
    /// Midpoint 1 dB above the usability threshold.
    pub fn for_threshold(snr_threshold_db: f64) -> Self {
        Self {
            steepness: 2.0,
            midpoint_db: snr_threshold_db + 1.0,
        }
    }

    pub fn frame_error_rate(&self, snr: f64) -> f64 {
        1.0 / (1.0 + (self.steepness * (snr - self.midpoint_db)).exp())
    }
}

impl Default for FerCurve {
    fn default() -> Self {
        Self::for_threshold(RadioParams::default().snr_threshold_db)
    }
}

pub fn frame_error_rate(snr: f64, curve: &FerCurve) -> f64 {
    curve.frame_error_rate(snr)
}
