//! Parameter sweeps comparing residual negativity of non-Gaussian PNES at
//! the twin-beam separation time, plus their CSV/SVG outputs.

mod csv;
mod fig1;
mod svg;
mod sweep;

pub use self::csv::{format_value, write_csv, CSV_HEADER};
pub use self::fig1::{fig1, write_fig1, Fig1Config, Fig1Panel, Fig1Series, Fig1SeriesSpec};
pub use self::svg::render_fig1_svg;
pub use self::sweep::{
    default_grid, evaluate_point, run_sweep, MatchKind, MatchSelection, PointOutcome, SweepConfig, SweepPoint,
    SweepRecord, RATIO_DENOMINATOR_MIN,
};

use crate::error::{Error, Result};

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Bose-Einstein occupation 1 / (exp(h nu / k T) - 1).
pub fn thermal_occupation(frequency_hz: f64, temperature_k: f64) -> Result<f64> {
    if !(frequency_hz > 0.0 && temperature_k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequency and temperature must be positive, got {frequency_hz} Hz, {temperature_k} K"
        )));
    }
    Ok(1.0 / (PLANCK * frequency_hz / (BOLTZMANN * temperature_k)).exp_m1())
}

/// Temperature at which a mode of the given frequency holds `occupation` quanta.
pub fn temperature_for_occupation(frequency_hz: f64, occupation: f64) -> Result<f64> {
    if !(frequency_hz > 0.0 && occupation > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequency and occupation must be positive, got {frequency_hz} Hz, {occupation}"
        )));
    }
    Ok(PLANCK * frequency_hz / (BOLTZMANN * (1.0 / occupation).ln_1p()))
}
