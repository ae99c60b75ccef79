//! Physical constants and the conversions used at the configuration boundary.
//! Everything past this layer is SI: seconds, metres, rad/s.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// ⁸⁷Rb D1 line (5S₁/₂ → 5P₁/₂), m.
pub const RB87_D1_WAVELENGTH: f64 = 795e-9;

pub const MICRON: f64 = 1e-6;

/// Cyclic frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_rad_per_s(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e6
}

/// How a C6 coefficient quoted in GHz·μm⁶ becomes rad/s·m⁶.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum C6Convention {
    /// The quoted number already multiplies an angular frequency: 10⁹ rad/s.
    #[default]
    Angular,
    /// The quoted number is an ordinary frequency: ×2π·10⁹ rad/s.
    Cyclic,
}

impl C6Convention {
    pub fn ghz_um6_to_si(self, value: f64) -> f64 {
        let um6 = MICRON.powi(6);
        match self {
            C6Convention::Angular => value * 1e9 * um6,
            C6Convention::Cyclic => 2.0 * PI * value * 1e9 * um6,
        }
    }

    pub fn si_to_ghz_um6(self, c6: f64) -> f64 {
        c6 / self.ghz_um6_to_si(1.0)
    }
}
