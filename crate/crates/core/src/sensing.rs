//! Joint angle sensing: rotary potentiometer read by a 16-bit ADC.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sensor channels per finger: MCP-1, MCP-2, PIP and DIP.
pub const CHANNELS_PER_FINGER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    /// Electrical travel of the potentiometer, centred on joint zero.
    pub pot_range_deg: f64,
    pub adc_bits: u32,
    pub sample_hz: u32,
    /// Gaussian noise added before quantization, in LSB. Zero disables it.
    #[serde(default)]
    pub noise_std_lsb: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            pot_range_deg: 333.3,
            adc_bits: 16,
            sample_hz: 200,
            noise_std_lsb: 0.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pot_range_deg > 0.0 && self.pot_range_deg <= 360.0) {
            return Err(Error::Config(format!(
                "pot range {} deg out of (0, 360]",
                self.pot_range_deg
            )));
        }
        if !(2..=16).contains(&self.adc_bits) {
            return Err(Error::Config(format!("ADC width {} bits unsupported", self.adc_bits)));
        }
        if self.sample_hz == 0 {
            return Err(Error::Config("sensor sample rate must be positive".into()));
        }
        if !(self.noise_std_lsb >= 0.0) {
            return Err(Error::Config("noise std must be non-negative".into()));
        }
        Ok(())
    }

    /// Angle of one ADC code, in degrees.
    pub fn step_deg(&self) -> f64 {
        self.pot_range_deg / (1u64 << self.adc_bits) as f64
    }

    pub fn step_rad(&self) -> f64 {
        self.step_deg().to_radians()
    }

    pub fn code_count(&self) -> u32 {
        1u32 << self.adc_bits
    }

    /// Code that represents joint zero.
    pub fn zero_code(&self) -> u32 {
        self.code_count() / 2
    }

    pub fn code_to_angle(&self, code: u16) -> f64 {
        (f64::from(code) - f64::from(self.zero_code())) * self.step_rad()
    }
}

/// One of the hand's twenty potentiometer channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorChannel {
    pub config: SensorConfig,
    /// Global channel index, `finger * 4 + joint`; selects the noise stream.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub code: u16,
    /// Angle reconstructed from `code`, radians.
    pub angle: f64,
    pub out_of_range: bool,
}

fn mix(seed: u64, index: u64, tick: u64) -> u64 {
    // splitmix64 finaliser over the combined key
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tick.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SensorChannel {
    pub fn new(config: SensorConfig, index: usize) -> Self {
        Self { config, index }
    }

    /// Quantizes `true_angle` (radians) the way the ADC would at sensor
    /// tick `tick`. Noise, when enabled, is a pure function of
    /// `(seed, index, tick)`.
    pub fn sample(&self, true_angle: f64, tick: u64, seed: u64) -> Sample {
        let cfg = &self.config;
        let step = cfg.step_rad();
        let mut lsb = true_angle / step;
        if cfg.noise_std_lsb > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, self.index as u64, tick));
            let normal = Normal::new(0.0, cfg.noise_std_lsb).expect("validated std");
            lsb += normal.sample(&mut rng);
        }
        let raw = lsb.round() + f64::from(cfg.zero_code());
        let max_code = f64::from(cfg.code_count() - 1);
        let half_range = 0.5 * cfg.pot_range_deg.to_radians();
        let out_of_range = !raw.is_finite() || raw < 0.0 || raw > max_code || true_angle.abs() > half_range;
        let code = if raw.is_nan() { 0.0 } else { raw.clamp(0.0, max_code) } as u16;
        Sample {
            code,
            angle: cfg.code_to_angle(code),
            out_of_range,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel() -> SensorChannel {
        SensorChannel::new(SensorConfig::default(), 0)
    }

    #[test]
    fn default_step_beats_resolution_claim() {
        let step = SensorConfig::default().step_deg();
        assert!((step - 333.3 / 65536.0).abs() < 1e-18);
        assert!(step < 0.02);
        assert!((step - 0.005086).abs() < 1e-6);
    }

    #[test]
    fn code_centres_are_fixed_points() {
        let ch = channel();
        let step = ch.config.step_rad();
        for k in [-20000i32, -3, 0, 1, 777, 30000] {
            let angle = f64::from(k) * step;
            let s = ch.sample(angle, 0, 0);
            assert_eq!(s.angle, angle);
            assert!(!s.out_of_range);
        }
    }

    #[test]
    fn rounding_error_is_at_most_half_a_step() {
        let ch = channel();
        let step = ch.config.step_rad();
        let mut a = -1.5;
        while a < 1.5 {
            assert!((ch.sample(a, 0, 0).angle - a).abs() <= 0.5 * step * (1.0 + 1e-12));
            a += 0.000_731;
        }
    }

    #[test]
    fn out_of_range_saturates_and_flags() {
        let ch = channel();
        let hi = ch.sample(3.0, 0, 0);
        assert!(hi.out_of_range);
        assert_eq!(hi.code, u16::MAX);
        let lo = ch.sample(-3.0, 0, 0);
        assert!(lo.out_of_range);
        assert_eq!(lo.code, 0);
    }

    #[test]
    fn noise_is_seeded_and_bounded() {
        let cfg = SensorConfig {
            noise_std_lsb: 1.0,
            ..SensorConfig::default()
        };
        let ch = SensorChannel::new(cfg, 7);
        let step = cfg.step_rad();
        let a = 0.4;
        for tick in 0..200 {
            let s1 = ch.sample(a, tick, 42);
            let s2 = ch.sample(a, tick, 42);
            assert_eq!(s1, s2);
            assert!((s1.angle - a).abs() <= 0.5 * step + 6.0 * step);
        }
    }
}
