//! Physical constants (CODATA 2018) and atomic-unit conversions.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const MU_0: f64 = 1.256_637_062_12e-6;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Hartree energy divided by h, in Hz.
pub const HARTREE_FREQUENCY: f64 = 6.579_683_920_502e15;
/// One atomic unit of polarizability, in C·m²/V.
pub const AU_POLARIZABILITY: f64 = 1.648_777_274_36e-41;

/// Angular frequency (rad/s) to atomic units of energy.
pub fn angular_frequency_to_au(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI * HARTREE_FREQUENCY)
}

pub fn hz_to_mk(hz: f64) -> f64 {
    hz * PLANCK / BOLTZMANN * 1e3
}

pub fn mk_to_hz(mk: f64) -> f64 {
    mk * 1e-3 * BOLTZMANN / PLANCK
}

pub fn wavelength_to_angular_frequency(lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda
}

pub fn angular_frequency_to_wavelength(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega
}

/// Intensity `(c ε0 / 2) |E|²` of a positive-frequency amplitude in vacuum.
pub fn intensity_from_amplitude_sq(e_sq: f64) -> f64 {
    0.5 * SPEED_OF_LIGHT * EPSILON_0 * e_sq
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mk_round_trip() {
        let hz = 8.33e6;
        assert!((mk_to_hz(hz_to_mk(hz)) - hz).abs() < 1e-6);
        // 1 mK is about 20.8 MHz
        assert!((mk_to_hz(1.0) / 1e6 - 20.837).abs() < 1e-2);
    }

    #[test]
    fn vacuum_relation() {
        let c2 = 1.0 / (EPSILON_0 * MU_0);
        assert!(((c2.sqrt() - SPEED_OF_LIGHT) / SPEED_OF_LIGHT).abs() < 1e-9);
    }
}
