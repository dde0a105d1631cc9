//! Physical constants (CODATA 2018) and the unit conversions used at I/O
//! boundaries. Internally every frequency, detuning and rate is angular
//! (rad/s).

use std::f64::consts::TAU;

/// Reduced Planck constant, J s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON0: f64 = 8.854_187_812_8e-12;
/// Bohr radius, m (CODATA 2018).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Hartree energy, J (CODATA 2018).
pub const HARTREE: f64 = 4.359_744_722_207_1e-18;
/// Vacuum wavelength of the Rb-87 D2 line, m (Steck, "Rubidium 87 D Line Data").
pub const RB87_D2_WAVELENGTH: f64 = 780.241_209_686e-9;
/// Dipole matrix element of the Rb-87 D2 cycling transition
/// |F=2, m=±2> -> |F'=3, m'=±3>, C m (Steck, 2.9931 e a0).
pub const RB87_D2_CYCLING_DIPOLE: f64 = 2.5361e-29;
/// Lifetime of Rb 5P3/2, s; the population decay rate is its inverse.
pub const RB87_5P32_LIFETIME: f64 = 26e-9;

/// Atomic unit of the C6 coefficient, E_h a0^6, in J m^6.
pub fn c6_atomic_unit() -> f64 {
    HARTREE * BOHR_RADIUS.powi(6)
}

/// Shared constant set, with the signal wavelength as the one tunable entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub epsilon0: f64,
    pub bohr_radius: f64,
    pub hartree: f64,
    pub c6_atomic_unit: f64,
    pub signal_wavelength: f64,
    pub k_s: f64,
}

impl PhysicalConstants {
    pub fn with_wavelength(signal_wavelength: f64) -> Self {
        PhysicalConstants {
            hbar: HBAR,
            epsilon0: EPSILON0,
            bohr_radius: BOHR_RADIUS,
            hartree: HARTREE,
            c6_atomic_unit: c6_atomic_unit(),
            signal_wavelength,
            k_s: TAU / signal_wavelength,
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::with_wavelength(RB87_D2_WAVELENGTH)
    }
}

/// Vacuum wave number 2π/λ.
pub fn wave_number(wavelength: f64) -> f64 {
    TAU / wavelength
}

pub fn c6_from_atomic_units(c6_au: f64) -> f64 {
    c6_au * c6_atomic_unit()
}

/// Δ/2π in MHz to rad/s.
pub fn angular_from_mhz(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e6
}

/// rad/s to Δ/2π in MHz.
pub fn mhz_from_angular(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}
