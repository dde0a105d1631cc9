//! Complex susceptibility of a ladder-type EIT medium and its propagation to
//! optical depth and phase.
//!
//! The model is
//!
//! ```text
//! χ = i χ0 Γe / (Γe − 2iΔs + |Ωc|² / (γrg − 2i(Δc + Δs)))
//! χ0 = 2ρ|d_eg|² / (ε0 ħ Γe)
//! ```
//!
//! and a homogeneous medium of length L gives `OD = k_s L Im χ` and
//! `φ = k_s L Re χ / 2`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{
    angular_from_mhz, EPSILON0, HBAR, RB87_5P32_LIFETIME, RB87_D2_CYCLING_DIPOLE,
    RB87_D2_WAVELENGTH,
};
use crate::error::{Error, Result};

/// Transmission values below this are reported as exactly zero.
pub const TRANSMISSION_FLOOR: f64 = 1e-300;

/// Parameters of the ladder EIT medium. All rates and detunings in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitParams {
    /// Population decay rate Γe of the intermediate state.
    pub gamma_e: f64,
    /// Ground-Rydberg dephasing rate γrg.
    pub gamma_rg: f64,
    /// Coupling Rabi frequency |Ωc|.
    pub omega_c: f64,
    /// Coupling detuning Δc.
    pub delta_c: f64,
    /// Atomic density, 1/m^3.
    pub rho: f64,
    /// Dipole matrix element of the signal transition, C m.
    pub d_eg: f64,
}

impl EitParams {
    pub fn new(
        gamma_e: f64,
        gamma_rg: f64,
        omega_c: f64,
        delta_c: f64,
        rho: f64,
        d_eg: f64,
    ) -> Result<Self> {
        let p = EitParams {
            gamma_e,
            gamma_rg,
            omega_c,
            delta_c,
            rho,
            d_eg,
        };
        p.validate()?;
        Ok(p)
    }

    /// Reference operating point: Γe = 1/(26 ns), Ωc/2π = 18 MHz,
    /// ρ = 1.8e12 cm^-3 and the D2 cycling dipole, with γrg/2π = 0.3 MHz and
    /// Δc/2π = 7.5 MHz calibrated so that the two-level minus EIT phase at
    /// Δs/2π = −10 MHz is ≈ 6.5 rad.
    pub fn reference() -> Self {
        EitParams {
            gamma_e: 1.0 / RB87_5P32_LIFETIME,
            gamma_rg: angular_from_mhz(0.3),
            omega_c: angular_from_mhz(18.0),
            delta_c: angular_from_mhz(7.5),
            rho: 1.8e18,
            d_eg: RB87_D2_CYCLING_DIPOLE,
        }
    }

    /// Same as [`EitParams::reference`] with Ωc lowered so that the
    /// transparency window has Δ_T/2π = 3.70 MHz.
    pub fn narrow_window() -> Self {
        EitParams {
            omega_c: angular_from_mhz(NARROW_WINDOW_OMEGA_C_MHZ),
            ..Self::reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma_e,
            self.gamma_rg,
            self.omega_c,
            self.delta_c,
            self.rho,
            self.d_eg,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::usage("EIT parameters must be finite"));
        }
        if self.gamma_e <= 0.0 {
            return Err(Error::usage("gamma_e must be > 0"));
        }
        if self.gamma_rg < 0.0 {
            return Err(Error::usage("gamma_rg must be >= 0"));
        }
        if self.omega_c < 0.0 {
            return Err(Error::usage("omega_c must be >= 0"));
        }
        if self.rho < 0.0 {
            return Err(Error::usage("rho must be >= 0"));
        }
        if self.d_eg <= 0.0 {
            return Err(Error::usage("d_eg must be > 0"));
        }
        Ok(())
    }

    pub fn with_density(self, rho: f64) -> Self {
        EitParams { rho, ..self }
    }

    /// The Ωc = 0 medium (no coupling light).
    pub fn two_level(self) -> Self {
        EitParams {
            omega_c: 0.0,
            ..self
        }
    }

    /// Simultaneously flips Δc; the caller flips Δs.
    pub fn sign_reversed(self) -> Self {
        EitParams {
            delta_c: -self.delta_c,
            ..self
        }
    }

    pub fn chi0(&self) -> f64 {
        chi0(self)
    }
}

/// Ωc/2π in MHz giving Δ_T/2π = 3.70 MHz with the other reference values.
pub const NARROW_WINDOW_OMEGA_C_MHZ: f64 = 12.046_483;

/// Axially homogeneous medium of length `length` probed at wave number `k_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumGeometry {
    pub length: f64,
    pub k_s: f64,
}

impl MediumGeometry {
    pub fn new(length: f64, k_s: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::usage("medium length must be > 0"));
        }
        if !(k_s.is_finite() && k_s > 0.0) {
            return Err(Error::usage("k_s must be > 0"));
        }
        Ok(MediumGeometry { length, k_s })
    }

    /// L = 61 μm at the D2 wavelength.
    pub fn reference() -> Self {
        MediumGeometry {
            length: 61e-6,
            k_s: crate::constants::wave_number(RB87_D2_WAVELENGTH),
        }
    }

    pub fn with_length(self, length: f64) -> Self {
        MediumGeometry { length, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexSusceptibility {
    pub re: f64,
    pub im: f64,
    /// Set when γrg = 0 and the two-photon detuning vanishes: the coupling
    /// term diverges and χ is returned as its limit, exactly zero.
    pub exact_eit: bool,
}

impl ComplexSusceptibility {
    pub fn from_complex(z: Complex64) -> Self {
        ComplexSusceptibility {
            re: z.re,
            im: z.im,
            exact_eit: false,
        }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn zero() -> Self {
        Self::from_complex(Complex64::new(0.0, 0.0))
    }
}

/// Optical depth and phase picked up by the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdPhase {
    pub od: f64,
    pub phase: f64,
}

impl OdPhase {
    pub fn transmission(&self) -> f64 {
        transmission_from_od(self.od)
    }
}

pub fn transmission_from_od(od: f64) -> f64 {
    let t = (-od).exp();
    if t < TRANSMISSION_FLOOR {
        0.0
    } else {
        t
    }
}

/// |χ| for Ωc = Δs = 0.
pub fn chi0(params: &EitParams) -> f64 {
    2.0 * params.rho * params.d_eg * params.d_eg / (EPSILON0 * HBAR * params.gamma_e)
}

pub fn chi(params: &EitParams, delta_s: f64) -> ComplexSusceptibility {
    chi_with_pair_shift(params, delta_s, 0.0)
}

/// χ with the two-photon resonance moved by `pair_shift` (rad/s): the
/// two-photon term becomes γrg − 2i(Δc + Δs − pair_shift). An infinite shift
/// removes the coupling term entirely.
pub(crate) fn chi_with_pair_shift(
    params: &EitParams,
    delta_s: f64,
    pair_shift: f64,
) -> ComplexSusceptibility {
    let i = Complex64::i();
    let gamma_e = params.gamma_e;
    let numerator = i * chi0(params) * gamma_e;
    let single = Complex64::new(gamma_e, -2.0 * delta_s);

    if params.omega_c == 0.0 || !pair_shift.is_finite() {
        return ComplexSusceptibility::from_complex(numerator / single);
    }

    let two_photon = params.delta_c + delta_s - pair_shift;
    if params.gamma_rg == 0.0 && two_photon == 0.0 {
        return ComplexSusceptibility {
            re: 0.0,
            im: 0.0,
            exact_eit: true,
        };
    }
    let coupling =
        params.omega_c * params.omega_c / Complex64::new(params.gamma_rg, -2.0 * two_photon);
    ComplexSusceptibility::from_complex(numerator / (single + coupling))
}

pub fn od_and_phase(chi: &ComplexSusceptibility, geom: &MediumGeometry) -> OdPhase {
    let kl = geom.k_s * geom.length;
    OdPhase {
        od: kl * chi.im,
        phase: 0.5 * kl * chi.re,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub delta_s: f64,
    pub transmission: f64,
    pub phase: f64,
    pub od: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::usage("detuning grid is empty"));
    }
    if grid.iter().any(|d| !d.is_finite()) {
        return Err(Error::usage("detuning grid contains non-finite values"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("detuning grid must be strictly increasing"));
    }
    Ok(())
}

/// Transmission and phase on a strictly increasing detuning grid.
pub fn spectrum(
    params: &EitParams,
    geom: &MediumGeometry,
    delta_s_grid: &[f64],
) -> Result<Vec<SpectrumRow>> {
    params.validate()?;
    check_grid(delta_s_grid)?;
    Ok(delta_s_grid
        .par_iter()
        .map(|&delta_s| {
            let p = od_and_phase(&chi(params, delta_s), geom);
            SpectrumRow {
                delta_s,
                transmission: p.transmission(),
                phase: p.phase,
                od: p.od,
            }
        })
        .collect())
}

/// Evenly spaced grid of `points` detunings from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|k| start + step * k as f64).collect()
        }
    }
}

/// Location and size of the transparency window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitFeature {
    /// Full width at half height, rad/s.
    pub fwhm: f64,
    /// Detuning of the peak, rad/s.
    pub peak_delta_s: f64,
    /// Peak height above the two-level transmission.
    pub peak_height: f64,
    pub left_edge: f64,
    pub right_edge: f64,
}

const FEATURE_SCAN_POINTS: usize = 8001;
const MIN_FEATURE_HEIGHT: f64 = 1e-9;

/// Finds the transparency window on top of the two-level absorption line.
///
/// Height is measured as T_EIT(Δs) − T_2level(Δs); the edges are the
/// half-height crossings on either side of the peak near Δs = −Δc.
pub fn eit_feature(params: &EitParams, geom: &MediumGeometry) -> Result<EitFeature> {
    params.validate()?;
    if params.omega_c == 0.0 {
        return Err(Error::NoEitFeature(
            "coupling Rabi frequency is zero".into(),
        ));
    }
    let background = params.two_level();
    let height = |d: f64| {
        od_and_phase(&chi(params, d), geom).transmission()
            - od_and_phase(&chi(&background, d), geom).transmission()
    };

    let centre = -params.delta_c;
    let half_window = 2.0 * (params.omega_c + params.gamma_e);
    let grid = linear_grid(
        centre - half_window,
        centre + half_window,
        FEATURE_SCAN_POINTS,
    );
    let values: Vec<f64> = grid.iter().map(|&d| height(d)).collect();
    let (imax, &hmax) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    if !(hmax > MIN_FEATURE_HEIGHT) {
        return Err(Error::NoEitFeature(format!(
            "peak transmission excess {hmax:.3e} is below {MIN_FEATURE_HEIGHT:.0e}"
        )));
    }

    let lo = grid[imax.saturating_sub(1)];
    let hi = grid[(imax + 1).min(grid.len() - 1)];
    let peak_delta_s = golden_max(&height, lo, hi, 1e-12 * half_window);
    let peak_height = height(peak_delta_s).max(hmax);
    let half = 0.5 * peak_height;

    let left_idx = (0..=imax)
        .rev()
        .find(|&k| values[k] < half)
        .ok_or_else(|| {
            Error::NoEitFeature("left half-height crossing outside scan window".into())
        })?;
    let right_idx = (imax..grid.len())
        .find(|&k| values[k] < half)
        .ok_or_else(|| {
            Error::NoEitFeature("right half-height crossing outside scan window".into())
        })?;

    let tol = 1e-10 * half_window;
    let left_edge = bisect(
        |d| height(d) - half,
        grid[left_idx],
        grid[left_idx + 1],
        tol,
    );
    let right_edge = bisect(
        |d| height(d) - half,
        grid[right_idx - 1],
        grid[right_idx],
        tol,
    );

    Ok(EitFeature {
        fwhm: right_edge - left_edge,
        peak_delta_s,
        peak_height,
        left_edge,
        right_edge,
    })
}

/// Full width at half maximum Δ_T of the transparency feature, rad/s.
pub fn transmission_fwhm(params: &EitParams, geom: &MediumGeometry) -> Result<f64> {
    eit_feature(params, geom).map(|f| f.fwhm)
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Bisection for a sign change of `f` in `[a, b]`.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
