//! Effect of one stored Rydberg excitation on the target susceptibility.
//!
//! A stored excitation at distance r shifts the Rydberg pair state by
//! V(r)/ħ = −C6/(ħ r^6). Inside the susceptibility this moves the two-photon
//! resonance: the two-photon term becomes γrg − 2i(Δc + Δs − V/ħ). For
//! r → ∞ the EIT medium is recovered, for r → 0 the two-level medium.
//!
//! The geometry is one-dimensional: r = |z − z0| along the medium axis.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{c6_from_atomic_units, HBAR};
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::susceptibility::{
    chi, chi_with_pair_shift, od_and_phase, ComplexSusceptibility, EitParams, MediumGeometry,
    OdPhase,
};

/// Relative tolerance of the axial integrals.
pub const INTEGRATION_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockadeParams {
    /// C6 in J m^6; positive means attractive under V = −C6/r^6.
    pub c6: f64,
    /// Axial position z0 of the stored excitation, m, measured from the
    /// medium entrance.
    pub excitation_z: f64,
    /// Flip the signs of both Δs and Δc (the pair shift keeps its sign).
    pub sign_reversed: bool,
}

impl BlockadeParams {
    /// C6 = 2.3e23 atomic units, excitation at the medium centre.
    pub fn reference(geom: &MediumGeometry) -> Self {
        BlockadeParams {
            c6: c6_from_atomic_units(2.3e23),
            excitation_z: 0.5 * geom.length,
            sign_reversed: false,
        }
    }

    pub fn with_sign_reversed(self, sign_reversed: bool) -> Self {
        BlockadeParams {
            sign_reversed,
            ..self
        }
    }

    /// Parameters and detuning as actually seen by the medium once the sign
    /// flag is applied.
    fn effective(&self, params: &EitParams, delta_s: f64) -> (EitParams, f64) {
        if self.sign_reversed {
            (params.sign_reversed(), -delta_s)
        } else {
            (*params, delta_s)
        }
    }
}

/// Pair-state shift V(r)/ħ in rad/s.
pub fn vdw_shift(c6: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::usage(format!("pair distance must be > 0, got {r}")));
    }
    Ok(-c6 / (HBAR * r.powi(6)))
}

/// R_b = |C6 / (ħ Δ_T)|^(1/6).
pub fn blockade_radius(c6: f64, delta_t: f64) -> Result<f64> {
    if !(delta_t > 0.0) || !delta_t.is_finite() {
        return Err(Error::usage(format!(
            "EIT linewidth must be > 0, got {delta_t}"
        )));
    }
    Ok((c6 / (HBAR * delta_t)).abs().powf(1.0 / 6.0))
}

/// Susceptibility seen by the target at distance `r` from the stored
/// excitation.
pub fn chi_blockaded(
    params: &EitParams,
    blk: &BlockadeParams,
    delta_s: f64,
    r: f64,
) -> Result<ComplexSusceptibility> {
    let shift = vdw_shift(blk.c6, r)?;
    let (p, d) = blk.effective(params, delta_s);
    Ok(chi_with_pair_shift(&p, d, shift))
}

// Radii where |V|/ħ passes Γe × 10^(k/4); the integrand changes fastest
// around these.
fn characteristic_radii(params: &EitParams, c6: f64) -> Vec<f64> {
    if c6 == 0.0 {
        return Vec::new();
    }
    (-8..=8)
        .map(|k| {
            let rate = params.gamma_e * 10f64.powf(k as f64 / 4.0);
            (c6.abs() / (HBAR * rate)).powf(1.0 / 6.0)
        })
        .collect()
}

/// Optical depth and phase of the full medium with 0 or 1 stored
/// excitations.
pub fn integrated_phase(
    params: &EitParams,
    geom: &MediumGeometry,
    blk: &BlockadeParams,
    delta_s: f64,
    n_excitations: u8,
) -> Result<OdPhase> {
    params.validate()?;
    let (p, d) = blk.effective(params, delta_s);
    match n_excitations {
        0 => Ok(od_and_phase(&chi(&p, d), geom)),
        1 => {
            let z0 = blk.excitation_z;
            if !(0.0..=geom.length).contains(&z0) {
                return Err(Error::usage(format!(
                    "excitation position {z0} m outside medium [0, {}] m",
                    geom.length
                )));
            }
            let c6 = blk.c6;
            let integrand = |z: f64| -> Complex64 {
                let r = (z - z0).abs();
                let shift = if r > 0.0 {
                    -c6 / (HBAR * r.powi(6))
                } else {
                    f64::NEG_INFINITY * c6.signum()
                };
                chi_with_pair_shift(&p, d, shift).as_complex()
            };
            let mut breaks = vec![z0];
            for r in characteristic_radii(&p, c6) {
                breaks.push(z0 - r);
                breaks.push(z0 + r);
            }
            let tol = Tolerance {
                rel: INTEGRATION_REL_TOL,
                ..Tolerance::default()
            };
            let integral = quadrature::integrate(integrand, 0.0, geom.length, &breaks, tol)?;
            Ok(OdPhase {
                od: geom.k_s * integral.value.im,
                phase: 0.5 * geom.k_s * integral.value.re,
            })
        }
        n => Err(Error::usage(format!(
            "only 0 or 1 stored excitations are modelled, got {n}"
        ))),
    }
}

/// Target response with and without a stored excitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlledPhase {
    pub od0: f64,
    pub phase0: f64,
    pub od1: f64,
    pub phase1: f64,
}

impl ControlledPhase {
    /// φ1 − φ0.
    pub fn controlled(&self) -> f64 {
        self.phase1 - self.phase0
    }
}

pub fn controlled_phase(
    params: &EitParams,
    geom: &MediumGeometry,
    blk: &BlockadeParams,
    delta_s: f64,
) -> Result<ControlledPhase> {
    let zero = integrated_phase(params, geom, blk, delta_s, 0)?;
    let one = integrated_phase(params, geom, blk, delta_s, 1)?;
    Ok(ControlledPhase {
        od0: zero.od,
        phase0: zero.phase,
        od1: one.od,
        phase1: one.phase,
    })
}

/// Full-medium phase of the two-level medium minus that of the EIT medium:
/// the controlled phase a blockade covering the whole medium would give.
pub fn full_blockade_phase_difference(
    params: &EitParams,
    geom: &MediumGeometry,
    delta_s: f64,
    sign_reversed: bool,
) -> f64 {
    let (p, d) = if sign_reversed {
        (params.sign_reversed(), -delta_s)
    } else {
        (*params, delta_s)
    };
    od_and_phase(&chi(&p.two_level(), d), geom).phase - od_and_phase(&chi(&p, d), geom).phase
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardSphereEstimate {
    pub controlled_phase: f64,
    /// The blockade sphere 2R_b was longer than the medium and was clamped.
    pub clamped: bool,
}

/// (2R_b/L)(φ_two-level − φ_EIT): the blockaded length takes the two-level
/// value, the rest keeps the EIT value.
pub fn hard_sphere_controlled_phase(
    r_b: f64,
    geom: &MediumGeometry,
    phase_two_level: f64,
    phase_eit: f64,
) -> Result<HardSphereEstimate> {
    if !(r_b >= 0.0) || !r_b.is_finite() {
        return Err(Error::usage(format!(
            "blockade radius must be >= 0, got {r_b}"
        )));
    }
    let clamped = 2.0 * r_b > geom.length;
    let fraction = (2.0 * r_b / geom.length).min(1.0);
    Ok(HardSphereEstimate {
        controlled_phase: fraction * (phase_two_level - phase_eit),
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// max |y − fit| / max |y|.
    pub max_rel_residual: f64,
}

/// Ordinary least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (intercept + slope * a)).abs())
        .fold(0.0f64, f64::max);
    LinearFit {
        slope,
        intercept,
        max_rel_residual: if scale > 0.0 { worst / scale } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub rho: f64,
    pub phase0: f64,
    pub phase1: f64,
    pub controlled_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityScan {
    pub rows: Vec<DensityRow>,
    pub fit_phase0: LinearFit,
    pub fit_phase1: LinearFit,
    pub fit_controlled: LinearFit,
}

/// φ0, φ1 and φ1 − φ0 against density, with straight-line fits.
pub fn density_scan(
    base: &EitParams,
    geom: &MediumGeometry,
    blk: &BlockadeParams,
    delta_s: f64,
    rho_grid: &[f64],
) -> Result<DensityScan> {
    if rho_grid.is_empty() {
        return Err(Error::usage("density grid is empty"));
    }
    if let Some(bad) = rho_grid.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::usage(format!(
            "densities must be positive, got {bad}"
        )));
    }
    let rows = rho_grid
        .par_iter()
        .map(|&rho| {
            let c = controlled_phase(&base.with_density(rho), geom, blk, delta_s)?;
            Ok(DensityRow {
                rho,
                phase0: c.phase0,
                phase1: c.phase1,
                controlled_phase: c.controlled(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.rho).collect();
    let col = |f: fn(&DensityRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(DensityScan {
        fit_phase0: linear_fit(&x, &col(|r| r.phase0)),
        fit_phase1: linear_fit(&x, &col(|r| r.phase1)),
        fit_controlled: linear_fit(&x, &col(|r| r.controlled_phase)),
        rows,
    })
}
