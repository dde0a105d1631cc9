//! Two-component polarization of the target light and its tomography.
//!
//! # Basis convention
//!
//! All states are written in the circular basis `c+|σ+⟩ + c−|σ−⟩`. The
//! analysis bases are fixed as
//!
//! | state | σ+ amplitude | σ− amplitude |
//! |-------|--------------|--------------|
//! | H     | 1/√2         | 1/√2         |
//! | V     | 1/√2         | −1/√2        |
//! | D     | 1/√2         | i/√2         |
//! | A     | 1/√2         | −i/√2        |
//! | L     | 1            | 0            |
//! | R     | 0            | 1            |
//!
//! which gives, for a state of total power N,
//!
//! ```text
//! S_HV = 2 Re(c+* c−) / N
//! S_DA = 2 Im(c+* c−) / N
//! S_LR = (|c+|² − |c−|²) / N
//! ```
//!
//! so the azimuth atan2(S_DA, S_HV) is the phase of c− relative to c+, and
//! pure σ− sits at S_LR = −1. Rows are fixed up to a global phase; with
//! phases kept consistent, V = −i(σ+ − σ−)/√2 and the linear polarizer at
//! angle α from H is (e^(−iα)σ+ + e^(iα)σ−)/√2, which transmits
//! `P (1 + S_HV cos 2α + S_DA sin 2α) / 2`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    HV,
    DA,
    LR,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::HV, Basis::DA, Basis::LR];

    pub fn index(self) -> usize {
        match self {
            Basis::HV => 0,
            Basis::DA => 1,
            Basis::LR => 2,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::HV => "H/V",
            Basis::DA => "D/A",
            Basis::LR => "L/R",
        })
    }
}

/// Amplitudes on σ+ and σ−. Not necessarily normalized: lossy propagation
/// leaves the norm below one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl PolarizationState {
    pub fn new(c_plus: Complex64, c_minus: Complex64) -> Result<Self> {
        let s = PolarizationState { c_plus, c_minus };
        if !(s.power() > 0.0) || !s.power().is_finite() {
            return Err(Error::usage(
                "polarization state has zero or non-finite power",
            ));
        }
        Ok(s)
    }

    pub fn from_real(c_plus: f64, c_minus: f64) -> Result<Self> {
        Self::new(Complex64::new(c_plus, 0.0), Complex64::new(c_minus, 0.0))
    }

    /// Real positive amplitudes with |c+| = |c−| e^(−od/2), normalized: the
    /// input that leaves equal powers in both components after an optical
    /// depth `od` on σ−.
    pub fn balanced_for(od: f64) -> Self {
        let a = (-0.5 * od).exp();
        let n = (1.0 + a * a).sqrt();
        PolarizationState {
            c_plus: Complex64::new(a / n, 0.0),
            c_minus: Complex64::new(1.0 / n, 0.0),
        }
    }

    pub fn power(&self) -> f64 {
        self.c_plus.norm_sqr() + self.c_minus.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self> {
        let p = self.power();
        if !(p > 0.0) {
            return Err(Error::usage("cannot normalize a zero state"));
        }
        let s = p.sqrt().recip();
        Ok(PolarizationState {
            c_plus: self.c_plus * s,
            c_minus: self.c_minus * s,
        })
    }

    /// Power landing in the first and second port of `basis`.
    pub fn port_powers(&self, basis: Basis) -> (f64, f64) {
        let (p, m) = (self.c_plus, self.c_minus);
        let i = Complex64::i();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match basis {
            Basis::HV => (((p + m) * h).norm_sqr(), ((p - m) * h).norm_sqr()),
            // ⟨D|ψ⟩ = (c+ − i c−)/√2, ⟨A|ψ⟩ = (c+ + i c−)/√2
            Basis::DA => (((p - i * m) * h).norm_sqr(), ((p + i * m) * h).norm_sqr()),
            Basis::LR => (p.norm_sqr(), m.norm_sqr()),
        }
    }
}

/// Transmission of the state through the medium: σ− is attenuated by
/// e^(−od/2) and phase shifted by `phi_minus`; σ+ picks up
/// `phi_minus / sigma_plus_suppression` (∞ leaves it untouched).
pub fn apply_medium(
    state: &PolarizationState,
    od_minus: f64,
    phi_minus: f64,
    sigma_plus_suppression: f64,
) -> PolarizationState {
    let minus = (-0.5 * od_minus).exp() * Complex64::from_polar(1.0, phi_minus);
    let plus_phase = if sigma_plus_suppression.is_infinite() {
        0.0
    } else {
        phi_minus / sigma_plus_suppression
    };
    PolarizationState {
        c_plus: state.c_plus * Complex64::from_polar(1.0, plus_phase),
        c_minus: state.c_minus * minus,
    }
}

/// Normalized Stokes vector (S_HV, S_DA, S_LR).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s_hv: f64,
    pub s_da: f64,
    pub s_lr: f64,
}

impl StokesVector {
    pub fn new(s_hv: f64, s_da: f64, s_lr: f64) -> Self {
        StokesVector { s_hv, s_da, s_lr }
    }

    pub fn from_spherical(s0: f64, theta: f64, phi: f64) -> Self {
        StokesVector {
            s_hv: s0 * theta.sin() * phi.cos(),
            s_da: s0 * theta.sin() * phi.sin(),
            s_lr: s0 * theta.cos(),
        }
    }

    /// Radius S0 (1 for a pure state).
    pub fn s0(&self) -> f64 {
        (self.s_hv * self.s_hv + self.s_da * self.s_da + self.s_lr * self.s_lr).sqrt()
    }

    /// Polar angle ϑ in [0, π].
    pub fn theta(&self) -> f64 {
        let s0 = self.s0();
        if s0 == 0.0 {
            0.0
        } else {
            (self.s_lr / s0).clamp(-1.0, 1.0).acos()
        }
    }

    /// Azimuth φ in (−π, π].
    pub fn phi(&self) -> f64 {
        self.s_da.atan2(self.s_hv)
    }

    /// Scales the transverse components by a coherence factor in [0, 1].
    pub fn dephased(&self, coherence: f64) -> Self {
        StokesVector {
            s_hv: self.s_hv * coherence,
            s_da: self.s_da * coherence,
            s_lr: self.s_lr,
        }
    }

    pub fn component(&self, basis: Basis) -> f64 {
        match basis {
            Basis::HV => self.s_hv,
            Basis::DA => self.s_da,
            Basis::LR => self.s_lr,
        }
    }

    /// Probability of landing in the first port of `basis`.
    pub fn first_port_probability(&self, basis: Basis) -> f64 {
        0.5 * (1.0 + self.component(basis))
    }
}

pub fn stokes(state: &PolarizationState) -> Result<StokesVector> {
    let n = state.power();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::usage(
            "Stokes parameters of a zero-power state are undefined",
        ));
    }
    let cross = state.c_plus.conj() * state.c_minus;
    Ok(StokesVector {
        s_hv: 2.0 * cross.re / n,
        s_da: 2.0 * cross.im / n,
        s_lr: (state.c_plus.norm_sqr() - state.c_minus.norm_sqr()) / n,
    })
}

/// V = √(S_HV² + S_DA²).
pub fn visibility(s: &StokesVector) -> f64 {
    s.s_hv.hypot(s.s_da)
}

/// P_α = P_total [1 + V cos(φ − 2α)] / 2.
pub fn fringe_power(p_total: f64, v: f64, phi: f64, alpha: f64) -> f64 {
    0.5 * p_total * (1.0 + v * (phi - 2.0 * alpha).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub p_total: f64,
    pub visibility: f64,
    pub phi: f64,
}

/// Least-squares fit of `fringe_power` to a polarizer-angle scan.
///
/// The model is linear in (P/2, (PV/2) cos φ, (PV/2) sin φ) against
/// (1, cos 2α, sin 2α); the 3×3 normal equations are solved directly.
pub fn fit_fringe(alphas: &[f64], powers: &[f64]) -> Result<FringeFit> {
    if alphas.len() != powers.len() || alphas.len() < 3 {
        return Err(Error::usage(
            "fringe fit needs at least 3 (angle, power) pairs",
        ));
    }
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for (&a, &p) in alphas.iter().zip(powers) {
        let row = nalgebra::Vector3::new(1.0, (2.0 * a).cos(), (2.0 * a).sin());
        ata += row * row.transpose();
        atb += row * p;
    }
    let x = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::Degenerate("polarizer angles do not span a fringe".into()))?;
    let p_total = 2.0 * x[0];
    if !(p_total > 0.0) {
        return Err(Error::usage("fringe scan has no power"));
    }
    let amp = 2.0 * x[1].hypot(x[2]);
    Ok(FringeFit {
        p_total,
        visibility: amp / p_total,
        phi: x[2].atan2(x[1]),
    })
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}
