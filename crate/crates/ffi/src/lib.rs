//! C ABI over `rydberg_xpm`.
//!
//! A model handle owns one run configuration. Every fallible call returns
//! an [`RxpmStatus`]; on failure the message is kept per thread and can be
//! fetched with [`rxpm_last_error_message`]. Frequencies cross the boundary
//! in MHz (not angular), lengths in micrometres.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use rydberg_xpm::blockade::{
    blockade_radius, controlled_phase, full_blockade_phase_difference, hard_sphere_controlled_phase,
};
use rydberg_xpm::config::RunConfig;
use rydberg_xpm::constants::{angular_from_mhz, mhz_from_angular};
use rydberg_xpm::fitting::{fit_spectrum, Bounds, DataPoint, SpectrumData};
use rydberg_xpm::photostatistics::{retrieval_efficiency, run_tomography, TargetResponse};
use rydberg_xpm::polarization::{stokes, PolarizationState};
use rydberg_xpm::susceptibility::{chi, od_and_phase, spectrum, transmission_fwhm};
use rydberg_xpm::Error;

/// Result of every fallible call. Values match the `rxpm` exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxpmStatus {
    Ok = 0,
    /// Null pointer, bad length, or an argument outside its domain.
    InvalidArgument = 2,
    /// Integration, fitting, or a spectrum without a transparency window.
    Numerical = 3,
    InsufficientStatistics = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Opaque model handle.
pub struct RxpmModel {
    config: RunConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RxpmControlledPhase {
    pub od0: f64,
    pub phase0: f64,
    pub od1: f64,
    pub phase1: f64,
    pub controlled_phase: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RxpmStokes {
    pub s_hv: f64,
    pub s_da: f64,
    pub s_lr: f64,
    /// Polar angle on the Poincaré sphere.
    pub theta: f64,
    /// Azimuth, arg(c−/c+).
    pub phi: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RxpmTomography {
    pub azimuth_with_control: f64,
    pub azimuth_with_control_err: f64,
    pub azimuth_without_control: f64,
    pub azimuth_without_control_err: f64,
    pub visibility_with_control: f64,
    pub visibility_with_control_err: f64,
    pub controlled_phase: f64,
    pub controlled_phase_err: f64,
    pub postselected_repetitions: u64,
}

/// Fitted transmission model. Index order: od_peak, omega_c_mhz,
/// gamma_rg_mhz, delta_c_mhz.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RxpmFitResult {
    pub params: [f64; 4],
    pub uncertainties: [f64; 4],
    pub reduced_chi_square: f64,
    pub iterations: u64,
    /// NaN when the fitted model has no transparency peak.
    pub fwhm_mhz: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_last_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut v = e.borrow_mut();
        v.clear();
        v.extend(msg.bytes().filter(|b| *b != 0));
    });
}

fn status_of(e: &Error) -> RxpmStatus {
    match e.exit_code() {
        2 => RxpmStatus::InvalidArgument,
        3 => RxpmStatus::Numerical,
        4 => RxpmStatus::InsufficientStatistics,
        _ => RxpmStatus::Io,
    }
}

struct Fail(RxpmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(RxpmStatus::InvalidArgument, msg.to_string())
}

/// Runs `f` behind a panic guard and records any error message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RxpmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            RxpmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            RxpmStatus::Internal
        }
    }
}

unsafe fn handle<'a>(m: *const RxpmModel) -> Result<&'a RxpmModel, Fail> {
    m.as_ref().ok_or_else(|| invalid("model handle is null"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| invalid("output pointer is null"))
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid("input array is null"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize) -> Result<&'a mut [T], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(invalid("output array is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rxpm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`). Returns the full message length
/// excluding the terminator, so a larger buffer can be retried.
#[no_mangle]
pub unsafe extern "C" fn rxpm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Model with every parameter at its default value.
#[no_mangle]
pub unsafe extern "C" fn rxpm_model_new_default(model_out: *mut *mut RxpmModel) -> RxpmStatus {
    guard(|| {
        let slot = out(model_out)?;
        *slot = Box::into_raw(Box::new(RxpmModel {
            config: RunConfig::default(),
        }));
        Ok(())
    })
}

/// Model from a JSON run configuration (same schema as the `rxpm` CLI).
#[no_mangle]
pub unsafe extern "C" fn rxpm_model_from_json(
    json: *const c_char,
    model_out: *mut *mut RxpmModel,
) -> RxpmStatus {
    guard(|| {
        let slot = out(model_out)?;
        if json.is_null() {
            return Err(invalid("json is null"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| invalid("json is not valid UTF-8"))?;
        let config = RunConfig::from_json(text)?;
        *slot = Box::into_raw(Box::new(RxpmModel { config }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rxpm_model_free(model: *mut RxpmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Complex susceptibility at signal detuning `delta_s_mhz`.
#[no_mangle]
pub unsafe extern "C" fn rxpm_chi(
    model: *const RxpmModel,
    delta_s_mhz: f64,
    re_out: *mut f64,
    im_out: *mut f64,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let (re, im) = (out(re_out)?, out(im_out)?);
        let c = chi(&m.config.eit_params(), angular_from_mhz(delta_s_mhz));
        *re = c.re;
        *im = c.im;
        Ok(())
    })
}

/// Optical depth and phase of the whole medium.
#[no_mangle]
pub unsafe extern "C" fn rxpm_od_phase(
    model: *const RxpmModel,
    delta_s_mhz: f64,
    od_out: *mut f64,
    phase_out: *mut f64,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let (od, phase) = (out(od_out)?, out(phase_out)?);
        let c = &m.config;
        let r = od_and_phase(
            &chi(&c.eit_params(), angular_from_mhz(delta_s_mhz)),
            &c.geometry(),
        );
        *od = r.od;
        *phase = r.phase;
        Ok(())
    })
}

/// Transmission and phase on `n` strictly increasing detunings.
#[no_mangle]
pub unsafe extern "C" fn rxpm_spectrum(
    model: *const RxpmModel,
    delta_s_mhz: *const f64,
    n: usize,
    transmission_out: *mut f64,
    phase_out: *mut f64,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let grid: Vec<f64> = slice(delta_s_mhz, n)?
            .iter()
            .map(|f| angular_from_mhz(*f))
            .collect();
        let t = slice_mut(transmission_out, n)?;
        let p = slice_mut(phase_out, n)?;
        let rows = spectrum(&m.config.eit_params(), &m.config.geometry(), &grid)?;
        for (i, r) in rows.iter().enumerate() {
            t[i] = r.transmission;
            p[i] = r.phase;
        }
        Ok(())
    })
}

/// Full width at half height of the transparency window.
#[no_mangle]
pub unsafe extern "C" fn rxpm_transmission_fwhm_mhz(
    model: *const RxpmModel,
    fwhm_out: *mut f64,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let o = out(fwhm_out)?;
        *o = mhz_from_angular(transmission_fwhm(
            &m.config.eit_params(),
            &m.config.geometry(),
        )?);
        Ok(())
    })
}

/// |C6/ħΔ_T|^(1/6) with the model's C6.
#[no_mangle]
pub unsafe extern "C" fn rxpm_blockade_radius_um(
    model: *const RxpmModel,
    delta_t_mhz: f64,
    radius_out: *mut f64,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let o = out(radius_out)?;
        *o = blockade_radius(m.config.blockade_params().c6, angular_from_mhz(delta_t_mhz))? * 1e6;
        Ok(())
    })
}

/// Integrated response with zero and one stored excitation.
#[no_mangle]
pub unsafe extern "C" fn rxpm_controlled_phase(
    model: *const RxpmModel,
    delta_s_mhz: f64,
    sign_reversed: bool,
    result_out: *mut RxpmControlledPhase,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let o = out(result_out)?;
        let c = &m.config;
        let blk = c.blockade_params().with_sign_reversed(sign_reversed);
        let r = controlled_phase(
            &c.eit_params(),
            &c.geometry(),
            &blk,
            angular_from_mhz(delta_s_mhz),
        )?;
        *o = RxpmControlledPhase {
            od0: r.od0,
            phase0: r.phase0,
            od1: r.od1,
            phase1: r.phase1,
            controlled_phase: r.controlled(),
        };
        Ok(())
    })
}

/// (2R_b/L)(φ_two-level − φ_EIT) at `delta_s_mhz`.
#[no_mangle]
pub unsafe extern "C" fn rxpm_hard_sphere_phase(
    model: *const RxpmModel,
    radius_um: f64,
    delta_s_mhz: f64,
    phase_out: *mut f64,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let o = out(phase_out)?;
        let c = &m.config;
        let g = c.geometry();
        let diff = full_blockade_phase_difference(
            &c.eit_params(),
            &g,
            angular_from_mhz(delta_s_mhz),
            false,
        );
        *o = hard_sphere_controlled_phase(radius_um * 1e-6, &g, diff, 0.0)?.controlled_phase;
        Ok(())
    })
}

/// Normalized Stokes vector of the state c+ σ+ + c− σ−.
#[no_mangle]
pub unsafe extern "C" fn rxpm_stokes(
    c_plus_re: f64,
    c_plus_im: f64,
    c_minus_re: f64,
    c_minus_im: f64,
    stokes_out: *mut RxpmStokes,
) -> RxpmStatus {
    guard(|| {
        let o = out(stokes_out)?;
        let state = PolarizationState::new(
            Complex64::new(c_plus_re, c_plus_im),
            Complex64::new(c_minus_re, c_minus_im),
        )?;
        let s = stokes(&state)?;
        *o = RxpmStokes {
            s_hv: s.s_hv,
            s_da: s.s_da,
            s_lr: s.s_lr,
            theta: s.theta(),
            phi: s.phi(),
        };
        Ok(())
    })
}

/// Storage-and-retrieval efficiency after `delay_us`.
#[no_mangle]
pub unsafe extern "C" fn rxpm_retrieval_efficiency(
    model: *const RxpmModel,
    delay_us: f64,
    efficiency_out: *mut f64,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let o = out(efficiency_out)?;
        *o = retrieval_efficiency(&m.config.experiment_config(), delay_us * 1e-6)?;
        Ok(())
    })
}

/// Monte Carlo tomography at the model's operating point, seeded by
/// `seed`.
#[no_mangle]
pub unsafe extern "C" fn rxpm_tomography(
    model: *const RxpmModel,
    repetitions: u64,
    seed: u64,
    result_out: *mut RxpmTomography,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let o = out(result_out)?;
        let c = &m.config;
        let cp = controlled_phase(
            &c.eit_params(),
            &c.geometry(),
            &c.blockade_params(),
            c.operating_point(),
        )?;
        let truth = TargetResponse {
            od0: cp.od0,
            phi0: cp.phase0,
            od1: cp.od1,
            phi1: cp.phase1,
        };
        let mut x = c.experiment_config();
        x.repetitions = repetitions;
        x.rng_seed = seed;
        let rep = run_tomography(&x, &truth, &c.input_state(truth.od1)?)?;
        *o = RxpmTomography {
            azimuth_with_control: rep.with_control.azimuth,
            azimuth_with_control_err: rep.with_control.azimuth_err,
            azimuth_without_control: rep.without_control.azimuth,
            azimuth_without_control_err: rep.without_control.azimuth_err,
            visibility_with_control: rep.with_control.visibility,
            visibility_with_control_err: rep.with_control.visibility_err,
            controlled_phase: rep.controlled_phase,
            controlled_phase_err: rep.controlled_phase_err,
            postselected_repetitions: rep.with_control.repetitions,
        };
        Ok(())
    })
}

/// Fits the transmission model to `n` points, starting from the model's
/// configured initial values.
#[no_mangle]
pub unsafe extern "C" fn rxpm_fit_transmission(
    model: *const RxpmModel,
    delta_s_mhz: *const f64,
    transmission: *const f64,
    sigma: *const f64,
    n: usize,
    result_out: *mut RxpmFitResult,
) -> RxpmStatus {
    guard(|| {
        let m = handle(model)?;
        let o = out(result_out)?;
        let (d, t, s) = (
            slice(delta_s_mhz, n)?,
            slice(transmission, n)?,
            slice(sigma, n)?,
        );
        let data = SpectrumData {
            transmission: (0..n)
                .map(|i| DataPoint {
                    delta_s: angular_from_mhz(d[i]),
                    value: t[i],
                    sigma: s[i],
                })
                .collect(),
            phase: Vec::new(),
        };
        let c = &m.config;
        let r = fit_spectrum(
            &data,
            &c.fit_initial(),
            &Bounds::default(),
            &c.eit_params(),
            &c.geometry(),
            &c.fit.options,
        )?;
        let conv = |p: [f64; 4]| {
            [
                p[0],
                mhz_from_angular(p[1]),
                mhz_from_angular(p[2]),
                mhz_from_angular(p[3]),
            ]
        };
        *o = RxpmFitResult {
            params: conv(r.params.to_array()),
            uncertainties: conv(r.uncertainties.to_array()),
            reduced_chi_square: r.reduced_chi_square,
            iterations: r.iterations as u64,
            fwhm_mhz: r.fwhm.map_or(f64::NAN, mhz_from_angular),
        };
        Ok(())
    })
}
