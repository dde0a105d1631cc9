//! Damped least-squares fit of the ladder-EIT transmission model to measured
//! spectra.
//!
//! Free parameters are the resonant two-level optical depth, Ωc, γrg and Δc.
//! Γe, the dipole and the probe geometry are held fixed. Internally every
//! rate is divided by Γe, and the positive parameters are optimized as
//! logarithms by default. Derivatives are central differences with step
//! `h = 1e-6 (1 + |x|)` in those internal coordinates.

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::susceptibility::{
    chi, od_and_phase, spectrum, transmission_fwhm, EitParams, MediumGeometry, SpectrumRow,
};

pub const PARAMETER_NAMES: [&str; 4] = ["od_peak", "omega_c", "gamma_rg", "delta_c"];

/// Fitted quantities. `od_peak` is the two-level optical depth on resonance,
/// k_s L χ0; the rest are in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub od_peak: f64,
    pub omega_c: f64,
    pub gamma_rg: f64,
    pub delta_c: f64,
}

impl FitParams {
    pub fn from_eit(params: &EitParams, geom: &MediumGeometry) -> Self {
        FitParams {
            od_peak: geom.k_s * geom.length * params.chi0(),
            omega_c: params.omega_c,
            gamma_rg: params.gamma_rg,
            delta_c: params.delta_c,
        }
    }

    /// Full medium description, taking Γe and the dipole from `base` and
    /// choosing the density that reproduces `od_peak`.
    pub fn to_eit(&self, base: &EitParams, geom: &MediumGeometry) -> EitParams {
        let per_density = base.with_density(1.0).chi0() * geom.k_s * geom.length;
        EitParams {
            omega_c: self.omega_c,
            gamma_rg: self.gamma_rg,
            delta_c: self.delta_c,
            rho: self.od_peak / per_density,
            ..*base
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.od_peak, self.omega_c, self.gamma_rg, self.delta_c]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        FitParams {
            od_peak: a[0],
            omega_c: a[1],
            gamma_rg: a[2],
            delta_c: a[3],
        }
    }
}

/// Model spectrum for fitted parameters on `grid` (rad/s).
pub fn predict(
    params: &FitParams,
    base: &EitParams,
    geom: &MediumGeometry,
    grid: &[f64],
) -> Result<Vec<SpectrumRow>> {
    spectrum(&params.to_eit(base, geom), geom, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub delta_s: f64,
    pub value: f64,
    pub sigma: f64,
}

/// Measured transmission, and optionally phase, versus signal detuning.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumData {
    pub transmission: Vec<DataPoint>,
    pub phase: Vec<DataPoint>,
}

pub const MIN_POINTS: usize = 8;

fn validate_rows(rows: &[DataPoint], what: &str) -> Result<()> {
    if rows.len() < MIN_POINTS {
        return Err(Error::usage(format!(
            "{what} data needs at least {MIN_POINTS} points, got {}",
            rows.len()
        )));
    }
    for (i, p) in rows.iter().enumerate() {
        if !(p.sigma > 0.0 && p.sigma.is_finite()) {
            return Err(Error::usage(format!("{what} row {i}: sigma must be > 0")));
        }
        if !p.value.is_finite() || !p.delta_s.is_finite() {
            return Err(Error::usage(format!("{what} row {i}: non-finite value")));
        }
    }
    if rows.windows(2).any(|w| w[1].delta_s <= w[0].delta_s) {
        return Err(Error::usage(format!(
            "{what} detunings must be strictly increasing"
        )));
    }
    Ok(())
}

impl SpectrumData {
    pub fn validate(&self, with_phase: bool) -> Result<()> {
        validate_rows(&self.transmission, "transmission")?;
        if with_phase {
            validate_rows(&self.phase, "phase")?;
        }
        Ok(())
    }

    /// Model spectrum on `grid` with constant uncertainty `sigma`, plus
    /// Gaussian noise of that width when `seed` is given.
    pub fn synthetic(
        params: &EitParams,
        geom: &MediumGeometry,
        grid: &[f64],
        sigma: f64,
        seed: Option<u64>,
    ) -> Result<Self> {
        let rows = spectrum(params, geom, grid)?;
        let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::usage(e.to_string()))?;
        let mut noise = || rng.as_mut().map_or(0.0, |r| normal.sample(r));
        let mut data = SpectrumData::default();
        for r in &rows {
            data.transmission.push(DataPoint {
                delta_s: r.delta_s,
                value: r.transmission + noise(),
                sigma,
            });
        }
        for r in &rows {
            data.phase.push(DataPoint {
                delta_s: r.delta_s,
                value: r.phase + noise(),
                sigma,
            });
        }
        Ok(data)
    }
}

/// Box constraints in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: FitParams,
    pub upper: FitParams,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            lower: FitParams::from_array([0.0, 0.0, 0.0, f64::NEG_INFINITY]),
            upper: FitParams::from_array([f64::INFINITY; 4]),
        }
    }
}

impl Bounds {
    fn contains(&self, p: &FitParams) -> bool {
        let (lo, hi, v) = (self.lower.to_array(), self.upper.to_array(), p.to_array());
        (0..4).all(|i| v[i] >= lo[i] && v[i] <= hi[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Optimize log(od), log(Ωc), log(γrg) instead of the values themselves.
    pub log_space: bool,
    /// Use Ωc² in place of Ωc as the free parameter.
    pub omega_squared: bool,
    /// Include the phase rows in the cost.
    pub fit_phase: bool,
    pub max_iterations: usize,
    pub rel_cost_tol: f64,
    pub gradient_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            log_space: true,
            omega_squared: false,
            fit_phase: false,
            max_iterations: 500,
            rel_cost_tol: 1e-10,
            gradient_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FitParams,
    /// 1σ uncertainties from the covariance diagonal.
    pub uncertainties: FitParams,
    /// Covariance in natural units, ordered as [`PARAMETER_NAMES`].
    pub covariance: [[f64; 4]; 4],
    /// Σ((model − data)/σ)².
    pub cost: f64,
    pub reduced_chi_square: f64,
    pub iterations: usize,
    pub damping: f64,
    pub gradient_norm: f64,
    /// Transmission FWHM of the fitted model, rad/s; `None` without a
    /// transparency peak.
    pub fwhm: Option<f64>,
}

struct Problem<'a> {
    data: &'a SpectrumData,
    base: EitParams,
    geom: MediumGeometry,
    options: FitOptions,
    bounds: Bounds,
}

impl Problem<'_> {
    fn gamma(&self) -> f64 {
        self.base.gamma_e
    }

    fn to_internal(&self, p: &FitParams) -> [f64; 4] {
        let g = self.gamma();
        let w = if self.options.omega_squared {
            (p.omega_c / g).powi(2)
        } else {
            p.omega_c / g
        };
        let (od, w, gr) = if self.options.log_space {
            (p.od_peak.ln(), w.ln(), (p.gamma_rg / g).ln())
        } else {
            (p.od_peak, w, p.gamma_rg / g)
        };
        [od, w, gr, p.delta_c / g]
    }

    fn to_natural(&self, x: &[f64]) -> FitParams {
        let g = self.gamma();
        let (od, w, gr) = if self.options.log_space {
            (x[0].exp(), x[1].exp(), x[2].exp())
        } else {
            (x[0], x[1], x[2])
        };
        let omega = if self.options.omega_squared {
            w.max(0.0).sqrt()
        } else {
            w
        };
        FitParams {
            od_peak: od,
            omega_c: omega * g,
            gamma_rg: gr * g,
            delta_c: x[3] * g,
        }
    }

    /// d(natural)/d(internal) per parameter.
    fn chain(&self, p: &FitParams) -> [f64; 4] {
        let g = self.gamma();
        let log = self.options.log_space;
        let od = if log { p.od_peak } else { 1.0 };
        let omega = match (log, self.options.omega_squared) {
            (true, false) => p.omega_c,
            (true, true) => p.omega_c / 2.0,
            (false, false) => g,
            (false, true) => g * g / (2.0 * p.omega_c),
        };
        let gr = if log { p.gamma_rg } else { g };
        [od, omega, gr, g]
    }

    fn clamp(&self, x: &[f64]) -> [f64; 4] {
        let mut p = self.to_natural(x).to_array();
        let (lo, hi) = (self.bounds.lower.to_array(), self.bounds.upper.to_array());
        for i in 0..4 {
            let mut l = lo[i];
            if self.options.log_space && i < 3 {
                l = l.max(f64::MIN_POSITIVE);
            }
            p[i] = p[i].clamp(l, hi[i]);
        }
        self.to_internal(&FitParams::from_array(p))
    }

    fn len(&self) -> usize {
        self.data.transmission.len()
            + if self.options.fit_phase {
                self.data.phase.len()
            } else {
                0
            }
    }

    fn residuals(&self, x: &[f64]) -> DVector<f64> {
        let eit = self.to_natural(x).to_eit(&self.base, &self.geom);
        let mut r = Vec::with_capacity(self.len());
        for d in &self.data.transmission {
            let t = od_and_phase(&chi(&eit, d.delta_s), &self.geom).transmission();
            r.push((t - d.value) / d.sigma);
        }
        if self.options.fit_phase {
            for d in &self.data.phase {
                let phi = od_and_phase(&chi(&eit, d.delta_s), &self.geom).phase;
                r.push((phi - d.value) / d.sigma);
            }
        }
        DVector::from_vec(r)
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.len(), 4);
        for k in 0..4 {
            let h = 1e-6 * (1.0 + x[k].abs());
            let mut xp = [x[0], x[1], x[2], x[3]];
            let mut xm = xp;
            xp[k] += h;
            xm[k] -= h;
            let d = (self.residuals(&xp) - self.residuals(&xm)) / (xp[k] - xm[k]);
            j.set_column(k, &d);
        }
        j
    }
}

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn damped_step(a: &DMatrix<f64>, g: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let max_diag = (0..4).map(|i| a[(i, i)]).fold(0.0, f64::max);
    let mut m = a.clone();
    for i in 0..4 {
        m[(i, i)] += lambda * a[(i, i)].max(1e-12 * max_diag).max(f64::MIN_POSITIVE);
    }
    m.lu().solve(&(-g))
}

/// Minimizes Σ((model − data)/σ)² from `initial` by Levenberg-Marquardt.
pub fn fit_spectrum(
    data: &SpectrumData,
    initial: &FitParams,
    bounds: &Bounds,
    base: &EitParams,
    geom: &MediumGeometry,
    options: &FitOptions,
) -> Result<FitResult> {
    data.validate(options.fit_phase)?;
    if !bounds.contains(initial) {
        return Err(Error::usage("initial parameters lie outside the bounds"));
    }
    if options.log_space
        && (initial.od_peak <= 0.0 || initial.omega_c <= 0.0 || initial.gamma_rg <= 0.0)
    {
        return Err(Error::usage(
            "log-space fitting needs positive od_peak, omega_c and gamma_rg",
        ));
    }
    let problem = Problem {
        data,
        base: *base,
        geom: *geom,
        options: *options,
        bounds: *bounds,
    };

    let mut x = problem.to_internal(initial);
    let mut r = problem.residuals(&x);
    if !finite(&r) {
        return Err(Error::usage(
            "model is not finite at the initial parameters",
        ));
    }
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut gradient_norm;

    loop {
        let j = problem.jacobian(&x);
        let g = j.transpose() * &r;
        gradient_norm = g.amax();
        if gradient_norm < options.gradient_tol || cost == 0.0 {
            break;
        }
        if iterations == options.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                best_cost: cost,
                best_point: problem.to_natural(&x).to_array().to_vec(),
            });
        }
        iterations += 1;
        let a = j.transpose() * &j;

        let mut accepted = None;
        while lambda < 1e16 {
            let step = damped_step(&a, &g, lambda)
                .ok_or_else(|| Error::Degenerate("normal equations are singular".into()))?;
            let trial = problem.clamp(&[
                x[0] + step[0],
                x[1] + step[1],
                x[2] + step[2],
                x[3] + step[3],
            ]);
            let rt = problem.residuals(&trial);
            let ct = rt.norm_squared();
            if finite(&rt) && ct < cost {
                accepted = Some((trial, rt, ct));
                lambda = (lambda / 10.0).max(1e-12);
                break;
            }
            lambda *= 10.0;
        }
        let Some((trial, rt, ct)) = accepted else {
            // No downhill step at any damping: numerically at the minimum.
            break;
        };
        let rel = (cost - ct) / cost;
        x = trial;
        r = rt;
        cost = ct;
        if rel < options.rel_cost_tol {
            break;
        }
    }

    let params = problem.to_natural(&x);
    let j = problem.jacobian(&x);
    let covariance = natural_covariance(&problem, &params, &(j.transpose() * &j))?;
    let m = problem.len();
    let uncertainties =
        FitParams::from_array([0, 1, 2, 3].map(|i| covariance[i][i].max(0.0).sqrt()));
    Ok(FitResult {
        params,
        uncertainties,
        covariance,
        cost,
        reduced_chi_square: cost / (m - 4) as f64,
        iterations,
        damping: lambda,
        gradient_norm,
        fwhm: transmission_fwhm(&params.to_eit(base, geom), geom).ok(),
    })
}

fn natural_covariance(
    problem: &Problem,
    params: &FitParams,
    a: &DMatrix<f64>,
) -> Result<[[f64; 4]; 4]> {
    let a4 = Matrix4::from_fn(|i, j| a[(i, j)]);
    let eig = SymmetricEigen::new(a4);
    let (imin, &emin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("four eigenvalues");
    let emax = eig.eigenvalues.amax();
    if !(emax > 0.0) || !(emin > 1e-13 * emax) {
        let v = eig.eigenvectors.column(imin);
        let worst = v.iamax();
        return Err(Error::Degenerate(format!(
            "{} is not constrained by the data",
            PARAMETER_NAMES[worst]
        )));
    }
    let inv = eig.eigenvectors
        * Matrix4::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e))
        * eig.eigenvectors.transpose();
    let d = problem.chain(params);
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            out[i][k] = d[i] * inv[(i, k)] * d[k];
        }
    }
    Ok(out)
}
