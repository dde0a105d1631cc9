//! Run configuration: one JSON document, every key optional, unknown keys
//! rejected. Key names carry their units; conversion to SI happens here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blockade::BlockadeParams;
use crate::constants::{angular_from_mhz, c6_from_atomic_units, wave_number};
use crate::error::{Error, Result};
use crate::fitting::{FitOptions, FitParams};
use crate::photostatistics::{BasisSelection, ExperimentConfig};
use crate::polarization::PolarizationState;
use crate::susceptibility::{linear_grid, EitParams, MediumGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EitSection {
    pub intermediate_lifetime_ns: f64,
    pub gamma_rg_mhz: f64,
    pub omega_c_mhz: f64,
    pub delta_c_mhz: f64,
    pub density_cm3: f64,
    pub dipole_cm: f64,
    pub wavelength_nm: f64,
}

impl Default for EitSection {
    fn default() -> Self {
        EitSection {
            intermediate_lifetime_ns: 26.0,
            gamma_rg_mhz: 0.3,
            omega_c_mhz: 18.0,
            delta_c_mhz: 7.5,
            density_cm3: 1.8e12,
            dipole_cm: crate::constants::RB87_D2_CYCLING_DIPOLE,
            wavelength_nm: 780.241_209_686,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub length_um: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection { length_um: 61.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockadeSection {
    pub c6_au: f64,
    /// Position of the stored excitation; `null` is the medium centre.
    pub excitation_z_um: Option<f64>,
    pub sign_reversed: bool,
    /// Linewidth entering R_b; `null` uses the model transmission FWHM.
    pub delta_t_mhz: Option<f64>,
}

impl Default for BlockadeSection {
    fn default() -> Self {
        BlockadeSection {
            c6_au: 2.3e23,
            excitation_z_um: None,
            sign_reversed: false,
            delta_t_mhz: Some(3.7),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatingPointSection {
    pub delta_s_mhz: f64,
}

impl Default for OperatingPointSection {
    fn default() -> Self {
        OperatingPointSection { delta_s_mhz: -10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            start_mhz: -40.0,
            stop_mhz: 25.0,
            points: 261,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityScanSection {
    pub densities_cm3: Vec<f64>,
}

impl Default for DensityScanSection {
    fn default() -> Self {
        DensityScanSection {
            densities_cm3: vec![0.3e12, 0.6e12, 0.9e12, 1.2e12, 1.5e12, 1.8e12],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub mean_photons_control: f64,
    pub mean_photons_target: f64,
    pub detection_efficiency: f64,
    pub storage_retrieval_efficiency_zero_delay: f64,
    pub storage_retrieval_efficiency_delayed: f64,
    pub reference_delay_us: f64,
    pub delay_us: f64,
    pub storage_fraction: Option<f64>,
    pub repetitions: u64,
    pub rng_seed: u64,
    pub basis_selection: BasisSelection,
    pub sigma_plus_suppression: Option<f64>,
    pub coherence: f64,
    /// Target input amplitudes [Re c+, Im c+, Re c−, Im c−]; `null` picks
    /// the state with equal output powers behind the blockaded medium.
    pub input_state: Option<[f64; 4]>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        ExperimentSection {
            mean_photons_control: e.mean_photons_control,
            mean_photons_target: e.mean_photons_target,
            detection_efficiency: e.detection_efficiency,
            storage_retrieval_efficiency_zero_delay: e.storage_retrieval_efficiency_zero_delay,
            storage_retrieval_efficiency_delayed: e.storage_retrieval_efficiency_delayed,
            reference_delay_us: e.reference_delay * 1e6,
            delay_us: e.delay * 1e6,
            storage_fraction: e.storage_fraction,
            repetitions: e.repetitions,
            rng_seed: e.rng_seed,
            basis_selection: e.basis_selection,
            sigma_plus_suppression: e.sigma_plus_suppression,
            coherence: e.coherence,
            input_state: None,
        }
    }
}

/// Starting point of a fit in config units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitInitial {
    pub od_peak: f64,
    pub omega_c_mhz: f64,
    pub gamma_rg_mhz: f64,
    pub delta_c_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// `null` starts from the `eit` section values.
    pub initial: Option<FitInitial>,
    pub options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub max_delay_us: f64,
    pub points: usize,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection {
            max_delay_us: 10.0,
            points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub eit: EitSection,
    pub geometry: GeometrySection,
    pub blockade: BlockadeSection,
    pub operating_point: OperatingPointSection,
    pub spectrum: SpectrumSection,
    pub density_scan: DensityScanSection,
    pub experiment: ExperimentSection,
    pub fit: FitSection,
    pub retrieval: RetrievalSection,
    /// Directory for output files; the `--out-dir` flag takes precedence.
    pub output_dir: Option<String>,
}

fn check(ok: bool, path: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message))
    }
}

fn positive(v: f64, path: &str) -> Result<()> {
    check(
        v > 0.0 && v.is_finite(),
        path,
        "must be a positive finite number",
    )
}

fn non_negative(v: f64, path: &str) -> Result<()> {
    check(
        v >= 0.0 && v.is_finite(),
        path,
        "must be a non-negative finite number",
    )
}

fn finite(v: f64, path: &str) -> Result<()> {
    check(v.is_finite(), path, "must be finite")
}

impl RunConfig {
    /// Parses and validates; errors name the dotted key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.eit;
        positive(e.intermediate_lifetime_ns, "eit.intermediate_lifetime_ns")?;
        non_negative(e.gamma_rg_mhz, "eit.gamma_rg_mhz")?;
        non_negative(e.omega_c_mhz, "eit.omega_c_mhz")?;
        finite(e.delta_c_mhz, "eit.delta_c_mhz")?;
        non_negative(e.density_cm3, "eit.density_cm3")?;
        positive(e.dipole_cm, "eit.dipole_cm")?;
        positive(e.wavelength_nm, "eit.wavelength_nm")?;
        positive(self.geometry.length_um, "geometry.length_um")?;

        let b = &self.blockade;
        non_negative(b.c6_au, "blockade.c6_au")?;
        if let Some(z) = b.excitation_z_um {
            check(
                (0.0..=self.geometry.length_um).contains(&z),
                "blockade.excitation_z_um",
                "must lie inside the medium",
            )?;
        }
        if let Some(d) = b.delta_t_mhz {
            positive(d, "blockade.delta_t_mhz")?;
        }
        finite(
            self.operating_point.delta_s_mhz,
            "operating_point.delta_s_mhz",
        )?;

        let s = &self.spectrum;
        finite(s.start_mhz, "spectrum.start_mhz")?;
        finite(s.stop_mhz, "spectrum.stop_mhz")?;
        check(s.points >= 1, "spectrum.points", "must be >= 1")?;
        check(
            s.points == 1 || s.stop_mhz > s.start_mhz,
            "spectrum.stop_mhz",
            "must exceed start_mhz",
        )?;

        let d = &self.density_scan.densities_cm3;
        check(
            !d.is_empty(),
            "density_scan.densities_cm3",
            "must not be empty",
        )?;
        for (i, v) in d.iter().enumerate() {
            positive(*v, &format!("density_scan.densities_cm3[{i}]"))?;
        }

        self.experiment_config().validate().map_err(|err| {
            Error::config(
                "experiment",
                err.to_string().trim_start_matches("invalid argument: "),
            )
        })?;
        if let Some(a) = self.experiment.input_state {
            check(
                a.iter().all(|v| v.is_finite()),
                "experiment.input_state",
                "must be finite",
            )?;
            check(
                a.iter().any(|v| *v != 0.0),
                "experiment.input_state",
                "must not be the zero vector",
            )?;
        }

        if let Some(init) = &self.fit.initial {
            positive(init.od_peak, "fit.initial.od_peak")?;
            non_negative(init.omega_c_mhz, "fit.initial.omega_c_mhz")?;
            non_negative(init.gamma_rg_mhz, "fit.initial.gamma_rg_mhz")?;
            finite(init.delta_c_mhz, "fit.initial.delta_c_mhz")?;
        }
        let o = &self.fit.options;
        check(
            o.max_iterations >= 1,
            "fit.options.max_iterations",
            "must be >= 1",
        )?;
        positive(o.rel_cost_tol, "fit.options.rel_cost_tol")?;
        positive(o.gradient_tol, "fit.options.gradient_tol")?;

        positive(self.retrieval.max_delay_us, "retrieval.max_delay_us")?;
        check(
            self.retrieval.points >= 2,
            "retrieval.points",
            "must be >= 2",
        )?;
        Ok(())
    }

    pub fn eit_params(&self) -> EitParams {
        let e = &self.eit;
        EitParams {
            gamma_e: 1.0 / (e.intermediate_lifetime_ns * 1e-9),
            gamma_rg: angular_from_mhz(e.gamma_rg_mhz),
            omega_c: angular_from_mhz(e.omega_c_mhz),
            delta_c: angular_from_mhz(e.delta_c_mhz),
            rho: e.density_cm3 * 1e6,
            d_eg: e.dipole_cm,
        }
    }

    pub fn geometry(&self) -> MediumGeometry {
        MediumGeometry {
            length: self.geometry.length_um * 1e-6,
            k_s: wave_number(self.eit.wavelength_nm * 1e-9),
        }
    }

    pub fn blockade_params(&self) -> BlockadeParams {
        let geom = self.geometry();
        BlockadeParams {
            c6: c6_from_atomic_units(self.blockade.c6_au),
            excitation_z: self
                .blockade
                .excitation_z_um
                .map_or(0.5 * geom.length, |z| z * 1e-6),
            sign_reversed: self.blockade.sign_reversed,
        }
    }

    pub fn operating_point(&self) -> f64 {
        angular_from_mhz(self.operating_point.delta_s_mhz)
    }

    pub fn spectrum_grid(&self) -> Vec<f64> {
        let s = &self.spectrum;
        linear_grid(
            angular_from_mhz(s.start_mhz),
            angular_from_mhz(s.stop_mhz),
            s.points,
        )
    }

    /// Densities in 1/m^3.
    pub fn densities(&self) -> Vec<f64> {
        self.density_scan
            .densities_cm3
            .iter()
            .map(|d| d * 1e6)
            .collect()
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        let x = &self.experiment;
        ExperimentConfig {
            mean_photons_control: x.mean_photons_control,
            mean_photons_target: x.mean_photons_target,
            detection_efficiency: x.detection_efficiency,
            storage_retrieval_efficiency_zero_delay: x.storage_retrieval_efficiency_zero_delay,
            storage_retrieval_efficiency_delayed: x.storage_retrieval_efficiency_delayed,
            reference_delay: x.reference_delay_us * 1e-6,
            delay: x.delay_us * 1e-6,
            storage_fraction: x.storage_fraction,
            repetitions: x.repetitions,
            rng_seed: x.rng_seed,
            basis_selection: x.basis_selection,
            sigma_plus_suppression: x.sigma_plus_suppression,
            coherence: x.coherence,
        }
    }

    /// Configured target input state, or the balanced state for `od1`.
    pub fn input_state(&self, od1: f64) -> Result<PolarizationState> {
        match self.experiment.input_state {
            Some([a, b, c, d]) => {
                PolarizationState::new(Complex64::new(a, b), Complex64::new(c, d))?.normalized()
            }
            None => Ok(PolarizationState::balanced_for(od1)),
        }
    }

    pub fn fit_initial(&self) -> FitParams {
        match &self.fit.initial {
            Some(i) => FitParams {
                od_peak: i.od_peak,
                omega_c: angular_from_mhz(i.omega_c_mhz),
                gamma_rg: angular_from_mhz(i.gamma_rg_mhz),
                delta_c: angular_from_mhz(i.delta_c_mhz),
            },
            None => FitParams::from_eit(&self.eit_params(), &self.geometry()),
        }
    }
}
