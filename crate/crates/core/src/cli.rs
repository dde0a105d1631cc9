//! `rxpm` command line: one subcommand per workflow, configuration from a
//! JSON file, results written as CSV and JSON.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::blockade::{
    blockade_radius, controlled_phase, density_scan, full_blockade_phase_difference,
    hard_sphere_controlled_phase, ControlledPhase,
};
use crate::config::RunConfig;
use crate::constants::mhz_from_angular;
use crate::error::{Error, Result};
use crate::fitting::{fit_spectrum, predict, Bounds, FitParams, FitResult};
use crate::output::{csv_table, json_document, read_spectrum_data_csv, write_atomic};
use crate::photostatistics::{retrieval_efficiency, run_tomography, CountSummary, TargetResponse};
use crate::susceptibility::{chi, eit_feature, od_and_phase, spectrum, transmission_fwhm};

#[derive(Debug, Parser)]
#[command(
    name = "rxpm",
    version,
    about = "Rydberg-EIT cross-phase modulation simulator"
)]
pub struct Cli {
    /// JSON run configuration; omitted keys take their default values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Overrides experiment.rng_seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// EIT and two-level transmission and phase spectra.
    Spectrum,
    /// Blockade radius, hard-sphere estimate and integrated controlled phase.
    BlockadePhase,
    /// Phases against atomic density with straight-line fits.
    DensityScan,
    /// Monte Carlo polarization tomography of the target.
    Tomography,
    /// Fit the transmission model to a measured spectrum.
    Fit {
        /// CSV with delta_s_mhz, transmission, transmission_sigma columns.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Storage-and-retrieval efficiency against storage time.
    Retrieval,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::BlockadePhase => "blockade-phase",
            Command::DensityScan => "density-scan",
            Command::Tomography => "tomography",
            Command::Fit { .. } => "fit",
            Command::Retrieval => "retrieval",
        }
    }
}

/// Files produced by one command, as (file name, contents).
pub type Outputs = Vec<(String, String)>;

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.experiment.rng_seed = s;
    }
    Ok(cfg)
}

/// Runs one command and returns its files without touching the disk.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Outputs> {
    let name = command.name();
    let (csv, result) = match command {
        Command::Spectrum => cmd_spectrum(cfg)?,
        Command::BlockadePhase => (None, cmd_blockade_phase(cfg)?),
        Command::DensityScan => cmd_density_scan(cfg)?,
        Command::Tomography => (None, cmd_tomography(cfg)?),
        Command::Fit { input } => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| Error::Io(format!("{}: {e}", input.display())))?;
            cmd_fit(cfg, &text)?
        }
        Command::Retrieval => cmd_retrieval(cfg)?,
    };
    let mut out = Vec::new();
    if let Some(c) = csv {
        out.push((format!("{name}.csv"), c));
    }
    out.push((format!("{name}.json"), json_document(name, cfg, result)?));
    Ok(out)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<(Option<String>, Value)> {
    let p = cfg.eit_params();
    let g = cfg.geometry();
    let grid = cfg.spectrum_grid();
    let eit = spectrum(&p, &g, &grid)?;
    let two = spectrum(&p.two_level(), &g, &grid)?;
    let sp = &cfg.spectrum;
    let mhz_grid = crate::susceptibility::linear_grid(sp.start_mhz, sp.stop_mhz, sp.points);
    let rows: Vec<Vec<f64>> = eit
        .iter()
        .zip(&two)
        .zip(&mhz_grid)
        .map(|((a, b), f)| vec![*f, a.transmission, a.phase, b.transmission, b.phase])
        .collect();
    let csv = csv_table(
        &[
            "delta_s_mhz",
            "transmission_eit",
            "phase_eit_rad",
            "transmission_two_level",
            "phase_two_level_rad",
        ],
        &rows,
    )?;

    let feature = match eit_feature(&p, &g) {
        Ok(f) => json!({
            "fwhm_mhz": mhz_from_angular(f.fwhm),
            "peak_delta_s_mhz": mhz_from_angular(f.peak_delta_s),
            "peak_height": f.peak_height,
            "left_edge_mhz": mhz_from_angular(f.left_edge),
            "right_edge_mhz": mhz_from_angular(f.right_edge),
        }),
        Err(e) => json!({ "fwhm_mhz": null, "note": e.to_string() }),
    };
    let ds = cfg.operating_point();
    let at = od_and_phase(&chi(&p, ds), &g);
    let at2 = od_and_phase(&chi(&p.two_level(), ds), &g);
    let result = json!({
        "chi0": p.chi0(),
        "od_peak": g.k_s * g.length * p.chi0(),
        "eit_feature": feature,
        "operating_point": {
            "delta_s_mhz": cfg.operating_point.delta_s_mhz,
            "od_eit": at.od,
            "phase_eit_rad": at.phase,
            "od_two_level": at2.od,
            "phase_two_level_rad": at2.phase,
            "phase_difference_rad": at2.phase - at.phase,
        },
    });
    Ok((Some(csv), result))
}

fn controlled_json(c: &ControlledPhase) -> Value {
    json!({
        "od0": c.od0,
        "phase0_rad": c.phase0,
        "od1": c.od1,
        "phase1_rad": c.phase1,
        "controlled_phase_rad": c.controlled(),
    })
}

pub fn cmd_blockade_phase(cfg: &RunConfig) -> Result<Value> {
    let p = cfg.eit_params();
    let g = cfg.geometry();
    let blk = cfg.blockade_params();
    let ds = cfg.operating_point();

    let (delta_t, delta_t_mhz, delta_t_source) = match cfg.blockade.delta_t_mhz {
        Some(d) => (crate::constants::angular_from_mhz(d), d, "config"),
        None => {
            let w = transmission_fwhm(&p, &g)?;
            (w, mhz_from_angular(w), "model_fwhm")
        }
    };
    let r_b = blockade_radius(blk.c6, delta_t)?;
    let (pe, dse) = if blk.sign_reversed {
        (p.sign_reversed(), -ds)
    } else {
        (p, ds)
    };
    let phase_eit = od_and_phase(&chi(&pe, dse), &g).phase;
    let phase_two = od_and_phase(&chi(&pe.two_level(), dse), &g).phase;
    let hard = hard_sphere_controlled_phase(r_b, &g, phase_two, phase_eit)?;

    let configured = controlled_phase(&p, &g, &blk, ds)?;
    let normal = controlled_phase(&p, &g, &blk.with_sign_reversed(false), ds)?;
    let reversed = controlled_phase(&p, &g, &blk.with_sign_reversed(true), ds)?;
    let ratio = normal.controlled().abs() / reversed.controlled().abs();

    Ok(json!({
        "delta_t_mhz": delta_t_mhz,
        "delta_t_source": delta_t_source,
        "blockade_radius_um": r_b * 1e6,
        "hard_sphere": {
            "phase_difference_rad": full_blockade_phase_difference(&p, &g, ds, blk.sign_reversed),
            "controlled_phase_rad": hard.controlled_phase,
            "clamped": hard.clamped,
        },
        "integral": controlled_json(&configured),
        "sign_comparison": {
            "normal": controlled_json(&normal),
            "reversed": controlled_json(&reversed),
            "magnitude_ratio": if ratio.is_finite() { json!(ratio) } else { Value::Null },
        },
    }))
}

pub fn cmd_density_scan(cfg: &RunConfig) -> Result<(Option<String>, Value)> {
    let scan = density_scan(
        &cfg.eit_params(),
        &cfg.geometry(),
        &cfg.blockade_params(),
        cfg.operating_point(),
        &cfg.densities(),
    )?;
    let rows: Vec<Vec<f64>> = scan
        .rows
        .iter()
        .map(|r| vec![r.rho * 1e-6, r.phase0, r.phase1, r.controlled_phase])
        .collect();
    let csv = csv_table(
        &[
            "density_cm3",
            "phase0_rad",
            "phase1_rad",
            "controlled_phase_rad",
        ],
        &rows,
    )?;
    let fit = |f: &crate::blockade::LinearFit| {
        json!({
            "slope_rad_cm3": f.slope * 1e6,
            "intercept_rad": f.intercept,
            "max_rel_residual": f.max_rel_residual,
        })
    };
    Ok((
        Some(csv),
        json!({
            "phase0": fit(&scan.fit_phase0),
            "phase1": fit(&scan.fit_phase1),
            "controlled_phase": fit(&scan.fit_controlled),
        }),
    ))
}

fn summary_json(s: &CountSummary) -> Value {
    json!({
        "counts": s.counts,
        "stokes": [s.stokes.s_hv, s.stokes.s_da, s.stokes.s_lr],
        "std_errors": s.std_errors,
        "azimuth_rad": s.azimuth,
        "azimuth_err_rad": s.azimuth_err,
        "visibility": s.visibility,
        "visibility_err": s.visibility_err,
        "repetitions": s.repetitions,
    })
}

pub fn cmd_tomography(cfg: &RunConfig) -> Result<Value> {
    let c = controlled_phase(
        &cfg.eit_params(),
        &cfg.geometry(),
        &cfg.blockade_params(),
        cfg.operating_point(),
    )?;
    let truth = TargetResponse {
        od0: c.od0,
        phi0: c.phase0,
        od1: c.od1,
        phi1: c.phase1,
    };
    let input = cfg.input_state(truth.od1)?;
    let rep = run_tomography(&cfg.experiment_config(), &truth, &input)?;
    Ok(json!({
        "truth": controlled_json(&c),
        "input_state": [input.c_plus.re, input.c_plus.im, input.c_minus.re, input.c_minus.im],
        "with_control": summary_json(&rep.with_control),
        "without_control": summary_json(&rep.without_control),
        "postselected_repetitions": rep.with_control.repetitions,
        "controlled_phase_rad": rep.controlled_phase,
        "controlled_phase_err_rad": rep.controlled_phase_err,
    }))
}

fn params_json(p: &FitParams) -> Value {
    json!({
        "od_peak": p.od_peak,
        "omega_c_mhz": mhz_from_angular(p.omega_c),
        "gamma_rg_mhz": mhz_from_angular(p.gamma_rg),
        "delta_c_mhz": mhz_from_angular(p.delta_c),
    })
}

fn fit_json(r: &FitResult) -> Value {
    json!({
        "params": params_json(&r.params),
        "uncertainties": params_json(&r.uncertainties),
        "covariance_si": r.covariance,
        "cost": r.cost,
        "reduced_chi_square": r.reduced_chi_square,
        "iterations": r.iterations,
        "damping": r.damping,
        "gradient_norm": r.gradient_norm,
        "fwhm_mhz": r.fwhm.map(mhz_from_angular),
    })
}

pub fn cmd_fit(cfg: &RunConfig, input_csv: &str) -> Result<(Option<String>, Value)> {
    let data = read_spectrum_data_csv(input_csv)?;
    let p = cfg.eit_params();
    let g = cfg.geometry();
    let res = fit_spectrum(
        &data,
        &cfg.fit_initial(),
        &Bounds::default(),
        &p,
        &g,
        &cfg.fit.options,
    )?;
    let grid: Vec<f64> = data.transmission.iter().map(|d| d.delta_s).collect();
    let model = predict(&res.params, &p, &g, &grid)?;
    let rows: Vec<Vec<f64>> = data
        .transmission
        .iter()
        .zip(&model)
        .map(|(d, m)| {
            vec![
                mhz_from_angular(d.delta_s),
                d.value,
                m.transmission,
                m.phase,
            ]
        })
        .collect();
    let csv = csv_table(
        &[
            "delta_s_mhz",
            "transmission_data",
            "transmission_model",
            "phase_model_rad",
        ],
        &rows,
    )?;
    Ok((Some(csv), fit_json(&res)))
}

pub fn cmd_retrieval(cfg: &RunConfig) -> Result<(Option<String>, Value)> {
    let x = cfg.experiment_config();
    let r = &cfg.retrieval;
    let mut rows = Vec::with_capacity(r.points);
    for k in 0..r.points {
        let t_us = r.max_delay_us * k as f64 / (r.points - 1) as f64;
        rows.push(vec![t_us, retrieval_efficiency(&x, t_us * 1e-6)?]);
    }
    let csv = csv_table(&["delay_us", "efficiency"], &rows)?;
    Ok((
        Some(csv),
        json!({
            "decay_time_us": x.decay_time() * 1e6,
            "efficiency_zero_delay": retrieval_efficiency(&x, 0.0)?,
            "efficiency_reference_delay": retrieval_efficiency(&x, x.reference_delay)?,
            "storage_probability": x.storage_probability(),
            "delay_us": cfg.experiment.delay_us,
            "efficiency_at_delay": retrieval_efficiency(&x, x.delay)?,
            "retrieval_probability_at_delay": x.retrieval_probability(x.delay)?,
        }),
    ))
}

fn report(e: &Error) {
    eprintln!("rxpm: error: {e}");
    if let Error::NonConvergence { best_point, .. } = e {
        let named: Vec<String> = crate::fitting::PARAMETER_NAMES
            .iter()
            .zip(best_point)
            .map(|(n, v)| format!("{n}={v:.9e}"))
            .collect();
        eprintln!("rxpm: best point (SI units): {}", named.join(" "));
    }
}

/// Parses arguments, runs, writes outputs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = (|| -> Result<Vec<PathBuf>> {
        let cfg = load_config(cli.config.as_deref(), cli.seed)?;
        let files = execute(&cli.command, &cfg)?;
        let dir = cli
            .out_dir
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let mut written = Vec::new();
        for (name, contents) in files {
            let path = dir.join(name);
            write_atomic(&path, contents.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    })();
    match outcome {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}
