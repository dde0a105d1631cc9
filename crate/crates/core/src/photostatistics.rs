//! Monte Carlo of the counting experiment: Poissonian control and target
//! pulses, storage and retrieval of the control, polarization analysis of
//! the target, and Stokes estimation from summed counts.
//!
//! Every shot draws from its own ChaCha8 stream, keyed by `(seed, shot
//! index)`, so results do not depend on how shots are scheduled across
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polarization::{apply_medium, stokes, Basis, PolarizationState, StokesVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSelection {
    RoundRobin,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mean_photons_control: f64,
    pub mean_photons_target: f64,
    pub detection_efficiency: f64,
    pub storage_retrieval_efficiency_zero_delay: f64,
    pub storage_retrieval_efficiency_delayed: f64,
    /// Delay at which the delayed efficiency was measured, s.
    pub reference_delay: f64,
    /// Storage time of the control in this run, s.
    pub delay: f64,
    /// Storage part of the zero-delay efficiency; `None` is the symmetric
    /// split √η(0).
    pub storage_fraction: Option<f64>,
    pub repetitions: u64,
    pub rng_seed: u64,
    pub basis_selection: BasisSelection,
    /// Phase of σ+ is φ/suppression; `None` leaves σ+ untouched.
    pub sigma_plus_suppression: Option<f64>,
    /// Multiplier on the σ+/σ− coherence of the detected light.
    pub coherence: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mean_photons_control: 0.6,
            mean_photons_target: 0.9,
            detection_efficiency: 0.25,
            storage_retrieval_efficiency_zero_delay: 0.2,
            storage_retrieval_efficiency_delayed: 0.07,
            reference_delay: 4.5e-6,
            delay: 0.0,
            storage_fraction: None,
            repetitions: 100_000,
            rng_seed: 1,
            basis_selection: BasisSelection::RoundRobin,
            sigma_plus_suppression: None,
            coherence: 1.0,
        }
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::usage(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_photons_control >= 0.0 && self.mean_photons_control.is_finite()) {
            return Err(Error::usage("mean_photons_control must be >= 0"));
        }
        if !(self.mean_photons_target >= 0.0 && self.mean_photons_target.is_finite()) {
            return Err(Error::usage("mean_photons_target must be >= 0"));
        }
        probability("detection_efficiency", self.detection_efficiency)?;
        probability(
            "storage_retrieval_efficiency_zero_delay",
            self.storage_retrieval_efficiency_zero_delay,
        )?;
        probability(
            "storage_retrieval_efficiency_delayed",
            self.storage_retrieval_efficiency_delayed,
        )?;
        probability("coherence", self.coherence)?;
        if self.storage_retrieval_efficiency_delayed > self.storage_retrieval_efficiency_zero_delay
        {
            return Err(Error::usage(
                "delayed efficiency cannot exceed zero-delay efficiency",
            ));
        }
        if self.storage_retrieval_efficiency_delayed <= 0.0 {
            return Err(Error::usage(
                "storage_retrieval_efficiency_delayed must be > 0",
            ));
        }
        if !(self.reference_delay > 0.0) {
            return Err(Error::usage("reference_delay must be > 0"));
        }
        if !(self.delay >= 0.0) {
            return Err(Error::usage("delay must be >= 0"));
        }
        if let Some(s) = self.sigma_plus_suppression {
            if !(s > 0.0) {
                return Err(Error::usage("sigma_plus_suppression must be > 0"));
            }
        }
        let p_store = self.storage_probability();
        probability("storage_fraction", p_store)?;
        if p_store < self.storage_retrieval_efficiency_zero_delay {
            return Err(Error::usage(
                "storage_fraction is smaller than the combined storage-and-retrieval efficiency",
            ));
        }
        Ok(())
    }

    /// Probability that one control photon is stored.
    pub fn storage_probability(&self) -> f64 {
        self.storage_fraction
            .unwrap_or_else(|| self.storage_retrieval_efficiency_zero_delay.sqrt())
    }

    /// 1/e time of the exponential storage decay, s.
    pub fn decay_time(&self) -> f64 {
        self.reference_delay
            / (self.storage_retrieval_efficiency_zero_delay
                / self.storage_retrieval_efficiency_delayed)
                .ln()
    }

    /// Probability that a stored excitation is retrieved after `delay`.
    pub fn retrieval_probability(&self, delay: f64) -> Result<f64> {
        let p_store = self.storage_probability();
        if p_store == 0.0 {
            return Ok(0.0);
        }
        Ok((retrieval_efficiency(self, delay)? / p_store).min(1.0))
    }

    fn suppression(&self) -> f64 {
        self.sigma_plus_suppression.unwrap_or(f64::INFINITY)
    }
}

/// Combined storage-and-retrieval efficiency after storage time `t`,
/// η(t) = η(0) exp(−t/τ) with τ fixed by the delayed reference point.
pub fn retrieval_efficiency(config: &ExperimentConfig, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::usage(format!("storage time must be >= 0, got {t}")));
    }
    Ok(config.storage_retrieval_efficiency_zero_delay * (-t / config.decay_time()).exp())
}

/// Optical depth and phase of the σ− target component without (0) and with
/// (1) a stored control excitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetResponse {
    pub od0: f64,
    pub phi0: f64,
    pub od1: f64,
    pub phi1: f64,
}

impl TargetResponse {
    /// Normalized output Stokes vector and transmitted power fraction for
    /// 0 or 1 stored excitations.
    pub fn output(
        &self,
        stored: bool,
        input: &PolarizationState,
        config: &ExperimentConfig,
    ) -> Result<(StokesVector, f64)> {
        let (od, phi) = if stored {
            (self.od1, self.phi1)
        } else {
            (self.od0, self.phi0)
        };
        let input = input.normalized()?;
        let out = apply_medium(&input, od, phi, config.suppression());
        Ok((stokes(&out)?.dephased(config.coherence), out.power()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub basis: Basis,
    pub control_stored: bool,
    pub control_retrieved: bool,
    pub target_counts_k: u32,
    pub target_counts_l: u32,
}

/// Independent generator for shot `index`.
pub fn shot_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng);
    n as u32
}

/// Precomputed per-run quantities so each shot is a handful of draws.
#[derive(Debug, Clone, Copy)]
struct ShotModel {
    p_stored: f64,
    p_detect_retrieved: f64,
    // (first-port probability per basis, mean detected photons)
    outputs: [([f64; 3], f64); 2],
    selection: BasisSelection,
}

impl ShotModel {
    fn new(
        config: &ExperimentConfig,
        truth: &TargetResponse,
        input: &PolarizationState,
    ) -> Result<Self> {
        config.validate()?;
        let p_store = config.storage_probability();
        let p_stored = 1.0 - (-config.mean_photons_control * p_store).exp();
        let p_detect_retrieved =
            config.retrieval_probability(config.delay)? * config.detection_efficiency;
        let mut outputs = [([0.0; 3], 0.0); 2];
        for (slot, stored) in outputs.iter_mut().zip([false, true]) {
            let (s, power) = truth.output(stored, input, config)?;
            let probs = Basis::ALL.map(|b| s.first_port_probability(b));
            *slot = (
                probs,
                config.mean_photons_target * config.detection_efficiency * power,
            );
        }
        Ok(ShotModel {
            p_stored,
            p_detect_retrieved,
            outputs,
            selection: config.basis_selection,
        })
    }

    fn shot(&self, rng: &mut ChaCha8Rng, index: u64) -> ShotRecord {
        let basis = match self.selection {
            BasisSelection::RoundRobin => Basis::ALL[(index % 3) as usize],
            BasisSelection::Random => Basis::ALL[rng.gen_range(0..3)],
        };
        let stored = rng.gen_bool(self.p_stored);
        let (probs, mean) = self.outputs[stored as usize];
        let p_k = probs[basis.index()];
        let k = poisson(rng, mean * p_k);
        let l = poisson(rng, mean * (1.0 - p_k));
        let retrieved = stored && rng.gen_bool(self.p_detect_retrieved);
        ShotRecord {
            basis,
            control_stored: stored,
            control_retrieved: retrieved,
            target_counts_k: k,
            target_counts_l: l,
        }
    }
}

/// One repetition: control storage, target counts in the chosen basis, and
/// detection of the retrieved control.
pub fn simulate_shot(
    index: u64,
    config: &ExperimentConfig,
    truth: &TargetResponse,
    input: &PolarizationState,
) -> Result<ShotRecord> {
    let model = ShotModel::new(config, truth, input)?;
    Ok(model.shot(&mut shot_rng(config.rng_seed, index), index))
}

/// All `config.repetitions` shots, in shot order.
pub fn simulate_experiment(
    config: &ExperimentConfig,
    truth: &TargetResponse,
    input: &PolarizationState,
) -> Result<Vec<ShotRecord>> {
    let model = ShotModel::new(config, truth, input)?;
    let seed = config.rng_seed;
    Ok((0..config.repetitions)
        .into_par_iter()
        .map(|i| model.shot(&mut shot_rng(seed, i), i))
        .collect())
}

/// Summed counts per basis. Addition is associative, so partial totals from
/// any partition of the shots combine to the same result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CountTotals {
    /// (N_k, N_l) for H/V, D/A, L/R.
    pub counts: [(u64, u64); 3],
    /// Repetitions contributing, per basis.
    pub shots: [u64; 3],
}

impl CountTotals {
    pub fn add_record(&mut self, r: &ShotRecord) {
        let b = r.basis.index();
        self.counts[b].0 += r.target_counts_k as u64;
        self.counts[b].1 += r.target_counts_l as u64;
        self.shots[b] += 1;
    }

    pub fn merge(mut self, other: CountTotals) -> CountTotals {
        for b in 0..3 {
            self.counts[b].0 += other.counts[b].0;
            self.counts[b].1 += other.counts[b].1;
            self.shots[b] += other.shots[b];
        }
        self
    }

    pub fn from_records<'a>(
        records: impl IntoIterator<Item = &'a ShotRecord>,
        postselect: bool,
    ) -> Self {
        let mut t = CountTotals::default();
        for r in records {
            if !postselect || r.control_retrieved {
                t.add_record(r);
            }
        }
        t
    }

    pub fn estimate(&self) -> Result<CountSummary> {
        let mut s = [0.0; 3];
        let mut se = [0.0; 3];
        for basis in Basis::ALL {
            let b = basis.index();
            let (k, l) = self.counts[b];
            let n = (k + l) as f64;
            if self.shots[b] == 0 || n == 0.0 {
                return Err(Error::InsufficientStatistics { basis });
            }
            let v = (k as f64 - l as f64) / n;
            s[b] = v;
            se[b] = ((1.0 - v * v).max(0.0) / n).sqrt();
        }
        let stokes = StokesVector::new(s[0], s[1], s[2]);
        let (x, y) = (s[0], s[1]);
        let r2 = x * x + y * y;
        let (azimuth_err, visibility_err) = if r2 > 0.0 {
            (
                ((x * x * se[1] * se[1] + y * y * se[0] * se[0]) / (r2 * r2)).sqrt(),
                ((x * x * se[0] * se[0] + y * y * se[1] * se[1]) / r2).sqrt(),
            )
        } else {
            (f64::INFINITY, se[0].hypot(se[1]))
        };
        Ok(CountSummary {
            counts: self.counts,
            stokes,
            std_errors: se,
            azimuth: stokes.phi(),
            azimuth_err,
            visibility: r2.sqrt(),
            visibility_err,
            repetitions: self.shots.iter().sum(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountSummary {
    pub counts: [(u64, u64); 3],
    pub stokes: StokesVector,
    /// Binomial standard errors of S_HV, S_DA, S_LR.
    pub std_errors: [f64; 3],
    pub azimuth: f64,
    pub azimuth_err: f64,
    pub visibility: f64,
    pub visibility_err: f64,
    /// Repetitions that entered the estimate (after postselection).
    pub repetitions: u64,
}

/// S_kl = (N_k − N_l)/(N_k + N_l) from summed counts, optionally keeping only
/// repetitions with a detected retrieved control photon.
pub fn estimate_stokes(records: &[ShotRecord], postselect: bool) -> Result<CountSummary> {
    CountTotals::from_records(records, postselect).estimate()
}

/// Streams the shots straight into count totals without storing records.
pub fn simulate_totals(
    config: &ExperimentConfig,
    truth: &TargetResponse,
    input: &PolarizationState,
    postselect: bool,
) -> Result<CountTotals> {
    let model = ShotModel::new(config, truth, input)?;
    let seed = config.rng_seed;
    Ok((0..config.repetitions)
        .into_par_iter()
        .fold(CountTotals::default, |mut acc, i| {
            let r = model.shot(&mut shot_rng(seed, i), i);
            if !postselect || r.control_retrieved {
                acc.add_record(&r);
            }
            acc
        })
        .reduce(CountTotals::default, CountTotals::merge))
}

/// Stokes vector the unconditioned estimator converges to: outputs with and
/// without a stored excitation, weighted by storage probability and
/// transmitted power.
pub fn unconditioned_limit(
    config: &ExperimentConfig,
    truth: &TargetResponse,
    input: &PolarizationState,
) -> Result<StokesVector> {
    let p1 = 1.0 - (-config.mean_photons_control * config.storage_probability()).exp();
    let (s0, t0) = truth.output(false, input, config)?;
    let (s1, t1) = truth.output(true, input, config)?;
    let (w0, w1) = ((1.0 - p1) * t0, p1 * t1);
    let mix = |a: f64, b: f64| (w0 * a + w1 * b) / (w0 + w1);
    Ok(StokesVector::new(
        mix(s0.s_hv, s1.s_hv),
        mix(s0.s_da, s1.s_da),
        mix(s0.s_lr, s1.s_lr),
    ))
}

/// Outcome of the two tomography runs: with control (postselected) and
/// without control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub with_control: CountSummary,
    pub without_control: CountSummary,
    pub controlled_phase: f64,
    pub controlled_phase_err: f64,
}

/// Runs the postselected measurement of φ1 and the control-free measurement
/// of φ0 (seeded `rng_seed` and `rng_seed + 1`).
pub fn run_tomography(
    config: &ExperimentConfig,
    truth: &TargetResponse,
    input: &PolarizationState,
) -> Result<TomographyReport> {
    let with_control = simulate_totals(config, truth, input, true)?.estimate()?;
    let reference = ExperimentConfig {
        mean_photons_control: 0.0,
        rng_seed: config.rng_seed.wrapping_add(1),
        ..*config
    };
    let without_control = simulate_totals(&reference, truth, input, false)?.estimate()?;
    let diff = crate::polarization::wrap_angle(with_control.azimuth - without_control.azimuth);
    Ok(TomographyReport {
        with_control,
        without_control,
        controlled_phase: diff,
        controlled_phase_err: with_control.azimuth_err.hypot(without_control.azimuth_err),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::wrap_angle;

    fn truth() -> TargetResponse {
        TargetResponse {
            od0: 0.3,
            phi0: -2.0,
            od1: 2.0,
            phi1: 1.1,
        }
    }

    #[test]
    fn retrieval_curve_endpoints() {
        let c = ExperimentConfig::default();
        assert_eq!(retrieval_efficiency(&c, 0.0).unwrap(), 0.2);
        assert!((retrieval_efficiency(&c, 4.5e-6).unwrap() - 0.07).abs() < 1e-9);
        let tau = c.decay_time();
        assert!((tau - 4.286e-6).abs() < 1e-9);
        assert!((retrieval_efficiency(&c, tau).unwrap() - 0.2 / std::f64::consts::E).abs() < 1e-15);
        assert!(retrieval_efficiency(&c, -1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = ExperimentConfig {
            detection_efficiency: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            storage_fraction: Some(0.1),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn no_control_photons_never_stores() {
        let c = ExperimentConfig {
            mean_photons_control: 0.0,
            repetitions: 30_000,
            ..Default::default()
        };
        let input = PolarizationState::from_real(1.0, 1.0).unwrap();
        let recs = simulate_experiment(&c, &truth(), &input).unwrap();
        assert!(recs
            .iter()
            .all(|r| !r.control_stored && !r.control_retrieved));
        let est = estimate_stokes(&recs, false).unwrap();
        let (s0, _) = truth().output(false, &input, &c).unwrap();
        assert!(wrap_angle(est.azimuth - s0.phi()).abs() < 4.0 * est.azimuth_err);
    }

    #[test]
    fn zero_detection_efficiency_gives_no_counts() {
        let c = ExperimentConfig {
            detection_efficiency: 0.0,
            repetitions: 3000,
            ..Default::default()
        };
        let recs = simulate_experiment(
            &c,
            &truth(),
            &PolarizationState::from_real(1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(recs
            .iter()
            .all(|r| r.target_counts_k == 0 && r.target_counts_l == 0));
        assert!(matches!(
            estimate_stokes(&recs, false),
            Err(Error::InsufficientStatistics { basis: Basis::HV })
        ));
    }

    #[test]
    fn thinned_poisson_counts() {
        // Lossless target, 0.6 mean photons, detection 0.25: the summed count
        // of both ports is Poisson(0.15).
        let c = ExperimentConfig {
            mean_photons_target: 0.6,
            repetitions: 100_000,
            rng_seed: 7,
            ..Default::default()
        };
        let t = TargetResponse {
            od0: 0.0,
            phi0: 0.0,
            od1: 0.0,
            phi1: 0.0,
        };
        let recs =
            simulate_experiment(&c, &t, &PolarizationState::from_real(1.0, 0.0).unwrap()).unwrap();
        let n = recs.len() as f64;
        let counts: Vec<f64> = recs
            .iter()
            .map(|r| (r.target_counts_k + r.target_counts_l) as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let sigma = (0.15 / n).sqrt();
        assert!((mean - 0.15).abs() < 3.0 * sigma, "mean {mean}");
        assert!((var / mean - 1.0).abs() < 0.05, "dispersion {}", var / mean);
    }

    #[test]
    fn records_are_deterministic_and_schedule_independent() {
        let c = ExperimentConfig {
            repetitions: 5000,
            rng_seed: 99,
            ..Default::default()
        };
        let input = PolarizationState::balanced_for(2.0);
        let a = simulate_experiment(&c, &truth(), &input).unwrap();
        let b = simulate_experiment(&c, &truth(), &input).unwrap();
        assert_eq!(a, b);
        let serial: Vec<ShotRecord> = (0..c.repetitions)
            .map(|i| simulate_shot(i, &c, &truth(), &input).unwrap())
            .collect();
        assert_eq!(a, serial);
        let streamed = simulate_totals(&c, &truth(), &input, true).unwrap();
        assert_eq!(streamed, CountTotals::from_records(&a, true));
        let other = simulate_experiment(&ExperimentConfig { rng_seed: 100, ..c }, &truth(), &input)
            .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn zero_repetitions_is_insufficient() {
        let c = ExperimentConfig {
            repetitions: 0,
            ..Default::default()
        };
        let input = PolarizationState::from_real(1.0, 1.0).unwrap();
        assert!(matches!(
            run_tomography(&c, &truth(), &input),
            Err(Error::InsufficientStatistics { basis: Basis::HV })
        ));
    }

    #[test]
    fn round_robin_cycles_bases() {
        let c = ExperimentConfig {
            repetitions: 9,
            ..Default::default()
        };
        let recs = simulate_experiment(
            &c,
            &truth(),
            &PolarizationState::from_real(1.0, 1.0).unwrap(),
        )
        .unwrap();
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.basis, Basis::ALL[i % 3]);
        }
    }

    #[test]
    fn estimator_edge_cases() {
        let mk = |basis, k, l| ShotRecord {
            basis,
            control_stored: false,
            control_retrieved: false,
            target_counts_k: k,
            target_counts_l: l,
        };
        let recs = vec![
            mk(Basis::HV, 10, 0),
            mk(Basis::DA, 3, 3),
            mk(Basis::LR, 5, 5),
        ];
        let s = estimate_stokes(&recs, false).unwrap();
        assert_eq!(s.stokes.s_hv, 1.0);
        assert_eq!(s.std_errors[0], 0.0);
        let eq = vec![
            mk(Basis::HV, 4, 4),
            mk(Basis::DA, 4, 4),
            mk(Basis::LR, 4, 4),
        ];
        let s = estimate_stokes(&eq, false).unwrap();
        assert_eq!(
            (s.stokes.s_hv, s.stokes.s_da, s.stokes.s_lr),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(s.stokes.s0(), 0.0);
        assert!(matches!(
            estimate_stokes(&eq, true),
            Err(Error::InsufficientStatistics { .. })
        ));
        assert!(matches!(
            estimate_stokes(&[], false),
            Err(Error::InsufficientStatistics { .. })
        ));
    }

    #[test]
    fn high_statistics_azimuth_is_consistent() {
        let c = ExperimentConfig {
            mean_photons_control: 0.0,
            repetitions: 1_000_000,
            rng_seed: 3,
            ..Default::default()
        };
        let input = PolarizationState::balanced_for(truth().od0);
        let est = simulate_totals(&c, &truth(), &input, false)
            .unwrap()
            .estimate()
            .unwrap();
        assert!(wrap_angle(est.azimuth - truth().phi0).abs() < 3.0 * est.azimuth_err);
    }

    #[test]
    fn postselection_selects_stored_state() {
        let c = ExperimentConfig {
            mean_photons_control: 0.05,
            repetitions: 2_000_000,
            rng_seed: 11,
            ..Default::default()
        };
        let input = PolarizationState::balanced_for(truth().od1);
        let post = simulate_totals(&c, &truth(), &input, true)
            .unwrap()
            .estimate()
            .unwrap();
        assert!(wrap_angle(post.azimuth - truth().phi1).abs() < 4.0 * post.azimuth_err);
        let all = simulate_totals(&c, &truth(), &input, false)
            .unwrap()
            .estimate()
            .unwrap();
        let limit = unconditioned_limit(&c, &truth(), &input).unwrap();
        for b in 0..3 {
            let v = [limit.s_hv, limit.s_da, limit.s_lr][b];
            let e = [all.stokes.s_hv, all.stokes.s_da, all.stokes.s_lr][b];
            assert!(
                (v - e).abs() < 4.0 * all.std_errors[b],
                "basis {b}: {e} vs {v}"
            );
        }
    }

    #[test]
    fn dephasing_knob_reduces_visibility() {
        let c = ExperimentConfig {
            coherence: 0.75,
            repetitions: 300_000,
            ..Default::default()
        };
        let input = PolarizationState::balanced_for(truth().od1);
        let rep = run_tomography(&c, &truth(), &input).unwrap();
        assert!((rep.with_control.visibility - 0.75).abs() < 0.14);
        assert!(
            wrap_angle(rep.controlled_phase - (truth().phi1 - truth().phi0)).abs()
                < 4.0 * rep.controlled_phase_err
        );
    }
}
