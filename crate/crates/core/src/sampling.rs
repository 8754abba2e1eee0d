//! Finite-shot Monte Carlo: multinomial draws per probe setting, count-based
//! estimates with delta-method error bars, and bias/variance sweeps.
//!
//! Every draw comes from a ChaCha8 stream selected by hashing
//! `(setting, repetition, aux)` under the user seed, so results do not depend
//! on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::{OutcomeDistribution, ProbeSetting, SettingDistribution};
use crate::linalg::{ComplexScalar, ZERO};
use crate::protocols::{complex_pair, EstimateReport, ProtocolSpec, ShotsUsed};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Shots {
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

impl Shots {
    pub fn get(&self, setting: ProbeSetting) -> u64 {
        match setting {
            ProbeSetting::X => self.x,
            ProbeSetting::Y => self.y,
            ProbeSetting::Z => self.z,
        }
    }

    pub fn set(&mut self, setting: ProbeSetting, n: u64) {
        match setting {
            ProbeSetting::X => self.x = n,
            ProbeSetting::Y => self.y = n,
            ProbeSetting::Z => self.z = n,
        }
    }

    /// Splits `total` evenly over `settings`; the remainder goes to the first ones.
    pub fn equal_split(total: u64, settings: &[ProbeSetting]) -> Shots {
        let mut shots = Shots::default();
        if settings.is_empty() {
            return shots;
        }
        let k = settings.len() as u64;
        for (i, &s) in settings.iter().enumerate() {
            shots.set(s, total / k + u64::from((i as u64) < total % k));
        }
        shots
    }

    pub fn uniform(per_setting: u64, settings: &[ProbeSetting]) -> Shots {
        let mut shots = Shots::default();
        for &s in settings {
            shots.set(s, per_setting);
        }
        shots
    }

    pub fn total(&self) -> u64 {
        self.x + self.y + self.z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub shots: Shots,
    pub repetitions: usize,
    /// Bootstrap resamples for the error bar; `None` uses the delta method.
    pub bootstrap: Option<usize>,
}

impl SamplerConfig {
    pub fn new(seed: u64, shots: Shots, repetitions: usize) -> Self {
        SamplerConfig {
            seed,
            shots,
            repetitions,
            bootstrap: None,
        }
    }

    pub fn validate_for(&self, settings: &[ProbeSetting]) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be positive"));
        }
        for &s in settings {
            if self.shots.get(s) == 0 {
                return Err(Error::invalid(
                    "shots",
                    format!("setting {} needs a positive budget", s.name()),
                ));
            }
        }
        if self.bootstrap == Some(0) {
            return Err(Error::invalid("bootstrap", "needs at least one resample"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SettingCounts {
    pub plus: Vec<u64>,
    pub minus: Vec<u64>,
    pub discard: u64,
}

impl SettingCounts {
    pub fn total(&self) -> u64 {
        self.plus.iter().chain(&self.minus).sum::<u64>() + self.discard
    }

    /// Same order as [`SettingDistribution::categories`].
    pub fn categories(&self) -> Vec<u64> {
        let mut v = self.plus.clone();
        v.extend(&self.minus);
        v.push(self.discard);
        v
    }

    fn from_categories(cells: usize, cats: &[u64]) -> Self {
        SettingCounts {
            plus: cats[..cells].to_vec(),
            minus: cats[cells..2 * cells].to_vec(),
            discard: cats[2 * cells],
        }
    }

    pub fn frequencies(&self) -> SettingDistribution {
        let m = self.total().max(1) as f64;
        SettingDistribution {
            plus: self.plus.iter().map(|&n| n as f64 / m).collect(),
            minus: self.minus.iter().map(|&n| n as f64 / m).collect(),
            discard: self.discard as f64 / m,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ShotCounts {
    pub x: Option<SettingCounts>,
    pub y: Option<SettingCounts>,
    pub z: Option<SettingCounts>,
}

impl ShotCounts {
    pub fn get(&self, setting: ProbeSetting) -> Option<&SettingCounts> {
        match setting {
            ProbeSetting::X => self.x.as_ref(),
            ProbeSetting::Y => self.y.as_ref(),
            ProbeSetting::Z => self.z.as_ref(),
        }
    }

    pub fn set(&mut self, setting: ProbeSetting, counts: SettingCounts) {
        match setting {
            ProbeSetting::X => self.x = Some(counts),
            ProbeSetting::Y => self.y = Some(counts),
            ProbeSetting::Z => self.z = Some(counts),
        }
    }

    pub fn frequencies(&self) -> OutcomeDistribution {
        let mut dist = OutcomeDistribution::default();
        for s in ProbeSetting::ALL {
            if let Some(c) = self.get(s) {
                dist.set(s, c.frequencies());
            }
        }
        dist
    }

    pub fn shots_used(&self) -> ShotsUsed {
        let t = |s| self.get(s).map_or(0, SettingCounts::total);
        ShotsUsed {
            x: t(ProbeSetting::X),
            y: t(ProbeSetting::Y),
            z: t(ProbeSetting::Z),
        }
    }

    /// Compact rendering used in error messages.
    pub fn summary(&self) -> String {
        ProbeSetting::ALL
            .iter()
            .filter_map(|&s| {
                self.get(s).map(|c| {
                    format!(
                        "{}: +{:?} -{:?} discard {}",
                        s.name(),
                        c.plus,
                        c.minus,
                        c.discard
                    )
                })
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// Counts equal to `shots × probabilities`, rounded; for plug-in checks.
    pub fn expected(dist: &OutcomeDistribution, shots: &Shots) -> ShotCounts {
        let mut counts = ShotCounts::default();
        for s in dist.settings() {
            let sd = dist.get(s).expect("listed setting");
            let m = shots.get(s) as f64;
            let round = |p: &f64| (p * m).round() as u64;
            counts.set(
                s,
                SettingCounts {
                    plus: sd.plus.iter().map(round).collect(),
                    minus: sd.minus.iter().map(round).collect(),
                    discard: round(&sd.discard),
                },
            );
        }
        counts
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for one `(setting, repetition, aux)` cell of a run.
pub fn stream_rng(seed: u64, setting: ProbeSetting, repetition: u64, aux: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(setting.index() as u64) ^ repetition) ^ aux);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial(rng: &mut ChaCha8Rng, n: u64, probs: &[f64]) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(left, q)
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?
            .sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= p;
    }
    Ok(counts)
}

/// Draws counts for every setting present in `dist`, repetition 0.
pub fn sample(dist: &OutcomeDistribution, cfg: &SamplerConfig) -> Result<ShotCounts> {
    sample_repetition(dist, cfg, 0, 0)
}

pub fn sample_repetition(
    dist: &OutcomeDistribution,
    cfg: &SamplerConfig,
    repetition: u64,
    aux: u64,
) -> Result<ShotCounts> {
    dist.validate()?;
    let mut counts = ShotCounts::default();
    for s in dist.settings() {
        let sd = dist.get(s).expect("listed setting");
        let n = cfg.shots.get(s);
        let mut rng = stream_rng(cfg.seed, s, repetition, aux);
        let cats = multinomial(&mut rng, n, &sd.categories())?;
        counts.set(s, SettingCounts::from_categories(sd.cells(), &cats));
    }
    Ok(counts)
}

/// Delta-method variance summed over settings: per setting
/// `(1/M)[Σ p_k|g_k|² − |Σ p_k g_k|²]`, which covers both the real and the
/// imaginary part.
fn delta_variance(
    freqs: &OutcomeDistribution,
    counts: &ShotCounts,
    gradient: &crate::protocols::Gradient,
    settings: &[ProbeSetting],
) -> f64 {
    let mut var = 0.0;
    for &s in settings {
        let (Some(sd), Some(g), Some(c)) = (freqs.get(s), gradient.get(s), counts.get(s)) else {
            continue;
        };
        let m = c.total() as f64;
        if m == 0.0 {
            continue;
        }
        let p = sd.categories();
        let second: f64 = p.iter().zip(g).map(|(p, g)| p * g.norm_sqr()).sum();
        let first: ComplexScalar = p.iter().zip(g).map(|(p, g)| *g * *p).sum();
        var += (second - first.norm_sqr()).max(0.0) / m;
    }
    var
}

fn undefined(err: Error, counts: &ShotCounts) -> Error {
    match err {
        Error::DegenerateEstimator(reason) | Error::InvalidDistribution(reason) => {
            Error::UndefinedEstimate {
                reason,
                counts: counts.summary(),
            }
        }
        other => other,
    }
}

/// Applies a custom inversion to the empirical frequencies of `counts`.
pub fn estimate_dist_counts<F>(counts: &ShotCounts, invert: F) -> Result<ComplexScalar>
where
    F: FnOnce(&OutcomeDistribution) -> Result<ComplexScalar>,
{
    invert(&counts.frequencies()).map_err(|e| undefined(e, counts))
}

/// Plugs empirical frequencies into the protocol's inversion.
///
/// The reported bias is measured against the analytically known target,
/// which only a simulator has.
pub fn estimate_from_counts(counts: &ShotCounts, spec: &ProtocolSpec) -> Result<EstimateReport> {
    let settings = spec.required_settings();
    for &s in settings {
        if counts.get(s).is_none_or(|c| c.total() == 0) {
            return Err(Error::MissingSetting(s));
        }
    }
    let freqs = counts.frequencies();
    let est = spec.estimate(&freqs).map_err(|e| undefined(e, counts))?;
    let stderr = delta_variance(&freqs, counts, &est.gradient, settings).sqrt();
    Ok(EstimateReport {
        protocol: spec.name(),
        estimate: est.value,
        exact_target: spec.exact_target(),
        bias: est.value - spec.exact_target(),
        stderr,
        success_probability: est.success_probability,
        shots_used: counts.shots_used(),
        alternate: est.alternate,
    })
}

/// Resamples the observed counts `resamples` times and reports the spread
/// of the re-estimates; resamples with an undefined estimate are skipped.
pub fn bootstrap_stderr(
    counts: &ShotCounts,
    spec: &ProtocolSpec,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    let freqs = counts.frequencies();
    let shots = counts.shots_used();
    let cfg = SamplerConfig::new(
        seed,
        Shots {
            x: shots.x,
            y: shots.y,
            z: shots.z,
        },
        resamples,
    );
    let values: Vec<ComplexScalar> = (0..resamples as u64)
        .into_par_iter()
        .filter_map(|b| {
            let re = sample_repetition(&freqs, &cfg, b, u64::MAX).ok()?;
            spec.estimate(&re.frequencies()).ok().map(|e| e.value)
        })
        .collect();
    if values.len() < 2 {
        return Err(Error::UndefinedEstimate {
            reason: "fewer than two bootstrap resamples were defined".into(),
            counts: counts.summary(),
        });
    }
    Ok(complex_std(&values))
}

/// Sample standard deviation of complex values, `sqrt(Σ|z − z̄|²/(n − 1))`.
pub fn complex_std(values: &[ComplexScalar]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = complex_mean(values);
    let ss: f64 = values.iter().map(|z| (z - mean).norm_sqr()).sum();
    (ss / (n - 1) as f64).sqrt()
}

pub fn complex_mean(values: &[ComplexScalar]) -> ComplexScalar {
    if values.is_empty() {
        return ZERO;
    }
    values.iter().sum::<ComplexScalar>() / values.len() as f64
}

/// One seeded experiment: sample, then estimate, with the configured error bar.
pub fn run_repetition(
    spec: &ProtocolSpec,
    dist: &OutcomeDistribution,
    cfg: &SamplerConfig,
    repetition: u64,
    aux: u64,
) -> Result<EstimateReport> {
    let counts = sample_repetition(dist, cfg, repetition, aux)?;
    let mut report = estimate_from_counts(&counts, spec)?;
    if let Some(b) = cfg.bootstrap {
        let boot_seed = splitmix(cfg.seed ^ splitmix(repetition ^ splitmix(aux)));
        report.stderr = bootstrap_stderr(&counts, spec, b, boot_seed)?;
    }
    Ok(report)
}

/// Runs every repetition of `spec`, in repetition order.
pub fn run_repetitions(
    spec: &ProtocolSpec,
    cfg: &SamplerConfig,
    aux: u64,
) -> Result<Vec<EstimateReport>> {
    cfg.validate_for(spec.required_settings())?;
    let dist = spec.distribution()?;
    // only the settings the protocol reads are sampled
    let mut needed = OutcomeDistribution::default();
    for &s in spec.required_settings() {
        needed.set(s, dist.require(s)?.clone());
    }
    (0..cfg.repetitions as u64)
        .into_par_iter()
        .map(|r| run_repetition(spec, &needed, cfg, r, aux))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub protocol: &'static str,
    pub xi: f64,
    pub shots: Shots,
    pub reps: usize,
    #[serde(with = "complex_pair")]
    pub mean_estimate: ComplexScalar,
    #[serde(with = "complex_pair")]
    pub empirical_bias: ComplexScalar,
    pub empirical_std: f64,
    pub mean_stderr: f64,
    pub success_prob: f64,
    pub seed: u64,
}

/// Aggregates repeated runs of one configuration.
pub fn summarize(
    spec: &ProtocolSpec,
    xi: f64,
    cfg: &SamplerConfig,
    reports: &[EstimateReport],
) -> SweepRow {
    let values: Vec<ComplexScalar> = reports.iter().map(|r| r.estimate).collect();
    let mean = complex_mean(&values);
    let n = reports.len().max(1) as f64;
    SweepRow {
        protocol: spec.name(),
        xi,
        shots: cfg.shots,
        reps: reports.len(),
        mean_estimate: mean,
        empirical_bias: mean - spec.exact_target(),
        empirical_std: complex_std(&values),
        mean_stderr: reports.iter().map(|r| r.stderr).sum::<f64>() / n,
        success_prob: reports.iter().map(|r| r.success_probability).sum::<f64>() / n,
        seed: cfg.seed,
    }
}

/// `repetitions` seeded experiments per grid point; rows come back in grid order.
///
/// Grid point `g` draws from the streams with `aux = g`.
pub fn bias_variance_sweep<F>(
    family: F,
    xi_grid: &[f64],
    cfg: &SamplerConfig,
) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<ProtocolSpec>,
{
    if xi_grid.is_empty() {
        return Err(Error::invalid("xi_grid", "must not be empty"));
    }
    let specs = xi_grid
        .iter()
        .map(|&xi| Ok((xi, family(xi)?)))
        .collect::<Result<Vec<_>>>()?;
    sweep_specs(&specs, cfg)
}

/// Same as [`bias_variance_sweep`] for specs that are already built.
pub fn sweep_specs(specs: &[(f64, ProtocolSpec)], cfg: &SamplerConfig) -> Result<Vec<SweepRow>> {
    specs
        .iter()
        .enumerate()
        .map(|(g, (xi, spec))| {
            let reports = run_repetitions(spec, cfg, g as u64)?;
            Ok(summarize(spec, *xi, cfg, &reports))
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "protocol,xi,shots_x,shots_y,shots_z,reps,est_re,est_im,bias_re,bias_im,emp_std,mean_stderr,success_prob,seed";

/// Fixed 17-significant-digit rendering used in every emitted table.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.protocol.to_string(),
            fmt_f64(r.xi),
            r.shots.x.to_string(),
            r.shots.y.to_string(),
            r.shots.z.to_string(),
            r.reps.to_string(),
            fmt_f64(r.mean_estimate.re),
            fmt_f64(r.mean_estimate.im),
            fmt_f64(r.empirical_bias.re),
            fmt_f64(r.empirical_bias.im),
            fmt_f64(r.empirical_std),
            fmt_f64(r.mean_stderr),
            fmt_f64(r.success_prob),
            r.seed.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::{joint_distribution, Boundary, ControlledTransform};
    use crate::linalg::{c, Ket, Operator};
    use crate::protocols::{anomalous_benchmark, Variant};
    use proptest::prelude::*;

    fn benchmark_spec(variant: Variant) -> ProtocolSpec {
        let (a, pi, pf) = anomalous_benchmark();
        ProtocolSpec::weak(variant, a, pi, pf).unwrap()
    }

    #[test]
    fn equal_split_distributes_remainder() {
        let s = Shots::equal_split(10, &ProbeSetting::ALL);
        assert_eq!((s.x, s.y, s.z), (4, 3, 3));
        let s = Shots::equal_split(30_000, &[ProbeSetting::X, ProbeSetting::Y]);
        assert_eq!((s.x, s.y, s.z), (15_000, 15_000, 0));
    }

    #[test]
    fn point_mass_lands_on_plus() {
        let dist = OutcomeDistribution {
            x: Some(SettingDistribution {
                plus: vec![1.0],
                minus: vec![0.0],
                discard: 0.0,
            }),
            y: None,
            z: None,
        };
        let cfg = SamplerConfig::new(3, Shots::uniform(1000, &[ProbeSetting::X]), 1);
        let counts = sample(&dist, &cfg).unwrap();
        assert_eq!(counts.x.as_ref().unwrap().plus, vec![1000]);
        assert_eq!(counts.x.as_ref().unwrap().total(), 1000);
    }

    #[test]
    fn same_seed_same_counts() {
        let spec = benchmark_spec(Variant::ModifiedWeak { xi: 1.0 });
        let dist = spec.distribution().unwrap();
        let cfg = SamplerConfig::new(42, Shots::uniform(12345, &ProbeSetting::ALL), 1);
        assert_eq!(sample(&dist, &cfg).unwrap(), sample(&dist, &cfg).unwrap());
        let other = SamplerConfig {
            seed: 43,
            ..cfg.clone()
        };
        assert_ne!(sample(&dist, &cfg).unwrap(), sample(&dist, &other).unwrap());
    }

    #[test]
    fn rejects_invalid_distribution() {
        let dist = OutcomeDistribution {
            x: Some(SettingDistribution {
                plus: vec![0.7],
                minus: vec![0.7],
                discard: 0.0,
            }),
            y: None,
            z: None,
        };
        let cfg = SamplerConfig::new(1, Shots::uniform(10, &[ProbeSetting::X]), 1);
        assert!(sample(&dist, &cfg).is_err());
    }

    #[test]
    fn frequencies_within_binomial_bands() {
        // {1, σ_z}, ψᵢ = |+⟩, ψf = |0⟩: P(+) = 1/2, P(−) = 0, P(±i) = 1/4
        let ct = ControlledTransform::new(Operator::identity(2), Operator::pauli_z()).unwrap();
        let b = Boundary::pure(&Ket::plus(), &Ket::zero()).unwrap();
        let dist = joint_distribution(&ct, &b, &[ProbeSetting::X, ProbeSetting::Y]).unwrap();
        let m = 1_000_000u64;
        let cfg = SamplerConfig::new(7, Shots::uniform(m, &[ProbeSetting::X, ProbeSetting::Y]), 1);
        let counts = sample(&dist, &cfg).unwrap();
        let x = counts.x.unwrap();
        let y = counts.y.unwrap();
        let check = |n: u64, p: f64| {
            let sigma = (m as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (n as f64 - m as f64 * p).abs() <= 5.0 * sigma.max(1e-9),
                "{n} vs {p}"
            );
        };
        check(x.plus[0], 0.5);
        check(x.minus[0], 0.0);
        check(y.plus[0], 0.25);
        check(y.minus[0], 0.25);
    }

    #[test]
    fn plug_in_consistency() {
        for variant in [
            Variant::ModifiedWeak { xi: 1.0 },
            Variant::ConventionalWeak { xi: 0.1 },
            Variant::ExpandedHilbert,
            Variant::StrongPauli {
                axis: crate::protocols::Axis::Z,
            },
        ] {
            let spec = benchmark_spec(variant);
            let dist = spec.distribution().unwrap();
            // power of two shots with dyadic probabilities keeps rounding exact
            let shots = Shots::uniform(1 << 20, spec.required_settings());
            let counts = ShotCounts::expected(&dist, &shots);
            let from_counts = estimate_from_counts(&counts, &spec).unwrap().estimate;
            let exact = spec.exact_report().unwrap().estimate;
            if let Variant::ModifiedWeak { .. } = spec.variant() {
                assert!((from_counts - exact).norm() < 1e-12);
            } else {
                assert!((from_counts - exact).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn all_discard_is_undefined() {
        let spec = benchmark_spec(Variant::ModifiedWeak { xi: 1.0 });
        let all_discard = SettingCounts {
            plus: vec![0],
            minus: vec![0],
            discard: 100,
        };
        let counts = ShotCounts {
            x: Some(all_discard.clone()),
            y: Some(all_discard.clone()),
            z: Some(all_discard),
        };
        match estimate_from_counts(&counts, &spec) {
            Err(Error::UndefinedEstimate { counts, .. }) => assert!(counts.contains("discard 100")),
            other => panic!("expected undefined estimate, got {other:?}"),
        }
    }

    #[test]
    fn missing_setting_is_reported() {
        let spec = benchmark_spec(Variant::ModifiedWeak { xi: 1.0 });
        let counts = ShotCounts {
            x: Some(SettingCounts {
                plus: vec![1],
                minus: vec![1],
                discard: 0,
            }),
            y: Some(SettingCounts {
                plus: vec![1],
                minus: vec![1],
                discard: 0,
            }),
            z: None,
        };
        assert_eq!(
            estimate_from_counts(&counts, &spec).unwrap_err(),
            Error::MissingSetting(ProbeSetting::Z)
        );
    }

    #[test]
    fn modified_weak_within_five_stderr() {
        let spec = benchmark_spec(Variant::ModifiedWeak { xi: 1.0 });
        let cfg = SamplerConfig::new(2024, Shots::uniform(1_000_000, &ProbeSetting::ALL), 20);
        for r in run_repetitions(&spec, &cfg, 0).unwrap() {
            assert!((r.estimate - c(-2.0, 0.0)).norm() < 5.0 * r.stderr);
            assert_eq!(r.shots_used.z, 1_000_000);
        }
    }

    #[test]
    fn stderr_is_calibrated() {
        let spec = benchmark_spec(Variant::ModifiedWeak { xi: 1.0 });
        let cfg = SamplerConfig::new(99, Shots::uniform(20_000, &ProbeSetting::ALL), 200);
        let reports = run_repetitions(&spec, &cfg, 0).unwrap();
        let row = summarize(&spec, 1.0, &cfg, &reports);
        let ratio = row.empirical_std / row.mean_stderr;
        assert!((0.7..=1.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn bootstrap_agrees_with_delta_method() {
        let spec = benchmark_spec(Variant::ModifiedWeak { xi: 1.0 });
        let dist = spec.distribution().unwrap();
        let cfg = SamplerConfig::new(5, Shots::uniform(50_000, &ProbeSetting::ALL), 1);
        let delta = run_repetition(&spec, &dist, &cfg, 0, 0).unwrap().stderr;
        let boot_cfg = SamplerConfig {
            bootstrap: Some(200),
            ..cfg.clone()
        };
        let boot = run_repetition(&spec, &dist, &boot_cfg, 0, 0)
            .unwrap()
            .stderr;
        assert!((boot / delta - 1.0).abs() < 0.25, "{boot} vs {delta}");
    }

    #[test]
    fn consistency_improves_with_shots() {
        let spec = benchmark_spec(Variant::ModifiedWeak { xi: 1.0 });
        let mut last = f64::INFINITY;
        for m in [1_000u64, 10_000, 100_000, 1_000_000] {
            let cfg = SamplerConfig::new(17, Shots::uniform(m, &ProbeSetting::ALL), 100);
            let reports = run_repetitions(&spec, &cfg, 0).unwrap();
            let inside = reports
                .iter()
                .filter(|r| (r.estimate - spec.exact_target()).norm() < 5.0 * r.stderr)
                .count();
            assert!(inside >= 99, "M = {m}: {inside} inside");
            let rmse = (reports.iter().map(|r| r.bias.norm_sqr()).sum::<f64>() / 100.0).sqrt();
            assert!(rmse < last);
            last = rmse;
        }
    }

    #[test]
    fn sweep_single_point_reproducible() {
        let cfg = SamplerConfig::new(8, Shots::uniform(1000, &ProbeSetting::ALL), 1);
        let family = |xi| {
            let (a, pi, pf) = anomalous_benchmark();
            ProtocolSpec::weak(Variant::ModifiedWeak { xi }, a, pi, pf)
        };
        let a = bias_variance_sweep(family, &[1.0], &cfg).unwrap();
        let b = bias_variance_sweep(family, &[1.0], &cfg).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(sweep_csv(&a), sweep_csv(&b));
        assert!(bias_variance_sweep(family, &[], &cfg).is_err());
    }

    #[test]
    fn sweep_is_thread_count_independent() {
        let cfg = SamplerConfig::new(
            21,
            Shots::uniform(5000, &[ProbeSetting::X, ProbeSetting::Y]),
            16,
        );
        let family = |xi| {
            let (a, pi, pf) = anomalous_benchmark();
            ProtocolSpec::weak(Variant::ConventionalWeak { xi }, a, pi, pf)
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sweep_csv(&bias_variance_sweep(family, &[0.1, 0.2], &cfg).unwrap()))
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn csv_layout() {
        let csv = sweep_csv(&[]);
        assert_eq!(csv, format!("{SWEEP_HEADER}\n"));
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    proptest! {
        #[test]
        fn counts_sum_to_budget(seed in any::<u64>(), n in 0u64..100_000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = [a * 0.5, b * 0.5 * (1.0 - a * 0.5)];
            let rest = 1.0 - p[0] - p[1];
            let dist = OutcomeDistribution {
                x: Some(SettingDistribution { plus: vec![p[0]], minus: vec![p[1]], discard: rest }),
                y: None,
                z: None,
            };
            let cfg = SamplerConfig::new(seed, Shots::uniform(n, &[ProbeSetting::X]), 1);
            let counts = sample(&dist, &cfg).unwrap();
            prop_assert_eq!(counts.x.unwrap().total(), n);
        }

        #[test]
        fn fmt_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
