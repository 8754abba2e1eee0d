//! Direct measurement of a discretized transverse wavefunction.
//!
//! The continuous mode becomes an `N`-point periodic grid and `|p₀⟩` is the
//! uniform (zero-momentum) vector. Two pipelines are provided:
//!
//! * scanning: a conventional weak measurement of `|x⟩⟨x|` at every `x`,
//!   post-selected on `|p₀⟩`;
//! * scan-free: one probe-controlled transform `T₀ = |p₀⟩⟨p₀|`, `T₁ = 1`
//!   with the system read out in the position basis, so every `x` is
//!   resolved from the same exposure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::{
    basis_resolved_distribution, extract_complex, extract_complex_cells, ControlledTransform,
    OutcomeDistribution, ProbeSetting,
};
use crate::linalg::{c, zero_momentum, ComplexScalar, Ket, Operator, ZERO};
use crate::protocols::{interaction_distribution, projector_branches, DENOMINATOR_TOL};
use crate::sampling::{estimate_dist_counts, sample_repetition, SamplerConfig, Shots};

/// `|⟨p₀|ψ⟩|` at or below this is treated as a DC-null state.
pub const DC_TOL: f64 = 1e-10;

const XY: [ProbeSetting; 2] = [ProbeSetting::X, ProbeSetting::Y];

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    amps: Vec<ComplexScalar>,
}

impl GridState {
    /// Accepts amplitudes that are already normalized within 1e−10.
    pub fn new(amps: Vec<ComplexScalar>) -> Result<Self> {
        let ket = Ket::new(amps)?;
        if !ket.is_normalized() {
            return Err(Error::invalid("grid state", "not normalized"));
        }
        Ok(GridState {
            amps: ket.into_amps(),
        })
    }

    pub fn normalized(amps: Vec<ComplexScalar>) -> Result<Self> {
        Ok(GridState {
            amps: Ket::normalized(amps)?.into_amps(),
        })
    }

    pub fn n(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[ComplexScalar] {
        &self.amps
    }

    pub fn ket(&self) -> Ket {
        Ket::new(self.amps.clone()).expect("grid amplitudes are finite")
    }

    /// `⟨p₀|ψ⟩`
    pub fn dc_component(&self) -> ComplexScalar {
        zero_momentum(self.n()).inner(&self.ket())
    }

    fn check_dc(&self) -> Result<ComplexScalar> {
        let dc = self.dc_component();
        if dc.norm() <= DC_TOL {
            return Err(Error::DcNull { dc: dc.norm() });
        }
        Ok(dc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    /// `ψ(x) ∝ exp(−(x − x₀)²/(4σ²) + ikx)`
    Gaussian {
        x0: f64,
        sigma: f64,
        k: f64,
    },
    /// Two Gaussian bumps of width `sigma`, the second carrying phase `phase`.
    TwoPeak {
        x1: f64,
        x2: f64,
        sigma: f64,
        phase: f64,
    },
    /// Random Fourier series over momenta `|p| ≤ cutoff` with a DC term of at
    /// least unit weight.
    RandomSmooth {
        seed: u64,
        cutoff: usize,
    },
    Custom {
        amps: Vec<ComplexScalar>,
    },
}

fn gaussian_amp(x: f64, x0: f64, sigma: f64, k: f64) -> ComplexScalar {
    let envelope = (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
    ComplexScalar::from_polar(envelope, k * x)
}

pub fn make_test_state(n: usize, kind: &StateKind) -> Result<GridState> {
    if n < 2 {
        return Err(Error::invalid("n", "grid needs at least 2 points"));
    }
    let amps: Vec<ComplexScalar> = match kind {
        StateKind::Gaussian { x0, sigma, k } => {
            if *sigma <= 0.0 {
                return Err(Error::invalid("sigma", "must be positive"));
            }
            (0..n)
                .map(|x| gaussian_amp(x as f64, *x0, *sigma, *k))
                .collect()
        }
        StateKind::TwoPeak {
            x1,
            x2,
            sigma,
            phase,
        } => {
            if *sigma <= 0.0 {
                return Err(Error::invalid("sigma", "must be positive"));
            }
            let rot = ComplexScalar::from_polar(1.0, *phase);
            (0..n)
                .map(|x| {
                    let x = x as f64;
                    gaussian_amp(x, *x1, *sigma, 0.0) + rot * gaussian_amp(x, *x2, *sigma, 0.0)
                })
                .collect()
        }
        StateKind::RandomSmooth { seed, cutoff } => {
            if 2 * cutoff + 1 > n {
                return Err(Error::invalid(
                    "cutoff",
                    "exceeds the grid's momentum range",
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut draw = || {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                c(re, im)
            };
            let mut coeffs: Vec<(i64, ComplexScalar)> = Vec::new();
            let dc = draw();
            coeffs.push((0, c(1.0 + dc.norm(), 0.0)));
            for p in 1..=*cutoff as i64 {
                coeffs.push((p, draw()));
                coeffs.push((-p, draw()));
            }
            (0..n)
                .map(|x| {
                    coeffs
                        .iter()
                        .map(|(p, a)| {
                            let phase =
                                2.0 * std::f64::consts::PI * (*p as f64) * x as f64 / n as f64;
                            a * ComplexScalar::from_polar(1.0, phase)
                        })
                        .sum()
                })
                .collect()
        }
        StateKind::Custom { amps } => {
            if amps.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: amps.len(),
                });
            }
            amps.clone()
        }
    };
    let state = GridState::normalized(amps)?;
    state.check_dc()?;
    Ok(state)
}

/// `N = 64`, `x₀ = 24`, `σ = 6`, `k = 2π·3/64`.
pub fn gaussian_64() -> GridState {
    make_test_state(
        64,
        &StateKind::Gaussian {
            x0: 24.0,
            sigma: 6.0,
            k: 2.0 * std::f64::consts::PI * 3.0 / 64.0,
        },
    )
    .expect("the benchmark state has a DC component")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Scanning,
    ScanFree,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Scanning => "scanning",
            Method::ScanFree => "scan_free",
        }
    }
}

/// Exact probabilities, or one seeded finite-shot exposure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acquisition {
    Exact,
    Shots {
        total: u64,
        seed: u64,
        repetition: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectMeasResult {
    pub method: Method,
    pub raw: Vec<ComplexScalar>,
    pub recovered: GridState,
    pub fidelity: f64,
    pub total_shots: u64,
}

/// Normalizes the measured profile; the global phase is kept as measured.
pub fn recover(raw: &[ComplexScalar]) -> Result<GridState> {
    let norm_sqr: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
    if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
        return Err(Error::DegenerateEstimator(
            "measured profile vanishes everywhere".into(),
        ));
    }
    GridState::normalized(raw.to_vec())
}

/// `|⟨a|b⟩|²`
pub fn fidelity(a: &GridState, b: &GridState) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    Ok(a.ket().inner(&b.ket()).norm_sqr().min(1.0))
}

fn finish(
    method: Method,
    psi: &GridState,
    raw: Vec<ComplexScalar>,
    total_shots: u64,
) -> Result<DirectMeasResult> {
    let recovered = recover(&raw)?;
    let fidelity = fidelity(&recovered, psi)?;
    Ok(DirectMeasResult {
        method,
        raw,
        recovered,
        fidelity,
        total_shots,
    })
}

/// Exact X/Y statistics of the scanning experiment, one entry per position.
pub fn scanning_distributions(psi: &GridState, xi: f64) -> Result<Vec<OutcomeDistribution>> {
    if !(xi > 0.0 && xi <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid("xi", "scanning needs 0 < xi <= pi/2"));
    }
    psi.check_dc()?;
    let n = psi.n();
    let ket = psi.ket();
    let p0 = zero_momentum(n);
    (0..n)
        .into_par_iter()
        .map(|x| {
            let (cos, sin) = projector_branches(&Ket::basis(n, x).projector(), xi);
            interaction_distribution(&cos, &sin, &ket, &p0, &XY)
        })
        .collect()
}

/// Conventional inversion `(ΔP_x + iΔP_y) / (2ξ[P(+) + P(−)])` at one position.
fn scanning_value(dist: &OutcomeDistribution, xi: f64) -> Result<ComplexScalar> {
    let kept = dist.require(ProbeSetting::X)?.kept();
    if kept <= DENOMINATOR_TOL {
        return Err(Error::DegenerateEstimator(format!(
            "P(+) + P(-) = {kept:.3e}"
        )));
    }
    Ok(extract_complex(dist)? / (2.0 * xi * kept))
}

fn per_setting(total: u64, settings: usize) -> u64 {
    total / settings as u64
}

/// Raw per-position values from precomputed scanning statistics.
fn scanning_raw(
    dists: &[OutcomeDistribution],
    xi: f64,
    acq: Acquisition,
) -> Result<(Vec<ComplexScalar>, u64)> {
    let n = dists.len();
    match acq {
        Acquisition::Exact => {
            let raw = dists
                .iter()
                .map(|d| scanning_value(d, xi))
                .collect::<Result<Vec<_>>>()?;
            Ok((raw, 0))
        }
        Acquisition::Shots {
            total,
            seed,
            repetition,
        } => {
            let per_x = total / n as u64;
            let each = per_setting(per_x, XY.len());
            if each == 0 {
                return Err(Error::invalid(
                    "shots",
                    format!("scanning {n} positions needs at least {} shots", 2 * n),
                ));
            }
            let cfg = SamplerConfig::new(seed, Shots::uniform(each, &XY), 1);
            let raw = dists
                .par_iter()
                .enumerate()
                .map(|(x, d)| {
                    let counts = sample_repetition(d, &cfg, repetition, x as u64)?;
                    estimate_dist_counts(&counts, |freqs| scanning_value(freqs, xi))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((raw, each * XY.len() as u64 * n as u64))
        }
    }
}

/// Lundeen-style scan: a weak measurement of `|x⟩⟨x|` at every position.
pub fn lundeen_scan(psi: &GridState, xi: f64, acq: Acquisition) -> Result<DirectMeasResult> {
    let dists = scanning_distributions(psi, xi)?;
    let (raw, shots) = scanning_raw(&dists, xi, acq)?;
    finish(Method::Scanning, psi, raw, shots)
}

/// Exact statistics of the scan-free experiment; cell `x` is outcome `|x⟩`.
pub fn scan_free_distribution(psi: &GridState) -> Result<OutcomeDistribution> {
    psi.check_dc()?;
    let n = psi.n();
    let p0 = zero_momentum(n);
    let ct = ControlledTransform::new(p0.projector(), Operator::identity(n))?;
    basis_resolved_distribution(&ct, &psi.ket().projector(), &Operator::identity(n), &XY)
}

fn scan_free_raw(
    dist: &OutcomeDistribution,
    acq: Acquisition,
) -> Result<(Vec<ComplexScalar>, u64)> {
    match acq {
        Acquisition::Exact => Ok((extract_complex_cells(dist)?, 0)),
        Acquisition::Shots {
            total,
            seed,
            repetition,
        } => {
            let each = per_setting(total, XY.len());
            if each == 0 {
                return Err(Error::invalid("shots", "scan-free needs at least 2 shots"));
            }
            let cfg = SamplerConfig::new(seed, Shots::uniform(each, &XY), 1);
            let counts = sample_repetition(dist, &cfg, repetition, 0)?;
            let raw = extract_complex_cells(&counts.frequencies())?;
            Ok((raw, each * XY.len() as u64))
        }
    }
}

/// Single-setting measurement: `C(x) = ⟨ψ|p₀⟩⟨p₀|x⟩⟨x|ψ⟩`.
pub fn scan_free(psi: &GridState, acq: Acquisition) -> Result<DirectMeasResult> {
    let dist = scan_free_distribution(psi)?;
    let (raw, shots) = scan_free_raw(&dist, acq)?;
    finish(Method::ScanFree, psi, raw, shots)
}

pub const COMPARE_REPS: u64 = 20;
/// Budgets stop doubling past this many total shots.
pub const MAX_BUDGET: u64 = 1 << 44;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Budget {
    Reached {
        shots: u64,
        median_fidelity: f64,
    },
    /// Even infinite statistics stay below the target.
    Unreachable {
        floor: f64,
    },
    Exhausted {
        max_shots: u64,
        median_fidelity: f64,
    },
}

impl Budget {
    pub fn shots(&self) -> Option<u64> {
        match self {
            Budget::Reached { shots, .. } => Some(*shots),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub n: usize,
    pub target_fidelity: f64,
    pub xi_scan: f64,
    pub seed: u64,
    pub scanning: Budget,
    pub scan_free: Budget,
    /// `shots_scanning / shots_scan_free` when both targets are met.
    pub ratio: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Doubling search from `start`; an undefined exposure scores fidelity 0.
fn search<F>(start: u64, target: f64, run: F) -> Budget
where
    F: Fn(u64, u64) -> Result<f64> + Sync,
{
    let mut budget = start;
    loop {
        let fids: Vec<f64> = (0..COMPARE_REPS)
            .into_par_iter()
            .map(|r| run(budget, r).unwrap_or(0.0))
            .collect();
        let med = median(fids);
        if med >= target {
            return Budget::Reached {
                shots: budget,
                median_fidelity: med,
            };
        }
        if budget > MAX_BUDGET / 2 {
            return Budget::Exhausted {
                max_shots: budget,
                median_fidelity: med,
            };
        }
        budget *= 2;
    }
}

/// Smallest doubling budget at which each method's median fidelity over
/// [`COMPARE_REPS`] seeded exposures meets `target`.
pub fn efficiency_compare(
    psi: &GridState,
    target: f64,
    xi_scan: f64,
    seed: u64,
) -> Result<EfficiencyReport> {
    if !(0.0..1.0).contains(&target) {
        return Err(Error::invalid("target_fidelity", "must lie in [0, 1)"));
    }
    let n = psi.n();
    let scan_dists = scanning_distributions(psi, xi_scan)?;
    let free_dist = scan_free_distribution(psi)?;

    let (exact_raw, _) = scanning_raw(&scan_dists, xi_scan, Acquisition::Exact)?;
    let floor = fidelity(&recover(&exact_raw)?, psi)?;
    let scanning = if floor < target {
        Budget::Unreachable { floor }
    } else {
        search(2 * n as u64, target, |total, r| {
            let acq = Acquisition::Shots {
                total,
                seed,
                repetition: r,
            };
            let (raw, _) = scanning_raw(&scan_dists, xi_scan, acq)?;
            fidelity(&recover(&raw)?, psi)
        })
    };
    let scan_free = search(XY.len() as u64, target, |total, r| {
        let acq = Acquisition::Shots {
            total,
            seed,
            repetition: r,
        };
        let (raw, _) = scan_free_raw(&free_dist, acq)?;
        fidelity(&recover(&raw)?, psi)
    });
    let ratio = match (scanning.shots(), scan_free.shots()) {
        (Some(a), Some(b)) => Some(a as f64 / b as f64),
        _ => None,
    };
    Ok(EfficiencyReport {
        n,
        target_fidelity: target,
        xi_scan,
        seed,
        scanning,
        scan_free,
        ratio,
    })
}

pub const PROFILE_HEADER: &str = "x,c_re,c_im,psi_true_re,psi_true_im,psi_rec_re,psi_rec_im";

pub fn profile_csv(result: &DirectMeasResult, truth: &GridState) -> String {
    use crate::sampling::fmt_f64;
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for (x, ((raw, t), r)) in result
        .raw
        .iter()
        .zip(truth.amps())
        .zip(result.recovered.amps())
        .enumerate()
    {
        let fields = [
            x.to_string(),
            fmt_f64(raw.re),
            fmt_f64(raw.im),
            fmt_f64(t.re),
            fmt_f64(t.im),
            fmt_f64(r.re),
            fmt_f64(r.im),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub method: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    pub shots: u64,
    pub fidelity: f64,
    pub seed: Option<u64>,
}

impl Summary {
    pub fn new(result: &DirectMeasResult, seed: Option<u64>) -> Self {
        Summary {
            method: result.method.name(),
            n: result.recovered.n(),
            shots: result.total_shots,
            fidelity: result.fidelity,
            seed,
        }
    }
}

/// `Σₓ C(x)`, equal to `|⟨p₀|ψ⟩|²` for exact statistics.
pub fn raw_total(raw: &[ComplexScalar]) -> ComplexScalar {
    raw.iter().fold(ZERO, |acc, z| acc + z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use std::f64::consts::PI;

    fn gaussian(n: usize) -> GridState {
        make_test_state(
            n,
            &StateKind::Gaussian {
                x0: n as f64 * 0.4,
                sigma: n as f64 / 10.0,
                k: 2.0 * PI * 2.0 / n as f64,
            },
        )
        .unwrap()
    }

    #[test]
    fn centered_gaussian_is_real_positive() {
        let s = make_test_state(
            16,
            &StateKind::Gaussian {
                x0: 7.5,
                sigma: 3.0,
                k: 0.0,
            },
        )
        .unwrap();
        assert!(s.amps().iter().all(|z| z.im == 0.0 && z.re > 0.0));
        let ket = s.ket();
        assert!((ket.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn every_kind_is_normalized() {
        let kinds = [
            StateKind::Gaussian {
                x0: 10.0,
                sigma: 4.0,
                k: 0.3,
            },
            StateKind::TwoPeak {
                x1: 8.0,
                x2: 24.0,
                sigma: 3.0,
                phase: 1.0,
            },
            StateKind::RandomSmooth { seed: 3, cutoff: 4 },
            StateKind::Custom {
                amps: vec![ONE; 32],
            },
        ];
        for k in &kinds {
            let s = make_test_state(32, k).unwrap();
            let norm: f64 = s.amps().iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-10);
        }
        assert!(make_test_state(1, &kinds[0]).is_err());
    }

    #[test]
    fn benchmark_has_dc_component() {
        let s = gaussian_64();
        // oracle: row 0 of the DFT applied to ψ
        let dft = crate::linalg::dft_matrix(64).unwrap();
        let dc = dft.apply(&s.ket()).amps()[0];
        assert!((dc - s.dc_component()).norm() < 1e-14);
        assert!(dc.norm() > 1e-3);
    }

    #[test]
    fn dc_null_rejected() {
        // a pure plane wave with nonzero momentum has no DC part
        let amps: Vec<ComplexScalar> = (0..16)
            .map(|x| ComplexScalar::from_polar(1.0, 2.0 * PI * 3.0 * x as f64 / 16.0))
            .collect();
        assert!(matches!(
            make_test_state(16, &StateKind::Custom { amps }),
            Err(Error::DcNull { .. })
        ));
    }

    #[test]
    fn scan_free_exact_recovers_state() {
        for kind in [
            StateKind::Gaussian {
                x0: 12.0,
                sigma: 5.0,
                k: 0.7,
            },
            StateKind::TwoPeak {
                x1: 5.0,
                x2: 20.0,
                sigma: 2.0,
                phase: 2.0,
            },
            StateKind::RandomSmooth { seed: 9, cutoff: 5 },
        ] {
            let s = make_test_state(32, &kind).unwrap();
            let r = scan_free(&s, Acquisition::Exact).unwrap();
            assert!(r.fidelity >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn eq14_identity_and_completeness() {
        for (n, seed) in [(8, 1), (32, 2), (64, 3)] {
            let s = make_test_state(n, &StateKind::RandomSmooth { seed, cutoff: 3 }).unwrap();
            let dist = scan_free_distribution(&s).unwrap();
            let raw = extract_complex_cells(&dist).unwrap();
            let dc = s.dc_component();
            let inv_sqrt_n = 1.0 / (n as f64).sqrt();
            for (x, cx) in raw.iter().enumerate() {
                let expect = dc.conj() * inv_sqrt_n * s.amps()[x];
                assert!((cx - expect).norm() < 1e-12);
            }
            let total = raw_total(&raw);
            assert!((total - c(dc.norm_sqr(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn flat_state_gives_flat_profile() {
        let n = 16;
        let flat = GridState::new(zero_momentum(n).into_amps()).unwrap();
        let r = scan_free(&flat, Acquisition::Exact).unwrap();
        for cx in &r.raw {
            assert!((cx - c(1.0 / n as f64, 0.0)).norm() < 1e-14);
        }
        let r = lundeen_scan(&flat, 0.1, Acquisition::Exact).unwrap();
        for cx in &r.raw {
            assert!((cx - r.raw[0]).norm() < 1e-13);
        }
    }

    #[test]
    fn scanning_exact_fidelity_improves_as_xi_shrinks() {
        let s = gaussian(32);
        let f = |xi| lundeen_scan(&s, xi, Acquisition::Exact).unwrap().fidelity;
        let (a, b, c_) = (f(0.2), f(0.1), f(0.05));
        assert!(a < b && b < c_, "{a} {b} {c_}");
        assert!(c_ >= 1.0 - 1e-3);
        assert!((1.0 - b) * 1.5 <= 1.0 - a);
        assert!(lundeen_scan(&s, 0.0, Acquisition::Exact).is_err());
        assert!(lundeen_scan(&s, 2.0, Acquisition::Exact).is_err());
    }

    #[test]
    fn recover_examples() {
        let s = gaussian(16);
        let scaled: Vec<ComplexScalar> = s.amps().iter().map(|z| z * c(-0.3, 2.0)).collect();
        assert!((fidelity(&recover(&scaled).unwrap(), &s).unwrap() - 1.0).abs() < 1e-14);
        let noisy: Vec<ComplexScalar> = s
            .amps()
            .iter()
            .enumerate()
            .map(|(x, z)| z + c(1e-8 * ((x * 7 % 5) as f64 - 2.0), -1e-8))
            .collect();
        assert!(fidelity(&recover(&noisy).unwrap(), &s).unwrap() >= 1.0 - 1e-12);
        assert!(recover(&[ZERO; 8]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let s = gaussian(8);
        assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-14);
        let e0 = GridState::new(Ket::basis(4, 0).into_amps()).unwrap();
        let e1 = GridState::new(Ket::basis(4, 1).into_amps()).unwrap();
        assert_eq!(fidelity(&e0, &e1).unwrap(), 0.0);
        let plus = GridState::normalized(vec![ONE, ONE, ZERO, ZERO]).unwrap();
        assert!((fidelity(&plus, &e0).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&s, &e0).is_err());
    }

    #[test]
    fn shot_runs_are_seeded() {
        let s = gaussian(16);
        let acq = Acquisition::Shots {
            total: 100_000,
            seed: 4,
            repetition: 0,
        };
        let a = scan_free(&s, acq).unwrap();
        let b = scan_free(&s, acq).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_shots, 100_000);
        let a = lundeen_scan(&s, 0.2, acq).unwrap();
        assert_eq!(a, lundeen_scan(&s, 0.2, acq).unwrap());
        assert_eq!(a.total_shots, 100_000 / 16 / 2 * 2 * 16);
    }

    #[test]
    fn shot_fidelity_grows_with_budget() {
        let s = gaussian(16);
        let med = |total| {
            median(
                (0..9)
                    .map(|r| {
                        scan_free(
                            &s,
                            Acquisition::Shots {
                                total,
                                seed: 1,
                                repetition: r,
                            },
                        )
                        .map_or(0.0, |res| res.fidelity)
                    })
                    .collect(),
            )
        };
        let (a, b, c_) = (med(10_000), med(100_000), med(1_000_000));
        assert!(a < b && b < c_, "{a} {b} {c_}");
    }

    #[test]
    fn compare_at_zero_target_uses_minimum_budgets() {
        let s = gaussian(16);
        let r = efficiency_compare(&s, 0.0, 0.1, 1).unwrap();
        assert_eq!(r.scanning.shots(), Some(32));
        assert_eq!(r.scan_free.shots(), Some(2));
        assert!(efficiency_compare(&s, 1.0, 0.1, 1).is_err());
    }

    #[test]
    fn compare_reports_scanning_floor() {
        let s = gaussian(16);
        let floor = lundeen_scan(&s, 0.2, Acquisition::Exact).unwrap().fidelity;
        let target = floor + 0.5 * (1.0 - floor);
        let r = efficiency_compare(&s, target, 0.2, 3).unwrap();
        assert!(matches!(r.scanning, Budget::Unreachable { .. }));
        assert!(r.scan_free.shots().is_some());
        assert!(r.ratio.is_none());
    }

    #[test]
    fn profile_csv_layout() {
        let s = gaussian(4);
        let r = scan_free(&s, Acquisition::Exact).unwrap();
        let csv = profile_csv(&r, &s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PROFILE_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,"));
        assert_eq!(lines[1].split(',').count(), 7);
    }
}
