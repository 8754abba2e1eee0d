//! Probe-controlled transformations and the joint outcome statistics they produce.
//!
//! The system starts in `ρᵢ`, the qubit probe in `|+⟩`. The joint state is
//! transformed by `T̂ = T₀⊗|0⟩⟨0| + T₁⊗|1⟩⟨1|`, the system is post-selected
//! with an effect `F`, and the probe is read in the X, Y or Z basis. The
//! differences of the X and Y outcome probabilities give
//!
//! ```text
//! P(+) − P(−) + i[P(+i) − P(−i)] = tr(ρᵢ T₀† F T₁)
//! ```
//!
//! Every run also has a `discard` outcome that collects both failure of a
//! non-unitary branch and failure of the post-selection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_dim, herm_func, spectral_norm, tensor, trace_of_product, ComplexScalar, Ket, Operator,
    CONTRACTION_TOL, I, ZERO,
};

/// Absolute floor on `|⟨ψf|ψᵢ⟩|` below which weak and modular values are undefined.
pub const OVERLAP_TOL: f64 = 1e-12;
/// Per-setting normalization tolerance of an [`OutcomeDistribution`].
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Basis in which the probe qubit is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ProbeSetting {
    /// `{|+⟩, |−⟩}`
    X,
    /// `{|+i⟩, |−i⟩}`
    Y,
    /// `{|0⟩, |1⟩}`
    Z,
}

impl ProbeSetting {
    pub const ALL: [ProbeSetting; 3] = [ProbeSetting::X, ProbeSetting::Y, ProbeSetting::Z];

    /// Labels of the `+1` and `−1` eigenstate outcomes.
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            ProbeSetting::X => ["+", "-"],
            ProbeSetting::Y => ["+i", "-i"],
            ProbeSetting::Z => ["0", "1"],
        }
    }

    pub fn index(self) -> usize {
        match self {
            ProbeSetting::X => 0,
            ProbeSetting::Y => 1,
            ProbeSetting::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbeSetting::X => "x",
            ProbeSetting::Y => "y",
            ProbeSetting::Z => "z",
        }
    }

    /// The `+1` and `−1` eigenkets of the corresponding Pauli operator.
    pub fn eigenkets(self) -> (Ket, Ket) {
        match self {
            ProbeSetting::X => (Ket::plus(), Ket::minus()),
            ProbeSetting::Y => (Ket::plus_i(), Ket::minus_i()),
            ProbeSetting::Z => (Ket::zero(), Ket::one()),
        }
    }
}

/// The branch pair `(T₀, T₁)` of `T̂ = T₀⊗|0⟩⟨0| + T₁⊗|1⟩⟨1|`.
///
/// Both branches must be contractions to be implementable.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledTransform {
    t0: Operator,
    t1: Operator,
}

impl ControlledTransform {
    pub fn new(t0: Operator, t1: Operator) -> Result<Self> {
        ensure_dim(t0.dim(), t1.dim())?;
        for (name, t) in [("T0", &t0), ("T1", &t1)] {
            let norm = spectral_norm(t);
            if norm > 1.0 + CONTRACTION_TOL {
                return Err(Error::Unrealizable(format!(
                    "{name} has spectral norm {norm:.12} > 1"
                )));
            }
        }
        Ok(ControlledTransform { t0, t1 })
    }

    pub fn t0(&self) -> &Operator {
        &self.t0
    }

    pub fn t1(&self) -> &Operator {
        &self.t1
    }

    pub fn dim(&self) -> usize {
        self.t0.dim()
    }

    /// The full `2d × 2d` operator `T̂` on system ⊗ probe.
    pub fn joint_operator(&self) -> Operator {
        let p0 = Ket::zero().projector();
        let p1 = Ket::one().projector();
        &tensor(&self.t0, &p0) + &tensor(&self.t1, &p1)
    }
}

/// Pre-selection state and post-selection effect.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    initial: Operator,
    final_effect: Operator,
}

impl Boundary {
    pub fn new(initial: Operator, final_effect: Operator) -> Result<Self> {
        ensure_dim(initial.dim(), final_effect.dim())?;
        if !initial.is_density() {
            return Err(Error::invalid(
                "initial state",
                "must be Hermitian, positive semidefinite and unit trace",
            ));
        }
        validate_effect(&final_effect, "final effect")?;
        Ok(Boundary {
            initial,
            final_effect,
        })
    }

    /// `(|ψᵢ⟩⟨ψᵢ|, |ψf⟩⟨ψf|)` for normalized kets.
    pub fn pure(psi_i: &Ket, psi_f: &Ket) -> Result<Self> {
        ensure_dim(psi_i.dim(), psi_f.dim())?;
        for (name, k) in [("psi_i", psi_i), ("psi_f", psi_f)] {
            if !k.is_normalized() {
                return Err(Error::invalid(name, format!("norm² = {}", k.norm_sqr())));
            }
        }
        Ok(Boundary {
            initial: psi_i.projector(),
            final_effect: psi_f.projector(),
        })
    }

    pub fn initial(&self) -> &Operator {
        &self.initial
    }

    pub fn final_effect(&self) -> &Operator {
        &self.final_effect
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }
}

fn validate_effect(effect: &Operator, what: &'static str) -> Result<()> {
    if !effect.is_hermitian() {
        return Err(Error::invalid(what, "must be Hermitian"));
    }
    if !effect.is_psd() {
        return Err(Error::invalid(what, "must be positive semidefinite"));
    }
    if !effect.is_contraction() {
        return Err(Error::invalid(what, "spectral norm exceeds one"));
    }
    Ok(())
}

/// Outcome probabilities for one probe setting.
///
/// `plus[k]` / `minus[k]` are the probabilities that the branch succeeded,
/// system outcome `k` was observed and the probe landed in the `+1` / `−1`
/// eigenstate of the setting. A plain post-selection has a single cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingDistribution {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub discard: f64,
}

impl SettingDistribution {
    pub fn cells(&self) -> usize {
        self.plus.len()
    }

    pub fn total_plus(&self) -> f64 {
        self.plus.iter().sum()
    }

    pub fn total_minus(&self) -> f64 {
        self.minus.iter().sum()
    }

    /// `Σ plus + Σ minus`: probability of any recorded (non-discard) outcome.
    pub fn kept(&self) -> f64 {
        self.total_plus() + self.total_minus()
    }

    pub fn total(&self) -> f64 {
        self.kept() + self.discard
    }

    /// `plus[k] − minus[k]` per cell.
    pub fn differences(&self) -> Vec<f64> {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| p - m)
            .collect()
    }

    /// Category probabilities in sampling order: plus cells, minus cells, discard.
    pub fn categories(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.cells() + 1);
        v.extend_from_slice(&self.plus);
        v.extend_from_slice(&self.minus);
        v.push(self.discard);
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.plus.len() != self.minus.len() || self.plus.is_empty() {
            return Err(Error::InvalidDistribution(
                "plus/minus cell counts differ or are empty".into(),
            ));
        }
        for &p in self.plus.iter().chain(&self.minus).chain([&self.discard]) {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
        }
        let total = self.total();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(())
    }
}

/// Exact outcome probabilities, one entry per populated probe setting.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub x: Option<SettingDistribution>,
    pub y: Option<SettingDistribution>,
    pub z: Option<SettingDistribution>,
}

impl OutcomeDistribution {
    pub fn get(&self, setting: ProbeSetting) -> Option<&SettingDistribution> {
        match setting {
            ProbeSetting::X => self.x.as_ref(),
            ProbeSetting::Y => self.y.as_ref(),
            ProbeSetting::Z => self.z.as_ref(),
        }
    }

    pub fn require(&self, setting: ProbeSetting) -> Result<&SettingDistribution> {
        self.get(setting).ok_or(Error::MissingSetting(setting))
    }

    pub fn set(&mut self, setting: ProbeSetting, dist: SettingDistribution) {
        match setting {
            ProbeSetting::X => self.x = Some(dist),
            ProbeSetting::Y => self.y = Some(dist),
            ProbeSetting::Z => self.z = Some(dist),
        }
    }

    pub fn settings(&self) -> Vec<ProbeSetting> {
        ProbeSetting::ALL
            .into_iter()
            .filter(|s| self.get(*s).is_some())
            .collect()
    }

    /// Merges the settings populated in `other` into `self`.
    pub fn merge(mut self, other: OutcomeDistribution) -> Self {
        for s in ProbeSetting::ALL {
            if let Some(d) = other.get(s) {
                self.set(s, d.clone());
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut cells = None;
        for s in self.settings() {
            let d = self.require(s)?;
            d.validate()?;
            match cells {
                None => cells = Some(d.cells()),
                Some(n) if n != d.cells() => {
                    return Err(Error::InvalidDistribution(
                        "settings resolve different numbers of system outcomes".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Intermediate per-outcome quantities: `tr(T₀ρT₀†F)`, `tr(T₁ρT₁†F)`, `tr(ρT₀†FT₁)`.
struct BranchTerms {
    upper: f64,
    lower: f64,
    cross: ComplexScalar,
}

fn setting_from_terms(terms: &[BranchTerms], setting: ProbeSetting) -> SettingDistribution {
    let clamp = |p: f64| p.max(0.0);
    let (plus, minus): (Vec<f64>, Vec<f64>) = terms
        .iter()
        .map(|t| {
            let base = t.upper + t.lower;
            match setting {
                ProbeSetting::X => (
                    clamp(0.25 * (base + 2.0 * t.cross.re)),
                    clamp(0.25 * (base - 2.0 * t.cross.re)),
                ),
                ProbeSetting::Y => (
                    clamp(0.25 * (base + 2.0 * t.cross.im)),
                    clamp(0.25 * (base - 2.0 * t.cross.im)),
                ),
                ProbeSetting::Z => (clamp(0.5 * t.upper), clamp(0.5 * t.lower)),
            }
        })
        .unzip();
    let kept: f64 = plus.iter().sum::<f64>() + minus.iter().sum::<f64>();
    SettingDistribution {
        plus,
        minus,
        discard: (1.0 - kept).clamp(0.0, 1.0),
    }
}

struct BranchProducts {
    upper: Operator,
    lower: Operator,
    cross: Operator,
}

impl BranchProducts {
    fn new(ct: &ControlledTransform, initial: &Operator) -> Self {
        let (t0, t1) = (ct.t0(), ct.t1());
        BranchProducts {
            upper: t0.matmul(initial).matmul(&t0.dagger()),
            lower: t1.matmul(initial).matmul(&t1.dagger()),
            // tr(ρ T₀† F T₁) = tr(T₁ ρ T₀† F)
            cross: t1.matmul(initial).matmul(&t0.dagger()),
        }
    }

    fn terms_for_effect(&self, effect: &Operator) -> BranchTerms {
        BranchTerms {
            upper: trace_of_product(&self.upper, effect).re,
            lower: trace_of_product(&self.lower, effect).re,
            cross: trace_of_product(&self.cross, effect),
        }
    }

    fn terms_for_ket(&self, b: &Ket) -> BranchTerms {
        BranchTerms {
            upper: self.upper.sandwich(b, b).re,
            lower: self.lower.sandwich(b, b).re,
            cross: self.cross.sandwich(b, b),
        }
    }
}

fn check_total(dist: &OutcomeDistribution) -> Result<()> {
    for s in dist.settings() {
        let kept = dist.require(s)?.kept();
        if kept > 1.0 + 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "recorded outcomes carry probability {kept} > 1"
            )));
        }
    }
    Ok(())
}

/// Exact probabilities for a single probe setting.
pub fn joint_probabilities(
    ct: &ControlledTransform,
    boundary: &Boundary,
    setting: ProbeSetting,
) -> Result<OutcomeDistribution> {
    joint_distribution(ct, boundary, &[setting])
}

/// Exact probabilities for several probe settings at once.
pub fn joint_distribution(
    ct: &ControlledTransform,
    boundary: &Boundary,
    settings: &[ProbeSetting],
) -> Result<OutcomeDistribution> {
    ensure_dim(ct.dim(), boundary.dim())?;
    let products = BranchProducts::new(ct, boundary.initial());
    let terms = [products.terms_for_effect(boundary.final_effect())];
    let mut dist = OutcomeDistribution::default();
    for &s in settings {
        dist.set(s, setting_from_terms(&terms, s));
    }
    check_total(&dist)?;
    Ok(dist)
}

/// Probabilities when the final system measurement resolves several outcomes.
///
/// Each effect becomes one cell; effects must be PSD and sum to at most the
/// identity.
pub fn resolved_distribution(
    ct: &ControlledTransform,
    initial: &Operator,
    effects: &[Operator],
    settings: &[ProbeSetting],
) -> Result<OutcomeDistribution> {
    ensure_dim(ct.dim(), initial.dim())?;
    if !initial.is_density() {
        return Err(Error::invalid("initial state", "not a density operator"));
    }
    if effects.is_empty() {
        return Err(Error::invalid("effects", "at least one effect required"));
    }
    let mut sum = Operator::zeros(ct.dim());
    for e in effects {
        ensure_dim(ct.dim(), e.dim())?;
        validate_effect(e, "effect")?;
        sum = &sum + e;
    }
    validate_effect(&sum, "sum of effects")?;
    let products = BranchProducts::new(ct, initial);
    let terms: Vec<BranchTerms> = effects
        .iter()
        .map(|e| products.terms_for_effect(e))
        .collect();
    let mut dist = OutcomeDistribution::default();
    for &s in settings {
        dist.set(s, setting_from_terms(&terms, s));
    }
    check_total(&dist)?;
    Ok(dist)
}

/// Probabilities when the system is measured projectively in an orthonormal basis.
///
/// `basis` holds the basis kets as columns; cell `k` is outcome `|b_k⟩`.
pub fn basis_resolved_distribution(
    ct: &ControlledTransform,
    initial: &Operator,
    basis: &Operator,
    settings: &[ProbeSetting],
) -> Result<OutcomeDistribution> {
    ensure_dim(ct.dim(), initial.dim())?;
    ensure_dim(ct.dim(), basis.dim())?;
    if !initial.is_density() {
        return Err(Error::invalid("initial state", "not a density operator"));
    }
    if !basis.is_unitary() {
        return Err(Error::invalid(
            "measurement basis",
            "columns are not orthonormal",
        ));
    }
    let products = BranchProducts::new(ct, initial);
    let terms: Vec<BranchTerms> = basis
        .columns()
        .iter()
        .map(|b| products.terms_for_ket(b))
        .collect();
    let mut dist = OutcomeDistribution::default();
    for &s in settings {
        dist.set(s, setting_from_terms(&terms, s));
    }
    Ok(dist)
}

/// `P(+) − P(−) + i[P(+i) − P(−i)]`, summed over all resolved cells.
pub fn extract_complex(dist: &OutcomeDistribution) -> Result<ComplexScalar> {
    Ok(extract_complex_cells(dist)?.into_iter().sum())
}

/// The complex value carried by each resolved system outcome.
pub fn extract_complex_cells(dist: &OutcomeDistribution) -> Result<Vec<ComplexScalar>> {
    let x = dist.require(ProbeSetting::X)?;
    let y = dist.require(ProbeSetting::Y)?;
    if x.cells() != y.cells() {
        return Err(Error::InvalidDistribution(
            "X and Y settings resolve different cells".into(),
        ));
    }
    Ok(x.differences()
        .into_iter()
        .zip(y.differences())
        .map(|(re, im)| ComplexScalar::new(re, im))
        .collect())
}

/// `tr(ρᵢ T₀† F T₁)`, the value the probe statistics encode.
pub fn framework_value(ct: &ControlledTransform, boundary: &Boundary) -> Result<ComplexScalar> {
    ensure_dim(ct.dim(), boundary.dim())?;
    Ok(boundary
        .initial()
        .matmul(&ct.t0().dagger())
        .matmul(boundary.final_effect())
        .matmul(ct.t1())
        .trace())
}

fn checked_overlap(psi_i: &Ket, psi_f: &Ket) -> Result<ComplexScalar> {
    let overlap = psi_f.checked_inner(psi_i)?;
    let scale = psi_i.norm() * psi_f.norm();
    let normalized = if scale > 0.0 {
        overlap.norm() / scale
    } else {
        0.0
    };
    if normalized <= OVERLAP_TOL {
        return Err(Error::UndefinedWeakValue {
            overlap: normalized,
        });
    }
    Ok(overlap)
}

/// `⟨ψf|Â|ψᵢ⟩ / ⟨ψf|ψᵢ⟩`
pub fn weak_value(a: &Operator, psi_i: &Ket, psi_f: &Ket) -> Result<ComplexScalar> {
    ensure_dim(a.dim(), psi_i.dim())?;
    let overlap = checked_overlap(psi_i, psi_f)?;
    Ok(a.sandwich(psi_f, psi_i) / overlap)
}

/// `⟨ψf|e^{−iξÂ}|ψᵢ⟩ / ⟨ψf|ψᵢ⟩` for Hermitian `Â`.
pub fn modular_value(a: &Operator, xi: f64, psi_i: &Ket, psi_f: &Ket) -> Result<ComplexScalar> {
    ensure_dim(a.dim(), psi_i.dim())?;
    let overlap = checked_overlap(psi_i, psi_f)?;
    let exp = herm_func(a, |x| (-I * xi * x).exp())?;
    Ok(exp.sandwich(psi_f, psi_i) / overlap)
}

/// Kirkwood–Dirac grid `ρ(a, b) = ⟨b|a⟩⟨a|ρ|b⟩`, indexed `[a][b]`.
///
/// The columns of `basis_a` and `basis_b` are the two measurement bases.
pub fn kirkwood_dirac(
    rho: &Operator,
    basis_a: &Operator,
    basis_b: &Operator,
) -> Result<Vec<Vec<ComplexScalar>>> {
    ensure_dim(rho.dim(), basis_a.dim())?;
    ensure_dim(rho.dim(), basis_b.dim())?;
    if !rho.is_density() {
        return Err(Error::invalid("rho_in", "not a density operator"));
    }
    if !basis_a.is_unitary() || !basis_b.is_unitary() {
        return Err(Error::invalid("basis", "columns are not orthonormal"));
    }
    let a_kets = basis_a.columns();
    let b_kets = basis_b.columns();
    Ok(a_kets
        .iter()
        .map(|a| {
            b_kets
                .iter()
                .map(|b| b.inner(a) * rho.sandwich(a, b))
                .collect()
        })
        .collect())
}

/// Sum of every entry of a Kirkwood–Dirac grid.
pub fn grid_total(grid: &[Vec<ComplexScalar>]) -> ComplexScalar {
    grid.iter().flatten().fold(ZERO, |acc, z| acc + z)
}
