//! Weak-value measurement protocols as exact-probability pipelines.
//!
//! Each [`ProtocolSpec`] knows which probe settings it needs, how to produce
//! the exact outcome distribution, and how to invert a (possibly empirical)
//! distribution into an estimate. The inversion also returns the gradient
//! of the estimate with respect to every outcome probability, which the
//! sampling layer uses for delta-method error bars.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::{
    extract_complex, joint_distribution, modular_value, weak_value, Boundary, ControlledTransform,
    OutcomeDistribution, ProbeSetting, SettingDistribution,
};
use crate::linalg::{
    ensure_dim, herm_eig, herm_func, spectral_norm, tensor, ComplexScalar, Ket, Operator, I, ONE,
    ZERO,
};

/// Denominators at or below this magnitude make an estimator undefined.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// Slack on `ξ·a_max ≤ 1` for the modified weak measurement.
pub const REALIZABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Operator {
        match self {
            Axis::X => Operator::pauli_x(),
            Axis::Y => Operator::pauli_y(),
            Axis::Z => Operator::pauli_z(),
        }
    }

    pub fn parse(s: &str) -> Result<Axis> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::invalid(
                "axis",
                format!("expected x, y or z, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    ConventionalWeak {
        xi: f64,
    },
    ModifiedWeak {
        xi: f64,
    },
    StrongProjector,
    StrongPauli {
        axis: Axis,
    },
    ModularValue {
        xi: f64,
    },
    ExpandedHilbert,
    /// Reads the entry `ρ(a, b)`; `b` is the post-selected ket of the boundary.
    KirkwoodDirac {
        a: Ket,
    },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::ConventionalWeak { .. } => "conventional_weak",
            Variant::ModifiedWeak { .. } => "modified_weak",
            Variant::StrongProjector => "strong_projector",
            Variant::StrongPauli { .. } => "strong_pauli",
            Variant::ModularValue { .. } => "modular_value",
            Variant::ExpandedHilbert => "expanded_hilbert",
            Variant::KirkwoodDirac { .. } => "kirkwood_dirac",
        }
    }

    pub fn xi(&self) -> Option<f64> {
        match self {
            Variant::ConventionalWeak { xi }
            | Variant::ModifiedWeak { xi }
            | Variant::ModularValue { xi } => Some(*xi),
            _ => None,
        }
    }

    pub fn required_settings(&self) -> &'static [ProbeSetting] {
        use ProbeSetting::*;
        match self {
            Variant::ConventionalWeak { .. }
            | Variant::ExpandedHilbert
            | Variant::KirkwoodDirac { .. } => &[X, Y],
            _ => &[X, Y, Z],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolBoundary {
    Pure { psi_i: Ket, psi_f: Ket },
    Mixed { initial: Operator, effect: Operator },
}

impl ProtocolBoundary {
    pub fn dim(&self) -> usize {
        match self {
            ProtocolBoundary::Pure { psi_i, .. } => psi_i.dim(),
            ProtocolBoundary::Mixed { initial, .. } => initial.dim(),
        }
    }

    pub fn to_framework(&self) -> Result<Boundary> {
        match self {
            ProtocolBoundary::Pure { psi_i, psi_f } => Boundary::pure(psi_i, psi_f),
            ProtocolBoundary::Mixed { initial, effect } => {
                Boundary::new(initial.clone(), effect.clone())
            }
        }
    }

    fn kets(&self) -> Result<(&Ket, &Ket)> {
        match self {
            ProtocolBoundary::Pure { psi_i, psi_f } => Ok((psi_i, psi_f)),
            ProtocolBoundary::Mixed { .. } => Err(Error::invalid(
                "boundary",
                "this protocol needs pure pre- and post-selected kets",
            )),
        }
    }
}

/// How the probe statistics are generated.
#[derive(Debug, Clone, PartialEq)]
enum Engine {
    /// Probe starts in `|0⟩` and is rotated by `exp(−iξÂ⊗σ_y)`, written
    /// through its branches `cos ξÂ` and `sin ξÂ`.
    Interaction { cos: Operator, sin: Operator },
    /// Probe-controlled transform acting on a `|+⟩` probe.
    Controlled(ControlledTransform),
    /// Joint state `(|ψf⟩|0⟩ + |ψᵢ⟩|1⟩)/√2` measured in the eigenspaces of `Â`.
    Expanded {
        eigenvalues: Vec<f64>,
        projectors: Vec<Operator>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    variant: Variant,
    observable: Operator,
    boundary: ProtocolBoundary,
    engine: Engine,
    target: ComplexScalar,
}

/// Gradient of an estimate with respect to the category probabilities of
/// each setting, aligned with [`SettingDistribution::categories`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub x: Option<Vec<ComplexScalar>>,
    pub y: Option<Vec<ComplexScalar>>,
    pub z: Option<Vec<ComplexScalar>>,
}

impl Gradient {
    pub fn get(&self, setting: ProbeSetting) -> Option<&[ComplexScalar]> {
        match setting {
            ProbeSetting::X => self.x.as_deref(),
            ProbeSetting::Y => self.y.as_deref(),
            ProbeSetting::Z => self.z.as_deref(),
        }
    }

    fn set(&mut self, setting: ProbeSetting, g: Vec<ComplexScalar>) {
        match setting {
            ProbeSetting::X => self.x = Some(g),
            ProbeSetting::Y => self.y = Some(g),
            ProbeSetting::Z => self.z = Some(g),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: ComplexScalar,
    pub gradient: Gradient,
    /// Second inversion route, where the protocol has one.
    pub alternate: Option<ComplexScalar>,
    /// Probability of passing post-selection, read off the X setting.
    pub success_probability: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ShotsUsed {
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub protocol: &'static str,
    #[serde(with = "complex_pair")]
    pub estimate: ComplexScalar,
    #[serde(with = "complex_pair")]
    pub exact_target: ComplexScalar,
    #[serde(with = "complex_pair")]
    pub bias: ComplexScalar,
    pub stderr: f64,
    pub success_probability: f64,
    pub shots_used: ShotsUsed,
    #[serde(with = "complex_pair::option")]
    pub alternate: Option<ComplexScalar>,
}

/// Complex numbers serialize as `[re, im]`.
pub mod complex_pair {
    use super::ComplexScalar;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(z: &ComplexScalar, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([z.re, z.im])
    }

    pub mod option {
        use super::ComplexScalar;
        use serde::Serializer;

        pub fn serialize<S: Serializer>(
            z: &Option<ComplexScalar>,
            s: S,
        ) -> Result<S::Ok, S::Error> {
            match z {
                Some(z) => s.collect_seq([z.re, z.im]),
                None => s.serialize_none(),
            }
        }
    }
}

fn degenerate(what: &str, value: f64) -> Error {
    Error::DegenerateEstimator(format!("{what} = {value:.3e}"))
}

/// `cos ξΠ = 1 + (cos ξ − 1)Π` and `sin ξΠ = sin ξ · Π` for a projector.
pub fn projector_branches(pi: &Operator, xi: f64) -> (Operator, Operator) {
    let id = Operator::identity(pi.dim());
    let cos = &id + &pi.scale_real(xi.cos() - 1.0);
    let sin = pi.scale_real(xi.sin());
    (cos, sin)
}

/// Exact probe statistics of the interaction protocol: after
/// `exp(−iξÂ⊗σ_y)` the post-selected probe is `a₀|0⟩ + a₁|1⟩` with
/// `a₀ = ⟨ψf|cos ξÂ|ψᵢ⟩` and `a₁ = ⟨ψf|sin ξÂ|ψᵢ⟩`.
pub fn interaction_distribution(
    cos: &Operator,
    sin: &Operator,
    psi_i: &Ket,
    psi_f: &Ket,
    settings: &[ProbeSetting],
) -> Result<OutcomeDistribution> {
    ensure_dim(cos.dim(), psi_i.dim())?;
    ensure_dim(cos.dim(), psi_f.dim())?;
    let a0 = cos.sandwich(psi_f, psi_i);
    let a1 = sin.sandwich(psi_f, psi_i);
    let mut dist = OutcomeDistribution::default();
    for &s in settings {
        let (up, down) = s.eigenkets();
        let prob = |e: &Ket| {
            let amp = e.amps()[0].conj() * a0 + e.amps()[1].conj() * a1;
            amp.norm_sqr()
        };
        let plus = prob(&up);
        let minus = prob(&down);
        dist.set(
            s,
            SettingDistribution {
                plus: vec![plus],
                minus: vec![minus],
                discard: (1.0 - plus - minus).max(0.0),
            },
        );
    }
    dist.validate()?;
    Ok(dist)
}

/// Aggregated statistics most estimators are written in.
struct Stats {
    c: ComplexScalar,
    x_kept: f64,
    p0: f64,
    p1: f64,
}

fn stats(dist: &OutcomeDistribution, settings: &[ProbeSetting]) -> Result<Stats> {
    for &s in settings {
        dist.require(s)?;
    }
    let x = dist.require(ProbeSetting::X)?;
    let (p0, p1) = match dist.get(ProbeSetting::Z) {
        Some(z) => (z.total_plus(), z.total_minus()),
        None => (0.0, 0.0),
    };
    Ok(Stats {
        c: extract_complex(dist)?,
        x_kept: x.kept(),
        p0,
        p1,
    })
}

/// Partial derivatives of an estimate with respect to the aggregated stats.
#[derive(Default)]
struct Partials {
    cx: ComplexScalar,
    cy: ComplexScalar,
    x_kept: ComplexScalar,
    p0: ComplexScalar,
    p1: ComplexScalar,
}

fn spread(dist: &OutcomeDistribution, settings: &[ProbeSetting], d: &Partials) -> Gradient {
    let mut g = Gradient::default();
    for &s in settings {
        let n = dist.get(s).map_or(0, |sd| sd.cells());
        let (plus, minus) = match s {
            ProbeSetting::X => (d.cx + d.x_kept, -d.cx + d.x_kept),
            ProbeSetting::Y => (d.cy, -d.cy),
            ProbeSetting::Z => (d.p0, d.p1),
        };
        let mut v = vec![plus; n];
        v.extend(std::iter::repeat_n(minus, n));
        v.push(ZERO);
        g.set(s, v);
    }
    g
}

impl ProtocolSpec {
    /// Weak-value protocol on a pure pre/post-selected pair.
    pub fn weak(variant: Variant, observable: Operator, psi_i: Ket, psi_f: Ket) -> Result<Self> {
        ProtocolSpec::new(variant, observable, ProtocolBoundary::Pure { psi_i, psi_f })
    }

    /// Kirkwood–Dirac entry `⟨b|a⟩⟨a|ρ|b⟩`.
    pub fn kirkwood_dirac(rho_in: Operator, a: Ket, b: Ket) -> Result<Self> {
        if !b.is_normalized() {
            return Err(Error::invalid("ket_b", "not normalized"));
        }
        let effect = b.projector();
        ProtocolSpec::new(
            Variant::KirkwoodDirac { a: a.clone() },
            a.projector(),
            ProtocolBoundary::Mixed {
                initial: rho_in,
                effect,
            },
        )
    }

    pub fn new(variant: Variant, observable: Operator, boundary: ProtocolBoundary) -> Result<Self> {
        ensure_dim(observable.dim(), boundary.dim())?;
        if !observable.is_hermitian() {
            return Err(Error::NotHermitian {
                residual: observable.hermitian_residual(),
            });
        }
        if let Some(xi) = variant.xi() {
            if !xi.is_finite() {
                return Err(Error::NonFinite("xi"));
            }
        }
        // validates the boundary regardless of the engine
        let framework_boundary = boundary.to_framework()?;
        let dim = observable.dim();
        let id = Operator::identity(dim);

        let (engine, target) = match &variant {
            Variant::ConventionalWeak { xi } => {
                if *xi <= 0.0 {
                    return Err(Error::invalid("xi", "must be positive"));
                }
                let (psi_i, psi_f) = boundary.kets()?;
                let cos = herm_func(&observable, |a| ONE * (xi * a).cos())?;
                let sin = herm_func(&observable, |a| ONE * (xi * a).sin())?;
                let target = weak_value(&observable, psi_i, psi_f)?;
                (Engine::Interaction { cos, sin }, target)
            }
            Variant::ModifiedWeak { xi } => {
                if *xi <= 0.0 {
                    return Err(Error::invalid("xi", "must be positive"));
                }
                let a_max = spectral_norm(&observable);
                if xi * a_max > 1.0 + REALIZABILITY_TOL {
                    return Err(Error::Unrealizable(format!(
                        "xi * a_max = {:.6} exceeds 1",
                        xi * a_max
                    )));
                }
                let (psi_i, psi_f) = boundary.kets()?;
                let target = weak_value(&observable, psi_i, psi_f)?;
                let ct = ControlledTransform::new(id, observable.scale_real(*xi))?;
                (Engine::Controlled(ct), target)
            }
            Variant::StrongProjector => {
                if !observable.is_projector() {
                    return Err(Error::invalid("observable", "not a projector"));
                }
                let (psi_i, psi_f) = boundary.kets()?;
                let target = weak_value(&observable, psi_i, psi_f)?;
                let ct = ControlledTransform::new(&id - &observable, observable.clone())?;
                (Engine::Controlled(ct), target)
            }
            Variant::StrongPauli { axis } => {
                if dim != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: dim,
                    });
                }
                let sigma = axis.pauli();
                if observable.distance(&sigma) > 1e-12 {
                    return Err(Error::invalid("observable", "must match the Pauli axis"));
                }
                let (psi_i, psi_f) = boundary.kets()?;
                let target = weak_value(&sigma, psi_i, psi_f)?;
                let ct = ControlledTransform::new(id, sigma)?;
                (Engine::Controlled(ct), target)
            }
            Variant::ModularValue { xi } => {
                let (psi_i, psi_f) = boundary.kets()?;
                let target = modular_value(&observable, *xi, psi_i, psi_f)?;
                let exp = herm_func(&observable, |a| (-I * xi * a).exp())?;
                let ct = ControlledTransform::new(id, exp)?;
                (Engine::Controlled(ct), target)
            }
            Variant::ExpandedHilbert => {
                let (psi_i, psi_f) = boundary.kets()?;
                let target = weak_value(&observable, psi_i, psi_f)?;
                let spaces = herm_eig(&observable)?.eigenspaces();
                (
                    Engine::Expanded {
                        eigenvalues: spaces.iter().map(|s| s.value).collect(),
                        projectors: spaces.into_iter().map(|s| s.projector).collect(),
                    },
                    target,
                )
            }
            Variant::KirkwoodDirac { a } => {
                ensure_dim(dim, a.dim())?;
                if !a.is_normalized() {
                    return Err(Error::invalid("ket_a", "not normalized"));
                }
                let rho = framework_boundary.initial();
                if !rho.is_density() {
                    return Err(Error::invalid("rho_in", "not a density operator"));
                }
                // tr(ρ |b⟩⟨b| |a⟩⟨a|) = ⟨b|a⟩⟨a|ρ|b⟩
                let target = rho
                    .matmul(framework_boundary.final_effect())
                    .matmul(&observable)
                    .trace();
                let ct = ControlledTransform::new(id, observable.clone())?;
                (Engine::Controlled(ct), target)
            }
        };

        Ok(ProtocolSpec {
            variant,
            observable,
            boundary,
            engine,
            target,
        })
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn name(&self) -> &'static str {
        self.variant.name()
    }

    pub fn observable(&self) -> &Operator {
        &self.observable
    }

    pub fn boundary(&self) -> &ProtocolBoundary {
        &self.boundary
    }

    pub fn required_settings(&self) -> &'static [ProbeSetting] {
        self.variant.required_settings()
    }

    /// The value the protocol aims at: weak value, modular value or KD entry.
    pub fn exact_target(&self) -> ComplexScalar {
        self.target
    }

    /// The probe-controlled transform, for protocols that use one.
    pub fn controlled_transform(&self) -> Option<&ControlledTransform> {
        match &self.engine {
            Engine::Controlled(ct) => Some(ct),
            _ => None,
        }
    }

    pub fn distribution(&self) -> Result<OutcomeDistribution> {
        let settings = self.required_settings();
        match &self.engine {
            Engine::Interaction { cos, sin } => {
                let (psi_i, psi_f) = self.boundary.kets()?;
                interaction_distribution(cos, sin, psi_i, psi_f, settings)
            }
            Engine::Controlled(ct) => {
                joint_distribution(ct, &self.boundary.to_framework()?, settings)
            }
            Engine::Expanded { projectors, .. } => {
                let (psi_i, psi_f) = self.boundary.kets()?;
                expanded_distribution(projectors, psi_i, psi_f, settings)
            }
        }
    }

    /// Inverts a distribution (exact or empirical) into an estimate.
    pub fn estimate(&self, dist: &OutcomeDistribution) -> Result<Estimate> {
        let settings = self.required_settings();
        if let Variant::ExpandedHilbert = self.variant {
            return self.expanded_estimate(dist);
        }
        let st = stats(dist, settings)?;
        let mut d = Partials::default();
        let mut alternate = None;
        let value = match &self.variant {
            Variant::ConventionalWeak { xi } => {
                if st.x_kept <= DENOMINATOR_TOL {
                    return Err(degenerate("P(+) + P(-)", st.x_kept));
                }
                let k = 2.0 * xi * st.x_kept;
                let v = st.c / k;
                d.cx = ONE / k;
                d.cy = I / k;
                d.x_kept = -v / st.x_kept;
                v
            }
            Variant::ModifiedWeak { xi } => ratio_to_p0(&st, 2.0 * xi, &mut d)?,
            Variant::StrongPauli { .. } | Variant::ModularValue { .. } => {
                ratio_to_p0(&st, 2.0, &mut d)?
            }
            Variant::StrongProjector => {
                // ⟨Π⟩w = r/(1+r) with r = C/2P(0), or equivalently
                // 1/(1 + conj(C/2P(1))); take the better conditioned one
                let via_p0 = ONE * (2.0 * st.p0) + st.c;
                let via_p1 = ONE * (2.0 * st.p1) + st.c.conj();
                let use_p0 = st.p0 >= st.p1;
                let (den, p) = if use_p0 {
                    (via_p0, st.p0)
                } else {
                    (via_p1, st.p1)
                };
                if p <= DENOMINATOR_TOL || den.norm() <= DENOMINATOR_TOL {
                    return Err(degenerate("|1 + r|", den.norm()));
                }
                let den2 = den * den;
                if use_p0 {
                    d.cx = ONE * (2.0 * st.p0) / den2;
                    d.cy = I * (2.0 * st.p0) / den2;
                    d.p0 = -2.0 * st.c / den2;
                    if st.p1 > DENOMINATOR_TOL && via_p1.norm() > DENOMINATOR_TOL {
                        alternate = Some(ONE * (2.0 * st.p1) / via_p1);
                    }
                    st.c / den
                } else {
                    d.cx = ONE * (-2.0 * st.p1) / den2;
                    d.cy = I * (2.0 * st.p1) / den2;
                    d.p1 = 2.0 * st.c.conj() / den2;
                    if st.p0 > DENOMINATOR_TOL && via_p0.norm() > DENOMINATOR_TOL {
                        alternate = Some(st.c / via_p0);
                    }
                    ONE * (2.0 * st.p1) / den
                }
            }
            Variant::KirkwoodDirac { .. } => {
                d.cx = ONE;
                d.cy = I;
                st.c
            }
            Variant::ExpandedHilbert => unreachable!("handled above"),
        };
        Ok(Estimate {
            value,
            gradient: spread(dist, settings, &d),
            alternate,
            success_probability: st.x_kept.clamp(0.0, 1.0),
        })
    }

    fn expanded_estimate(&self, dist: &OutcomeDistribution) -> Result<Estimate> {
        let Engine::Expanded { eigenvalues, .. } = &self.engine else {
            unreachable!("expanded variant always carries an expanded engine")
        };
        let x = dist.require(ProbeSetting::X)?;
        let y = dist.require(ProbeSetting::Y)?;
        ensure_dim(eigenvalues.len(), x.cells())?;
        ensure_dim(eigenvalues.len(), y.cells())?;
        let cells: Vec<ComplexScalar> = x
            .differences()
            .into_iter()
            .zip(y.differences())
            .map(|(re, im)| ComplexScalar::new(re, im))
            .collect();
        let total: ComplexScalar = cells.iter().sum();
        if total.norm() <= DENOMINATOR_TOL {
            return Err(degenerate("sum of C_j", total.norm()));
        }
        let weighted: ComplexScalar = cells.iter().zip(eigenvalues).map(|(c, a)| c * *a).sum();
        let value = weighted / total;
        let n = cells.len();
        let slope: Vec<ComplexScalar> = eigenvalues.iter().map(|a| (*a - value) / total).collect();
        let mut gx: Vec<ComplexScalar> = slope.clone();
        gx.extend(slope.iter().map(|s| -s));
        gx.push(ZERO);
        let mut gy: Vec<ComplexScalar> = slope.iter().map(|s| I * s).collect();
        gy.extend(slope.iter().map(|s| -I * s));
        gy.push(ZERO);
        debug_assert_eq!(gx.len(), 2 * n + 1);
        Ok(Estimate {
            value,
            gradient: Gradient {
                x: Some(gx),
                y: Some(gy),
                z: None,
            },
            alternate: None,
            success_probability: x.kept().clamp(0.0, 1.0),
        })
    }

    /// Exact-probability run.
    pub fn exact_report(&self) -> Result<EstimateReport> {
        let dist = self.distribution()?;
        let est = self.estimate(&dist)?;
        Ok(EstimateReport {
            protocol: self.name(),
            estimate: est.value,
            exact_target: self.target,
            bias: est.value - self.target,
            stderr: 0.0,
            success_probability: est.success_probability,
            shots_used: ShotsUsed::default(),
            alternate: est.alternate,
        })
    }
}

fn ratio_to_p0(st: &Stats, k: f64, d: &mut Partials) -> Result<ComplexScalar> {
    if st.p0 <= DENOMINATOR_TOL {
        return Err(degenerate("P(0)", st.p0));
    }
    let den = k * st.p0;
    let v = st.c / den;
    d.cx = ONE / den;
    d.cy = I / den;
    d.p0 = -v / st.p0;
    Ok(v)
}

/// Probe X/Y statistics of `(|ψf⟩|0⟩ + |ψᵢ⟩|1⟩)/√2`, resolved jointly with
/// the system projectors `Q_j`.
fn expanded_distribution(
    projectors: &[Operator],
    psi_i: &Ket,
    psi_f: &Ket,
    settings: &[ProbeSetting],
) -> Result<OutcomeDistribution> {
    let joint = Ket::normalized(
        tensor(psi_f, &Ket::zero())
            .amps()
            .iter()
            .zip(tensor(psi_i, &Ket::one()).amps())
            .map(|(a, b)| a + b)
            .collect(),
    )
    .map_err(|_| Error::DegenerateEstimator("joint state vanishes".into()))?;
    let mut dist = OutcomeDistribution::default();
    for &s in settings {
        let (up, down) = s.eigenkets();
        let prob = |q: &Operator, e: &Ket| tensor(q, &e.projector()).apply(&joint).norm_sqr();
        let plus: Vec<f64> = projectors.iter().map(|q| prob(q, &up)).collect();
        let minus: Vec<f64> = projectors.iter().map(|q| prob(q, &down)).collect();
        let kept: f64 = plus.iter().chain(&minus).sum();
        dist.set(
            s,
            SettingDistribution {
                plus,
                minus,
                discard: (1.0 - kept).max(0.0),
            },
        );
    }
    dist.validate()?;
    Ok(dist)
}

pub fn conventional_weak(
    a: &Operator,
    xi: f64,
    psi_i: &Ket,
    psi_f: &Ket,
) -> Result<EstimateReport> {
    ProtocolSpec::weak(
        Variant::ConventionalWeak { xi },
        a.clone(),
        psi_i.clone(),
        psi_f.clone(),
    )?
    .exact_report()
}

pub fn modified_weak(a: &Operator, xi: f64, psi_i: &Ket, psi_f: &Ket) -> Result<EstimateReport> {
    ProtocolSpec::weak(
        Variant::ModifiedWeak { xi },
        a.clone(),
        psi_i.clone(),
        psi_f.clone(),
    )?
    .exact_report()
}

pub fn strong_projector(pi: &Operator, psi_i: &Ket, psi_f: &Ket) -> Result<EstimateReport> {
    ProtocolSpec::weak(
        Variant::StrongProjector,
        pi.clone(),
        psi_i.clone(),
        psi_f.clone(),
    )?
    .exact_report()
}

pub fn strong_pauli(axis: Axis, psi_i: &Ket, psi_f: &Ket) -> Result<EstimateReport> {
    ProtocolSpec::weak(
        Variant::StrongPauli { axis },
        axis.pauli(),
        psi_i.clone(),
        psi_f.clone(),
    )?
    .exact_report()
}

pub fn modular_protocol(a: &Operator, xi: f64, psi_i: &Ket, psi_f: &Ket) -> Result<EstimateReport> {
    ProtocolSpec::weak(
        Variant::ModularValue { xi },
        a.clone(),
        psi_i.clone(),
        psi_f.clone(),
    )?
    .exact_report()
}

pub fn expanded_hilbert(a: &Operator, psi_i: &Ket, psi_f: &Ket) -> Result<EstimateReport> {
    ProtocolSpec::weak(
        Variant::ExpandedHilbert,
        a.clone(),
        psi_i.clone(),
        psi_f.clone(),
    )?
    .exact_report()
}

/// Per-eigenspace values `C_j = ⟨ψf|Q_j|ψᵢ⟩` read off the expanded protocol.
pub fn expanded_cells(a: &Operator, psi_i: &Ket, psi_f: &Ket) -> Result<Vec<(f64, ComplexScalar)>> {
    let spec = ProtocolSpec::weak(
        Variant::ExpandedHilbert,
        a.clone(),
        psi_i.clone(),
        psi_f.clone(),
    )?;
    let Engine::Expanded { eigenvalues, .. } = &spec.engine else {
        unreachable!("expanded variant always carries an expanded engine")
    };
    let dist = spec.distribution()?;
    let cells = crate::framework::extract_complex_cells(&dist)?;
    Ok(eigenvalues.iter().copied().zip(cells).collect())
}

pub fn kd_protocol(rho_in: &Operator, ket_a: &Ket, ket_b: &Ket) -> Result<ComplexScalar> {
    let spec = ProtocolSpec::kirkwood_dirac(rho_in.clone(), ket_a.clone(), ket_b.clone())?;
    Ok(spec.estimate(&spec.distribution()?)?.value)
}

/// The repo-wide benchmark: `Â = σ_z`, `ψᵢ = cos(π/3)|0⟩ + sin(π/3)|1⟩`,
/// `ψf = cos(π/3)|0⟩ − sin(π/3)|1⟩`; its weak value is −2.
pub fn anomalous_benchmark() -> (Operator, Ket, Ket) {
    let theta = std::f64::consts::FRAC_PI_3;
    (
        Operator::pauli_z(),
        Ket::qubit_angle(theta),
        Ket::qubit_angle(-theta),
    )
}
