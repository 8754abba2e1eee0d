//! JSON run configurations and their translation into library objects.
//!
//! Every struct rejects unknown fields. Semantic checks report the dotted
//! path of the offending field so the CLI can name it.

use serde::Deserialize;

use crate::diagram::{Diagram, DiagramFile};
use crate::error::Error;
use crate::linalg::{c, dft_matrix, ComplexScalar, Ket, Operator, ONE};
use crate::protocols::{anomalous_benchmark, Axis, ProtocolSpec, Variant};
use crate::sampling::{SamplerConfig, Shots};
use crate::wavefunction::{gaussian_64, make_test_state, GridState, StateKind};

/// A configuration problem: which field, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Pulls the field name out of a serde message where possible.
    pub fn from_json(err: &serde_json::Error) -> Self {
        let text = err.to_string();
        let field = text
            .split('`')
            .nth(1)
            .filter(|_| text.contains("field"))
            .unwrap_or("config")
            .to_string();
        ConfigError::new(field, text)
    }
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

fn lib(field: &str) -> impl Fn(Error) -> ConfigError + '_ {
    move |e| ConfigError::new(field, e.to_string())
}

pub type Pair = [f64; 2];

fn complex(p: &Pair) -> ComplexScalar {
    c(p[0], p[1])
}

fn ket_from(field: &str, amps: &[Pair]) -> ConfigResult<Ket> {
    if amps.is_empty() {
        return Err(ConfigError::new(field, "must not be empty"));
    }
    let ket = Ket::new(amps.iter().map(complex).collect()).map_err(lib(field))?;
    if !ket.is_normalized() {
        return Err(ConfigError::new(field, "ket is not normalized"));
    }
    Ok(ket)
}

fn matrix_from(field: &str, rows: &[Vec<Pair>]) -> ConfigResult<Operator> {
    let rows: Vec<Vec<ComplexScalar>> = rows
        .iter()
        .map(|r| r.iter().map(complex).collect())
        .collect();
    Operator::from_rows(rows).map_err(lib(field))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub variant: String,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub axis: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ObservableConfig {
    Named(String),
    Matrix(Vec<Vec<Pair>>),
}

impl ObservableConfig {
    fn operator(&self, dim: usize) -> ConfigResult<Operator> {
        let field = "observable";
        match self {
            ObservableConfig::Named(name) => match name.as_str() {
                "sigma_x" => Ok(Operator::pauli_x()),
                "sigma_y" => Ok(Operator::pauli_y()),
                "sigma_z" => Ok(Operator::pauli_z()),
                "identity" => Ok(Operator::identity(dim)),
                "projector_0" => Ok(Ket::basis(dim, 0).projector()),
                other => Err(ConfigError::new(
                    field,
                    format!("unknown observable {other:?}"),
                )),
            },
            ObservableConfig::Matrix(rows) => matrix_from(field, rows),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub psi_i: Option<Vec<Pair>>,
    #[serde(default)]
    pub psi_f: Option<Vec<Pair>>,
}

impl BoundaryConfig {
    fn kets(&self) -> ConfigResult<(Ket, Ket)> {
        match (&self.preset, &self.psi_i, &self.psi_f) {
            (Some(p), None, None) if p == "anomalous" => {
                let (_, pi, pf) = anomalous_benchmark();
                Ok((pi, pf))
            }
            (Some(p), None, None) => Err(ConfigError::new(
                "boundary.preset",
                format!("unknown preset {p:?}"),
            )),
            (None, Some(pi), Some(pf)) => Ok((
                ket_from("boundary.psi_i", pi)?,
                ket_from("boundary.psi_f", pf)?,
            )),
            (Some(_), _, _) => Err(ConfigError::new(
                "boundary",
                "give either a preset or explicit kets",
            )),
            (None, None, _) => Err(ConfigError::new("boundary.psi_i", "missing")),
            (None, _, None) => Err(ConfigError::new("boundary.psi_f", "missing")),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotsConfig {
    #[serde(default)]
    pub x: u64,
    #[serde(default)]
    pub y: u64,
    #[serde(default)]
    pub z: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default)]
    pub seed: u64,
    /// Per-setting budgets.
    #[serde(default)]
    pub shots: Option<ShotsConfig>,
    /// Alternative to `shots`: split evenly over the protocol's settings.
    #[serde(default)]
    pub total_shots: Option<u64>,
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default)]
    pub bootstrap: Option<usize>,
}

impl SamplerSection {
    pub fn to_config(
        &self,
        spec: &ProtocolSpec,
        seed_override: Option<u64>,
    ) -> ConfigResult<SamplerConfig> {
        let settings = spec.required_settings();
        let shots = match (&self.shots, self.total_shots) {
            (Some(s), None) => Shots {
                x: s.x,
                y: s.y,
                z: s.z,
            },
            (None, Some(total)) => Shots::equal_split(total, settings),
            (None, None) => return Err(ConfigError::new("sampler.shots", "missing")),
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "sampler.total_shots",
                    "give either shots or total_shots",
                ))
            }
        };
        for &s in settings {
            if shots.get(s) == 0 {
                return Err(ConfigError::new(
                    format!("sampler.shots.{}", s.name().to_lowercase()),
                    format!("{} needs a positive budget", spec.name()),
                ));
            }
        }
        let reps = self.reps.unwrap_or(1);
        if reps == 0 {
            return Err(ConfigError::new("sampler.reps", "must be positive"));
        }
        if self.bootstrap == Some(0) {
            return Err(ConfigError::new("sampler.bootstrap", "must be positive"));
        }
        Ok(SamplerConfig {
            seed: seed_override.unwrap_or(self.seed),
            shots,
            repetitions: reps,
            bootstrap: self.bootstrap,
        })
    }
}

/// Shared by `weak-value` and `sweep-xi`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakValueConfig {
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub observable: Option<ObservableConfig>,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub xi_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub sampler: Option<SamplerSection>,
    #[serde(default)]
    pub exact: bool,
}

fn positive_xi(field: &str, xi: Option<f64>) -> ConfigResult<f64> {
    match xi {
        None => Err(ConfigError::new(field, "missing")),
        Some(x) if !x.is_finite() => Err(ConfigError::new(field, "must be finite")),
        Some(x) if x <= 0.0 => Err(ConfigError::new(field, "must be positive")),
        Some(x) => Ok(x),
    }
}

impl WeakValueConfig {
    pub fn preset(name: &str, sweep: bool) -> ConfigResult<Self> {
        if name != "anomalous" {
            return Err(ConfigError::new(
                "preset",
                format!("unknown preset {name:?}"),
            ));
        }
        let boundary = BoundaryConfig {
            preset: Some("anomalous".into()),
            ..Default::default()
        };
        Ok(if sweep {
            WeakValueConfig {
                protocol: ProtocolConfig {
                    variant: "conventional_weak".into(),
                    xi: None,
                    axis: None,
                },
                observable: None,
                boundary,
                xi_grid: Some(vec![0.05, 0.1, 0.2]),
                sampler: Some(SamplerSection {
                    seed: 0,
                    shots: Some(ShotsConfig {
                        x: 100_000,
                        y: 100_000,
                        z: 0,
                    }),
                    total_shots: None,
                    reps: Some(100),
                    bootstrap: None,
                }),
                exact: false,
            }
        } else {
            WeakValueConfig {
                protocol: ProtocolConfig {
                    variant: "modified_weak".into(),
                    xi: Some(1.0),
                    axis: None,
                },
                observable: None,
                boundary,
                xi_grid: None,
                sampler: None,
                exact: true,
            }
        })
    }

    /// Checks the variant name and its parameters without building anything.
    /// `xi` comes from the grid when sweeping.
    pub fn variant(&self, xi: Option<f64>) -> ConfigResult<Variant> {
        let p = &self.protocol;
        let xi_field = "protocol.xi";
        let xi = xi.or(p.xi);
        let needs_xi = matches!(
            p.variant.as_str(),
            "conventional_weak" | "modified_weak" | "modular_value"
        );
        if !needs_xi && p.xi.is_some() {
            return Err(ConfigError::new(
                xi_field,
                format!("not used by {}", p.variant),
            ));
        }
        if p.variant != "strong_pauli" && p.axis.is_some() {
            return Err(ConfigError::new(
                "protocol.axis",
                format!("not used by {}", p.variant),
            ));
        }
        Ok(match p.variant.as_str() {
            "conventional_weak" => Variant::ConventionalWeak {
                xi: positive_xi(xi_field, xi)?,
            },
            "modified_weak" => Variant::ModifiedWeak {
                xi: positive_xi(xi_field, xi)?,
            },
            "modular_value" => match xi {
                Some(x) if x.is_finite() => Variant::ModularValue { xi: x },
                Some(_) => return Err(ConfigError::new(xi_field, "must be finite")),
                None => return Err(ConfigError::new(xi_field, "missing")),
            },
            "strong_projector" => Variant::StrongProjector,
            "expanded_hilbert" => Variant::ExpandedHilbert,
            "strong_pauli" => {
                let axis = p
                    .axis
                    .as_deref()
                    .ok_or_else(|| ConfigError::new("protocol.axis", "missing"))?;
                Variant::StrongPauli {
                    axis: Axis::parse(axis).map_err(lib("protocol.axis"))?,
                }
            }
            other => {
                return Err(ConfigError::new(
                    "protocol.variant",
                    format!("unknown protocol {other:?}"),
                ))
            }
        })
    }

    pub fn kets(&self) -> ConfigResult<(Ket, Ket)> {
        self.boundary.kets()
    }

    pub fn observable(&self, variant: &Variant, dim: usize) -> ConfigResult<Operator> {
        let op = match (&self.observable, variant) {
            (None, Variant::StrongPauli { axis }) => axis.pauli(),
            (None, Variant::StrongProjector) => Ket::basis(dim, 0).projector(),
            (None, _) if dim == 2 => Operator::pauli_z(),
            (None, _) => return Err(ConfigError::new("observable", "missing")),
            (Some(o), _) => o.operator(dim)?,
        };
        if op.dim() != dim {
            return Err(ConfigError::new(
                "observable",
                format!("dimension {} does not match the boundary ({dim})", op.dim()),
            ));
        }
        if !op.is_hermitian() {
            return Err(ConfigError::new("observable", "not Hermitian"));
        }
        Ok(op)
    }

    pub fn grid(&self) -> ConfigResult<Vec<f64>> {
        match &self.xi_grid {
            None => Err(ConfigError::new("xi_grid", "missing")),
            Some(g) if g.is_empty() => Err(ConfigError::new("xi_grid", "must not be empty")),
            Some(g) => Ok(g.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub x0: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub x1: Option<f64>,
    #[serde(default)]
    pub x2: Option<f64>,
    #[serde(default)]
    pub phase: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub amps: Option<Vec<Pair>>,
}

fn need<T: Copy>(field: &str, v: Option<T>) -> ConfigResult<T> {
    v.ok_or_else(|| ConfigError::new(field, "missing"))
}

impl StateConfig {
    /// Library errors such as a DC-null state are passed through untouched
    /// so the CLI can classify them.
    pub fn build(&self) -> ConfigResult<std::result::Result<GridState, Error>> {
        if let Some(p) = &self.preset {
            if self.kind.is_some() {
                return Err(ConfigError::new("state", "give either a preset or a kind"));
            }
            return match p.as_str() {
                "gaussian64" => Ok(Ok(gaussian_64())),
                other => Err(ConfigError::new(
                    "state.preset",
                    format!("unknown preset {other:?}"),
                )),
            };
        }
        let kind = self
            .kind
            .as_deref()
            .ok_or_else(|| ConfigError::new("state.kind", "missing"))?;
        let kind = match kind {
            "gaussian" => StateKind::Gaussian {
                x0: need("state.x0", self.x0)?,
                sigma: need("state.sigma", self.sigma)?,
                k: self.k.unwrap_or(0.0),
            },
            "two_peak" => StateKind::TwoPeak {
                x1: need("state.x1", self.x1)?,
                x2: need("state.x2", self.x2)?,
                sigma: need("state.sigma", self.sigma)?,
                phase: self.phase.unwrap_or(0.0),
            },
            "random_smooth" => StateKind::RandomSmooth {
                seed: self.seed.unwrap_or(0),
                cutoff: need("state.cutoff", self.cutoff)?,
            },
            "custom" => StateKind::Custom {
                amps: self
                    .amps
                    .as_ref()
                    .ok_or_else(|| ConfigError::new("state.amps", "missing"))?
                    .iter()
                    .map(complex)
                    .collect(),
            },
            other => {
                return Err(ConfigError::new(
                    "state.kind",
                    format!("unknown kind {other:?}"),
                ))
            }
        };
        let n = match (&kind, self.n) {
            (StateKind::Custom { amps }, None) => amps.len(),
            (_, Some(n)) => n,
            (_, None) => return Err(ConfigError::new("state.n", "missing")),
        };
        if n < 2 {
            return Err(ConfigError::new("state.n", "grid needs at least 2 points"));
        }
        Ok(make_test_state(n, &kind))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavefunctionConfig {
    pub method: String,
    pub state: StateConfig,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub target_fidelity: Option<f64>,
    #[serde(default)]
    pub total_shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exact: bool,
}

impl WavefunctionConfig {
    pub fn preset(name: &str) -> ConfigResult<Self> {
        if name != "gaussian64" {
            return Err(ConfigError::new(
                "preset",
                format!("unknown preset {name:?}"),
            ));
        }
        Ok(WavefunctionConfig {
            method: "scan_free".into(),
            state: StateConfig {
                preset: Some("gaussian64".into()),
                ..Default::default()
            },
            xi: None,
            target_fidelity: None,
            total_shots: None,
            seed: 0,
            exact: true,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramConfig {
    #[serde(default)]
    pub diagram: Option<DiagramFile>,
    #[serde(default)]
    pub preset: Option<String>,
    pub action: String,
    #[serde(default)]
    pub k: Option<i64>,
    #[serde(default)]
    pub index: Option<usize>,
}

/// `[|+⟩⟨+|, 1, |0⟩⟨0|, σ_z]`, whose value is 1/2.
pub fn benchmark_diagram() -> Diagram {
    Diagram::new(
        vec![
            Ket::plus().projector(),
            Operator::identity(2),
            Ket::zero().projector(),
            Operator::pauli_z(),
        ],
        ONE,
    )
    .expect("fixed shapes")
}

impl DiagramConfig {
    pub fn preset(name: &str) -> ConfigResult<Self> {
        if name != "benchmark" {
            return Err(ConfigError::new(
                "preset",
                format!("unknown preset {name:?}"),
            ));
        }
        Ok(DiagramConfig {
            diagram: None,
            preset: Some("benchmark".into()),
            action: "evaluate".into(),
            k: None,
            index: None,
        })
    }

    pub fn diagram(&self) -> ConfigResult<Diagram> {
        match (&self.diagram, &self.preset) {
            (Some(file), None) => Diagram::try_from(file.clone()).map_err(lib("diagram")),
            (None, Some(p)) if p == "benchmark" => Ok(benchmark_diagram()),
            (None, Some(p)) => Err(ConfigError::new("preset", format!("unknown preset {p:?}"))),
            (None, None) => Err(ConfigError::new("diagram", "missing")),
            (Some(_), Some(_)) => Err(ConfigError::new(
                "diagram",
                "give either a diagram or a preset",
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BasisConfig {
    Named(String),
    Columns(Vec<Vec<Pair>>),
}

impl BasisConfig {
    fn operator(&self, field: &str, dim: usize) -> ConfigResult<Operator> {
        let op = match self {
            BasisConfig::Named(n) => match n.as_str() {
                "computational" => Operator::identity(dim),
                "fourier" => dft_matrix(dim).map_err(lib(field))?.dagger(),
                other => return Err(ConfigError::new(field, format!("unknown basis {other:?}"))),
            },
            BasisConfig::Columns(cols) => {
                let kets = cols
                    .iter()
                    .map(|col| Ket::new(col.iter().map(complex).collect()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(lib(field))?;
                Operator::from_columns(&kets).map_err(lib(field))?
            }
        };
        if op.dim() != dim {
            return Err(ConfigError::new(
                field,
                "dimension does not match the state",
            ));
        }
        if !op.is_unitary() {
            return Err(ConfigError::new(field, "columns are not orthonormal"));
        }
        Ok(op)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdConfig {
    #[serde(default)]
    pub psi: Option<Vec<Pair>>,
    #[serde(default)]
    pub rho: Option<Vec<Vec<Pair>>>,
    pub basis_a: BasisConfig,
    pub basis_b: BasisConfig,
}

impl KdConfig {
    pub fn preset(name: &str) -> ConfigResult<Self> {
        if name != "qubit_mub" {
            return Err(ConfigError::new(
                "preset",
                format!("unknown preset {name:?}"),
            ));
        }
        Ok(KdConfig {
            psi: Some(vec![[1.0, 0.0], [0.0, 0.0]]),
            rho: None,
            basis_a: BasisConfig::Named("computational".into()),
            basis_b: BasisConfig::Named("fourier".into()),
        })
    }

    pub fn rho(&self) -> ConfigResult<Operator> {
        let rho = match (&self.psi, &self.rho) {
            (Some(psi), None) => ket_from("psi", psi)?.projector(),
            (None, Some(rows)) => matrix_from("rho", rows)?,
            (None, None) => return Err(ConfigError::new("rho", "give psi or rho")),
            (Some(_), Some(_)) => return Err(ConfigError::new("rho", "give either psi or rho")),
        };
        if !rho.is_density() {
            return Err(ConfigError::new("rho", "not a density operator"));
        }
        Ok(rho)
    }

    pub fn bases(&self, dim: usize) -> ConfigResult<(Operator, Operator)> {
        Ok((
            self.basis_a.operator("basis_a", dim)?,
            self.basis_b.operator("basis_b", dim)?,
        ))
    }
}
