//! Four-node operator loops.
//!
//! A loop stores its operators in clockwise trace order. For the diagram of
//! a framework run that order is `[ρᵢ, T₀†, F, T₁]`; node 1 holds `T₀†`
//! itself, so evaluation is a plain ordered product and [`compile`] is the
//! only place that takes the dagger back off.
//!
//! The value of a loop is `scale · tr(n₀ n₁ n₂ n₃)`. Rewrites
//! ([`rotate`], [`spectral_split`], [`relocate_identity`]) preserve it, and
//! [`compile`] turns any loop whose state and effect slots are positive
//! into an executable framework instance with the same value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::{
    extract_complex, joint_distribution, Boundary, ControlledTransform, ProbeSetting,
};
use crate::linalg::{c, ensure_dim, herm_eig, spectral_norm, ComplexScalar, Operator, ONE};

pub const LOOP_LEN: usize = 4;
pub const STATE_SLOT: usize = 0;
pub const UPPER_SLOT: usize = 1;
pub const EFFECT_SLOT: usize = 2;
pub const LOWER_SLOT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    nodes: [Operator; LOOP_LEN],
    scale: ComplexScalar,
}

impl Diagram {
    pub fn new(nodes: Vec<Operator>, scale: ComplexScalar) -> Result<Self> {
        if nodes.len() != LOOP_LEN {
            return Err(Error::invalid(
                "diagram",
                format!("loops have exactly {LOOP_LEN} nodes, got {}", nodes.len()),
            ));
        }
        let dim = nodes[0].dim();
        for n in &nodes {
            ensure_dim(dim, n.dim())?;
        }
        if !(scale.re.is_finite() && scale.im.is_finite()) {
            return Err(Error::NonFinite("diagram scale"));
        }
        let nodes: [Operator; LOOP_LEN] = nodes.try_into().expect("length checked");
        Ok(Diagram { nodes, scale })
    }

    /// The loop `[ρᵢ, T₀†, F, T₁]` of a framework run.
    pub fn from_framework(ct: &ControlledTransform, boundary: &Boundary) -> Result<Self> {
        Diagram::new(
            vec![
                boundary.initial().clone(),
                ct.t0().dagger(),
                boundary.final_effect().clone(),
                ct.t1().clone(),
            ],
            ONE,
        )
    }

    pub fn nodes(&self) -> &[Operator; LOOP_LEN] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &Operator {
        &self.nodes[idx % LOOP_LEN]
    }

    pub fn scale(&self) -> ComplexScalar {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].dim()
    }

    fn with_node(&self, idx: usize, node: Operator) -> Diagram {
        let mut nodes = self.nodes.clone();
        nodes[idx] = node;
        Diagram {
            nodes,
            scale: self.scale,
        }
    }
}

/// `scale · tr(n₀ n₁ n₂ n₃)`
pub fn evaluate(d: &Diagram) -> ComplexScalar {
    let [a, b, f, g] = &d.nodes;
    d.scale * a.matmul(b).matmul(f).matmul(g).trace()
}

/// Cyclic shift: the node at position `i` moves to position `i + k (mod 4)`.
pub fn rotate(d: &Diagram, k: i64) -> Diagram {
    let shift = k.rem_euclid(LOOP_LEN as i64) as usize;
    let nodes = std::array::from_fn(|i| d.nodes[(i + LOOP_LEN - shift) % LOOP_LEN].clone());
    Diagram {
        nodes,
        scale: d.scale,
    }
}

/// Moves an identity node from position `from` to position `to`.
///
/// Dropping an identity from the loop and inserting one elsewhere leaves the
/// product unchanged; this is how the three non-trivial operators of a loop
/// slide past the bare wire between them.
pub fn relocate_identity(d: &Diagram, from: usize, to: usize) -> Result<Diagram> {
    if from >= LOOP_LEN || to >= LOOP_LEN {
        return Err(Error::invalid("node index", "must be below 4"));
    }
    let id = Operator::identity(d.dim());
    if d.nodes[from].max_abs_diff(&id) > 1e-12 {
        return Err(Error::invalid(
            "relocate_identity",
            format!("node {from} is not the identity"),
        ));
    }
    let mut rest: Vec<Operator> = d
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != from)
        .map(|(_, n)| n.clone())
        .collect();
    rest.insert(to, id);
    Diagram::new(rest, d.scale)
}

/// Replaces the Hermitian node at `idx` by its spectral projectors.
///
/// Returns one `(aⱼ, child)` pair per eigenvector; `Σⱼ aⱼ·evaluate(childⱼ)`
/// reproduces `evaluate(d)` whichever basis the solver picked inside a
/// degenerate eigenspace.
pub fn spectral_split(d: &Diagram, idx: usize) -> Result<Vec<(f64, Diagram)>> {
    if idx >= LOOP_LEN {
        return Err(Error::invalid("node index", "must be below 4"));
    }
    let eig = herm_eig(&d.nodes[idx])?;
    Ok(eig
        .values
        .iter()
        .enumerate()
        .map(|(j, &a)| (a, d.with_node(idx, eig.vectors.column(j).projector())))
        .collect())
}

/// `Σ weight · evaluate(child)`
pub fn recombine(children: &[(f64, Diagram)]) -> ComplexScalar {
    children.iter().map(|(w, child)| *w * evaluate(child)).sum()
}

/// A runnable framework configuration plus the factor that relates its
/// measured complex value to the loop it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkInstance {
    pub ct: ControlledTransform,
    pub boundary: Boundary,
    pub scale: ComplexScalar,
}

impl FrameworkInstance {
    /// `scale ×` the complex value read off the exact X/Y probe statistics.
    pub fn measured_value(&self) -> Result<ComplexScalar> {
        let dist = joint_distribution(
            &self.ct,
            &self.boundary,
            &[ProbeSetting::X, ProbeSetting::Y],
        )?;
        Ok(self.scale * extract_complex(&dist)?)
    }
}

fn positive_slot(node: &Operator, slot: usize) -> Result<()> {
    if !node.is_hermitian() {
        return Err(Error::NotCompilable {
            slot,
            reason: "not Hermitian".into(),
        });
    }
    if !node.is_psd() {
        return Err(Error::NotCompilable {
            slot,
            reason: "has a negative eigenvalue".into(),
        });
    }
    Ok(())
}

/// Divides by the spectral norm when it exceeds one; returns the divisor used.
fn shrink(node: &Operator) -> (Operator, f64) {
    let norm = spectral_norm(node);
    if norm > 1.0 {
        (node.scale_real(1.0 / norm), norm)
    } else {
        (node.clone(), 1.0)
    }
}

/// Reads slot 0 as a (rescaled) prepared state, slot 2 as a (rescaled) effect,
/// and slots 1 and 3 as `T₀†` and `T₁`.
pub fn compile(d: &Diagram) -> Result<FrameworkInstance> {
    let [state, upper, effect, lower] = &d.nodes;
    positive_slot(state, STATE_SLOT)?;
    let trace = state.trace().re;
    if trace <= 1e-12 {
        return Err(Error::NotCompilable {
            slot: STATE_SLOT,
            reason: "zero trace".into(),
        });
    }
    positive_slot(effect, EFFECT_SLOT)?;

    let rho = state.scale_real(1.0 / trace);
    let (final_effect, effect_div) = shrink(effect);
    let (t0, t0_div) = shrink(&upper.dagger());
    let (t1, t1_div) = shrink(lower);

    let ct = ControlledTransform::new(t0, t1)?;
    let boundary = Boundary::new(rho, final_effect).map_err(|e| Error::NotCompilable {
        slot: STATE_SLOT,
        reason: e.to_string(),
    })?;
    Ok(FrameworkInstance {
        ct,
        boundary,
        scale: d.scale * trace * effect_div * t0_div * t1_div,
    })
}

/// On-disk form: each node is a flat row-major list of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramFile {
    pub nodes: Vec<Vec<[f64; 2]>>,
    pub scale: [f64; 2],
}

impl From<&Diagram> for DiagramFile {
    fn from(d: &Diagram) -> Self {
        DiagramFile {
            nodes: d
                .nodes
                .iter()
                .map(|n| n.data().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            scale: [d.scale.re, d.scale.im],
        }
    }
}

impl TryFrom<DiagramFile> for Diagram {
    type Error = Error;

    fn try_from(file: DiagramFile) -> Result<Diagram> {
        let nodes = file
            .nodes
            .into_iter()
            .map(|flat| {
                let dim = (flat.len() as f64).sqrt().round() as usize;
                if dim * dim != flat.len() {
                    return Err(Error::invalid(
                        "diagram node",
                        format!("{} entries is not a square count", flat.len()),
                    ));
                }
                Operator::new(dim, flat.into_iter().map(|[re, im]| c(re, im)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Diagram::new(nodes, c(file.scale[0], file.scale[1]))
    }
}

impl Diagram {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&DiagramFile::from(self)).expect("diagram serializes")
    }

    pub fn from_json(text: &str) -> Result<Diagram> {
        let file: DiagramFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid("diagram json", e.to_string()))?;
        Diagram::try_from(file)
    }
}
