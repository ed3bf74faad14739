//! Projection between a hand's joint space and the shared three-dimensional
//! teleoperation subspace.
//!
//! A [`SubspaceMapping`] bundles the origin pose `o`, the N×3 projection
//! matrix `A` and the per-axis scaling `δ` (with its pseudo-reciprocal
//! `δ*`). Joint space goes to the subspace as `t = ((q − o)·A) ⊙ δ` and comes
//! back as `q = (t ⊙ δ*)·Aᵀ + o`. Mapping a master pose onto a slave hand is
//! the first followed by the second, using each hand's own bundle.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{parse_toml, read_text, to_toml, write_text, Error, Result};
use crate::hand_model::{check_finite, AxisAssignment, HandModel, Pose};

/// Basis axis of the teleoperation subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Finger spread.
    Alpha,
    /// Grasp aperture.
    Sigma,
    /// Finger curl.
    Epsilon,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Alpha, Axis::Sigma, Axis::Epsilon];

    pub fn index(self) -> usize {
        match self {
            Axis::Alpha => 0,
            Axis::Sigma => 1,
            Axis::Epsilon => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Alpha => "alpha",
            Axis::Sigma => "sigma",
            Axis::Epsilon => "epsilon",
        }
    }

    fn of(assignment: AxisAssignment) -> Option<Axis> {
        match assignment {
            AxisAssignment::Alpha => Some(Axis::Alpha),
            AxisAssignment::Sigma => Some(Axis::Sigma),
            AxisAssignment::Epsilon => Some(Axis::Epsilon),
            AxisAssignment::Unassigned => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coordinates `(α, σ, ε)` in the teleoperation subspace.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SubspacePoint {
    pub alpha: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

impl SubspacePoint {
    pub fn new(alpha: f64, sigma: f64, epsilon: f64) -> Self {
        SubspacePoint { alpha, sigma, epsilon }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.alpha, self.sigma, self.epsilon]
    }

    pub fn from_array([alpha, sigma, epsilon]: [f64; 3]) -> Self {
        SubspacePoint { alpha, sigma, epsilon }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        self.to_array()[axis.index()]
    }
}

/// N×3 matrix `[ψ_α, ψ_σ, ψ_ε]`, stored row-major (one row per joint).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    rows: Vec<[f64; 3]>,
}

impl ProjectionMatrix {
    /// Wraps raw rows. No structure is enforced beyond finiteness, so a
    /// loaded mapping reproduces whatever matrix was saved.
    pub fn from_rows(rows: Vec<[f64; 3]>) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScaling("projection matrix has non-finite entries".into()));
        }
        Ok(ProjectionMatrix { rows })
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.rows
    }

    pub fn joint_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, axis: Axis) -> Vec<f64> {
        self.rows.iter().map(|r| r[axis.index()]).collect()
    }

    pub fn is_zero_column(&self, axis: Axis) -> bool {
        self.rows.iter().all(|r| r[axis.index()] == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        Axis::ALL.iter().all(|&a| self.is_zero_column(a))
    }

    /// Unscaled projection `(q − o)·A`.
    pub(crate) fn project(&self, q: &[f64], origin: &[f64]) -> [f64; 3] {
        let mut t = [0.0; 3];
        for ((row, qi), oi) in self.rows.iter().zip(q).zip(origin) {
            let d = qi - oi;
            t[0] += d * row[0];
            t[1] += d * row[1];
            t[2] += d * row[2];
        }
        t
    }
}

/// Winner-take-all indicator columns before normalization: entry 1 in the
/// column a joint is assigned to, 0 elsewhere.
pub fn indicator_columns(model: &HandModel) -> [Vec<f64>; 3] {
    let mut cols = [
        vec![0.0; model.joint_count()],
        vec![0.0; model.joint_count()],
        vec![0.0; model.joint_count()],
    ];
    for (i, j) in model.joints.iter().enumerate() {
        if let Some(axis) = Axis::of(j.axis_assignment) {
            cols[axis.index()][i] = 1.0;
        }
    }
    cols
}

/// Builds `A` from the model's joint-to-axis assignment, each nonzero column
/// scaled to unit Euclidean norm. Unassigned joints give zero rows.
pub fn build_projection_matrix(model: &HandModel) -> ProjectionMatrix {
    let cols = indicator_columns(model);
    let norms = cols.each_ref().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt());
    let rows = (0..model.joint_count())
        .map(|i| {
            let mut row = [0.0; 3];
            for k in 0..3 {
                if norms[k] > 0.0 {
                    row[k] = cols[k][i] / norms[k];
                }
            }
            row
        })
        .collect();
    ProjectionMatrix { rows }
}

/// Per-axis `δ` and its pseudo-reciprocal `δ*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFactors {
    delta: [f64; 3],
    delta_star: [f64; 3],
}

impl ScalingFactors {
    pub fn unit() -> Self {
        ScalingFactors {
            delta: [1.0; 3],
            delta_star: [1.0; 3],
        }
    }

    /// Derives `δ*` from `δ`. A zero component stays zero in both. Nonzero
    /// components are moved by at most a few ulps so that `δ·δ*` is exactly 1
    /// in floating point.
    pub fn from_delta(delta: [f64; 3]) -> Result<Self> {
        let mut out = ScalingFactors {
            delta: [0.0; 3],
            delta_star: [0.0; 3],
        };
        for (k, &value) in delta.iter().enumerate() {
            let (d, r) = reciprocal_pair(value)?;
            out.delta[k] = d;
            out.delta_star[k] = r;
        }
        Ok(out)
    }

    /// Accepts a stored pair, rejecting it unless each component is either
    /// zero in both or multiplies to exactly 1.
    pub fn from_pair(delta: [f64; 3], delta_star: [f64; 3]) -> Result<Self> {
        for k in 0..3 {
            let (d, r) = (delta[k], delta_star[k]);
            if !d.is_finite() || !r.is_finite() {
                return Err(Error::InvalidScaling(format!("component {k} is not finite")));
            }
            let ok = if d == 0.0 || r == 0.0 { d == 0.0 && r == 0.0 } else { d * r == 1.0 };
            if !ok {
                return Err(Error::InvalidScaling(format!(
                    "{}: delta {d} and delta_star {r} are not reciprocal",
                    Axis::ALL[k]
                )));
            }
        }
        Ok(ScalingFactors { delta, delta_star })
    }

    pub fn delta(&self) -> [f64; 3] {
        self.delta
    }

    pub fn delta_star(&self) -> [f64; 3] {
        self.delta_star
    }

    pub fn is_inert(&self, axis: Axis) -> bool {
        self.delta[axis.index()] == 0.0
    }
}

fn reciprocal_pair(d: f64) -> Result<(f64, f64)> {
    if !d.is_finite() {
        return Err(Error::InvalidScaling(format!("delta {d} is not finite")));
    }
    if d == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut up = d;
    let mut down = d;
    for _ in 0..64 {
        for c in [up, down] {
            let r = 1.0 / c;
            for r in [r, r.next_down(), r.next_up()] {
                if r.is_finite() && c * r == 1.0 {
                    return Ok((c, r));
                }
            }
        }
        up = up.next_up();
        down = down.next_down();
    }
    Err(Error::InvalidScaling(format!("no exact reciprocal near {d}")))
}

/// Calibrated projection bundle `(o, A, δ, δ*)` for one hand.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceMapping {
    pub model_name: String,
    origin: Pose,
    matrix: ProjectionMatrix,
    scaling: ScalingFactors,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingDocument {
    model_name: String,
    origin: Vec<f64>,
    delta: [f64; 3],
    delta_star: [f64; 3],
    matrix: Vec<[f64; 3]>,
}

impl SubspaceMapping {
    pub fn new(model_name: impl Into<String>, origin: Pose, matrix: ProjectionMatrix, scaling: ScalingFactors) -> Result<Self> {
        if origin.len() != matrix.joint_count() {
            return Err(Error::LengthMismatch {
                expected: matrix.joint_count(),
                actual: origin.len(),
            });
        }
        origin.check_finite()?;
        Ok(SubspaceMapping {
            model_name: model_name.into(),
            origin,
            matrix,
            scaling,
        })
    }

    /// Mapping for `model` with the given scaling; `A` and `o` come from the model.
    pub fn for_model(model: &HandModel, scaling: ScalingFactors) -> Self {
        SubspaceMapping {
            model_name: model.name.clone(),
            origin: model.origin_pose.clone(),
            matrix: build_projection_matrix(model),
            scaling,
        }
    }

    pub fn origin(&self) -> &Pose {
        &self.origin
    }

    pub fn matrix(&self) -> &ProjectionMatrix {
        &self.matrix
    }

    pub fn scaling(&self) -> &ScalingFactors {
        &self.scaling
    }

    pub fn joint_count(&self) -> usize {
        self.origin.len()
    }

    fn check_len(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.joint_count() {
            return Err(Error::LengthMismatch {
                expected: self.joint_count(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    /// `(q − o)·A` without scaling.
    pub fn unscaled(&self, q: &[f64]) -> Result<[f64; 3]> {
        self.check_len(q)?;
        Ok(self.matrix.project(q, &self.origin))
    }

    pub fn project_to(&self, q: &[f64]) -> Result<SubspacePoint> {
        self.check_len(q)?;
        Ok(SubspacePoint::from_array(self.to_raw(q)))
    }

    pub fn project_from(&self, t: SubspacePoint) -> Result<Pose> {
        let mut out = Pose::zeros(self.joint_count());
        self.project_from_into(t, &mut out)?;
        Ok(out)
    }

    /// Writes `(t ⊙ δ*)·Aᵀ + o` into `out` without allocating.
    pub fn project_from_into(&self, t: SubspacePoint, out: &mut [f64]) -> Result<()> {
        check_finite(&t.to_array())?;
        self.check_len(out)?;
        self.unproject_raw(t.to_array(), out);
        Ok(())
    }

    fn to_raw(&self, q: &[f64]) -> [f64; 3] {
        let t = self.matrix.project(q, &self.origin);
        let d = self.scaling.delta;
        [t[0] * d[0], t[1] * d[1], t[2] * d[2]]
    }

    fn unproject_raw(&self, t: [f64; 3], out: &mut [f64]) {
        let ds = self.scaling.delta_star;
        let s = [t[0] * ds[0], t[1] * ds[1], t[2] * ds[2]];
        for ((q, row), o) in out.iter_mut().zip(&self.matrix.rows).zip(self.origin.iter()) {
            *q = s[0] * row[0] + s[1] * row[1] + s[2] * row[2] + o;
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let doc: MappingDocument = parse_toml(text, origin)?;
        let matrix = ProjectionMatrix::from_rows(doc.matrix)?;
        let scaling = ScalingFactors::from_pair(doc.delta, doc.delta_star)?;
        Self::new(doc.model_name, Pose::new(doc.origin), matrix, scaling)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        to_toml(&MappingDocument {
            model_name: self.model_name.clone(),
            origin: self.origin.to_vec(),
            delta: self.scaling.delta,
            delta_star: self.scaling.delta_star,
            matrix: self.matrix.rows.clone(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml_str(&read_text(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_toml_string()?)
    }
}

/// `t = ((q − o)·A) ⊙ δ`.
pub fn project_to_subspace(q: &[f64], mapping: &SubspaceMapping) -> Result<SubspacePoint> {
    mapping.project_to(q)
}

/// `q = (t ⊙ δ*)·Aᵀ + o`. The result is not clamped to joint limits.
pub fn project_from_subspace(t: SubspacePoint, mapping: &SubspaceMapping) -> Result<Pose> {
    mapping.project_from(t)
}

/// Master pose to slave pose through the shared subspace. The result is not
/// clamped; apply [`HandModel::clamp_pose`] with the slave model afterwards.
pub fn map_pose(q_master: &[f64], master: &SubspaceMapping, slave: &SubspaceMapping) -> Result<Pose> {
    let mut out = Pose::zeros(slave.joint_count());
    map_pose_into(q_master, master, slave, &mut out)?;
    Ok(out)
}

/// Allocation-free [`map_pose`]; also returns the intermediate subspace point.
pub fn map_pose_into(
    q_master: &[f64],
    master: &SubspaceMapping,
    slave: &SubspaceMapping,
    out: &mut [f64],
) -> Result<SubspacePoint> {
    master.check_len(q_master)?;
    slave.check_len(out)?;
    let t = master.to_raw(q_master);
    slave.unproject_raw(t, out);
    Ok(SubspacePoint::from_array(t))
}
