//! Scaling-factor calibration from demonstrated extrema poses.
//!
//! Every calibration pose is projected unscaled, `t = (q − o)·A`. Per axis the
//! minimum and maximum over the whole set give `range = |max| + |min|`, and
//! `δ = 1 / range` (or 0 for a zero range). Labels say which poses were meant
//! to demonstrate which extremum; they are checked for coverage but do not
//! restrict the min/max reduction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{parse_toml, read_text, to_toml, write_text, Error, Result};
use crate::hand_model::{HandModel, Pose};
use crate::subspace::{build_projection_matrix, Axis, ProjectionMatrix, ScalingFactors, SubspaceMapping};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationLabel {
    AlphaMin,
    AlphaMax,
    SigmaMin,
    SigmaMax,
    EpsilonMin,
    EpsilonMax,
}

impl CalibrationLabel {
    pub fn axis(self) -> Axis {
        match self {
            CalibrationLabel::AlphaMin | CalibrationLabel::AlphaMax => Axis::Alpha,
            CalibrationLabel::SigmaMin | CalibrationLabel::SigmaMax => Axis::Sigma,
            CalibrationLabel::EpsilonMin | CalibrationLabel::EpsilonMax => Axis::Epsilon,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(
            self,
            CalibrationLabel::AlphaMax | CalibrationLabel::SigmaMax | CalibrationLabel::EpsilonMax
        )
    }

    fn for_axis(axis: Axis, max: bool) -> Self {
        match (axis, max) {
            (Axis::Alpha, false) => CalibrationLabel::AlphaMin,
            (Axis::Alpha, true) => CalibrationLabel::AlphaMax,
            (Axis::Sigma, false) => CalibrationLabel::SigmaMin,
            (Axis::Sigma, true) => CalibrationLabel::SigmaMax,
            (Axis::Epsilon, false) => CalibrationLabel::EpsilonMin,
            (Axis::Epsilon, true) => CalibrationLabel::EpsilonMax,
        }
    }

    pub fn name(self) -> String {
        format!("{}_{}", self.axis(), if self.is_max() { "max" } else { "min" })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPose {
    pub labels: Vec<CalibrationLabel>,
    pub angles: Pose,
}

/// Labeled extrema poses for one hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSet {
    pub model_name: String,
    /// Axes the user declares as carrying no motion for this hand.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inert: Vec<Axis>,
    pub poses: Vec<CalibrationPose>,
}

impl CalibrationSet {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        parse_toml(text, origin)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml_str(&read_text(path)?, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        to_toml(self)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_toml_string()?)
    }

    /// Checks model name, pose lengths and joint limits.
    pub fn validate(&self, model: &HandModel) -> Result<()> {
        if self.model_name != model.name {
            return Err(Error::ModelMismatch {
                expected: model.name.clone(),
                found: self.model_name.clone(),
            });
        }
        for (i, p) in self.poses.iter().enumerate() {
            model.check_pose(&p.angles)?;
            for (joint, &value) in model.joints.iter().zip(p.angles.iter()) {
                if !joint.contains(value) {
                    return Err(Error::PoseOutOfLimits {
                        pose: i,
                        joint: joint.name.clone(),
                        value,
                        min: joint.min_angle,
                        max: joint.max_angle,
                    });
                }
            }
        }
        Ok(())
    }

    fn has_label(&self, label: CalibrationLabel) -> bool {
        self.poses.iter().any(|p| p.labels.contains(&label))
    }
}

/// Calibration outcome for one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisReport {
    pub axis: Axis,
    pub unscaled_min: f64,
    pub unscaled_max: f64,
    /// `|max| + |min|`, the quantity `δ` normalizes.
    pub range: f64,
    /// `max − min`; differs from `range` when the extrema share a sign.
    pub span: f64,
    pub delta: f64,
    pub delta_star: f64,
    pub inert: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub model_name: String,
    pub axes: Vec<AxisReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub mapping: SubspaceMapping,
    pub report: CalibrationReport,
}

/// Computes `δ` and `δ*` for the poses in `set`.
///
/// An axis is inert when its column of `A` is zero or the set declares it;
/// inert axes get `δ = δ* = 0`. Any other axis needs at least one pose
/// labeled with its minimum and one with its maximum. The set is assumed to
/// have been validated against its model already.
pub fn compute_scaling(set: &CalibrationSet, origin: &[f64], matrix: &ProjectionMatrix) -> Result<(ScalingFactors, CalibrationReport)> {
    if origin.len() != matrix.joint_count() {
        return Err(Error::LengthMismatch {
            expected: matrix.joint_count(),
            actual: origin.len(),
        });
    }
    let mut warnings = Vec::new();
    if matrix.is_zero() {
        warnings.push("projection matrix is zero: every axis is inert".to_string());
    }

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &set.poses {
        if p.angles.len() != origin.len() {
            return Err(Error::LengthMismatch {
                expected: origin.len(),
                actual: p.angles.len(),
            });
        }
        let t = matrix.project(&p.angles, origin);
        for k in 0..3 {
            lo[k] = lo[k].min(t[k]);
            hi[k] = hi[k].max(t[k]);
        }
    }

    let mut delta = [0.0; 3];
    let mut inert = [false; 3];
    for axis in Axis::ALL {
        let k = axis.index();
        if set.poses.is_empty() {
            lo[k] = 0.0;
            hi[k] = 0.0;
        }
        let declared = set.inert.contains(&axis);
        if matrix.is_zero_column(axis) || declared {
            inert[k] = true;
            if declared && hi[k] != lo[k] {
                warnings.push(format!("{axis}: declared inert, ignoring measured extrema [{}, {}]", lo[k], hi[k]));
            } else if !declared {
                warnings.push(format!("{axis}: no joint is assigned to this axis; it is inert"));
            }
            continue;
        }
        for max in [false, true] {
            let label = CalibrationLabel::for_axis(axis, max);
            if !set.has_label(label) {
                return Err(Error::MissingLabel { axis, label: label.name() });
            }
        }
        let range = hi[k].abs() + lo[k].abs();
        if range == 0.0 {
            inert[k] = true;
            warnings.push(format!("{axis}: calibration poses never move this axis; it is inert"));
            continue;
        }
        if lo[k] * hi[k] > 0.0 {
            warnings.push(format!(
                "{axis}: extrema share a sign, so |max| + |min| = {range} differs from max - min = {}",
                hi[k] - lo[k]
            ));
        }
        delta[k] = 1.0 / range;
    }

    let factors = ScalingFactors::from_delta(delta)?;
    let axes = Axis::ALL
        .iter()
        .map(|&axis| {
            let k = axis.index();
            AxisReport {
                axis,
                unscaled_min: lo[k],
                unscaled_max: hi[k],
                range: hi[k].abs() + lo[k].abs(),
                span: hi[k] - lo[k],
                delta: factors.delta()[k],
                delta_star: factors.delta_star()[k],
                inert: inert[k],
            }
        })
        .collect();
    Ok((
        factors,
        CalibrationReport {
            model_name: set.model_name.clone(),
            axes,
            warnings,
        },
    ))
}

/// Validates `set` against `model` and assembles the model's full mapping.
pub fn calibrate(model: &HandModel, set: &CalibrationSet) -> Result<Calibration> {
    set.validate(model)?;
    let matrix = build_projection_matrix(model);
    let (scaling, report) = compute_scaling(set, &model.origin_pose, &matrix)?;
    let mapping = SubspaceMapping::new(model.name.clone(), model.origin_pose.clone(), matrix, scaling)?;
    Ok(Calibration { mapping, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand_model::AxisAssignment;
    use CalibrationLabel::*;

    fn data(name: &str) -> String {
        format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn robot() -> HandModel {
        HandModel::load(data("robot_default.model.toml")).unwrap()
    }

    fn along(model: &HandModel, axis: Axis, amount: f64) -> Pose {
        let col = build_projection_matrix(model).column(axis);
        model.origin_pose.iter().zip(col).map(|(o, c)| o + amount * c).collect::<Vec<_>>().into()
    }

    fn set_for(model: &HandModel, poses: Vec<(Vec<CalibrationLabel>, Pose)>) -> CalibrationSet {
        CalibrationSet {
            model_name: model.name.clone(),
            inert: vec![],
            poses: poses.into_iter().map(|(labels, angles)| CalibrationPose { labels, angles }).collect(),
        }
    }

    #[test]
    fn sigma_extrema_give_five_eighths() {
        let m = robot();
        let set = set_for(
            &m,
            vec![
                (vec![SigmaMax, AlphaMax, EpsilonMax], along(&m, Axis::Sigma, 0.8)),
                (vec![SigmaMin, AlphaMin, EpsilonMin], along(&m, Axis::Sigma, -0.8)),
            ],
        );
        let cal = calibrate(&m, &set).unwrap();
        let d = cal.mapping.scaling().delta();
        assert!((d[1] - 0.625).abs() < 1e-12, "{d:?}");
        // alpha and epsilon never move
        assert_eq!(d[0], 0.0);
        assert_eq!(d[2], 0.0);
        assert_eq!(cal.mapping.scaling().delta_star()[0], 0.0);
        assert_eq!(cal.report.warnings.len(), 2);
    }

    #[test]
    fn unit_range_gives_unit_delta() {
        let m = robot();
        let set = set_for(
            &m,
            vec![
                (vec![AlphaMax, SigmaMax, EpsilonMax], along(&m, Axis::Alpha, 0.5)),
                (vec![AlphaMin, SigmaMin, EpsilonMin], along(&m, Axis::Alpha, -0.5)),
            ],
        );
        let (s, _) = compute_scaling(&set, &m.origin_pose, &build_projection_matrix(&m)).unwrap();
        assert!((s.delta()[0] - 1.0).abs() < 1e-12);
        assert!((s.delta_star()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_label_is_an_error() {
        let m = robot();
        let set = set_for(&m, vec![(vec![AlphaMax, SigmaMax, SigmaMin, EpsilonMax, EpsilonMin], m.origin_pose.clone())]);
        match calibrate(&m, &set) {
            Err(Error::MissingLabel { axis: Axis::Alpha, label }) => assert_eq!(label, "alpha_min"),
            other => panic!("{other:?}"),
        }
        let mut declared = set.clone();
        declared.inert.push(Axis::Alpha);
        assert!(calibrate(&m, &declared).is_ok());
    }

    #[test]
    fn out_of_limit_pose_is_an_error() {
        let m = robot();
        let mut q = m.origin_pose.clone();
        q[4] = 5.0;
        let set = set_for(&m, vec![(vec![AlphaMax], q)]);
        assert!(matches!(calibrate(&m, &set), Err(Error::PoseOutOfLimits { pose: 0, .. })));
    }

    #[test]
    fn all_unassigned_model_is_fully_inert() {
        let mut m = robot();
        for j in &mut m.joints {
            j.axis_assignment = AxisAssignment::Unassigned;
        }
        let set = set_for(&m, vec![]);
        let cal = calibrate(&m, &set).unwrap();
        assert_eq!(cal.mapping.scaling().delta(), [0.0; 3]);
        assert_eq!(cal.mapping.scaling().delta_star(), [0.0; 3]);
        assert!(cal.report.warnings.iter().any(|w| w.contains("zero")));
    }

    #[test]
    fn same_sign_extrema_are_reported() {
        let m = robot();
        let set = set_for(
            &m,
            vec![
                (vec![AlphaMax, SigmaMax, EpsilonMax], along(&m, Axis::Sigma, 0.8)),
                (vec![AlphaMin, SigmaMin, EpsilonMin], along(&m, Axis::Sigma, 0.2)),
            ],
        );
        let cal = calibrate(&m, &set).unwrap();
        let sigma = &cal.report.axes[1];
        assert!((sigma.range - 1.0).abs() < 1e-12);
        assert!((sigma.span - 0.6).abs() < 1e-12);
        assert!(cal.report.warnings.iter().any(|w| w.contains("share a sign")));
    }

    #[test]
    fn shipped_files_calibrate() {
        for name in ["robot_default", "human_default"] {
            let m = HandModel::load(data(&format!("{name}.model.toml"))).unwrap();
            let set = CalibrationSet::load(data(&format!("{name}.cal"))).unwrap();
            let cal = calibrate(&m, &set).unwrap();
            for r in &cal.report.axes {
                assert!(!r.inert, "{name} {r:?}");
                assert!(r.unscaled_min < 0.0 && r.unscaled_max > 0.0, "{name} {r:?}");
            }
            assert!(cal.report.warnings.is_empty(), "{:?}", cal.report.warnings);
            let again = calibrate(&m, &set).unwrap();
            assert_eq!(cal.mapping.to_toml_string().unwrap(), again.mapping.to_toml_string().unwrap());
        }
    }

    #[test]
    fn model_name_mismatch() {
        let m = robot();
        let mut set = set_for(&m, vec![]);
        set.model_name = "other".into();
        assert!(matches!(calibrate(&m, &set), Err(Error::ModelMismatch { .. })));
    }
}
