//! Hand kinematics and semantics.
//!
//! A [`HandModel`] is an ordered list of revolute joints with limits and a
//! subspace-axis assignment, a set of finger chains used for forward
//! kinematics, and the origin pose. Each finger chain is a rigid base
//! transform, an optional adduction joint rotating about the finger frame's
//! z axis (the palm normal), and a planar serial flexion chain. At zero
//! flexion a finger extends along its local +x; positive flexion curls it
//! toward local +z, i.e. flexion joints rotate about local -y.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::path::Path;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{parse_toml, read_text, to_toml, write_text, Error, Result};

/// Joint-angle vector in a hand's joint space, radians.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose(Vec<f64>);

impl Pose {
    pub fn new(angles: Vec<f64>) -> Self {
        Pose(angles)
    }

    pub fn zeros(n: usize) -> Self {
        Pose(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Errors on the first NaN or infinite angle.
    pub fn check_finite(&self) -> Result<()> {
        check_finite(&self.0)
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

impl Deref for Pose {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Pose {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Pose {
    fn from(v: Vec<f64>) -> Self {
        Pose(v)
    }
}

impl From<&[f64]> for Pose {
    fn from(v: &[f64]) -> Self {
        Pose(v.to_vec())
    }
}

/// Which subspace basis vector a joint contributes to. Each joint picks at
/// most one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisAssignment {
    Alpha,
    Sigma,
    Epsilon,
    #[serde(rename = "none")]
    Unassigned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDescriptor {
    pub name: String,
    pub min_angle: f64,
    pub max_angle: f64,
    pub axis_assignment: AxisAssignment,
}

impl JointDescriptor {
    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.min_angle, self.max_angle)
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.min_angle && angle <= self.max_angle
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerChain {
    pub name: String,
    /// Position of the chain base in the hand frame, meters.
    pub base_position: Vector3<f64>,
    pub base_orientation: UnitQuaternion<f64>,
    /// Flexion joints, proximal to distal.
    pub joint_indices: Vec<usize>,
    /// One link per flexion joint, meters.
    pub link_lengths: Vec<f64>,
    pub adduction_joint_index: Option<usize>,
}

impl FingerChain {
    /// Every joint the chain moves: adduction first (if any), then flexion.
    pub fn all_joints(&self) -> impl Iterator<Item = usize> + '_ {
        self.adduction_joint_index
            .into_iter()
            .chain(self.joint_indices.iter().copied())
    }

    /// Upper bound on the base-to-fingertip distance.
    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Expresses a hand-frame point in this chain's base frame.
    pub fn to_finger_frame(&self, hand_point: &Vector3<f64>) -> Vector3<f64> {
        self.base_orientation.inverse() * (hand_point - self.base_position)
    }
}

/// One revolute joint of a chain evaluated at a pose, in the hand frame.
#[derive(Debug, Clone, Copy)]
pub struct JointFrame {
    pub joint: usize,
    pub position: Vector3<f64>,
    pub axis: Vector3<f64>,
}

/// Forward kinematics of one chain with every joint frame recorded.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub joints: Vec<JointFrame>,
    pub tip: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandModel {
    pub name: String,
    pub joints: Vec<JointDescriptor>,
    pub fingers: Vec<FingerChain>,
    pub origin_pose: Pose,
}

/// A joint named either by its name or by its position in the joint list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JointRef {
    Index(usize),
    Name(String),
}

impl fmt::Display for JointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JointRef::Index(i) => write!(f, "{i}"),
            JointRef::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    name: String,
    origin_pose: Vec<f64>,
    joints: Vec<JointDocument>,
    #[serde(default)]
    fingers: Vec<FingerDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDocument {
    name: String,
    min: f64,
    max: f64,
    axis: AxisAssignment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerDocument {
    name: String,
    base_position: [f64; 3],
    /// Unit quaternion, `[w, x, y, z]`.
    base_orientation: [f64; 4],
    joints: Vec<JointRef>,
    link_lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adduction_joint: Option<JointRef>,
}

impl HandModel {
    /// Parses and validates a hand-model document. `origin` names the source
    /// in error messages.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let doc: ModelDocument = parse_toml(text, origin)?;
        Self::from_document(doc, origin)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml_str(&read_text(path)?, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        to_toml(&self.to_document())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_toml_string()?)
    }

    fn from_document(doc: ModelDocument, origin: &str) -> Result<Self> {
        let ctx = format!("{origin}: model `{}`", doc.name);
        if doc.joints.is_empty() {
            return Err(Error::schema(&ctx, "joints", "at least one joint is required"));
        }
        let mut names = HashSet::new();
        let mut joints = Vec::with_capacity(doc.joints.len());
        for (i, j) in doc.joints.into_iter().enumerate() {
            if !j.min.is_finite() || !j.max.is_finite() {
                return Err(Error::schema(&ctx, format!("joints[{i}].min/max"), "limits must be finite"));
            }
            if j.min >= j.max {
                return Err(Error::LimitInversion {
                    joint: j.name,
                    min: j.min,
                    max: j.max,
                });
            }
            if !names.insert(j.name.clone()) {
                return Err(Error::schema(&ctx, format!("joints[{i}].name"), format!("duplicate joint name `{}`", j.name)));
            }
            joints.push(JointDescriptor {
                name: j.name,
                min_angle: j.min,
                max_angle: j.max,
                axis_assignment: j.axis,
            });
        }

        let resolve = |r: &JointRef, field: &str| -> Result<usize> {
            let found = match r {
                JointRef::Index(i) => (*i < joints.len()).then_some(*i),
                JointRef::Name(n) => joints.iter().position(|j| &j.name == n),
            };
            found.ok_or_else(|| Error::DanglingJoint {
                context: format!("{ctx}: {field}"),
                reference: r.to_string(),
            })
        };

        let mut used = HashSet::new();
        let mut finger_names = HashSet::new();
        let mut fingers = Vec::with_capacity(doc.fingers.len());
        for (fi, f) in doc.fingers.iter().enumerate() {
            let field = format!("fingers[{fi}]");
            if !finger_names.insert(f.name.clone()) {
                return Err(Error::schema(&ctx, format!("{field}.name"), format!("duplicate finger `{}`", f.name)));
            }
            let joint_indices = f
                .joints
                .iter()
                .map(|r| resolve(r, &format!("{field}.joints")))
                .collect::<Result<Vec<_>>>()?;
            let adduction = f
                .adduction_joint
                .as_ref()
                .map(|r| resolve(r, &format!("{field}.adduction_joint")))
                .transpose()?;
            if f.link_lengths.len() != joint_indices.len() {
                return Err(Error::schema(
                    &ctx,
                    format!("{field}.link_lengths"),
                    format!("{} lengths for {} flexion joints", f.link_lengths.len(), joint_indices.len()),
                ));
            }
            if f.link_lengths.iter().any(|l| !l.is_finite() || *l <= 0.0) {
                return Err(Error::schema(&ctx, format!("{field}.link_lengths"), "lengths must be positive"));
            }
            if f.base_position.iter().any(|v| !v.is_finite()) {
                return Err(Error::schema(&ctx, format!("{field}.base_position"), "must be finite"));
            }
            for j in adduction.iter().chain(joint_indices.iter()) {
                if !used.insert(*j) {
                    return Err(Error::schema(
                        &ctx,
                        format!("{field}.joints"),
                        format!("joint `{}` is already driven by another chain", joints[*j].name),
                    ));
                }
            }
            fingers.push(FingerChain {
                name: f.name.clone(),
                base_position: Vector3::from(f.base_position),
                base_orientation: unit_quaternion(f.base_orientation)
                    .ok_or_else(|| Error::schema(&ctx, format!("{field}.base_orientation"), "expected a unit quaternion [w, x, y, z]"))?,
                joint_indices,
                link_lengths: f.link_lengths.clone(),
                adduction_joint_index: adduction,
            });
        }

        if doc.origin_pose.len() != joints.len() {
            return Err(Error::schema(
                &ctx,
                "origin_pose",
                format!("{} angles for {} joints", doc.origin_pose.len(), joints.len()),
            ));
        }
        for (j, v) in joints.iter().zip(&doc.origin_pose) {
            if !j.contains(*v) {
                return Err(Error::schema(
                    &ctx,
                    "origin_pose",
                    format!("angle {v} for joint `{}` is outside [{}, {}]", j.name, j.min_angle, j.max_angle),
                ));
            }
        }

        Ok(HandModel {
            name: doc.name,
            joints,
            fingers,
            origin_pose: Pose(doc.origin_pose),
        })
    }

    fn to_document(&self) -> ModelDocument {
        let name_of = |i: usize| JointRef::Name(self.joints[i].name.clone());
        ModelDocument {
            name: self.name.clone(),
            origin_pose: self.origin_pose.0.clone(),
            joints: self
                .joints
                .iter()
                .map(|j| JointDocument {
                    name: j.name.clone(),
                    min: j.min_angle,
                    max: j.max_angle,
                    axis: j.axis_assignment,
                })
                .collect(),
            fingers: self
                .fingers
                .iter()
                .map(|f| {
                    let q = f.base_orientation.quaternion();
                    FingerDocument {
                        name: f.name.clone(),
                        base_position: f.base_position.into(),
                        base_orientation: [q.w, q.i, q.j, q.k],
                        joints: f.joint_indices.iter().map(|&i| name_of(i)).collect(),
                        link_lengths: f.link_lengths.clone(),
                        adduction_joint: f.adduction_joint_index.map(name_of),
                    }
                })
                .collect(),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn joint_names(&self) -> impl Iterator<Item = &str> {
        self.joints.iter().map(|j| j.name.as_str())
    }

    pub fn finger(&self, name: &str) -> Result<&FingerChain> {
        self.fingers
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::UnknownFinger(name.to_string()))
    }

    pub fn check_pose(&self, pose: &[f64]) -> Result<()> {
        if pose.len() != self.joints.len() {
            return Err(Error::LengthMismatch {
                expected: self.joints.len(),
                actual: pose.len(),
            });
        }
        Ok(())
    }

    pub fn within_limits(&self, pose: &[f64]) -> bool {
        pose.len() == self.joints.len() && self.joints.iter().zip(pose).all(|(j, v)| j.contains(*v))
    }

    /// Fingertip position of `finger`, in the hand frame.
    pub fn forward_kinematics(&self, pose: &[f64], finger: &str) -> Result<Vector3<f64>> {
        self.check_pose(pose)?;
        Ok(chain_tip(self.finger(finger)?, pose))
    }

    /// Fingertip positions of every chain, in declaration order.
    pub fn fingertips(&self, pose: &[f64]) -> Result<Vec<(String, Vector3<f64>)>> {
        self.check_pose(pose)?;
        Ok(self
            .fingers
            .iter()
            .map(|f| (f.name.clone(), chain_tip(f, pose)))
            .collect())
    }

    /// Chain evaluation with joint frames, as needed for Jacobians.
    pub fn chain_state(&self, pose: &[f64], finger: &FingerChain) -> Result<ChainState> {
        self.check_pose(pose)?;
        Ok(evaluate_chain(finger, pose))
    }

    pub fn clamp_pose(&self, pose: &[f64]) -> Result<Pose> {
        let mut out = Pose::from(pose);
        self.clamp_in_place(&mut out)?;
        Ok(out)
    }

    pub fn clamp_in_place(&self, pose: &mut [f64]) -> Result<()> {
        self.check_pose(pose)?;
        for (v, j) in pose.iter_mut().zip(&self.joints) {
            *v = j.clamp(*v);
        }
        Ok(())
    }
}

fn unit_quaternion(wxyz: [f64; 4]) -> Option<UnitQuaternion<f64>> {
    let [w, x, y, z] = wxyz;
    let q = Quaternion::new(w, x, y, z);
    let norm = q.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
        return None;
    }
    // Leave already-normalized input bit-exact so documents round-trip.
    if (norm - 1.0).abs() <= 1e-12 {
        Some(UnitQuaternion::new_unchecked(q))
    } else {
        Some(UnitQuaternion::new_normalize(q))
    }
}

pub(crate) fn chain_tip(finger: &FingerChain, pose: &[f64]) -> Vector3<f64> {
    let (rot, _) = chain_rotation(finger, pose);
    let mut phi = 0.0;
    let mut local = Vector3::zeros();
    for (&j, &len) in finger.joint_indices.iter().zip(&finger.link_lengths) {
        phi += pose[j];
        local += Vector3::new(len * phi.cos(), 0.0, len * phi.sin());
    }
    finger.base_position + rot * local
}

/// Rotation of the flexion plane frame, and the adduction axis if present.
fn chain_rotation(finger: &FingerChain, pose: &[f64]) -> (Rotation3<f64>, Option<Vector3<f64>>) {
    let base = finger.base_orientation.to_rotation_matrix();
    match finger.adduction_joint_index {
        Some(ad) => {
            let axis = base * Vector3::z();
            (base * Rotation3::from_axis_angle(&Vector3::z_axis(), pose[ad]), Some(axis))
        }
        None => (base, None),
    }
}

pub(crate) fn evaluate_chain(finger: &FingerChain, pose: &[f64]) -> ChainState {
    let (rot, ad_axis) = chain_rotation(finger, pose);
    let mut joints = Vec::with_capacity(finger.joint_indices.len() + 1);
    if let (Some(joint), Some(axis)) = (finger.adduction_joint_index, ad_axis) {
        joints.push(JointFrame {
            joint,
            position: finger.base_position,
            axis,
        });
    }
    let flex_axis = rot * -Vector3::y();
    let mut p = finger.base_position;
    let mut phi = 0.0;
    for (&j, &len) in finger.joint_indices.iter().zip(&finger.link_lengths) {
        joints.push(JointFrame {
            joint: j,
            position: p,
            axis: flex_axis,
        });
        phi += pose[j];
        p += rot * Vector3::new(len * phi.cos(), 0.0, len * phi.sin());
    }
    ChainState { joints, tip: p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn data(name: &str) -> String {
        format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    const SINGLE: &str = r#"
name = "single"
origin_pose = [0.0, 0.0]

[[joints]]
name = "prox"
min = -3.0
max = 3.0
axis = "sigma"

[[joints]]
name = "dis"
min = -3.0
max = 3.0
axis = "epsilon"

[[fingers]]
name = "f"
base_position = [0.0, 0.0, 0.0]
base_orientation = [1.0, 0.0, 0.0, 0.0]
joints = ["prox", "dis"]
link_lengths = [0.05, 0.04]
"#;

    #[test]
    fn robot_document_joint_order() {
        let m = HandModel::load(data("robot_default.model.toml")).unwrap();
        let names: Vec<_> = m.joint_names().collect();
        assert_eq!(
            names,
            ["f0_prox", "f0_dis", "f1_ad", "f1_prox", "f1_dis", "f2_ad", "f2_prox", "f2_dis"]
        );
    }

    #[test]
    fn human_document_has_sixteen_joints() {
        let m = HandModel::load(data("human_default.model.toml")).unwrap();
        assert_eq!(m.joint_count(), 16);
        for sensor in ["thumb_ad", "thumb_ip", "index_mcp", "index_pip", "index_middle_ad", "middle_mcp", "middle_pip"] {
            assert!(m.joint_index(sensor).is_some(), "{sensor}");
        }
        let again = HandModel::from_toml_str(&m.to_toml_string().unwrap(), "rt").unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn degenerate_limit_is_rejected() {
        let doc = SINGLE.replacen("min = -3.0", "min = 3.0", 1);
        match HandModel::from_toml_str(&doc, "t") {
            Err(Error::LimitInversion { joint, .. }) => assert_eq!(joint, "prox"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_joint_and_missing_field_are_named() {
        let doc = SINGLE.replace(r#"joints = ["prox", "dis"]"#, r#"joints = ["prox", 7]"#);
        let err = HandModel::from_toml_str(&doc, "t").unwrap_err();
        assert!(matches!(err, Error::DanglingJoint { ref reference, .. } if reference == "7"), "{err}");

        let doc = SINGLE.replacen("max = 3.0\n", "", 1);
        let err = HandModel::from_toml_str(&doc, "t").unwrap_err().to_string();
        assert!(err.contains("max"), "{err}");

        let doc = SINGLE.replace("link_lengths = [0.05, 0.04]", "link_lengths = [0.05]");
        let err = HandModel::from_toml_str(&doc, "t").unwrap_err().to_string();
        assert!(err.contains("link_lengths"), "{err}");
    }

    #[test]
    fn joint_shared_by_two_chains_is_rejected() {
        let doc = format!(
            "{SINGLE}\n[[fingers]]\nname = \"g\"\nbase_position = [0.0, 0.0, 0.0]\nbase_orientation = [1.0, 0.0, 0.0, 0.0]\njoints = [\"dis\"]\nlink_lengths = [0.01]\n"
        );
        assert!(HandModel::from_toml_str(&doc, "t").is_err());
    }

    #[test]
    fn straight_chain_reaches_sum_of_links() {
        let m = HandModel::from_toml_str(SINGLE, "t").unwrap();
        let tip = m.forward_kinematics(&[0.0, 0.0], "f").unwrap();
        assert!((tip - Vector3::new(0.09, 0.0, 0.0)).norm() < 1e-15);

        let tip = m.forward_kinematics(&[FRAC_PI_2, 0.0], "f").unwrap();
        assert!((tip - Vector3::new(0.0, 0.0, 0.09)).norm() < 1e-15);
    }

    #[test]
    fn robot_origin_fingertip_matches_hand_evaluation() {
        let m = HandModel::load(data("robot_default.model.toml")).unwrap();
        let tip = m.forward_kinematics(&m.origin_pose, "f1").unwrap();
        // base (0.12, -0.033, 0.04), flipped 180 deg about x, two links at 0.4 rad each
        let expected = Vector3::new(0.2470478322168568, -0.033, -0.042464900790865824);
        assert!((tip - expected).norm() < 1e-15, "{tip:?}");
    }

    #[test]
    fn unknown_finger_and_length_mismatch() {
        let m = HandModel::from_toml_str(SINGLE, "t").unwrap();
        assert!(matches!(m.forward_kinematics(&[0.0, 0.0], "x"), Err(Error::UnknownFinger(_))));
        assert!(matches!(
            m.forward_kinematics(&[0.0], "f"),
            Err(Error::LengthMismatch { expected: 2, actual: 1 })
        ));
        assert!(m.clamp_pose(&[0.0; 3]).is_err());
    }

    #[test]
    fn clamp_examples() {
        let m = HandModel::load(data("robot_default.model.toml")).unwrap();
        assert_eq!(m.clamp_pose(&m.origin_pose).unwrap(), m.origin_pose);

        let mut low = m.origin_pose.clone();
        low[0] = -5.0;
        assert_eq!(m.clamp_pose(&low).unwrap()[0], m.joints[0].min_angle);

        let high = m.clamp_pose(&[10.0; 8]).unwrap();
        for (v, j) in high.iter().zip(&m.joints) {
            assert_eq!(*v, j.max_angle);
        }
    }

    fn robot() -> HandModel {
        HandModel::load(data("robot_default.model.toml")).unwrap()
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(angles in prop::collection::vec(-4.0f64..4.0, 8)) {
            let m = robot();
            let once = m.clamp_pose(&angles).unwrap();
            prop_assert!(m.within_limits(&once));
            prop_assert_eq!(m.clamp_pose(&once).unwrap(), once);
        }

        #[test]
        fn fk_translates_with_base(angles in prop::collection::vec(-4.0f64..4.0, 8),
                                   shift in prop::array::uniform3(-1.0f64..1.0)) {
            let m = robot();
            let mut moved = m.clone();
            let v = Vector3::from(shift);
            for f in &mut moved.fingers {
                f.base_position += v;
            }
            for f in &m.fingers {
                let a = m.forward_kinematics(&angles, &f.name).unwrap();
                let b = moved.forward_kinematics(&angles, &f.name).unwrap();
                prop_assert!((b - a - v).norm() < 1e-12);
            }
        }

        #[test]
        fn fk_within_reach(angles in prop::collection::vec(-4.0f64..4.0, 8)) {
            let m = robot();
            for f in &m.fingers {
                let tip = m.forward_kinematics(&angles, &f.name).unwrap();
                prop_assert!((tip - f.base_position).norm() <= f.reach() + 1e-12);
            }
        }
    }
}
