use std::path::Path;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::ik::{ik_solve, IkReport, IkSettings};
use crate::error::{parse_toml, read_text, Error, Result};
use crate::hand_model::{HandModel, Pose};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FingerPair {
    pub master: String,
    pub slave: String,
}

/// Fingertip-mapping baseline settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FingertipMapConfig {
    /// Master fingertip positions are multiplied by this before rotation.
    pub scale: f64,
    /// Master hand frame to slave hand frame.
    pub hand_frame_rotation: Rotation3<f64>,
    pub finger_pairs: Vec<FingerPair>,
    pub ik: IkSettings,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    #[serde(default)]
    master_model: Option<String>,
    #[serde(default)]
    slave_model: Option<String>,
    #[serde(default = "default_scale")]
    scale: f64,
    /// Row-major 3×3.
    #[serde(default = "identity_rows")]
    rotation: [f64; 9],
    pairs: Vec<(String, String)>,
    #[serde(default)]
    ik: IkSettings,
}

fn default_scale() -> f64 {
    1.5
}

fn identity_rows() -> [f64; 9] {
    [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
}

/// Accepts a row-major matrix only if it is a proper rotation to 1e-9.
pub fn rotation_from_rows(rows: [f64; 9]) -> Result<Rotation3<f64>> {
    let m = Matrix3::from_row_slice(&rows);
    let orthonormal = (m.transpose() * m - Matrix3::identity()).amax() <= 1e-9;
    if !orthonormal || (m.determinant() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("rotation {rows:?} is not orthonormal with determinant +1")));
    }
    Ok(Rotation3::from_matrix_unchecked(m))
}

impl FingertipMapConfig {
    pub fn new(scale: f64, hand_frame_rotation: Rotation3<f64>, finger_pairs: Vec<FingerPair>, ik: IkSettings) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::Config(format!("fingertip scale must be positive, got {scale}")));
        }
        ik.validate()?;
        Ok(FingertipMapConfig {
            scale,
            hand_frame_rotation,
            finger_pairs,
            ik,
        })
    }

    /// Every chain of `model` paired with itself, scale 1, identity rotation.
    pub fn self_map(model: &HandModel) -> Self {
        FingertipMapConfig {
            scale: 1.0,
            hand_frame_rotation: Rotation3::identity(),
            finger_pairs: model
                .fingers
                .iter()
                .map(|f| FingerPair {
                    master: f.name.clone(),
                    slave: f.name.clone(),
                })
                .collect(),
            ik: IkSettings::default(),
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let doc: ConfigDocument = parse_toml(text, origin)?;
        let pairs = doc
            .pairs
            .into_iter()
            .map(|(master, slave)| FingerPair { master, slave })
            .collect();
        Self::new(doc.scale, rotation_from_rows(doc.rotation)?, pairs, doc.ik)
    }

    /// Like [`from_toml_str`](Self::from_toml_str), also checking any declared
    /// model names and chain names against the two models.
    pub fn load(path: impl AsRef<Path>, master: &HandModel, slave: &HandModel) -> Result<Self> {
        let path = path.as_ref();
        let text = read_text(path)?;
        let origin = path.display().to_string();
        let doc: ConfigDocument = parse_toml(&text, &origin)?;
        for (declared, model) in [(&doc.master_model, master), (&doc.slave_model, slave)] {
            if let Some(name) = declared {
                if name != &model.name {
                    return Err(Error::ModelMismatch {
                        expected: model.name.clone(),
                        found: name.clone(),
                    });
                }
            }
        }
        let cfg = Self::from_toml_str(&text, &origin)?;
        cfg.validate(master, slave)?;
        Ok(cfg)
    }

    /// Checks that every pair names existing chains.
    pub fn validate(&self, master: &HandModel, slave: &HandModel) -> Result<()> {
        for p in &self.finger_pairs {
            master.finger(&p.master)?;
            slave.finger(&p.slave)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FingerOutcome {
    pub master: String,
    pub slave: String,
    /// Desired slave fingertip, slave hand frame.
    pub target: [f64; 3],
    /// The same point in the slave finger's base frame.
    pub target_in_finger_frame: [f64; 3],
    pub ik: IkReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FingertipReport {
    pub fingers: Vec<FingerOutcome>,
}

impl FingertipReport {
    pub fn converged(&self) -> bool {
        self.fingers.iter().all(|f| f.ik.converged)
    }

    pub fn max_error(&self) -> f64 {
        self.fingers.iter().map(|f| f.ik.final_error).fold(0.0, f64::max)
    }
}

/// Slave-hand-frame fingertip targets, one per configured pair:
/// `R · (scale · FK_master)`.
pub fn fingertip_targets(q_master: &[f64], master: &HandModel, cfg: &FingertipMapConfig) -> Result<Vec<Vector3<f64>>> {
    master.check_pose(q_master)?;
    cfg.finger_pairs
        .iter()
        .map(|p| {
            let tip = master.forward_kinematics(q_master, &p.master)?;
            Ok(cfg.hand_frame_rotation * (tip * cfg.scale))
        })
        .collect()
}

/// Fingertip-mapping baseline: master fingertips are scaled, rotated into
/// the slave hand frame, and reached by per-finger IK starting from
/// `slave_seed`. Slave joints outside the paired chains keep their seed values.
pub fn fingertip_map(
    q_master: &[f64],
    master: &HandModel,
    slave: &HandModel,
    cfg: &FingertipMapConfig,
    slave_seed: &[f64],
) -> Result<(Pose, FingertipReport)> {
    slave.check_pose(slave_seed)?;
    let targets = fingertip_targets(q_master, master, cfg)?;
    let mut pose = Pose::from(slave_seed);
    let mut fingers = Vec::with_capacity(targets.len());
    for (pair, target) in cfg.finger_pairs.iter().zip(targets) {
        let chain = slave.finger(&pair.slave)?;
        let local = chain.to_finger_frame(&target);
        let (solved, ik) = ik_solve(slave, &pair.slave, &target, &pose, &cfg.ik)?;
        pose = solved;
        fingers.push(FingerOutcome {
            master: pair.master.clone(),
            slave: pair.slave.clone(),
            target: target.into(),
            target_in_finger_frame: local.into(),
            ik,
        });
    }
    Ok((pose, FingertipReport { fingers }))
}
