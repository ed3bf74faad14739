use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{parse_toml, read_text, Error, Result};
use crate::hand_model::{HandModel, JointRef, Pose};

/// Drives `slave[slave_joint] = gain · master[master_joint] + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrespondencePair {
    pub master_joint: usize,
    pub slave_joint: usize,
    pub gain: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointCorrespondence {
    pairs: Vec<CorrespondencePair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrespondenceDocument {
    #[serde(default)]
    master_model: Option<String>,
    #[serde(default)]
    slave_model: Option<String>,
    pairs: Vec<PairDocument>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDocument {
    master: JointRef,
    slave: JointRef,
    #[serde(default = "one")]
    gain: f64,
    #[serde(default)]
    offset: f64,
}

fn one() -> f64 {
    1.0
}

fn resolve(model: &HandModel, r: &JointRef, context: &str) -> Result<usize> {
    let found = match r {
        JointRef::Index(i) => (*i < model.joint_count()).then_some(*i),
        JointRef::Name(n) => model.joint_index(n),
    };
    found.ok_or_else(|| Error::DanglingJoint {
        context: format!("{context} (model `{}`)", model.name),
        reference: r.to_string(),
    })
}

impl JointCorrespondence {
    /// Each slave joint may be driven by at most one pair.
    pub fn new(pairs: Vec<CorrespondencePair>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, p) in pairs.iter().enumerate() {
            if !seen.insert(p.slave_joint) {
                return Err(Error::schema(
                    "joint correspondence",
                    format!("pairs[{i}].slave"),
                    format!("slave joint {} is driven twice", p.slave_joint),
                ));
            }
            if !p.gain.is_finite() || !p.offset.is_finite() {
                return Err(Error::schema("joint correspondence", format!("pairs[{i}]"), "gain and offset must be finite"));
            }
        }
        Ok(JointCorrespondence { pairs })
    }

    /// Joint `i` to joint `i`, gain 1, offset 0.
    pub fn identity(n: usize) -> Self {
        JointCorrespondence {
            pairs: (0..n)
                .map(|i| CorrespondencePair {
                    master_joint: i,
                    slave_joint: i,
                    gain: 1.0,
                    offset: 0.0,
                })
                .collect(),
        }
    }

    pub fn pairs(&self) -> &[CorrespondencePair] {
        &self.pairs
    }

    /// Parses a correspondence document, resolving joint names against both models.
    pub fn from_toml_str(text: &str, origin: &str, master: &HandModel, slave: &HandModel) -> Result<Self> {
        let doc: CorrespondenceDocument = parse_toml(text, origin)?;
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
        let pairs = doc
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(CorrespondencePair {
                    master_joint: resolve(master, &p.master, &format!("{origin}: pairs[{i}].master"))?,
                    slave_joint: resolve(slave, &p.slave, &format!("{origin}: pairs[{i}].slave"))?,
                    gain: p.gain,
                    offset: p.offset,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn load(path: impl AsRef<Path>, master: &HandModel, slave: &HandModel) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml_str(&read_text(path)?, &path.display().to_string(), master, slave)
    }
}

/// Joint-mapping baseline. Slave joints not named by any pair stay at the
/// slave origin; the result is clamped to the slave's limits.
pub fn joint_map(q_master: &[f64], correspondence: &JointCorrespondence, slave: &HandModel) -> Result<Pose> {
    let mut out = slave.origin_pose.clone();
    joint_map_into(q_master, correspondence, slave, &mut out)?;
    Ok(out)
}

pub(crate) fn joint_map_into(q_master: &[f64], correspondence: &JointCorrespondence, slave: &HandModel, out: &mut [f64]) -> Result<()> {
    slave.check_pose(out)?;
    out.copy_from_slice(&slave.origin_pose);
    for p in &correspondence.pairs {
        let Some(&m) = q_master.get(p.master_joint) else {
            return Err(Error::DanglingJoint {
                context: format!("master pose of {} angles", q_master.len()),
                reference: p.master_joint.to_string(),
            });
        };
        if p.slave_joint >= out.len() {
            return Err(Error::DanglingJoint {
                context: format!("slave model `{}`", slave.name),
                reference: p.slave_joint.to_string(),
            });
        }
        out[p.slave_joint] = p.gain * m + p.offset;
    }
    slave.clamp_in_place(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data(name: &str) -> String {
        format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn models() -> (HandModel, HandModel) {
        (
            HandModel::load(data("human_default.model.toml")).unwrap(),
            HandModel::load(data("robot_default.model.toml")).unwrap(),
        )
    }

    fn table() -> JointCorrespondence {
        let (h, r) = models();
        JointCorrespondence::load(data("human_robot.joint.toml"), &h, &r).unwrap()
    }

    #[test]
    fn identity_between_copies() {
        let (_, r) = models();
        let mut q = r.origin_pose.clone();
        q[3] = 1.1;
        q[5] = -0.2;
        assert_eq!(joint_map(&q, &JointCorrespondence::identity(8), &r).unwrap(), q);
    }

    #[test]
    fn thumb_adductor_drives_thumb_proximal() {
        let (h, r) = models();
        let corr = table();
        let p = corr.pairs().iter().find(|p| p.slave_joint == r.joint_index("f0_prox").unwrap()).unwrap();
        assert_eq!(p.master_joint, h.joint_index("thumb_ad").unwrap());
        assert_eq!(corr.pairs().len(), 8);
    }

    #[test]
    fn origins_correspond() {
        let (h, r) = models();
        let q = joint_map(&h.origin_pose, &table(), &r).unwrap();
        for (a, b) in q.iter().zip(r.origin_pose.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicate_slave_and_bad_index() {
        let pair = CorrespondencePair {
            master_joint: 0,
            slave_joint: 1,
            gain: 1.0,
            offset: 0.0,
        };
        assert!(JointCorrespondence::new(vec![pair, pair]).is_err());

        let (_, r) = models();
        let far = JointCorrespondence::new(vec![CorrespondencePair { master_joint: 40, ..pair }]).unwrap();
        assert!(joint_map(&r.origin_pose, &far, &r).is_err());
        let far = JointCorrespondence::new(vec![CorrespondencePair { slave_joint: 40, ..pair }]).unwrap();
        assert!(joint_map(&r.origin_pose, &far, &r).is_err());
    }

    #[test]
    fn unknown_joint_name_in_document() {
        let (h, r) = models();
        let doc = "pairs = [{ master = \"nope\", slave = \"f0_prox\" }]";
        assert!(matches!(
            JointCorrespondence::from_toml_str(doc, "t", &h, &r),
            Err(Error::DanglingJoint { .. })
        ));
    }

    proptest! {
        #[test]
        fn monotone_in_each_master_joint(base in prop::collection::vec(-0.2f64..1.0, 16),
                                         which in 0usize..16, bump in 0.0f64..0.5) {
            let (_, r) = models();
            let corr = table();
            let mut hi = base.clone();
            hi[which] += bump;
            let a = joint_map(&base, &corr, &r).unwrap();
            let b = joint_map(&hi, &corr, &r).unwrap();
            for p in corr.pairs().iter().filter(|p| p.master_joint == which) {
                let (x, y) = (a[p.slave_joint], b[p.slave_joint]);
                if p.gain > 0.0 { prop_assert!(y >= x); } else { prop_assert!(y <= x); }
            }
        }
    }
}
