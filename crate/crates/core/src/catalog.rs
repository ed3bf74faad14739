//! Discovery of models and configuration files in a data directory.
//!
//! | suffix             | content                                   |
//! |--------------------|-------------------------------------------|
//! | `.model.toml`      | hand model                                |
//! | `.cal`             | calibration set                           |
//! | `.joint.toml`      | joint correspondence (master -> slave)    |
//! | `.fingertip.toml`  | fingertip-mapping config (master -> slave)|
//! | `.poses.toml`      | named poses for one model                 |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::baseline::{FingertipMapConfig, JointCorrespondence};
use crate::calibration::{calibrate, Calibration, CalibrationSet};
use crate::error::{parse_toml, read_text, Error, Result};
use crate::hand_model::{HandModel, Pose};
use crate::replay::Retargeter;

#[derive(Debug, Deserialize)]
struct PairHeader {
    master_model: String,
    slave_model: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseLibrary {
    model_name: String,
    poses: BTreeMap<String, Pose>,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    models: BTreeMap<String, Arc<HandModel>>,
    calibrations: BTreeMap<String, CalibrationSet>,
    correspondences: BTreeMap<(String, String), PathBuf>,
    fingertip_configs: BTreeMap<(String, String), PathBuf>,
    poses: BTreeMap<String, BTreeMap<String, Pose>>,
}

impl Catalog {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = entries
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
            .collect::<Result<Vec<_>>>()?;
        paths.sort();

        let mut catalog = Catalog::default();
        for path in paths {
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let origin = path.display().to_string();
            if name.ends_with(".model.toml") {
                let m = HandModel::load(&path)?;
                catalog.models.insert(m.name.clone(), Arc::new(m));
            } else if name.ends_with(".cal") {
                let c = CalibrationSet::load(&path)?;
                catalog.calibrations.insert(c.model_name.clone(), c);
            } else if name.ends_with(".joint.toml") || name.ends_with(".fingertip.toml") {
                let h: PairHeader = parse_toml(&read_text(&path)?, &origin)?;
                let key = (h.master_model, h.slave_model);
                if name.ends_with(".joint.toml") {
                    catalog.correspondences.insert(key, path);
                } else {
                    catalog.fingertip_configs.insert(key, path);
                }
            } else if name.ends_with(".poses.toml") {
                let lib: PoseLibrary = parse_toml(&read_text(&path)?, &origin)?;
                catalog.poses.entry(lib.model_name).or_default().extend(lib.poses);
            }
        }
        Ok(catalog)
    }

    pub fn models(&self) -> impl Iterator<Item = &Arc<HandModel>> {
        self.models.values()
    }

    pub fn model(&self, name: &str) -> Result<Arc<HandModel>> {
        self.models
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Config(format!("no model named `{name}`")))
    }

    pub fn calibration_set(&self, model: &str) -> Result<&CalibrationSet> {
        self.calibrations
            .get(model)
            .ok_or_else(|| Error::Config(format!("no calibration file for model `{model}`")))
    }

    pub fn calibrate(&self, model: &str) -> Result<Calibration> {
        calibrate(&*self.model(model)?, self.calibration_set(model)?)
    }

    pub fn named_pose(&self, model: &str, pose: &str) -> Result<&Pose> {
        self.poses
            .get(model)
            .and_then(|p| p.get(pose))
            .ok_or_else(|| Error::Config(format!("no pose `{pose}` for model `{model}`")))
    }

    pub fn correspondence(&self, master: &HandModel, slave: &HandModel) -> Result<Option<JointCorrespondence>> {
        self.correspondences
            .get(&(master.name.clone(), slave.name.clone()))
            .map(|p| JointCorrespondence::load(p, master, slave))
            .transpose()
    }

    pub fn fingertip_config(&self, master: &HandModel, slave: &HandModel) -> Result<Option<FingertipMapConfig>> {
        self.fingertip_configs
            .get(&(master.name.clone(), slave.name.clone()))
            .map(|p| FingertipMapConfig::load(p, master, slave))
            .transpose()
    }

    /// Calibrates both hands and attaches whatever baseline configs exist
    /// for the pair.
    pub fn retargeter(&self, master: &str, slave: &str) -> Result<Retargeter> {
        let m = self.model(master)?;
        let s = self.model(slave)?;
        let mut r = Retargeter::new(
            m.clone(),
            s.clone(),
            Arc::new(self.calibrate(master)?.mapping),
            Arc::new(self.calibrate(slave)?.mapping),
        )?;
        if let Some(c) = self.correspondence(&m, &s)? {
            r = r.with_correspondence(c)?;
        }
        if let Some(f) = self.fingertip_config(&m, &s)? {
            r = r.with_fingertip(f)?;
        }
        Ok(r)
    }
}
