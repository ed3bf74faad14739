//! Hand pose retargeting between kinematically dissimilar hands.
//!
//! The main method maps a master pose into a shared three-dimensional
//! teleoperation subspace (finger spread `α`, grasp aperture `σ`, finger curl
//! `ε`) and back out into the slave's joint space. Two baselines are provided
//! for comparison: per-joint affine mapping and fingertip mapping through
//! inverse kinematics.
//!
//! ```no_run
//! use telemap_core::{calibrate, map_pose, CalibrationSet, HandModel};
//!
//! let human = HandModel::load("data/human_default.model.toml")?;
//! let robot = HandModel::load("data/robot_default.model.toml")?;
//! let master = calibrate(&human, &CalibrationSet::load("data/human_default.cal")?)?.mapping;
//! let slave = calibrate(&robot, &CalibrationSet::load("data/robot_default.cal")?)?.mapping;
//!
//! let raw = map_pose(&human.origin_pose, &master, &slave)?;
//! let q_robot = robot.clamp_pose(&raw)?;
//! # Ok::<(), telemap_core::Error>(())
//! ```

pub mod baseline;
pub mod calibration;
pub mod catalog;
mod error;
pub mod hand_model;
pub mod replay;
pub mod subspace;
pub mod trajectory;

pub use baseline::{fingertip_map, ik_solve, joint_map, FingertipMapConfig, IkReport, IkSettings, JointCorrespondence};
pub use calibration::{calibrate, compute_scaling, Calibration, CalibrationReport, CalibrationSet};
pub use catalog::Catalog;
pub use error::{Error, Result};
pub use hand_model::{AxisAssignment, FingerChain, HandModel, JointDescriptor, Pose};
pub use replay::{compare, replay, ComparisonReport, Method, MethodReport, Retargeter};
pub use subspace::{
    build_projection_matrix, map_pose, map_pose_into, project_from_subspace, project_to_subspace, Axis, ProjectionMatrix,
    ScalingFactors, SubspaceMapping, SubspacePoint,
};
pub use trajectory::{read_trajectory, write_trajectory, Trajectory};
