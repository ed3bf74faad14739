//! Comparison methods: direct joint mapping and fingertip mapping through IK.

mod fingertip;
mod ik;
mod joint;

pub use fingertip::{
    fingertip_map, fingertip_targets, rotation_from_rows, FingerOutcome, FingerPair, FingertipMapConfig, FingertipReport,
};
pub use ik::{ik_solve, IkReport, IkSettings};
pub use joint::{joint_map, CorrespondencePair, JointCorrespondence};

pub(crate) use joint::joint_map_into;
