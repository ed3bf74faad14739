//! Method dispatch, trajectory replay and the cross-method comparison report.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{fingertip_map, fingertip_targets, joint_map_into, FingertipMapConfig, FingertipReport, JointCorrespondence};
use crate::error::{Error, Result};
use crate::hand_model::{check_finite, HandModel, Pose};
use crate::subspace::{map_pose_into, SubspaceMapping, SubspacePoint};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Subspace,
    Joint,
    Fingertip,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Subspace, Method::Joint, Method::Fingertip];

    pub fn name(self) -> &'static str {
        match self {
            Method::Subspace => "subspace",
            Method::Joint => "joint",
            Method::Fingertip => "fingertip",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`; expected subspace, joint or fingertip")))
    }
}

/// Everything needed to drive one slave hand from one master hand.
#[derive(Debug, Clone)]
pub struct Retargeter {
    pub master: Arc<HandModel>,
    pub slave: Arc<HandModel>,
    pub master_mapping: Arc<SubspaceMapping>,
    pub slave_mapping: Arc<SubspaceMapping>,
    pub correspondence: Option<Arc<JointCorrespondence>>,
    pub fingertip: Option<Arc<FingertipMapConfig>>,
}

/// Result of retargeting one master pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Retargeted {
    /// Clamped to the slave's joint limits.
    pub slave: Pose,
    /// The master pose in the subspace, whatever the method.
    pub subspace: SubspacePoint,
    pub fingertip: Option<FingertipReport>,
}

impl Retargeter {
    pub fn new(
        master: Arc<HandModel>,
        slave: Arc<HandModel>,
        master_mapping: Arc<SubspaceMapping>,
        slave_mapping: Arc<SubspaceMapping>,
    ) -> Result<Self> {
        for (model, mapping) in [(&master, &master_mapping), (&slave, &slave_mapping)] {
            if mapping.joint_count() != model.joint_count() {
                return Err(Error::LengthMismatch {
                    expected: model.joint_count(),
                    actual: mapping.joint_count(),
                });
            }
            if mapping.model_name != model.name {
                return Err(Error::ModelMismatch {
                    expected: model.name.clone(),
                    found: mapping.model_name.clone(),
                });
            }
        }
        Ok(Retargeter {
            master,
            slave,
            master_mapping,
            slave_mapping,
            correspondence: None,
            fingertip: None,
        })
    }

    pub fn with_correspondence(mut self, corr: JointCorrespondence) -> Result<Self> {
        for p in corr.pairs() {
            if p.master_joint >= self.master.joint_count() || p.slave_joint >= self.slave.joint_count() {
                return Err(Error::Config(format!(
                    "correspondence pair {} -> {} is out of range for {} -> {}",
                    p.master_joint, p.slave_joint, self.master.name, self.slave.name
                )));
            }
        }
        self.correspondence = Some(Arc::new(corr));
        Ok(self)
    }

    pub fn with_fingertip(mut self, cfg: FingertipMapConfig) -> Result<Self> {
        cfg.validate(&self.master, &self.slave)?;
        self.fingertip = Some(Arc::new(cfg));
        Ok(self)
    }

    /// Errors if `method` needs a configuration this retargeter lacks.
    pub fn supports(&self, method: Method) -> Result<()> {
        let missing = match method {
            Method::Subspace => false,
            Method::Joint => self.correspondence.is_none(),
            Method::Fingertip => self.fingertip.is_none(),
        };
        if missing {
            return Err(Error::Config(format!(
                "no {method} mapping configured for {} -> {}",
                self.master.name, self.slave.name
            )));
        }
        Ok(())
    }

    /// Maps one master pose. `seed` warm-starts fingertip IK and is ignored
    /// by the other methods.
    pub fn retarget(&self, method: Method, q_master: &[f64], seed: &[f64]) -> Result<Retargeted> {
        self.supports(method)?;
        self.master.check_pose(q_master)?;
        check_finite(q_master)?;
        let subspace = self.master_mapping.project_to(q_master)?;
        let mut slave = self.slave.origin_pose.clone();
        let mut fingertip = None;
        match method {
            Method::Subspace => {
                map_pose_into(q_master, &self.master_mapping, &self.slave_mapping, &mut slave)?;
                self.slave.clamp_in_place(&mut slave)?;
            }
            Method::Joint => {
                let corr = self.correspondence.as_deref().expect("checked by supports");
                joint_map_into(q_master, corr, &self.slave, &mut slave)?;
            }
            Method::Fingertip => {
                let cfg = self.fingertip.as_deref().expect("checked by supports");
                let (pose, report) = fingertip_map(q_master, &self.master, &self.slave, cfg, seed)?;
                slave = pose;
                fingertip = Some(report);
            }
        }
        Ok(Retargeted { slave, subspace, fingertip })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyBin {
    /// Upper edge in seconds; `None` for the overflow bin.
    pub upper_s: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyStats {
    pub median_s: f64,
    pub p95_s: f64,
    pub mean_s: f64,
    pub max_s: f64,
    pub histogram: Vec<LatencyBin>,
}

const LATENCY_EDGES_S: [f64; 10] = [1e-6, 2e-6, 5e-6, 1e-5, 2e-5, 5e-5, 1e-4, 1e-3, 1e-2, 1e-1];

impl LatencyStats {
    fn from_samples(mut samples: Vec<f64>) -> Self {
        let mut histogram: Vec<LatencyBin> = LATENCY_EDGES_S
            .iter()
            .map(|&e| LatencyBin { upper_s: Some(e), count: 0 })
            .chain(std::iter::once(LatencyBin { upper_s: None, count: 0 }))
            .collect();
        for &s in &samples {
            let bin = LATENCY_EDGES_S.iter().position(|&e| s <= e).unwrap_or(LATENCY_EDGES_S.len());
            histogram[bin].count += 1;
        }
        samples.sort_by(f64::total_cmp);
        let pick = |q: f64| {
            if samples.is_empty() {
                0.0
            } else {
                samples[((samples.len() - 1) as f64 * q).round() as usize]
            }
        };
        LatencyStats {
            median_s: pick(0.5),
            p95_s: pick(0.95),
            mean_s: if samples.is_empty() { 0.0 } else { samples.iter().sum::<f64>() / samples.len() as f64 },
            max_s: samples.last().copied().unwrap_or(0.0),
            histogram,
        }
    }
}

/// How far slave outputs sit from the slave's own subspace image:
/// `‖project_from(project_to(q_s)) − q_s‖∞` per sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStats {
    pub mean: f64,
    pub max: f64,
    /// Samples with every slave joint strictly inside its limits.
    pub interior_samples: usize,
    /// Largest residual over the interior samples.
    pub max_interior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: Method,
    pub samples: usize,
    /// Mean distance between the slave fingertips and the scaled, rotated
    /// master fingertips, meters. Needs a fingertip configuration.
    pub mean_fingertip_error_m: Option<f64>,
    pub max_joint_velocity_rad_s: f64,
    pub round_trip_residual: ResidualStats,
    pub latency: LatencyStats,
    /// Fingertip method only: samples where some finger's IK did not converge.
    pub ik_nonconverged_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    pub trajectory: Trajectory,
    pub report: MethodReport,
}

/// Applies `method` to every sample. Fingertip IK starts from the slave
/// origin on the first sample and from the previous output afterwards.
pub fn replay(trajectory: &Trajectory, method: Method, r: &Retargeter) -> Result<ReplayOutput> {
    trajectory.check_model(&r.master)?;
    r.supports(method)?;
    let mut out = Trajectory::for_model(&r.slave);
    let mut latencies = Vec::with_capacity(trajectory.len());
    let mut nonconverged = 0;

    match method {
        Method::Subspace | Method::Joint => {
            let mut buf = r.slave.origin_pose.clone();
            for s in trajectory.samples() {
                let start = Instant::now();
                if method == Method::Subspace {
                    map_pose_into(&s.pose, &r.master_mapping, &r.slave_mapping, &mut buf)?;
                    r.slave.clamp_in_place(&mut buf)?;
                } else {
                    let corr = r.correspondence.as_deref().expect("checked by supports");
                    joint_map_into(&s.pose, corr, &r.slave, &mut buf)?;
                }
                latencies.push(start.elapsed().as_secs_f64());
                out.push(s.time, buf.clone())?;
            }
        }
        Method::Fingertip => {
            let cfg = r.fingertip.as_deref().expect("checked by supports");
            let mut seed = r.slave.origin_pose.clone();
            for s in trajectory.samples() {
                let start = Instant::now();
                let (pose, report) = fingertip_map(&s.pose, &r.master, &r.slave, cfg, &seed)?;
                latencies.push(start.elapsed().as_secs_f64());
                if !report.converged() {
                    nonconverged += 1;
                }
                seed.copy_from_slice(&pose);
                out.push(s.time, pose)?;
            }
        }
    }

    let report = MethodReport {
        method,
        samples: trajectory.len(),
        mean_fingertip_error_m: fingertip_error(trajectory, &out, r)?,
        max_joint_velocity_rad_s: max_joint_velocity(&out),
        round_trip_residual: residuals(&out, r)?,
        latency: LatencyStats::from_samples(latencies),
        ik_nonconverged_samples: (method == Method::Fingertip).then_some(nonconverged),
    };
    Ok(ReplayOutput { trajectory: out, report })
}

fn fingertip_error(master: &Trajectory, slave: &Trajectory, r: &Retargeter) -> Result<Option<f64>> {
    let Some(cfg) = r.fingertip.as_deref() else {
        return Ok(None);
    };
    let mut total = 0.0;
    let mut count = 0usize;
    for (m, s) in master.samples().iter().zip(slave.samples()) {
        let targets = fingertip_targets(&m.pose, &r.master, cfg)?;
        for (pair, target) in cfg.finger_pairs.iter().zip(targets) {
            total += (r.slave.forward_kinematics(&s.pose, &pair.slave)? - target).norm();
            count += 1;
        }
    }
    Ok(Some(if count == 0 { 0.0 } else { total / count as f64 }))
}

fn max_joint_velocity(t: &Trajectory) -> f64 {
    t.samples()
        .windows(2)
        .flat_map(|w| {
            let dt = w[1].time - w[0].time;
            w[0].pose.iter().zip(w[1].pose.iter()).map(move |(a, b)| (b - a).abs() / dt)
        })
        .fold(0.0, f64::max)
}

fn residuals(slave: &Trajectory, r: &Retargeter) -> Result<ResidualStats> {
    let mut stats = ResidualStats {
        mean: 0.0,
        max: 0.0,
        interior_samples: 0,
        max_interior: 0.0,
    };
    for s in slave.samples() {
        let back = r.slave_mapping.project_from(r.slave_mapping.project_to(&s.pose)?)?;
        let res = back.iter().zip(s.pose.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        stats.mean += res;
        stats.max = stats.max.max(res);
        let interior = r.slave.joints.iter().zip(s.pose.iter()).all(|(j, &v)| v > j.min_angle && v < j.max_angle);
        if interior {
            stats.interior_samples += 1;
            stats.max_interior = stats.max_interior.max(res);
        }
    }
    if !slave.is_empty() {
        stats.mean /= slave.len() as f64;
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub master_model: String,
    pub slave_model: String,
    pub samples: usize,
    pub methods: Vec<MethodReport>,
}

/// Replays the trajectory with every method the retargeter is configured for.
pub fn compare(trajectory: &Trajectory, r: &Retargeter) -> Result<ComparisonReport> {
    let methods = Method::ALL
        .into_iter()
        .filter(|m| r.supports(*m).is_ok())
        .map(|m| replay(trajectory, m, r).map(|o| o.report))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        master_model: r.master.name.clone(),
        slave_model: r.slave.name.clone(),
        samples: trajectory.len(),
        methods,
    })
}

impl ComparisonReport {
    /// Fixed-width table, one column per method.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} -> {}, {} samples", self.master_model, self.slave_model, self.samples);
        let _ = write!(s, "{:<32}", "metric");
        for m in &self.methods {
            let _ = write!(s, "{:>14}", m.method.name());
        }
        s.push('\n');
        type Cell = fn(&MethodReport) -> String;
        let rows: [(&str, Cell); 7] = [
            ("mean fingertip error (m)", |m| m.mean_fingertip_error_m.map_or("-".into(), |v| format!("{v:.3e}"))),
            ("max joint velocity (rad/s)", |m| format!("{:.3}", m.max_joint_velocity_rad_s)),
            ("round-trip residual, max", |m| format!("{:.3e}", m.round_trip_residual.max)),
            ("round-trip residual, interior", |m| format!("{:.3e}", m.round_trip_residual.max_interior)),
            ("median latency (us)", |m| format!("{:.2}", m.latency.median_s * 1e6)),
            ("p95 latency (us)", |m| format!("{:.2}", m.latency.p95_s * 1e6)),
            ("IK non-converged samples", |m| m.ik_nonconverged_samples.map_or("-".into(), |v| v.to_string())),
        ];
        for (label, cell) in rows {
            let _ = write!(s, "{label:<32}");
            for m in &self.methods {
                let _ = write!(s, "{:>14}", cell(m));
            }
            s.push('\n');
        }
        s
    }
}
