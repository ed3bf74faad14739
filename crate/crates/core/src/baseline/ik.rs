use nalgebra::{Matrix3, Matrix3xX, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand_model::{chain_tip, evaluate_chain, HandModel, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkSettings {
    /// Initial damping λ. It adapts during the solve: halved after an
    /// accepted step, multiplied by ten after a rejected one.
    pub damping: f64,
    pub max_iterations: usize,
    /// Meters.
    pub position_tolerance: f64,
    /// Largest per-joint change in one iteration, radians.
    pub step_limit: f64,
}

impl Default for IkSettings {
    fn default() -> Self {
        IkSettings {
            damping: 0.01,
            max_iterations: 200,
            position_tolerance: 1e-6,
            step_limit: 0.2,
        }
    }
}

impl IkSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.damping) || !ok(self.position_tolerance) || !ok(self.step_limit) || self.max_iterations == 0 {
            return Err(Error::Config(format!("IK settings must all be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IkReport {
    pub converged: bool,
    /// Iterations run after the initial error check.
    pub iterations: usize,
    pub rejected_steps: usize,
    /// Fingertip distance to the target at exit, meters.
    pub final_error: f64,
}

const MAX_DAMPING: f64 = 1e6;

/// Damped least-squares IK for one finger chain.
///
/// Only the chain's joints move; every other entry of `seed` is returned
/// untouched. Each iteration takes `Δθ = Jᵀ(JJᵀ + λ²I)⁻¹e`, scales it so no
/// joint moves more than `step_limit`, and clamps to joint limits. Steps that
/// do not reduce the error are rejected and retried with more damping, so the
/// error never increases. Unreachable targets are not an error: the best pose
/// found is returned with `converged = false`.
pub fn ik_solve(
    model: &HandModel,
    finger: &str,
    target: &Vector3<f64>,
    seed: &[f64],
    settings: &IkSettings,
) -> Result<(Pose, IkReport)> {
    settings.validate()?;
    model.check_pose(seed)?;
    let chain = model.finger(finger)?;
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: 0 });
    }
    let joints: Vec<usize> = chain.all_joints().collect();
    let mut q = Pose::from(seed);
    for &j in &joints {
        q[j] = model.joints[j].clamp(q[j]);
    }

    let mut error = (target - chain_tip(chain, &q)).norm();
    let mut lambda = settings.damping;
    let mut iterations = 0;
    let mut rejected = 0;
    let mut jac = Matrix3xX::zeros(joints.len());
    let mut candidate = q.clone();

    while error > settings.position_tolerance && iterations < settings.max_iterations {
        iterations += 1;
        let state = evaluate_chain(chain, &q);
        let e = target - state.tip;
        for (c, frame) in state.joints.iter().enumerate() {
            jac.set_column(c, &frame.axis.cross(&(state.tip - frame.position)));
        }
        let system = &jac * jac.transpose() + Matrix3::identity() * (lambda * lambda);
        let Some(chol) = system.cholesky() else {
            lambda *= 10.0;
            rejected += 1;
            continue;
        };
        let mut step = jac.transpose() * chol.solve(&e);
        let largest = step.amax();
        if largest > settings.step_limit {
            step *= settings.step_limit / largest;
        }

        candidate.copy_from_slice(&q);
        for (&j, d) in joints.iter().zip(step.iter()) {
            candidate[j] = model.joints[j].clamp(q[j] + d);
        }
        let next = (target - chain_tip(chain, &candidate)).norm();
        if next < error {
            std::mem::swap(&mut q, &mut candidate);
            error = next;
            lambda = (lambda * 0.5).max(settings.damping * 1e-6);
        } else {
            rejected += 1;
            lambda *= 10.0;
            if lambda > MAX_DAMPING {
                break;
            }
        }
    }

    Ok((
        q,
        IkReport {
            converged: error <= settings.position_tolerance,
            iterations,
            rejected_steps: rejected,
            final_error: error,
        },
    ))
}
