use std::path::PathBuf;

use telemap_core::{
    compare, map_pose, read_trajectory, replay, write_trajectory, Catalog, HandModel, Method, SubspaceMapping,
};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn catalog() -> Catalog {
    Catalog::load(data_dir()).unwrap()
}

// Hand-expanded mapping for one pose, written out per joint.
fn expand(q: &[f64], master: &HandModel, m: &SubspaceMapping, slave: &HandModel, s: &SubspaceMapping) -> Vec<f64> {
    let group = |model: &HandModel, axis: &str| -> Vec<usize> {
        model
            .joints
            .iter()
            .enumerate()
            .filter(|(_, j)| format!("{:?}", j.axis_assignment).to_lowercase() == axis)
            .map(|(i, _)| i)
            .collect()
    };
    let mut out = s.origin().to_vec();
    for (k, axis) in ["alpha", "sigma", "epsilon"].into_iter().enumerate() {
        let gm = group(master, axis);
        let gs = group(slave, axis);
        let t: f64 = gm.iter().map(|&i| q[i] - m.origin()[i]).sum::<f64>() / (gm.len() as f64).sqrt();
        let t = t * m.scaling().delta()[k] * s.scaling().delta_star()[k];
        for &i in &gs {
            out[i] += t / (gs.len() as f64).sqrt();
        }
    }
    out
}

#[test]
fn pinch_pose_matches_hand_expansion() {
    let c = catalog();
    let (h, r) = (c.model("human_default").unwrap(), c.model("robot_default").unwrap());
    let (hm, rm) = (c.calibrate(&h.name).unwrap().mapping, c.calibrate(&r.name).unwrap().mapping);
    for name in ["pinch", "power", "origin"] {
        let q = c.named_pose(&h.name, name).unwrap();
        let got = map_pose(q, &hm, &rm).unwrap();
        let want = expand(q, &h, &hm, &r, &rm);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{name}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn replay_is_deterministic_for_every_method() {
    let c = catalog();
    let r = c.retargeter("human_default", "robot_default").unwrap();
    let sweep = read_trajectory(data_dir().join("sweep.csv")).unwrap();
    for method in Method::ALL {
        let a = replay(&sweep, method, &r).unwrap();
        let b = replay(&sweep, method, &r).unwrap();
        assert_eq!(a.trajectory, b.trajectory, "{method}");
        assert_eq!(a.trajectory.len(), sweep.len());
        assert_eq!(a.trajectory.model_name, "robot_default");
        assert!(a.trajectory.samples().iter().all(|s| r.slave.within_limits(&s.pose)));
    }
}

#[test]
fn replay_output_survives_the_file_round_trip() {
    let c = catalog();
    let r = c.retargeter("human_default", "robot_default").unwrap();
    let sweep = read_trajectory(data_dir().join("sweep.csv")).unwrap();
    let out = replay(&sweep, Method::Subspace, &r).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("robot.csv");
    write_trajectory(&out.trajectory, &path).unwrap();
    let back = read_trajectory(&path).unwrap();
    back.check_model(&r.slave).unwrap();
    assert_eq!(back, out.trajectory);
}

#[test]
fn comparison_covers_all_methods() {
    let c = catalog();
    let r = c.retargeter("human_default", "robot_default").unwrap();
    let sweep = read_trajectory(data_dir().join("sweep.csv")).unwrap();
    let report = compare(&sweep, &r).unwrap();
    assert_eq!(report.methods.len(), 3);
    assert_eq!(report.samples, 500);
    let table = report.to_table();
    for m in Method::ALL {
        assert!(table.contains(m.name()), "{table}");
    }
    let fingertip = report.methods.iter().find(|m| m.method == Method::Fingertip).unwrap();
    assert!(fingertip.mean_fingertip_error_m.is_some());
}

#[test]
fn missing_baseline_config_is_reported() {
    let c = catalog();
    let r = c.retargeter("robot_default", "human_default").unwrap();
    let q = c.model("robot_default").unwrap().origin_pose.clone();
    let seed = c.model("human_default").unwrap().origin_pose.clone();
    assert!(r.retarget(Method::Subspace, &q, &seed).is_ok());
    assert!(r.retarget(Method::Joint, &q, &seed).is_err());
    assert!(r.retarget(Method::Fingertip, &q, &seed).is_err());
}

#[test]
fn self_retargeting_is_identity_on_the_span() {
    let c = catalog();
    let h = c.model("human_default").unwrap();
    let m = c.calibrate(&h.name).unwrap().mapping;
    for name in ["origin", "pinch", "power"] {
        let q = c.named_pose(&h.name, name).unwrap();
        let once = map_pose(q, &m, &m).unwrap();
        let twice = map_pose(&once, &m, &m).unwrap();
        for (a, b) in once.iter().zip(twice.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
