use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use telemap_core::{calibrate, CalibrationSet, Catalog, HandModel, Method};
use telemap_service::{router, AppState, ModelSummary};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn app() -> Router {
    router(AppState::new(Catalog::load(data_dir()).unwrap()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

async fn open(app: &Router, method: &str) -> String {
    let (status, body) = call(
        app,
        "POST",
        "/session",
        Some(json!({"master": "human_default", "slave": "robot_default", "method": method})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[tokio::test]
async fn models_lists_limits_and_chains() {
    let app = app();
    let (status, body) = call(&app, "GET", "/models", None).await;
    assert_eq!(status, StatusCode::OK);
    let models: Vec<ModelSummary> = serde_json::from_value(body).unwrap();
    let robot = models.iter().find(|m| m.name == "robot_default").unwrap();
    assert_eq!(robot.joints.len(), 8);
    assert_eq!(robot.joints[2].name, "f1_ad");
    assert_eq!((robot.joints[2].min, robot.joints[2].max), (-0.5, 0.5));
    assert_eq!(robot.fingers[1].adduction_joint.as_deref(), Some("f1_ad"));
    assert_eq!(robot.fingers[0].joints, ["f0_prox", "f0_dis"]);
}

#[tokio::test]
async fn origin_maps_to_origin() {
    let app = app();
    let c = Catalog::load(data_dir()).unwrap();
    let human = c.model("human_default").unwrap();
    let robot = c.model("robot_default").unwrap();
    let id = open(&app, "subspace").await;
    let (status, body) = call(
        &app,
        "POST",
        &format!("/session/{id}/pose"),
        Some(json!({"angles": human.origin_pose.to_vec()})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(floats(&body["slave"]), robot.origin_pose.to_vec());
    assert_eq!(body["t"], json!({"alpha": 0.0, "sigma": 0.0, "epsilon": 0.0}));
    assert_eq!(body["fingertips"]["master"].as_array().unwrap().len(), human.fingers.len());
    assert_eq!(body["fingertips"]["slave"].as_array().unwrap().len(), 3);
    assert!(body["convergence"].is_null());
}

#[tokio::test]
async fn unit_sigma_move_with_unit_scaling() {
    // calibration extrema at ±0.5 on every axis give δ = (1, 1, 1)
    let dir = tempfile::tempdir().unwrap();
    let model_text = std::fs::read_to_string(data_dir().join("robot_default.model.toml")).unwrap();
    std::fs::write(dir.path().join("robot.model.toml"), &model_text).unwrap();
    let robot = HandModel::from_toml_str(&model_text, "robot").unwrap();
    let shift = |sign: f64| -> Vec<f64> {
        let (a, s) = (0.5 / 2f64.sqrt(), 0.5 / 3f64.sqrt());
        robot
            .joints
            .iter()
            .zip(robot.origin_pose.iter())
            .map(|(j, o)| match j.axis_assignment {
                telemap_core::AxisAssignment::Alpha => o + sign * a,
                _ => o + sign * s,
            })
            .collect()
    };
    let cal = format!(
        "model_name = \"robot_default\"\n\n[[poses]]\nlabels = [\"alpha_max\", \"sigma_max\", \"epsilon_max\"]\nangles = {:?}\n\n[[poses]]\nlabels = [\"alpha_min\", \"sigma_min\", \"epsilon_min\"]\nangles = {:?}\n",
        shift(1.0),
        shift(-1.0)
    );
    std::fs::write(dir.path().join("robot.cal"), cal).unwrap();
    let app = router(AppState::new(Catalog::load(dir.path()).unwrap()));

    let (status, body) = call(
        &app,
        "POST",
        "/session",
        Some(json!({"master": "robot_default", "slave": "robot_default", "method": "subspace"})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let id = body["id"].as_str().unwrap();

    let mut q = robot.origin_pose.to_vec();
    for (i, j) in robot.joints.iter().enumerate() {
        if j.axis_assignment == telemap_core::AxisAssignment::Sigma {
            q[i] += 1.0 / 3f64.sqrt();
        }
    }
    let (status, body) = call(&app, "POST", &format!("/session/{id}/pose"), Some(json!({"angles": q}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let t = [&body["t"]["alpha"], &body["t"]["sigma"], &body["t"]["epsilon"]].map(|v| v.as_f64().unwrap());
    assert!(t[0].abs() < 1e-12 && (t[1] - 1.0).abs() < 1e-12 && t[2].abs() < 1e-12, "{t:?}");
}

#[tokio::test]
async fn pose_responses_match_library_calls() {
    let app = app();
    let c = Catalog::load(data_dir()).unwrap();
    let r = c.retargeter("human_default", "robot_default").unwrap();
    let pinch = c.named_pose("human_default", "pinch").unwrap().clone();
    let power = c.named_pose("human_default", "power").unwrap().clone();
    for method in Method::ALL {
        let id = open(&app, method.name()).await;
        let mut seed = r.slave.origin_pose.clone();
        for q in [&pinch, &power, &pinch] {
            let (status, body) = call(&app, "POST", &format!("/session/{id}/pose"), Some(json!({"angles": q.to_vec()}))).await;
            assert_eq!(status, StatusCode::OK, "{body}");
            let want = r.retarget(method, q, &seed).unwrap();
            assert_eq!(floats(&body["slave"]), want.slave.to_vec(), "{method}");
            assert_eq!(body["t"]["sigma"].as_f64().unwrap(), want.subspace.sigma);
            assert_eq!(body["convergence"].is_null(), method != Method::Fingertip);
            seed = want.slave;
        }
    }
}

#[tokio::test]
async fn interleaved_sessions_do_not_interfere() {
    let app = app();
    let c = Catalog::load(data_dir()).unwrap();
    let pinch = c.named_pose("human_default", "pinch").unwrap().to_vec();
    let power = c.named_pose("human_default", "power").unwrap().to_vec();

    // reference: each session alone
    let mut alone = Vec::new();
    for q in [&pinch, &power] {
        let id = open(&app, "fingertip").await;
        let mut outs = Vec::new();
        for _ in 0..3 {
            let (_, body) = call(&app, "POST", &format!("/session/{id}/pose"), Some(json!({"angles": q}))).await;
            outs.push(body["slave"].clone());
        }
        alone.push(outs);
    }

    let a = open(&app, "fingertip").await;
    let b = open(&app, "fingertip").await;
    for (want_a, want_b) in alone[0].iter().zip(&alone[1]) {
        let (_, ra) = call(&app, "POST", &format!("/session/{a}/pose"), Some(json!({"angles": pinch}))).await;
        let (_, rb) = call(&app, "POST", &format!("/session/{b}/pose"), Some(json!({"angles": power}))).await;
        assert_eq!(&ra["slave"], want_a);
        assert_eq!(&rb["slave"], want_b);
    }
}

#[tokio::test]
async fn method_switching() {
    let app = app();
    let id = open(&app, "subspace").await;
    let (status, body) = call(&app, "POST", &format!("/session/{id}/method"), Some(json!({"method": "joint"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["method"], "joint");
    let c = Catalog::load(data_dir()).unwrap();
    let q = c.model("human_default").unwrap().origin_pose.to_vec();
    let (_, body) = call(&app, "POST", &format!("/session/{id}/pose"), Some(json!({"angles": q}))).await;
    assert_eq!(body["method"], "joint");

    // no baseline configs are shipped for robot -> human
    let (status, _) = call(
        &app,
        "POST",
        "/session",
        Some(json!({"master": "robot_default", "slave": "human_default", "method": "joint"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, body) = call(
        &app,
        "POST",
        "/session",
        Some(json!({"master": "robot_default", "slave": "human_default", "method": "subspace"})),
    )
    .await;
    let back = body["id"].as_str().unwrap();
    assert_eq!(status, StatusCode::CREATED);
    let (status, _) = call(&app, "POST", &format!("/session/{back}/method"), Some(json!({"method": "fingertip"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let id = open(&app, "subspace").await;
    let pose = |angles: Value| Some(json!({ "angles": angles }));

    let (status, body) = call(&app, "POST", &format!("/session/{id}/pose"), pose(json!([0.1, 0.2]))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("16"), "{body}");
    let (status, _) = call(&app, "POST", &format!("/session/{id}/pose"), pose(json!(["x"]))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", &format!("/session/{id}/pose"), pose(json!(null))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let unknown = uuid::Uuid::new_v4();
    let (status, _) = call(&app, "POST", &format!("/session/{unknown}/pose"), pose(json!([0.0]))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/session/not-a-uuid/method", Some(json!({"method": "joint"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(
        &app,
        "POST",
        "/session",
        Some(json!({"master": "nobody", "slave": "robot_default", "method": "subspace"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/calibrate", Some(json!({"model": "nobody", "calibration": ""}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn idle_sessions_are_evicted() {
    let state = AppState::with_idle_timeout(Catalog::load(data_dir()).unwrap(), Duration::from_millis(50));
    let sessions = state.sessions.clone();
    let app = router(state);
    let id = open(&app, "subspace").await;
    assert_eq!(sessions.len(), 1);
    tokio::time::sleep(Duration::from_millis(120)).await;
    let (status, _) = call(&app, "POST", &format!("/session/{id}/method"), Some(json!({"method": "joint"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(sessions.is_empty());
}

#[tokio::test]
async fn calibrate_matches_library_output() {
    let app = app();
    let text = std::fs::read_to_string(data_dir().join("robot_default.cal")).unwrap();
    let robot = HandModel::load(data_dir().join("robot_default.model.toml")).unwrap();
    let set = CalibrationSet::from_toml_str(&text, "robot_default.cal").unwrap();
    let expected = calibrate(&robot, &set).unwrap().mapping.to_toml_string().unwrap();

    let (status, body) = call(&app, "POST", "/calibrate", Some(json!({"model": "robot_default", "calibration": text}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["mapping"].as_str().unwrap(), expected);
    assert_eq!(body["report"]["axes"].as_array().unwrap().len(), 3);

    let structured = serde_json::to_value(&set).unwrap();
    let (status, body) = call(&app, "POST", "/calibrate", Some(json!({"model": "robot_default", "calibration": structured}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["mapping"].as_str().unwrap(), expected);

    let (status, _) = call(&app, "POST", "/calibrate", Some(json!({"model": "robot_default", "calibration": "poses = 3"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}
