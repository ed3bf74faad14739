use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use telemap_core::{
    calibrate, compare, map_pose, read_trajectory, replay, write_trajectory, CalibrationSet, Catalog, Error,
    FingertipMapConfig, HandModel, JointCorrespondence, Method, Retargeter, SubspaceMapping, SubspacePoint, Trajectory,
};

const FORMATS: &str = "\
FILE FORMATS

Hand model (*.model.toml):
    name = \"robot_default\"
    origin_pose = [0.4, 0.4, ...]        # radians, one per joint
    [[joints]]
    name = \"f0_prox\"  min = -0.3  max = 1.5  axis = \"sigma\"
                                         # axis: alpha | sigma | epsilon | none
    [[fingers]]
    name = \"f0\"
    base_position = [x, y, z]            # meters, hand frame
    base_orientation = [w, x, y, z]      # unit quaternion
    joints = [\"f0_prox\", \"f0_dis\"]     # flexion joints, base to tip
    link_lengths = [0.0865, 0.068]       # one per flexion joint
    adduction_joint = \"f1_ad\"            # optional
  A finger extends along its local +x and curls toward +z; the adduction
  joint turns the finger plane about the local z axis.

Calibration set (*.cal):
    model_name = \"robot_default\"
    inert = [\"alpha\"]                    # optional: axes to leave unused
    [[poses]]
    labels = [\"sigma_max\", \"alpha_min\"]  # {alpha,sigma,epsilon}_{min,max}
    angles = [...]

Subspace mapping (written by `calibrate`):
    model_name, origin, delta, delta_star, matrix (one [alpha, sigma, epsilon] row per joint)

Trajectory (*.csv):
    # model: human_default                (optional)
    time,<joint name>,<joint name>,...
    0.00,0.1,0.2,...                      (seconds, radians; time strictly increasing)

Joint correspondence (*.joint.toml):
    master_model = \"...\"  slave_model = \"...\"
    [[pairs]]
    master = \"thumb_ad\"  slave = \"f0_prox\"  gain = 1.0  offset = 0.2
  Unpaired slave joints stay at the slave origin.

Fingertip mapping (*.fingertip.toml):
    master_model = \"...\"  slave_model = \"...\"
    scale = 1.5
    rotation = [1, 0, 0, 0, -1, 0, 0, 0, -1]   # row-major, master to slave hand frame
    pairs = [[\"thumb\", \"f0\"], [\"index\", \"f1\"]]
    [ik]
    damping = 0.01  max_iterations = 200  position_tolerance = 1e-6  step_limit = 0.2

Named poses (*.poses.toml):
    model_name = \"...\"
    [poses]
    pinch = [...]

A data directory (--data-dir, --models-dir) is scanned for all of the above
by suffix.

EXIT STATUS
    0 success, 1 invalid input, 2 file could not be read or written";

#[derive(Parser)]
#[command(name = "telemap", version, about = "Retarget hand poses between dissimilar hands", after_long_help = FORMATS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a subspace mapping from a model and a calibration set.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map one master pose onto the slave hand through the subspace.
    Map {
        #[arg(long)]
        master_mapping: PathBuf,
        #[arg(long)]
        slave_mapping: PathBuf,
        /// Comma-separated joint angles, radians.
        #[arg(long, allow_hyphen_values = true)]
        pose: String,
        /// Clamp the result to this model's joint limits.
        #[arg(long)]
        slave_model: Option<PathBuf>,
    },
    /// Retarget every sample of a trajectory with one method.
    Replay {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        setup: Setup,
        /// Slave trajectory output.
        #[arg(long)]
        out: PathBuf,
        /// Method report output, JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replay a trajectory with every configured method and tabulate the results.
    Compare {
        #[arg(long)]
        trajectory: PathBuf,
        #[command(flatten)]
        setup: Setup,
        /// Comparison report output, JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8090)]
        port: u16,
        #[arg(long, default_value = "data")]
        models_dir: PathBuf,
    },
}

#[derive(Args)]
struct Setup {
    /// Directory scanned for models and configuration files.
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Master model name. Defaults to the trajectory's model.
    #[arg(long)]
    master: Option<String>,
    /// Slave model name. Defaults to the only other model in the data directory.
    #[arg(long)]
    slave: Option<String>,
    #[arg(long)]
    master_mapping: Option<PathBuf>,
    #[arg(long)]
    slave_mapping: Option<PathBuf>,
    #[arg(long)]
    correspondence: Option<PathBuf>,
    #[arg(long)]
    fingertip_config: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pose(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .enumerate()
        .map(|(i, v)| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::schema("--pose", format!("entry {}", i + 1), format!("`{v}` is not a finite number")))
        })
        .collect()
}

#[derive(Serialize)]
struct MapOutput {
    slave: Vec<f64>,
    t: SubspacePoint,
}

fn build_retargeter(setup: &Setup, trajectory: &Trajectory) -> Result<Retargeter, Error> {
    let catalog = Catalog::load(&setup.data_dir)?;
    let master_name = match (&setup.master, trajectory.model_name.as_str()) {
        (Some(m), _) => m.clone(),
        (None, "") => return Err(Error::Config("trajectory has no `# model:` line; pass --master".into())),
        (None, tagged) => tagged.to_string(),
    };
    let slave_name = match &setup.slave {
        Some(s) => s.clone(),
        None => {
            let others: Vec<_> = catalog.models().filter(|m| m.name != master_name).collect();
            match others.as_slice() {
                [only] => only.name.clone(),
                _ => return Err(Error::Config("cannot infer the slave model; pass --slave".into())),
            }
        }
    };
    let master = catalog.model(&master_name)?;
    let slave = catalog.model(&slave_name)?;
    let mapping = |path: &Option<PathBuf>, name: &str| -> Result<SubspaceMapping, Error> {
        match path {
            Some(p) => SubspaceMapping::load(p),
            None => Ok(catalog.calibrate(name)?.mapping),
        }
    };
    let mut r = Retargeter::new(
        master.clone(),
        slave.clone(),
        Arc::new(mapping(&setup.master_mapping, &master_name)?),
        Arc::new(mapping(&setup.slave_mapping, &slave_name)?),
    )?;
    let corr = match &setup.correspondence {
        Some(p) => Some(JointCorrespondence::load(p, &master, &slave)?),
        None => catalog.correspondence(&master, &slave)?,
    };
    if let Some(c) = corr {
        r = r.with_correspondence(c)?;
    }
    let tips = match &setup.fingertip_config {
        Some(p) => Some(FingertipMapConfig::load(p, &master, &slave)?),
        None => catalog.fingertip_config(&master, &slave)?,
    };
    if let Some(t) = tips {
        r = r.with_fingertip(t)?;
    }
    Ok(r)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Calibrate { model, poses, out } => {
            let model = HandModel::load(&model)?;
            let cal = calibrate(&model, &CalibrationSet::load(&poses)?)?;
            cal.mapping.save(&out)?;
            for a in &cal.report.axes {
                println!(
                    "{:<8} min {:>10.6}  max {:>10.6}  delta {:>10.6}{}",
                    a.axis.name(),
                    a.unscaled_min,
                    a.unscaled_max,
                    a.delta,
                    if a.inert { "  (inert)" } else { "" }
                );
            }
            for w in &cal.report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Map {
            master_mapping,
            slave_mapping,
            pose,
            slave_model,
        } => {
            let master = SubspaceMapping::load(&master_mapping)?;
            let slave = SubspaceMapping::load(&slave_mapping)?;
            let q = parse_pose(&pose)?;
            let t = master.project_to(&q)?;
            let mut out = map_pose(&q, &master, &slave)?;
            if let Some(path) = slave_model {
                let model = HandModel::load(&path)?;
                if model.name != slave.model_name {
                    return Err(Error::ModelMismatch {
                        expected: model.name,
                        found: slave.model_name,
                    });
                }
                out = model.clamp_pose(&out)?;
            }
            let text = toml::to_string(&MapOutput { slave: out.into_vec(), t })
                .map_err(|e| Error::Config(e.to_string()))?;
            print!("{text}");
        }
        Command::Replay {
            trajectory,
            method,
            setup,
            out,
            report,
        } => {
            let traj = read_trajectory(&trajectory)?;
            let r = build_retargeter(&setup, &traj)?;
            let result = replay(&traj, method, &r)?;
            write_trajectory(&result.trajectory, &out)?;
            if let Some(path) = report {
                write_json(&path, &result.report)?;
            }
            println!(
                "{} samples, median latency {:.2} us",
                result.report.samples,
                result.report.latency.median_s * 1e6
            );
        }
        Command::Compare {
            trajectory,
            setup,
            report,
        } => {
            let traj = read_trajectory(&trajectory)?;
            let r = build_retargeter(&setup, &traj)?;
            let cmp = compare(&traj, &r)?;
            print!("{}", cmp.to_table());
            if let Some(path) = report {
                write_json(&path, &cmp)?;
            }
        }
        Command::Serve { port, models_dir } => {
            let catalog = Catalog::load(&models_dir)?;
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
            eprintln!("listening on http://{addr}");
            runtime
                .block_on(telemap_service::serve(addr, telemap_service::AppState::new(catalog)))
                .map_err(|e| Error::io(format!("port {port}"), e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
