//! Timestamped pose sequences stored as delimited text.
//!
//! ```text
//! # model: human_default
//! time,thumb_ad,thumb_mcp,...
//! 0.0,0.2,0.4,...
//! ```
//!
//! The `# model:` comment line is optional. Times are seconds, angles radians.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hand_model::{HandModel, Pose};

const MODEL_TAG: &str = "# model:";

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model_name: String,
    pub joint_names: Vec<String>,
    samples: Vec<Sample>,
}

impl Trajectory {
    /// Timestamps must be finite and strictly increasing; every pose must
    /// have one angle per joint name.
    pub fn new(model_name: impl Into<String>, joint_names: Vec<String>, samples: Vec<Sample>) -> Result<Self> {
        let mut prev = f64::NEG_INFINITY;
        for (i, s) in samples.iter().enumerate() {
            if !s.time.is_finite() || s.time <= prev {
                return Err(Error::Parse {
                    path: "trajectory".into(),
                    line: i + 1,
                    message: format!("time {} is not strictly after {prev}", s.time),
                });
            }
            prev = s.time;
            if s.pose.len() != joint_names.len() {
                return Err(Error::LengthMismatch {
                    expected: joint_names.len(),
                    actual: s.pose.len(),
                });
            }
        }
        Ok(Trajectory {
            model_name: model_name.into(),
            joint_names,
            samples,
        })
    }

    /// Empty trajectory with the model's name and joint names.
    pub fn for_model(model: &HandModel) -> Self {
        Trajectory {
            model_name: model.name.clone(),
            joint_names: model.joint_names().map(str::to_string).collect(),
            samples: Vec::new(),
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, time: f64, pose: Pose) -> Result<()> {
        let prev = self.samples.last().map_or(f64::NEG_INFINITY, |s| s.time);
        if !time.is_finite() || time <= prev {
            return Err(Error::Parse {
                path: "trajectory".into(),
                line: self.samples.len() + 1,
                message: format!("time {time} is not strictly after {prev}"),
            });
        }
        if pose.len() != self.joint_names.len() {
            return Err(Error::LengthMismatch {
                expected: self.joint_names.len(),
                actual: pose.len(),
            });
        }
        self.samples.push(Sample { time, pose });
        Ok(())
    }

    /// Checks that joint names and order agree with `model`.
    pub fn check_model(&self, model: &HandModel) -> Result<()> {
        if !self.model_name.is_empty() && self.model_name != model.name {
            return Err(Error::ModelMismatch {
                expected: model.name.clone(),
                found: self.model_name.clone(),
            });
        }
        if !self.joint_names.iter().map(String::as_str).eq(model.joint_names()) {
            return Err(Error::schema(
                format!("trajectory for `{}`", model.name),
                "header",
                format!("joint columns {:?} do not match the model's joints", self.joint_names),
            ));
        }
        Ok(())
    }

    pub fn from_reader(mut reader: impl Read, origin: &str) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text).map_err(|e| Error::io(origin, e))?;
        let model_name = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix(MODEL_TAG))
            .map(|s| s.trim().to_string())
            .unwrap_or_default();

        let parse_err = |line: u64, message: String| Error::Parse {
            path: origin.to_string(),
            line: line as usize,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        let mut columns = headers.iter();
        if columns.next() != Some("time") {
            return Err(Error::schema(origin, "header", "first column must be `time`"));
        }
        let joint_names: Vec<String> = columns.map(str::to_string).collect();

        let mut samples = Vec::new();
        let mut prev = f64::NEG_INFINITY;
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let values = record
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| parse_err(line, format!("column {}: `{v}` is not a finite number", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != joint_names.len() + 1 {
                return Err(parse_err(
                    line,
                    format!("expected {} columns, found {}", joint_names.len() + 1, values.len()),
                ));
            }
            let time = values[0];
            if time <= prev {
                return Err(parse_err(line, format!("time {time} does not increase past {prev}")));
            }
            prev = time;
            samples.push(Sample {
                time,
                pose: Pose::new(values[1..].to_vec()),
            });
        }
        Ok(Trajectory {
            model_name,
            joint_names,
            samples,
        })
    }

    pub fn to_writer(&self, mut out: impl Write) -> std::io::Result<()> {
        if !self.model_name.is_empty() {
            writeln!(out, "{MODEL_TAG} {}", self.model_name)?;
        }
        let mut w = csv::Writer::from_writer(out);
        let header = std::iter::once("time").chain(self.joint_names.iter().map(String::as_str));
        w.write_record(header)?;
        for s in &self.samples {
            w.write_record(std::iter::once(&s.time).chain(s.pose.iter()).map(f64::to_string))?;
        }
        w.flush()
    }
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Trajectory::from_reader(file, &path.display().to_string())
}

pub fn write_trajectory(trajectory: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    trajectory
        .to_writer(std::io::BufWriter::new(file))
        .map_err(|e| Error::io(path, e))
}
