// SPDX-License-Identifier: MIT OR Apache-2.0

//! Wire messages. One JSON object per line:
//!
//! ```json
//! {"protocol_version":"1","id":3,"type":"report_points","payload":{...}}
//! ```

use std::collections::BTreeMap;

use segeval_core::pipeline::{DataAccess, EvaluationReport};
use segeval_core::{GroundTruth, Recording};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub protocol_version: String,
    pub id: u64,
    #[serde(flatten)]
    pub body: Body,
}

impl Message {
    pub fn new(id: u64, body: Body) -> Self {
        Message {
            protocol_version: PROTOCOL_VERSION.to_owned(),
            id,
            body,
        }
    }

    pub fn kind(&self) -> &'static str {
        self.body.kind()
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("messages always serialize");
        line.push('\n');
        line
    }

    pub fn from_line(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line.trim_end())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum Body {
    Hello(Hello),
    DeclareParams(DeclareParams),
    SetParams(SetParams),
    RequestRecording(RequestRecording),
    RecordingMeta(RecordingMeta),
    RecordingFrames(RecordingFrames),
    RequestTraining(RequestTraining),
    TrainingData(TrainingData),
    ReportPoints(ReportPoints),
    EvaluationReport(Box<EvaluationReport>),
    Error(ErrorPayload),
    Bye(Bye),
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Hello(_) => "hello",
            Body::DeclareParams(_) => "declare_params",
            Body::SetParams(_) => "set_params",
            Body::RequestRecording(_) => "request_recording",
            Body::RecordingMeta(_) => "recording_meta",
            Body::RecordingFrames(_) => "recording_frames",
            Body::RequestTraining(_) => "request_training",
            Body::TrainingData(_) => "training_data",
            Body::ReportPoints(_) => "report_points",
            Body::EvaluationReport(_) => "evaluation_report",
            Body::Error(_) => "error",
            Body::Bye(_) => "bye",
        }
    }
}

/// `hello` from the server carries the dataset listing; from a client it
/// names the algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hello {
    Server(ServerHello),
    Client(ClientHello),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientHello {
    pub algorithm: String,
    #[serde(default)]
    pub learning_capable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerHello {
    pub server: String,
    pub dataset_version: String,
    pub recordings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    Int,
    Float,
    Bool,
    String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ParamType,
    pub default: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeclareParams {
    pub params: Vec<ParamSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SetParams {
    pub values: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestRecording {
    pub recording: String,
    pub mode: DataAccess,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub recording: String,
    pub frame_rate_hz: f64,
    pub channels: Vec<String>,
    pub f_max: u64,
    pub mode: DataAccess,
}

/// A block of consecutive frames starting at index `start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingFrames {
    pub start: u64,
    pub frames: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestTraining {
    /// Held-out fold; its recordings are served without labels.
    pub fold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingItem {
    pub fold: usize,
    pub recording: Recording,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingData {
    pub fold: usize,
    pub dataset_version: String,
    pub items: Vec<TrainingItem>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportPoints {
    pub recording: String,
    pub points: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    VersionMismatch,
    IllegalTransition,
    TrainingNotNegotiated,
    UnknownRecording,
    InsufficientData,
    Validation,
    Internal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
    /// The server closes the session after sending a fatal error.
    pub fatal: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bye {}
