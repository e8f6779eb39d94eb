// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-connection state machine.
//!
//! ```text
//! AwaitHello --hello--> Idle --request_recording--> Streaming
//!     Streaming --(last frame sent)--> AwaitReport --report_points--> Done
//! ```
//!
//! `declare_params`, `set_params` and `request_training` are accepted in
//! `Idle` only; `request_training` additionally requires a client that
//! announced learning capability. `Done` behaves like `Idle`, so a client
//! may evaluate several recordings over one connection.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use log::{debug, warn};
use segeval_core::dataset::Dataset;
use segeval_core::pipeline::{
    evaluate_recording, make_folds, DataAccess, EvalConfig, Provenance, RunContext,
};
use segeval_core::SegmentationResult;

use crate::message::*;

/// Shared, read-only server context.
#[derive(Debug)]
pub struct ServerEnv {
    pub dataset: Dataset,
    pub eval: EvalConfig,
    /// Where completed reports are written; `None` keeps them in memory only.
    pub reports_dir: Option<PathBuf>,
    /// Values pushed to clients in reply to `declare_params`.
    pub param_overrides: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum State {
    AwaitHello,
    Idle,
    Streaming,
    AwaitReport,
    Done,
}

#[derive(Debug)]
struct Stream {
    recording: usize,
    mode: DataAccess,
    next_frame: usize,
}

/// Result of handling one client message.
#[derive(Debug, Default)]
pub struct Step {
    pub replies: Vec<Message>,
    /// Close the connection after sending the replies.
    pub close: bool,
}

#[derive(Debug)]
pub struct Session {
    env: Arc<ServerEnv>,
    id: u64,
    state: State,
    algorithm: String,
    learning_capable: bool,
    declared: Vec<ParamSpec>,
    params: BTreeMap<String, serde_json::Value>,
    training_used: bool,
    stream: Option<Stream>,
    /// Recording whose report is awaited.
    pending: Option<(usize, DataAccess)>,
    last_client_id: Option<u64>,
    next_id: u64,
}

impl Session {
    pub fn new(env: Arc<ServerEnv>, id: u64) -> Self {
        Session {
            env,
            id,
            state: State::AwaitHello,
            algorithm: String::new(),
            learning_capable: false,
            declared: Vec::new(),
            params: BTreeMap::new(),
            training_used: false,
            stream: None,
            pending: None,
            last_client_id: None,
            next_id: 1,
        }
    }

    pub fn state(&self) -> State {
        self.state
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    fn reply(&mut self, body: Body) -> Message {
        let m = Message::new(self.next_id, body);
        self.next_id += 1;
        m
    }

    fn error(&mut self, code: ErrorCode, message: impl Into<String>, fatal: bool) -> Message {
        self.reply(Body::Error(ErrorPayload {
            code,
            message: message.into(),
            fatal,
        }))
    }

    fn fail(&mut self, code: ErrorCode, message: impl Into<String>) -> Step {
        Step {
            replies: vec![self.error(code, message, false)],
            close: false,
        }
    }

    fn fatal(&mut self, code: ErrorCode, message: impl Into<String>) -> Step {
        Step {
            replies: vec![self.error(code, message, true)],
            close: true,
        }
    }

    fn illegal(&mut self, kind: &str) -> Step {
        let msg = format!("{kind} is not allowed in state {:?}", self.state);
        self.fail(ErrorCode::IllegalTransition, msg)
    }

    /// Handles a raw line; unparsable input ends the session.
    pub fn handle_line(&mut self, line: &str) -> Step {
        match Message::from_line(line) {
            Ok(msg) => self.handle_message(msg),
            Err(e) => self.fatal(ErrorCode::Malformed, format!("malformed message: {e}")),
        }
    }

    pub fn handle_message(&mut self, msg: Message) -> Step {
        if let Some(last) = self.last_client_id {
            if msg.id <= last {
                return self.fatal(
                    ErrorCode::Malformed,
                    format!("message id {} does not increase past {last}", msg.id),
                );
            }
        }
        self.last_client_id = Some(msg.id);
        debug!("session {} {:?} <- {}", self.id, self.state, msg.kind());

        if self.state == State::Done && !matches!(msg.body, Body::ReportPoints(_)) {
            self.state = State::Idle;
        }

        match (self.state, msg.body) {
            (_, Body::Bye(_)) => {
                let bye = self.reply(Body::Bye(Bye {}));
                Step {
                    replies: vec![bye],
                    close: true,
                }
            }
            (State::AwaitHello, Body::Hello(Hello::Client(hello))) => {
                if msg.protocol_version != PROTOCOL_VERSION {
                    return self.fatal(
                        ErrorCode::VersionMismatch,
                        format!(
                            "protocol version {:?} not supported, expected {PROTOCOL_VERSION:?}",
                            msg.protocol_version
                        ),
                    );
                }
                if hello.algorithm.is_empty() {
                    return self.fatal(ErrorCode::Validation, "algorithm name must not be empty");
                }
                self.algorithm = hello.algorithm;
                self.learning_capable = hello.learning_capable;
                self.state = State::Idle;
                let listing = ServerHello {
                    server: format!("segeval {}", segeval_core::TOOLKIT_VERSION),
                    dataset_version: self.env.dataset.version.clone(),
                    recordings: self.env.dataset.names().into_iter().map(String::from).collect(),
                };
                Step {
                    replies: vec![self.reply(Body::Hello(Hello::Server(listing)))],
                    close: false,
                }
            }
            (State::Idle, Body::DeclareParams(decl)) => {
                for spec in &decl.params {
                    let value = self
                        .env
                        .param_overrides
                        .get(&spec.name)
                        .cloned()
                        .unwrap_or_else(|| spec.default.clone());
                    self.params.insert(spec.name.clone(), value);
                }
                self.declared = decl.params;
                let values = SetParams {
                    values: self.params.clone(),
                };
                Step {
                    replies: vec![self.reply(Body::SetParams(values))],
                    close: false,
                }
            }
            (State::Idle, Body::SetParams(values)) => {
                self.params.extend(values.values);
                let echo = SetParams {
                    values: self.params.clone(),
                };
                Step {
                    replies: vec![self.reply(Body::SetParams(echo))],
                    close: false,
                }
            }
            (State::Idle, Body::RequestRecording(req)) => {
                let Some(index) = self
                    .env
                    .dataset
                    .entries
                    .iter()
                    .position(|e| e.recording.name() == req.recording)
                else {
                    return self.fail(
                        ErrorCode::UnknownRecording,
                        format!("no recording named {:?}", req.recording),
                    );
                };
                let rec = &self.env.dataset.entries[index].recording;
                let meta = RecordingMeta {
                    recording: rec.name().to_owned(),
                    frame_rate_hz: rec.frame_rate_hz(),
                    channels: rec.channels().to_vec(),
                    f_max: rec.f_max(),
                    mode: req.mode,
                };
                self.stream = Some(Stream {
                    recording: index,
                    mode: req.mode,
                    next_frame: 0,
                });
                self.state = State::Streaming;
                Step {
                    replies: vec![self.reply(Body::RecordingMeta(meta))],
                    close: false,
                }
            }
            (State::Idle, Body::RequestTraining(req)) => self.training(req.fold),
            (State::AwaitReport, Body::ReportPoints(report)) => self.evaluate(report),
            (_, body) => {
                let kind = body.kind();
                self.illegal(kind)
            }
        }
    }

    /// Next frame message while streaming. Moves to `AwaitReport` once the
    /// last frame has been produced.
    pub fn next_frames(&mut self) -> Option<Message> {
        let stream = self.stream.as_mut()?;
        let frames = self.env.dataset.entries[stream.recording].recording.frames();
        let start = stream.next_frame;
        let end = match stream.mode {
            DataAccess::Full => frames.len(),
            DataAccess::FrameByFrame => start + 1,
        };
        let body = Body::RecordingFrames(RecordingFrames {
            start: start as u64,
            frames: frames[start..end].to_vec(),
        });
        stream.next_frame = end;
        if end == frames.len() {
            let done = self.stream.take().expect("stream present");
            self.pending = Some((done.recording, done.mode));
            self.state = State::AwaitReport;
        }
        Some(self.reply(body))
    }

    fn training(&mut self, held_out: usize) -> Step {
        if !self.learning_capable {
            return self.fail(
                ErrorCode::TrainingNotNegotiated,
                "training not negotiated: hello did not declare learning capability",
            );
        }
        let names = self.env.dataset.names();
        let folds = match make_folds(&names) {
            Ok(f) => f,
            Err(e) => return self.fail(ErrorCode::InsufficientData, e.to_string()),
        };
        if held_out >= segeval_core::pipeline::NUM_FOLDS {
            return self.fail(ErrorCode::Validation, format!("fold {held_out} out of range"));
        }
        let items = self
            .env
            .dataset
            .entries
            .iter()
            .map(|e| {
                let fold = folds.fold_of(e.recording.name()).expect("every recording has a fold");
                TrainingItem {
                    fold,
                    recording: e.recording.clone(),
                    ground_truth: (fold != held_out).then(|| e.ground_truth.clone()),
                }
            })
            .collect();
        self.training_used = true;
        let data = TrainingData {
            fold: held_out,
            dataset_version: self.env.dataset.version.clone(),
            items,
        };
        Step {
            replies: vec![self.reply(Body::TrainingData(data))],
            close: false,
        }
    }

    fn evaluate(&mut self, report: ReportPoints) -> Step {
        let (index, mode) = self.pending.expect("AwaitReport implies a pending recording");
        let entry = &self.env.dataset.entries[index];
        if report.recording != entry.recording.name() {
            return self.fail(
                ErrorCode::Validation,
                format!(
                    "points reported for {:?} but {:?} was requested",
                    report.recording,
                    entry.recording.name()
                ),
            );
        }
        let seg = SegmentationResult::new(report.recording, &report.points);
        let mut provenance = Provenance::new(self.algorithm.clone());
        provenance.algorithm_params = self.params.clone();
        provenance.data_access = mode;
        provenance.training_api_used = self.training_used;
        let ctx = RunContext::new(self.env.dataset.version.clone(), provenance.stamped());

        let result = evaluate_recording(
            &entry.recording,
            &entry.ground_truth,
            &seg,
            &self.env.eval,
            &ctx,
        );
        let report = match result {
            Ok(r) => r,
            Err(e) => return self.fail(ErrorCode::Validation, e.to_string()),
        };

        if let Some(dir) = &self.env.reports_dir {
            let path = dir.join(format!(
                "{}.{}.s{}.report.json",
                report.recording, self.algorithm, self.id
            ));
            let written = report
                .to_json()
                .map_err(|e| e.to_string())
                .and_then(|json| std::fs::write(&path, json).map_err(|e| e.to_string()));
            if let Err(e) = written {
                warn!("could not persist {}: {e}", path.display());
                return self.fail(ErrorCode::Internal, format!("could not persist report: {e}"));
            }
        }

        self.pending = None;
        self.state = State::Done;
        Step {
            replies: vec![self.reply(Body::EvaluationReport(Box::new(report)))],
            close: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use segeval_core::dataset::Entry;
    use segeval_core::{GroundTruth, Granularity, LabelledPoint, Recording};

    fn env(n: usize) -> Arc<ServerEnv> {
        let entries = (0..n)
            .map(|i| {
                let name = format!("r{i}");
                let rec = Recording::new(&name, 100.0, vec!["q".into()], vec![vec![i as f64]; 4])
                    .unwrap();
                let gt = GroundTruth::new(
                    &name,
                    vec![LabelledPoint {
                        frame: 2.0,
                        granularity: Granularity::Rough,
                    }],
                )
                .unwrap();
                Entry {
                    recording: rec,
                    ground_truth: gt,
                }
            })
            .collect();
        Arc::new(ServerEnv {
            dataset: Dataset::new("v1", entries).unwrap(),
            eval: EvalConfig::default(),
            reports_dir: None,
            param_overrides: BTreeMap::new(),
        })
    }

    fn msg(id: u64, body: Body) -> Message {
        Message::new(id, body)
    }

    fn hello(id: u64, learning: bool) -> Message {
        msg(
            id,
            Body::Hello(Hello::Client(ClientHello {
                algorithm: "test".into(),
                learning_capable: learning,
            })),
        )
    }

    fn request(id: u64, name: &str, mode: DataAccess) -> Message {
        msg(
            id,
            Body::RequestRecording(RequestRecording {
                recording: name.into(),
                mode,
            }),
        )
    }

    fn points(id: u64, name: &str) -> Message {
        msg(
            id,
            Body::ReportPoints(ReportPoints {
                recording: name.into(),
                points: vec![2.0],
            }),
        )
    }

    fn error_code(step: &Step) -> Option<ErrorCode> {
        match &step.replies.first()?.body {
            Body::Error(e) => Some(e.code),
            _ => None,
        }
    }

    #[test]
    fn handshake_lists_dataset() {
        let mut s = Session::new(env(2), 1);
        let step = s.handle_message(hello(1, false));
        match &step.replies[0].body {
            Body::Hello(Hello::Server(h)) => assert_eq!(h.recordings, ["r0", "r1"]),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.state(), State::Idle);
    }

    #[test]
    fn version_mismatch_rejected_at_hello() {
        let mut s = Session::new(env(1), 1);
        let mut m = hello(1, false);
        m.protocol_version = "0".into();
        let step = s.handle_message(m);
        assert_eq!(error_code(&step), Some(ErrorCode::VersionMismatch));
        assert!(step.close);
    }

    #[test]
    fn training_requires_negotiation() {
        let mut s = Session::new(env(6), 1);
        s.handle_message(hello(1, false));
        let step = s.handle_message(msg(2, Body::RequestTraining(RequestTraining { fold: 0 })));
        assert_eq!(error_code(&step), Some(ErrorCode::TrainingNotNegotiated));
        assert!(!step.close);
        assert_eq!(s.state(), State::Idle);
    }

    #[test]
    fn training_withholds_held_out_labels() {
        let mut s = Session::new(env(7), 1);
        s.handle_message(hello(1, true));
        let step = s.handle_message(msg(2, Body::RequestTraining(RequestTraining { fold: 1 })));
        let Body::TrainingData(data) = &step.replies[0].body else {
            panic!("{:?}", step.replies);
        };
        assert_eq!(data.items.len(), 7);
        for item in &data.items {
            assert_eq!(item.ground_truth.is_none(), item.fold == 1);
        }
        // sorted names r0..r6 round-robin: fold 1 holds r1 and r6
        let held: Vec<&str> = data
            .items
            .iter()
            .filter(|i| i.fold == 1)
            .map(|i| i.recording.name())
            .collect();
        assert_eq!(held, ["r1", "r6"]);
    }

    #[test]
    fn training_needs_five_recordings() {
        let mut s = Session::new(env(3), 1);
        s.handle_message(hello(1, true));
        let step = s.handle_message(msg(2, Body::RequestTraining(RequestTraining { fold: 0 })));
        assert_eq!(error_code(&step), Some(ErrorCode::InsufficientData));
    }

    #[test]
    fn report_while_streaming_is_illegal() {
        let mut s = Session::new(env(1), 1);
        s.handle_message(hello(1, false));
        s.handle_message(request(2, "r0", DataAccess::FrameByFrame));
        assert_eq!(s.state(), State::Streaming);
        let step = s.handle_message(points(3, "r0"));
        assert_eq!(error_code(&step), Some(ErrorCode::IllegalTransition));
        assert_eq!(s.state(), State::Streaming);
    }

    #[test]
    fn frame_by_frame_stream_then_report() {
        let mut s = Session::new(env(1), 1);
        s.handle_message(hello(1, false));
        s.handle_message(request(2, "r0", DataAccess::FrameByFrame));
        let mut starts = Vec::new();
        while let Some(m) = s.next_frames() {
            let Body::RecordingFrames(f) = m.body else { panic!() };
            assert_eq!(f.frames.len(), 1);
            starts.push(f.start);
        }
        assert_eq!(starts, [0, 1, 2, 3]);
        assert_eq!(s.state(), State::AwaitReport);
        let step = s.handle_message(points(3, "r0"));
        let Body::EvaluationReport(report) = &step.replies[0].body else {
            panic!("{:?}", step.replies);
        };
        assert_eq!(report.provenance.data_access, DataAccess::FrameByFrame);
        assert_eq!(s.state(), State::Done);

        // Idle re-entry after Done
        s.handle_message(request(4, "r0", DataAccess::Full));
        assert_eq!(s.state(), State::Streaming);
        let m = s.next_frames().unwrap();
        let Body::RecordingFrames(f) = m.body else { panic!() };
        assert_eq!(f.frames.len(), 4);
        assert!(s.next_frames().is_none());
    }

    #[test]
    fn params_only_in_idle() {
        let mut s = Session::new(env(1), 1);
        let early = s.handle_message(msg(1, Body::SetParams(SetParams::default())));
        assert_eq!(error_code(&early), Some(ErrorCode::IllegalTransition));
        s.handle_message(hello(2, false));
        let step = s.handle_message(msg(
            3,
            Body::DeclareParams(DeclareParams {
                params: vec![ParamSpec {
                    name: "window".into(),
                    kind: ParamType::Int,
                    default: serde_json::json!(21),
                    min: Some(3.0),
                    max: None,
                }],
            }),
        ));
        let Body::SetParams(values) = &step.replies[0].body else { panic!() };
        assert_eq!(values.values["window"], 21);
        s.handle_message(request(4, "r0", DataAccess::Full));
        let late = s.handle_message(msg(5, Body::SetParams(SetParams::default())));
        assert_eq!(error_code(&late), Some(ErrorCode::IllegalTransition));
    }

    #[test]
    fn non_increasing_id_is_fatal() {
        let mut s = Session::new(env(1), 1);
        s.handle_message(hello(5, false));
        let step = s.handle_message(request(5, "r0", DataAccess::Full));
        assert_eq!(error_code(&step), Some(ErrorCode::Malformed));
        assert!(step.close);
    }

    #[test]
    fn malformed_line_is_fatal() {
        let mut s = Session::new(env(1), 1);
        let step = s.handle_line("{not json");
        assert_eq!(error_code(&step), Some(ErrorCode::Malformed));
        assert!(step.close);
    }

    #[test]
    fn out_of_range_points_rejected_but_session_survives() {
        let mut s = Session::new(env(1), 1);
        s.handle_message(hello(1, false));
        s.handle_message(request(2, "r0", DataAccess::Full));
        while s.next_frames().is_some() {}
        let bad = msg(
            3,
            Body::ReportPoints(ReportPoints {
                recording: "r0".into(),
                points: vec![99.0],
            }),
        );
        let step = s.handle_message(bad);
        assert_eq!(error_code(&step), Some(ErrorCode::Validation));
        assert_eq!(s.state(), State::AwaitReport);
        let ok = s.handle_message(points(4, "r0"));
        assert!(matches!(ok.replies[0].body, Body::EvaluationReport(_)));
    }
}
