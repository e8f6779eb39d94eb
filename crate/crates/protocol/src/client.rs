// SPDX-License-Identifier: MIT OR Apache-2.0

//! Blocking client used by the baseline runner and the tests.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};

use segeval_core::pipeline::{DataAccess, EvaluationReport};
use segeval_core::Recording;

use crate::error::ProtocolError;
use crate::message::*;

#[derive(Debug)]
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    next_id: u64,
    version: String,
    hello: ServerHello,
}

impl Client {
    pub fn connect(
        addr: impl ToSocketAddrs,
        algorithm: &str,
        learning_capable: bool,
    ) -> Result<Self, ProtocolError> {
        Self::connect_with_version(addr, algorithm, learning_capable, PROTOCOL_VERSION)
    }

    /// Like [`Client::connect`] but announces an arbitrary protocol version.
    pub fn connect_with_version(
        addr: impl ToSocketAddrs,
        algorithm: &str,
        learning_capable: bool,
        version: &str,
    ) -> Result<Self, ProtocolError> {
        let stream = TcpStream::connect(addr)?;
        let mut client = Client {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            next_id: 1,
            version: version.to_owned(),
            hello: ServerHello {
                server: String::new(),
                dataset_version: String::new(),
                recordings: Vec::new(),
            },
        };
        let reply = client.call(Body::Hello(Hello::Client(ClientHello {
            algorithm: algorithm.to_owned(),
            learning_capable,
        })))?;
        match reply.body {
            Body::Hello(Hello::Server(h)) => client.hello = h,
            _ => return Err(ProtocolError::unexpected("hello", &reply)),
        }
        Ok(client)
    }

    pub fn server_hello(&self) -> &ServerHello {
        &self.hello
    }

    pub fn recordings(&self) -> &[String] {
        &self.hello.recordings
    }

    pub fn send(&mut self, body: Body) -> Result<(), ProtocolError> {
        let msg = Message {
            protocol_version: self.version.clone(),
            id: self.next_id,
            body,
        };
        self.next_id += 1;
        self.writer.write_all(msg.to_line().as_bytes())?;
        self.writer.flush()?;
        Ok(())
    }

    /// Reads one message; server errors are returned as [`ProtocolError::Remote`].
    pub fn receive(&mut self) -> Result<Message, ProtocolError> {
        let mut line = String::new();
        loop {
            line.clear();
            if self.reader.read_line(&mut line)? == 0 {
                return Err(ProtocolError::Closed);
            }
            if !line.trim().is_empty() {
                break;
            }
        }
        let msg = Message::from_line(&line)?;
        match msg.body {
            Body::Error(e) => Err(ProtocolError::Remote(e)),
            _ => Ok(msg),
        }
    }

    fn call(&mut self, body: Body) -> Result<Message, ProtocolError> {
        self.send(body)?;
        self.receive()
    }

    /// Announces tunable parameters; returns the values the server assigns.
    pub fn declare_params(
        &mut self,
        params: Vec<ParamSpec>,
    ) -> Result<BTreeMap<String, serde_json::Value>, ProtocolError> {
        let reply = self.call(Body::DeclareParams(DeclareParams { params }))?;
        match reply.body {
            Body::SetParams(v) => Ok(v.values),
            _ => Err(ProtocolError::unexpected("set_params", &reply)),
        }
    }

    pub fn set_params(
        &mut self,
        values: BTreeMap<String, serde_json::Value>,
    ) -> Result<BTreeMap<String, serde_json::Value>, ProtocolError> {
        let reply = self.call(Body::SetParams(SetParams { values }))?;
        match reply.body {
            Body::SetParams(v) => Ok(v.values),
            _ => Err(ProtocolError::unexpected("set_params", &reply)),
        }
    }

    /// Requests a recording and calls `on_frames(start, frames)` for every
    /// block as it arrives. Returns the reassembled recording.
    pub fn request_recording(
        &mut self,
        name: &str,
        mode: DataAccess,
        mut on_frames: impl FnMut(u64, &[Vec<f64>]),
    ) -> Result<Recording, ProtocolError> {
        let reply = self.call(Body::RequestRecording(RequestRecording {
            recording: name.to_owned(),
            mode,
        }))?;
        let meta = match reply.body {
            Body::RecordingMeta(m) => m,
            _ => return Err(ProtocolError::unexpected("recording_meta", &reply)),
        };
        let mut frames = Vec::with_capacity(meta.f_max as usize);
        while (frames.len() as u64) < meta.f_max {
            let msg = self.receive()?;
            match msg.body {
                Body::RecordingFrames(block) if block.start == frames.len() as u64 => {
                    on_frames(block.start, &block.frames);
                    frames.extend(block.frames);
                }
                _ => return Err(ProtocolError::unexpected("recording_frames", &msg)),
            }
        }
        Recording::new(meta.recording, meta.frame_rate_hz, meta.channels, frames).map_err(|e| {
            ProtocolError::Remote(ErrorPayload {
                code: ErrorCode::Validation,
                message: e.to_string(),
                fatal: false,
            })
        })
    }

    pub fn request_training(&mut self, held_out_fold: usize) -> Result<TrainingData, ProtocolError> {
        let reply = self.call(Body::RequestTraining(RequestTraining {
            fold: held_out_fold,
        }))?;
        match reply.body {
            Body::TrainingData(d) => Ok(d),
            _ => Err(ProtocolError::unexpected("training_data", &reply)),
        }
    }

    pub fn report(
        &mut self,
        recording: &str,
        points: Vec<f64>,
    ) -> Result<EvaluationReport, ProtocolError> {
        let reply = self.call(Body::ReportPoints(ReportPoints {
            recording: recording.to_owned(),
            points,
        }))?;
        match reply.body {
            Body::EvaluationReport(r) => Ok(*r),
            _ => Err(ProtocolError::unexpected("evaluation_report", &reply)),
        }
    }

    pub fn bye(mut self) -> Result<(), ProtocolError> {
        let reply = self.call(Body::Bye(Bye {}))?;
        match reply.body {
            Body::Bye(_) => Ok(()),
            _ => Err(ProtocolError::unexpected("bye", &reply)),
        }
    }
}
