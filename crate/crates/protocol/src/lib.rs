// SPDX-License-Identifier: MIT OR Apache-2.0

//! Line-delimited JSON protocol that lets external segmentation algorithms
//! fetch recordings from an evaluation server and receive scored reports.

pub mod client;
pub mod error;
pub mod message;
pub mod server;
pub mod session;

pub use client::Client;
pub use error::ProtocolError;
pub use message::{Body, ErrorCode, Message, PROTOCOL_VERSION};
pub use server::{serve, spawn, ServerHandle};
pub use session::{ServerEnv, Session, State};
