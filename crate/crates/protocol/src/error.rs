// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::message::{ErrorPayload, Message};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed message: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("server error {:?}: {}", .0.code, .0.message)]
    Remote(ErrorPayload),
    #[error("unexpected {got} message while waiting for {expected}")]
    Unexpected { expected: &'static str, got: String },
    #[error("connection closed by peer")]
    Closed,
}

impl ProtocolError {
    pub(crate) fn unexpected(expected: &'static str, msg: &Message) -> Self {
        ProtocolError::Unexpected {
            expected,
            got: msg.kind().to_owned(),
        }
    }
}
