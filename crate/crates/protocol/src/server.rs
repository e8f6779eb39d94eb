// SPDX-License-Identifier: MIT OR Apache-2.0

//! TCP front end: one thread per connection, one [`Session`] per thread.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use log::{info, warn};

use crate::error::ProtocolError;
use crate::message::Message;
use crate::session::{ServerEnv, Session, State};

/// A running server. Dropping the handle does not stop it; call
/// [`ServerHandle::shutdown`].
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for the accept loop to exit.
    /// Sessions already running finish on their own.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_millis(200));
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// Blocks until the accept loop exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `addr` and serves sessions on a background thread.
pub fn spawn(addr: impl ToSocketAddrs, env: ServerEnv) -> Result<ServerHandle, ProtocolError> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let env = Arc::new(env);
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = Arc::clone(&stop);
    let counter = AtomicU64::new(1);
    info!("listening on {local}");

    let thread = std::thread::spawn(move || {
        for conn in listener.incoming() {
            if stop_flag.load(Ordering::SeqCst) {
                break;
            }
            match conn {
                Ok(stream) => {
                    let env = Arc::clone(&env);
                    let id = counter.fetch_add(1, Ordering::SeqCst);
                    std::thread::spawn(move || {
                        let peer = stream.peer_addr().ok();
                        if let Err(e) = run_session(stream, Session::new(env, id)) {
                            warn!("session {id} ({peer:?}) ended with error: {e}");
                        }
                    });
                }
                Err(e) => warn!("accept failed: {e}"),
            }
        }
    });
    Ok(ServerHandle {
        addr: local,
        stop,
        thread: Some(thread),
    })
}

/// Serves until the process is terminated.
pub fn serve(addr: impl ToSocketAddrs, env: ServerEnv) -> Result<(), ProtocolError> {
    spawn(addr, env)?.join();
    Ok(())
}

fn send(out: &mut impl Write, msg: &Message) -> std::io::Result<()> {
    out.write_all(msg.to_line().as_bytes())
}

fn run_session(stream: TcpStream, mut session: Session) -> Result<(), ProtocolError> {
    let reader = BufReader::new(stream.try_clone()?);
    let mut out = BufWriter::new(stream);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let step = session.handle_line(&line);
        for reply in &step.replies {
            send(&mut out, reply)?;
        }
        if session.state() == State::Streaming {
            while let Some(frames) = session.next_frames() {
                send(&mut out, &frames)?;
            }
        }
        out.flush()?;
        if step.close {
            break;
        }
    }
    info!("session {} closed", session.id());
    Ok(())
}
