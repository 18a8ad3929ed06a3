//! TCP transport. Each connection gets its own session, engine thread and
//! telemetry sampler.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::protocol::{encode, Command, ErrorKind, Phase, ServerMessage, Snapshot};
use crate::session::Session;

pub const DEFAULT_SAMPLE_INTERVAL: Duration = Duration::from_millis(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServeOptions {
    /// Time between two telemetry samples.
    pub sample_interval: Duration,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions { sample_interval: DEFAULT_SAMPLE_INTERVAL }
    }
}

/// Latest snapshot, replaced once per iteration and read by the sampler.
type SnapshotCell = Arc<Mutex<Option<Snapshot>>>;

pub struct Server {
    listener: TcpListener,
    options: ServeOptions,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, options: ServeOptions) -> io::Result<Self> {
        if options.sample_interval.is_zero() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "sample interval must be positive"));
        }
        Ok(Server { listener: TcpListener::bind(addr)?, options })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the listener fails.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let options = self.options;
            thread::spawn(move || {
                let _ = handle_connection(stream, options);
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> io::Result<SocketAddr> {
        let addr = self.local_addr()?;
        thread::spawn(move || self.run());
        Ok(addr)
    }
}

pub fn serve(addr: impl ToSocketAddrs, options: ServeOptions) -> io::Result<()> {
    Server::bind(addr, options)?.run()
}

fn handle_connection(stream: TcpStream, options: ServeOptions) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let writer_stream = stream.try_clone()?;
    let (cmd_tx, cmd_rx) = mpsc::channel::<Command>();
    let (out_tx, out_rx) = mpsc::channel::<ServerMessage>();
    let cell: SnapshotCell = Arc::new(Mutex::new(None));

    let engine = {
        let (out_tx, cell) = (out_tx.clone(), cell.clone());
        thread::spawn(move || engine_loop(cmd_rx, out_tx, cell))
    };
    let writer = {
        let cell = cell.clone();
        thread::spawn(move || writer_loop(writer_stream, out_rx, cell, options.sample_interval))
    };

    let result = reader_loop(stream, &cmd_tx, &out_tx, &cell);
    drop((cmd_tx, out_tx));
    let _ = engine.join();
    let _ = writer.join();
    result
}

fn reader_loop(
    stream: TcpStream,
    cmd_tx: &Sender<Command>,
    out_tx: &Sender<ServerMessage>,
    cell: &SnapshotCell,
) -> io::Result<()> {
    for line in BufReader::new(stream).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<Command>(line) {
            Ok(cmd) => {
                if cmd_tx.send(cmd).is_err() {
                    break;
                }
            }
            Err(e) => {
                let phase = cell.lock().expect("snapshot cell poisoned").as_ref().map_or(Phase::Idle, |s| s.phase);
                let _ = out_tx.send(ServerMessage::Error {
                    command: None,
                    kind: ErrorKind::Malformed,
                    message: e.to_string(),
                    phase,
                });
            }
        }
    }
    Ok(())
}

fn publish(cell: &SnapshotCell, session: &Session) {
    if session.engine().is_some() {
        *cell.lock().expect("snapshot cell poisoned") = Some(session.snapshot());
    }
}

fn engine_loop(rx: Receiver<Command>, out: Sender<ServerMessage>, cell: SnapshotCell) {
    let mut session = Session::new();
    loop {
        let next = if session.phase() == Phase::Running {
            match rx.try_recv() {
                Ok(cmd) => Some(cmd),
                Err(TryRecvError::Empty) => None,
                Err(TryRecvError::Disconnected) => return,
            }
        } else {
            match rx.recv() {
                Ok(cmd) => Some(cmd),
                Err(_) => return,
            }
        };
        match next {
            Some(cmd) => {
                let reply = match session.apply(&cmd) {
                    Ok(detail) => ServerMessage::Ack {
                        command: cmd.name().to_string(),
                        phase: session.phase(),
                        detail,
                    },
                    Err(e) => ServerMessage::Error {
                        command: Some(cmd.name().to_string()),
                        kind: e.kind,
                        message: e.message,
                        phase: session.phase(),
                    },
                };
                publish(&cell, &session);
                let _ = out.send(reply);
            }
            None => {
                session.tick();
                publish(&cell, &session);
                if let Some(e) = session.run_error().filter(|_| session.phase() == Phase::Finished) {
                    let _ = out.send(ServerMessage::Error {
                        command: None,
                        kind: ErrorKind::Run,
                        message: e.to_string(),
                        phase: Phase::Finished,
                    });
                }
            }
        }
    }
}

fn writer_loop(stream: TcpStream, rx: Receiver<ServerMessage>, cell: SnapshotCell, interval: Duration) -> io::Result<()> {
    let mut out = BufWriter::new(stream);
    let mut next = Instant::now() + interval;
    let mut last = String::new();
    loop {
        match rx.recv_timeout(next.saturating_duration_since(Instant::now())) {
            Ok(msg) => {
                out.write_all(encode(&msg).as_bytes())?;
                out.flush()?;
            }
            Err(RecvTimeoutError::Timeout) => {
                next += interval;
                let now = Instant::now();
                if next < now {
                    // Fell behind a slow client: skip the missed samples.
                    next = now + interval;
                }
                let Some(mut snap) = cell.lock().expect("snapshot cell poisoned").clone() else {
                    continue;
                };
                if let Some(h) = snap.histogram.as_mut() {
                    h.histogram.normalize();
                }
                // A live or paused swarm streams every sample; otherwise only changes go out.
                let streaming = matches!(snap.phase, Phase::Running | Phase::Paused);
                let line = encode(&ServerMessage::Snapshot(snap));
                if !streaming && line == last {
                    continue;
                }
                out.write_all(line.as_bytes())?;
                out.flush()?;
                last = line;
            }
            Err(RecvTimeoutError::Disconnected) => return Ok(()),
        }
    }
}
