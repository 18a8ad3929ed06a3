//! Headless client for scripts and tests.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use crate::protocol::{encode, Command, ServerMessage, Snapshot};

pub struct Client {
    stream: TcpStream,
    inbox: Receiver<io::Result<ServerMessage>>,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        let (tx, inbox) = mpsc::channel();
        thread::spawn(move || {
            for line in reader.lines() {
                let msg = line.and_then(|l| {
                    serde_json::from_str::<ServerMessage>(&l).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
                });
                if tx.send(msg).is_err() {
                    break;
                }
            }
        });
        Ok(Client { stream, inbox })
    }

    pub fn send(&mut self, cmd: &Command) -> io::Result<()> {
        self.send_raw(&encode(cmd))
    }

    /// Sends text as is; a trailing newline is added when missing.
    pub fn send_raw(&mut self, line: &str) -> io::Result<()> {
        self.stream.write_all(line.as_bytes())?;
        if !line.ends_with('\n') {
            self.stream.write_all(b"\n")?;
        }
        self.stream.flush()
    }

    /// Next message, or `None` on timeout or a closed connection.
    pub fn recv(&self, timeout: Duration) -> io::Result<Option<ServerMessage>> {
        match self.inbox.recv_timeout(timeout) {
            Ok(msg) => msg.map(Some),
            Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => Ok(None),
        }
    }

    /// Skips snapshots until an ack or error arrives.
    pub fn reply(&self, timeout: Duration) -> io::Result<ServerMessage> {
        self.wait(timeout, |m| !matches!(m, ServerMessage::Snapshot(_)))
    }

    /// Sends `cmd` and waits for its reply.
    pub fn request(&mut self, cmd: &Command, timeout: Duration) -> io::Result<ServerMessage> {
        self.send(cmd)?;
        self.reply(timeout)
    }

    /// Waits for a snapshot satisfying `pred`.
    pub fn snapshot_where(&self, timeout: Duration, pred: impl Fn(&Snapshot) -> bool) -> io::Result<Snapshot> {
        match self.wait(timeout, |m| matches!(m, ServerMessage::Snapshot(s) if pred(s)))? {
            ServerMessage::Snapshot(s) => Ok(s),
            _ => unreachable!("filtered to snapshots"),
        }
    }

    fn wait(&self, timeout: Duration, pred: impl Fn(&ServerMessage) -> bool) -> io::Result<ServerMessage> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.recv(left)? {
                Some(m) if pred(&m) => return Ok(m),
                Some(_) => {}
                None => return Err(io::Error::new(io::ErrorKind::TimedOut, "no matching message")),
            }
        }
    }
}
