//! Live control of one running swarm per connection.
//!
//! Clients speak newline-delimited JSON over TCP. Commands configure, start,
//! pause, resume and reset the swarm, change parameters between iterations,
//! rebin the MSD-increment histogram and dump the trace so far. The server
//! answers every command with an `ack` or an `error` and streams `snapshot`
//! messages sampled from the engine at a fixed interval. See
//! `docs/protocol.md` for the exact message shapes.

mod client;
pub mod protocol;
mod server;
pub mod session;

pub use client::Client;
pub use protocol::{Command, ErrorKind, HistogramView, ParamValues, Phase, ServerMessage, Snapshot};
pub use server::{serve, ServeOptions, Server, DEFAULT_SAMPLE_INTERVAL};
pub use session::{CommandError, Session};
