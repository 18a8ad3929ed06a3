//! Wire messages. One JSON object per line, discriminated by `type`.

use psolab_core::analysis::Histogram;
use psolab_core::engine::ParamName;
use psolab_core::{AdaptiveConfig, PsoParams, SwarmConfig};
use serde::{Deserialize, Serialize};

/// Client to server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Configure {
        #[serde(default)]
        config: SwarmConfig,
        #[serde(default)]
        params: PsoParams,
        #[serde(default)]
        adaptive: Option<AdaptiveConfig>,
    },
    Start,
    Pause,
    Resume,
    Reset,
    SetParam {
        name: ParamName,
        value: f64,
    },
    SetHistogram {
        bin_size: f64,
        #[serde(default)]
        log_scale: bool,
    },
    DumpStats {
        path: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Configure { .. } => "configure",
            Command::Start => "start",
            Command::Pause => "pause",
            Command::Resume => "resume",
            Command::Reset => "reset",
            Command::SetParam { .. } => "set_param",
            Command::SetHistogram { .. } => "set_histogram",
            Command::DumpStats { .. } => "dump_stats",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Nothing configured yet.
    Idle,
    /// Configured or reset, waiting for `start`.
    Ready,
    Running,
    Paused,
    /// All configured iterations are done.
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamValues {
    #[serde(deserialize_with = "real")]
    pub alpha1: f64,
    #[serde(deserialize_with = "real")]
    pub alpha2: f64,
    #[serde(deserialize_with = "real")]
    pub omega: f64,
}

// JSON has no infinities; they go out as `null` and come back as NaN.
fn real<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramView {
    #[serde(flatten)]
    pub histogram: Histogram,
    pub log_scale: bool,
    /// Positive increments seen so far, including those outside the range.
    pub increments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Counts configure/reset commands; iteration restarts at 0 with each run.
    pub run: u64,
    pub iteration: usize,
    pub iterations: usize,
    #[serde(deserialize_with = "real")]
    pub best_fitness: f64,
    #[serde(deserialize_with = "real")]
    pub msd: f64,
    pub params: ParamValues,
    pub running: bool,
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub histogram: Option<HistogramView>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// The line was not a valid command.
    Malformed,
    /// The command is not allowed in the current phase.
    State,
    /// The command was well formed but its values were rejected.
    Invalid,
    Io,
    /// The running swarm stopped on a failed evaluation.
    Run,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Snapshot(Snapshot),
    Ack {
        command: String,
        phase: Phase,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        detail: Option<String>,
    },
    Error {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        command: Option<String>,
        kind: ErrorKind,
        message: String,
        phase: Phase,
    },
}

/// Serializes one message as a line, newline included. Non-finite reals
/// become `null`.
pub fn encode<T: Serialize>(msg: &T) -> String {
    let mut line = serde_json::to_string(msg).expect("messages always serialize");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commands_round_trip() {
        let cmds = [
            Command::Configure {
                config: SwarmConfig::default(),
                params: PsoParams::default(),
                adaptive: Some(AdaptiveConfig::default()),
            },
            Command::Start,
            Command::Pause,
            Command::Resume,
            Command::Reset,
            Command::SetParam { name: ParamName::Omega, value: 0.9 },
            Command::SetHistogram { bin_size: 0.5, log_scale: true },
            Command::DumpStats { path: "out.csv".into() },
        ];
        for c in cmds {
            let line = encode(&c);
            assert!(line.ends_with('\n'));
            assert!(line.contains(&format!("\"type\":\"{}\"", c.name())));
            let back: Command = serde_json::from_str(line.trim_end()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn configure_fields_default() {
        let c: Command = serde_json::from_str(r#"{"type":"configure","config":{"objective":"rastrigin","dims":5}}"#).unwrap();
        let Command::Configure { config, params, adaptive } = c else { panic!() };
        assert_eq!(config.dims, 5);
        assert_eq!(config.n_particles, SwarmConfig::default().n_particles);
        assert_eq!(params, PsoParams::default());
        assert!(adaptive.is_none());
    }

    #[test]
    fn unknown_fields_and_types_are_rejected() {
        assert!(serde_json::from_str::<Command>(r#"{"type":"launch"}"#).is_err());
        assert!(serde_json::from_str::<Command>(r#"{"type":"set_param","name":"gamma","value":1}"#).is_err());
        assert!(serde_json::from_str::<Command>(r#"{"type":"set_param","name":"omega","value":1,"to":2}"#).is_err());
        assert!(serde_json::from_str::<Command>(r#"{"name":"omega","value":1}"#).is_err());
    }

    #[test]
    fn snapshot_shape() {
        let s = ServerMessage::Snapshot(Snapshot {
            run: 1,
            iteration: 3,
            iterations: 10,
            best_fitness: -1.5,
            msd: 2.0,
            params: ParamValues { alpha1: 1.0, alpha2: 1.0, omega: 0.5 },
            running: true,
            phase: Phase::Running,
            histogram: None,
        });
        let v: serde_json::Value = serde_json::from_str(&encode(&s)).unwrap();
        assert_eq!(v["type"], "snapshot");
        assert_eq!(v["params"]["omega"], 0.5);
        assert_eq!(v["phase"], "running");
        assert!(v.get("histogram").is_none());
    }
}
