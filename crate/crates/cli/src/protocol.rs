//! Line-delimited JSON agent protocol over a child process's stdio.
//!
//! The environment writes one [`EnvMessage`] per line and reads back one
//! [`AgentReply`] per line. The child is started for each episode and killed
//! when the episode ends.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use orgym_core::agent::{Agent, AgentError};
use orgym_core::env::{Action, EpisodeState};
use orgym_core::saboteur::BenchmarkInstance;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const ALLOWED_ACTIONS: [&str; 8] = [
    "GET_IIS",
    "CHECK_SLACK",
    "CHECK_BOUND",
    "RELAX",
    "DROP",
    "REWRITE",
    "SUBMIT",
    "RESTART",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvMessage {
    pub schema_version: u32,
    pub episode_id: String,
    pub sequence_no: u64,
    pub state: EpisodeState,
    pub allowed_actions: Vec<String>,
}

/// An action plus optional echo of the message it answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_no: Option<u64>,
    #[serde(flatten)]
    pub action: Action,
}

pub fn episode_id(inst: &BenchmarkInstance, attempt: u32) -> String {
    format!("{}/{}", inst.id, attempt)
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// Kills the agent's whole process group so shell children do not linger.
#[cfg(unix)]
fn kill_group(child: &Child) {
    if let Ok(pid) = libc::pid_t::try_from(child.id()) {
        // SAFETY: signalling a process group we created; no memory is shared.
        unsafe {
            libc::kill(-pid, libc::SIGKILL);
        }
    }
}

#[cfg(not(unix))]
fn kill_group(_child: &Child) {}

/// Bridges a shell command speaking the protocol.
pub struct ExternalAgent {
    cmd: String,
    timeout: Duration,
    episode: String,
    seq: u64,
    proc: Option<Running>,
}

impl ExternalAgent {
    pub fn new(cmd: impl Into<String>, timeout: Duration) -> Self {
        ExternalAgent {
            cmd: cmd.into(),
            timeout,
            episode: String::new(),
            seq: 0,
            proc: None,
        }
    }

    fn shutdown(&mut self) {
        if let Some(mut p) = self.proc.take() {
            drop(p.stdin);
            kill_group(&p.child);
            let _ = p.child.kill();
            let _ = p.child.wait();
        }
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl Agent for ExternalAgent {
    fn begin(&mut self, inst: &BenchmarkInstance, attempt: u32) -> Result<(), AgentError> {
        self.shutdown();
        let mut cmd = Command::new("sh");
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
        let mut child = cmd
            .arg("-c")
            .arg(&self.cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AgentError::Spawn(format!("{}: {e}", self.cmd)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        self.proc = Some(Running {
            child,
            stdin,
            lines: rx,
        });
        self.episode = episode_id(inst, attempt);
        self.seq = 0;
        Ok(())
    }

    fn act(&mut self, state: &EpisodeState) -> Result<Action, AgentError> {
        let p = self
            .proc
            .as_mut()
            .ok_or_else(|| AgentError::Protocol("agent not started".into()))?;
        let msg = EnvMessage {
            schema_version: PROTOCOL_VERSION,
            episode_id: self.episode.clone(),
            sequence_no: self.seq,
            state: state.clone(),
            allowed_actions: ALLOWED_ACTIONS.iter().map(|s| s.to_string()).collect(),
        };
        let mut line =
            serde_json::to_string(&msg).map_err(|e| AgentError::Protocol(e.to_string()))?;
        line.push('\n');
        p.stdin
            .write_all(line.as_bytes())
            .and_then(|()| p.stdin.flush())
            .map_err(|e| AgentError::Protocol(format!("writing to agent: {e}")))?;
        let reply = match p.lines.recv_timeout(self.timeout) {
            Ok(Ok(l)) => l,
            Ok(Err(e)) => return Err(AgentError::Protocol(format!("reading from agent: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(AgentError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(AgentError::Protocol("agent closed its output".into()))
            }
        };
        let reply: AgentReply = serde_json::from_str(&reply)
            .map_err(|e| AgentError::Protocol(format!("bad reply {reply:?}: {e}")))?;
        if reply
            .episode_id
            .as_ref()
            .is_some_and(|id| *id != self.episode)
        {
            return Err(AgentError::Protocol(format!(
                "reply for episode {:?}",
                reply.episode_id.unwrap()
            )));
        }
        if reply.sequence_no.is_some_and(|n| n != self.seq) {
            return Err(AgentError::Protocol(format!(
                "reply to message {} while {} is pending",
                reply.sequence_no.unwrap(),
                self.seq
            )));
        }
        self.seq += 1;
        Ok(reply.action)
    }

    fn end(&mut self) {
        self.shutdown();
    }
}
