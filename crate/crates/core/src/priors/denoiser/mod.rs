//! Client side of the out-of-process denoiser.
//!
//! A [`DenoiserEndpoint`] owns one connection (a child process speaking on
//! its stdio, or a TCP stream) and keeps at most one request in flight.
//! Responses are read on a helper thread so every request can be bounded
//! by a timeout regardless of transport.

pub mod protocol;
pub mod reference;

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::grid::RealImage;
use crate::priors::scaling::DISPLAY_MAX;
use protocol::{FrameError, Request, Response};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const MAX_SIGMA: f64 = 50.0;

#[derive(Debug, thiserror::Error)]
pub enum DenoiserError {
    #[error("denoiser transport failure: {message}")]
    Transport { message: String, retriable: bool },
    #[error("denoiser protocol error: {0}")]
    Protocol(String),
    #[error("denoiser did not answer within {0:?}")]
    Timeout(Duration),
    #[error("denoiser reported an error: {0}")]
    Server(String),
    #[error("invalid denoise request: {0}")]
    InvalidRequest(String),
}

impl DenoiserError {
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            DenoiserError::Transport {
                retriable: true,
                ..
            } | DenoiserError::Timeout(_)
        )
    }

    fn transport(message: impl Into<String>) -> Self {
        DenoiserError::Transport {
            message: message.into(),
            retriable: true,
        }
    }
}

impl From<FrameError> for DenoiserError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::Closed => DenoiserError::transport("connection closed by denoiser"),
            FrameError::Io(e) => DenoiserError::transport(e.to_string()),
            FrameError::Malformed(m) => DenoiserError::Protocol(m),
        }
    }
}

/// Where the denoiser lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transport {
    /// Spawn `program args...` and talk over its stdin/stdout.
    Subprocess { program: String, args: Vec<String> },
    /// Connect to a stream socket at `host:port`.
    Tcp(String),
}

impl FromStr for Transport {
    type Err = DenoiserError;

    /// `host:port` (no whitespace, numeric port) selects TCP; anything else
    /// is a whitespace-separated command line.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(DenoiserError::InvalidRequest("empty denoiser descriptor".into()));
        }
        if !s.contains(char::is_whitespace) {
            if let Some((host, port)) = s.rsplit_once(':') {
                if !host.is_empty() && port.parse::<u16>().is_ok() {
                    return Ok(Transport::Tcp(s.to_string()));
                }
            }
        }
        let mut parts = s.split_whitespace().map(str::to_string);
        let program = parts.next().unwrap();
        Ok(Transport::Subprocess {
            program,
            args: parts.collect(),
        })
    }
}

impl std::fmt::Display for Transport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Transport::Tcp(addr) => f.write_str(addr),
            Transport::Subprocess { program, args } => {
                f.write_str(program)?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
        }
    }
}

/// A handshaken connection to a denoiser.
pub struct DenoiserEndpoint {
    writer: Box<dyn Write + Send>,
    responses: Receiver<Result<Response, FrameError>>,
    child: Option<Child>,
    timeout: Duration,
    calls: u64,
    description: String,
}

impl std::fmt::Debug for DenoiserEndpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenoiserEndpoint")
            .field("description", &self.description)
            .field("timeout", &self.timeout)
            .field("calls", &self.calls)
            .finish()
    }
}

impl DenoiserEndpoint {
    pub fn connect(transport: &Transport, timeout: Duration) -> Result<Self, DenoiserError> {
        match transport {
            Transport::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(|e| {
                    DenoiserError::transport(format!("cannot connect to {addr}: {e}"))
                })?;
                stream.set_nodelay(true).ok();
                let reader = stream
                    .try_clone()
                    .map_err(|e| DenoiserError::transport(e.to_string()))?;
                Self::from_streams(reader, stream, timeout, addr.clone())
            }
            Transport::Subprocess { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| DenoiserError::Transport {
                        message: format!("cannot spawn `{transport}`: {e}"),
                        retriable: false,
                    })?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                let mut ep = Self::from_streams(stdout, stdin, timeout, transport.to_string());
                if let Ok(ep) = ep.as_mut() {
                    ep.child = Some(child);
                } else {
                    let _ = child.kill();
                    let _ = child.wait();
                }
                ep
            }
        }
    }

    /// Wraps an already-open byte stream pair and performs the handshake.
    pub fn from_streams(
        reader: impl Read + Send + 'static,
        writer: impl Write + Send + 'static,
        timeout: Duration,
        description: impl Into<String>,
    ) -> Result<Self, DenoiserError> {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let frame = protocol::read_response(&mut reader);
                let stop = frame.is_err();
                if tx.send(frame).is_err() || stop {
                    break;
                }
            }
        });
        let mut ep = Self {
            writer: Box::new(BufWriter::new(writer)),
            responses: rx,
            child: None,
            timeout,
            calls: 0,
            description: description.into(),
        };
        ep.handshake()?;
        Ok(ep)
    }

    fn round_trip(&mut self, req: &Request) -> Result<Response, DenoiserError> {
        protocol::write_request(&mut self.writer, req)
            .map_err(|e| DenoiserError::transport(format!("write failed: {e}")))?;
        match self.responses.recv_timeout(self.timeout) {
            Ok(frame) => Ok(frame?),
            Err(RecvTimeoutError::Timeout) => Err(DenoiserError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(DenoiserError::transport("connection closed by denoiser"))
            }
        }
    }

    fn handshake(&mut self) -> Result<(), DenoiserError> {
        match self.round_trip(&Request::Handshake)? {
            Response::Ok { width: 0, height: 0, values } if values.is_empty() => Ok(()),
            Response::Ok { width, height, .. } => Err(DenoiserError::Protocol(format!(
                "handshake answered with {width}x{height} payload"
            ))),
            Response::Error { message, .. } => Err(DenoiserError::Server(message)),
        }
    }

    /// Sends one single-precision image and returns the reply payload.
    pub fn denoise_raw(
        &mut self,
        width: u32,
        height: u32,
        sigma: f32,
        values: Vec<f32>,
    ) -> Result<Vec<f32>, DenoiserError> {
        let req = Request::Denoise {
            width,
            height,
            sigma,
            values,
        };
        self.calls += 1;
        match self.round_trip(&req)? {
            Response::Ok {
                width: rw,
                height: rh,
                values,
            } => {
                if (rw, rh) != (width, height) || values.len() != (width * height) as usize {
                    return Err(DenoiserError::Protocol(format!(
                        "reply is {rw}x{rh}, request was {width}x{height}"
                    )));
                }
                Ok(values)
            }
            Response::Error { message, .. } => Err(DenoiserError::Server(message)),
        }
    }

    /// Number of denoise requests issued (handshakes excluded).
    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl Drop for DenoiserEndpoint {
    fn drop(&mut self) {
        // closing stdin lets well-behaved servers exit on their own
        self.writer = Box::new(std::io::sink());
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Denoises a grey-level image in `[0, 255]` through the endpoint.
///
/// The wire carries `f32`. Pixels the server hands back bit-identical to
/// what was sent keep their original `f64` value; every other pixel takes
/// the reply value clamped to `[0, 255]`.
pub fn deep_denoise(
    img: &RealImage,
    sigma: f64,
    ep: &mut DenoiserEndpoint,
) -> Result<RealImage, DenoiserError> {
    if !(0.0..=MAX_SIGMA).contains(&sigma) {
        return Err(DenoiserError::InvalidRequest(format!(
            "sigma {sigma} outside [0, {MAX_SIGMA}]"
        )));
    }
    if let Some(v) = img
        .as_slice()
        .iter()
        .find(|v| !(0.0..=DISPLAY_MAX).contains(*v))
    {
        return Err(DenoiserError::InvalidRequest(format!(
            "value {v} outside [0, 255]"
        )));
    }
    let (w, h) = img.dims();
    let (w32, h32) = u32::try_from(w)
        .ok()
        .zip(u32::try_from(h).ok())
        .ok_or_else(|| DenoiserError::InvalidRequest(format!("{w}x{h} too large")))?;
    let sent: Vec<f32> = img.as_slice().iter().map(|&v| v as f32).collect();
    let reply = ep.denoise_raw(w32, h32, sigma as f32, sent.clone())?;
    let out = img
        .as_slice()
        .iter()
        .zip(&sent)
        .zip(&reply)
        .map(|((&orig, s), r)| {
            if r.to_bits() == s.to_bits() {
                orig
            } else {
                (*r as f64).clamp(0.0, DISPLAY_MAX)
            }
        })
        .collect();
    Ok(RealImage::from_vec(w, h, out).expect("dims checked"))
}
