//! `ZSND` frames exchanged with out-of-process denoisers.
//!
//! Request: `"ZSND"`, version `u8 = 1`, type `u8` (0 handshake, 1 denoise),
//! `u32` width, `u32` height, `f32` sigma, then `width·height` `f32` values.
//! Response: `"ZSND"`, version, status `u8` (0 ok, 1 error), `u32` width,
//! `u32` height, then either the payload or a `u32` length + UTF-8 message.
//! Everything little-endian, no padding.

use std::io::{self, Read, Write};

pub const MAGIC: &[u8; 4] = b"ZSND";
pub const VERSION: u8 = 1;

pub const MSG_HANDSHAKE: u8 = 0;
pub const MSG_DENOISE: u8 = 1;

pub const STATUS_OK: u8 = 0;
pub const STATUS_ERROR: u8 = 1;

/// Refuses frames claiming more values than this (guards allocation).
pub const MAX_PAYLOAD_VALUES: usize = 1 << 26;
const MAX_MESSAGE_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Handshake,
    Denoise {
        width: u32,
        height: u32,
        sigma: f32,
        values: Vec<f32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Ok {
        width: u32,
        height: u32,
        values: Vec<f32>,
    },
    Error {
        width: u32,
        height: u32,
        message: String,
    },
}

impl Response {
    pub fn error(message: impl Into<String>) -> Self {
        Response::Error {
            width: 0,
            height: 0,
            message: message.into(),
        }
    }

    pub fn handshake_ok() -> Self {
        Response::Ok {
            width: 0,
            height: 0,
            values: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("connection closed")]
    Closed,
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed frame: {0}")]
    Malformed(String),
}

fn put_header(out: &mut Vec<u8>, code: u8, width: u32, height: u32) {
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(code);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
}

pub fn encode_request(req: &Request) -> Vec<u8> {
    let mut out = Vec::new();
    match req {
        Request::Handshake => {
            put_header(&mut out, MSG_HANDSHAKE, 0, 0);
            out.extend_from_slice(&0f32.to_le_bytes());
        }
        Request::Denoise {
            width,
            height,
            sigma,
            values,
        } => {
            out.reserve(18 + values.len() * 4);
            put_header(&mut out, MSG_DENOISE, *width, *height);
            out.extend_from_slice(&sigma.to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn encode_response(resp: &Response) -> Vec<u8> {
    let mut out = Vec::new();
    match resp {
        Response::Ok {
            width,
            height,
            values,
        } => {
            out.reserve(14 + values.len() * 4);
            put_header(&mut out, STATUS_OK, *width, *height);
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Response::Error {
            width,
            height,
            message,
        } => {
            put_header(&mut out, STATUS_ERROR, *width, *height);
            out.extend_from_slice(&(message.len() as u32).to_le_bytes());
            out.extend_from_slice(message.as_bytes());
        }
    }
    out
}

/// Reads the 14-byte common header, mapping a clean EOF before the first
/// byte to [`FrameError::Closed`].
fn read_header(r: &mut impl Read) -> Result<(u8, u32, u32), FrameError> {
    let mut head = [0u8; 14];
    let mut filled = 0;
    while filled < head.len() {
        match r.read(&mut head[filled..]) {
            Ok(0) if filled == 0 => return Err(FrameError::Closed),
            Ok(0) => return Err(FrameError::Malformed("truncated header".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    if &head[..4] != MAGIC {
        return Err(FrameError::Malformed(format!(
            "bad magic {:02x?}",
            &head[..4]
        )));
    }
    if head[4] != VERSION {
        return Err(FrameError::Malformed(format!(
            "unsupported version {}",
            head[4]
        )));
    }
    let width = u32::from_le_bytes(head[6..10].try_into().unwrap());
    let height = u32::from_le_bytes(head[10..14].try_into().unwrap());
    Ok((head[5], width, height))
}

fn read_f32s(r: &mut impl Read, width: u32, height: u32) -> Result<Vec<f32>, FrameError> {
    let n = (width as usize)
        .checked_mul(height as usize)
        .filter(|&n| n <= MAX_PAYLOAD_VALUES)
        .ok_or_else(|| FrameError::Malformed(format!("payload {width}x{height} too large")))?;
    let mut bytes = vec![0u8; n * 4];
    read_exact(r, &mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<(), FrameError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            FrameError::Malformed("truncated payload".into())
        } else {
            FrameError::Io(e)
        }
    })
}

pub fn read_request(r: &mut impl Read) -> Result<Request, FrameError> {
    let (kind, width, height) = read_header(r)?;
    let mut sigma = [0u8; 4];
    read_exact(r, &mut sigma)?;
    let sigma = f32::from_le_bytes(sigma);
    match kind {
        MSG_HANDSHAKE => {
            if width != 0 || height != 0 {
                return Err(FrameError::Malformed(
                    "handshake must carry zero dimensions".into(),
                ));
            }
            Ok(Request::Handshake)
        }
        MSG_DENOISE => Ok(Request::Denoise {
            width,
            height,
            sigma,
            values: read_f32s(r, width, height)?,
        }),
        other => Err(FrameError::Malformed(format!("unknown message type {other}"))),
    }
}

pub fn read_response(r: &mut impl Read) -> Result<Response, FrameError> {
    let (status, width, height) = read_header(r)?;
    match status {
        STATUS_OK => Ok(Response::Ok {
            width,
            height,
            values: read_f32s(r, width, height)?,
        }),
        STATUS_ERROR => {
            let mut len = [0u8; 4];
            read_exact(r, &mut len)?;
            let len = u32::from_le_bytes(len) as usize;
            if len > MAX_MESSAGE_LEN {
                return Err(FrameError::Malformed(format!("error message of {len} bytes")));
            }
            let mut msg = vec![0u8; len];
            read_exact(r, &mut msg)?;
            Ok(Response::Error {
                width,
                height,
                message: String::from_utf8_lossy(&msg).into_owned(),
            })
        }
        other => Err(FrameError::Malformed(format!("unknown status {other}"))),
    }
}

pub fn write_request(w: &mut impl Write, req: &Request) -> io::Result<()> {
    w.write_all(&encode_request(req))?;
    w.flush()
}

pub fn write_response(w: &mut impl Write, resp: &Response) -> io::Result<()> {
    w.write_all(&encode_response(resp))?;
    w.flush()
}
