//! Reference `ZSND` servers used for protocol testing without model
//! weights: an identity echo and a 3×3 box blur.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::protocol::{self, FrameError, Request, Response};

pub const MAX_SIDE: u32 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Identity,
    BoxBlur,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(Backend::Identity),
            "boxblur" | "box-blur" => Ok(Backend::BoxBlur),
            other => Err(format!("unknown reference backend `{other}`")),
        }
    }
}

pub type Handler = Arc<dyn Fn(&Request) -> Response + Send + Sync>;

impl Backend {
    pub fn respond(self, req: &Request) -> Response {
        let Request::Denoise {
            width,
            height,
            values,
            ..
        } = req
        else {
            return Response::handshake_ok();
        };
        if *width > MAX_SIDE || *height > MAX_SIDE {
            return Response::error(format!(
                "image {width}x{height} exceeds max side {MAX_SIDE}"
            ));
        }
        let values = match self {
            Backend::Identity => values.clone(),
            Backend::BoxBlur => box_blur_3x3(values, *width as usize, *height as usize),
        };
        Response::Ok {
            width: *width,
            height: *height,
            values,
        }
    }

    pub fn handler(self) -> Handler {
        Arc::new(move |req| self.respond(req))
    }
}

/// 3×3 mean with replicated edges, accumulated in `f64`.
pub fn box_blur_3x3(values: &[f32], width: usize, height: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(values.len());
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0f64;
            for dy in -1isize..=1 {
                let yy = (y as isize + dy).clamp(0, height as isize - 1) as usize;
                for dx in -1isize..=1 {
                    let xx = (x as isize + dx).clamp(0, width as isize - 1) as usize;
                    acc += values[yy * width + xx] as f64;
                }
            }
            out.push((acc / 9.0) as f32);
        }
    }
    out
}

/// Serves one connection until the peer closes it. Malformed frames get an
/// error response and the connection stays open.
pub fn serve_connection(
    reader: impl Read,
    writer: impl Write,
    handler: &(dyn Fn(&Request) -> Response + Send + Sync),
) -> io::Result<()> {
    let mut reader = BufReader::new(reader);
    let mut writer = BufWriter::new(writer);
    loop {
        let resp = match protocol::read_request(&mut reader) {
            Ok(req) => handler(&req),
            Err(FrameError::Closed) => return Ok(()),
            Err(FrameError::Io(e)) => return Err(e),
            Err(FrameError::Malformed(m)) => Response::error(m),
        };
        protocol::write_response(&mut writer, &resp)?;
    }
}

/// A background TCP server on a loopback port; stops when dropped.
pub struct TcpServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl TcpServer {
    pub fn spawn(handler: Handler) -> io::Result<Self> {
        let listener = TcpListener::bind(("127.0.0.1", 0))?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = stop.clone();
        let accept = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let handler = handler.clone();
                std::thread::spawn(move || {
                    stream.set_nodelay(true).ok();
                    if let Ok(reader) = stream.try_clone() {
                        let _ = serve_connection(reader, stream, handler.as_ref());
                    }
                });
            }
        });
        Ok(Self {
            addr,
            stop,
            accept: Some(accept),
        })
    }

    pub fn spawn_backend(backend: Backend) -> io::Result<Self> {
        Self::spawn(backend.handler())
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `host:port` descriptor for [`super::Transport`].
    pub fn descriptor(&self) -> String {
        self.addr.to_string()
    }
}

impl Drop for TcpServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}
