//! Client behaviour against the reference servers over both transports.

use std::sync::Arc;
use std::time::Duration;

use num_complex::Complex64;

use holoprior::priors::denoiser::protocol::{Request, Response};
use holoprior::priors::denoiser::reference::{Backend, TcpServer};
use holoprior::priors::denoiser::{deep_denoise, DenoiserError};
use holoprior::priors::{apply_prior_chain, deep_prior_channel, PriorChain, PriorStage};
use holoprior::{Channel, ComplexField, DenoiserEndpoint, RealImage, Transport};

const TIMEOUT: Duration = Duration::from_secs(20);

fn tcp(backend: Backend) -> (TcpServer, DenoiserEndpoint) {
    let server = TcpServer::spawn_backend(backend).unwrap();
    let ep = DenoiserEndpoint::connect(&server.descriptor().parse().unwrap(), TIMEOUT).unwrap();
    (server, ep)
}

fn subprocess(backend: &str) -> DenoiserEndpoint {
    let t = Transport::Subprocess {
        program: env!("CARGO_BIN_EXE_holoprior").into(),
        args: vec!["serve-reference".into(), "--backend".into(), backend.into()],
    };
    DenoiserEndpoint::connect(&t, TIMEOUT).unwrap()
}

/// 3×3 mean with replicated borders, summed in a different order from the
/// server (row sums first).
fn blur_oracle(v: &[f32], w: usize, h: usize) -> Vec<f32> {
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        v[y * w + x] as f64
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let rows: f64 = (-1..=1).map(|dy| (-1..=1).map(|dx| at(x + dx, y + dy)).sum::<f64>()).sum();
            out.push((rows / 9.0) as f32);
        }
    }
    out
}

fn ramp(w: usize, h: usize) -> Vec<f32> {
    (0..w * h).map(|i| ((i * 37) % 256) as f32).collect()
}

#[test]
fn boxblur_matches_oracle_over_tcp_and_stdio() {
    let (w, h) = (13usize, 7usize);
    let input = ramp(w, h);
    let expected = blur_oracle(&input, w, h);
    let (_server, mut tcp_ep) = tcp(Backend::BoxBlur);
    let mut stdio_ep = subprocess("boxblur");
    for ep in [&mut tcp_ep, &mut stdio_ep] {
        let got = ep.denoise_raw(w as u32, h as u32, 5.0, input.clone()).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-4, "{g} vs {e}");
        }
        assert_eq!(ep.calls(), 1);
    }
}

#[test]
fn identity_round_trip_over_stdio_is_bit_exact() {
    let mut ep = subprocess("identity");
    let values: Vec<f32> = (0..500).map(|i| (i as f32 * 0.517).sin() * 300.0).collect();
    let back = ep.denoise_raw(25, 20, 0.0, values.clone()).unwrap();
    assert!(back.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn constant_channel_is_preserved() {
    let (_server, mut ep) = tcp(Backend::BoxBlur);
    let flat = RealImage::filled(9, 9, 3.25);
    assert_eq!(deep_prior_channel(&flat, 10.0, &mut ep).unwrap(), flat);
    // a pure-phase field keeps unit amplitude through a deep stage
    let field = ComplexField::from_fn(9, 9, |x, y| Complex64::from_polar(1.0, 0.1 * (x + y) as f64));
    let out = apply_prior_chain(&field, &PriorChain::new(vec![PriorStage::deep(10.0, Channel::Both)]), Some(&mut ep)).unwrap();
    for v in out.as_slice() {
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn blur_reduces_variation_in_grey_levels() {
    let (_server, mut ep) = tcp(Backend::BoxBlur);
    let img = RealImage::from_fn(16, 16, |x, y| if (x + y) % 2 == 0 { 200.0 } else { 50.0 });
    let out = deep_denoise(&img, 10.0, &mut ep).unwrap();
    let (lo, hi) = out.min_max();
    assert!(lo > 50.0 && hi < 200.0);
}

fn flipping_server() -> TcpServer {
    TcpServer::spawn(Arc::new(|req: &Request| match req {
        Request::Handshake => Response::handshake_ok(),
        Request::Denoise { width, height, values, .. } => Response::Ok {
            width: *height,
            height: *width,
            values: values.clone(),
        },
    }))
    .unwrap()
}

#[test]
fn mismatched_reply_is_a_protocol_error() {
    let server = flipping_server();
    let mut ep = DenoiserEndpoint::connect(&server.descriptor().parse().unwrap(), TIMEOUT).unwrap();
    let err = ep.denoise_raw(3, 2, 1.0, vec![0.0; 6]).unwrap_err();
    assert!(matches!(err, DenoiserError::Protocol(_)), "{err}");
}

#[test]
fn slow_server_times_out() {
    let server = TcpServer::spawn(Arc::new(|req: &Request| {
        if let Request::Denoise { .. } = req {
            std::thread::sleep(Duration::from_millis(1500));
        }
        Backend::Identity.respond(req)
    }))
    .unwrap();
    let mut ep = DenoiserEndpoint::connect(&server.descriptor().parse().unwrap(), TIMEOUT).unwrap();
    ep.set_timeout(Duration::from_millis(100));
    let err = ep.denoise_raw(2, 2, 1.0, vec![1.0; 4]).unwrap_err();
    assert!(matches!(err, DenoiserError::Timeout(_)), "{err}");
    assert!(err.is_retriable());
}

#[test]
fn server_errors_surface_with_their_message() {
    let server = TcpServer::spawn(Arc::new(|req: &Request| match req {
        Request::Handshake => Response::handshake_ok(),
        Request::Denoise { .. } => Response::error("out of memory"),
    }))
    .unwrap();
    let mut ep = DenoiserEndpoint::connect(&server.descriptor().parse().unwrap(), TIMEOUT).unwrap();
    match ep.denoise_raw(2, 2, 1.0, vec![0.0; 4]).unwrap_err() {
        DenoiserError::Server(m) => assert_eq!(m, "out of memory"),
        other => panic!("{other}"),
    }
    let err = deep_denoise(&RealImage::filled(2, 2, 1.0), 60.0, &mut ep).unwrap_err();
    assert!(matches!(err, DenoiserError::InvalidRequest(_)));
}

#[test]
fn unreachable_endpoints_fail_cleanly() {
    let err = DenoiserEndpoint::connect(&"127.0.0.1:1".parse().unwrap(), TIMEOUT).unwrap_err();
    assert!(matches!(err, DenoiserError::Transport { .. }));
    let missing = Transport::Subprocess { program: "/nonexistent/denoiser".into(), args: vec![] };
    assert!(DenoiserEndpoint::connect(&missing, TIMEOUT).is_err());
}
