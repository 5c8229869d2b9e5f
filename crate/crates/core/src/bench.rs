//! Overhead measurements: projection cost on top of parsing, and gateway
//! relay throughput in passthrough versus legacy mode.

use std::fmt;
use std::fs;
use std::io;
use std::net::TcpListener;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::envelope::{self, SessionKey};
use crate::gateway::{self, Gateway, GatewayConfig, Mode, OriginServer, Request};
use crate::markup::{self, TagRegistry};
use crate::projector::{self, Target};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub document_bytes: usize,
    pub envelope_bytes: usize,
    pub parse_iterations: u32,
    pub relay_iterations: u32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            document_bytes: 100 * 1024,
            envelope_bytes: 1024 * 1024,
            parse_iterations: 20,
            relay_iterations: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub document_bytes: usize,
    pub parse: Duration,
    pub parse_project: Duration,
    pub envelope_bytes: usize,
    pub passthrough: Duration,
    pub legacy: Duration,
}

impl BenchReport {
    /// Parse+project time over parse-only time.
    pub fn projection_ratio(&self) -> f64 {
        self.parse_project.as_secs_f64() / self.parse.as_secs_f64()
    }

    /// Passthrough throughput over legacy throughput.
    pub fn relay_ratio(&self) -> f64 {
        self.legacy.as_secs_f64() / self.passthrough.as_secs_f64()
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "parse            {:>10.3} ms  ({} byte document)",
            ms(self.parse),
            self.document_bytes
        )?;
        writeln!(f, "parse+project    {:>10.3} ms", ms(self.parse_project))?;
        writeln!(f, "projection ratio {:>10.3}", self.projection_ratio())?;
        writeln!(
            f,
            "passthrough      {:>10.3} ms  ({} byte envelope)",
            ms(self.passthrough),
            self.envelope_bytes
        )?;
        writeln!(f, "legacy           {:>10.3} ms", ms(self.legacy))?;
        write!(f, "relay ratio      {:>10.3}", self.relay_ratio())
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// A well-formed wHTML document of at least `min_bytes` bytes mixing all
/// three tag classes.
pub fn generate_document(min_bytes: usize) -> Vec<u8> {
    let mut out = String::from("<whtml><hbody>");
    let mut i = 0usize;
    while out.len() < min_bytes / 2 {
        out.push_str(&format!(
            "<hdiv class=\"c{m}\"><hh1>Section {i}</hh1><p>Item <b>{i}</b> &amp; <i>more</i></p>\
             <hul><hli>one</hli><hli>two</hli></hul><table><tr><td>{i}</td></tr></table></hdiv>",
            m = i % 7
        ));
        i += 1;
    }
    out.push_str("</hbody>");
    let mut card = 0usize;
    while out.len() < min_bytes {
        out.push_str(&format!(
            "<wcard id=\"c{card}\"><wdo type=\"accept\"><wgo href=\"#c{n}\"/></wdo>\
             <p>Card {card} <strong>text</strong><br/><hspan>web only</hspan></p></wcard>",
            n = card + 1
        ));
        card += 1;
    }
    out.push_str("</whtml>");
    out.into_bytes()
}

fn min_of<F: FnMut()>(iterations: u32, mut f: F) -> Duration {
    (0..iterations.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap_or_default()
}

pub fn run(cfg: &BenchConfig) -> io::Result<BenchReport> {
    let registry = TagRegistry::default();
    let doc = generate_document(cfg.document_bytes);
    let parse = min_of(cfg.parse_iterations, || {
        markup::parse(&doc, &registry).expect("generated document parses");
    });
    let parse_project = min_of(cfg.parse_iterations, || {
        let d = markup::parse(&doc, &registry).expect("generated document parses");
        projector::project(&d, Target::Wml).expect("generated document has cards");
    });

    let dir = tempfile::tempdir()?;
    let payload: Vec<u8> = (0..cfg.envelope_bytes).map(|i| (i * 31 % 251) as u8).collect();
    fs::write(dir.path().join("payload.bin"), &payload)?;
    let client_key = SessionKey::pre_shared(b"bench-client".to_vec()).expect("valid key");
    let server_key = SessionKey::pre_shared(b"bench-server".to_vec()).expect("valid key");

    let passthrough = relay_time(dir.path(), Mode::Passthrough, &client_key, &server_key, cfg.relay_iterations)?;
    let legacy = relay_time(dir.path(), Mode::Legacy, &client_key, &server_key, cfg.relay_iterations)?;
    Ok(BenchReport {
        document_bytes: doc.len(),
        parse,
        parse_project,
        envelope_bytes: cfg.envelope_bytes,
        passthrough,
        legacy,
    })
}

fn relay_time(
    root: &std::path::Path,
    mode: Mode,
    client_key: &SessionKey,
    server_key: &SessionKey,
    iterations: u32,
) -> io::Result<Duration> {
    // Passthrough: the origin shares the client's key end to end.
    let origin_key = match mode {
        Mode::Passthrough => client_key.clone(),
        Mode::Legacy => server_key.clone(),
    };
    let origin_listener = TcpListener::bind("127.0.0.1:0")?;
    let origin_addr = origin_listener.local_addr()?.to_string();
    let origin = Arc::new(OriginServer::new(root, Some(origin_key)));
    std::thread::spawn(move || origin.serve(origin_listener, gateway::DEFAULT_READ_TIMEOUT));

    let mut gcfg = GatewayConfig::new(origin_addr, root.join(format!("cache-{mode:?}")));
    gcfg.mode = mode;
    gcfg.client_key = Some(client_key.clone());
    gcfg.server_key = Some(server_key.clone());
    let gw = Arc::new(Gateway::new(gcfg).map_err(io::Error::other)?);
    let gw_listener = TcpListener::bind("127.0.0.1:0")?;
    let gw_addr = gw_listener.local_addr()?.to_string();
    std::thread::spawn(move || gw.serve(gw_listener));

    let mut counter = 0u64;
    Ok(min_of(iterations, || {
        counter += 1;
        let body = envelope::seal(client_key, counter, b"").to_bytes();
        let req = Request::get("waps://bench/payload.bin").with_body(envelope::CONTENT_TYPE, body);
        let resp = gateway::send(&gw_addr, &req, Duration::from_secs(30)).expect("relay succeeds");
        assert_eq!(resp.status, 200, "relay failed: {}", String::from_utf8_lossy(&resp.body));
    }))
}
