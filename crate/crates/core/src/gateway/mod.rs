//! The filtering gateway between HTTP/WAP clients and an origin server.
//!
//! Plain schemes (`http`, `wap`) are fetched from the origin and adapted to
//! the client's profile. Secure schemes (`https`, `waps`) carry envelopes in
//! the request and response bodies; in passthrough mode those bytes are
//! relayed without being opened, while legacy mode decrypts and re-encrypts
//! at the gateway the way a classic WAP gateway does.

pub mod audit;
pub mod cache;
pub mod client;
pub mod http;
pub mod origin;

use std::io::{self, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use thiserror::Error;

use crate::envelope::{self, EnvelopeError, ReplayGuard, SecureEnvelope, SessionKey};
use crate::markup::{self, RegistryError, TagRegistry};
use crate::media::{bmp, encode_wbmp, DEFAULT_THRESHOLD, WBMP_CONTENT_TYPE};
use crate::projector::{self, Target};
use crate::wmls::ScriptSource;

pub use audit::{AuditLog, AuditRecord};
pub use cache::{BytecodeCache, CacheError};
pub use client::{fetch, ClientError};
pub use http::{HttpError, Request, Response, Scheme, Url};
pub use origin::{serve_origin, OriginServer};

pub const DEFAULT_READ_TIMEOUT: Duration = Duration::from_secs(5);
pub const WBC_CONTENT_TYPE: &str = "application/x-wbc";
pub const THRESHOLD_HEADER: &str = "X-WBMP-Threshold";
pub const REGISTRY_ENV: &str = "WHTML_REGISTRY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Passthrough,
    Legacy,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "passthrough" => Ok(Mode::Passthrough),
            "legacy" => Ok(Mode::Legacy),
            _ => Err(format!("unknown mode `{s}` (expected passthrough or legacy)")),
        }
    }
}

pub fn profile_for(scheme: Scheme) -> Target {
    if scheme.is_wap() {
        Target::Wml
    } else {
        Target::Html
    }
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// `host:port` of the origin server.
    pub origin: String,
    pub mode: Mode,
    pub cache_dir: PathBuf,
    /// Falls back to `$WHTML_REGISTRY`, then to the built-in registry.
    pub registry_path: Option<PathBuf>,
    pub read_timeout: Duration,
    pub audit_path: Option<PathBuf>,
    /// Legacy mode only: the client-side and origin-side session keys.
    pub client_key: Option<SessionKey>,
    pub server_key: Option<SessionKey>,
}

impl GatewayConfig {
    pub fn new(origin: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            origin: origin.into(),
            mode: Mode::Passthrough,
            cache_dir: cache_dir.into(),
            registry_path: None,
            read_timeout: DEFAULT_READ_TIMEOUT,
            audit_path: None,
            client_key: None,
            server_key: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("registry: {0}")]
    Registry(#[from] RegistryError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("legacy mode needs both a client key and a server key")]
    MissingKeys,
}

/// Loads the registry from `path`, else `$WHTML_REGISTRY`, else the default.
pub fn load_registry(path: Option<&std::path::Path>) -> Result<TagRegistry, RegistryError> {
    let env = std::env::var_os(REGISTRY_ENV).map(PathBuf::from);
    match path.map(PathBuf::from).or(env) {
        Some(p) => TagRegistry::load(&p),
        None => Ok(TagRegistry::default()),
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("cannot connect: {0}")]
    Connect(io::Error),
    #[error("protocol error: {0}")]
    Protocol(HttpError),
}

#[derive(Debug, Clone)]
pub struct OriginResponse {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
    pub raw: http::RawMessage,
}

/// Sends `req` to `addr` and reads the whole response.
pub fn send(addr: &str, req: &Request, timeout: Duration) -> Result<OriginResponse, FetchError> {
    let mut stream = connect(addr, timeout).map_err(FetchError::Connect)?;
    stream.write_all(&req.to_bytes()).map_err(FetchError::Connect)?;
    let (resp, raw) = Response::read_from(&mut stream).map_err(FetchError::Protocol)?;
    Ok(OriginResponse {
        status: resp.status,
        content_type: resp.content_type().unwrap_or("application/octet-stream").to_string(),
        body: resp.body,
        raw,
    })
}

fn connect(addr: &str, timeout: Duration) -> io::Result<TcpStream> {
    let mut last = io::Error::new(io::ErrorKind::NotFound, format!("`{addr}` resolves to nothing"));
    for a in addr.to_socket_addrs()? {
        match TcpStream::connect_timeout(&a, timeout) {
            Ok(s) => {
                s.set_read_timeout(Some(timeout))?;
                s.set_write_timeout(Some(timeout))?;
                return Ok(s);
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// GET of an origin-form `path`, optionally carrying an envelope body.
pub fn fetch_origin(
    cfg: &GatewayConfig,
    path: &str,
    envelope_body: Option<Vec<u8>>,
) -> Result<OriginResponse, FetchError> {
    let mut req = Request::get(path).with_header("Host", &cfg.origin);
    if let Some(body) = envelope_body {
        req = req.with_body(envelope::CONTENT_TYPE, body);
    }
    send(&cfg.origin, &req, cfg.read_timeout)
}

pub struct Gateway {
    cfg: GatewayConfig,
    registry: TagRegistry,
    cache: BytecodeCache,
    audit: AuditLog,
    decrypt_calls: AtomicU64,
    client_guard: Mutex<ReplayGuard>,
    server_guard: Mutex<ReplayGuard>,
    to_origin_counter: AtomicU64,
    to_client_counter: AtomicU64,
}

impl Gateway {
    pub fn new(cfg: GatewayConfig) -> Result<Self, GatewayError> {
        if cfg.mode == Mode::Legacy && (cfg.client_key.is_none() || cfg.server_key.is_none()) {
            return Err(GatewayError::MissingKeys);
        }
        let registry = load_registry(cfg.registry_path.as_deref())?;
        let cache = BytecodeCache::new(&cfg.cache_dir)?;
        let audit = match &cfg.audit_path {
            Some(p) => AuditLog::with_file(p)?,
            None => AuditLog::new(),
        };
        Ok(Self {
            cfg,
            registry,
            cache,
            audit,
            decrypt_calls: AtomicU64::new(0),
            client_guard: Mutex::default(),
            server_guard: Mutex::default(),
            to_origin_counter: AtomicU64::new(1),
            to_client_counter: AtomicU64::new(1),
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn cache(&self) -> &BytecodeCache {
        &self.cache
    }

    /// Number of envelopes this gateway has opened.
    pub fn decrypt_calls(&self) -> u64 {
        self.decrypt_calls.load(Ordering::SeqCst)
    }

    pub fn handle_request(&self, req: &Request) -> Response {
        if req.method != "GET" {
            return Response::text(400, format!("method {} not supported", req.method));
        }
        let url = match Url::parse(&req.target) {
            Ok(u) => u,
            Err(e) => return Response::text(400, e),
        };
        if url.scheme.is_secure() {
            match self.cfg.mode {
                Mode::Passthrough => self.secure_passthrough(&url, req),
                Mode::Legacy => self.secure_legacy(&url, req),
            }
        } else {
            self.plain(&url, req)
        }
    }

    fn plain(&self, url: &Url, req: &Request) -> Response {
        let profile = profile_for(url.scheme);
        let origin = match fetch_origin(&self.cfg, &url.path, None) {
            Ok(o) => o,
            Err(e) => return Response::text(502, e),
        };
        match origin.status {
            200 => {}
            404 => return Response::text(404, format!("{} not found at origin", url.path)),
            s => return Response::text(502, format!("origin answered {s}")),
        }
        let (event, resp) = match http::media_type(&origin.content_type).as_str() {
            "application/x-whtml" => ("projected", self.project(&origin.body, profile)),
            "image/bmp" if profile == Target::Wml => ("transcoded", transcode(req, &origin.body)),
            "application/x-wmls" => ("compiled", self.compile(&origin.body)),
            _ => ("passed", Response::new(200, &origin.content_type, origin.body)),
        };
        self.audit.record(event, None, resp.body.len() as u64, false);
        resp
    }

    fn project(&self, body: &[u8], profile: Target) -> Response {
        let doc = match markup::parse(body, &self.registry) {
            Ok(d) => d,
            Err(e) => return Response::text(415, format!("{}: {e}", e.position())),
        };
        match projector::project(&doc, profile) {
            Ok(p) => Response::new(200, p.content_type(), projector::serialize(&p)),
            Err(e) => Response::text(415, e),
        }
    }

    fn compile(&self, body: &[u8]) -> Response {
        let src = match ScriptSource::from_bytes(body) {
            Ok(s) => s,
            Err(e) => return Response::text(415, format!("script is not UTF-8: {e}")),
        };
        match self.cache.get_or_compile(&src) {
            Ok(bytes) => Response::new(200, WBC_CONTENT_TYPE, bytes),
            Err(CacheError::Compile(e)) => Response::text(415, e),
            Err(e) => Response::text(502, e),
        }
    }

    fn secure_passthrough(&self, url: &Url, req: &Request) -> Response {
        let resp = match fetch_origin(&self.cfg, &url.path, Some(req.body.clone())) {
            Ok(o) => Response::verbatim(o.raw, o.status),
            Err(e) => Response::text(502, e),
        };
        self.audit.record("forwarded", None, 0, true);
        resp
    }

    fn secure_legacy(&self, url: &Url, req: &Request) -> Response {
        // Both keys are checked in `new`.
        let (Some(client_key), Some(server_key)) = (&self.cfg.client_key, &self.cfg.server_key) else {
            return Response::text(502, GatewayError::MissingKeys);
        };
        let request_plain = match self.open(&self.client_guard, client_key, &req.body) {
            Ok(p) => p,
            Err(e) => return Response::text(400, e),
        };
        let session = envelope::hex(&client_key.session_id());
        self.audit
            .record("decrypted-request", Some(session.clone()), request_plain.len() as u64, true);

        let counter = self.to_origin_counter.fetch_add(1, Ordering::SeqCst);
        let upstream = envelope::seal(server_key, counter, &request_plain).to_bytes();
        let origin = match fetch_origin(&self.cfg, &url.path, Some(upstream)) {
            Ok(o) => o,
            Err(e) => return Response::text(502, e),
        };
        match origin.status {
            200 => {}
            s @ (400 | 404) => return Response::text(s, String::from_utf8_lossy(&origin.body).trim_end()),
            s => return Response::text(502, format!("origin answered {s}")),
        }
        let response_plain = match self.open(&self.server_guard, server_key, &origin.body) {
            Ok(p) => p,
            Err(e) => return Response::text(502, format!("origin envelope: {e}")),
        };
        self.audit
            .record("decrypted-response", Some(session), response_plain.len() as u64, true);
        let counter = self.to_client_counter.fetch_add(1, Ordering::SeqCst);
        let sealed = envelope::seal(client_key, counter, &response_plain).to_bytes();
        Response::new(200, envelope::CONTENT_TYPE, sealed)
    }

    fn open(&self, guard: &Mutex<ReplayGuard>, key: &SessionKey, bytes: &[u8]) -> Result<Vec<u8>, EnvelopeError> {
        let env = SecureEnvelope::from_bytes(bytes)?;
        self.decrypt_calls.fetch_add(1, Ordering::SeqCst);
        guard.lock().unwrap_or_else(|p| p.into_inner()).open(key, &env)
    }

    pub fn serve(self: Arc<Self>, listener: TcpListener) -> io::Result<()> {
        let timeout = self.cfg.read_timeout;
        serve_loop(listener, timeout, move |req| self.handle_request(req))
    }
}

fn transcode(req: &Request, body: &[u8]) -> Response {
    let threshold = match req.header(THRESHOLD_HEADER) {
        None => DEFAULT_THRESHOLD,
        Some(v) => match v.parse::<u8>() {
            Ok(t) => t,
            Err(_) => return Response::text(400, format!("bad {THRESHOLD_HEADER} `{v}`")),
        },
    };
    match bmp::bmp_to_bitmap(body, threshold) {
        Ok(bitmap) => Response::new(200, WBMP_CONTENT_TYPE, encode_wbmp(&bitmap)),
        Err(e) => Response::text(415, e),
    }
}

/// Accepts connections forever, one thread and one request per connection.
pub fn serve_loop<F>(listener: TcpListener, read_timeout: Duration, handler: F) -> io::Result<()>
where
    F: Fn(&Request) -> Response + Send + Sync + 'static,
{
    let handler = Arc::new(handler);
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(_) => {
                std::thread::sleep(Duration::from_millis(10));
                continue;
            }
        };
        let handler = Arc::clone(&handler);
        std::thread::spawn(move || handle_connection(stream, read_timeout, &*handler));
    }
    Ok(())
}

fn handle_connection(mut stream: TcpStream, read_timeout: Duration, handler: &dyn Fn(&Request) -> Response) {
    if stream.set_read_timeout(Some(read_timeout)).is_err() || stream.set_write_timeout(Some(read_timeout)).is_err() {
        return;
    }
    let resp = match Request::read_from(&mut stream) {
        Ok(req) => handler(&req),
        Err(HttpError::Closed) | Err(HttpError::Io(_)) => return,
        Err(e) => Response::text(400, e),
    };
    let _ = resp.write_to(&mut stream);
    let _ = stream.shutdown(Shutdown::Write);
}
