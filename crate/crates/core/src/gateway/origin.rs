//! Static file origin used behind the gateway.

use std::fs;
use std::io;
use std::net::{TcpListener, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use super::http::{media_type, Request, Response, Url};
use super::serve_loop;
use crate::envelope::{self, ReplayGuard, SecureEnvelope, SessionKey};

pub fn content_type_for(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("whtml") => "application/x-whtml",
        Some("wmls") => "application/x-wmls",
        Some("bmp") => "image/bmp",
        Some("wbmp") => "image/vnd.wap.wbmp",
        Some("senv") => envelope::CONTENT_TYPE,
        _ => "application/octet-stream",
    }
}

/// Turns a request target into a path below `root`, refusing anything that
/// could climb out of it.
pub fn resolve(root: &Path, target: &str) -> Result<PathBuf, String> {
    let path = if target.starts_with('/') {
        target.to_string()
    } else {
        Url::parse(target)?.path
    };
    let path = path.split(['?', '#']).next().unwrap_or_default();
    let mut out = root.to_path_buf();
    for seg in path.split('/') {
        if seg == ".." || seg.contains(['\\', '\0', '%']) {
            return Err(format!("refusing path `{path}`"));
        }
        if !seg.is_empty() && seg != "." {
            out.push(seg);
        }
    }
    Ok(out)
}

/// Serves files from a directory. With a key it also acts as the far end of
/// a secure session: enveloped requests are opened and answered with the
/// file sealed under the same key.
#[derive(Debug)]
pub struct OriginServer {
    root: PathBuf,
    key: Option<SessionKey>,
    guard: Mutex<ReplayGuard>,
    counter: AtomicU64,
}

impl OriginServer {
    pub fn new(root: impl Into<PathBuf>, key: Option<SessionKey>) -> Self {
        Self {
            root: root.into(),
            key,
            guard: Mutex::default(),
            counter: AtomicU64::new(1),
        }
    }

    pub fn handle(&self, req: &Request) -> Response {
        if req.method != "GET" {
            return Response::text(400, format!("method {} not supported", req.method));
        }
        let path = match resolve(&self.root, &req.target) {
            Ok(p) => p,
            Err(e) => return Response::text(400, e),
        };
        let enveloped = req
            .header("content-type")
            .is_some_and(|ct| media_type(ct) == envelope::CONTENT_TYPE);
        if enveloped {
            if let Some(key) = &self.key {
                let env = match SecureEnvelope::from_bytes(&req.body) {
                    Ok(e) => e,
                    Err(e) => return Response::text(400, e),
                };
                let opened = self.guard.lock().unwrap_or_else(|p| p.into_inner()).open(key, &env);
                if let Err(e) = opened {
                    return Response::text(400, e);
                }
            }
        }
        let body = match fs::metadata(&path) {
            Ok(m) if m.is_file() => match fs::read(&path) {
                Ok(b) => b,
                Err(e) => return Response::text(404, e),
            },
            _ => return Response::text(404, format!("{} not found", req.target)),
        };
        match (&self.key, enveloped) {
            (Some(key), true) => {
                let counter = self.counter.fetch_add(1, Ordering::SeqCst);
                let sealed = envelope::seal(key, counter, &body).to_bytes();
                Response::new(200, envelope::CONTENT_TYPE, sealed)
            }
            _ => Response::new(200, content_type_for(&path), body),
        }
    }

    pub fn serve(self: Arc<Self>, listener: TcpListener, read_timeout: std::time::Duration) -> io::Result<()> {
        serve_loop(listener, read_timeout, move |req| self.handle(req))
    }
}

/// Runs a plain static file server until the process exits.
pub fn serve_origin(root_dir: &Path, address: impl ToSocketAddrs) -> io::Result<()> {
    let listener = TcpListener::bind(address)?;
    Arc::new(OriginServer::new(root_dir, None)).serve(listener, super::DEFAULT_READ_TIMEOUT)
}
