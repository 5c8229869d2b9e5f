//! Fetching client: the browser end of the framework.

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use super::http::{Request, Url};
use super::{send, FetchError};
use crate::envelope::{self, EnvelopeError, SecureEnvelope, SessionKey};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{0}")]
    BadUrl(String),
    #[error("{0}:// needs a key")]
    MissingKey(String),
    #[error("{0}")]
    Network(#[from] FetchError),
    #[error("server answered {status}: {message}")]
    Status { status: u16, message: String },
    #[error("response envelope: {0}")]
    Envelope(#[from] EnvelopeError),
}

/// Fetches `url` through the gateway at `via`, or straight from the URL's
/// authority when `via` is `None`. Secure schemes send an empty sealed
/// request and return the opened response body.
pub fn fetch(url: &str, via: Option<&str>, key: Option<&SessionKey>, timeout: Duration) -> Result<Vec<u8>, ClientError> {
    let parsed = Url::parse(url).map_err(ClientError::BadUrl)?;
    let addr = via.unwrap_or(&parsed.authority);
    let mut req = Request::get(parsed.to_string()).with_header("Host", &parsed.authority);
    let key = if parsed.scheme.is_secure() {
        let key = key.ok_or_else(|| ClientError::MissingKey(parsed.scheme.to_string()))?;
        let counter = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(1);
        req = req.with_body(envelope::CONTENT_TYPE, envelope::seal(key, counter, b"").to_bytes());
        Some(key)
    } else {
        None
    };
    let resp = send(addr, &req, timeout)?;
    if !(200..300).contains(&resp.status) {
        return Err(ClientError::Status {
            status: resp.status,
            message: String::from_utf8_lossy(&resp.body).trim_end().to_string(),
        });
    }
    match key {
        Some(key) => Ok(envelope::open(key, &SecureEnvelope::from_bytes(&resp.body)?)?),
        None => Ok(resp.body),
    }
}
