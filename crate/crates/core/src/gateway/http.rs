//! The HTTP/1.1 subset spoken by the gateway, the origin and the client:
//! one request per connection, `Content-Length` framing only.

use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};

use thiserror::Error;

pub const MAX_HEAD: usize = 16 * 1024;
pub const MAX_BODY: usize = 64 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("connection closed")]
    Closed,
    #[error("timed out")]
    Timeout,
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("message too large")]
    TooLarge,
    #[error("i/o error: {0}")]
    Io(io::Error),
}

impl From<io::Error> for HttpError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => HttpError::Timeout,
            io::ErrorKind::UnexpectedEof => HttpError::Closed,
            _ => HttpError::Io(e),
        }
    }
}

fn malformed(msg: impl Into<String>) -> HttpError {
    HttpError::Malformed(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Http,
    Https,
    Wap,
    Waps,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "http" => Some(Scheme::Http),
            "https" => Some(Scheme::Https),
            "wap" => Some(Scheme::Wap),
            "waps" => Some(Scheme::Waps),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Http => "http",
            Scheme::Https => "https",
            Scheme::Wap => "wap",
            Scheme::Waps => "waps",
        }
    }

    pub fn is_secure(self) -> bool {
        matches!(self, Scheme::Https | Scheme::Waps)
    }

    pub fn is_wap(self) -> bool {
        matches!(self, Scheme::Wap | Scheme::Waps)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Absolute URL restricted to the four framework schemes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Url {
    pub scheme: Scheme,
    pub authority: String,
    /// Always starts with `/`; includes any query string.
    pub path: String,
}

impl Url {
    pub fn parse(s: &str) -> Result<Self, String> {
        let (scheme, rest) = s
            .split_once("://")
            .ok_or_else(|| format!("`{s}` is not an absolute URL"))?;
        let scheme = Scheme::parse(scheme)
            .ok_or_else(|| format!("unsupported scheme `{scheme}` (expected http, https, wap or waps)"))?;
        let (authority, path) = match rest.find('/') {
            Some(i) => (&rest[..i], &rest[i..]),
            None => (rest, "/"),
        };
        if authority.is_empty() || authority.bytes().any(|b| b.is_ascii_whitespace()) {
            return Err(format!("`{s}` has no valid host"));
        }
        if path.bytes().any(|b| b.is_ascii_whitespace() || b.is_ascii_control()) {
            return Err(format!("`{s}` has an invalid path"));
        }
        Ok(Url {
            scheme,
            authority: authority.to_string(),
            path: path.to_string(),
        })
    }
}

impl fmt::Display for Url {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}://{}{}", self.scheme, self.authority, self.path)
    }
}

pub type Headers = Vec<(String, String)>;

pub fn header<'a>(headers: &'a Headers, name: &str) -> Option<&'a str> {
    headers
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, v)| v.as_str())
}

/// Media type without parameters, lowercased.
pub fn media_type(content_type: &str) -> String {
    content_type
        .split(';')
        .next()
        .unwrap_or_default()
        .trim()
        .to_ascii_lowercase()
}

/// A parsed message: start line, headers, body and the exact bytes read.
#[derive(Debug, Clone)]
pub struct RawMessage {
    pub start_line: String,
    pub headers: Headers,
    pub body: Vec<u8>,
    pub raw: Vec<u8>,
}

/// Reads one message. Without `Content-Length` the body is empty unless
/// `require_length` is set, in which case the message is rejected.
pub fn read_message(stream: &mut impl Read, require_length: bool) -> Result<RawMessage, HttpError> {
    let mut reader = BufReader::new(stream);
    let mut raw = Vec::new();
    let mut lines = Vec::new();
    loop {
        let mut line = Vec::new();
        let n = (&mut reader)
            .take((MAX_HEAD + 1 - raw.len().min(MAX_HEAD)) as u64)
            .read_until(b'\n', &mut line)?;
        if n == 0 {
            return Err(if raw.is_empty() {
                HttpError::Closed
            } else {
                malformed("connection closed inside the header block")
            });
        }
        raw.extend_from_slice(&line);
        if raw.len() > MAX_HEAD {
            return Err(HttpError::TooLarge);
        }
        let Some(text) = line.strip_suffix(b"\r\n") else {
            return Err(malformed("header line not terminated by CRLF"));
        };
        if text.is_empty() {
            break;
        }
        let text = std::str::from_utf8(text).map_err(|_| malformed("header is not UTF-8"))?;
        lines.push(text.to_string());
    }
    let mut lines = lines.into_iter();
    let start_line = lines.next().ok_or_else(|| malformed("empty header block"))?;
    let mut headers = Headers::new();
    for line in lines {
        let (name, value) = line
            .split_once(':')
            .ok_or_else(|| malformed(format!("bad header line `{line}`")))?;
        if name.is_empty() || name.bytes().any(|b| b.is_ascii_whitespace()) {
            return Err(malformed(format!("bad header name `{name}`")));
        }
        headers.push((name.to_string(), value.trim().to_string()));
    }
    if header(&headers, "transfer-encoding").is_some() {
        return Err(malformed("transfer codings are not supported"));
    }
    let length = match header(&headers, "content-length") {
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| malformed(format!("bad Content-Length `{v}`")))?,
        None if require_length => return Err(malformed("missing Content-Length")),
        None => 0,
    };
    if length > MAX_BODY {
        return Err(HttpError::TooLarge);
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => malformed("connection closed inside the body"),
        _ => e.into(),
    })?;
    raw.extend_from_slice(&body);
    Ok(RawMessage {
        start_line,
        headers,
        body,
        raw,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub method: String,
    pub target: String,
    pub headers: Headers,
    pub body: Vec<u8>,
}

impl Request {
    pub fn get(target: impl Into<String>) -> Self {
        Self {
            method: "GET".into(),
            target: target.into(),
            headers: Headers::new(),
            body: Vec::new(),
        }
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }

    pub fn with_body(mut self, content_type: &str, body: Vec<u8>) -> Self {
        self.headers.push(("Content-Type".into(), content_type.into()));
        self.body = body;
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        header(&self.headers, name)
    }

    pub fn read_from(stream: &mut impl Read) -> Result<Self, HttpError> {
        let msg = read_message(stream, false)?;
        let mut parts = msg.start_line.split(' ');
        let (Some(method), Some(target), Some(version), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(malformed(format!("bad request line `{}`", msg.start_line)));
        };
        if !matches!(version, "HTTP/1.1" | "HTTP/1.0") || method.is_empty() || target.is_empty() {
            return Err(malformed(format!("bad request line `{}`", msg.start_line)));
        }
        Ok(Request {
            method: method.to_string(),
            target: target.to_string(),
            headers: msg.headers,
            body: msg.body,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{} {} HTTP/1.1\r\n", self.method, self.target).into_bytes();
        for (n, v) in &self.headers {
            if !n.eq_ignore_ascii_case("content-length") {
                out.extend_from_slice(format!("{n}: {v}\r\n").as_bytes());
            }
        }
        if !self.body.is_empty() || self.method != "GET" {
            out.extend_from_slice(format!("Content-Length: {}\r\n", self.body.len()).as_bytes());
        }
        out.extend_from_slice(b"\r\n");
        out.extend_from_slice(&self.body);
        out
    }
}

pub fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        415 => "Unsupported Media Type",
        500 => "Internal Server Error",
        502 => "Bad Gateway",
        _ => "Status",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub headers: Headers,
    pub body: Vec<u8>,
    /// Exact bytes to send instead of re-serializing, for verbatim relays.
    raw: Option<Vec<u8>>,
}

impl Response {
    pub fn new(status: u16, content_type: &str, body: Vec<u8>) -> Self {
        Self {
            status,
            headers: vec![("Content-Type".into(), content_type.into())],
            body,
            raw: None,
        }
    }

    pub fn text(status: u16, message: impl fmt::Display) -> Self {
        Self::new(status, "text/plain; charset=utf-8", format!("{message}\n").into_bytes())
    }

    /// A response that will be written out exactly as received.
    pub fn verbatim(msg: RawMessage, status: u16) -> Self {
        Self {
            status,
            headers: msg.headers,
            body: msg.body,
            raw: Some(msg.raw),
        }
    }

    pub fn content_type(&self) -> Option<&str> {
        header(&self.headers, "content-type")
    }

    pub fn is_verbatim(&self) -> bool {
        self.raw.is_some()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        if let Some(raw) = &self.raw {
            return raw.clone();
        }
        let mut out = format!("HTTP/1.1 {} {}\r\n", self.status, reason(self.status)).into_bytes();
        for (n, v) in &self.headers {
            if !n.eq_ignore_ascii_case("content-length") && !n.eq_ignore_ascii_case("connection") {
                out.extend_from_slice(format!("{n}: {v}\r\n").as_bytes());
            }
        }
        out.extend_from_slice(format!("Content-Length: {}\r\nConnection: close\r\n\r\n", self.body.len()).as_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    pub fn write_to(&self, stream: &mut impl Write) -> io::Result<()> {
        stream.write_all(&self.to_bytes())?;
        stream.flush()
    }

    /// Reads a response; `Content-Length` is mandatory.
    pub fn read_from(stream: &mut impl Read) -> Result<(Self, RawMessage), HttpError> {
        let msg = read_message(stream, true)?;
        let mut parts = msg.start_line.splitn(3, ' ');
        let version = parts.next().unwrap_or_default();
        let status = parts.next().and_then(|s| s.parse::<u16>().ok());
        let status = match (version, status) {
            ("HTTP/1.1" | "HTTP/1.0", Some(s)) if (100..=599).contains(&s) => s,
            _ => return Err(malformed(format!("bad status line `{}`", msg.start_line))),
        };
        let resp = Response {
            status,
            headers: msg.headers.clone(),
            body: msg.body.clone(),
            raw: None,
        };
        Ok((resp, msg))
    }
}
