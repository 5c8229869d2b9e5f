//! Append-only record of what the gateway saw in the clear.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub event: String,
    pub session_id: Option<String>,
    pub plaintext_bytes_observed: u64,
    pub secure: bool,
}

impl AuditRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.timestamp,
            self.event,
            self.session_id.as_deref().unwrap_or("-"),
            self.plaintext_bytes_observed
        )
    }
}

#[derive(Debug, Default)]
pub struct AuditLog {
    records: Mutex<Vec<AuditRecord>>,
    file: Option<Mutex<File>>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Also appends every record as a tab-separated line to `path`.
    pub fn with_file(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            records: Mutex::default(),
            file: Some(Mutex::new(file)),
        })
    }

    pub fn record(&self, event: &str, session_id: Option<String>, plaintext_bytes_observed: u64, secure: bool) {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        let rec = AuditRecord {
            timestamp,
            event: event.to_string(),
            session_id,
            plaintext_bytes_observed,
            secure,
        };
        let mut records = self.records.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(file) = &self.file {
            let mut f = file.lock().unwrap_or_else(|p| p.into_inner());
            // A failing audit file must not take the gateway down.
            let _ = writeln!(f, "{}", rec.to_line());
        }
        records.push(rec);
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        self.records.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Plaintext bytes seen while handling secure-scheme requests.
    pub fn secure_plaintext_total(&self) -> u64 {
        self.records
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .iter()
            .filter(|r| r.secure)
            .map(|r| r.plaintext_bytes_observed)
            .sum()
    }
}
