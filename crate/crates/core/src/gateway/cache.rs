//! Digest-keyed store of compiled `.wbc` files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::wmls::{cache_key, compile, encode_module, CompileError, ScriptSource};

#[derive(Debug, Error)]
pub enum CacheError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("cache i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug)]
pub struct BytecodeCache {
    dir: PathBuf,
    compiles: AtomicU64,
    // Serializes the miss path so one process compiles each key once.
    fill: Mutex<()>,
}

impl BytecodeCache {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            compiles: AtomicU64::new(0),
            fill: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, src: &ScriptSource) -> PathBuf {
        self.dir.join(format!("{}.wbc", cache_key(src)))
    }

    /// Compile invocations made through this cache.
    pub fn compile_count(&self) -> u64 {
        self.compiles.load(Ordering::SeqCst)
    }

    pub fn get_or_compile(&self, src: &ScriptSource) -> Result<Vec<u8>, CacheError> {
        let path = self.path_for(src);
        if let Some(bytes) = read_if_present(&path)? {
            return Ok(bytes);
        }
        let _guard = self.fill.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(bytes) = read_if_present(&path)? {
            return Ok(bytes);
        }
        self.compiles.fetch_add(1, Ordering::SeqCst);
        let bytes = encode_module(&compile(src)?);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(bytes)
    }
}

fn read_if_present(path: &Path) -> io::Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}
