//! On-disk logs: `<session_id>.jsonl` per session plus `index.jsonl`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thea_core::clock::Millis;
use thea_core::game::GameKind;

use crate::error::ServiceError;
use crate::log::{EndReason, LogHeader, LogRecord, SessionLog};

pub const INDEX_FILE: &str = "index.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub session_id: String,
    pub game: GameKind,
    pub nicknames: Vec<String>,
    pub start_ms: Millis,
    pub ended: Option<EndReason>,
}

impl IndexEntry {
    pub fn for_header(h: &LogHeader) -> Self {
        Self {
            file: format!("{}.jsonl", h.session_id),
            session_id: h.session_id.clone(),
            game: h.config.game,
            nicknames: h.config.nicknames.clone(),
            start_ms: h.start_ms,
            ended: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogStore {
    dir: PathBuf,
}

impl LogStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.jsonl"))
    }

    /// Starts a session file with its header and indexes it.
    pub fn create(&self, header: &LogHeader) -> Result<(), ServiceError> {
        let mut f = fs::File::create(self.path_of(&header.session_id))?;
        writeln!(f, "{}", header.to_line())?;
        f.sync_data()?;
        self.upsert(IndexEntry::for_header(header))
    }

    pub fn append(&self, session_id: &str, records: &[LogRecord]) -> Result<(), ServiceError> {
        if records.is_empty() {
            return Ok(());
        }
        let mut f = OpenOptions::new()
            .append(true)
            .open(self.path_of(session_id))?;
        let mut buf = String::new();
        for r in records {
            buf.push_str(&r.to_line());
            buf.push('\n');
        }
        f.write_all(buf.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    pub fn index(&self) -> Result<Vec<IndexEntry>, ServiceError> {
        let path = self.dir.join(INDEX_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        fs::read_to_string(&path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l).map_err(|e| ServiceError::BadLog(format!("index: {e}")))
            })
            .collect()
    }

    /// Replaces the entry for the same file, or adds it.
    pub fn upsert(&self, entry: IndexEntry) -> Result<(), ServiceError> {
        let mut entries = self.index()?;
        match entries.iter_mut().find(|e| e.file == entry.file) {
            Some(e) => *e = entry,
            None => entries.push(entry),
        }
        let mut text = String::new();
        for e in &entries {
            text.push_str(&serde_json::to_string(e).expect("index entries serialize"));
            text.push('\n');
        }
        let tmp = self.dir.join(format!("{INDEX_FILE}.tmp"));
        fs::write(&tmp, text)?;
        fs::rename(tmp, self.dir.join(INDEX_FILE))?;
        Ok(())
    }

    /// Every indexed session log.
    pub fn load_indexed(&self) -> Result<Vec<SessionLog>, ServiceError> {
        self.index()?
            .iter()
            .map(|e| SessionLog::load(&self.dir.join(&e.file)))
            .collect()
    }
}

/// Every `*.jsonl` file in `dir` that parses as a session log.
pub fn scan_logs(dir: &Path) -> Result<Vec<SessionLog>, ServiceError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "jsonl")
                && p.file_name().is_some_and(|n| n != INDEX_FILE)
        })
        .collect();
    paths.sort();
    Ok(paths
        .iter()
        .filter_map(|p| SessionLog::load(p).ok())
        .collect())
}
