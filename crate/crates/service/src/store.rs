use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use convflow::engine::{transcript_jsonl, TranscriptEntry};

/// Per-session files under `<root>/<session_id>/`.
#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const REPORT_FILE: &str = "report.json";

impl SessionStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SessionStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, session_id: &str) -> PathBuf {
        self.root.join(session_id)
    }

    /// Append transcript lines that are not yet on disk.
    pub fn append_transcript(&self, session_id: &str, all: &[TranscriptEntry], written: &mut usize) -> io::Result<()> {
        if *written >= all.len() {
            return Ok(());
        }
        let dir = self.dir(session_id);
        fs::create_dir_all(&dir)?;
        let mut f = OpenOptions::new().create(true).append(true).open(dir.join(TRANSCRIPT_FILE))?;
        f.write_all(transcript_jsonl(&all[*written..]).as_bytes())?;
        *written = all.len();
        Ok(())
    }

    pub fn write_report(&self, session_id: &str, json: &str) -> io::Result<()> {
        let dir = self.dir(session_id);
        fs::create_dir_all(&dir)?;
        let tmp = dir.join("report.json.tmp");
        fs::write(&tmp, json)?;
        fs::rename(tmp, dir.join(REPORT_FILE))
    }
}
