//! One JSON Lines file per session under `<data>/sessions/`: the session
//! header on the first line, then one event per line. Finished sessions
//! are also exported to `<data>/archives/<id>.json`.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use hsmod_core::corpus::Corpus;
use hsmod_core::experiment::{encode_log_line, parse_log, Event, ExperimentError, Session, SessionArchive, SessionInit};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Session { path: PathBuf, source: ExperimentError },
}

pub fn sessions_dir(data: &Path) -> PathBuf {
    data.join("sessions")
}

pub fn archives_dir(data: &Path) -> PathBuf {
    data.join("archives")
}

#[derive(Debug)]
pub struct SessionLog {
    path: PathBuf,
    file: File,
    fsync: bool,
    /// Events of the session already on disk.
    written: usize,
}

impl SessionLog {
    fn io(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
        move |source| StoreError::Io { path: path.to_path_buf(), source }
    }

    /// Creates the log for a new session; fails if it already exists.
    pub fn create(data: &Path, init: &SessionInit, fsync: bool) -> Result<Self, StoreError> {
        let dir = sessions_dir(data);
        std::fs::create_dir_all(&dir).map_err(Self::io(&dir))?;
        let path = dir.join(format!("{}.jsonl", init.session_id));
        let file = OpenOptions::new().create_new(true).append(true).open(&path).map_err(Self::io(&path))?;
        let mut log = Self { path, file, fsync, written: 0 };
        log.write(&encode_log_line(init))?;
        Ok(log)
    }

    /// Replays an existing log. A final line without its newline is an
    /// interrupted write and is cut off before appending resumes.
    pub fn open(path: &Path, corpus: &Corpus, fsync: bool) -> Result<(Session, Self), StoreError> {
        let text = std::fs::read_to_string(path).map_err(Self::io(path))?;
        let session_err = |source| StoreError::Session { path: path.to_path_buf(), source };
        let (init, events) = parse_log(&text).map_err(session_err)?;
        let session = Session::replay(init, &events, corpus).map_err(session_err)?;
        if !text.ends_with('\n') {
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            let f = OpenOptions::new().write(true).open(path).map_err(Self::io(path))?;
            f.set_len(keep as u64).map_err(Self::io(path))?;
        }
        let file = OpenOptions::new().append(true).open(path).map_err(Self::io(path))?;
        let written = session.events().len();
        Ok((session, Self { path: path.to_path_buf(), file, fsync, written }))
    }

    fn write(&mut self, line: &str) -> Result<(), StoreError> {
        let path = self.path.clone();
        self.file.write_all(line.as_bytes()).map_err(Self::io(&path))?;
        self.file.flush().map_err(Self::io(&path))?;
        if self.fsync {
            self.file.sync_data().map_err(Self::io(&path))?;
        }
        Ok(())
    }

    /// Appends every event of `session` not yet on disk.
    pub fn sync(&mut self, session: &Session) -> Result<(), StoreError> {
        let pending: String = session.events()[self.written..].iter().map(encode_log_line::<Event>).collect();
        if !pending.is_empty() {
            self.write(&pending)?;
        }
        self.written = session.events().len();
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Writes `archive` atomically (temp file then rename).
pub fn write_archive(data: &Path, archive: &SessionArchive) -> Result<PathBuf, StoreError> {
    let dir = archives_dir(data);
    std::fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
    let path = dir.join(format!("{}.json", archive.init.session_id));
    let tmp = dir.join(format!(".{}.json.tmp", archive.init.session_id));
    std::fs::write(&tmp, archive.to_json()).map_err(|source| StoreError::Io { path: tmp.clone(), source })?;
    std::fs::rename(&tmp, &path).map_err(|source| StoreError::Io { path: path.clone(), source })?;
    Ok(path)
}
