//! Plain-directory project storage.
//!
//! ```text
//! project-root/
//!   manifest.json
//!   documents/<id>.json   inventories/<id>.json   dialogs/<id>.json
//!   sessions/<id>.jsonl   profiles/<session-id>.json
//! ```
//!
//! Artifacts are written with write-temp-then-rename. Session logs are JSON
//! lines appended by one writer per session; on open, a torn final line and
//! any trailing half-written operation are cut off and reported.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialog::{complete_prefix_len, validate_tree, Dialog, DialogError, DialogTree, SessionEvent, SessionState};
use crate::document::TextDocument;
use crate::inventory::{validate_inventory, ConjunctInventory};
use crate::profile::ConnectivityProfile;

const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Document,
    Inventory,
    DialogTree,
    Session,
    Profile,
}

impl ArtifactKind {
    fn dir(self) -> &'static str {
        match self {
            ArtifactKind::Document => "documents",
            ArtifactKind::Inventory => "inventories",
            ArtifactKind::DialogTree => "dialogs",
            ArtifactKind::Session => "sessions",
            ArtifactKind::Profile => "profiles",
        }
    }

    fn extension(self) -> &'static str {
        match self {
            ArtifactKind::Session => "jsonl",
            _ => "json",
        }
    }

    fn relative_path(self, id: &str) -> PathBuf {
        Path::new(self.dir()).join(format!("{id}.{}", self.extension()))
    }
}

impl std::fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArtifactKind::Document => "document",
            ArtifactKind::Inventory => "inventory",
            ArtifactKind::DialogTree => "dialog_tree",
            ArtifactKind::Session => "session",
            ArtifactKind::Profile => "profile",
        })
    }
}

/// Content accepted by [`Project::put_artifact`].
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Document(TextDocument),
    Inventory(ConjunctInventory),
    DialogTree(DialogTree),
}

impl Artifact {
    pub fn kind(&self) -> ArtifactKind {
        match self {
            Artifact::Document(_) => ArtifactKind::Document,
            Artifact::Inventory(_) => ArtifactKind::Inventory,
            Artifact::DialogTree(_) => ArtifactKind::DialogTree,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Artifact::Document(d) => &d.id,
            Artifact::Inventory(i) => &i.id,
            Artifact::DialogTree(t) => &t.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub kind: ArtifactKind,
    pub id: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

impl Manifest {
    fn find(&self, kind: ArtifactKind, id: &str) -> Option<&ManifestEntry> {
        self.artifacts.iter().find(|e| e.kind == kind && e.id == id)
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io-error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("io-error: {} is not valid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("not-a-project: {} has no {MANIFEST}", .0.display())]
    NotAProject(PathBuf),
    #[error("invalid-manifest: {0}")]
    InvalidManifest(String),
    #[error("invalid-id: '{0}' may only use letters, digits, '-', '_' and '.'")]
    InvalidId(String),
    #[error("validation-failed: {}", .0.join("; "))]
    ValidationFailed(Vec<String>),
    #[error("duplicate-id: {kind} '{id}' already exists")]
    DuplicateId { kind: ArtifactKind, id: String },
    #[error("not-found: {kind} '{id}'")]
    NotFound { kind: ArtifactKind, id: String },
    #[error("seq-conflict: expected seq {expected}, got {got}")]
    SeqConflict { expected: u64, got: u64 },
    #[error("corrupt-log in session '{session}': {reason}")]
    CorruptLog { session: String, reason: String },
    #[error(transparent)]
    Dialog(#[from] DialogError),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } | StoreError::Json { .. } => "io-error",
            StoreError::NotAProject(_) => "not-a-project",
            StoreError::InvalidManifest(_) => "invalid-manifest",
            StoreError::InvalidId(_) => "invalid-id",
            StoreError::ValidationFailed(_) => "validation-failed",
            StoreError::DuplicateId { .. } => "duplicate-id",
            StoreError::NotFound { .. } => "not-found",
            StoreError::SeqConflict { .. } => "seq-conflict",
            StoreError::CorruptLog { .. } => "corrupt-log",
            StoreError::Dialog(e) => e.code(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

/// What was cut off the end of a session log when it was opened.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailRecovery {
    pub dropped_bytes: u64,
    /// A final line without its newline, or one that did not parse.
    pub partial_line: bool,
    /// Complete events belonging to an operation that never finished.
    pub dropped_events: usize,
}

struct LogWriter {
    path: PathBuf,
    file: File,
    events: Vec<SessionEvent>,
    recovery: Option<TailRecovery>,
}

impl LogWriter {
    fn open(session_id: &str, path: PathBuf, durable: bool) -> Result<Self, StoreError> {
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(&path)(e)),
        };

        let mut events = Vec::new();
        let mut ends = Vec::new();
        let mut offset = 0usize;
        let mut partial_line = false;
        while offset < bytes.len() {
            let Some(nl) = bytes[offset..].iter().position(|&b| b == b'\n') else {
                partial_line = true;
                break;
            };
            let line = &bytes[offset..offset + nl];
            let next = offset + nl + 1;
            match serde_json::from_slice::<SessionEvent>(line) {
                Ok(e) => {
                    events.push(e);
                    ends.push(next);
                }
                Err(err) if next == bytes.len() => {
                    // A torn write can leave a newline-terminated fragment.
                    let _ = err;
                    partial_line = true;
                    break;
                }
                Err(err) => {
                    return Err(StoreError::CorruptLog {
                        session: session_id.to_owned(),
                        reason: format!("unreadable event after byte {offset}: {err}"),
                    })
                }
            }
            offset = next;
        }

        let keep = complete_prefix_len(&events);
        let dropped_events = events.len() - keep;
        events.truncate(keep);
        let keep_bytes = if keep == 0 { 0 } else { ends[keep - 1] };

        let recovery = (keep_bytes < bytes.len()).then(|| TailRecovery {
            dropped_bytes: (bytes.len() - keep_bytes) as u64,
            partial_line,
            dropped_events,
        });
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        if recovery.is_some() {
            file.set_len(keep_bytes as u64).map_err(io_err(&path))?;
            if durable {
                file.sync_data().map_err(io_err(&path))?;
            }
        }
        Ok(LogWriter {
            path,
            file,
            events,
            recovery,
        })
    }

    fn last_seq(&self) -> u64 {
        self.events.last().map_or(0, |e| e.seq)
    }

    fn append(&mut self, batch: &[SessionEvent], durable: bool) -> Result<(), StoreError> {
        let mut buf = String::new();
        for (expected, e) in (self.last_seq() + 1..).zip(batch) {
            if e.seq != expected {
                return Err(StoreError::SeqConflict {
                    expected,
                    got: e.seq,
                });
            }
            buf.push_str(&e.to_line());
            buf.push('\n');
        }
        self.file
            .write_all(buf.as_bytes())
            .map_err(io_err(&self.path))?;
        if durable {
            self.file.sync_data().map_err(io_err(&self.path))?;
        }
        self.events.extend_from_slice(batch);
        Ok(())
    }
}

/// A project directory. Safe to share between threads.
pub struct Project {
    root: PathBuf,
    durable: bool,
    manifest: Mutex<Manifest>,
    writers: Mutex<HashMap<String, Arc<Mutex<LogWriter>>>>,
}

impl std::fmt::Debug for Project {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Project").field("root", &self.root).finish()
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn check_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_owned()))
    }
}

impl Project {
    /// Opens an existing project, creating an empty one if `root` has no manifest.
    pub fn open_or_create(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref();
        if !root.join(MANIFEST).exists() {
            fs::create_dir_all(root).map_err(io_err(root))?;
            let manifest = Manifest::default();
            write_atomic(&root.join(MANIFEST), &to_pretty(&manifest), true)?;
        }
        Self::open(root)
    }

    /// Opens an existing project; every manifest entry must resolve to a file.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_owned();
        let manifest_path = root.join(MANIFEST);
        if !manifest_path.is_file() {
            return Err(StoreError::NotAProject(root));
        }
        let manifest: Manifest = read_json(&manifest_path)?;
        for e in &manifest.artifacts {
            if !root.join(&e.path).is_file() {
                return Err(StoreError::InvalidManifest(format!(
                    "{} '{}' points to missing file {}",
                    e.kind,
                    e.id,
                    e.path.display()
                )));
            }
        }
        for kind in [
            ArtifactKind::Document,
            ArtifactKind::Inventory,
            ArtifactKind::DialogTree,
            ArtifactKind::Session,
            ArtifactKind::Profile,
        ] {
            let dir = root.join(kind.dir());
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(Project {
            root,
            durable: true,
            manifest: Mutex::new(manifest),
            writers: Mutex::new(HashMap::new()),
        })
    }

    /// Skip fsync calls. Contents are identical; only crash durability changes.
    pub fn without_fsync(mut self) -> Self {
        self.durable = false;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> Manifest {
        lock(&self.manifest).clone()
    }

    pub fn ids(&self, kind: ArtifactKind) -> Vec<String> {
        let mut ids: Vec<String> = lock(&self.manifest)
            .artifacts
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.id.clone())
            .collect();
        ids.sort();
        ids
    }

    pub fn contains(&self, kind: ArtifactKind, id: &str) -> bool {
        lock(&self.manifest).find(kind, id).is_some()
    }

    pub fn path_of(&self, kind: ArtifactKind, id: &str) -> PathBuf {
        self.root.join(kind.relative_path(id))
    }

    /// Validates and stores a document, inventory or dialog tree.
    pub fn put_artifact(&self, artifact: &Artifact) -> Result<String, StoreError> {
        let kind = artifact.kind();
        let id = artifact.id();
        check_id(id)?;
        let violations: Vec<String> = match artifact {
            Artifact::Document(d) => d.validate().iter().map(ToString::to_string).collect(),
            Artifact::Inventory(i) => validate_inventory(i).iter().map(ToString::to_string).collect(),
            Artifact::DialogTree(t) => match self.inventory(&t.inventory_id) {
                Ok(inv) => validate_tree(t, &inv).iter().map(ToString::to_string).collect(),
                Err(StoreError::NotFound { .. }) => {
                    vec![format!("unknown inventory '{}'", t.inventory_id)]
                }
                Err(e) => return Err(e),
            },
        };
        if !violations.is_empty() {
            return Err(StoreError::ValidationFailed(violations));
        }
        let bytes = match artifact {
            Artifact::Document(d) => to_pretty(d),
            Artifact::Inventory(i) => to_pretty(i),
            Artifact::DialogTree(t) => to_pretty(t),
        };

        let mut manifest = lock(&self.manifest);
        if manifest.find(kind, id).is_some() {
            return Err(StoreError::DuplicateId {
                kind,
                id: id.to_owned(),
            });
        }
        let rel = kind.relative_path(id);
        write_atomic(&self.root.join(&rel), &bytes, self.durable)?;
        manifest.artifacts.push(ManifestEntry {
            kind,
            id: id.to_owned(),
            path: rel,
        });
        self.save_manifest(&manifest)?;
        Ok(id.to_owned())
    }

    pub fn document(&self, id: &str) -> Result<TextDocument, StoreError> {
        self.load(ArtifactKind::Document, id)
    }

    pub fn inventory(&self, id: &str) -> Result<ConjunctInventory, StoreError> {
        self.load(ArtifactKind::Inventory, id)
    }

    pub fn dialog_tree(&self, id: &str) -> Result<DialogTree, StoreError> {
        self.load(ArtifactKind::DialogTree, id)
    }

    fn load<T: DeserializeOwned>(&self, kind: ArtifactKind, id: &str) -> Result<T, StoreError> {
        let path = {
            let manifest = lock(&self.manifest);
            let entry = manifest.find(kind, id).ok_or_else(|| StoreError::NotFound {
                kind,
                id: id.to_owned(),
            })?;
            self.root.join(&entry.path)
        };
        read_json(&path)
    }

    fn writer(&self, session_id: &str, create: bool) -> Result<Arc<Mutex<LogWriter>>, StoreError> {
        check_id(session_id)?;
        let mut writers = lock(&self.writers);
        if let Some(w) = writers.get(session_id) {
            return Ok(Arc::clone(w));
        }
        if !create && !self.contains(ArtifactKind::Session, session_id) {
            return Err(StoreError::NotFound {
                kind: ArtifactKind::Session,
                id: session_id.to_owned(),
            });
        }
        let path = self.path_of(ArtifactKind::Session, session_id);
        let w = Arc::new(Mutex::new(LogWriter::open(session_id, path, self.durable)?));
        writers.insert(session_id.to_owned(), Arc::clone(&w));
        Ok(w)
    }

    /// Appends one event; `event.seq` must directly follow the stored log.
    pub fn append_event(&self, session_id: &str, event: &SessionEvent) -> Result<(), StoreError> {
        self.append_events(session_id, std::slice::from_ref(event))
    }

    /// Appends the events of one operation in a single write.
    pub fn append_events(&self, session_id: &str, events: &[SessionEvent]) -> Result<(), StoreError> {
        if events.is_empty() {
            return Ok(());
        }
        let fresh = events[0].seq == 1;
        let w = self.writer(session_id, fresh)?;
        let mut w = lock(&w);
        w.append(events, self.durable)?;
        drop(w);
        if fresh {
            let mut manifest = lock(&self.manifest);
            if manifest.find(ArtifactKind::Session, session_id).is_none() {
                manifest.artifacts.push(ManifestEntry {
                    kind: ArtifactKind::Session,
                    id: session_id.to_owned(),
                    path: ArtifactKind::Session.relative_path(session_id),
                });
                self.save_manifest(&manifest)?;
            }
        }
        Ok(())
    }

    /// Stored events of a session, after crash recovery.
    pub fn read_log(&self, session_id: &str) -> Result<Vec<SessionEvent>, StoreError> {
        let w = self.writer(session_id, false)?;
        let events = lock(&w).events.clone();
        Ok(events)
    }

    /// What recovery removed when this session's log was opened, if anything.
    pub fn recovery(&self, session_id: &str) -> Result<Option<TailRecovery>, StoreError> {
        let w = self.writer(session_id, false)?;
        let recovery = lock(&w).recovery.clone();
        Ok(recovery)
    }

    /// Rebuilds the live state of a stored session by replay.
    pub fn load_session(
        &self,
        session_id: &str,
        document: &TextDocument,
        tree: &DialogTree,
        inventory: &ConjunctInventory,
    ) -> Result<SessionState, StoreError> {
        let log = self.read_log(session_id)?;
        let dialog = Dialog::new(document, tree, inventory)?;
        Ok(dialog.replay(&log)?)
    }

    pub fn save_profile(&self, session_id: &str, profile: &ConnectivityProfile) -> Result<(), StoreError> {
        check_id(session_id)?;
        let rel = ArtifactKind::Profile.relative_path(session_id);
        write_atomic(&self.root.join(&rel), &to_pretty(profile), self.durable)?;
        let mut manifest = lock(&self.manifest);
        if manifest.find(ArtifactKind::Profile, session_id).is_none() {
            manifest.artifacts.push(ManifestEntry {
                kind: ArtifactKind::Profile,
                id: session_id.to_owned(),
                path: rel,
            });
            self.save_manifest(&manifest)?;
        }
        Ok(())
    }

    /// Drops the stored profile of a session that was reopened.
    pub fn remove_profile(&self, session_id: &str) -> Result<(), StoreError> {
        let mut manifest = lock(&self.manifest);
        let before = manifest.artifacts.len();
        manifest
            .artifacts
            .retain(|e| !(e.kind == ArtifactKind::Profile && e.id == session_id));
        if manifest.artifacts.len() == before {
            return Ok(());
        }
        self.save_manifest(&manifest)?;
        let path = self.path_of(ArtifactKind::Profile, session_id);
        match fs::remove_file(&path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(io_err(&path)(e)),
            _ => Ok(()),
        }
    }

    pub fn profile(&self, session_id: &str) -> Result<ConnectivityProfile, StoreError> {
        self.load(ArtifactKind::Profile, session_id)
    }

    /// Stored profiles of one document, keyed by session id in id order.
    pub fn profiles_for(&self, document_id: &str) -> Result<Vec<(String, ConnectivityProfile)>, StoreError> {
        let mut out = Vec::new();
        for id in self.ids(ArtifactKind::Profile) {
            let p = self.profile(&id)?;
            if p.document_id == document_id {
                out.push((id, p));
            }
        }
        Ok(out)
    }

    fn save_manifest(&self, manifest: &Manifest) -> Result<(), StoreError> {
        write_atomic(&self.root.join(MANIFEST), &to_pretty(manifest), self.durable)
    }
}

fn to_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    bytes
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::Json {
        path: path.to_owned(),
        source,
    })
}

fn write_atomic(path: &Path, bytes: &[u8], durable: bool) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    if durable {
        tmp.as_file().sync_all().map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}
