//! Crash-safe persistence for every collection and uploaded file.
//!
//! Layout of a data directory:
//!
//! ```text
//! users.json  dissertations.json  favorites.json  sessions.json  index.json
//! blobs/<sha256hex>
//! drs.lock        held while a process has the directory open
//! commit.json     present only while a commit is being applied
//! ```
//!
//! A commit rewrites each touched collection to `<file>.tmp` (fsynced), then
//! atomically publishes `commit.json` naming those files. That rename is the
//! commit point. The temp files are then renamed over their targets and the
//! intent file is removed. On open, a leftover `commit.json` is rolled
//! forward and any other temp file is discarded, so a crash at any step
//! leaves either all of a commit's effects or none of them.
//!
//! Writers are serialized through one mutex; readers take an `Arc` of the
//! current immutable [`State`] and never block writers.

mod blob;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File, OpenOptions, TryLockError};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

pub use blob::ContentHash;
pub use snapshot::SCHEMA_VERSION;

use blob::{write_synced, BlobDir};

use crate::auth::{SessionRecord, TokenDigest, UserRecord};
use crate::catalog::DissertationRecord;
use crate::error::{Error, Result};
use crate::favorites::FavoriteSet;
use crate::search::InvertedIndex;
use crate::types::{DissertationId, UserId};

pub const DEFAULT_MAX_BLOB_BYTES: u64 = 64 * 1024 * 1024;

const LOCK_FILE: &str = "drs.lock";
const INTENT_FILE: &str = "commit.json";
const BLOB_DIR: &str = "blobs";

/// A persisted collection and its snapshot file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Collection {
    Users,
    Dissertations,
    Favorites,
    Sessions,
    Index,
}

impl Collection {
    pub const ALL: [Collection; 5] = [
        Collection::Users,
        Collection::Dissertations,
        Collection::Favorites,
        Collection::Sessions,
        Collection::Index,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Collection::Users => "users.json",
            Collection::Dissertations => "dissertations.json",
            Collection::Favorites => "favorites.json",
            Collection::Sessions => "sessions.json",
            Collection::Index => "index.json",
        }
    }

    fn key(self) -> &'static str {
        match self {
            Collection::Users => "users",
            Collection::Dissertations => "dissertations",
            Collection::Favorites => "favorites",
            Collection::Sessions => "sessions",
            Collection::Index => "index",
        }
    }
}

/// Everything the service knows, as one immutable value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct State {
    pub users: BTreeMap<UserId, UserRecord>,
    pub dissertations: BTreeMap<DissertationId, DissertationRecord>,
    pub favorites: BTreeMap<UserId, FavoriteSet>,
    pub sessions: BTreeMap<TokenDigest, SessionRecord>,
    /// Derived from `dissertations`; maintained inside the same commits.
    pub index: InvertedIndex,
}

impl State {
    fn apply(&mut self, op: Op, touched: &mut BTreeSet<Collection>) -> Result<()> {
        match op {
            Op::PutUser(u) => {
                touched.insert(Collection::Users);
                self.users.insert(u.user_id.clone(), u);
            }
            Op::DeleteUser(id) => {
                touched.insert(Collection::Users);
                self.users.remove(&id);
            }
            Op::PutDissertation(d) => {
                touched.extend([Collection::Dissertations, Collection::Index]);
                if self.index.contains(&d.dissertation_id) {
                    self.index.remove_document(&d.dissertation_id)?;
                }
                self.index.index_document(&d.dissertation_id, &d.document_text())?;
                self.dissertations.insert(d.dissertation_id.clone(), d);
            }
            Op::DeleteDissertation(id) => {
                touched.extend([Collection::Dissertations, Collection::Index]);
                if self.index.contains(&id) {
                    self.index.remove_document(&id)?;
                }
                self.dissertations.remove(&id);
            }
            Op::PutFavorites(f) => {
                touched.insert(Collection::Favorites);
                self.favorites.insert(f.user_id.clone(), f);
            }
            Op::DeleteFavorites(id) => {
                touched.insert(Collection::Favorites);
                self.favorites.remove(&id);
            }
            Op::PutSession(s) => {
                touched.insert(Collection::Sessions);
                self.sessions.insert(s.token_digest.clone(), s);
            }
            Op::DeleteSession(d) => {
                touched.insert(Collection::Sessions);
                self.sessions.remove(&d);
            }
        }
        Ok(())
    }

    fn encode(&self, c: Collection) -> Result<Vec<u8>> {
        match c {
            Collection::Users => snapshot::encode(c.key(), &self.users.values().collect::<Vec<_>>()),
            Collection::Dissertations => {
                snapshot::encode(c.key(), &self.dissertations.values().collect::<Vec<_>>())
            }
            Collection::Favorites => {
                snapshot::encode(c.key(), &self.favorites.values().collect::<Vec<_>>())
            }
            Collection::Sessions => {
                snapshot::encode(c.key(), &self.sessions.values().collect::<Vec<_>>())
            }
            Collection::Index => snapshot::encode(c.key(), &self.index),
        }
    }

    /// Rebuild the search index from the catalog.
    pub fn rebuild_index(&self) -> Result<InvertedIndex> {
        InvertedIndex::rebuild(
            self.dissertations
                .iter()
                .map(|(id, d)| (id, d.document_text())),
        )
    }

    /// Cross-collection reference problems, one line each. Empty when sound.
    pub fn reference_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (owner, set) in &self.favorites {
            if !self.users.contains_key(owner) {
                problems.push(format!("favorites of missing user {owner}"));
            }
            let mut seen = BTreeSet::new();
            for id in &set.items {
                if !self.dissertations.contains_key(id) {
                    problems.push(format!("favorites of {owner} reference missing dissertation {id}"));
                }
                if !seen.insert(id) {
                    problems.push(format!("favorites of {owner} list {id} twice"));
                }
            }
        }
        for s in self.sessions.values() {
            if !self.users.contains_key(&s.user_id) {
                problems.push(format!("session of missing user {}", s.user_id));
            }
        }
        let indexed: BTreeSet<_> = self.index.documents().collect();
        let stored: BTreeSet<_> = self.dissertations.keys().collect();
        for id in indexed.difference(&stored) {
            problems.push(format!("index references missing dissertation {id}"));
        }
        for id in stored.difference(&indexed) {
            problems.push(format!("dissertation {id} is not indexed"));
        }
        for term in self.index.terms() {
            for p in self.index.postings(term) {
                if !self.dissertations.contains_key(&p.dissertation_id) {
                    problems.push(format!(
                        "posting {term:?} references missing dissertation {}",
                        p.dissertation_id
                    ));
                }
            }
        }
        let mut matrices = BTreeSet::new();
        let mut usernames = BTreeSet::new();
        for u in self.users.values() {
            if !matrices.insert(&u.matrix_number) {
                problems.push(format!("matrix number {} used twice", u.matrix_number));
            }
            if let Some(name) = &u.username {
                if !usernames.insert(name) {
                    problems.push(format!("username {name} used twice"));
                }
            }
        }
        problems
    }
}

/// One record-level change.
#[derive(Debug, Clone)]
pub enum Op {
    PutUser(UserRecord),
    DeleteUser(UserId),
    PutDissertation(DissertationRecord),
    DeleteDissertation(DissertationId),
    PutFavorites(FavoriteSet),
    DeleteFavorites(UserId),
    PutSession(SessionRecord),
    DeleteSession(TokenDigest),
}

/// Changes applied together by one commit: all of them or none.
#[derive(Debug, Clone, Default)]
pub struct Mutation {
    ops: Vec<Op>,
    blobs: Vec<Vec<u8>>,
}

impl Mutation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty() && self.blobs.is_empty()
    }

    pub fn push(&mut self, op: Op) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn with(mut self, op: Op) -> Self {
        self.ops.push(op);
        self
    }

    /// Stage a blob; it is written before any record of this mutation.
    pub fn add_blob(&mut self, bytes: Vec<u8>) -> ContentHash {
        let hash = ContentHash::of(&bytes);
        self.blobs.push(bytes);
        hash
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }
}

/// Steps of a commit at which a simulated crash can be injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// After the n-th (1-based) temp snapshot file is durable.
    AfterTempWrite(usize),
    /// After the commit intent is published.
    AfterIntent,
    /// After the n-th (1-based) temp file is renamed into place.
    AfterRename(usize),
}

impl CrashPoint {
    /// Whether a crash here happens after the commit point.
    pub fn is_after_commit_point(self) -> bool {
        !matches!(self, CrashPoint::AfterTempWrite(_))
    }
}

impl fmt::Display for CrashPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrashPoint::AfterTempWrite(n) => write!(f, "after temp write {n}"),
            CrashPoint::AfterIntent => f.write_str("after intent"),
            CrashPoint::AfterRename(n) => write!(f, "after rename {n}"),
        }
    }
}

#[derive(Debug, Default)]
struct Writer {
    poisoned: bool,
    crash_at: Option<CrashPoint>,
}

impl Writer {
    fn checkpoint(&mut self, here: CrashPoint) -> Result<()> {
        if self.crash_at == Some(here) {
            self.crash_at = None;
            self.poisoned = true;
            return Err(Error::InjectedCrash(here.to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    pub max_blob_bytes: u64,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            max_blob_bytes: DEFAULT_MAX_BLOB_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Intent {
    files: Vec<String>,
}

/// Summary of [`Store::open`] recovery work, for logging.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Recovery {
    pub rolled_forward: bool,
    pub index_rebuilt: bool,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    blobs: BlobDir,
    state: RwLock<Arc<State>>,
    writer: Mutex<Writer>,
    recovery: Recovery,
    _lock: File,
}

impl Store {
    pub fn open(root: impl AsRef<Path>) -> Result<Store> {
        Store::open_with(root, StoreOptions::default())
    }

    pub fn open_with(root: impl AsRef<Path>, options: StoreOptions) -> Result<Store> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let lock = acquire_lock(&root)?;
        let blobs = BlobDir::open(root.join(BLOB_DIR), options.max_blob_bytes)?;

        let mut recovery = Recovery {
            rolled_forward: roll_forward(&root)?,
            ..Recovery::default()
        };
        remove_temp_files(&root)?;
        blobs.clean_temp()?;

        let mut state = State {
            users: load_records(&root, Collection::Users, |u: &UserRecord| u.user_id.clone())?,
            dissertations: load_records(&root, Collection::Dissertations, |d: &DissertationRecord| {
                d.dissertation_id.clone()
            })?,
            favorites: load_records(&root, Collection::Favorites, |f: &FavoriteSet| {
                f.user_id.clone()
            })?,
            sessions: load_records(&root, Collection::Sessions, |s: &SessionRecord| {
                s.token_digest.clone()
            })?,
            index: InvertedIndex::new(),
        };
        let stored_index: Option<InvertedIndex> = load(&root, Collection::Index)?;
        let ids_match = |idx: &InvertedIndex| idx.documents().eq(state.dissertations.keys());
        state.index = match stored_index {
            Some(idx) if ids_match(&idx) => idx,
            Some(_) => {
                tracing::warn!("index.json does not cover the catalog; rebuilding in memory");
                recovery.index_rebuilt = true;
                state.rebuild_index()?
            }
            None => {
                recovery.index_rebuilt = !state.dissertations.is_empty();
                state.rebuild_index()?
            }
        };

        for d in state.dissertations.values() {
            if blobs.size_of(&d.file_ref.content_hash) != Some(d.file_ref.size_bytes) {
                tracing::warn!(
                    id = %d.dissertation_id,
                    hash = %d.file_ref.content_hash,
                    "file of dissertation is missing or has the wrong size"
                );
            }
        }

        Ok(Store {
            root,
            blobs,
            state: RwLock::new(Arc::new(state)),
            writer: Mutex::new(Writer::default()),
            recovery,
            _lock: lock,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn recovery(&self) -> &Recovery {
        &self.recovery
    }

    pub fn max_blob_bytes(&self) -> u64 {
        self.blobs.max_bytes()
    }

    /// Consistent view of the current state.
    pub fn snapshot(&self) -> Arc<State> {
        self.state.read().clone()
    }

    pub fn commit(&self, mutation: Mutation) -> Result<()> {
        self.write(|_| Ok((mutation, ())))
    }

    /// Read-check-write under the writer lock.
    ///
    /// `build` sees the latest committed state and returns the mutation to
    /// apply plus a value handed back to the caller. No other commit can
    /// interleave between the read and the write.
    pub fn write<T>(&self, build: impl FnOnce(&State) -> Result<(Mutation, T)>) -> Result<T> {
        let mut writer = self.writer.lock();
        if writer.poisoned {
            return Err(Error::Poisoned);
        }
        let current = self.snapshot();
        let (mutation, out) = build(&current)?;
        if mutation.is_empty() {
            return Ok(out);
        }
        for bytes in &mutation.blobs {
            self.blobs.put(bytes)?;
        }
        let mut next = (*current).clone();
        let mut touched = BTreeSet::new();
        for op in mutation.ops {
            next.apply(op, &mut touched)?;
        }
        self.persist(&mut writer, next, &touched)?;
        Ok(out)
    }

    fn persist(&self, writer: &mut Writer, next: State, touched: &BTreeSet<Collection>) -> Result<()> {
        if touched.is_empty() {
            return Ok(());
        }
        let staged: Vec<(Collection, PathBuf)> = touched
            .iter()
            .map(|&c| (c, self.root.join(format!("{}.tmp", c.file_name()))))
            .collect();

        let write_temps = |writer: &mut Writer| -> Result<()> {
            for (n, (c, tmp)) in staged.iter().enumerate() {
                write_synced(tmp, &next.encode(*c)?)?;
                writer.checkpoint(CrashPoint::AfterTempWrite(n + 1))?;
            }
            let intent = Intent {
                files: staged.iter().map(|(c, _)| c.file_name().to_owned()).collect(),
            };
            let intent_tmp = self.root.join(format!("{INTENT_FILE}.tmp"));
            write_synced(&intent_tmp, &snapshot::encode("intent", &intent)?)?;
            let intent_path = self.root.join(INTENT_FILE);
            fs::rename(&intent_tmp, &intent_path).map_err(|e| Error::io(&intent_path, e))?;
            fsync_dir(&self.root)
        };
        if let Err(e) = write_temps(writer) {
            if !matches!(e, Error::InjectedCrash(_)) {
                // Nothing is published yet: drop the temp files and keep going.
                for (_, tmp) in &staged {
                    let _ = fs::remove_file(tmp);
                }
                let _ = fs::remove_file(self.root.join(format!("{INTENT_FILE}.tmp")));
            }
            return Err(e);
        }

        // Past the commit point: any failure from here on leaves the disk
        // ahead of memory, so the handle refuses further writes.
        let publish = |writer: &mut Writer| -> Result<()> {
            writer.checkpoint(CrashPoint::AfterIntent)?;
            for (n, (c, tmp)) in staged.iter().enumerate() {
                let target = self.root.join(c.file_name());
                fs::rename(tmp, &target).map_err(|e| Error::io(&target, e))?;
                writer.checkpoint(CrashPoint::AfterRename(n + 1))?;
            }
            fsync_dir(&self.root)?;
            let intent_path = self.root.join(INTENT_FILE);
            fs::remove_file(&intent_path).map_err(|e| Error::io(&intent_path, e))?;
            fsync_dir(&self.root)
        };
        if let Err(e) = publish(writer) {
            writer.poisoned = true;
            return Err(e);
        }
        *self.state.write() = Arc::new(next);
        Ok(())
    }

    /// Arm a simulated crash for the next commit that reaches `point`.
    ///
    /// The commit stops there, leaving the directory exactly as a killed
    /// process would, and the handle becomes unusable.
    pub fn inject_crash(&self, point: CrashPoint) {
        self.writer.lock().crash_at = Some(point);
    }

    /// Store a file outside of any record commit.
    pub fn put_blob(&self, bytes: &[u8]) -> Result<ContentHash> {
        self.blobs.put(bytes)
    }

    pub fn check_blob_size(&self, len: usize) -> Result<()> {
        self.blobs.check_size(len)
    }

    pub fn read_blob(&self, hash: &ContentHash) -> Result<Vec<u8>> {
        self.blobs.get(hash)
    }

    pub fn blob_path(&self, hash: &ContentHash) -> PathBuf {
        self.blobs.path(hash)
    }

    pub fn list_blobs(&self) -> Result<Vec<ContentHash>> {
        self.blobs.list()
    }

    /// Delete every blob no dissertation references. Returns what was removed.
    pub fn collect_garbage(&self) -> Result<Vec<ContentHash>> {
        let _writer = self.writer.lock();
        let state = self.snapshot();
        let live: BTreeSet<&ContentHash> = state
            .dissertations
            .values()
            .map(|d| &d.file_ref.content_hash)
            .collect();
        let mut removed = Vec::new();
        for hash in self.blobs.list()? {
            if !live.contains(&hash) {
                self.blobs.remove(&hash)?;
                removed.push(hash);
            }
        }
        if !removed.is_empty() {
            fsync_dir(&self.root.join(BLOB_DIR))?;
        }
        Ok(removed)
    }

    /// Rebuild the index from the catalog and persist it.
    ///
    /// Returns whether the stored index differed from the rebuilt one.
    pub fn reindex(&self) -> Result<bool> {
        let mut writer = self.writer.lock();
        if writer.poisoned {
            return Err(Error::Poisoned);
        }
        let current = self.snapshot();
        let rebuilt = current.rebuild_index()?;
        let on_disk: Option<InvertedIndex> = load(&self.root, Collection::Index)?;
        let changed = on_disk.as_ref() != Some(&rebuilt);
        if changed {
            let mut next = (*current).clone();
            next.index = rebuilt;
            self.persist(&mut writer, next, &BTreeSet::from([Collection::Index]))?;
        }
        Ok(changed)
    }

    /// Reference problems plus file checks. Empty when the directory is sound.
    pub fn integrity_report(&self) -> Vec<String> {
        let state = self.snapshot();
        let mut problems = state.reference_problems();
        for d in state.dissertations.values() {
            let fr = &d.file_ref;
            match self.blobs.size_of(&fr.content_hash) {
                Some(size) if size == fr.size_bytes => {}
                Some(size) => problems.push(format!(
                    "file of {} is {size} bytes, record says {}",
                    d.dissertation_id, fr.size_bytes
                )),
                None => problems.push(format!(
                    "file {} of {} is missing",
                    fr.content_hash, d.dissertation_id
                )),
            }
        }
        match state.rebuild_index() {
            Ok(rebuilt) if rebuilt == state.index => {}
            Ok(_) => problems.push("live index differs from a rebuild".to_owned()),
            Err(e) => problems.push(format!("index rebuild failed: {e}")),
        }
        problems
    }
}

fn acquire_lock(root: &Path) -> Result<File> {
    let path = root.join(LOCK_FILE);
    let file = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    match file.try_lock() {
        Ok(()) => Ok(file),
        Err(TryLockError::WouldBlock) => Err(Error::DirLocked(root.to_path_buf())),
        Err(TryLockError::Error(e)) => Err(Error::io(&path, e)),
    }
}

/// Finish a commit whose intent was published. Returns whether one was found.
fn roll_forward(root: &Path) -> Result<bool> {
    let intent_path = root.join(INTENT_FILE);
    let bytes = match fs::read(&intent_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(false),
        Err(e) => return Err(Error::io(&intent_path, e)),
    };
    let intent: Intent = snapshot::decode(INTENT_FILE, "intent", &bytes)?;
    for name in &intent.files {
        if !Collection::ALL.iter().any(|c| c.file_name() == name) {
            return Err(Error::CorruptSnapshot {
                file: INTENT_FILE.to_owned(),
                reason: format!("unknown file {name:?}"),
            });
        }
        let tmp = root.join(format!("{name}.tmp"));
        if tmp.exists() {
            let target = root.join(name);
            fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))?;
        }
    }
    fsync_dir(root)?;
    fs::remove_file(&intent_path).map_err(|e| Error::io(&intent_path, e))?;
    fsync_dir(root)?;
    tracing::info!(files = ?intent.files, "completed an interrupted commit");
    Ok(true)
}

pub(crate) fn remove_temp_files(dir: &Path) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|ext| ext == "tmp") && path.is_file() {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

pub(crate) fn fsync_dir(dir: &Path) -> Result<()> {
    File::open(dir)
        .and_then(|d| d.sync_all())
        .map_err(|e| Error::io(dir, e))
}

fn load<T: serde::de::DeserializeOwned>(root: &Path, c: Collection) -> Result<Option<T>> {
    let path = root.join(c.file_name());
    match fs::read(&path) {
        Ok(bytes) => snapshot::decode(c.file_name(), c.key(), &bytes).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(&path, e)),
    }
}

fn load_records<K: Ord, T: serde::de::DeserializeOwned>(
    root: &Path,
    c: Collection,
    key: impl Fn(&T) -> K,
) -> Result<BTreeMap<K, T>> {
    let records: Vec<T> = load(root, c)?.unwrap_or_default();
    let mut map = BTreeMap::new();
    for r in records {
        if map.insert(key(&r), r).is_some() {
            return Err(Error::CorruptSnapshot {
                file: c.file_name().to_owned(),
                reason: "duplicate record key".to_owned(),
            });
        }
    }
    Ok(map)
}

/// Bytes of a collection's snapshot file as it would be written for `state`.
pub fn encode_collection(state: &State, c: Collection) -> Result<Vec<u8>> {
    state.encode(c)
}
