//! Shared test support: a throwaway repository harness, random corpora, and
//! a brute-force search oracle. Test-only; never a runtime dependency.

pub mod corpus;
pub mod oracle;

use std::sync::Arc;

use drs_core::auth::{AdminBootstrap, NewUser, SignUp};
use drs_core::clock::{ManualClock, Timestamp};
use drs_core::{
    Caller, Config, Degree, DissertationMeta, DissertationRecord, FileUpload, Repository, Session,
};
use tempfile::TempDir;

pub const PASSWORD: &str = "correct-horse";
pub const ADMIN_USERNAME: &str = "root";
pub const ADMIN_PASSWORD: &str = "admin-pass-1";
/// 2026-01-01T00:00:00Z
pub const START: Timestamp = Timestamp(1_767_225_600);

/// Cheap key derivation so tests stay fast.
pub fn test_config() -> Config {
    Config {
        password_iterations: 64,
        ..Config::default()
    }
}

pub struct Harness {
    pub dir: TempDir,
    pub repo: Arc<Repository>,
    pub clock: Arc<ManualClock>,
}

impl Default for Harness {
    fn default() -> Self {
        Self::new()
    }
}

impl Harness {
    pub fn new() -> Harness {
        Self::with_config(test_config())
    }

    pub fn with_config(config: Config) -> Harness {
        let dir = tempfile::tempdir().expect("tempdir");
        let clock = Arc::new(ManualClock::new(START));
        let repo = Repository::open_with_clock(dir.path(), config, clock.clone())
            .expect("open repository");
        Harness {
            dir,
            repo: Arc::new(repo),
            clock,
        }
    }

    /// Close and reopen the same directory.
    pub fn reopen(self) -> Harness {
        let Harness { dir, repo, clock } = self;
        let config = repo.config().clone();
        drop(Arc::try_unwrap(repo).expect("repository still shared"));
        let repo = Repository::open_with_clock(dir.path(), config, clock.clone())
            .expect("reopen repository");
        Harness {
            dir,
            repo: Arc::new(repo),
            clock,
        }
    }

    pub fn caller(&self, session: &Session) -> Caller {
        self.repo.caller(Some(&session.token)).expect("live session")
    }

    /// Bootstrap the administrator and log in.
    pub fn admin(&self) -> (Session, Caller) {
        self.repo
            .bootstrap_admin(AdminBootstrap {
                matrix_number: "ADMIN0001".into(),
                full_name: "Repository Admin".into(),
                username: ADMIN_USERNAME.into(),
                password: ADMIN_PASSWORD.into(),
            })
            .expect("bootstrap admin");
        let s = self.repo.login(ADMIN_USERNAME, ADMIN_PASSWORD).expect("admin login");
        let c = self.caller(&s);
        (s, c)
    }

    /// Provision, register and log in a member.
    pub fn member(&self, admin: &Caller, matrix: &str, username: &str) -> (Session, Caller) {
        self.register(admin, matrix, username, &format!("{username} Student"));
        let s = self.repo.login(username, PASSWORD).expect("member login");
        let c = self.caller(&s);
        (s, c)
    }

    pub fn register(&self, admin: &Caller, matrix: &str, username: &str, full_name: &str) {
        self.repo
            .provision_user(
                admin,
                NewUser {
                    matrix_number: matrix.into(),
                    full_name: full_name.into(),
                    degree: Degree::Master,
                },
            )
            .expect("provision");
        self.repo
            .sign_up(SignUp {
                matrix_number: matrix.into(),
                username: username.into(),
                password: PASSWORD.into(),
                email: format!("{username}@example.edu"),
            })
            .expect("sign up");
    }

    pub fn upload(&self, admin: &Caller, meta: DissertationMeta, bytes: &[u8]) -> DissertationRecord {
        self.repo
            .upload_dissertation(admin, meta, pdf(bytes))
            .expect("upload")
    }
}

pub fn meta(title: &str, year: i32) -> DissertationMeta {
    DissertationMeta {
        title: title.into(),
        author_name: "A. Student".into(),
        abstract_text: String::new(),
        keywords: Vec::new(),
        topic: "Computing".into(),
        degree: Degree::Master,
        year,
    }
}

pub fn pdf(bytes: &[u8]) -> FileUpload {
    FileUpload {
        bytes: bytes.to_vec(),
        original_filename: "thesis.pdf".into(),
        media_type: Some("application/pdf".into()),
    }
}
