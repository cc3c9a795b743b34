use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use drs_core::auth::{Credential, UserRecord, UserStatus};
use drs_core::favorites::FavoriteSet;
use drs_core::store::{encode_collection, Collection, CrashPoint, Mutation, Op, State, Store};
use drs_core::{Degree, Error, Role, UserId};
use proptest::prelude::*;

fn user(id: &str, matrix: &str) -> UserRecord {
    UserRecord {
        user_id: UserId::from(id),
        matrix_number: matrix.into(),
        full_name: format!("User {id}"),
        degree: Some(Degree::PhD),
        email: None,
        username: None,
        credential: None,
        role: Role::Member,
        status: UserStatus::Provisioned,
    }
}

fn dir_listing(root: &Path) -> BTreeSet<String> {
    fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}

#[test]
fn empty_directory_opens_empty() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let s = store.snapshot();
    assert!(s.users.is_empty());
    assert!(s.dissertations.is_empty());
    assert_eq!(*s, State::default());
}

#[test]
fn hand_written_users_file_loads() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("users.json"),
        r#"{
  "schema": 1,
  "users": [
    {"user_id": "u1", "matrix_number": "WGA1", "full_name": "One", "degree": "Master",
     "email": null, "username": null, "credential": null, "role": "Member", "status": "Provisioned"},
    {"user_id": "u2", "matrix_number": "WGA2", "full_name": "Two", "degree": "PhD",
     "email": "two@x.my", "username": "two", "role": "Member", "status": "Registered",
     "credential": {"salt": "00000000000000000000000000000000",
                    "digest": "0000000000000000000000000000000000000000000000000000000000000000",
                    "iterations": 1}}
  ]
}"#,
    )
    .unwrap();
    let store = Store::open(dir.path()).unwrap();
    let s = store.snapshot();
    let ids: Vec<_> = s.users.keys().map(|k| k.as_str()).collect();
    assert_eq!(ids, ["u1", "u2"]);
    assert_eq!(s.users[&UserId::from("u2")].username.as_deref(), Some("two"));
}

#[test]
fn truncated_snapshot_refuses_to_open() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = Store::open(dir.path()).unwrap();
        store.commit(Mutation::new().with(Op::PutUser(user("u1", "A1")))).unwrap();
    }
    let path = dir.path().join("users.json");
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
    let err = Store::open(dir.path()).unwrap_err();
    assert!(matches!(err, Error::CorruptSnapshot { .. }), "{err}");
    // and nothing was rewritten
    assert_eq!(fs::read(&path).unwrap(), &bytes[..bytes.len() - 10]);
}

#[test]
fn newer_schema_refuses_to_open() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("favorites.json"), r#"{"favorites": [], "schema": 2}"#).unwrap();
    assert!(matches!(
        Store::open(dir.path()),
        Err(Error::UnsupportedSchema { found: 2, .. })
    ));
}

#[test]
fn commit_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = Store::open(dir.path()).unwrap();
        store.commit(Mutation::new().with(Op::PutUser(user("u1", "A1")))).unwrap();
    }
    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.snapshot().users[&UserId::from("u1")], user("u1", "A1"));
}

#[test]
fn empty_commit_leaves_bytes_alone() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    store.commit(Mutation::new().with(Op::PutUser(user("u1", "A1")))).unwrap();
    let before = fs::read(dir.path().join("users.json")).unwrap();
    let listing = dir_listing(dir.path());
    store.commit(Mutation::new()).unwrap();
    assert_eq!(fs::read(dir.path().join("users.json")).unwrap(), before);
    assert_eq!(dir_listing(dir.path()), listing);
}

#[test]
fn snapshot_files_are_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let mut cred_user = user("u9", "Z9");
    cred_user.credential = Some(Credential::derive("pw-pw-pw-pw", 2));
    store
        .commit(
            Mutation::new()
                .with(Op::PutUser(user("u2", "B2")))
                .with(Op::PutUser(cred_user))
                .with(Op::PutUser(user("u1", "A1"))),
        )
        .unwrap();
    let on_disk = fs::read(dir.path().join("users.json")).unwrap();
    assert_eq!(on_disk, encode_collection(&store.snapshot(), Collection::Users).unwrap());
    assert!(on_disk.ends_with(b"}\n"));
    assert!(!on_disk.contains(&b'\r'));
    drop(store);
    let reopened = Store::open(dir.path()).unwrap();
    assert_eq!(encode_collection(&reopened.snapshot(), Collection::Users).unwrap(), on_disk);
}

#[test]
fn crash_before_commit_point_loses_whole_mutation() {
    // upsert A, delete B in one mutation; crash between temp write and rename
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let store = Store::open(dir.path()).unwrap();
        store.commit(Mutation::new().with(Op::PutUser(user("b", "B")))).unwrap();
        let before = store.snapshot();
        store.inject_crash(CrashPoint::AfterTempWrite(1));
        let err = store
            .commit(
                Mutation::new()
                    .with(Op::PutUser(user("a", "A")))
                    .with(Op::DeleteUser(UserId::from("b"))),
            )
            .unwrap_err();
        assert!(matches!(err, Error::InjectedCrash(_)));
        // in-memory state did not move either
        assert_eq!(store.snapshot(), before);
        assert!(matches!(store.commit(Mutation::new().with(Op::PutUser(user("c", "C")))), Err(Error::Poisoned)));
        before
    };
    assert!(dir.path().join("users.json.tmp").exists());
    let store = Store::open(dir.path()).unwrap();
    assert_eq!(*store.snapshot(), *before);
    assert!(!dir.path().join("users.json.tmp").exists());
}

#[test]
fn crash_after_commit_point_rolls_forward() {
    let dir = tempfile::tempdir().unwrap();
    let fav = FavoriteSet {
        user_id: UserId::from("a"),
        items: vec!["d1".into()],
    };
    {
        let store = Store::open(dir.path()).unwrap();
        store.inject_crash(CrashPoint::AfterRename(1));
        let err = store
            .commit(
                Mutation::new()
                    .with(Op::PutUser(user("a", "A")))
                    .with(Op::PutFavorites(fav.clone())),
            )
            .unwrap_err();
        assert!(matches!(err, Error::InjectedCrash(_)));
    }
    assert!(dir.path().join("commit.json").exists());
    let store = Store::open(dir.path()).unwrap();
    assert!(store.recovery().rolled_forward);
    let s = store.snapshot();
    assert!(s.users.contains_key(&UserId::from("a")));
    assert_eq!(s.favorites[&UserId::from("a")], fav);
    assert!(!dir.path().join("commit.json").exists());
}

#[test]
fn second_open_is_locked() {
    let dir = tempfile::tempdir().unwrap();
    let _first = Store::open(dir.path()).unwrap();
    assert!(matches!(Store::open(dir.path()), Err(Error::DirLocked(_))));
}

#[test]
fn lock_released_on_drop() {
    let dir = tempfile::tempdir().unwrap();
    drop(Store::open(dir.path()).unwrap());
    Store::open(dir.path()).unwrap();
}

#[test]
fn io_failure_rolls_back_memory_and_keeps_store_usable() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    store.commit(Mutation::new().with(Op::PutUser(user("a", "A")))).unwrap();
    let before = store.snapshot();
    // a directory where the temp file should go makes the temp write fail
    fs::create_dir(dir.path().join("users.json.tmp")).unwrap();
    let err = store.commit(Mutation::new().with(Op::PutUser(user("b", "B")))).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
    assert_eq!(store.snapshot(), before);
    fs::remove_dir(dir.path().join("users.json.tmp")).unwrap();
    store.commit(Mutation::new().with(Op::PutUser(user("b", "B")))).unwrap();
    assert_eq!(store.snapshot().users.len(), 2);
}

#[test]
fn blobs_are_content_addressed() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    assert!(matches!(store.put_blob(b""), Err(Error::EmptyBlob)));
    let h1 = store.put_blob(b"abc").unwrap();
    let h2 = store.put_blob(b"abc").unwrap();
    assert_eq!(h1, h2);
    assert_eq!(
        h1.as_str(),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
    assert_eq!(fs::read_dir(dir.path().join("blobs")).unwrap().count(), 1);
    assert_eq!(store.read_blob(&h1).unwrap(), b"abc");
}

#[test]
fn no_temp_files_after_successful_commits() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    for i in 0..5 {
        let mut m = Mutation::new();
        m.add_blob(format!("blob {i}").into_bytes());
        m.push(Op::PutUser(user(&format!("u{i}"), &format!("M{i}"))));
        store.commit(m).unwrap();
    }
    let names = dir_listing(dir.path());
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
    assert!(!names.contains("commit.json"));
    assert!(dir_listing(&dir.path().join("blobs")).iter().all(|n| !n.ends_with(".tmp")));
}

#[derive(Debug, Clone)]
enum Step {
    Put(u8),
    Delete(u8),
    Fav(u8, Vec<u8>),
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        (0u8..6).prop_map(Step::Put),
        (0u8..6).prop_map(Step::Delete),
        (0u8..6, proptest::collection::vec(0u8..4, 0..3)).prop_map(|(u, v)| Step::Fav(u, v)),
    ]
}

fn to_mutation(steps: &[Step]) -> Mutation {
    let mut m = Mutation::new();
    for s in steps {
        match s {
            Step::Put(i) => m.push(Op::PutUser(user(&format!("u{i}"), &format!("M{i}")))),
            Step::Delete(i) => m.push(Op::DeleteUser(UserId::from(format!("u{i}")))),
            Step::Fav(u, items) => m.push(Op::PutFavorites(FavoriteSet {
                user_id: UserId::from(format!("u{u}")),
                items: items.iter().map(|x| format!("d{x}").into()).collect(),
            })),
        };
    }
    m
}

fn crash_point() -> impl Strategy<Value = CrashPoint> {
    prop_oneof![
        (1usize..4).prop_map(CrashPoint::AfterTempWrite),
        Just(CrashPoint::AfterIntent),
        (1usize..4).prop_map(CrashPoint::AfterRename),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reopen_after_crash_matches_last_completed_commit(
        commits in proptest::collection::vec(proptest::collection::vec(step(), 1..4), 1..6),
        crash_at in any::<prop::sample::Index>(),
        point in crash_point(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let crash_commit = crash_at.index(commits.len());
        let mut expected = State::default();
        {
            let store = Store::open(dir.path()).unwrap();
            for (i, steps) in commits.iter().enumerate() {
                let before = store.snapshot();
                if i == crash_commit {
                    store.inject_crash(point);
                }
                match store.commit(to_mutation(steps)) {
                    Ok(()) => expected = (*store.snapshot()).clone(),
                    Err(Error::InjectedCrash(_)) => {
                        // compute what the commit would have produced
                        let shadow = tempfile::tempdir().unwrap();
                        let twin = Store::open(shadow.path()).unwrap();
                        for s in &commits[..=i] {
                            twin.commit(to_mutation(s)).unwrap();
                        }
                        expected = if point.is_after_commit_point() {
                            (*twin.snapshot()).clone()
                        } else {
                            (*before).clone()
                        };
                        break;
                    }
                    Err(e) => panic!("unexpected {e}"),
                }
            }
        }
        let reopened = Store::open(dir.path()).unwrap();
        prop_assert_eq!(&*reopened.snapshot(), &expected);
    }
}
