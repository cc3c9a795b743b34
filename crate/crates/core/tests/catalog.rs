use drs_core::{Caller, DissertationId, DissertationPatch, Error, FileUpload};
use drs_testkit::{meta, pdf, Harness};
use proptest::prelude::*;

#[test]
fn year_bounds() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    for year in [1850, 1899, 2027] {
        let err = h.repo.upload_dissertation(&admin, meta("Old", year), pdf(b"x")).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{year}: {err:?}");
    }
    for year in [1900, 1988, 2006, 2026] {
        h.upload(&admin, meta("Fine", year), b"x");
    }
    assert_eq!(h.repo.snapshot().dissertations.len(), 4);
}

#[test]
fn metadata_validation() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let err = h.repo.upload_dissertation(&admin, meta("   ", 2000), pdf(b"x")).unwrap_err();
    assert!(matches!(err, Error::Validation(_)));
    let err = h.repo.upload_dissertation(&admin, meta("T", 2000), pdf(b"")).unwrap_err();
    assert!(matches!(err, Error::EmptyBlob));
    let bad_type = FileUpload { media_type: Some("pdf".into()), ..pdf(b"x") };
    let err = h.repo.upload_dissertation(&admin, meta("T", 2000), bad_type).unwrap_err();
    assert!(matches!(err, Error::Validation(_)));

    let mut m = meta("  Padded  ", 2000);
    m.keywords = vec![" a ".into(), "".into(), "b".into()];
    let d = h.upload(&admin, m, b"x");
    assert_eq!(d.title, "Padded");
    assert_eq!(d.keywords, ["a", "b"]);
    assert!(h.repo.snapshot().dissertations.len() == 1);
}

#[test]
fn only_admins_change_the_catalog() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let (_, member) = h.member(&admin, "M1", "mona");
    let d = h.upload(&admin, meta("T", 2000), b"x");
    let id = &d.dissertation_id;
    for caller in [&Caller::Guest, &member] {
        let want_unauth = matches!(caller, Caller::Guest);
        let errs = [
            h.repo.upload_dissertation(caller, meta("T", 2000), pdf(b"y")).unwrap_err(),
            h.repo.edit_dissertation(caller, id, DissertationPatch::default()).unwrap_err(),
            h.repo.delete_dissertation(caller, id).unwrap_err(),
        ];
        for e in errs {
            if want_unauth {
                assert!(matches!(e, Error::Unauthenticated), "{e:?}");
            } else {
                assert!(matches!(e, Error::Forbidden), "{e:?}");
            }
        }
    }
    let op = h.repo.upload_dissertation(&Caller::Operator, meta("Batch", 2001), pdf(b"z")).unwrap();
    assert_eq!(op.uploaded_by.as_str(), "operator");
    let Caller::Session(s) = &admin else { unreachable!() };
    assert_eq!(d.uploaded_by, s.user_id);
}

#[test]
fn public_view_hides_uploader() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let d = h.upload(&admin, meta("T", 2000), b"x");
    let public = h.repo.get_dissertation(&d.dissertation_id).unwrap();
    let json = serde_json::to_value(&public).unwrap();
    assert!(json.get("uploaded_by").is_none());
    assert_eq!(json["title"], "T");
    assert_eq!(json["abstract"], "");
    assert_eq!(public.file_ref, d.file_ref);
}

#[test]
fn download_rules() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let (_, member) = h.member(&admin, "M1", "mona");
    let d = h.upload(&admin, meta("T", 2000), b"%PDF bytes");
    assert!(matches!(h.repo.download(&Caller::Guest, &d.dissertation_id), Err(Error::Unauthenticated)));
    let got = h.repo.download(&member, &d.dissertation_id).unwrap();
    assert_eq!(got.bytes, b"%PDF bytes");
    assert_eq!(got.original_filename, "thesis.pdf");
    assert_eq!(got.media_type, "application/pdf");

    let missing = DissertationId::from("nope");
    assert!(matches!(h.repo.download(&member, &missing), Err(Error::NotFound(_))));
    assert!(matches!(h.repo.get_dissertation(&missing), Err(Error::NotFound(_))));
    assert!(matches!(
        h.repo.edit_dissertation(&admin, &missing, DissertationPatch::default()),
        Err(Error::NotFound(_))
    ));
    assert!(matches!(h.repo.delete_dissertation(&admin, &missing), Err(Error::NotFound(_))));
}

#[test]
fn filename_and_media_type_are_cleaned() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let upload = FileUpload {
        bytes: b"data".to_vec(),
        original_filename: "../../etc/\u{7}passwd".into(),
        media_type: None,
    };
    let d = h.repo.upload_dissertation(&admin, meta("T", 2000), upload).unwrap();
    assert_eq!(d.file_ref.original_filename, "passwd");
    assert_eq!(d.file_ref.media_type, "application/octet-stream");
    assert_eq!(d.file_ref.size_bytes, 4);
}

#[test]
fn identical_files_share_a_blob() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let a = h.upload(&admin, meta("A", 2000), b"same");
    let b = h.upload(&admin, meta("B", 2000), b"same");
    assert_ne!(a.dissertation_id, b.dissertation_id);
    assert_eq!(a.file_ref.content_hash, b.file_ref.content_hash);
    assert_eq!(h.repo.store().list_blobs().unwrap().len(), 1);
    h.repo.delete_dissertation(&admin, &a.dissertation_id).unwrap();
    assert!(h.repo.store().collect_garbage().unwrap().is_empty());
    h.repo.delete_dissertation(&admin, &b.dissertation_id).unwrap();
    assert_eq!(h.repo.store().collect_garbage().unwrap().len(), 1);
}

#[test]
fn edit_keeps_unpatched_fields() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let mut m = meta("Tesis X", 2001);
    m.keywords = vec!["retrieval".into()];
    let d = h.upload(&admin, m, b"x");
    let e = h
        .repo
        .edit_dissertation(
            &admin,
            &d.dissertation_id,
            DissertationPatch { title: Some("Thesis X".into()), ..DissertationPatch::default() },
        )
        .unwrap();
    assert_eq!(e.title, "Thesis X");
    assert_eq!(e.keywords, d.keywords);
    assert_eq!(e.file_ref, d.file_ref);
    assert_eq!(e.uploaded_at, d.uploaded_at);
    let bad = DissertationPatch { year: Some(1850), ..DissertationPatch::default() };
    assert!(matches!(h.repo.edit_dissertation(&admin, &d.dissertation_id, bad), Err(Error::Validation(_))));
}

#[test]
fn delete_removes_from_search_and_every_favorites_list() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let (_, m1) = h.member(&admin, "M1", "mona");
    let (_, m2) = h.member(&admin, "M2", "mark");
    let keep = h.upload(&admin, meta("Thesis keep", 2000), b"k");
    let gone = h.upload(&admin, meta("Thesis gone", 2000), b"g");
    for m in [&m1, &m2] {
        h.repo.add_favorite(m, &gone.dissertation_id).unwrap();
    }
    h.repo.add_favorite(&m1, &keep.dissertation_id).unwrap();
    let before = h.repo.simple_search("thesis").unwrap().len();

    h.repo.delete_dissertation(&admin, &gone.dissertation_id).unwrap();
    assert_eq!(h.repo.simple_search("thesis").unwrap().len(), before - 1);
    assert_eq!(h.repo.favorite_ids(&m1).unwrap(), std::slice::from_ref(&keep.dissertation_id));
    assert!(h.repo.favorite_ids(&m2).unwrap().is_empty());
    assert!(h.repo.snapshot().reference_problems().is_empty());
    assert!(h.repo.store().integrity_report().is_empty());
}

#[test]
fn catalog_survives_reopen() {
    let h = Harness::new();
    let (_, admin) = h.admin();
    let d = h.upload(&admin, meta("Durable", 1999), b"bytes");
    let h = h.reopen();
    let (_, member) = h.member(&h.caller(&h.repo.login("root", "admin-pass-1").unwrap()), "M1", "mona");
    assert_eq!(h.repo.get_dissertation(&d.dissertation_id).unwrap().title, "Durable");
    assert_eq!(h.repo.download(&member, &d.dissertation_id).unwrap().bytes, b"bytes");
    assert_eq!(h.repo.simple_search("durable").unwrap().len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn download_is_byte_identical(bytes in proptest::collection::vec(any::<u8>(), 1..4096)) {
        let h = Harness::new();
        let (_, admin) = h.admin();
        let d = h.upload(&admin, meta("Blob", 2000), &bytes);
        prop_assert_eq!(d.file_ref.size_bytes, bytes.len() as u64);
        prop_assert_eq!(h.repo.download(&admin, &d.dissertation_id).unwrap().bytes, bytes);
    }
}
