#![allow(dead_code)]

use axum::body::{Body, Bytes};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use drs_api::{router, ApiConfig};
use drs_testkit::Harness;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const BOUNDARY: &str = "drs-test-boundary-7d1f";

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Bytes,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("{} body is not JSON ({e}): {:?}", self.status, self.body))
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_owned()
    }

    pub fn content_type(&self) -> &str {
        self.headers.get(CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("")
    }

    pub fn is_json(&self) -> bool {
        self.content_type() == "application/json"
    }
}

pub struct TestApp {
    pub h: Harness,
    pub router: Router,
}

impl TestApp {
    pub fn new() -> TestApp {
        Self::with(Harness::new(), ApiConfig::default())
    }

    pub fn with(h: Harness, config: ApiConfig) -> TestApp {
        let router = router(h.repo.clone(), &config).expect("router");
        TestApp { h, router }
    }

    pub async fn raw(&self, req: Request<Body>) -> Reply {
        let resp = self.router.clone().oneshot(req).await.expect("infallible");
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = resp.into_body().collect().await.expect("body").to_bytes();
        Reply { status, headers, body }
    }

    pub async fn send(&self, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(t) = token {
            req = req.header(AUTHORIZATION, format!("Bearer {t}"));
        }
        let req = match body {
            Some(v) => req
                .header(CONTENT_TYPE, "application/json")
                .body(Body::from(serde_json::to_vec(&v).unwrap())),
            None => req.body(Body::empty()),
        };
        self.raw(req.unwrap()).await
    }

    pub async fn upload(&self, token: Option<&str>, meta: &Value, bytes: &[u8], filename: &str) -> Reply {
        let mut req = Request::builder()
            .method("POST")
            .uri("/api/dissertations")
            .header(CONTENT_TYPE, format!("multipart/form-data; boundary={BOUNDARY}"));
        if let Some(t) = token {
            req = req.header(AUTHORIZATION, format!("Bearer {t}"));
        }
        let body = multipart_body(Some(meta), Some((bytes, filename, "application/pdf")));
        self.raw(req.body(Body::from(body)).unwrap()).await
    }

    pub async fn login(&self, username: &str, password: &str) -> String {
        let r = self
            .send("POST", "/api/login", None, Some(serde_json::json!({"username": username, "password": password})))
            .await;
        assert_eq!(r.status, StatusCode::OK, "login {username}: {:?}", r.body);
        r.json()["token"].as_str().unwrap().to_owned()
    }
}

pub fn multipart_body(meta: Option<&Value>, file: Option<(&[u8], &str, &str)>) -> Vec<u8> {
    let mut out = Vec::new();
    if let Some(meta) = meta {
        out.extend_from_slice(
            format!(
                "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"meta\"\r\nContent-Type: application/json\r\n\r\n"
            )
            .as_bytes(),
        );
        out.extend_from_slice(&serde_json::to_vec(meta).unwrap());
        out.extend_from_slice(b"\r\n");
    }
    if let Some((bytes, name, media)) = file {
        out.extend_from_slice(
            format!(
                "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{name}\"\r\nContent-Type: {media}\r\n\r\n"
            )
            .as_bytes(),
        );
        out.extend_from_slice(bytes);
        out.extend_from_slice(b"\r\n");
    }
    out.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    out
}

pub fn meta_json(title: &str, year: i32) -> Value {
    serde_json::json!({
        "title": title,
        "author_name": "A. Student",
        "abstract": "",
        "keywords": [],
        "topic": "Computing",
        "degree": "Master",
        "year": year,
    })
}
