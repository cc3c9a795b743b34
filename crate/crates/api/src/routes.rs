use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::{BytesRejection, QueryRejection};
use axum::extract::{FromRequestParts, Multipart, Path, Query, State};
use axum::http::header::{AUTHORIZATION, CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use drs_core::auth::{NewUser, SignUp, UserPatch, UserQuery};
use drs_core::{
    AdvancedQuery, Caller, DissertationId, DissertationMeta, DissertationPatch, FileUpload,
    PublicDissertation, Repository, ResultRow, UserId, UserView,
};
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;

pub const DEFAULT_LIMIT: usize = 20;
pub const MAX_LIMIT: usize = 100;

pub type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
pub struct AppState {
    pub repo: Arc<Repository>,
}

/// The bearer token, if the request carried one. Endpoints open to guests
/// never look at it, so a stale token there behaves like no token.
pub struct Token(Option<String>);

impl<S: Send + Sync> FromRequestParts<S> for Token {
    type Rejection = std::convert::Infallible;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .map(|v| match v.split_once(' ') {
                Some((scheme, rest)) if scheme.eq_ignore_ascii_case("bearer") => rest.trim().to_owned(),
                // unusable credentials still count as "a token was sent"
                _ => String::new(),
            });
        Ok(Token(token))
    }
}

impl AppState {
    fn user(&self, token: &Token) -> ApiResult<Caller> {
        let caller = self.repo.caller(token.0.as_deref())?;
        caller.require_user()?;
        Ok(caller)
    }

    fn admin(&self, token: &Token) -> ApiResult<Caller> {
        let caller = self.repo.caller(token.0.as_deref())?;
        caller.require_admin()?;
        Ok(caller)
    }

    /// Run a core operation off the async threads; key derivation and fsync block.
    async fn run<T, F>(&self, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&Repository) -> drs_core::Result<T> + Send + 'static,
    {
        let repo = self.repo.clone();
        match tokio::task::spawn_blocking(move || f(&repo)).await {
            Ok(r) => r.map_err(ApiError::from),
            Err(e) => {
                tracing::error!(error = %e, "worker task failed");
                Err(ApiError::internal())
            }
        }
    }
}

fn parse_json<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> ApiResult<T> {
    let body = body.map_err(body_error)?;
    serde_json::from_slice(&body).map_err(|e| ApiError::validation(format!("invalid JSON body: {e}")))
}

fn body_error(e: BytesRejection) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "BLOB_TOO_LARGE", "request body is too large")
    } else {
        ApiError::validation(e.body_text())
    }
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::validation(format!("invalid query string: {}", e.body_text())))
}

fn ok() -> Json<serde_json::Value> {
    Json(json!({ "ok": true }))
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
pub struct PageParams {
    pub offset: Option<usize>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Page<T> {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub items: Vec<T>,
}

impl<T> Page<T> {
    fn of(all: Vec<T>, params: PageParams) -> ApiResult<Page<T>> {
        let limit = params.limit.unwrap_or(DEFAULT_LIMIT);
        if limit == 0 {
            return Err(ApiError::validation("limit must be at least 1"));
        }
        let limit = limit.min(MAX_LIMIT);
        let offset = params.offset.unwrap_or(0);
        let total = all.len();
        let items = all.into_iter().skip(offset).take(limit).collect();
        Ok(Page { total, offset, limit, items })
    }
}

pub async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "METHOD_NOT_ALLOWED", "method not allowed on this endpoint")
}

pub async fn sign_up(
    State(app): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<UserView>)> {
    let req: SignUp = parse_json(body)?;
    let user = app.run(move |r| r.sign_up(req)).await?;
    Ok((StatusCode::CREATED, Json(user.view())))
}

#[derive(Deserialize)]
struct Credentials {
    username: String,
    password: String,
}

pub async fn login(
    State(app): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<drs_core::Session>> {
    let c: Credentials = parse_json(body)?;
    Ok(Json(app.run(move |r| r.login(&c.username, &c.password)).await?))
}

pub async fn logout(State(app): State<AppState>, token: Token) -> ApiResult<Json<serde_json::Value>> {
    if let Some(t) = token.0.filter(|t| !t.is_empty()) {
        app.run(move |r| r.logout(&t)).await?;
    }
    Ok(ok())
}

#[derive(Deserialize)]
struct PasswordChange {
    old_password: String,
    new_password: String,
}

pub async fn change_password(
    State(app): State<AppState>,
    token: Token,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let caller = app.user(&token)?;
    let p: PasswordChange = parse_json(body)?;
    app.run(move |r| r.change_password(&caller, &p.old_password, &p.new_password)).await?;
    Ok(ok())
}

#[derive(Deserialize)]
pub struct SearchParams {
    #[serde(default)]
    q: String,
    offset: Option<usize>,
    limit: Option<usize>,
}

pub async fn simple_search(
    State(app): State<AppState>,
    params: Result<Query<SearchParams>, QueryRejection>,
) -> ApiResult<Json<Page<ResultRow>>> {
    let p = query(params)?;
    let page = PageParams { offset: p.offset, limit: p.limit };
    let rows = app.run(move |r| r.simple_search_rows(&p.q)).await?;
    Ok(Json(Page::of(rows, page)?))
}

pub async fn advanced_search(
    State(app): State<AppState>,
    token: Token,
    params: Result<Query<PageParams>, QueryRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<Page<ResultRow>>> {
    let caller = app.user(&token)?;
    let page = query(params)?;
    let q: AdvancedQuery = parse_json(body)?;
    let rows = app.run(move |r| r.advanced_search_rows(&caller, &q)).await?;
    Ok(Json(Page::of(rows, page)?))
}

pub async fn get_dissertation(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<PublicDissertation>> {
    Ok(Json(app.repo.get_dissertation(&DissertationId::from(id))?))
}

fn content_disposition(filename: &str) -> HeaderValue {
    let ascii: String = filename
        .chars()
        .map(|c| if c.is_ascii_graphic() && c != '"' && c != '\\' || c == ' ' { c } else { '_' })
        .collect();
    let encoded = utf8_percent_encode(filename, NON_ALPHANUMERIC);
    HeaderValue::from_str(&format!("attachment; filename=\"{ascii}\"; filename*=UTF-8''{encoded}"))
        .unwrap_or_else(|_| HeaderValue::from_static("attachment"))
}

pub async fn download(
    State(app): State<AppState>,
    token: Token,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let caller = app.user(&token)?;
    let file = app.run(move |r| r.download(&caller, &DissertationId::from(id))).await?;
    let media_type = HeaderValue::from_str(&file.media_type)
        .unwrap_or_else(|_| HeaderValue::from_static("application/octet-stream"));
    Ok((
        [(CONTENT_TYPE, media_type), (CONTENT_DISPOSITION, content_disposition(&file.original_filename))],
        Body::from(file.bytes),
    )
        .into_response())
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "BLOB_TOO_LARGE", "upload is too large")
    } else {
        ApiError::validation(format!("malformed multipart body: {}", e.body_text()))
    }
}

pub async fn upload(
    State(app): State<AppState>,
    token: Token,
    multipart: Result<Multipart, MultipartRejection>,
) -> ApiResult<(StatusCode, Json<drs_core::DissertationRecord>)> {
    let caller = app.admin(&token)?;
    let mut multipart = multipart.map_err(|e| ApiError::validation(e.body_text()))?;
    let mut meta: Option<DissertationMeta> = None;
    let mut file: Option<FileUpload> = None;
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        match field.name() {
            Some("meta") => {
                let text = field.bytes().await.map_err(multipart_error)?;
                meta = Some(
                    serde_json::from_slice(&text)
                        .map_err(|e| ApiError::validation(format!("invalid meta part: {e}")))?,
                );
            }
            Some("file") => {
                let original_filename = field.file_name().unwrap_or_default().to_owned();
                let media_type = field.content_type().map(str::to_owned);
                let bytes = field.bytes().await.map_err(multipart_error)?.to_vec();
                file = Some(FileUpload { bytes, original_filename, media_type });
            }
            _ => {}
        }
    }
    let meta = meta.ok_or_else(|| ApiError::validation("missing multipart part \"meta\""))?;
    let file = file.ok_or_else(|| ApiError::validation("missing multipart part \"file\""))?;
    let rec = app.run(move |r| r.upload_dissertation(&caller, meta, file)).await?;
    Ok((StatusCode::CREATED, Json(rec)))
}

pub async fn edit_dissertation(
    State(app): State<AppState>,
    token: Token,
    Path(id): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<drs_core::DissertationRecord>> {
    let caller = app.admin(&token)?;
    let patch: DissertationPatch = parse_json(body)?;
    Ok(Json(app.run(move |r| r.edit_dissertation(&caller, &DissertationId::from(id), patch)).await?))
}

pub async fn delete_dissertation(
    State(app): State<AppState>,
    token: Token,
    Path(id): Path<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let caller = app.admin(&token)?;
    app.run(move |r| r.delete_dissertation(&caller, &DissertationId::from(id))).await?;
    Ok(ok())
}

pub async fn list_favorites(
    State(app): State<AppState>,
    token: Token,
) -> ApiResult<Json<Vec<PublicDissertation>>> {
    let caller = app.user(&token)?;
    Ok(Json(app.repo.list_favorites(&caller)?))
}

#[derive(Serialize, Deserialize)]
pub struct FavoriteIds {
    pub ids: Vec<DissertationId>,
}

pub async fn add_favorite(
    State(app): State<AppState>,
    token: Token,
    Path(id): Path<String>,
) -> ApiResult<Json<FavoriteIds>> {
    let caller = app.user(&token)?;
    let ids = app.run(move |r| r.add_favorite(&caller, &DissertationId::from(id))).await?;
    Ok(Json(FavoriteIds { ids }))
}

pub async fn remove_favorites(
    State(app): State<AppState>,
    token: Token,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<FavoriteIds>> {
    let caller = app.user(&token)?;
    let req: FavoriteIds = parse_json(body)?;
    let ids = app.run(move |r| r.remove_favorites(&caller, &req.ids)).await?;
    Ok(Json(FavoriteIds { ids }))
}

pub async fn provision_user(
    State(app): State<AppState>,
    token: Token,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<UserView>)> {
    let caller = app.admin(&token)?;
    let new: NewUser = parse_json(body)?;
    let user = app.run(move |r| r.provision_user(&caller, new)).await?;
    Ok((StatusCode::CREATED, Json(user.view())))
}

#[derive(Deserialize)]
pub struct UserParams {
    matrix_number: Option<String>,
    #[serde(alias = "name")]
    name_substring: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

pub async fn find_users(
    State(app): State<AppState>,
    token: Token,
    params: Result<Query<UserParams>, QueryRejection>,
) -> ApiResult<Json<Page<UserView>>> {
    let caller = app.admin(&token)?;
    let p = query(params)?;
    let q = UserQuery { matrix_number: p.matrix_number, name_substring: p.name_substring };
    let users = app.repo.find_users(&caller, &q)?;
    let views = users.iter().map(|u| u.view()).collect();
    Ok(Json(Page::of(views, PageParams { offset: p.offset, limit: p.limit })?))
}

pub async fn edit_user(
    State(app): State<AppState>,
    token: Token,
    Path(id): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<UserView>> {
    let caller = app.admin(&token)?;
    let patch: UserPatch = parse_json(body)?;
    let user = app.run(move |r| r.edit_user(&caller, &UserId::from(id), patch)).await?;
    Ok(Json(user.view()))
}

pub async fn delete_user(
    State(app): State<AppState>,
    token: Token,
    Path(id): Path<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let caller = app.admin(&token)?;
    app.run(move |r| r.delete_user(&caller, &UserId::from(id))).await?;
    Ok(ok())
}
