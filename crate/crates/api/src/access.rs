//! Who may call what.
//!
//! The table is the contract the handlers are tested against; enforcement
//! itself happens in the core operations, so the two are checked
//! independently.

use drs_core::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Allow,
    /// 401: log in first.
    Unauthenticated,
    /// 403: logged in, but the role is not enough.
    Forbidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audience {
    Anyone,
    Users,
    Admins,
}

impl Audience {
    /// Outcome for a caller with `role`, or a guest when `None`.
    pub fn check(self, role: Option<Role>) -> Access {
        match (self, role) {
            (Audience::Anyone, _) => Access::Allow,
            (_, None) => Access::Unauthenticated,
            (Audience::Users, Some(_)) | (Audience::Admins, Some(Role::Admin)) => Access::Allow,
            (Audience::Admins, Some(Role::Member)) => Access::Forbidden,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Endpoint {
    pub method: &'static str,
    /// Route template; `{id}` marks a path parameter.
    pub path: &'static str,
    pub operation: &'static str,
    pub audience: Audience,
}

const fn ep(method: &'static str, path: &'static str, operation: &'static str, audience: Audience) -> Endpoint {
    Endpoint { method, path, operation, audience }
}

use Audience::{Admins, Anyone, Users};

pub const ENDPOINTS: &[Endpoint] = &[
    ep("POST", "/api/signup", "sign_up", Anyone),
    ep("POST", "/api/login", "login", Anyone),
    ep("POST", "/api/logout", "logout", Anyone),
    ep("POST", "/api/password", "change_password", Users),
    ep("GET", "/api/search", "simple_search", Anyone),
    ep("POST", "/api/search/advanced", "advanced_search", Users),
    ep("GET", "/api/dissertations/{id}", "get_dissertation", Anyone),
    ep("GET", "/api/dissertations/{id}/file", "download", Users),
    ep("POST", "/api/dissertations", "upload_dissertation", Admins),
    ep("PATCH", "/api/dissertations/{id}", "edit_dissertation", Admins),
    ep("DELETE", "/api/dissertations/{id}", "delete_dissertation", Admins),
    ep("GET", "/api/favorites", "list_favorites", Users),
    ep("PUT", "/api/favorites/{id}", "add_favorite", Users),
    ep("POST", "/api/favorites/remove", "remove_favorites", Users),
    ep("POST", "/api/users", "provision_user", Admins),
    ep("GET", "/api/users", "find_users", Admins),
    ep("PATCH", "/api/users/{id}", "edit_user", Admins),
    ep("DELETE", "/api/users/{id}", "delete_user", Admins),
    ep("GET", "/api/health", "health", Anyone),
];
