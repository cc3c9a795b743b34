use rand::Rng;

use super::{
    check_password, normalize_email, normalize_full_name, normalize_matrix, normalize_username,
    AdminBootstrap, Caller, Credential, NewUser, Session, SessionRecord, SignUp, TokenDigest,
    UserPatch, UserQuery, UserRecord, UserStatus,
};
use crate::error::{Error, Result};
use crate::repository::Repository;
use crate::store::{Mutation, Op, State};
use crate::types::{Role, UserId};

fn new_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rng().fill(&mut bytes);
    hex::encode(bytes)
}

fn find_by_matrix<'a>(state: &'a State, matrix: &str) -> Option<&'a UserRecord> {
    state.users.values().find(|u| u.matrix_number == matrix)
}

fn find_by_username<'a>(state: &'a State, username: &str) -> Option<&'a UserRecord> {
    state
        .users
        .values()
        .find(|u| u.username.as_deref() == Some(username))
}

fn sessions_of<'a>(state: &'a State, user: &'a UserId) -> impl Iterator<Item = &'a SessionRecord> {
    state.sessions.values().filter(move |s| s.user_id == *user)
}

impl Repository {
    /// Add a student record that the student can later claim with sign-up.
    pub fn provision_user(&self, caller: &Caller, new: NewUser) -> Result<UserRecord> {
        caller.require_admin()?;
        let matrix_number = normalize_matrix(&new.matrix_number)?;
        let full_name = normalize_full_name(&new.full_name)?;
        self.store.write(|state| {
            if find_by_matrix(state, &matrix_number).is_some() {
                return Err(Error::DuplicateMatrix(matrix_number.clone()));
            }
            let user = UserRecord {
                user_id: UserId::generate(),
                matrix_number: matrix_number.clone(),
                full_name,
                degree: Some(new.degree),
                email: None,
                username: None,
                credential: None,
                role: Role::Member,
                status: UserStatus::Provisioned,
            };
            Ok((Mutation::new().with(Op::PutUser(user.clone())), user))
        })
    }

    /// Claim a provisioned record: choose a username and password.
    pub fn sign_up(&self, req: SignUp) -> Result<UserRecord> {
        let matrix_number = normalize_matrix(&req.matrix_number)?;
        let username = normalize_username(&req.username)?;
        check_password(&req.password)?;
        let email = normalize_email(&req.email)?;
        let credential = Credential::derive(&req.password, self.config.password_iterations);
        self.store.write(|state| {
            let existing = find_by_matrix(state, &matrix_number)
                .ok_or_else(|| Error::UnknownMatrix(matrix_number.clone()))?;
            if existing.status == UserStatus::Registered {
                return Err(Error::AlreadyRegistered(matrix_number.clone()));
            }
            if find_by_username(state, &username).is_some() {
                return Err(Error::UsernameTaken(username.clone()));
            }
            let user = UserRecord {
                email: Some(email),
                username: Some(username),
                credential: Some(credential),
                role: Role::Member,
                status: UserStatus::Registered,
                ..existing.clone()
            };
            Ok((Mutation::new().with(Op::PutUser(user.clone())), user))
        })
    }

    /// Create the first administrator. Fails once any administrator exists.
    pub fn bootstrap_admin(&self, req: AdminBootstrap) -> Result<UserRecord> {
        let matrix_number = normalize_matrix(&req.matrix_number)?;
        let full_name = normalize_full_name(&req.full_name)?;
        let username = normalize_username(&req.username)?;
        check_password(&req.password)?;
        if self.snapshot().users.values().any(|u| u.role == Role::Admin) {
            return Err(Error::AdminExists);
        }
        let credential = Credential::derive(&req.password, self.config.password_iterations);
        self.store.write(|state| {
            if state.users.values().any(|u| u.role == Role::Admin) {
                return Err(Error::AdminExists);
            }
            if find_by_matrix(state, &matrix_number).is_some() {
                return Err(Error::DuplicateMatrix(matrix_number.clone()));
            }
            if find_by_username(state, &username).is_some() {
                return Err(Error::UsernameTaken(username.clone()));
            }
            let user = UserRecord {
                user_id: UserId::generate(),
                matrix_number: matrix_number.clone(),
                full_name,
                degree: None,
                email: None,
                username: Some(username),
                credential: Some(credential),
                role: Role::Admin,
                status: UserStatus::Registered,
            };
            Ok((Mutation::new().with(Op::PutUser(user.clone())), user))
        })
    }

    /// Check a username and password and open a session.
    ///
    /// Unknown users and wrong passwords fail identically, and both run one
    /// key derivation, so the response reveals nothing about which it was.
    pub fn login(&self, username: &str, password: &str) -> Result<Session> {
        let state = self.snapshot();
        let user = normalize_username(username)
            .ok()
            .and_then(|u| find_by_username(&state, &u).cloned());
        let verified = match user.as_ref().and_then(|u| u.credential.as_ref()) {
            Some(cred) => cred.verify(password),
            None => {
                let _ = Credential::derive_with_salt(password, [0; 16], self.config.password_iterations);
                false
            }
        };
        let user = match user {
            Some(u) if verified => u,
            _ => return Err(Error::AuthFailed),
        };

        let token = new_token();
        let now = self.clock.now();
        let record = SessionRecord {
            token_digest: TokenDigest::of(&token),
            user_id: user.user_id.clone(),
            role: user.role,
            created_at: now,
            expires_at: now.plus_seconds(self.config.session_lifetime_secs),
        };
        self.store.write(|state| {
            // The credential may have changed while we were hashing.
            let current = state.users.get(&user.user_id);
            if current.and_then(|u| u.credential.as_ref()) != user.credential.as_ref() {
                return Err(Error::AuthFailed);
            }
            let mut m = Mutation::new();
            for expired in state.sessions.values().filter(|s| !s.is_live(now)) {
                m.push(Op::DeleteSession(expired.token_digest.clone()));
            }
            m.push(Op::PutSession(record.clone()));
            Ok((m, ()))
        })?;
        Ok(Session {
            token,
            user_id: record.user_id,
            username: user.username.unwrap_or_default(),
            role: record.role,
            created_at: record.created_at,
            expires_at: record.expires_at,
        })
    }

    /// End a session. Unknown tokens are ignored.
    pub fn logout(&self, token: &str) -> Result<()> {
        let digest = TokenDigest::of(token);
        self.store.write(|state| {
            let mut m = Mutation::new();
            if state.sessions.contains_key(&digest) {
                m.push(Op::DeleteSession(digest.clone()));
            }
            Ok((m, ()))
        })
    }

    pub fn authenticate(&self, token: &str) -> Result<SessionRecord> {
        let state = self.snapshot();
        let session = state
            .sessions
            .get(&TokenDigest::of(token))
            .ok_or(Error::Unauthenticated)?;
        if !session.is_live(self.clock.now()) || !state.users.contains_key(&session.user_id) {
            return Err(Error::Unauthenticated);
        }
        Ok(session.clone())
    }

    /// Resolve an optional bearer token into a caller.
    pub fn caller(&self, token: Option<&str>) -> Result<Caller> {
        match token {
            None => Ok(Caller::Guest),
            Some(t) => self.authenticate(t).map(Caller::Session),
        }
    }

    /// Replace the caller's password and sign out their other sessions.
    pub fn change_password(&self, caller: &Caller, old_password: &str, new_password: &str) -> Result<()> {
        let session = caller.require_session()?;
        check_password(new_password)?;
        let state = self.snapshot();
        let user = state.users.get(&session.user_id).ok_or(Error::Unauthenticated)?;
        let old = user.credential.clone().ok_or(Error::AuthFailed)?;
        if !old.verify(old_password) {
            return Err(Error::AuthFailed);
        }
        let fresh = Credential::derive(new_password, self.config.password_iterations);
        self.store.write(|state| {
            let user = state.users.get(&session.user_id).ok_or(Error::Unauthenticated)?;
            if user.credential.as_ref() != Some(&old) {
                return Err(Error::AuthFailed);
            }
            let mut m = Mutation::new();
            m.push(Op::PutUser(UserRecord {
                credential: Some(fresh),
                ..user.clone()
            }));
            for s in sessions_of(state, &session.user_id) {
                if s.token_digest != session.token_digest {
                    m.push(Op::DeleteSession(s.token_digest.clone()));
                }
            }
            Ok((m, ()))
        })
    }

    pub fn edit_user(&self, caller: &Caller, id: &UserId, patch: UserPatch) -> Result<UserRecord> {
        caller.require_admin()?;
        let matrix = patch.matrix_number.as_deref().map(normalize_matrix).transpose()?;
        let full_name = patch.full_name.as_deref().map(normalize_full_name).transpose()?;
        let email = patch.email.as_deref().map(normalize_email).transpose()?;
        self.store.write(|state| {
            let user = state
                .users
                .get(id)
                .ok_or_else(|| Error::NotFound(format!("user {id}")))?;
            if let Some(m) = &matrix {
                if find_by_matrix(state, m).is_some_and(|other| other.user_id != *id) {
                    return Err(Error::DuplicateMatrix(m.clone()));
                }
            }
            let updated = UserRecord {
                matrix_number: matrix.unwrap_or_else(|| user.matrix_number.clone()),
                full_name: full_name.unwrap_or_else(|| user.full_name.clone()),
                degree: patch.degree.or(user.degree),
                email: email.or_else(|| user.email.clone()),
                ..user.clone()
            };
            let mut m = Mutation::new();
            if updated != *user {
                m.push(Op::PutUser(updated.clone()));
            }
            Ok((m, updated))
        })
    }

    /// Remove a user with their sessions and favorites.
    pub fn delete_user(&self, caller: &Caller, id: &UserId) -> Result<()> {
        caller.require_admin()?;
        self.store.write(|state| {
            let user = state
                .users
                .get(id)
                .ok_or_else(|| Error::NotFound(format!("user {id}")))?;
            if user.role == Role::Admin
                && state.users.values().filter(|u| u.role == Role::Admin).count() == 1
            {
                return Err(Error::LastAdmin);
            }
            let mut m = Mutation::new();
            m.push(Op::DeleteUser(id.clone()));
            for s in sessions_of(state, id) {
                m.push(Op::DeleteSession(s.token_digest.clone()));
            }
            if state.favorites.contains_key(id) {
                m.push(Op::DeleteFavorites(id.clone()));
            }
            Ok((m, ()))
        })
    }

    /// Users matching every given criterion, by matrix number.
    pub fn find_users(&self, caller: &Caller, query: &UserQuery) -> Result<Vec<UserRecord>> {
        caller.require_admin()?;
        let matrix = query
            .matrix_number
            .as_deref()
            .map(|m| m.trim().to_ascii_uppercase())
            .filter(|m| !m.is_empty());
        let name = query
            .name_substring
            .as_deref()
            .map(|n| n.trim().to_lowercase())
            .filter(|n| !n.is_empty());
        if matrix.is_none() && name.is_none() {
            return Err(Error::validation(
                "search by matrix number and/or name",
            ));
        }
        let state = self.snapshot();
        let mut found: Vec<UserRecord> = state
            .users
            .values()
            .filter(|u| matrix.as_ref().is_none_or(|m| u.matrix_number == *m))
            .filter(|u| name.as_ref().is_none_or(|n| u.full_name.to_lowercase().contains(n)))
            .cloned()
            .collect();
        found.sort_by(|a, b| a.matrix_number.cmp(&b.matrix_number));
        Ok(found)
    }

    /// Number of unexpired sessions belonging to `user`.
    pub fn live_sessions(&self, user: &UserId) -> usize {
        let now = self.clock.now();
        let state = self.snapshot();
        sessions_of(&state, user).filter(|s| s.is_live(now)).count()
    }
}
