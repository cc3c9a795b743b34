//! Per-user favorite lists.

use serde::{Deserialize, Serialize};

use crate::auth::Caller;
use crate::catalog::PublicDissertation;
use crate::error::{Error, Result};
use crate::repository::Repository;
use crate::store::{Mutation, Op};
use crate::types::{DissertationId, UserId};

/// A user's saved dissertations in the order they were added.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FavoriteSet {
    pub user_id: UserId,
    pub items: Vec<DissertationId>,
}

impl Repository {
    /// Append `id` unless already present. Returns the resulting list.
    pub fn add_favorite(&self, caller: &Caller, id: &DissertationId) -> Result<Vec<DissertationId>> {
        let owner = caller.require_session()?.user_id.clone();
        self.store.write(|state| {
            if !state.dissertations.contains_key(id) {
                return Err(Error::NotFound(format!("dissertation {id}")));
            }
            let mut set = state.favorites.get(&owner).cloned().unwrap_or(FavoriteSet {
                user_id: owner.clone(),
                items: Vec::new(),
            });
            let mut m = Mutation::new();
            if !set.items.contains(id) {
                set.items.push(id.clone());
                m.push(Op::PutFavorites(set.clone()));
            }
            Ok((m, set.items))
        })
    }

    /// Drop every listed id; ids not in the list are ignored.
    pub fn remove_favorites(
        &self,
        caller: &Caller,
        ids: &[DissertationId],
    ) -> Result<Vec<DissertationId>> {
        let owner = caller.require_session()?.user_id.clone();
        self.store.write(|state| {
            let Some(current) = state.favorites.get(&owner) else {
                return Ok((Mutation::new(), Vec::new()));
            };
            let mut set = current.clone();
            set.items.retain(|x| !ids.contains(x));
            let mut m = Mutation::new();
            if set.items.len() != current.items.len() {
                m.push(if set.items.is_empty() {
                    Op::DeleteFavorites(owner.clone())
                } else {
                    Op::PutFavorites(set.clone())
                });
            }
            Ok((m, set.items))
        })
    }

    /// The caller's favorites, oldest first.
    pub fn list_favorites(&self, caller: &Caller) -> Result<Vec<PublicDissertation>> {
        let owner = &caller.require_session()?.user_id;
        let state = self.snapshot();
        Ok(state
            .favorites
            .get(owner)
            .map(|set| {
                set.items
                    .iter()
                    .filter_map(|id| state.dissertations.get(id))
                    .map(|d| d.public())
                    .collect()
            })
            .unwrap_or_default())
    }

    pub fn favorite_ids(&self, caller: &Caller) -> Result<Vec<DissertationId>> {
        let owner = &caller.require_session()?.user_id;
        Ok(self
            .snapshot()
            .favorites
            .get(owner)
            .map(|s| s.items.clone())
            .unwrap_or_default())
    }
}
