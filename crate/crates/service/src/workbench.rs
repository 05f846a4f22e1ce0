use std::sync::{RwLock, RwLockReadGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use diagwork_core::Session;
use serde::Serialize;

/// Snapshot version counters. `version` counts every accepted mutation;
/// the other two move only when α or the registry actually change.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Versions {
    pub version: u64,
    pub alpha_version: u64,
    pub registry_version: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StoredReport {
    pub id: u64,
    pub kind: &'static str,
    pub enumerator: String,
    pub verdict: bool,
    #[serde(skip)]
    pub body: serde_json::Value,
}

pub struct State {
    pub session: Session,
    pub versions: Versions,
    pub reports: Vec<StoredReport>,
}

/// One live session behind a single writer lock. Readers see α, the
/// registry and the counters from the same instant.
pub struct Workbench {
    id: String,
    state: RwLock<State>,
}

impl Default for Workbench {
    fn default() -> Self {
        Workbench::new(Session::new())
    }
}

impl Workbench {
    pub fn new(session: Session) -> Self {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos());
        Workbench {
            id: format!("{:x}-{:x}", std::process::id(), nanos),
            state: RwLock::new(State {
                session,
                versions: Versions::default(),
                reports: Vec::new(),
            }),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn read(&self) -> RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Runs `f` as one mutation. Core operations reject before touching
    /// state, so on `Err` nothing changed and no counter moves.
    pub fn mutate<R, E>(
        &self,
        f: impl FnOnce(&mut Session) -> Result<R, E>,
    ) -> Result<(R, Versions), E> {
        let mut guard = self.state.write().unwrap_or_else(|e| e.into_inner());
        let state = &mut *guard;
        let alpha_before = state.session.alpha().len();
        let registry_before = state.session.registry().len();
        let out = f(&mut state.session)?;
        let v = &mut state.versions;
        v.version += 1;
        if state.session.alpha().len() != alpha_before {
            v.alpha_version += 1;
        }
        if state.session.registry().len() != registry_before {
            v.registry_version += 1;
        }
        Ok((out, state.versions))
    }

    /// Swaps in a whole new session; every counter moves.
    pub fn replace(&self, session: Session) -> Versions {
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        state.session = session;
        let v = &mut state.versions;
        v.version += 1;
        v.alpha_version += 1;
        v.registry_version += 1;
        state.versions
    }

    pub fn store_report(
        &self,
        kind: &'static str,
        enumerator: String,
        verdict: bool,
        body: serde_json::Value,
    ) -> u64 {
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        let id = state.reports.len() as u64;
        state.reports.push(StoredReport {
            id,
            kind,
            enumerator,
            verdict,
            body,
        });
        id
    }
}
