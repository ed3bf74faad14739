use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use uuid::Uuid;

use telemap_core::{Method, Pose, Retargeter};

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

#[derive(Debug)]
pub struct Session {
    pub retargeter: Retargeter,
    pub method: Method,
    pub last_master: Pose,
    pub last_slave: Pose,
}

impl Session {
    pub fn new(retargeter: Retargeter, method: Method) -> telemap_core::Result<Self> {
        retargeter.supports(method)?;
        Ok(Session {
            last_master: retargeter.master.origin_pose.clone(),
            last_slave: retargeter.slave.origin_pose.clone(),
            retargeter,
            method,
        })
    }
}

struct Entry {
    session: Arc<Mutex<Session>>,
    last_used: Instant,
}

/// In-memory sessions, dropped after `idle_timeout` without a request.
pub struct SessionStore {
    entries: Mutex<HashMap<Uuid, Entry>>,
    idle_timeout: Duration,
}

impl SessionStore {
    pub fn new(idle_timeout: Duration) -> Self {
        SessionStore {
            entries: Mutex::new(HashMap::new()),
            idle_timeout,
        }
    }

    pub fn insert(&self, session: Session) -> Uuid {
        let id = Uuid::new_v4();
        let mut entries = self.entries.lock().unwrap();
        self.evict(&mut entries);
        entries.insert(
            id,
            Entry {
                session: Arc::new(Mutex::new(session)),
                last_used: Instant::now(),
            },
        );
        id
    }

    pub fn get(&self, id: Uuid) -> Option<Arc<Mutex<Session>>> {
        let mut entries = self.entries.lock().unwrap();
        self.evict(&mut entries);
        let entry = entries.get_mut(&id)?;
        entry.last_used = Instant::now();
        Some(entry.session.clone())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn evict(&self, entries: &mut HashMap<Uuid, Entry>) {
        let timeout = self.idle_timeout;
        entries.retain(|_, e| e.last_used.elapsed() < timeout);
    }
}
