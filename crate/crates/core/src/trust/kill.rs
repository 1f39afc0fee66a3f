use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::network::SensorId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KillAction {
    Set,
    Clear,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillEvent {
    pub timestamp: u64,
    pub sensor: SensorId,
    pub action: KillAction,
    pub note: String,
}

/// Operator kill switches. A sensor in `killed` has `gamma = 0`; every other
/// sensor has `gamma = 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillSwitchState {
    killed: BTreeSet<SensorId>,
    event_log: Vec<KillEvent>,
}

impl KillSwitchState {
    pub fn new() -> Self {
        Self::default()
    }

    /// All sensors alive except `killed`, with one log entry each at
    /// timestamps 0, 1, ...
    pub fn with_killed(killed: impl IntoIterator<Item = SensorId>) -> Self {
        let mut state = Self::new();
        for id in killed {
            let ts = state.event_log.len() as u64;
            state.kill(id, ts, "");
        }
        state
    }

    /// Sets `gamma = 0`. Repeating a kill is harmless but still logged.
    pub fn kill(&mut self, sensor: SensorId, timestamp: u64, note: impl Into<String>) {
        self.killed.insert(sensor.clone());
        self.event_log.push(KillEvent {
            timestamp,
            sensor,
            action: KillAction::Set,
            note: note.into(),
        });
    }

    /// Restores `gamma = 1`.
    pub fn revive(&mut self, sensor: SensorId, timestamp: u64, note: impl Into<String>) {
        self.killed.remove(&sensor);
        self.event_log.push(KillEvent {
            timestamp,
            sensor,
            action: KillAction::Clear,
            note: note.into(),
        });
    }

    pub fn gamma(&self, sensor: &SensorId) -> u8 {
        u8::from(!self.killed.contains(sensor))
    }

    pub fn is_killed(&self, sensor: &SensorId) -> bool {
        self.killed.contains(sensor)
    }

    pub fn killed(&self) -> &BTreeSet<SensorId> {
        &self.killed
    }

    pub fn event_log(&self) -> &[KillEvent] {
        &self.event_log
    }
}
