//! Network-wide key establishment and the operator's view of it.
//!
//! Wired pairs run a KLJN session each (pre-authorized by the planned
//! topology); every other covered pair gets an abstract wireless exchange.
//! The resulting [`NetworkKeyState`] is persisted as JSON and is the unit the
//! operator applies kill events to and builds trust reports from.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kljn::{self, Attacker, KljnSessionConfig};
use crate::network::{KljnEdge, SensorId, Topology};
use crate::trust::{
    Evaluator, KillEvent, KillSwitchState, RankedPeer, TrustCoefficients, TrustMatrix,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Kljn,
    Wireless,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Failed,
    Revoked,
}

/// Key-exchange record for one sensor pair, `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub a: SensorId,
    pub b: SensorId,
    pub channel: Channel,
    /// Opaque key identifier; absent when the exchange failed.
    pub key_id: Option<String>,
    pub established_at: u64,
    pub status: RecordStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

impl PairRecord {
    pub fn touches(&self, id: &SensorId) -> bool {
        &self.a == id || &self.b == id
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstablishOptions {
    /// Key length of every KLJN session.
    pub key_bits: usize,
    /// Active attackers on specific wired links.
    pub attacks: Vec<EdgeAttack>,
}

impl Default for EstablishOptions {
    fn default() -> Self {
        EstablishOptions {
            key_bits: 128,
            attacks: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeAttack {
    pub a: SensorId,
    pub b: SensorId,
    pub attacker: Attacker,
}

/// Persisted key-establishment state of a whole network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkKeyState {
    pub topology: Topology,
    pub master_seed: u64,
    pub session: KljnSessionConfig,
    pub key_bits: usize,
    pub records: Vec<PairRecord>,
    pub kill: KillSwitchState,
    /// Next logical timestamp.
    pub clock: u64,
}

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for part in parts {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.finalize().into()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of the KLJN session on `edge`, derived from the master seed.
pub fn edge_seed(master_seed: u64, edge: &KljnEdge) -> u64 {
    let d = digest(&[
        b"kljn-edge-seed",
        &master_seed.to_le_bytes(),
        edge.lo().as_str().as_bytes(),
        edge.hi().as_str().as_bytes(),
    ]);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn kljn_key_id(edge: &KljnEdge, key_bits: &[bool]) -> String {
    let packed: Vec<u8> = key_bits.iter().map(|b| u8::from(*b)).collect();
    let d = digest(&[
        b"kljn-key-id",
        edge.lo().as_str().as_bytes(),
        edge.hi().as_str().as_bytes(),
        &packed,
    ]);
    hex(&d[..16])
}

fn wireless_key_id(master_seed: u64, a: &SensorId, b: &SensorId) -> String {
    let d = digest(&[
        b"wireless-key-id",
        &master_seed.to_le_bytes(),
        a.as_str().as_bytes(),
        b.as_str().as_bytes(),
    ]);
    hex(&d[..16])
}

enum SessionOutcome {
    Key(String),
    Failed(String),
}

fn run_edge(
    cfg: &KljnSessionConfig,
    master_seed: u64,
    key_bits: usize,
    edge: &KljnEdge,
    attacker: Option<Attacker>,
) -> SessionOutcome {
    let session = cfg.clone().with_seed(edge_seed(master_seed, edge));
    match kljn::run_key_exchange(&session, key_bits, attacker) {
        Ok(res) if res.attack_detected => SessionOutcome::Failed(format!(
            "active attack detected in period {}",
            res.detection_period.unwrap_or_default()
        )),
        Ok(res) => SessionOutcome::Key(kljn_key_id(edge, &res.key_bits)),
        Err(e) => SessionOutcome::Failed(e.to_string()),
    }
}

/// Runs one KLJN session per wired edge and records one wireless exchange
/// per remaining covered pair. A topology without wireless sets gets the
/// full-mesh complement first.
///
/// Sessions run in parallel; the state is a pure function of the inputs.
pub fn establish_network_keys(
    t: &Topology,
    cfg: &KljnSessionConfig,
    master_seed: u64,
    opts: &EstablishOptions,
) -> Result<NetworkKeyState> {
    cfg.validate()?;
    if opts.key_bits == 0 {
        return Err(Error::Domain("key_bits must be at least 1".into()));
    }
    let topology = if t.has_wireless_sets() {
        t.clone()
    } else {
        t.with_derived_wireless_sets()
    };
    let report = topology.validate();
    if !report.is_valid() {
        return Err(Error::InvalidTopology(report));
    }

    let mut attacks = BTreeMap::new();
    for atk in &opts.attacks {
        let edge = KljnEdge::new(atk.a.clone(), atk.b.clone())?;
        if !topology.kljn_edges().contains(&edge) {
            return Err(Error::Domain(format!(
                "attacked link {edge} is not a KLJN edge"
            )));
        }
        attacks.insert(edge, atk.attacker);
    }

    let edges: Vec<&KljnEdge> = topology.kljn_edges().iter().collect();
    let outcomes: BTreeMap<&KljnEdge, SessionOutcome> = edges
        .par_iter()
        .map(|edge| {
            let out = run_edge(
                cfg,
                master_seed,
                opts.key_bits,
                edge,
                attacks.get(*edge).copied(),
            );
            (*edge, out)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let sensors: Vec<&SensorId> = topology.sensors().iter().collect();
    let mut records = Vec::new();
    let mut clock = 0u64;
    for (n, a) in sensors.iter().enumerate() {
        for b in &sensors[n + 1..] {
            let edge = KljnEdge::new((*a).clone(), (*b).clone())?;
            let record = if let Some(outcome) = outcomes.get(&edge) {
                let (key_id, status, failure) = match outcome {
                    SessionOutcome::Key(id) => (Some(id.clone()), RecordStatus::Ok, None),
                    SessionOutcome::Failed(why) => (None, RecordStatus::Failed, Some(why.clone())),
                };
                PairRecord {
                    a: (*a).clone(),
                    b: (*b).clone(),
                    channel: Channel::Kljn,
                    key_id,
                    established_at: clock,
                    status,
                    failure,
                }
            } else {
                let covered = topology.peer_sets(a)?.wireless.contains(*b)
                    || topology.peer_sets(b)?.wireless.contains(*a);
                if !covered {
                    continue;
                }
                PairRecord {
                    a: (*a).clone(),
                    b: (*b).clone(),
                    channel: Channel::Wireless,
                    key_id: Some(wireless_key_id(master_seed, a, b)),
                    established_at: clock,
                    status: RecordStatus::Ok,
                    failure: None,
                }
            };
            records.push(record);
            clock += 1;
        }
    }

    Ok(NetworkKeyState {
        topology,
        master_seed,
        session: cfg.clone(),
        key_bits: opts.key_bits,
        records,
        kill: KillSwitchState::new(),
        clock,
    })
}

impl NetworkKeyState {
    pub fn from_json(text: &str) -> Result<Self> {
        let state: NetworkKeyState = serde_json::from_str(text)?;
        state.check()?;
        Ok(state)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serialization is infallible")
    }

    /// Checks the channel classification and revocation invariants.
    pub fn check(&self) -> Result<()> {
        let report = self.topology.validate();
        if !report.is_valid() {
            return Err(Error::InvalidTopology(report));
        }
        for r in &self.records {
            if r.a >= r.b || !self.topology.contains(&r.a) || !self.topology.contains(&r.b) {
                return Err(Error::Domain(format!("malformed record {}-{}", r.a, r.b)));
            }
            let wired = self.topology.is_kljn_pair(&r.a, &r.b);
            if wired != (r.channel == Channel::Kljn) {
                return Err(Error::Domain(format!(
                    "record {}-{} channel disagrees with topology",
                    r.a, r.b
                )));
            }
            let killed = self.kill.is_killed(&r.a) || self.kill.is_killed(&r.b);
            if killed && r.status != RecordStatus::Revoked {
                return Err(Error::Domain(format!(
                    "record {}-{} touches a killed sensor but is not revoked",
                    r.a, r.b
                )));
            }
        }
        if let Some(unknown) = self
            .kill
            .killed()
            .iter()
            .find(|id| !self.topology.contains(id))
        {
            return Err(Error::UnknownSensor(unknown.to_string()));
        }
        Ok(())
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.records.iter().filter(|r| r.channel == channel).count()
    }

    /// Marks `sensor` compromised and revokes every record touching it.
    /// Returns how many records changed to revoked. Repeating a kill logs
    /// another event and revokes nothing new.
    pub fn apply_kill_event(
        &mut self,
        sensor: &SensorId,
        note: impl Into<String>,
    ) -> Result<usize> {
        if !self.topology.contains(sensor) {
            return Err(Error::UnknownSensor(sensor.to_string()));
        }
        self.kill.kill(sensor.clone(), self.clock, note);
        self.clock += 1;
        let mut revoked = 0;
        for r in self.records.iter_mut().filter(|r| r.touches(sensor)) {
            if r.status != RecordStatus::Revoked {
                r.status = RecordStatus::Revoked;
                revoked += 1;
            }
        }
        Ok(revoked)
    }
}

/// Everything an operator distributes after an establishment or kill event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustReport {
    pub coefficients: TrustCoefficients,
    pub matrix: TrustMatrix,
    pub rankings: BTreeMap<SensorId, Vec<RankedPeer>>,
    pub records: Vec<PairRecord>,
    pub kill_log: Vec<KillEvent>,
}

pub fn trust_report(state: &NetworkKeyState, coef: &TrustCoefficients) -> Result<TrustReport> {
    let ev = Evaluator::new(&state.topology, coef, &state.kill)?;
    let rankings = ev
        .order()
        .iter()
        .map(|id| Ok((id.clone(), ev.rank(id)?)))
        .collect::<Result<_>>()?;
    Ok(TrustReport {
        coefficients: *coef,
        matrix: ev.matrix(),
        rankings,
        records: state.records.clone(),
        kill_log: state.kill.event_log().to_vec(),
    })
}
