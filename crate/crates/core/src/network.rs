//! Hybrid wired/wireless sensor network model.
//!
//! A [`Topology`] holds the sensors, the undirected wired KLJN links between
//! them and, optionally, an explicit wireless exchange set per sensor. Every
//! sensor classifies each peer as either KLJN or wireless, never both.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Printable token naming one sensor. Ordering is lexicographic over the
/// token and is used wherever a fixed convention between two sensors is
/// needed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SensorId(String);

impl SensorId {
    pub fn new(token: impl Into<String>) -> Result<Self> {
        let token = token.into();
        let ok = !token.is_empty()
            && token
                .chars()
                .all(|ch| !ch.is_whitespace() && !ch.is_control());
        if ok {
            Ok(SensorId(token))
        } else {
            Err(Error::InvalidSensorId(token))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SensorId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        SensorId::new(value)
    }
}

impl TryFrom<&str> for SensorId {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        SensorId::new(value)
    }
}

impl From<SensorId> for String {
    fn from(id: SensorId) -> Self {
        id.0
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Undirected wired KLJN link, stored with the smaller id first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KljnEdge {
    lo: SensorId,
    hi: SensorId,
}

impl KljnEdge {
    pub fn new(a: SensorId, b: SensorId) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(KljnEdge { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Ok(KljnEdge { lo: b, hi: a }),
            std::cmp::Ordering::Equal => Err(Error::SelfLoop(a.0)),
        }
    }

    pub fn lo(&self) -> &SensorId {
        &self.lo
    }

    pub fn hi(&self) -> &SensorId {
        &self.hi
    }

    pub fn touches(&self, id: &SensorId) -> bool {
        &self.lo == id || &self.hi == id
    }

    /// The endpoint opposite `id`, if `id` is an endpoint.
    pub fn other(&self, id: &SensorId) -> Option<&SensorId> {
        if &self.lo == id {
            Some(&self.hi)
        } else if &self.hi == id {
            Some(&self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for KljnEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// Sensors, wired KLJN links and per-sensor wireless exchange sets.
///
/// Immutable once built. Wired links are undirected by construction, so
/// KLJN adjacency is always symmetric. Wireless sets are either explicit
/// (from a document) or derived with [`Topology::with_derived_wireless_sets`];
/// a sensor with no entry has an empty wireless set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyDocument", into = "TopologyDocument")]
pub struct Topology {
    sensors: BTreeSet<SensorId>,
    kljn_edges: BTreeSet<KljnEdge>,
    wireless_sets: BTreeMap<SensorId, BTreeSet<SensorId>>,
}

impl Topology {
    /// Builds a topology without wireless sets. Fails on duplicate ids,
    /// self-loops and edges naming unknown sensors.
    pub fn new<S, E>(sensors: S, kljn_edges: E) -> Result<Self>
    where
        S: IntoIterator<Item = SensorId>,
        E: IntoIterator<Item = (SensorId, SensorId)>,
    {
        let mut set = BTreeSet::new();
        for id in sensors {
            if set.contains(&id) {
                return Err(Error::DuplicateSensor(id.0));
            }
            set.insert(id);
        }
        let mut edges = BTreeSet::new();
        for (a, b) in kljn_edges {
            for end in [&a, &b] {
                if !set.contains(end) {
                    return Err(Error::UnknownEdgeEndpoint(
                        a.0.clone(),
                        b.0.clone(),
                        end.0.clone(),
                    ));
                }
            }
            edges.insert(KljnEdge::new(a, b)?);
        }
        Ok(Topology {
            sensors: set,
            kljn_edges: edges,
            wireless_sets: BTreeMap::new(),
        })
    }

    /// Replaces the wireless sets with explicit ones. No checks are made here;
    /// run [`Topology::validate`] to find disjointness or reference problems.
    pub fn with_wireless_sets(
        mut self,
        sets: impl IntoIterator<Item = (SensorId, BTreeSet<SensorId>)>,
    ) -> Self {
        self.wireless_sets = sets.into_iter().filter(|(_, s)| !s.is_empty()).collect();
        self
    }

    /// Full-mesh complement rule: every sensor exchanges wirelessly with each
    /// peer it is not KLJN-linked to. Any explicit sets are replaced.
    pub fn with_derived_wireless_sets(&self) -> Self {
        let mut sets = BTreeMap::new();
        for id in &self.sensors {
            let kljn = self.kljn_set(id);
            let wireless: BTreeSet<SensorId> = self
                .sensors
                .iter()
                .filter(|peer| *peer != id && !kljn.contains(*peer))
                .cloned()
                .collect();
            sets.insert(id.clone(), wireless);
        }
        self.clone().with_wireless_sets(sets)
    }

    pub fn sensors(&self) -> &BTreeSet<SensorId> {
        &self.sensors
    }

    pub fn kljn_edges(&self) -> &BTreeSet<KljnEdge> {
        &self.kljn_edges
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn contains(&self, id: &SensorId) -> bool {
        self.sensors.contains(id)
    }

    pub fn has_wireless_sets(&self) -> bool {
        !self.wireless_sets.is_empty()
    }

    /// Looks up a sensor by token.
    pub fn sensor(&self, token: &str) -> Result<&SensorId> {
        self.sensors
            .iter()
            .find(|id| id.as_str() == token)
            .ok_or_else(|| Error::UnknownSensor(token.to_string()))
    }

    pub(crate) fn kljn_set(&self, id: &SensorId) -> BTreeSet<&SensorId> {
        self.kljn_edges.iter().filter_map(|e| e.other(id)).collect()
    }

    pub(crate) fn wireless_set(&self, id: &SensorId) -> BTreeSet<&SensorId> {
        self.wireless_sets
            .get(id)
            .map(|s| s.iter().collect())
            .unwrap_or_default()
    }

    pub(crate) fn wireless_sets(&self) -> &BTreeMap<SensorId, BTreeSet<SensorId>> {
        &self.wireless_sets
    }

    pub fn is_kljn_pair(&self, a: &SensorId, b: &SensorId) -> bool {
        KljnEdge::new(a.clone(), b.clone())
            .map(|e| self.kljn_edges.contains(&e))
            .unwrap_or(false)
    }

    /// The KLJN and wireless exchange sets of sensor `id`.
    pub fn peer_sets(&self, id: &SensorId) -> Result<PeerSets> {
        if !self.contains(id) {
            return Err(Error::UnknownSensor(id.0.clone()));
        }
        Ok(PeerSets {
            kljn: self.kljn_set(id).into_iter().cloned().collect(),
            wireless: self.wireless_set(id).into_iter().cloned().collect(),
        })
    }

    /// Checks every topology invariant. Problems are returned as data.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        // Construction already rules these out; kept so hand-built values
        // still get a complete report.
        for edge in &self.kljn_edges {
            for end in [edge.lo(), edge.hi()] {
                if !self.contains(end) {
                    report.error(
                        IssueCode::UnknownReference,
                        format!("KLJN edge {edge} references unknown sensor {end}"),
                        [edge.lo().clone(), edge.hi().clone()],
                    );
                }
            }
        }

        for (owner, set) in &self.wireless_sets {
            if !self.contains(owner) {
                report.error(
                    IssueCode::UnknownReference,
                    format!("wireless set declared for unknown sensor {owner}"),
                    [owner.clone()],
                );
            }
            if set.contains(owner) {
                report.error(
                    IssueCode::SelfInWirelessSet,
                    format!("sensor {owner} lists itself in its wireless set"),
                    [owner.clone()],
                );
            }
            let kljn = self.kljn_set(owner);
            for peer in set {
                if !self.contains(peer) {
                    report.error(
                        IssueCode::UnknownReference,
                        format!("wireless set of {owner} references unknown sensor {peer}"),
                        [owner.clone(), peer.clone()],
                    );
                }
                if kljn.contains(peer) {
                    report.error(
                        IssueCode::NotDisjoint,
                        format!("{peer} is in both the KLJN and wireless sets of {owner}"),
                        [owner.clone(), peer.clone()],
                    );
                }
                let reciprocal = self
                    .wireless_sets
                    .get(peer)
                    .is_some_and(|s| s.contains(owner));
                if peer != owner && self.contains(peer) && !reciprocal {
                    report.warning(
                        IssueCode::AsymmetricWireless,
                        format!("{peer} is in the wireless set of {owner} but not vice versa"),
                        [owner.clone(), peer.clone()],
                    );
                }
            }
        }

        if self.has_wireless_sets() {
            for id in &self.sensors {
                let kljn = self.kljn_set(id);
                let wireless = self.wireless_set(id);
                if kljn.len() + wireless.len() + 1 == self.sensors.len() {
                    continue;
                }
                let uncovered: Vec<SensorId> = self
                    .sensors
                    .iter()
                    .filter(|p| *p != id && !kljn.contains(p) && !wireless.contains(p))
                    .cloned()
                    .collect();
                if !uncovered.is_empty() {
                    let names: Vec<&str> = uncovered.iter().map(SensorId::as_str).collect();
                    report.warning(
                        IssueCode::UncoveredPeers,
                        format!("{id} has no key exchange with {}", names.join(",")),
                        std::iter::once(id.clone()).chain(uncovered),
                    );
                }
            }
        }

        report
    }

    /// Parses a topology document. See [`TopologyDocument`] for the format.
    pub fn from_json(text: &str) -> Result<Self> {
        parse_topology(text)
    }

    /// Serializes to the topology document format, pretty-printed.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serialization is infallible")
    }
}

/// The two exchange sets of one sensor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerSets {
    pub kljn: BTreeSet<SensorId>,
    pub wireless: BTreeSet<SensorId>,
}

/// JSON topology document.
///
/// ```json
/// { "sensors": ["A", "B"], "kljn_edges": [["A", "B"]], "wireless_sets": { "A": [] } }
/// ```
///
/// `wireless_sets` is optional. The serializer emits keys in this order with
/// sensors and edges sorted.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDocument {
    pub sensors: Vec<SensorId>,
    #[serde(default)]
    pub kljn_edges: Vec<[SensorId; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wireless_sets: Option<BTreeMap<SensorId, BTreeSet<SensorId>>>,
}

impl TryFrom<TopologyDocument> for Topology {
    type Error = Error;

    fn try_from(doc: TopologyDocument) -> Result<Self> {
        let topology = Topology::new(doc.sensors, doc.kljn_edges.into_iter().map(|[a, b]| (a, b)))?;
        Ok(match doc.wireless_sets {
            Some(sets) => topology.with_wireless_sets(sets),
            None => topology,
        })
    }
}

impl From<Topology> for TopologyDocument {
    fn from(t: Topology) -> Self {
        TopologyDocument {
            sensors: t.sensors.into_iter().collect(),
            kljn_edges: t.kljn_edges.into_iter().map(|e| [e.lo, e.hi]).collect(),
            wireless_sets: if t.wireless_sets.is_empty() {
                None
            } else {
                Some(t.wireless_sets)
            },
        }
    }
}

/// Parses a topology document. Wireless sets are taken as given; nothing is
/// derived.
pub fn parse_topology(text: &str) -> Result<Topology> {
    let doc: TopologyDocument = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Topology::try_from(doc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueCode {
    UnknownReference,
    NotDisjoint,
    SelfInWirelessSet,
    AsymmetricWireless,
    UncoveredPeers,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub message: String,
    pub entities: Vec<SensorId>,
}

/// Every violated invariant of a topology. `errors` is empty iff the
/// topology is valid; `warnings` never affect validity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(
        &mut self,
        code: IssueCode,
        message: String,
        entities: impl IntoIterator<Item = SensorId>,
    ) {
        self.errors.push(Issue {
            code,
            message,
            entities: entities.into_iter().collect(),
        });
    }

    fn warning(
        &mut self,
        code: IssueCode,
        message: String,
        entities: impl IntoIterator<Item = SensorId>,
    ) {
        self.warnings.push(Issue {
            code,
            message,
            entities: entities.into_iter().collect(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.errors.is_empty() {
            return write!(f, "valid ({} warnings)", self.warnings.len());
        }
        let msgs: Vec<&str> = self.errors.iter().map(|i| i.message.as_str()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}
