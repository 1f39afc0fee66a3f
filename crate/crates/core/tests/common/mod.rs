#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use kljn_trust::{SensorId, Topology};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn id(s: &str) -> SensorId {
    SensorId::new(s).unwrap()
}

/// Term-by-term `r + r^2 + ... + r^n`.
pub fn naive_partial_sum(r: f64, n: u64) -> f64 {
    let mut term = 1.0;
    let mut total = 0.0;
    for _ in 0..n {
        term *= r;
        total += term;
    }
    total
}

/// Random network of `n` sensors named `s000`, `s001`, ..., with each pair
/// wired independently with probability `p`. Wireless sets are derived.
pub fn random_topology<R: Rng>(rng: &mut R, n: usize, p: f64) -> Topology {
    let names: Vec<SensorId> = (0..n).map(|k| id(&format!("s{k:03}"))).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((names[a].clone(), names[b].clone()));
            }
        }
    }
    Topology::new(names, edges)
        .unwrap()
        .with_derived_wireless_sets()
}

/// Like [`random_topology`] but with about `degree` wired links per sensor,
/// for large networks.
pub fn sparse_random_topology<R: Rng>(rng: &mut R, n: usize, degree: usize) -> Topology {
    let names: Vec<SensorId> = (0..n).map(|k| id(&format!("s{k:04}"))).collect();
    let mut edges = BTreeSet::new();
    while edges.len() < n * degree / 2 {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    Topology::new(
        names.clone(),
        edges
            .into_iter()
            .map(|(a, b)| (names[a].clone(), names[b].clone())),
    )
    .unwrap()
    .with_derived_wireless_sets()
}

/// Wired and wireless peers of a sensor to be attached.
pub struct Attachment {
    pub name: SensorId,
    pub kljn: Vec<SensorId>,
    pub wireless: Vec<SensorId>,
}

/// Adds new sensors to a topology that has explicit wireless sets. Each new
/// sensor gets exactly the given KLJN links and wireless set; its wireless
/// peers list it back.
pub fn attach(t: &Topology, new: &[Attachment]) -> Topology {
    let mut sensors: Vec<SensorId> = t.sensors().iter().cloned().collect();
    let mut edges: Vec<(SensorId, SensorId)> = t
        .kljn_edges()
        .iter()
        .map(|e| (e.lo().clone(), e.hi().clone()))
        .collect();
    let mut sets: BTreeMap<SensorId, BTreeSet<SensorId>> = t
        .sensors()
        .iter()
        .map(|s| (s.clone(), t.peer_sets(s).unwrap().wireless))
        .collect();
    for a in new {
        sensors.push(a.name.clone());
        for k in &a.kljn {
            edges.push((a.name.clone(), k.clone()));
        }
        for w in &a.wireless {
            sets.entry(w.clone()).or_default().insert(a.name.clone());
        }
        sets.insert(a.name.clone(), a.wireless.iter().cloned().collect());
    }
    Topology::new(sensors, edges)
        .unwrap()
        .with_wireless_sets(sets)
}

/// Picks `k` distinct elements.
pub fn pick<R: Rng>(rng: &mut R, from: &[SensorId], k: usize) -> Vec<SensorId> {
    from.choose_multiple(rng, k).cloned().collect()
}
