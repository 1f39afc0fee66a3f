//! The geometric key-exchange trust function.
//!
//! For an evaluator `i` and an evaluated peer `j`:
//!
//! ```text
//! G_ij = gamma_j                                   if j is KLJN-linked to i
//! G_ij = gamma_j * (S_K(a) + S_W(b) + S_Z(c))      otherwise
//! ```
//!
//! where `S_n(r) = r + r^2 + ... + r^n`, `K` counts KLJN peers shared by `i`
//! and `j`, `W` counts the rest of `j`'s KLJN peers and `Z` counts `j`'s
//! wireless peers other than `i`.

mod coefficients;
mod kill;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{SensorId, Topology};

pub use coefficients::{geometric_partial_sum, Provenance, Residuals, TierGaps, TrustCoefficients};
pub use kill::{KillAction, KillEvent, KillSwitchState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrustCounts {
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(rename = "W")]
    pub w: u64,
    #[serde(rename = "Z")]
    pub z: u64,
}

impl TrustCounts {
    pub fn new(k: u64, w: u64, z: u64) -> Self {
        TrustCounts { k, w, z }
    }
}

/// Value of the non-KLJN branch for the given counts, before the kill switch.
pub fn tiered_sum(coef: &TrustCoefficients, counts: TrustCounts) -> f64 {
    coefficients::partial_sum(coef.a, counts.k)
        + coefficients::partial_sum(coef.b, counts.w)
        + coefficients::partial_sum(coef.c, counts.z)
}

/// All-pairs trust values.
///
/// `values[i][j]` is the trust of evaluator `order[i]` in `order[j]`. The
/// diagonal holds `gamma_i`. `counts[i][j]` is present exactly where the
/// tiered sum was used (off-diagonal, non-KLJN pairs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustMatrix {
    pub order: Vec<SensorId>,
    pub values: Vec<Vec<f64>>,
    pub counts: Vec<Vec<Option<TrustCounts>>>,
    pub coefficients: TrustCoefficients,
}

impl TrustMatrix {
    fn position(&self, id: &SensorId) -> Result<usize> {
        self.order
            .binary_search(id)
            .map_err(|_| Error::UnknownSensor(id.to_string()))
    }

    pub fn get(&self, i: &SensorId, j: &SensorId) -> Result<f64> {
        Ok(self.values[self.position(i)?][self.position(j)?])
    }

    pub fn column(&self, j: &SensorId) -> Result<Vec<f64>> {
        let col = self.position(j)?;
        Ok(self.values.iter().map(|row| row[col]).collect())
    }

    /// CSV with a header of evaluated sensors and one row per evaluator.
    /// `decimals = None` writes full precision.
    pub fn to_csv(&self, decimals: Option<usize>) -> String {
        let mut out = String::from("i\\j");
        for id in &self.order {
            out.push(',');
            out.push_str(id.as_str());
        }
        out.push('\n');
        for (id, row) in self.order.iter().zip(&self.values) {
            out.push_str(id.as_str());
            for v in row {
                out.push(',');
                match decimals {
                    Some(d) => out.push_str(&format!("{v:.d$}")),
                    None => out.push_str(&format!("{v}")),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedPeer {
    pub sensor: SensorId,
    pub trust: f64,
}

/// Index-based view of a validated topology with coefficients and kill
/// switches bound, for repeated trust evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator {
    order: Vec<SensorId>,
    kljn: Vec<Vec<usize>>,
    wireless: Vec<Vec<usize>>,
    alive: Vec<bool>,
    coef: TrustCoefficients,
}

impl Evaluator {
    /// Fails if the topology is invalid or a killed sensor is unknown.
    pub fn new(t: &Topology, coef: &TrustCoefficients, ks: &KillSwitchState) -> Result<Self> {
        let report = t.validate();
        if !report.is_valid() {
            return Err(Error::InvalidTopology(report));
        }
        if let Some(unknown) = ks.killed().iter().find(|id| !t.contains(id)) {
            return Err(Error::UnknownSensor(unknown.to_string()));
        }
        let order: Vec<SensorId> = t.sensors().iter().cloned().collect();
        let index: BTreeMap<&SensorId, usize> =
            order.iter().enumerate().map(|(n, id)| (id, n)).collect();

        let mut kljn = vec![Vec::new(); order.len()];
        for edge in t.kljn_edges() {
            let (lo, hi) = (index[edge.lo()], index[edge.hi()]);
            kljn[lo].push(hi);
            kljn[hi].push(lo);
        }
        let mut wireless = vec![Vec::new(); order.len()];
        for (owner, set) in t.wireless_sets() {
            wireless[index[owner]] = set.iter().map(|p| index[p]).collect();
        }
        for list in kljn.iter_mut().chain(wireless.iter_mut()) {
            list.sort_unstable();
        }
        let alive = order.iter().map(|id| !ks.is_killed(id)).collect();
        Ok(Evaluator {
            order,
            kljn,
            wireless,
            alive,
            coef: *coef,
        })
    }

    pub fn order(&self) -> &[SensorId] {
        &self.order
    }

    fn index(&self, id: &SensorId) -> Result<usize> {
        self.order
            .binary_search(id)
            .map_err(|_| Error::UnknownSensor(id.to_string()))
    }

    fn pair(&self, i: &SensorId, j: &SensorId) -> Result<(usize, usize)> {
        let (i, j) = (self.index(i)?, self.index(j)?);
        if i == j {
            return Err(Error::SelfEvaluation(self.order[i].to_string()));
        }
        Ok((i, j))
    }

    fn counts_at(&self, i: usize, j: usize) -> TrustCounts {
        let k = sorted_intersection_len(&self.kljn[i], &self.kljn[j]);
        let w = self.kljn[j].len() - k;
        let z = self.wireless[j].len() - usize::from(self.wireless[j].binary_search(&i).is_ok());
        TrustCounts::new(k as u64, w as u64, z as u64)
    }

    fn trust_at(&self, i: usize, j: usize) -> (f64, Option<TrustCounts>) {
        if i == j {
            return (if self.alive[i] { 1.0 } else { 0.0 }, None);
        }
        if self.kljn[i].binary_search(&j).is_ok() {
            return (if self.alive[j] { 1.0 } else { 0.0 }, None);
        }
        let counts = self.counts_at(i, j);
        let value = if self.alive[j] {
            tiered_sum(&self.coef, counts)
        } else {
            0.0
        };
        (value, Some(counts))
    }

    pub fn counts(&self, i: &SensorId, j: &SensorId) -> Result<TrustCounts> {
        let (i, j) = self.pair(i, j)?;
        Ok(self.counts_at(i, j))
    }

    pub fn trust(&self, i: &SensorId, j: &SensorId) -> Result<f64> {
        let (i, j) = self.pair(i, j)?;
        Ok(self.trust_at(i, j).0)
    }

    fn row(&self, i: usize) -> (Vec<f64>, Vec<Option<TrustCounts>>) {
        (0..self.order.len()).map(|j| self.trust_at(i, j)).unzip()
    }

    fn assemble(&self, rows: Vec<(Vec<f64>, Vec<Option<TrustCounts>>)>) -> TrustMatrix {
        let (values, counts) = rows.into_iter().unzip();
        TrustMatrix {
            order: self.order.clone(),
            values,
            counts,
            coefficients: self.coef,
        }
    }

    /// Rows are evaluated in parallel; the result is identical to
    /// [`Evaluator::matrix_sequential`].
    pub fn matrix(&self) -> TrustMatrix {
        let rows = (0..self.order.len())
            .into_par_iter()
            .map(|i| self.row(i))
            .collect();
        self.assemble(rows)
    }

    pub fn matrix_sequential(&self) -> TrustMatrix {
        let rows = (0..self.order.len()).map(|i| self.row(i)).collect();
        self.assemble(rows)
    }

    /// Exact order of `G_ij` against `G_ik`, including differences too small
    /// to survive rounding. See [`TrustCoefficients::compare_tiered`].
    pub fn compare(&self, i: &SensorId, j: &SensorId, k: &SensorId) -> Result<Ordering> {
        let (i, j) = self.pair(i, j)?;
        let k = self.index(k)?;
        if i == k {
            return Err(Error::SelfEvaluation(self.order[i].to_string()));
        }
        let level = |j: usize| match self.trust_at(i, j) {
            (_, None) if self.alive[j] => Level::One,
            (_, Some(counts)) if self.alive[j] && counts != TrustCounts::default() => {
                Level::Tiered(counts)
            }
            _ => Level::Zero,
        };
        Ok(match (level(j), level(k)) {
            (Level::Tiered(x), Level::Tiered(y)) => self.coef.compare_tiered(x, y),
            (x, y) => x.rank().cmp(&y.rank()),
        })
    }

    /// Peers of `i` by descending trust, ties broken by sensor id.
    pub fn rank(&self, i: &SensorId) -> Result<Vec<RankedPeer>> {
        let i = self.index(i)?;
        let mut ranked: Vec<RankedPeer> = (0..self.order.len())
            .filter(|&j| j != i)
            .map(|j| RankedPeer {
                sensor: self.order[j].clone(),
                trust: self.trust_at(i, j).0,
            })
            .collect();
        ranked.sort_by(|x, y| {
            y.trust
                .total_cmp(&x.trust)
                .then_with(|| x.sensor.cmp(&y.sensor))
        });
        Ok(ranked)
    }
}

enum Level {
    Zero,
    Tiered(TrustCounts),
    One,
}

impl Level {
    fn rank(&self) -> u8 {
        match self {
            Level::Zero => 0,
            Level::Tiered(_) => 1,
            Level::One => 2,
        }
    }
}

fn sorted_intersection_len(x: &[usize], y: &[usize]) -> usize {
    let (mut p, mut q, mut n) = (0, 0, 0);
    while p < x.len() && q < y.len() {
        match x[p].cmp(&y[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                p += 1;
                q += 1;
            }
        }
    }
    n
}

/// K, W and Z for evaluator `i` and evaluated `j`.
pub fn counts(t: &Topology, i: &SensorId, j: &SensorId) -> Result<TrustCounts> {
    for id in [i, j] {
        if !t.contains(id) {
            return Err(Error::UnknownSensor(id.to_string()));
        }
    }
    if i == j {
        return Err(Error::SelfEvaluation(i.to_string()));
    }
    let ik = t.kljn_set(i);
    let jk = t.kljn_set(j);
    let k = ik.intersection(&jk).count();
    let jw = t.wireless_set(j);
    let z = jw.len() - usize::from(jw.contains(i));
    Ok(TrustCounts::new(k as u64, (jk.len() - k) as u64, z as u64))
}

/// Trust of `i` in `j`.
pub fn trust(
    t: &Topology,
    coef: &TrustCoefficients,
    ks: &KillSwitchState,
    i: &SensorId,
    j: &SensorId,
) -> Result<f64> {
    Evaluator::new(t, coef, ks)?.trust(i, j)
}

pub fn trust_matrix(
    t: &Topology,
    coef: &TrustCoefficients,
    ks: &KillSwitchState,
) -> Result<TrustMatrix> {
    Ok(Evaluator::new(t, coef, ks)?.matrix())
}

pub fn rank_peers(
    t: &Topology,
    coef: &TrustCoefficients,
    ks: &KillSwitchState,
    i: &SensorId,
) -> Result<Vec<RankedPeer>> {
    Evaluator::new(t, coef, ks)?.rank(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, REFERENCE_TRUST_MATRIX};

    fn id(s: &str) -> SensorId {
        SensorId::new(s).unwrap()
    }

    fn reference() -> Topology {
        fixtures::reference_topology().with_derived_wireless_sets()
    }

    fn alive() -> KillSwitchState {
        KillSwitchState::new()
    }

    #[test]
    fn counts_examples() {
        let t = reference();
        assert_eq!(
            counts(&t, &id("A"), &id("C")).unwrap(),
            TrustCounts::new(1, 0, 7)
        );
        assert_eq!(
            counts(&t, &id("B"), &id("C")).unwrap(),
            TrustCounts::new(0, 1, 7)
        );
        assert_eq!(
            counts(&t, &id("F"), &id("D")).unwrap(),
            TrustCounts::new(0, 3, 5)
        );
        assert!(matches!(
            counts(&t, &id("A"), &id("A")),
            Err(Error::SelfEvaluation(_))
        ));
        assert!(matches!(
            counts(&t, &id("A"), &id("Q")),
            Err(Error::UnknownSensor(_))
        ));
    }

    #[test]
    fn evaluator_counts_match_set_counts() {
        let t = reference();
        let ev = Evaluator::new(&t, &TrustCoefficients::closed_form(), &alive()).unwrap();
        for i in t.sensors() {
            for j in t.sensors() {
                if i != j {
                    assert_eq!(ev.counts(i, j).unwrap(), counts(&t, i, j).unwrap());
                }
            }
        }
    }

    #[test]
    fn trust_examples() {
        let t = reference();
        let k = TrustCoefficients::closed_form();
        let g = |i: &str, j: &str, ks: &KillSwitchState| trust(&t, &k, ks, &id(i), &id(j)).unwrap();
        assert!((g("A", "C", &alive()) - 0.555).abs() <= 0.001);
        assert_eq!(g("A", "B", &alive()), 1.0);
        assert_eq!(g("A", "C", &KillSwitchState::with_killed([id("C")])), 0.0);
        assert!((g("C", "B", &alive()) - 0.376).abs() <= 0.001);
        assert!(matches!(
            trust(&t, &k, &alive(), &id("A"), &id("A")),
            Err(Error::SelfEvaluation(_))
        ));
    }

    #[test]
    fn reference_matrix_matches_expected_values() {
        let m = trust_matrix(&reference(), &TrustCoefficients::closed_form(), &alive()).unwrap();
        for (i, row) in REFERENCE_TRUST_MATRIX.iter().enumerate() {
            for (j, expected) in row.iter().enumerate() {
                let tol = fixtures::reference_tolerance(*expected);
                assert!(
                    (m.values[i][j] - expected).abs() <= tol,
                    "G[{i}][{j}] = {} vs {expected}",
                    m.values[i][j]
                );
            }
        }
    }

    #[test]
    fn two_sensor_kljn_pair_is_all_ones() {
        let t = Topology::new([id("A"), id("B")], [(id("A"), id("B"))])
            .unwrap()
            .with_derived_wireless_sets();
        let m = trust_matrix(&t, &TrustCoefficients::closed_form(), &alive()).unwrap();
        assert_eq!(m.values, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn killing_h_zeroes_only_column_h() {
        let t = reference();
        let k = TrustCoefficients::closed_form();
        let before = trust_matrix(&t, &k, &alive()).unwrap();
        let after = trust_matrix(&t, &k, &KillSwitchState::with_killed([id("H")])).unwrap();
        let h = 7;
        for i in 0..10 {
            for j in 0..10 {
                if j == h {
                    assert_eq!(after.values[i][j], 0.0);
                } else {
                    assert_eq!(after.values[i][j], before.values[i][j]);
                }
            }
        }
    }

    #[test]
    fn parallel_matrix_equals_sequential() {
        let t = reference();
        let ev = Evaluator::new(
            &t,
            &TrustCoefficients::closed_form(),
            &KillSwitchState::with_killed([id("E")]),
        )
        .unwrap();
        assert_eq!(ev.matrix(), ev.matrix_sequential());
    }

    #[test]
    fn rank_examples() {
        let t = reference();
        let k = TrustCoefficients::closed_form();
        let ranked = rank_peers(&t, &k, &alive(), &id("A")).unwrap();
        let names: Vec<&str> = ranked.iter().map(|p| p.sensor.as_str()).collect();
        assert_eq!(&names[..2], &["B", "D"]);
        assert_eq!(&names[6..], &["H", "I", "J"]);
        assert!(ranked[6..].iter().all(|p| (p.trust - 0.173).abs() <= 0.001));

        let h = rank_peers(&t, &k, &alive(), &id("H")).unwrap();
        let pos = |s: &str| h.iter().position(|p| p.sensor.as_str() == s).unwrap();
        assert!(pos("D") < pos("C"));
        assert!((h[pos("D")].trust - 0.381).abs() <= 0.001);

        let solo = Topology::new([id("X")], []).unwrap();
        assert!(rank_peers(&solo, &k, &alive(), &id("X"))
            .unwrap()
            .is_empty());
        assert!(rank_peers(&t, &k, &alive(), &id("Q")).is_err());
    }

    #[test]
    fn asymmetry_and_non_transitivity() {
        let t = reference();
        let k = TrustCoefficients::closed_form();
        let g = |i: &str, j: &str| trust(&t, &k, &alive(), &id(i), &id(j)).unwrap();
        assert!((g("B", "C") - 0.346).abs() <= 0.001);
        assert!((g("C", "B") - 0.376).abs() <= 0.001);
        assert_ne!(g("B", "C"), g("C", "B"));
        assert_eq!(g("A", "D"), 1.0);
        assert_eq!(g("D", "C"), 1.0);
        assert!(g("A", "C") < 1.0);
    }

    #[test]
    fn compare_examples() {
        let t = reference();
        let k = TrustCoefficients::closed_form();
        let ev = Evaluator::new(&t, &k, &KillSwitchState::with_killed([id("J")])).unwrap();
        let cmp = |i: &str, j: &str, l: &str| ev.compare(&id(i), &id(j), &id(l)).unwrap();
        assert_eq!(cmp("A", "B", "C"), Ordering::Greater);
        assert_eq!(cmp("A", "C", "E"), Ordering::Less);
        assert_eq!(cmp("A", "H", "I"), Ordering::Equal);
        assert_eq!(cmp("A", "J", "H"), Ordering::Less);
        assert_eq!(cmp("A", "B", "D"), Ordering::Equal);
        assert!(ev.compare(&id("A"), &id("B"), &id("A")).is_err());
    }

    #[test]
    fn invalid_topology_rejected() {
        let t = Topology::new([id("A"), id("B")], [(id("A"), id("B"))])
            .unwrap()
            .with_wireless_sets([(id("A"), [id("B")].into_iter().collect())]);
        let err = trust_matrix(&t, &TrustCoefficients::closed_form(), &alive()).unwrap_err();
        assert!(matches!(err, Error::InvalidTopology(_)));
        let err = trust_matrix(
            &reference(),
            &TrustCoefficients::closed_form(),
            &KillSwitchState::with_killed([id("Q")]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownSensor(_)));
    }

    #[test]
    fn csv_rounding() {
        let m = trust_matrix(&reference(), &TrustCoefficients::closed_form(), &alive()).unwrap();
        let csv = m.to_csv(Some(3));
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "i\\j,A,B,C,D,E,F,G,H,I,J");
        assert_eq!(
            lines.next().unwrap(),
            "A,1.000,1.000,0.555,1.000,0.701,0.346,0.346,0.173,0.173,0.173"
        );
    }
}
