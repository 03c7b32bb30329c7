//! Asset classes, dependency networks and synthetic network generation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default side length of the square in which generated assets are placed.
pub const DEFAULT_AREA: f64 = 100.0;
/// Default maximum distance at which a class-level dependency becomes an arc.
pub const DEFAULT_THRESHOLD: f64 = 30.0;
/// Default relative radius of the dependency-weight box.
pub const DEFAULT_DELTA: f64 = 0.1;
/// Default floor applied to pairwise distances before inverse-square weighting.
pub const DEFAULT_MIN_DISTANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssetClass {
    CellTower,
    #[serde(rename = "EMS")]
    Ems,
    ThermalGeneration,
    RenewableGeneration,
    Substation,
    HealthCare,
    Pharmacies,
    Transport,
    Water,
}

use AssetClass::*;

impl AssetClass {
    pub const ALL: [AssetClass; 9] = [
        CellTower,
        Ems,
        ThermalGeneration,
        RenewableGeneration,
        Substation,
        HealthCare,
        Pharmacies,
        Transport,
        Water,
    ];

    /// Classes this class depends on.
    ///
    /// Substation depends on "thermal or renewable generation"; both classes
    /// are listed and the weight polytope decides how much each one matters.
    pub fn upstream(self) -> &'static [AssetClass] {
        match self {
            CellTower => &[Substation],
            Ems => &[Substation, CellTower, Water, HealthCare],
            ThermalGeneration => &[Transport, CellTower],
            RenewableGeneration => &[CellTower],
            Substation => &[ThermalGeneration, RenewableGeneration, CellTower],
            HealthCare => &[Transport, Ems, Substation, CellTower, Water],
            Pharmacies => &[Transport, Substation, CellTower, Water],
            Transport => &[CellTower, Substation, Water],
            Water => &[Substation, Transport, CellTower],
        }
    }

    pub fn depends_on(self, other: AssetClass) -> bool {
        self.upstream().contains(&other)
    }

    /// Observed share of assets in this class.
    pub fn frequency(self) -> f64 {
        match self {
            CellTower => 0.0438,
            Ems => 0.0501,
            ThermalGeneration => 0.00887,
            RenewableGeneration => 0.0162,
            Substation => 0.178,
            HealthCare => 0.0391,
            Pharmacies => 0.527,
            Transport => 0.0318,
            Water => 0.105,
        }
    }

    /// Importance weight, inversely proportional to the class frequency.
    pub fn weight(self) -> u32 {
        weight_from_frequency(self.frequency()).expect("class frequencies are positive")
    }

    /// Human-readable label.
    pub fn label(self) -> &'static str {
        match self {
            CellTower => "Cell tower",
            Ems => "EMS",
            ThermalGeneration => "Thermal generation",
            RenewableGeneration => "Renewable generation",
            Substation => "Substation",
            HealthCare => "Health care",
            Pharmacies => "Pharmacies",
            Transport => "Transport",
            Water => "Water",
        }
    }

    fn key(self) -> &'static str {
        match self {
            CellTower => "CellTower",
            Ems => "EMS",
            ThermalGeneration => "ThermalGeneration",
            RenewableGeneration => "RenewableGeneration",
            Substation => "Substation",
            HealthCare => "HealthCare",
            Pharmacies => "Pharmacies",
            Transport => "Transport",
            Water => "Water",
        }
    }
}

impl fmt::Display for AssetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for AssetClass {
    type Err = Error;

    /// Accepts either the serialized key (`CellTower`) or the label (`Cell tower`),
    /// case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim();
        AssetClass::ALL
            .into_iter()
            .find(|c| c.key().eq_ignore_ascii_case(wanted) || c.label().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

/// The class-level dependency table: class -> upstream classes.
pub fn class_dependency_table() -> BTreeMap<AssetClass, Vec<AssetClass>> {
    AssetClass::ALL
        .into_iter()
        .map(|c| (c, c.upstream().to_vec()))
        .collect()
}

/// `round(1 / freq)`.
pub fn weight_from_frequency(freq: f64) -> Result<u32> {
    if !(freq > 0.0 && freq <= 1.0) {
        return Err(Error::InvalidFrequency(freq));
    }
    Ok((1.0 / freq).round() as u32)
}

/// Class sampling distribution: the observed frequencies rescaled to sum to one.
pub fn sampling_distribution() -> [f64; 9] {
    let total: f64 = AssetClass::ALL.iter().map(|c| c.frequency()).sum();
    AssetClass::ALL.map(|c| c.frequency() / total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub id: usize,
    pub class: AssetClass,
    pub pos: [f64; 2],
    pub weight: f64,
}

impl Asset {
    pub fn distance(&self, other: &Asset) -> f64 {
        let dx = self.pos[0] - other.pos[0];
        let dy = self.pos[1] - other.pos[1];
        dx.hypot(dy)
    }
}

/// Directed dependency: `dst` depends on `src`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependencyArc {
    pub src: usize,
    pub dst: usize,
}

/// Parameters of the dependency-weight polytopes stored alongside a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    pub delta: f64,
    pub threshold: f64,
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
}

fn default_min_distance() -> f64 {
    DEFAULT_MIN_DISTANCE
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        UncertaintyConfig {
            delta: DEFAULT_DELTA,
            threshold: DEFAULT_THRESHOLD,
            min_distance: DEFAULT_MIN_DISTANCE,
        }
    }
}

/// Explicit half-space description `U P >= u, P >= 0` of one asset's polytope,
/// overriding the inverse-distance box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericPolytope {
    pub asset: usize,
    /// Column order of `U`; defaults to the asset's upstream list in id order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upstream: Option<Vec<usize>>,
    #[serde(rename = "U")]
    pub rows: Vec<Vec<f64>>,
    #[serde(rename = "u")]
    pub rhs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NetworkData {
    assets: Vec<Asset>,
    arcs: Vec<DependencyArc>,
    #[serde(default)]
    uncertainty: UncertaintyConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    polytopes: Vec<GenericPolytope>,
}

/// Assets plus dependency arcs. Validated on construction and immutable after.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkData", into = "NetworkData")]
pub struct Network {
    assets: Vec<Asset>,
    arcs: Vec<DependencyArc>,
    uncertainty: UncertaintyConfig,
    polytopes: Vec<GenericPolytope>,
    upstream: Vec<Vec<usize>>,
    downstream: Vec<Vec<usize>>,
}

impl TryFrom<NetworkData> for Network {
    type Error = Error;

    fn try_from(data: NetworkData) -> Result<Self> {
        Network::with_polytopes(data.assets, data.arcs, data.uncertainty, data.polytopes)
    }
}

impl From<Network> for NetworkData {
    fn from(n: Network) -> Self {
        NetworkData {
            assets: n.assets,
            arcs: n.arcs,
            uncertainty: n.uncertainty,
            polytopes: n.polytopes,
        }
    }
}

impl Network {
    pub fn new(
        assets: Vec<Asset>,
        arcs: Vec<DependencyArc>,
        uncertainty: UncertaintyConfig,
    ) -> Result<Self> {
        Self::with_polytopes(assets, arcs, uncertainty, Vec::new())
    }

    pub fn with_polytopes(
        assets: Vec<Asset>,
        arcs: Vec<DependencyArc>,
        uncertainty: UncertaintyConfig,
        polytopes: Vec<GenericPolytope>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidNetwork(msg));
        let n = assets.len();
        for (i, a) in assets.iter().enumerate() {
            if a.id != i {
                return bad(format!("asset at position {i} has id {}; ids must be 0..{n}", a.id));
            }
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return bad(format!("asset {i} has invalid weight {}", a.weight));
            }
            if !a.pos.iter().all(|c| c.is_finite()) {
                return bad(format!("asset {i} has non-finite position"));
            }
        }
        let mut seen = HashSet::with_capacity(arcs.len());
        let mut upstream = vec![Vec::new(); n];
        let mut downstream = vec![Vec::new(); n];
        for arc in &arcs {
            if arc.src >= n || arc.dst >= n {
                return bad(format!("arc {}->{} references a missing asset", arc.src, arc.dst));
            }
            if arc.src == arc.dst {
                return bad(format!("self-loop on asset {}", arc.src));
            }
            if !seen.insert(*arc) {
                return bad(format!("duplicate arc {}->{}", arc.src, arc.dst));
            }
            let (sc, dc) = (assets[arc.src].class, assets[arc.dst].class);
            if !dc.depends_on(sc) {
                return bad(format!(
                    "arc {}->{}: class {dc} does not depend on class {sc}",
                    arc.src, arc.dst
                ));
            }
            upstream[arc.dst].push(arc.src);
            downstream[arc.src].push(arc.dst);
        }
        upstream.iter_mut().for_each(|v| v.sort_unstable());
        downstream.iter_mut().for_each(|v| v.sort_unstable());

        let u = &uncertainty;
        if !(u.threshold > 0.0) || !(0.0..1.0).contains(&u.delta) || !(u.min_distance > 0.0) {
            return bad(format!(
                "uncertainty parameters out of range (threshold {}, delta {}, min_distance {})",
                u.threshold, u.delta, u.min_distance
            ));
        }
        let mut overridden = HashSet::new();
        for p in &polytopes {
            if p.asset >= n {
                return bad(format!("polytope for missing asset {}", p.asset));
            }
            if !overridden.insert(p.asset) {
                return bad(format!("asset {} has more than one explicit polytope", p.asset));
            }
            let cols = p.upstream.as_ref().unwrap_or(&upstream[p.asset]);
            let mut sorted = cols.clone();
            sorted.sort_unstable();
            if sorted != upstream[p.asset] {
                return bad(format!(
                    "polytope for asset {} must cover exactly its upstream assets",
                    p.asset
                ));
            }
            if p.rows.len() != p.rhs.len() || p.rows.iter().any(|r| r.len() != cols.len()) {
                return bad(format!("polytope for asset {} has inconsistent dimensions", p.asset));
            }
        }

        Ok(Network {
            assets,
            arcs,
            uncertainty,
            polytopes,
            upstream,
            downstream,
        })
    }

    pub fn assets(&self) -> &[Asset] {
        &self.assets
    }

    pub fn arcs(&self) -> &[DependencyArc] {
        &self.arcs
    }

    pub fn uncertainty(&self) -> &UncertaintyConfig {
        &self.uncertainty
    }

    pub fn polytopes(&self) -> &[GenericPolytope] {
        &self.polytopes
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    /// Assets `f` depends on, in id order.
    pub fn upstream(&self, f: usize) -> &[usize] {
        &self.upstream[f]
    }

    /// Assets depending on `s`, in id order.
    pub fn downstream(&self, s: usize) -> &[usize] {
        &self.downstream[s]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.assets.iter().map(|a| a.weight).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.assets.iter().map(|a| a.weight).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Inputs of [`generate_network`]; also the generation config file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub seed: u64,
    pub n_assets: usize,
    #[serde(default = "default_area")]
    pub area: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_area() -> f64 {
    DEFAULT_AREA
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}

impl GenerationConfig {
    pub fn new(seed: u64, n_assets: usize) -> Self {
        GenerationConfig {
            seed,
            n_assets,
            area: DEFAULT_AREA,
            threshold: DEFAULT_THRESHOLD,
            delta: DEFAULT_DELTA,
        }
    }
}

/// Draws a synthetic network.
///
/// Classes are i.i.d. from the class frequency table, positions uniform in
/// `[0, area)^2`. Every ordered pair `(s, f)` whose classes are dependent and
/// whose distance does not exceed `threshold` becomes an arc `s -> f`.
pub fn generate_network(config: &GenerationConfig) -> Result<Network> {
    if !(config.area > 0.0 && config.area.is_finite()) {
        return Err(Error::InvalidConfig(format!("area must be positive, got {}", config.area)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let classes = WeightedIndex::new(sampling_distribution()).expect("positive weights");
    let assets: Vec<Asset> = (0..config.n_assets)
        .map(|id| {
            let class = AssetClass::ALL[classes.sample(&mut rng)];
            let pos = [
                rng.gen::<f64>() * config.area,
                rng.gen::<f64>() * config.area,
            ];
            Asset {
                id,
                class,
                pos,
                weight: class.weight() as f64,
            }
        })
        .collect();

    let mut arcs = Vec::new();
    for s in &assets {
        for f in &assets {
            if s.id != f.id
                && f.class.depends_on(s.class)
                && s.distance(f) <= config.threshold
            {
                arcs.push(DependencyArc { src: s.id, dst: f.id });
            }
        }
    }
    let uncertainty = UncertaintyConfig {
        delta: config.delta,
        threshold: config.threshold,
        min_distance: DEFAULT_MIN_DISTANCE,
    };
    Network::new(assets, arcs, uncertainty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dependency_table_rows() {
        let table = class_dependency_table();
        assert_eq!(table.len(), 9);
        assert_eq!(table[&CellTower], vec![Substation]);
        assert_eq!(table[&Water], vec![Substation, Transport, CellTower]);
        assert!(table[&Substation].contains(&ThermalGeneration));
        assert!(table[&Substation].contains(&RenewableGeneration));
        assert!("Helipad".parse::<AssetClass>().is_err());
        assert_eq!("Cell tower".parse::<AssetClass>().unwrap(), CellTower);
        assert_eq!("ems".parse::<AssetClass>().unwrap(), Ems);
    }

    #[test]
    fn weights_from_frequencies() {
        assert_eq!(weight_from_frequency(0.0438).unwrap(), 23);
        assert_eq!(weight_from_frequency(0.00887).unwrap(), 113);
        assert_eq!(weight_from_frequency(1.0).unwrap(), 1);
        assert!(weight_from_frequency(0.0).is_err());
        assert!(weight_from_frequency(-0.2).is_err());
        let expected = [23, 20, 113, 62, 6, 26, 2, 31, 10];
        for (c, w) in AssetClass::ALL.into_iter().zip(expected) {
            assert_eq!(c.weight(), w, "{c}");
        }
    }

    #[test]
    fn sampling_distribution_is_normalized() {
        let total: f64 = sampling_distribution().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_network() {
        let net = generate_network(&GenerationConfig::new(3, 0)).unwrap();
        assert!(net.is_empty());
        assert!(net.arcs().is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenerationConfig::new(11, 128);
        let a = generate_network(&cfg).unwrap().to_json().unwrap();
        let b = generate_network(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = generate_network(&GenerationConfig::new(12, 128)).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_arcs_respect_class_table_and_threshold() {
        let cfg = GenerationConfig::new(5, 150);
        let net = generate_network(&cfg).unwrap();
        assert!(!net.arcs().is_empty());
        for arc in net.arcs() {
            let (s, f) = (&net.assets()[arc.src], &net.assets()[arc.dst]);
            assert!(f.class.depends_on(s.class));
            assert!(s.distance(f) <= cfg.threshold);
        }
    }

    #[test]
    fn class_fractions_track_frequencies() {
        let net = generate_network(&GenerationConfig::new(2024, 1000)).unwrap();
        let probs = sampling_distribution();
        for (k, c) in AssetClass::ALL.into_iter().enumerate() {
            let count = net.assets().iter().filter(|a| a.class == c).count();
            let frac = count as f64 / 1000.0;
            assert!((frac - probs[k]).abs() <= 0.05, "{c}: {frac} vs {}", probs[k]);
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let net = generate_network(&GenerationConfig::new(9, 40)).unwrap();
        let json = net.to_json().unwrap();
        let back = Network::from_json(&json).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json().unwrap(), json);

        let bad = r#"{"assets":[{"id":0,"class":"Water","pos":[0,0],"weight":10},
            {"id":1,"class":"CellTower","pos":[1,0],"weight":23}],
            "arcs":[{"src":0,"dst":1}]}"#;
        let err = Network::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("does not depend"), "{err}");

        let self_loop = r#"{"assets":[{"id":0,"class":"Water","pos":[0,0],"weight":10}],
            "arcs":[{"src":0,"dst":0}]}"#;
        assert!(Network::from_json(self_loop).is_err());

        let gap = r#"{"assets":[{"id":1,"class":"Water","pos":[0,0],"weight":10}], "arcs":[]}"#;
        assert!(Network::from_json(gap).is_err());
    }
}
