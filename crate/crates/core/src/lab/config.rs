use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::LedgerInput;
use crate::mappings::{MapKind, Mapping};
use crate::metrics::RefineParams;
use crate::space::{sample_interior, Domain, DomainSpec, Point};
use crate::uniformity::{Estimator, UniformityParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MetricTable,
    Uniformity,
    #[serde(alias = "map-diagnostics")]
    Mapcheck,
    Subinvariance,
    Counterexample,
    Ledger,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::MetricTable => "metric-table",
            ExperimentKind::Uniformity => "uniformity",
            ExperimentKind::Mapcheck => "mapcheck",
            ExperimentKind::Subinvariance => "subinvariance",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Ledger => "ledger",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn json(&self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn csv(&self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

/// Graph and pair sampling shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    pub resolution: f64,
    pub neighbors: usize,
    /// Clearance levels, strictly decreasing.
    pub schedule: Vec<f64>,
    pub random_pairs: usize,
    pub tangential_bases: usize,
    pub nu: f64,
    pub retries: usize,
    pub estimator: Estimator,
    /// Pairs for map diagnostics and image arcs.
    pub pairs: usize,
    pub refine: RefineParams,
}

impl Default for Sampling {
    fn default() -> Self {
        let u = UniformityParams::default();
        Self {
            resolution: u.resolution,
            neighbors: u.neighbors,
            schedule: u.schedule,
            random_pairs: u.random_pairs,
            tangential_bases: u.tangential_bases,
            nu: u.nu,
            retries: u.retries,
            estimator: Estimator::Both,
            pairs: 16,
            refine: u.refine,
        }
    }
}

impl Sampling {
    pub fn uniformity(&self, seed: u64) -> UniformityParams {
        UniformityParams {
            resolution: self.resolution,
            neighbors: self.neighbors,
            schedule: self.schedule.clone(),
            random_pairs: self.random_pairs,
            tangential_bases: self.tangential_bases,
            seed,
            nu: self.nu,
            retries: self.retries,
            refine: self.refine.clone(),
            c1_prime: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricPair {
    pub z1: Point,
    pub z2: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapcheckSettings {
    pub q: f64,
    pub balls: usize,
    pub triples_per_ball: usize,
    /// Subdomains of the source for the solidity envelopes; the source alone when empty.
    pub subdomains: Vec<DomainSpec>,
}

impl Default for MapcheckSettings {
    fn default() -> Self {
        Self { q: 0.75, balls: 16, triples_per_ball: 64, subdomains: Vec::new() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdomain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metric_pairs: Vec<MetricPair>,
    #[serde(default)]
    pub mapcheck: MapcheckSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<LedgerInput>,
    #[serde(default)]
    pub output: Output,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn build(field: &str, spec: &DomainSpec) -> Result<Domain> {
    spec.build().map_err(|e| invalid(format!("{field}: {e}")))
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| invalid(e.to_string().trim_end().to_string()))
    }
}

impl ExperimentConfig {
    /// A config with defaults for everything but the experiment and seed.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        Self {
            experiment: Some(kind),
            seed,
            sampling: Sampling::default(),
            domain: None,
            subdomain: None,
            map: None,
            metric_pairs: Vec::new(),
            mapcheck: MapcheckSettings::default(),
            ledger: None,
            output: Output::default(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment.ok_or_else(|| invalid("missing field `experiment`"))
    }

    pub fn domain(&self) -> Result<Domain> {
        build("domain", self.domain.as_ref().ok_or_else(|| invalid("missing section `domain`"))?)
    }

    pub fn subdomain(&self) -> Result<Domain> {
        build("subdomain", self.subdomain.as_ref().ok_or_else(|| invalid("missing section `subdomain`"))?)
    }

    pub fn map_kind(&self) -> Result<&MapKind> {
        self.map.as_ref().ok_or_else(|| invalid("missing section `map`"))
    }

    pub fn uniformity_params(&self) -> UniformityParams {
        self.sampling.uniformity(self.seed)
    }

    /// Checks what each experiment references: domains build, maps validate
    /// on their source, the subdomain lies inside the domain.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        self.uniformity_params().validate().map_err(|e| invalid(format!("sampling: {e}")))?;
        let s = &self.sampling;
        if s.schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid("sampling.schedule must be strictly decreasing"));
        }
        let map_on = |domain: &Domain| -> Result<Mapping> {
            Mapping::new(self.map_kind()?.clone(), domain).map_err(|e| invalid(format!("map: {e}")))
        };
        match kind {
            ExperimentKind::MetricTable => {
                let d = self.domain()?;
                if self.metric_pairs.is_empty() {
                    return Err(invalid("metric-table needs at least one [[metric_pairs]] entry"));
                }
                for (i, p) in self.metric_pairs.iter().enumerate() {
                    for z in [&p.z1, &p.z2] {
                        if !d.contains(z) {
                            return Err(invalid(format!("metric_pairs[{i}]: {z:?} is not interior to the domain")));
                        }
                    }
                }
            }
            ExperimentKind::Uniformity => {
                self.domain()?;
            }
            ExperimentKind::Mapcheck => {
                let d = self.domain()?;
                map_on(&d)?;
                let m = &self.mapcheck;
                if !(m.q > 0.0 && m.q < 1.0) || m.balls == 0 || m.triples_per_ball == 0 {
                    return Err(invalid("mapcheck needs q in (0, 1) and positive ball and triple counts"));
                }
                for (i, sub) in m.subdomains.iter().enumerate() {
                    let sd = build(&format!("mapcheck.subdomains[{i}]"), sub)?;
                    check_inside(&sd, &d, &format!("mapcheck.subdomains[{i}]"))?;
                }
            }
            ExperimentKind::Subinvariance => {
                let d = self.domain()?;
                let d1 = self.subdomain()?;
                map_on(&d)?;
                check_inside(&d1, &d, "subdomain")?;
            }
            ExperimentKind::Counterexample => {
                let d = self.domain.as_ref().map(|s| build("domain", s)).transpose()?.unwrap_or_else(Domain::unit_disk);
                if self.map.is_some() {
                    map_on(&d)?;
                }
            }
            ExperimentKind::Ledger => {
                let l = self.ledger.as_ref().ok_or_else(|| invalid("missing section `ledger`"))?;
                l.validate().map_err(|e| invalid(format!("ledger: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Interior samples of `inner` must lie in `outer`.
fn check_inside(inner: &Domain, outer: &Domain, field: &str) -> Result<()> {
    let (lo, hi) = inner.sampling_box()?;
    let res = (hi - lo).euclid() / 40.0;
    for p in sample_interior(inner, res, 0.25 * res, 0)? {
        if !outer.contains(&p) {
            return Err(invalid(format!("{field} is not contained in the domain (point {p:?})")));
        }
    }
    Ok(())
}

/// Parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = text.parse()?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUB: &str = r#"
experiment = "subinvariance"
seed = 7

[sampling]
resolution = 0.1
schedule = [0.1, 0.05, 0.025, 0.0125]

[domain.shape]
kind = "ball"
center = [0.0, 0.0]
radius = 1.0

[subdomain.shape]
kind = "ball"
center = [0.3, 0.0]
radius = 0.2

[map]
kind = "radial_power"
exponent = 2.0
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg: ExperimentConfig = SUB.parse().unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kind().unwrap(), ExperimentKind::Subinvariance);
        let back: ExperimentConfig = cfg.to_toml().unwrap().parse().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn missing_seed_is_invalid() {
        let text = SUB.replace("seed = 7\n", "");
        let err = text.parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(&err, Error::ConfigInvalid(m) if m.contains("seed")), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let text = SUB.replace("resolution = 0.1", "resolutoin = 0.1");
        let err = text.parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(&err, Error::ConfigInvalid(m) if m.contains("resolutoin")), "{err}");
    }

    #[test]
    fn schedule_must_decrease() {
        let text = SUB.replace("[0.1, 0.05, 0.025, 0.0125]", "[0.1, 0.1, 0.05]");
        let cfg: ExperimentConfig = text.parse().unwrap();
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn subdomain_must_fit() {
        let text = SUB.replace("center = [0.3, 0.0]", "center = [0.9, 0.0]");
        let cfg: ExperimentConfig = text.parse().unwrap();
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(m)) if m.contains("subdomain")));
    }

    #[test]
    fn map_must_fit_the_domain() {
        let text = SUB.replace("kind = \"radial_power\"\nexponent = 2.0", "kind = \"slit_riemann\"").replace("radius = 1.0", "radius = 2.0");
        let cfg: ExperimentConfig = text.parse().unwrap();
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(m)) if m.starts_with("map")));
    }
}
