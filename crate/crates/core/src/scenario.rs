//! Scenario documents: parsing with path-aware errors, validation,
//! normalization and hashing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::{BoundaryPoint, Core};
use crate::dynamics::{random_seeds, OrbitParams};
use crate::error::{Error, Result};
use crate::morse::TopologyDescriptor;
use crate::return_map::{ReturnMapSystem, Tolerances};
use crate::thickness::ThicknessField;

/// Where orbits start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// Equispaced normal angles, or a Fibonacci lattice on the sphere.
    Uniform(usize),
    Random { count: usize, rng_seed: u64 },
    /// θ on curves, (colatitude, longitude) on the sphere.
    Explicit(Vec<Vec<f64>>),
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Uniform(64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSettings {
    pub max_steps: usize,
    pub cycle_dist_tol: f64,
    /// Offset grid seeds by 1e-9 in basin scans.
    pub generic_basin: bool,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        Self { max_steps: 10_000, cycle_dist_tol: 1e-7, generic_basin: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Ambient dimension: 2 for planar cores, 3 for the sphere.
    pub dimension: usize,
    pub core: Core,
    pub thickness: ThicknessField,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub orbit: OrbitSettings,
    /// Defaults to the sphere S^{dimension−1}.
    #[serde(default)]
    pub topology: Option<TopologyDescriptor>,
}

fn at(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Scenario { path: path.into(), message: e.to_string() }
}

/// Parses and validates a scenario document; defaults are filled in.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        at(&path, e.into_inner())
    })?;
    sc.validate()?;
    if sc.topology.is_none() {
        sc.topology = Some(TopologyDescriptor::sphere(sc.dimension - 1));
    }
    Ok(sc)
}

impl Scenario {
    fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_".contains(c)) {
            return Err(at("name", "must be a nonempty [A-Za-z0-9_-] identifier"));
        }
        let want = self.core.ambient_dim();
        if self.dimension != want {
            return Err(at("dimension", format!("core lives in dimension {want}, got {}", self.dimension)));
        }
        self.system().map_err(|e| match e {
            Error::GeometryDegenerate(m) => at("core", m),
            other => at("thickness", other),
        })?;
        match &self.seeds {
            SeedSpec::Uniform(0) => return Err(at("seeds.uniform", "seed count must be at least 1")),
            SeedSpec::Random { count: 0, .. } => return Err(at("seeds.random.count", "seed count must be at least 1")),
            SeedSpec::Explicit(list) => {
                for (i, p) in list.iter().enumerate() {
                    if p.len() != self.dimension - 1 {
                        return Err(at(
                            &format!("seeds.explicit[{i}]"),
                            format!("expected {} parameter(s), got {}", self.dimension - 1, p.len()),
                        ));
                    }
                }
            }
            _ => {}
        }
        if let Some(t) = &self.topology {
            if t.betti.len() != self.dimension {
                return Err(at("topology.betti", format!("expected {} Betti numbers", self.dimension)));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<ReturnMapSystem> {
        ReturnMapSystem::new(self.core.clone(), self.thickness.clone(), self.tolerances.clone())
    }

    pub fn topology(&self) -> TopologyDescriptor {
        self.topology.clone().unwrap_or_else(|| TopologyDescriptor::sphere(self.dimension - 1))
    }

    pub fn orbit_params(&self) -> OrbitParams {
        OrbitParams {
            max_steps: self.orbit.max_steps,
            tol_disp: self.tolerances.tol_disp,
            tol_grad: self.tolerances.tol_grad,
        }
    }

    pub fn seed_points(&self) -> Result<Vec<BoundaryPoint>> {
        match &self.seeds {
            SeedSpec::Uniform(n) => Ok(self.core.sample(*n)),
            SeedSpec::Random { count, rng_seed } => random_seeds(&self.core, *count, *rng_seed),
            SeedSpec::Explicit(list) => list.iter().map(|p| self.core.point_from_params(p)).collect(),
        }
    }

    /// Canonical pretty-printed JSON with every default spelled out.
    pub fn normalized(&self) -> String {
        let mut full = self.clone();
        full.topology = Some(self.topology());
        let mut s = serde_json::to_string_pretty(&full).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the normalized form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.normalized().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "circles",
        "dimension": 2,
        "core": {"curve": {"support_fourier": [[1.0, 0.0]]}},
        "thickness": {"fourier": [[1.0, 0.0]]}
    }"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let sc = parse_scenario(MINIMAL).unwrap();
        assert_eq!(sc.tolerances, Tolerances::default());
        assert_eq!(sc.seeds, SeedSpec::Uniform(64));
        assert_eq!(sc.orbit, OrbitSettings::default());
        assert_eq!(sc.topology, Some(TopologyDescriptor { betti: vec![1, 1] }));
        let text = sc.normalized();
        assert!(text.contains("\"newton_tol\": 1e-10"));
        assert_eq!(parse_scenario(&text).unwrap(), sc);
    }

    #[test]
    fn misspelled_key_names_its_path() {
        let bad = MINIMAL.replace("\"thickness\"", "\"thicknes\"");
        match parse_scenario(&bad) {
            Err(Error::Scenario { path, message }) => {
                assert_eq!(path, "thicknes");
                assert!(message.contains("unknown field"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let nested = MINIMAL.replace("\"dimension\": 2,", "\"dimension\": 2, \"tolerances\": {\"slak\": 1.0},");
        match parse_scenario(&nested) {
            Err(Error::Scenario { path, message }) => {
                assert_eq!(path, "tolerances.slak");
                assert!(message.contains("slak"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn random_seeds_need_an_rng_seed() {
        let doc = MINIMAL.replace("\"dimension\": 2,", "\"dimension\": 2, \"seeds\": {\"random\": {\"count\": 5}},");
        match parse_scenario(&doc) {
            Err(Error::Scenario { path, message }) => {
                assert_eq!(path, "seeds.random");
                assert!(message.contains("rng_seed"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invariant_failures_name_their_field() {
        let wrong_dim = MINIMAL.replace("\"dimension\": 2", "\"dimension\": 3");
        assert!(matches!(parse_scenario(&wrong_dim), Err(Error::Scenario { path, .. }) if path == "dimension"));
        let concave = MINIMAL.replace("[[1.0, 0.0]]}}", "[[1.0, 0.0], [0.0, 0.0], [0.5, 0.0]]}}");
        assert!(matches!(parse_scenario(&concave), Err(Error::Scenario { path, .. }) if path == "core"));
        let seeds = MINIMAL.replace("\"dimension\": 2,", "\"dimension\": 2, \"seeds\": {\"explicit\": [[0.1], [0.2, 0.3]]},");
        assert!(matches!(parse_scenario(&seeds), Err(Error::Scenario { path, .. }) if path == "seeds.explicit[1]"));
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_scenario(MINIMAL).unwrap();
        let b = parse_scenario(&MINIMAL.replace("[[1.0, 0.0]]}", "[[1.5, 0.0]]}")).unwrap();
        assert_eq!(a.hash().len(), 64);
        assert_eq!(a.hash(), parse_scenario(&a.normalized()).unwrap().hash());
        assert_ne!(a.hash(), b.hash());
    }
}
