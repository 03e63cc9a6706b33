//! Experiment configuration: a flat TOML key-value file whose keys mirror
//! [`ExperimentConfig`]. Keys left out take the defaults of the chosen test.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::problems::{self, RingVelocity};
use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Test1,
    Test2,
    Test3,
    Solitons,
}

impl TestId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Test1 => "test1",
            Self::Test2 => "test2",
            Self::Test3 => "test3",
            Self::Solitons => "solitons",
        }
    }

    /// Damping coefficient the problem is posed with.
    pub fn gamma(self) -> f64 {
        match self {
            Self::Solitons => problems::SOLITON_GAMMA,
            _ => 0.0,
        }
    }
}

impl FromStr for TestId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "test1" => Ok(Self::Test1),
            "2" | "test2" => Ok(Self::Test2),
            "3" | "test3" => Ok(Self::Test3),
            "solitons" => Ok(Self::Solitons),
            _ => Err(HarnessError::Config(format!("unknown test '{s}' (expected 1, 2, 3 or solitons)"))),
        }
    }
}

/// Mesh generator; `mesh_sizes` counts cells for `voronoi` and cells per
/// side for the grid-based families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFamily {
    Voronoi,
    Distorted,
    Nonconvex,
    Triangles,
}

impl FromStr for MeshFamily {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "voronoi" => Ok(Self::Voronoi),
            "distorted" => Ok(Self::Distorted),
            "nonconvex" => Ok(Self::Nonconvex),
            "triangles" => Ok(Self::Triangles),
            _ => Err(HarnessError::Config(format!("unknown mesh family '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentChoice {
    ProductApprox,
    Quadrature,
    /// Both, side by side (treatment comparison).
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub test: TestId,
    pub mesh_family: MeshFamily,
    pub mesh_sizes: Vec<usize>,
    pub lloyd_iterations: usize,
    /// Node perturbation for the `distorted` family, as a fraction of the cell size.
    pub distortion: f64,
    pub dt: Vec<f64>,
    pub t_final: f64,
    pub theta: f64,
    pub gamma: f64,
    pub treatment: TreatmentChoice,
    pub quadrature_degree: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// When false, the `seconds` column is written as 0 so outputs are byte-reproducible.
    pub timing: bool,
    pub second_order_start: bool,
    pub newton_tol: f64,
    pub newton_max_iterations: usize,
    /// Field snapshot times (soliton runs).
    pub snapshot_times: Vec<f64>,
    /// Initial velocity profile of the soliton ring.
    pub ring_velocity: RingVelocity,
}

/// Cell count giving a maximum diameter close to 0.45 on the soliton quarter domain.
pub const SOLITON_CELLS: usize = 3200;
/// Cell count giving a maximum diameter close to 0.0108 on the unit square.
pub const TEST3_CELLS: usize = 20000;

impl ExperimentConfig {
    pub fn defaults(test: TestId) -> Self {
        let mut cfg = Self {
            test,
            mesh_family: MeshFamily::Voronoi,
            mesh_sizes: vec![],
            lloyd_iterations: 100,
            distortion: 0.3,
            dt: vec![0.01],
            t_final: 1.0,
            theta: 0.5,
            gamma: test.gamma(),
            treatment: TreatmentChoice::ProductApprox,
            quadrature_degree: 4,
            seed: 1,
            output_dir: PathBuf::from("out").join(test.name()),
            timing: true,
            second_order_start: false,
            newton_tol: 1e-10,
            newton_max_iterations: 25,
            snapshot_times: vec![],
            ring_velocity: RingVelocity::default(),
        };
        match test {
            TestId::Test1 => cfg.mesh_sizes = vec![500, 1000, 2000, 5000],
            TestId::Test2 => {
                cfg.mesh_sizes = vec![80, 320, 1300, 5300];
                cfg.treatment = TreatmentChoice::Both;
                // u_tt(0) ≠ 0 here; the one-sided start would cap the error at O(dt)
                cfg.second_order_start = true;
            }
            TestId::Test3 => {
                cfg.mesh_sizes = vec![TEST3_CELLS];
                cfg.dt = vec![1.0 / 5.0, 1.0 / 10.0, 1.0 / 20.0, 1.0 / 40.0];
            }
            TestId::Solitons => {
                cfg.mesh_sizes = vec![SOLITON_CELLS];
                cfg.t_final = 11.0;
                cfg.snapshot_times = vec![0.0, 11.0];
            }
        }
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let cfg = raw.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.mesh_sizes.is_empty() || self.mesh_sizes.contains(&0) {
            return bad("mesh_sizes must be a non-empty list of positive sizes".into());
        }
        if self.dt.is_empty() || self.dt.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return bad("dt must be a non-empty list of positive steps".into());
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final = {} must be positive", self.t_final));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta = {} not in [0, 1]", self.theta));
        }
        if self.gamma != self.test.gamma() {
            return bad(format!("{} is posed with gamma = {}, got {}", self.test.name(), self.test.gamma(), self.gamma));
        }
        if !(0.0..0.5).contains(&self.distortion) {
            return bad(format!("distortion = {} not in [0, 0.5)", self.distortion));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iterations == 0 {
            return bad("newton_tol must be positive and newton_max_iterations at least 1".into());
        }
        match self.test {
            TestId::Test1 | TestId::Test2 if self.mesh_sizes.windows(2).any(|w| w[1] <= w[0]) => {
                return bad("mesh_sizes must increase (finer levels last)".into());
            }
            TestId::Test3 if self.dt.windows(2).any(|w| w[1] >= w[0]) => {
                return bad("dt must decrease for a temporal sweep".into());
            }
            _ => {}
        }
        if self.test == TestId::Test2 && self.dt.len() != 1 {
            return bad("test2 uses a single dt".into());
        }
        if self.snapshot_times.iter().any(|&t| !(0.0..=self.t_final).contains(&t)) {
            return bad("snapshot_times must lie in [0, t_final]".into());
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    test: TestId,
    mesh_family: Option<MeshFamily>,
    mesh_sizes: Option<Vec<usize>>,
    lloyd_iterations: Option<usize>,
    distortion: Option<f64>,
    dt: Option<Vec<f64>>,
    t_final: Option<f64>,
    theta: Option<f64>,
    gamma: Option<f64>,
    treatment: Option<TreatmentChoice>,
    quadrature_degree: Option<usize>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    timing: Option<bool>,
    second_order_start: Option<bool>,
    newton_tol: Option<f64>,
    newton_max_iterations: Option<usize>,
    snapshot_times: Option<Vec<f64>>,
    ring_velocity: Option<RingVelocity>,
}

impl RawConfig {
    fn resolve(self) -> ExperimentConfig {
        let d = ExperimentConfig::defaults(self.test);
        ExperimentConfig {
            test: self.test,
            mesh_family: self.mesh_family.unwrap_or(d.mesh_family),
            mesh_sizes: self.mesh_sizes.unwrap_or(d.mesh_sizes),
            lloyd_iterations: self.lloyd_iterations.unwrap_or(d.lloyd_iterations),
            distortion: self.distortion.unwrap_or(d.distortion),
            dt: self.dt.unwrap_or(d.dt),
            t_final: self.t_final.unwrap_or(d.t_final),
            theta: self.theta.unwrap_or(d.theta),
            gamma: self.gamma.unwrap_or(d.gamma),
            treatment: self.treatment.unwrap_or(d.treatment),
            quadrature_degree: self.quadrature_degree.unwrap_or(d.quadrature_degree),
            seed: self.seed.unwrap_or(d.seed),
            output_dir: self.output_dir.unwrap_or(d.output_dir),
            timing: self.timing.unwrap_or(d.timing),
            second_order_start: self.second_order_start.unwrap_or(d.second_order_start),
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            newton_max_iterations: self.newton_max_iterations.unwrap_or(d.newton_max_iterations),
            snapshot_times: self.snapshot_times.unwrap_or(d.snapshot_times),
            ring_velocity: self.ring_velocity.unwrap_or(d.ring_velocity),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for t in [TestId::Test1, TestId::Test2, TestId::Test3, TestId::Solitons] {
            ExperimentConfig::defaults(t).validate().unwrap();
        }
        assert_eq!(ExperimentConfig::defaults(TestId::Solitons).gamma, 0.05);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str("test = \"test3\"\nmesh_sizes = [200]\ntiming = false\n").unwrap();
        assert_eq!(cfg.mesh_sizes, vec![200]);
        assert_eq!(cfg.dt.len(), 4);
        assert!(!cfg.timing);
        assert_eq!(cfg.mesh_family, MeshFamily::Voronoi);
    }

    #[test]
    fn round_trip_through_toml() {
        let cfg = ExperimentConfig::defaults(TestId::Test2);
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml_str("test = \"test1\"\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("test = \"solitons\"\ngamma = 0.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("test = \"test3\"\ndt = [0.1, 0.2]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("test = \"test1\"\nmesh_sizes = [100, 50]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("test = \"test1\"\ntheta = 2.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("mesh_sizes = [1]\n").is_err());
        assert!("4".parse::<TestId>().is_err());
        assert_eq!("2".parse::<TestId>().unwrap(), TestId::Test2);
    }
}
