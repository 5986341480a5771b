//! TOML experiment configuration: one section per sweep axis, every field
//! defaulted so a missing file or section still yields a runnable setup.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Accept either a scalar or a list for sweep axes (`mu = 1.0` and
/// `mu = [0.01, 10.0]` both parse).
fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(vs) => vs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Star,
    Complete,
}

impl GraphKind {
    pub fn build(self, n: usize) -> Result<Graph> {
        match self {
            GraphKind::Star => Graph::star(n),
            GraphKind::Complete => Graph::complete(n),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSection {
    pub kind: GraphKind,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            kind: GraphKind::Star,
            n: vec![7],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub target: usize,
    /// Fixed hopping rate; absent means calibrate per size on the default
    /// grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    #[serde(deserialize_with = "one_or_many")]
    pub mu: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub nu: Vec<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            mu: vec![0.01, 0.1, 1.0, 10.0],
            nu: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_max: f64,
    /// Grid points including t = 0.
    pub points: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            t_max: 25.0,
            points: 101,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivisibilitySection {
    pub tau_max: f64,
    pub step: f64,
}

impl Default for DivisibilitySection {
    fn default() -> Self {
        DivisibilitySection {
            tau_max: crate::measures::DEFAULT_TAU_MAX,
            step: crate::measures::DEFAULT_TAU_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    /// Only the balanced state orthogonal to the uniform superposition.
    Optimal,
    /// Full candidate pool: node states, Laplacian eigenstates, the balanced
    /// orthogonal state, and seeded random states.
    Search,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlpSection {
    pub t_max: f64,
    pub dt: f64,
    pub pool: PoolKind,
    pub random_candidates: usize,
}

impl Default for BlpSection {
    fn default() -> Self {
        BlpSection {
            t_max: crate::measures::DEFAULT_BLP_T_MAX,
            dt: crate::measures::DEFAULT_BLP_DT,
            pool: PoolKind::Optimal,
            random_candidates: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub trajectories: usize,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            trajectories: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub graph: GraphSection,
    pub search: SearchSection,
    pub noise: NoiseSection,
    pub time: TimeSection,
    pub divisibility: DivisibilitySection,
    pub blp: BlpSection,
    pub mc: McSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.graph.n.is_empty() {
            return fail("graph.n must list at least one size".into());
        }
        for &n in &self.graph.n {
            if n < 2 {
                return fail(format!("graph.n entries must be >= 2, got {n}"));
            }
            if self.search.target >= n {
                return fail(format!(
                    "search.target {} out of range for size {n}",
                    self.search.target
                ));
            }
        }
        if let Some(g) = self.search.gamma {
            if !g.is_finite() || g < 0.0 {
                return fail(format!("search.gamma must be finite and >= 0, got {g}"));
            }
        }
        if self.noise.mu.is_empty() {
            return fail("noise.mu must list at least one switching rate".into());
        }
        for &mu in &self.noise.mu {
            if !mu.is_finite() || mu <= 0.0 {
                return fail(format!("noise.mu entries must be positive, got {mu}"));
            }
        }
        if self.noise.nu.is_empty() {
            return fail("noise.nu must list at least one amplitude".into());
        }
        for &nu in &self.noise.nu {
            if !nu.is_finite() || !(0.0..=1.0).contains(&nu) {
                return fail(format!("noise.nu entries must lie in [0, 1], got {nu}"));
            }
        }
        if !self.time.t_max.is_finite() || self.time.t_max <= 0.0 {
            return fail(format!(
                "time.t_max must be positive, got {}",
                self.time.t_max
            ));
        }
        if self.time.points < 2 {
            return fail(format!(
                "time.points must be >= 2, got {}",
                self.time.points
            ));
        }
        if !self.divisibility.tau_max.is_finite() || self.divisibility.tau_max <= 0.0 {
            return fail(format!(
                "divisibility.tau_max must be positive, got {}",
                self.divisibility.tau_max
            ));
        }
        if !self.divisibility.step.is_finite()
            || self.divisibility.step <= 0.0
            || self.divisibility.step > self.divisibility.tau_max
        {
            return fail(format!(
                "divisibility.step must lie in (0, tau_max], got {}",
                self.divisibility.step
            ));
        }
        if !self.blp.t_max.is_finite() || self.blp.t_max <= 0.0 {
            return fail(format!(
                "blp.t_max must be positive, got {}",
                self.blp.t_max
            ));
        }
        if !self.blp.dt.is_finite() || self.blp.dt <= 0.0 || self.blp.dt > self.blp.t_max {
            return fail(format!(
                "blp.dt must lie in (0, t_max], got {}",
                self.blp.dt
            ));
        }
        if self.mc.trajectories == 0 {
            return fail("mc.trajectories must be >= 1".into());
        }
        if self.output.dir.is_empty() {
            return fail("output.dir must not be empty".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn scalar_and_list_axes_both_parse() {
        let cfg: ExperimentConfig =
            toml::from_str("[graph]\nn = 5\n[noise]\nmu = 1.0\nnu = [0.5, 1.0]\n").unwrap();
        assert_eq!(cfg.graph.n, vec![5]);
        assert_eq!(cfg.noise.mu, vec![1.0]);
        assert_eq!(cfg.noise.nu, vec![0.5, 1.0]);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("[graph]\nm = 5\n").is_err());
        assert!(toml::from_str::<ExperimentConfig>("typo = 1\n").is_err());
    }

    #[test]
    fn bad_values_fail_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.noise.mu.clear();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));

        let mut cfg = ExperimentConfig::default();
        cfg.noise.nu = vec![1.5];
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.search.target = 7;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.divisibility.step = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.mc.trajectories = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.graph.n, cfg.graph.n);
        assert_eq!(back.noise.mu, cfg.noise.mu);
        assert_eq!(back.blp.dt, cfg.blp.dt);
    }
}
