//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fracstep_core::adaptive::CurvaturePolicy;
use fracstep_core::analytic::{make_manufactured, ManufacturedProblem};
use fracstep_core::{Impulse, Interval, ProblemSpec, SchemeKind, SpatialGrid, TimestepPolicy};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    PointSource,
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub gamma: f64,
    pub k_coeff: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub n_intervals: usize,
    pub scheme: SchemeKind,
    pub policy: PolicyKind,
    pub dt_fixed: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub curvature_scale: f64,
    /// `None` picks the node nearest the impulse location.
    pub probe_node: Option<usize>,
    pub t_end: f64,
    pub impulse_times: Vec<f64>,
    pub impulse_weight: f64,
    pub impulse_location: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub trials: usize,
    pub levels: usize,
    pub n_steps: usize,
    pub max_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::PointSource,
            gamma: 0.5,
            k_coeff: 1.0,
            x_left: -10.0,
            x_right: 10.0,
            n_intervals: 100,
            scheme: SchemeKind::Implicit,
            policy: PolicyKind::Adaptive,
            dt_fixed: 1e-3,
            dt_min: CurvaturePolicy::DEFAULT_DT_MIN,
            dt_max: CurvaturePolicy::DEFAULT_DT_MAX,
            curvature_scale: CurvaturePolicy::DEFAULT_CURVATURE_SCALE,
            probe_node: None,
            t_end: 2.0,
            impulse_times: vec![0.0, 1.0],
            impulse_weight: 1.0,
            impulse_location: 0.0,
            snapshot_times: vec![4.08e-4, 0.034, 1.0, 1.0004, 2.0],
            seed: 42,
            out_dir: PathBuf::from("."),
            trials: 50,
            levels: 5,
            n_steps: 2000,
            max_steps: fracstep_core::scheme::DEFAULT_MAX_STEPS,
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key}`: {msg}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>().map_err(|e| bad(key, format!("`{v}` is not a number ({e})")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse::<usize>()
        .map_err(|e| bad(key, format!("`{v}` is not a nonnegative integer ({e})")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// Splits `text` into key/value pairs, rejecting malformed lines and
/// duplicate keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = Self::default();
        for (k, v) in parse_pairs(text)? {
            let key = k.as_str();
            match key {
                "problem" => {
                    c.problem = match v.as_str() {
                        "point-source" => ProblemKind::PointSource,
                        "manufactured" => ProblemKind::Manufactured,
                        other => return Err(bad(key, format!("unknown problem `{other}` (point-source|manufactured)"))),
                    }
                }
                "gamma" => c.gamma = parse_f64(key, &v)?,
                "k_coeff" => c.k_coeff = parse_f64(key, &v)?,
                "x_left" => c.x_left = parse_f64(key, &v)?,
                "x_right" => c.x_right = parse_f64(key, &v)?,
                "n_intervals" => c.n_intervals = parse_usize(key, &v)?,
                "scheme" => {
                    c.scheme = match v.as_str() {
                        "implicit" => SchemeKind::Implicit,
                        "explicit" => SchemeKind::Explicit,
                        other => return Err(bad(key, format!("unknown scheme `{other}` (implicit|explicit)"))),
                    }
                }
                "policy" => {
                    c.policy = match v.as_str() {
                        "fixed" => PolicyKind::Fixed,
                        "adaptive" => PolicyKind::Adaptive,
                        other => return Err(bad(key, format!("unknown policy `{other}` (fixed|adaptive)"))),
                    }
                }
                "dt_fixed" => c.dt_fixed = parse_f64(key, &v)?,
                "dt_min" => c.dt_min = parse_f64(key, &v)?,
                "dt_max" => c.dt_max = parse_f64(key, &v)?,
                "curvature_scale" => c.curvature_scale = parse_f64(key, &v)?,
                "probe_node" => c.probe_node = Some(parse_usize(key, &v)?),
                "t_end" => c.t_end = parse_f64(key, &v)?,
                "impulse_times" => c.impulse_times = parse_list(key, &v)?,
                "impulse_weight" => c.impulse_weight = parse_f64(key, &v)?,
                "impulse_location" => c.impulse_location = parse_f64(key, &v)?,
                "snapshot_times" => c.snapshot_times = parse_list(key, &v)?,
                "seed" => c.seed = v.parse().map_err(|e| bad(key, format!("`{v}` is not a seed ({e})")))?,
                "out_dir" => c.out_dir = PathBuf::from(v),
                "trials" => c.trials = parse_usize(key, &v)?,
                "levels" => c.levels = parse_usize(key, &v)?,
                "n_steps" => c.n_steps = parse_usize(key, &v)?,
                "max_steps" => c.max_steps = parse_usize(key, &v)?,
                other => return Err(CliError::Config(format!("unknown key `{other}`"))),
            }
        }
        if c.problem == ProblemKind::Manufactured {
            let defaults = Self::default();
            let left_ok = c.x_left == defaults.x_left || c.x_left == 0.0;
            let right_ok = c.x_right == defaults.x_right || c.x_right == 1.0;
            if !(left_ok && right_ok) {
                return Err(bad("x_left/x_right", "the manufactured problem lives on [0, 1]"));
            }
            c.x_left = 0.0;
            c.x_right = 1.0;
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(bad("t_end", format!("must be positive (got {})", self.t_end)));
        }
        // Building the solver objects runs every bound check once up front.
        let problem = self.problem_spec()?;
        let grid = self.grid(&problem)?;
        self.timestep_policy(&grid)?;
        Ok(())
    }

    pub fn manufactured(&self) -> Result<ManufacturedProblem, CliError> {
        make_manufactured(self.gamma, self.k_coeff).map_err(CliError::config)
    }

    pub fn impulses(&self) -> Vec<Impulse> {
        self.impulse_times
            .iter()
            .map(|&time| Impulse {
                time,
                location: self.impulse_location,
                weight: self.impulse_weight,
            })
            .collect()
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        match self.problem {
            ProblemKind::Manufactured => Ok(self.manufactured()?.problem()),
            ProblemKind::PointSource => {
                let domain = Interval::new(self.x_left, self.x_right).map_err(CliError::config)?;
                let mut p = ProblemSpec::new(self.gamma, self.k_coeff, domain).map_err(CliError::config)?;
                for imp in self.impulses() {
                    p = p.with_impulse(imp).map_err(CliError::config)?;
                }
                Ok(p)
            }
        }
    }

    pub fn grid(&self, problem: &ProblemSpec) -> Result<SpatialGrid, CliError> {
        SpatialGrid::new(problem.domain(), self.n_intervals).map_err(CliError::config)
    }

    pub fn probe(&self, grid: &SpatialGrid) -> Result<usize, CliError> {
        match self.probe_node {
            Some(j) => Ok(j),
            None => {
                let target = match self.problem {
                    ProblemKind::PointSource => self.impulse_location,
                    ProblemKind::Manufactured => 0.5,
                };
                grid.nearest_node(target)
                    .ok_or_else(|| bad("impulse_location", "lies outside the domain"))
            }
        }
    }

    pub fn timestep_policy(&self, grid: &SpatialGrid) -> Result<TimestepPolicy, CliError> {
        match self.policy {
            PolicyKind::Fixed => TimestepPolicy::fixed(self.dt_fixed).map_err(CliError::config),
            PolicyKind::Adaptive => {
                let probe = self.probe(grid)?;
                if probe == 0 || probe >= grid.n_intervals() {
                    return Err(bad("probe_node", format!("must be an interior node in 1..{}", grid.n_intervals())));
                }
                let p = CurvaturePolicy::new(self.dt_min, self.dt_max, self.curvature_scale, probe)
                    .map_err(CliError::config)?;
                Ok(TimestepPolicy::adaptive(p))
            }
        }
    }

    pub fn problem_name(&self) -> &'static str {
        match self.problem {
            ProblemKind::PointSource => "point-source",
            ProblemKind::Manufactured => "manufactured",
        }
    }
}

pub type ExactFn = Box<dyn Fn(f64, f64) -> Option<f64>>;

/// Exact solution, when the configured problem has one.
pub fn exact_solution(config: &RunConfig) -> Result<ExactFn, CliError> {
    match config.problem {
        ProblemKind::Manufactured => {
            let m = config.manufactured()?;
            Ok(Box::new(move |x, t| Some(m.exact_u(x, t))))
        }
        ProblemKind::PointSource => {
            // The real-line solution only stands in for the bounded domain
            // while the solution is negligible at the walls.
            let impulses = config.impulses();
            let (gamma, k) = (config.gamma, config.k_coeff);
            Ok(Box::new(move |x, t| {
                fracstep_core::analytic::impulse_response(x, t, &impulses, gamma, k).ok()
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_point_source_setup() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        let p = c.problem_spec().unwrap();
        let g = c.grid(&p).unwrap();
        assert_eq!(c.probe(&g).unwrap(), 50);
        assert!((g.dx() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn parses_all_keys() {
        let text = "\
            # comment line
            gamma = 0.3   # trailing comment
            k_coeff=2
            x_left = -1
            x_right = 1
            n_intervals = 40
            scheme = explicit
            policy = fixed
            dt_fixed = 0.01
            dt_min = 1e-5
            dt_max = 0.1
            curvature_scale = 10
            probe_node = 20
            t_end = 0.5
            impulse_times = 0, 0.25
            impulse_weight = 2
            snapshot_times = 0.1,0.5
            seed = 7
            out_dir = /tmp/x
        ";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.gamma, 0.3);
        assert_eq!(c.scheme, SchemeKind::Explicit);
        assert_eq!(c.policy, PolicyKind::Fixed);
        assert_eq!(c.impulse_times, vec![0.0, 0.25]);
        assert_eq!(c.snapshot_times, vec![0.1, 0.5]);
        assert_eq!(c.probe_node, Some(20));
        assert_eq!(c.seed, 7);
        assert_eq!(c.out_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn rejects_bad_input() {
        let err = RunConfig::parse("gamma = 1.5").unwrap_err().to_string();
        assert!(err.contains("gamma") && err.contains("0 < gamma < 1"), "{err}");
        assert!(RunConfig::parse("colour = blue").is_err());
        assert!(RunConfig::parse("gamma 0.5").is_err());
        assert!(RunConfig::parse("gamma = 0.5\ngamma = 0.4").is_err());
        assert!(RunConfig::parse("n_intervals = -3").is_err());
        assert!(RunConfig::parse("scheme = magic").is_err());
        assert!(RunConfig::parse("probe_node = 100").is_err());
        assert!(RunConfig::parse("impulse_location = 11").is_err());
        assert!(RunConfig::parse("t_end = 0").is_err());
        assert!(RunConfig::parse("x_left = 1\nx_right = -1").is_err());
        assert!(RunConfig::parse("problem = manufactured\nx_right = 3").is_err());
        assert!(matches!(RunConfig::parse("gamma = 0"), Err(CliError::Config(_))));
    }

    #[test]
    fn manufactured_forces_unit_interval() {
        let c = RunConfig::parse("problem = manufactured\nn_intervals = 20").unwrap();
        assert_eq!((c.x_left, c.x_right), (0.0, 1.0));
        let exact = exact_solution(&c).unwrap();
        assert!((exact(0.5, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }
}
