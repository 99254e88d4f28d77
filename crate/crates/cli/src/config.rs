//! Experiment description files.
//!
//! An experiment is one TOML document. Every table rejects unknown keys.
//!
//! ```toml
//! name = "fig4"             # output stem, [A-Za-z0-9_-]+
//! seed = 2024               # required, no wall-clock default
//! trials = 100000           # Monte Carlo trials per grid point, >= 1
//! fidelity = "ideal"        # or "physical"; optional, default "ideal"
//! feedback = "direct"       # or "full" / "reduced"; optional
//!
//! [timing]                  # optional; adds the κ-scaled EP column
//! t_p = 10
//! t_d = 100
//! t_f = 5
//!
//! [physical]                # optional; used when fidelity = "physical"
//! t_p = 11                  # Alltop length (prime >= 5)
//! pool_size = 121           # first L sequences of the Alltop family
//! pool_file = "pool.txt"    # or a pool written by `ep-aloha pool-export`
//! snr_db = 20.0
//! n0 = 1.0
//! threshold_factor = 2.0
//! max_support = 5
//!
//! [experiment]
//! kind = "throughput_vs_m_fixed_lambda"
//! lambda = 20.0
//! m = { start = 20, end = 100, step = 5 }
//! arrival = "poisson"       # or "fixed" (K = λ, λ must be an integer)
//! ```
//!
//! Experiment kinds and their keys:
//!
//! | kind | keys |
//! |------|------|
//! | `fig1` | `k` |
//! | `pool_sizing` | `alpha`, `delta`, `m` |
//! | `throughput_vs_m_fixed_lambda` | `lambda`, `m`, `arrival` |
//! | `throughput_vs_m_fixed_alpha` | `alpha`, `m`, `arrival` |
//! | `gain_sweep` | `m`, `k` |
//! | `custom` | `m`, `load`, `arrival` |
//!
//! Grids are either a list (`[1, 2, 5]`) or an inclusive range table
//! (`{ start = 1, end = 9, step = 2 }`).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ep_aloha::analytic::TimingProfile;
use ep_aloha::mc_engine::{FeedbackPath, Fidelity, PhysicalLayer};
use ep_aloha::preamble_phys::{gen_alltop, DetectorConfig, PreamblePool};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub trials: u64,
    #[serde(default)]
    pub fidelity: FidelityKind,
    #[serde(default)]
    pub feedback: FeedbackKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSpec>,
    pub experiment: ExperimentKind,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FidelityKind {
    #[default]
    Ideal,
    Physical,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    #[default]
    Direct,
    Full,
    Reduced,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalKind {
    #[default]
    Poisson,
    /// Exactly `round(load)` users per slot.
    Fixed,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    pub t_p: u32,
    pub t_d: u32,
    pub t_f: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSpec {
    #[serde(default = "default_t_p")]
    pub t_p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_file: Option<PathBuf>,
    #[serde(default = "default_snr_db")]
    pub snr_db: f64,
    #[serde(default = "default_n0")]
    pub n0: f64,
    #[serde(default = "default_threshold_factor")]
    pub threshold_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_support: Option<usize>,
}

fn default_t_p() -> usize {
    11
}

fn default_snr_db() -> f64 {
    20.0
}

fn default_n0() -> f64 {
    1.0
}

fn default_threshold_factor() -> f64 {
    2.0
}

impl Default for PhysicalSpec {
    fn default() -> Self {
        Self {
            t_p: default_t_p(),
            pool_size: None,
            pool_file: None,
            snr_db: default_snr_db(),
            n0: default_n0(),
            threshold_factor: default_threshold_factor(),
            max_support: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentKind {
    Fig1 {
        k: Grid<u64>,
    },
    PoolSizing {
        alpha: Grid<f64>,
        delta: f64,
        m: u64,
    },
    ThroughputVsMFixedLambda {
        lambda: f64,
        m: Grid<u64>,
        #[serde(default)]
        arrival: ArrivalKind,
    },
    ThroughputVsMFixedAlpha {
        alpha: f64,
        m: Grid<u64>,
        #[serde(default)]
        arrival: ArrivalKind,
    },
    GainSweep {
        m: u64,
        k: Grid<u64>,
    },
    Custom {
        m: Grid<u64>,
        load: Grid<f64>,
        #[serde(default)]
        arrival: ArrivalKind,
    },
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Fig1 { .. } => "fig1",
            ExperimentKind::PoolSizing { .. } => "pool_sizing",
            ExperimentKind::ThroughputVsMFixedLambda { .. } => "throughput_vs_m_fixed_lambda",
            ExperimentKind::ThroughputVsMFixedAlpha { .. } => "throughput_vs_m_fixed_alpha",
            ExperimentKind::GainSweep { .. } => "gain_sweep",
            ExperimentKind::Custom { .. } => "custom",
        }
    }
}

/// Explicit list or inclusive arithmetic range.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Grid<T> {
    List(Vec<T>),
    Range(RangeSpec<T>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec<T> {
    pub start: T,
    pub end: T,
    pub step: T,
}

impl Grid<u64> {
    pub fn range(start: u64, end: u64, step: u64) -> Self {
        Grid::Range(RangeSpec { start, end, step })
    }

    pub fn values(&self, what: &str) -> Result<Vec<u64>> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => {
                if r.step == 0 {
                    return Err(CliError::config(format!("{what}: range step must be positive")));
                }
                if r.end < r.start {
                    return Err(CliError::config(format!("{what}: range end is below start")));
                }
                (r.start..=r.end).step_by(r.step as usize).collect()
            }
        };
        nonempty(v, what)
    }
}

impl Grid<f64> {
    pub fn values(&self, what: &str) -> Result<Vec<f64>> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => {
                if !(r.step > 0.0 && r.step.is_finite()) {
                    return Err(CliError::config(format!("{what}: range step must be positive")));
                }
                if !(r.end >= r.start) {
                    return Err(CliError::config(format!("{what}: range end is below start")));
                }
                // Points are start + i·step, so there is no drift from repeated addition.
                let n = ((r.end - r.start) / r.step + 1e-9).floor() as u64;
                (0..=n).map(|i| r.start + i as f64 * r.step).collect()
            }
        };
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(CliError::config(format!("{what}: non-finite value {bad}")));
        }
        nonempty(v, what)
    }
}

fn nonempty<T>(v: Vec<T>, what: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        Err(CliError::config(format!("{what}: grid is empty")))
    } else {
        Ok(v)
    }
}

/// Values set on the command line or through `EP_ALOHA_*` variables; they
/// take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub fidelity: Option<FidelityKind>,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string().trim_end().to_owned()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut spec = Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        // Relative pool files resolve against the config's directory.
        if let Some(phy) = spec.physical.as_mut() {
            if let Some(file) = phy.pool_file.as_mut() {
                if file.is_relative() {
                    if let Some(dir) = path.parent() {
                        *file = dir.join(&*file);
                    }
                }
            }
        }
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment specs always serialize")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(trials) = o.trials {
            self.trials = trials;
        }
        if let Some(fidelity) = o.fidelity {
            self.fidelity = fidelity;
        }
        self.validate()
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(CliError::config(format!(
                "name: {:?} must be non-empty and use only letters, digits, '_' or '-'",
                self.name
            )));
        }
        if self.trials == 0 {
            return Err(CliError::config("trials: must be at least 1"));
        }
        self.timing()?;
        match &self.experiment {
            ExperimentKind::Fig1 { k } => {
                let ks = k.values("k")?;
                if ks.iter().any(|&k| !(1..=1_000_000).contains(&k)) {
                    return Err(CliError::config("k: values must lie in [1, 1000000]"));
                }
            }
            ExperimentKind::PoolSizing { alpha, delta, m } => {
                let alphas = alpha.values("alpha")?;
                if alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
                    return Err(CliError::config("alpha: values must lie in (0, 1]"));
                }
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(CliError::config("delta: must lie in (0, 1)"));
                }
                check_channels(&[*m])?;
            }
            ExperimentKind::ThroughputVsMFixedLambda { lambda, m, arrival } => {
                check_channels(&m.values("m")?)?;
                check_load(*lambda, *arrival, "lambda")?;
            }
            ExperimentKind::ThroughputVsMFixedAlpha { alpha, m, arrival } => {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(CliError::config("alpha: must be positive"));
                }
                for m in m.values("m")? {
                    check_channels(&[m])?;
                    check_load(alpha * m as f64, *arrival, "alpha·M")?;
                }
            }
            ExperimentKind::GainSweep { m, k } => {
                check_channels(&[*m])?;
                let ks = k.values("k")?;
                let (lo, hi) = (ks.iter().min().unwrap(), ks.iter().max().unwrap());
                if !(lo <= m && m <= hi) {
                    return Err(CliError::config(format!("k: grid [{lo}, {hi}] must bracket M = {m}")));
                }
            }
            ExperimentKind::Custom { m, load, arrival } => {
                check_channels(&m.values("m")?)?;
                for l in load.values("load")? {
                    check_load(l, *arrival, "load")?;
                }
            }
        }
        if self.fidelity == FidelityKind::Physical {
            let phy = self.physical.clone().unwrap_or_default();
            if phy.pool_file.is_some() && phy.pool_size.is_some() {
                return Err(CliError::config("physical: give pool_file or pool_size, not both"));
            }
            if !(phy.snr_db.is_finite()) {
                return Err(CliError::config("physical.snr_db: must be finite"));
            }
            if !(phy.n0 > 0.0 && phy.n0.is_finite()) {
                return Err(CliError::config("physical.n0: must be positive"));
            }
            if !(phy.threshold_factor > 0.0 && phy.threshold_factor.is_finite()) {
                return Err(CliError::config("physical.threshold_factor: must be positive"));
            }
        }
        Ok(())
    }

    pub fn timing(&self) -> Result<Option<TimingProfile>> {
        self.timing
            .map(|t| TimingProfile::new(t.t_p, t.t_d, t.t_f))
            .transpose()
            .map_err(|e| CliError::config(format!("timing: {e}")))
    }

    pub fn feedback_path(&self) -> FeedbackPath {
        match self.feedback {
            FeedbackKind::Direct => FeedbackPath::Direct,
            FeedbackKind::Full => FeedbackPath::FullCodec,
            FeedbackKind::Reduced => FeedbackPath::ReducedCodec,
        }
    }

    /// Builds the fidelity model, generating or loading the preamble pool.
    pub fn build_fidelity(&self) -> Result<Fidelity> {
        if self.fidelity == FidelityKind::Ideal {
            return Ok(Fidelity::Ideal);
        }
        let phy = self.physical.clone().unwrap_or_default();
        let pool = match &phy.pool_file {
            Some(path) => {
                let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
                PreamblePool::read_text(std::io::BufReader::new(file))
                    .map_err(|e| CliError::config(format!("physical.pool_file: {e}")))?
            }
            None => {
                let full = gen_alltop(phy.t_p).map_err(|e| CliError::config(format!("physical.t_p: {e}")))?;
                match phy.pool_size {
                    Some(l) => full
                        .truncated(l)
                        .map_err(|e| CliError::config(format!("physical.pool_size: {e}")))?,
                    None => full,
                }
            }
        };
        let detector = DetectorConfig {
            n0: phy.n0,
            threshold_factor: phy.threshold_factor,
            max_support: phy.max_support,
        };
        let layer = PhysicalLayer::new(Arc::new(pool), phy.snr_db, detector)
            .map_err(|e| CliError::config(format!("physical: {e}")))?;
        Ok(Fidelity::Physical(layer))
    }
}

fn check_channels(ms: &[u64]) -> Result<()> {
    if ms.iter().any(|&m| m == 0 || m > 1_000_000) {
        return Err(CliError::config("m: channel counts must lie in [1, 1000000]"));
    }
    Ok(())
}

fn check_load(load: f64, arrival: ArrivalKind, what: &str) -> Result<()> {
    match arrival {
        ArrivalKind::Poisson if !(load > 0.0 && load.is_finite()) => Err(CliError::config(format!(
            "{what}: Poisson load must be positive, got {load}"
        ))),
        ArrivalKind::Fixed if !(load >= 0.0 && load.fract() == 0.0 && load <= 1e7) => Err(CliError::config(format!(
            "{what}: fixed arrivals need a whole number of users, got {load}"
        ))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG4: &str = r#"
name = "fig4"
seed = 7
trials = 1000

[experiment]
kind = "throughput_vs_m_fixed_lambda"
lambda = 20.0
m = { start = 20, end = 100, step = 5 }
"#;

    #[test]
    fn parses_range_grid() {
        let spec = ExperimentSpec::from_toml_str(FIG4).unwrap();
        assert_eq!(spec.fidelity, FidelityKind::Ideal);
        let ExperimentKind::ThroughputVsMFixedLambda { m, arrival, .. } = &spec.experiment else {
            panic!("wrong kind");
        };
        assert_eq!(*arrival, ArrivalKind::Poisson);
        let ms = m.values("m").unwrap();
        assert_eq!(ms.len(), 17);
        assert_eq!((ms[0], ms[16]), (20, 100));
    }

    #[test]
    fn round_trips_through_toml() {
        let spec = ExperimentSpec::from_toml_str(FIG4).unwrap();
        let again = ExperimentSpec::from_toml_str(&spec.to_toml_string()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn rejects_unknown_keys_everywhere() {
        let top = FIG4.replace("trials = 1000", "trials = 1000\ntrails = 3");
        assert!(matches!(ExperimentSpec::from_toml_str(&top), Err(CliError::Config(_))));
        let inner = FIG4.replace("lambda = 20.0", "lambda = 20.0\nlamda = 3");
        assert!(matches!(
            ExperimentSpec::from_toml_str(&inner),
            Err(CliError::Config(_))
        ));
        let range = FIG4.replace("step = 5", "step = 5, stop = 9");
        assert!(ExperimentSpec::from_toml_str(&range).is_err());
        let timing = format!("{FIG4}\n[timing]\nt_p = 1\nt_d = 9\nt_f = 1\nt_x = 0\n");
        assert!(ExperimentSpec::from_toml_str(&timing).is_err());
    }

    #[test]
    fn seed_and_trials_are_required() {
        assert!(ExperimentSpec::from_toml_str(&FIG4.replace("seed = 7", "")).is_err());
        assert!(ExperimentSpec::from_toml_str(&FIG4.replace("trials = 1000", "trials = 0")).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        let empty = FIG4.replace("m = { start = 20, end = 100, step = 5 }", "m = []");
        assert!(ExperimentSpec::from_toml_str(&empty).is_err());
        let zero_step = FIG4.replace("step = 5", "step = 0");
        assert!(ExperimentSpec::from_toml_str(&zero_step).is_err());
        let zero_m = FIG4.replace("m = { start = 20, end = 100, step = 5 }", "m = [0, 4]");
        assert!(ExperimentSpec::from_toml_str(&zero_m).is_err());
    }

    #[test]
    fn float_ranges_hit_their_endpoint() {
        let g = Grid::Range(RangeSpec {
            start: 0.2,
            end: 1.0,
            step: 0.2,
        });
        let v = g.values("alpha").unwrap();
        assert_eq!(v.len(), 5);
        assert!((v[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_sweep_must_bracket_m() {
        let text = "name = \"g\"\nseed = 1\ntrials = 5\n[experiment]\nkind = \"gain_sweep\"\nm = 50\nk = [60, 70]\n";
        assert!(ExperimentSpec::from_toml_str(text).is_err());
    }

    #[test]
    fn fixed_arrivals_need_whole_loads() {
        let text = FIG4.replace("lambda = 20.0", "lambda = 20.5\narrival = \"fixed\"");
        assert!(ExperimentSpec::from_toml_str(&text).is_err());
        let ok = FIG4.replace("lambda = 20.0", "lambda = 20.0\narrival = \"fixed\"");
        assert!(ExperimentSpec::from_toml_str(&ok).is_ok());
    }

    #[test]
    fn overrides_win_and_are_validated() {
        let mut spec = ExperimentSpec::from_toml_str(FIG4).unwrap();
        let o = Overrides {
            seed: Some(99),
            trials: Some(5),
            fidelity: Some(FidelityKind::Physical),
        };
        spec.apply(&o).unwrap();
        assert_eq!((spec.seed, spec.trials, spec.fidelity), (99, 5, FidelityKind::Physical));
        assert!(spec
            .apply(&Overrides {
                trials: Some(0),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn physical_defaults_build_an_alltop_pool() {
        let mut spec = ExperimentSpec::from_toml_str(FIG4).unwrap();
        spec.fidelity = FidelityKind::Physical;
        match spec.build_fidelity().unwrap() {
            Fidelity::Physical(p) => {
                assert_eq!(p.pool.len(), 121);
                assert_eq!(p.snr_db, 20.0);
            }
            Fidelity::Ideal => panic!("expected physical"),
        }
        spec.physical = Some(PhysicalSpec {
            t_p: 6,
            ..Default::default()
        });
        assert!(matches!(spec.build_fidelity(), Err(CliError::Config(_))));
    }
}
