use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicySpec;
use crate::rl::RlParams;
use crate::rlws::{AttributeSetting, RlwsConfig};
use crate::sim::GpuConfig;
use crate::workload::KernelRef;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_ENV: &str = "WARPSCHED_OUT";

/// A kernel × policy × seed experiment.
///
/// ```toml
/// seeds = [0, 1, 2]
/// baseline = "lrr"
/// output_dir = "out/memory"
/// kernels = [{ template = "ms_reuse4" }, { path = "kernels/mine.txt" }]
/// policies = ["lrr", "gto", { key = "rlws", label = "rlws_i4", decision_interval = 4 }]
///
/// [gpu]
/// num_sms = 2
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub gpu: GpuConfig,
    pub kernels: Vec<KernelRef>,
    pub policies: Vec<PolicyEntry>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_baseline")]
    pub baseline: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Give every seed its own instance of each template kernel. Kernel
    /// files are never reseeded.
    #[serde(default = "yes")]
    pub reseed_templates: bool,
    /// Write one decision log per learned-policy run.
    #[serde(default)]
    pub decision_logs: bool,
    /// Learned policies start each kernel from the weights they ended the
    /// previous kernel with (kernels run in listed order per policy and
    /// seed) instead of from the optimistic initialization.
    #[serde(default)]
    pub persist_theta: bool,
    /// Write the final weights of every learned-policy run as text matrices.
    #[serde(default)]
    pub export_theta: bool,
}

fn default_baseline() -> String {
    "lrr".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("warpsched-out")
}

fn yes() -> bool {
    true
}

/// A policy key, optionally with a label and parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyEntry {
    Key(String),
    Custom(PolicyOverrides),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOverrides {
    pub key: String,
    /// Name used in reports; defaults to the key.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub fetch_group_size: Option<usize>,
    /// Full learned-policy configuration (e.g. a search's `best_rlws.toml`),
    /// relative to the experiment file.
    #[serde(default)]
    pub rlws_file: Option<PathBuf>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub reward: Option<f64>,
    #[serde(default)]
    pub penalty: Option<f64>,
    #[serde(default)]
    pub decision_interval: Option<u32>,
    #[serde(default)]
    pub attributes: Option<Vec<AttributeSetting>>,
}

impl PolicyEntry {
    pub fn key(&self) -> &str {
        match self {
            PolicyEntry::Key(k) => k,
            PolicyEntry::Custom(o) => &o.key,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            PolicyEntry::Key(k) => k,
            PolicyEntry::Custom(o) => o.label.as_deref().unwrap_or(&o.key),
        }
    }

    /// The fully parameterized policy; relative files resolve against `base`.
    pub fn resolve(&self, base: &Path) -> Result<PolicySpec> {
        let o = match self {
            PolicyEntry::Key(k) => return PolicySpec::from_key(k),
            PolicyEntry::Custom(o) => o,
        };
        let mut spec = PolicySpec::from_key(&o.key)?;
        let learned_only = o.rlws_file.is_some()
            || o.alpha.is_some()
            || o.epsilon.is_some()
            || o.gamma.is_some()
            || o.reward.is_some()
            || o.penalty.is_some()
            || o.decision_interval.is_some()
            || o.attributes.is_some();
        match &mut spec {
            PolicySpec::Tl { fetch_group_size } => {
                if let Some(f) = o.fetch_group_size {
                    *fetch_group_size = f;
                }
                if learned_only {
                    return Err(Error::Config(format!("{}: learning overrides need an rlws policy", self.label())));
                }
            }
            PolicySpec::Rlws(c) => {
                if o.fetch_group_size.is_some() {
                    return Err(Error::Config(format!("{}: fetch_group_size applies to tl only", self.label())));
                }
                if let Some(path) = &o.rlws_file {
                    let path = base.join(path);
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    *c = toml::from_str::<RlwsConfig>(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                }
                apply(&mut c.params, o);
                if let Some(i) = o.decision_interval {
                    c.decision_interval = i;
                }
                if let Some(a) = &o.attributes {
                    c.attributes = a.clone();
                }
            }
            _ => {
                if learned_only || o.fetch_group_size.is_some() {
                    return Err(Error::Config(format!("{}: policy `{}` takes no parameters", self.label(), o.key)));
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn apply(p: &mut RlParams, o: &PolicyOverrides) {
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut p.alpha, o.alpha);
    set(&mut p.epsilon, o.epsilon);
    set(&mut p.gamma, o.gamma);
    set(&mut p.reward, o.reward);
    set(&mut p.penalty, o.penalty);
}

impl ExperimentConfig {
    pub fn new(gpu: GpuConfig, kernels: Vec<KernelRef>, policies: &[&str], seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            gpu,
            kernels,
            policies: policies.iter().map(|p| PolicyEntry::Key(p.to_string())).collect(),
            seeds,
            baseline: default_baseline(),
            output_dir: default_output_dir(),
            reseed_templates: true,
            decision_logs: false,
            persist_theta: false,
            export_theta: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() || self.policies.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("need at least one kernel, one policy and one seed".into()));
        }
        let mut labels: Vec<&str> = self.policies.iter().map(|p| p.label()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("policy label `{}` appears twice", w[0])));
        }
        for p in &self.policies {
            PolicySpec::from_key(p.key())?;
        }
        self.gpu.validate()
    }

    /// The output directory after applying the environment override.
    pub fn effective_output_dir(&self) -> PathBuf {
        output_dir_override().unwrap_or_else(|| self.output_dir.clone())
    }
}

/// `WARPSCHED_OUT`, when set and non-empty.
pub fn output_dir_override() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
seeds = [0, 1, 2]
baseline = "lrr"
output_dir = "out/memory"
kernels = [{ template = "ms_reuse4" }, { path = "kernels/mine.txt" }]
policies = ["lrr", "gto", { key = "rlws", label = "rlws_i4", decision_interval = 4 }]

[gpu]
num_sms = 2
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.gpu.num_sms, 2);
        assert_eq!(c.policies[2].label(), "rlws_i4");
        match c.policies[2].resolve(Path::new(".")).unwrap() {
            PolicySpec::Rlws(r) => assert_eq!(r.decision_interval, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_entries() {
        let base = "seeds = [0]\nkernels = [{ template = \"ms_reuse4\" }]\n";
        assert!(ExperimentConfig::from_toml(&format!("{base}policies = [\"gt0\"]")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{base}policies = []")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{base}policies = [\"lrr\", \"lrr\"]")).is_err());
        let c = ExperimentConfig::from_toml(&format!("{base}policies = [{{ key = \"gto\", alpha = 0.1 }}]")).unwrap();
        assert!(c.policies[0].resolve(Path::new(".")).is_err());
    }
}
