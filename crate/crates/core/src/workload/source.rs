use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::format;
use super::generate::generate;
use super::spec::KernelSpec;
use super::suite::template;
use crate::error::{Error, Result};

/// Where a kernel comes from: a named built-in template or a kernel file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelRef {
    Template { template: String },
    Path { path: PathBuf },
}

impl KernelRef {
    pub fn template(name: &str) -> Self {
        KernelRef::Template {
            template: name.to_string(),
        }
    }

    /// Loads or generates the kernel. Relative paths resolve against `base`.
    pub fn resolve(&self, base: &Path) -> Result<KernelSpec> {
        self.resolve_seeded(base, None)
    }

    /// Like [`resolve`](Self::resolve), but a template's generation seed is
    /// first mixed with `run_seed`, giving a fresh instance of the same
    /// kernel shape per run seed. Kernel files are returned unchanged.
    pub fn resolve_seeded(&self, base: &Path, run_seed: Option<u64>) -> Result<KernelSpec> {
        match self {
            KernelRef::Template { template: name } => {
                let mut t = template(name).ok_or_else(|| {
                    Error::Config(format!(
                        "unknown kernel template `{name}`; valid templates: {}",
                        super::suite::template_names().join(", ")
                    ))
                })?;
                if let Some(s) = run_seed {
                    t.seed = crate::seed::derive(t.seed, s);
                }
                generate(&t)
            }
            KernelRef::Path { path } => format::load(&base.join(path)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            KernelRef::Template { template } => template.clone(),
            KernelRef::Path { path } => path.display().to_string(),
        }
    }
}
