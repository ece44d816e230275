//! Per-language runner specifications and the registry that loads them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Language;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read registry file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("registry parse error: {0}")]
    Parse(String),
    #[error("runner {language}: {message}")]
    InvalidSpec { language: String, message: String },
    #[error("missing toolchains: {0}")]
    MissingToolchains(String),
}

/// How one language's programs are compiled and run.
///
/// Command templates are argument vectors, never shell strings, so user code
/// can't be interpreted by a shell. `{src}`, `{bin}` and `{workspace}` are
/// substituted per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunnerSpec {
    pub language: Language,
    /// Source-file extension without the dot.
    pub extension: String,
    /// Workspace-layout override; defaults to `main.{extension}`.
    #[serde(default)]
    pub source_name: Option<String>,
    /// Compile argv template; absent for interpreted languages.
    #[serde(default)]
    pub compile: Option<Vec<String>>,
    /// Run argv template.
    pub run: Vec<String>,
}

impl RunnerSpec {
    pub fn source_file_name(&self) -> String {
        self.source_name
            .clone()
            .unwrap_or_else(|| format!("main.{}", self.extension))
    }

    fn validate(&self) -> Result<(), RegistryError> {
        let fail = |message: &str| {
            Err(RegistryError::InvalidSpec {
                language: self.language.to_string(),
                message: message.to_string(),
            })
        };
        if self.run.is_empty() {
            return fail("run command is empty");
        }
        if !self
            .run
            .iter()
            .any(|arg| arg.contains("{src}") || arg.contains("{bin}"))
        {
            return fail("run command must reference {src} or {bin}");
        }
        if let Some(compile) = &self.compile {
            if compile.is_empty() {
                return fail("compile command is empty");
            }
            if !compile.iter().any(|arg| arg.contains("{src}")) {
                return fail("compile command must reference {src}");
            }
        }
        Ok(())
    }

    /// The executable that must exist on PATH for this spec to be usable:
    /// the compile command's program when compiling, else the run command's.
    fn toolchain_program(&self) -> &str {
        match &self.compile {
            Some(compile) => &compile[0],
            None => &self.run[0],
        }
    }
}

/// Process-level isolation knobs applied to every judged program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Isolation {
    /// Move the child into an empty network namespace.
    pub deny_network: bool,
    /// Drop to this uid/gid before exec. `auto` resolves to `nobody` when
    /// the judge itself runs as root, and to no-op otherwise.
    #[serde(default)]
    pub run_as_uid: Option<u32>,
    #[serde(default)]
    pub run_as_gid: Option<u32>,
}

impl Default for Isolation {
    fn default() -> Self {
        // Drop privileges when running as root so judged code cannot touch
        // files outside its world-writable workspace.
        let root = unsafe { libc::geteuid() } == 0;
        Isolation {
            deny_network: true,
            run_as_uid: root.then_some(65534),
            run_as_gid: root.then_some(65534),
        }
    }
}

impl Isolation {
    /// No confinement at all; only for trusted fixtures.
    pub fn none() -> Self {
        Isolation {
            deny_network: false,
            run_as_uid: None,
            run_as_gid: None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RegistryFile {
    #[serde(default)]
    isolation: Option<Isolation>,
    #[serde(rename = "runner")]
    runners: Vec<RunnerSpec>,
}

/// Immutable registry of runner specs, probed at load time.
#[derive(Debug, Clone)]
pub struct RunnerRegistry {
    specs: BTreeMap<Language, RunnerSpec>,
    isolation: Isolation,
}

impl RunnerRegistry {
    /// Parse a declarative TOML registry and probe every toolchain.
    pub fn from_toml_str(text: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile = toml::from_str(text).map_err(|e| RegistryError::Parse(e.to_string()))?;
        Self::build(file.runners, file.isolation.unwrap_or_default())
    }

    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Specs for the toolchains commonly present on a dev box. Registry
    /// files are the production path; this covers tests and smoke runs.
    pub fn builtin() -> Result<Self, RegistryError> {
        let specs = vec![
            RunnerSpec {
                language: Language::new("python"),
                extension: "py".into(),
                source_name: None,
                compile: None,
                run: vec!["python3".into(), "{src}".into()],
            },
            RunnerSpec {
                language: Language::new("c"),
                extension: "c".into(),
                source_name: None,
                compile: Some(vec![
                    "gcc".into(),
                    "-O2".into(),
                    "-o".into(),
                    "{bin}".into(),
                    "{src}".into(),
                ]),
                run: vec!["{bin}".into()],
            },
            RunnerSpec {
                language: Language::new("cpp"),
                extension: "cpp".into(),
                source_name: None,
                compile: Some(vec![
                    "g++".into(),
                    "-O2".into(),
                    "-std=c++17".into(),
                    "-o".into(),
                    "{bin}".into(),
                    "{src}".into(),
                ]),
                run: vec!["{bin}".into()],
            },
            RunnerSpec {
                language: Language::new("bash"),
                extension: "sh".into(),
                source_name: None,
                compile: None,
                run: vec!["bash".into(), "{src}".into()],
            },
            RunnerSpec {
                language: Language::new("javascript"),
                extension: "js".into(),
                source_name: None,
                compile: None,
                run: vec!["node".into(), "{src}".into()],
            },
        ];
        Self::build(specs, Isolation::default())
    }

    fn build(runners: Vec<RunnerSpec>, isolation: Isolation) -> Result<Self, RegistryError> {
        let mut specs = BTreeMap::new();
        let mut missing = Vec::new();
        for spec in runners {
            spec.validate()?;
            let program = spec.toolchain_program();
            if !program.contains('{') && resolve_program(program).is_none() {
                missing.push(format!("{} ({program})", spec.language));
            }
            specs.insert(spec.language.clone(), spec);
        }
        if !missing.is_empty() {
            return Err(RegistryError::MissingToolchains(missing.join(", ")));
        }
        Ok(RunnerRegistry { specs, isolation })
    }

    pub fn get(&self, language: &Language) -> Option<&RunnerSpec> {
        self.specs.get(language)
    }

    pub fn languages(&self) -> impl Iterator<Item = &Language> {
        self.specs.keys()
    }

    pub fn isolation(&self) -> &Isolation {
        &self.isolation
    }

    pub fn with_isolation(mut self, isolation: Isolation) -> Self {
        self.isolation = isolation;
        self
    }
}

/// PATH lookup for a program name; absolute paths are checked directly.
fn resolve_program(name: &str) -> Option<PathBuf> {
    let candidate = Path::new(name);
    if candidate.is_absolute() {
        return candidate.is_file().then(|| candidate.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|p| p.is_file())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_probes_clean() {
        let registry = RunnerRegistry::builtin().unwrap();
        assert!(registry.get(&Language::new("python")).is_some());
        assert!(registry.get(&Language::new("cpp")).is_some());
    }

    #[test]
    fn missing_toolchain_fails_at_load() {
        let toml = r#"
            [[runner]]
            language = "fancy"
            extension = "fy"
            run = ["definitely-not-a-real-binary-name", "{src}"]
        "#;
        let err = RunnerRegistry::from_toml_str(toml).unwrap_err();
        assert!(matches!(err, RegistryError::MissingToolchains(_)));
    }

    #[test]
    fn run_template_must_reference_artifact() {
        let toml = r#"
            [[runner]]
            language = "python"
            extension = "py"
            run = ["python3"]
        "#;
        let err = RunnerRegistry::from_toml_str(toml).unwrap_err();
        assert!(matches!(err, RegistryError::InvalidSpec { .. }));
    }

    #[test]
    fn registry_file_roundtrip() {
        let toml = r#"
            [isolation]
            deny_network = false

            [[runner]]
            language = "python"
            extension = "py"
            run = ["python3", "{src}"]
        "#;
        let registry = RunnerRegistry::from_toml_str(toml).unwrap();
        assert!(!registry.isolation().deny_network);
        assert_eq!(
            registry.get(&Language::new("python")).unwrap().source_file_name(),
            "main.py"
        );
    }
}
