//! Output directory handling. Every file lands directly inside the resolved
//! directory and starts with a header recording the seed and configuration.

use std::fs;
use std::path::{Component, Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;

pub const OUTPUT_ENV: &str = "MSDECONV_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "msdeconv-out";

#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    /// Flag, then config, then the environment, then `msdeconv-out`.
    pub fn resolve(flag: Option<&Path>, config: &RunConfig) -> Result<Self, CliError> {
        let root = flag
            .map(Path::to_path_buf)
            .or_else(|| config.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        fs::create_dir_all(&root).map_err(|e| {
            CliError::Runtime(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let mut parts = Path::new(name).components();
        match (parts.next(), parts.next()) {
            (Some(Component::Normal(_)), None) => {}
            _ => {
                return Err(CliError::Runtime(format!(
                    "refusing to write `{name}` outside the output directory"
                )))
            }
        }
        let path = self.root.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// `# `-prefixed lines naming the subcommand, seed and resolved config.
pub fn header(subcommand: &str, config: &RunConfig, extra: &[String]) -> String {
    let mut out = format!("# msdeconv {subcommand}\n# seed = {}\n", config.seed);
    for line in extra {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("# resolved config:\n");
    for line in config.to_toml().lines() {
        out.push_str("#   ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// The same header as an XML comment for vector graphics.
pub fn svg_header(subcommand: &str, config: &RunConfig, extra: &[String]) -> String {
    let body = header(subcommand, config, extra).replace("--", "- -");
    format!("<!--\n{body}-->\n")
}
