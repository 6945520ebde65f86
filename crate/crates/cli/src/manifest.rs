//! Run manifests: the fully resolved configuration archived beside the
//! outputs, so any run can be reproduced from its own artifacts.

use std::path::Path;

use crate::config::LoadedConfig;
use crate::{CliError, Command};

pub fn write_manifest(
    loaded: &LoadedConfig,
    command: Command,
    out_dir: &Path,
) -> Result<(), CliError> {
    let body = toml::to_string_pretty(&loaded.config)
        .map_err(|e| CliError::Runtime(format!("cannot serialize manifest: {e}")))?;
    let text = format!(
        "# resolved configuration\ncommand = \"{}\"\nversion = \"{}\"\n\n{body}",
        command.name(),
        env!("CARGO_PKG_VERSION"),
    );
    let path = out_dir.join(format!("manifest_{}.toml", command.name()));
    std::fs::write(&path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write `{}`: {e}", path.display())))
}
