use std::collections::HashSet;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gmukf_core::harness::{ScenarioSpec, SystemSpec};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// On-disk scenario file: an optional shared system and any number of
/// `[[scenario]]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Used by every scenario that has no `system` table of its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub scenario: Vec<ScenarioSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpannedFile {
    #[serde(default)]
    system: Option<SystemSpec>,
    #[serde(default)]
    scenario: Vec<Spanned<ScenarioSpec>>,
}

/// Only used to see which keys a scenario table spells out.
#[derive(Deserialize)]
struct KeysOnly {
    #[serde(default)]
    scenario: Vec<toml::Table>,
}

fn line_of(text: &str, offset: usize) -> usize {
    1 + text[..offset.min(text.len())].matches('\n').count()
}

/// Parses and validates a scenario file held in memory. `origin` prefixes
/// every error message.
pub fn parse_config_str(text: &str, origin: &str) -> Result<Vec<ScenarioSpec>> {
    let file: SpannedFile = toml::from_str(text).map_err(|e| anyhow!("{origin}: {e}"))?;
    let keys: KeysOnly = toml::from_str(text).map_err(|e| anyhow!("{origin}: {e}"))?;
    if file.scenario.is_empty() {
        bail!("{origin}: no [[scenario]] table");
    }
    let mut names = HashSet::new();
    let mut specs = Vec::with_capacity(file.scenario.len());
    for (spanned, table) in file.scenario.into_iter().zip(&keys.scenario) {
        let line = line_of(text, spanned.span().start);
        let mut spec = spanned.into_inner();
        if let (Some(shared), false) = (&file.system, table.contains_key("system")) {
            spec.system = shared.clone();
        }
        let at = format!("{origin}:{line}: scenario '{}'", spec.name);
        spec.validate().map_err(|e| anyhow!("{at}: {e}"))?;
        spec.system.build().map_err(|e| anyhow!("{at}: system: {e}"))?;
        if !names.insert(spec.name.clone()) {
            bail!("{at}: duplicate scenario name");
        }
        specs.push(spec);
    }
    Ok(specs)
}

pub fn parse_config(path: &Path) -> Result<Vec<ScenarioSpec>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config_str(&text, &path.display().to_string())
}

/// Serializes scenarios in the format read by [`parse_config_str`].
pub fn to_config_string(specs: &[ScenarioSpec]) -> Result<String> {
    let file = ConfigFile { system: None, scenario: specs.to_vec() };
    toml::to_string(&file).context("serializing scenarios")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_numbers_count_from_one() {
        assert_eq!(line_of("a\nb\nc", 0), 1);
        assert_eq!(line_of("a\nb\nc", 2), 2);
        assert_eq!(line_of("a\nb\nc", 99), 3);
    }
}
