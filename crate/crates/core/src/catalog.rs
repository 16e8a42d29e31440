//! Built-in automata and pencils.
//!
//! Files are compiled into the library. Setting `SPECTRA_CATALOG_DIR` makes
//! lookups try `$SPECTRA_CATALOG_DIR/<id>.json` (and `pencils/<id>.json`) first.

use std::path::{Path, PathBuf};

use crate::automaton::{parse_automaton, Automaton};
use crate::error::{Error, Result};
use crate::pencil::PencilSpec;

pub const CATALOG_ENV: &str = "SPECTRA_CATALOG_DIR";

const AUTOMATA: &[(&str, &str)] = &[
    ("grigorchuk", include_str!("../catalog/grigorchuk.json")),
    ("lamplighter", include_str!("../catalog/lamplighter.json")),
    ("dinf", include_str!("../catalog/dinf.json")),
    ("odometer", include_str!("../catalog/odometer.json")),
    ("tangled", include_str!("../catalog/tangled.json")),
    ("hanoi", include_str!("../catalog/hanoi.json")),
    ("basilica", include_str!("../catalog/basilica.json")),
    ("img_z2_plus_i", include_str!("../catalog/img_z2_plus_i.json")),
    ("gupta_sidki", include_str!("../catalog/gupta_sidki.json")),
];

const PENCILS: &[(&str, &str)] = &[
    ("grigorchuk", include_str!("../catalog/pencils/grigorchuk.json")),
    ("hanoi", include_str!("../catalog/pencils/hanoi.json")),
    ("tangled", include_str!("../catalog/pencils/tangled.json")),
    ("basilica", include_str!("../catalog/pencils/basilica.json")),
    ("img_z2_plus_i", include_str!("../catalog/pencils/img_z2_plus_i.json")),
];

/// Ids of the built-in automata, in catalog order.
pub fn ids() -> Vec<&'static str> {
    AUTOMATA.iter().map(|(id, _)| *id).collect()
}

pub fn pencil_ids() -> Vec<&'static str> {
    PENCILS.iter().map(|(id, _)| *id).collect()
}

fn override_file(relative: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(CATALOG_ENV)?;
    let path = Path::new(&dir).join(relative);
    path.is_file().then_some(path)
}

fn source(table: &[(&str, &'static str)], relative: String, id: &str) -> Result<String> {
    if let Some(path) = override_file(&relative) {
        return Ok(std::fs::read_to_string(path)?);
    }
    table
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| Error::Unsupported(id.to_string(), "not in the catalog".to_string()))
}

pub fn automaton(id: &str) -> Result<Automaton> {
    parse_automaton(&source(AUTOMATA, format!("{id}.json"), id)?)
}

pub fn pencil(id: &str) -> Result<PencilSpec> {
    let text = source(PENCILS, format!("pencils/{id}.json"), id)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn automaton_from_path(path: &Path) -> Result<Automaton> {
    parse_automaton(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_loads() {
        for id in ids() {
            let aut = automaton(id).unwrap();
            assert_eq!(aut.name(), id);
        }
        for id in pencil_ids() {
            assert_eq!(pencil(id).unwrap().group, id);
        }
        assert!(automaton("nope").is_err());
    }
}
