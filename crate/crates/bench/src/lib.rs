//! Shared inputs for the benchmarks.

use std::path::{Path, PathBuf};

use dflow_core::catalog::{Documents, ResolutionTable};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn listing(n: u32) -> String {
    std::fs::read_to_string(fixtures().join(format!("listing{n}.dfl"))).expect("fixture listing")
}

pub fn documents() -> Documents {
    ResolutionTable::load(&fixtures().join("catalogs.json"))
        .and_then(|t| t.load_all())
        .expect("fixture catalogs")
}
