#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Mutex;

use num_rational::Ratio;

use votexfer::apportionment::PoolTable;
use votexfer::dataio::{fixture_text, parse_pools_csv};

pub type Q = Ratio<i128>;

pub fn hungary() -> PoolTable {
    parse_pools_csv(&fixture_text("hungary2014").unwrap()).unwrap()
}

/// Rows of a CSV under `tests/data`, header skipped.
pub fn read_csv(name: &str) -> Vec<csv::StringRecord> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    csv::Reader::from_path(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .records()
        .map(Result::unwrap)
        .collect()
}

static OUTCOMES: Mutex<Vec<(u32, bool)>> = Mutex::new(Vec::new());

/// Prints the criterion's result line and records the outcome.
pub fn report(criterion: u32, name: &str, ok: bool, detail: String) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("{status} [C{criterion:02}] {name}: {detail}");
    OUTCOMES.lock().unwrap().push((criterion, ok));
}

pub fn outcome(criterion: u32) -> Option<bool> {
    OUTCOMES
        .lock()
        .unwrap()
        .iter()
        .find(|(c, _)| *c == criterion)
        .map(|(_, ok)| *ok)
}
