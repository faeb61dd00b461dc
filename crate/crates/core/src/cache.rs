//! Append-only JSON-lines store of `PhiRecord`s keyed by presentation hash,
//! class and `q`. Later lines win over earlier ones.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::warn;

use crate::lietype::LieClass;
use crate::phi::PhiRecord;

pub const CACHE_ENV: &str = "LIEQUOT_CACHE";

#[derive(Clone, Debug)]
pub struct Cache {
    path: PathBuf,
}

impl Cache {
    pub fn new(path: impl Into<PathBuf>) -> Cache {
        Cache { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Last stored record for the key. Records from random search are
    /// returned only when `exact_only` is false.
    pub fn lookup(&self, hash: &str, class: LieClass, q: u64, exact_only: bool) -> io::Result<Option<PhiRecord>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut found = None;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PhiRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    warn!("{}:{}: skipping corrupt cache line: {e}", self.path.display(), lineno + 1);
                    continue;
                }
            };
            if rec.hash == hash && rec.class() == class && rec.q == q && (rec.exact || !exact_only) {
                found = Some(rec);
            }
        }
        Ok(found)
    }

    pub fn append(&self, rec: &PhiRecord) -> io::Result<()> {
        let mut line = serde_json::to_string(rec)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lietype::XType;

    fn record(q: u64, n_phi: u64, exact: bool) -> PhiRecord {
        PhiRecord {
            hash: "abc".into(),
            xtype: XType::A1,
            d: 1,
            q,
            n_phi0: n_phi + 5,
            n_phi,
            orbit_count: n_phi / 336,
            images: vec![],
            exact,
        }
    }

    const A1: LieClass = LieClass { xtype: XType::A1, d: 1 };

    #[test]
    fn round_trip_and_last_writer_wins() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("c.jsonl"));
        assert!(cache.lookup("abc", A1, 7, true).unwrap().is_none());
        cache.append(&record(7, 336, true)).unwrap();
        assert_eq!(cache.lookup("abc", A1, 7, true).unwrap(), Some(record(7, 336, true)));
        cache.append(&record(7, 672, true)).unwrap();
        assert_eq!(cache.lookup("abc", A1, 7, true).unwrap().unwrap().n_phi, 672);
        assert!(cache.lookup("abd", A1, 7, true).unwrap().is_none());
    }

    #[test]
    fn inexact_records_are_not_served_as_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("c.jsonl"));
        cache.append(&record(9, 0, false)).unwrap();
        assert!(cache.lookup("abc", A1, 9, true).unwrap().is_none());
        assert!(cache.lookup("abc", A1, 9, false).unwrap().is_some());
    }

    #[test]
    fn corrupt_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, "{not json\n").unwrap();
        let cache = Cache::new(&path);
        cache.append(&record(5, 120, true)).unwrap();
        assert_eq!(cache.lookup("abc", A1, 5, true).unwrap().unwrap().n_phi, 120);
    }
}
