//! Append-only observation store.
//!
//! A store is a directory of segment files, one per append batch:
//!
//! ```text
//! #icestore v1
//! 5f1d2a3b	2012-01-01T00:00:00Z,1,0.73
//! ```
//!
//! Each data line carries the CRC-32 (IEEE) of the record text after the tab,
//! as eight lowercase hex digits. Segments are written to a temporary file and
//! renamed into place, so readers only ever see complete segments. A `LOCK`
//! file in the root marks an active writer.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};

use crate::error::{Error, Result};
use crate::grid::PointId;
use crate::ingest::{self, IceObservation, ParseOptions, SeriesQuery};

pub const STORE_HEADER: &str = "#icestore v1";
pub const LOCK_FILE: &str = "LOCK";
const SEGMENT_PREFIX: &str = "seg-";
const SEGMENT_SUFFIX: &str = ".ice";

type Key = (PointId, DateTime<Utc>);

#[derive(Debug, Clone)]
pub struct StoreSegment {
    pub path: PathBuf,
    pub records: Vec<IceObservation>,
}

#[derive(Debug)]
pub struct StoreHandle {
    root: PathBuf,
    segments: Vec<StoreSegment>,
    index: BTreeMap<Key, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrityFailure {
    pub file: PathBuf,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntegrityReport {
    pub segments_checked: usize,
    pub records_checked: usize,
    pub failures: Vec<IntegrityFailure>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn checksum(record: &str) -> u32 {
    crc32fast::hash(record.as_bytes())
}

/// Open (creating if needed) the store rooted at `root`, verifying every line.
pub fn open_store(root: impl AsRef<Path>) -> Result<StoreHandle> {
    let root = root.as_ref().to_path_buf();
    fs::create_dir_all(&root)?;
    let mut handle = StoreHandle {
        root,
        segments: Vec::new(),
        index: BTreeMap::new(),
    };
    for path in segment_paths(&handle.root)? {
        let text = fs::read_to_string(&path)?;
        let mut records = Vec::new();
        for item in scan_segment(&text) {
            match item {
                Ok((_, obs)) => records.push(obs),
                Err((line, reason)) => {
                    return Err(Error::Corruption {
                        file: path,
                        line,
                        reason,
                    })
                }
            }
        }
        for r in &records {
            if let Some(&existing) = handle.index.get(&(r.point_id, r.timestamp)) {
                if existing != r.concentration {
                    return Err(conflict(r, existing));
                }
            } else {
                handle.index.insert((r.point_id, r.timestamp), r.concentration);
            }
        }
        handle.segments.push(StoreSegment { path, records });
    }
    Ok(handle)
}

/// Recompute every checksum under `root` without requiring a clean store.
pub fn verify_root(root: impl AsRef<Path>) -> Result<IntegrityReport> {
    let mut report = IntegrityReport::default();
    for path in segment_paths(root.as_ref())? {
        let bytes = fs::read(&path)?;
        report.segments_checked += 1;
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(e) => {
                let bytes = e.into_bytes();
                let bad = bytes.iter().position(|&b| b >= 0x80).unwrap_or(0);
                let line = 1 + bytes[..bad].iter().filter(|&&b| b == b'\n').count();
                // Keep checking the remaining lines of the file.
                let lossy = String::from_utf8_lossy(&bytes).into_owned();
                collect(&lossy, &path, &mut report);
                if !report.failures.iter().any(|f| f.file == path && f.line == line) {
                    report.failures.push(IntegrityFailure {
                        file: path.clone(),
                        line,
                        reason: "invalid UTF-8".into(),
                    });
                }
                continue;
            }
        };
        collect(&text, &path, &mut report);
    }
    Ok(report)
}

fn collect(text: &str, path: &Path, report: &mut IntegrityReport) {
    for item in scan_segment(text) {
        match item {
            Ok(_) => report.records_checked += 1,
            Err((line, reason)) => report.failures.push(IntegrityFailure {
                file: path.to_path_buf(),
                line,
                reason,
            }),
        }
    }
}

impl StoreHandle {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn segments(&self) -> &[StoreSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Persist validated records as a new segment.
    ///
    /// Exact duplicates (within the batch or against stored data) are skipped;
    /// a contradictory duplicate aborts the whole batch. Returns the number of
    /// newly stored records.
    pub fn append_records(&mut self, records: &[IceObservation]) -> Result<usize> {
        for r in records {
            ingest::validate(r)?;
        }
        let batch = ingest::normalize(records.to_vec())?;
        let mut fresh = Vec::new();
        for r in batch {
            match self.index.get(&(r.point_id, r.timestamp)) {
                Some(&existing) if existing == r.concentration => {}
                Some(&existing) => return Err(conflict(&r, existing)),
                None => fresh.push(r),
            }
        }
        if fresh.is_empty() {
            return Ok(0);
        }

        let _lock = LockGuard::acquire(&self.root)?;
        let path = self.next_segment_path()?;
        let mut text = String::from(STORE_HEADER);
        text.push('\n');
        for r in &fresh {
            let body = r.to_record_line();
            text.push_str(&format!("{:08x}\t{}\n", checksum(&body), body));
        }
        let tmp = path.with_extension("tmp");
        {
            let mut f = OpenOptions::new().write(true).create_new(true).open(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;

        for r in &fresh {
            self.index.insert((r.point_id, r.timestamp), r.concentration);
        }
        let n = fresh.len();
        self.segments.push(StoreSegment {
            path,
            records: fresh,
        });
        Ok(n)
    }

    /// Stored records for the query's point inside its window, oldest first.
    pub fn query_range(&self, query: &SeriesQuery) -> Vec<IceObservation> {
        let lo = (query.point_id, midnight(query.from));
        let hi = (query.point_id, midnight(query.to));
        self.index
            .range(lo..=hi)
            .map(|(&(p, ts), &c)| IceObservation {
                point_id: p,
                timestamp: ts,
                concentration: c,
                source: "store".into(),
            })
            .collect()
    }

    /// All records ordered by `(point_id, timestamp)`.
    pub fn all_records(&self) -> Vec<IceObservation> {
        self.index
            .iter()
            .map(|(&(p, ts), &c)| IceObservation {
                point_id: p,
                timestamp: ts,
                concentration: c,
                source: "store".into(),
            })
            .collect()
    }

    pub fn point_ids(&self) -> Vec<PointId> {
        let mut ids: Vec<PointId> = self.index.keys().map(|k| k.0).collect();
        ids.dedup();
        ids
    }

    /// Re-read every segment from disk and recompute its checksums.
    pub fn verify_integrity(&self) -> IntegrityReport {
        verify_root(&self.root).unwrap_or_else(|e| IntegrityReport {
            segments_checked: 0,
            records_checked: 0,
            failures: vec![IntegrityFailure {
                file: self.root.clone(),
                line: 0,
                reason: e.to_string(),
            }],
        })
    }

    fn next_segment_path(&self) -> Result<PathBuf> {
        let last = segment_paths(&self.root)?
            .iter()
            .filter_map(|p| segment_number(p))
            .max()
            .unwrap_or(0);
        Ok(self
            .root
            .join(format!("{SEGMENT_PREFIX}{:06}{SEGMENT_SUFFIX}", last + 1)))
    }
}

fn midnight(day: NaiveDate) -> DateTime<Utc> {
    day.and_time(chrono::NaiveTime::MIN).and_utc()
}

fn conflict(r: &IceObservation, existing: f64) -> Error {
    Error::IntegrityConflict {
        point_id: r.point_id,
        date: r.day().to_string(),
        existing,
        incoming: r.concentration,
    }
}

fn segment_number(path: &Path) -> Option<u64> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix(SEGMENT_PREFIX)?
        .strip_suffix(SEGMENT_SUFFIX)?
        .parse()
        .ok()
}

fn segment_paths(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.exists() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<(u64, PathBuf)> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| segment_number(&p).map(|n| (n, p)))
        .collect();
    paths.sort();
    Ok(paths.into_iter().map(|(_, p)| p).collect())
}

/// Yields each data line as a decoded record, or `(line number, reason)`.
fn scan_segment(text: &str) -> impl Iterator<Item = std::result::Result<(usize, IceObservation), (usize, String)>> + '_ {
    let mut lines = text.split_inclusive('\n').enumerate();
    let header = match lines.next() {
        Some((_, h)) if h == format!("{STORE_HEADER}\n") => None,
        _ => Some(Err((1, format!("missing `{STORE_HEADER}` header")))),
    };
    let mut sorted_after: Option<Key> = None;
    header.into_iter().chain(lines.filter_map(move |(i, raw)| {
        let lineno = i + 1;
        let Some(line) = raw.strip_suffix('\n') else {
            return Some(Err((lineno, "truncated line (no newline)".to_string())));
        };
        if line.is_empty() {
            return Some(Err((lineno, "empty line".to_string())));
        }
        let Some((crc, body)) = line.split_once('\t') else {
            return Some(Err((lineno, "missing checksum separator".to_string())));
        };
        if crc.len() != 8 || !crc.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Some(Err((lineno, format!("malformed checksum `{crc}`"))));
        }
        let expected = u32::from_str_radix(crc, 16).expect("validated hex");
        let actual = checksum(body);
        if expected != actual {
            return Some(Err((
                lineno,
                format!("checksum mismatch: stored {expected:08x}, computed {actual:08x}"),
            )));
        }
        let opts = ParseOptions {
            coerce_midnight: false,
            source: "store",
        };
        let obs = match ingest::parse_records_with(body, opts) {
            Ok(mut v) if v.len() == 1 => v.remove(0),
            Ok(_) => return Some(Err((lineno, "not a record".to_string()))),
            Err(e) => return Some(Err((lineno, e.to_string()))),
        };
        let key = (obs.point_id, obs.timestamp);
        if sorted_after.is_some_and(|prev| prev >= key) {
            return Some(Err((lineno, "records out of (point, timestamp) order".to_string())));
        }
        sorted_after = Some(key);
        Some(Ok((lineno, obs)))
    }))
}

struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(root: &Path) -> Result<Self> {
        let path = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(root.to_path_buf()))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
