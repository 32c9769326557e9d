//! On-disk dataset layout: `manifest.json` holds the time base and one
//! metadata entry per record; `traces.f32` holds the samples as little-endian
//! IEEE-754 binary32, row-major, one row of `n_t` values per record in
//! manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Orientation, Provenance, SampleRecord, TimeBase, TimeTrace};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACES_FILE: &str = "traces.f32";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub g_b: f64,
    pub a: f64,
    pub series_id: u32,
    pub acq_index: u32,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub record_count: usize,
    pub n_t: usize,
    pub dt: f64,
    pub t0: f64,
    pub provenance: Provenance,
    pub records: Vec<RecordMeta>,
}

pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tb = dataset.time_base();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        record_count: dataset.len(),
        n_t: tb.n_t,
        dt: tb.dt,
        t0: tb.t0,
        provenance: dataset.provenance.clone(),
        records: dataset
            .records()
            .iter()
            .map(|r| RecordMeta {
                g_b: r.g_b,
                a: r.a,
                series_id: r.series_id,
                acq_index: r.acq_index,
                orientation: r.orientation,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))?;

    let mut payload = Vec::with_capacity(dataset.len() * tb.n_t * 4);
    for r in dataset.records() {
        for s in &r.trace.samples {
            payload.extend_from_slice(&s.to_le_bytes());
        }
    }
    let tpath = dir.join(TRACES_FILE);
    fs::write(&tpath, payload).map_err(|e| Error::io(&tpath, e))?;
    Ok(())
}

pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", mpath.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Manifest(format!("unsupported format version {}", manifest.format_version)));
    }
    if manifest.record_count != manifest.records.len() {
        return Err(Error::Manifest(format!(
            "record_count {} but {} record entries",
            manifest.record_count,
            manifest.records.len()
        )));
    }
    let tpath = dir.join(TRACES_FILE);
    let payload = fs::read(&tpath).map_err(|e| Error::io(&tpath, e))?;
    let expected = manifest.record_count * manifest.n_t * 4;
    if payload.len() != expected {
        return Err(Error::Manifest(format!(
            "payload has {} bytes, manifest implies {expected}",
            payload.len()
        )));
    }
    let tb = TimeBase { n_t: manifest.n_t, dt: manifest.dt, t0: manifest.t0 };
    let row_bytes = tb.n_t * 4;
    let mut records = Vec::with_capacity(manifest.record_count);
    for (i, meta) in manifest.records.into_iter().enumerate() {
        let row = &payload[i * row_bytes..(i + 1) * row_bytes];
        let samples = row
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        records.push(SampleRecord {
            trace: TimeTrace::new(samples, tb.dt, tb.t0).map_err(|e| Error::Manifest(format!("record {i}: {e}")))?,
            g_b: meta.g_b,
            a: meta.a,
            series_id: meta.series_id,
            acq_index: meta.acq_index,
            orientation: meta.orientation,
        });
    }
    Dataset::new(tb, records, manifest.provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::toy_dataset;

    #[test]
    fn empty_dataset_has_empty_payload() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::empty(TimeBase::paper());
        write_dataset(&d, dir.path()).unwrap();
        assert_eq!(fs::metadata(dir.path().join(TRACES_FILE)).unwrap().len(), 0);
        let m: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.record_count, 0);
        assert_eq!(read_dataset(dir.path()).unwrap(), d);
    }

    #[test]
    fn single_record_payload_size() {
        let dir = tempfile::tempdir().unwrap();
        let d = toy_dataset(1, 1, 760);
        write_dataset(&d, dir.path()).unwrap();
        assert_eq!(fs::metadata(dir.path().join(TRACES_FILE)).unwrap().len(), 760 * 4);
        assert_eq!(read_dataset(dir.path()).unwrap(), d);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&toy_dataset(1, 2, 8), dir.path()).unwrap();
        let p = dir.path().join(TRACES_FILE);
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 4);
        fs::write(&p, bytes).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Manifest(_))));
    }

    #[test]
    fn malformed_manifest_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&toy_dataset(1, 2, 8), dir.path()).unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), "{\"record_count\": 2").unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Manifest(_))));
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&toy_dataset(1, 2, 8), dir.path()).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&p).unwrap().replace("\"record_count\": 2", "\"record_count\": 3");
        fs::write(&p, text).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Manifest(_))));
    }
}
