//! Observation streams on disk: a flat binary record file plus a JSON
//! sidecar describing the grid and interpolant.
//!
//! Binary layout (little-endian): magic `NDGO`, format version (u32), then
//! per record: kind tag (u8), components (u8), two zero bytes, time (f64),
//! payload length (u64), payload (f64 × length).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::wire::Reader;
use crate::assimilation::ObservationStream;
use crate::error::{Error, Result};
use crate::interpolants::{Interpolant, InterpolantKind, InterpolantSpec, Observation};
use crate::spectral::{Geometry, Grid};

pub const STREAM_MAGIC: &[u8; 4] = b"NDGO";
pub const STREAM_VERSION: u32 = 1;

/// Grid descriptor shared by sidecars and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub geometry: Geometry,
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn of(grid: &Grid) -> Self {
        Self {
            geometry: grid.geometry(),
            extents: grid.extents().to_vec(),
            resolution: grid.resolution().to_vec(),
        }
    }

    pub fn build(&self) -> Result<Arc<Grid>> {
        if self.resolution.iter().any(|&n| n > 4096) || self.resolution.len() > 3 {
            return Err(Error::Format("grid too large".into()));
        }
        Ok(Arc::new(Grid::new(
            self.geometry,
            &self.extents,
            &self.resolution,
        )?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSidecar {
    pub version: u32,
    pub grid: GridSpec,
    pub interpolant: InterpolantSpec,
    pub records: usize,
}

impl StreamSidecar {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        if s.version == 0 || s.version > STREAM_VERSION {
            return Err(Error::Version {
                found: s.version,
                supported: STREAM_VERSION,
            });
        }
        Ok(s)
    }
}

pub fn encode_records(records: &[Observation]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(STREAM_MAGIC);
    out.extend_from_slice(&STREAM_VERSION.to_le_bytes());
    for r in records {
        out.push(r.kind.tag());
        out.push(r.components as u8);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&r.time.to_le_bytes());
        out.extend_from_slice(&(r.payload.len() as u64).to_le_bytes());
        for v in &r.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_records(bytes: &[u8]) -> Result<Vec<Observation>> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != STREAM_MAGIC {
        return Err(Error::Format(
            "not an observation stream (bad magic)".into(),
        ));
    }
    let version = r.u32()?;
    if version == 0 || version > STREAM_VERSION {
        return Err(Error::Version {
            found: version,
            supported: STREAM_VERSION,
        });
    }
    let mut out = Vec::new();
    while r.remaining() > 0 {
        let kind = InterpolantKind::from_tag(r.u8()?)
            .ok_or_else(|| Error::Format("unknown observation kind".into()))?;
        let components = r.u8()? as usize;
        if r.u16()? != 0 {
            return Err(Error::Format("reserved bytes must be zero".into()));
        }
        let time = r.f64()?;
        let len = r.u64()?;
        if len > (r.remaining() / 8) as u64 {
            return Err(Error::Format(format!(
                "payload length {len} exceeds the file"
            )));
        }
        let payload = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        out.push(Observation {
            kind,
            time,
            components,
            payload,
        });
    }
    Ok(out)
}

/// Sidecar path of a stream file: the same name with extension `json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_stream(stream: &ObservationStream, path: &Path) -> Result<()> {
    let sidecar = StreamSidecar {
        version: STREAM_VERSION,
        grid: GridSpec::of(stream.interpolant().grid()),
        interpolant: stream.spec().clone(),
        records: stream.len(),
    };
    std::fs::write(path, encode_records(stream.records()))?;
    std::fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    Ok(())
}

/// Rebuilds a stream from its sidecar and records; every record is checked
/// against the interpolant.
pub fn stream_from_parts(
    sidecar: &StreamSidecar,
    records: Vec<Observation>,
) -> Result<ObservationStream> {
    if records.len() != sidecar.records {
        return Err(Error::Format(format!(
            "sidecar announces {} records, file has {}",
            sidecar.records,
            records.len()
        )));
    }
    let grid = sidecar.grid.build()?;
    let ip = Arc::new(Interpolant::from_spec(&grid, &sidecar.interpolant)?);
    let mut stream = ObservationStream::new(ip, sidecar.interpolant.c_interp);
    for r in records {
        stream.push(r)?;
    }
    Ok(stream)
}

pub fn read_stream(path: &Path) -> Result<ObservationStream> {
    let sidecar = StreamSidecar::parse(&std::fs::read_to_string(sidecar_path(path))?)?;
    let records = decode_records(&std::fs::read(path)?)?;
    stream_from_parts(&sidecar, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assimilation::initial_state;

    #[test]
    fn records_round_trip() {
        let g = Arc::new(Grid::torus(&[1.0, 1.0], &[16, 16]).unwrap());
        let ip = Interpolant::modal(&g, 4, 1.0).unwrap();
        let s = initial_state(&g, 3, 1.0, 0.0);
        let recs = vec![
            ip.observe_at(&s.u, 0.0).unwrap(),
            ip.observe_at(&s.u, 0.5).unwrap(),
        ];
        assert_eq!(decode_records(&encode_records(&recs)).unwrap(), recs);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_records(b"NDG").is_err());
        let mut v = encode_records(&[]);
        v[4] = 9;
        assert!(matches!(
            decode_records(&v),
            Err(Error::Version { found: 9, .. })
        ));
        let mut w = encode_records(&[]);
        w.extend_from_slice(&[1, 2, 0, 0]);
        w.extend_from_slice(&0f64.to_le_bytes());
        w.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode_records(&w), Err(Error::Format(_))));
        assert!(StreamSidecar::parse("{}").is_err());
    }
}
