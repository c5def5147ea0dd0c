//! Far-field matrix container and its JSON file format.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DsmError, Result};
use crate::geometry::{Dimension, DirectionSet, Point, WaveContext};

pub type CMatrix = DMatrix<Complex64>;

/// Where a far-field matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Clean,
    Noisy { delta: f64, seed: u64 },
}

impl Provenance {
    pub fn is_noisy(&self) -> bool {
        matches!(self, Provenance::Noisy { .. })
    }
}

/// M×M far-field samples; row = observation direction, column = incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldMatrix {
    context: WaveContext,
    dirs: DirectionSet,
    entries: CMatrix,
    provenance: Provenance,
}

impl FarFieldMatrix {
    pub fn new(
        context: WaveContext,
        dirs: DirectionSet,
        entries: CMatrix,
        provenance: Provenance,
    ) -> Result<Self> {
        let m = dirs.len();
        if entries.nrows() != m || entries.ncols() != m {
            return Err(DsmError::DimensionMismatch {
                expected: m,
                got: entries.nrows().max(entries.ncols()),
            });
        }
        if context.dimension() != dirs.dimension() {
            return Err(DsmError::InvalidArgument(
                "direction set and wave context disagree on dimension".into(),
            ));
        }
        Ok(Self {
            context,
            dirs,
            entries,
            provenance,
        })
    }

    pub fn context(&self) -> &WaveContext {
        &self.context
    }

    pub fn dirs(&self) -> &DirectionSet {
        &self.dirs
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn m(&self) -> usize {
        self.dirs.len()
    }

    pub(crate) fn with_entries(&self, entries: CMatrix, provenance: Provenance) -> Self {
        Self {
            context: self.context,
            dirs: self.dirs.clone(),
            entries,
            provenance,
        }
    }

    pub fn to_file_repr(&self) -> FarFieldFile {
        let dim = self.context.dimension().as_usize();
        let m = self.m();
        let row = |f: fn(&Complex64) -> f64, i: usize| -> Vec<f64> {
            (0..m).map(|j| f(&self.entries[(i, j)])).collect()
        };
        FarFieldFile {
            dimension: dim as u8,
            k: self.context.k(),
            m,
            directions: self
                .dirs
                .directions()
                .iter()
                .map(|d| d[..dim].to_vec())
                .collect(),
            re: (0..m).map(|i| row(|z| z.re, i)).collect(),
            im: (0..m).map(|i| row(|z| z.im, i)).collect(),
            provenance: self.provenance.into(),
        }
    }

    pub fn from_file_repr(file: FarFieldFile) -> Result<Self> {
        let dimension = Dimension::try_from(file.dimension)?;
        let context = WaveContext::new(dimension, file.k)?;
        let m = file.m;
        let bad = |msg: String| DsmError::Format(msg);
        if file.directions.len() != m || file.re.len() != m || file.im.len() != m {
            return Err(bad(format!("expected {m} directions and {m} rows")));
        }
        let dim = dimension.as_usize();
        let mut dirs = Vec::with_capacity(m);
        for (j, d) in file.directions.iter().enumerate() {
            if d.len() != dim {
                return Err(bad(format!("direction {j} has {} components", d.len())));
            }
            let mut p: Point = [0.0; 3];
            p[..dim].copy_from_slice(d);
            dirs.push(p);
        }
        let dirs = DirectionSet::new(dimension, dirs)?;
        let mut entries = CMatrix::zeros(m, m);
        for i in 0..m {
            if file.re[i].len() != m || file.im[i].len() != m {
                return Err(bad(format!("row {i} does not have {m} columns")));
            }
            for j in 0..m {
                entries[(i, j)] = Complex64::new(file.re[i][j], file.im[i][j]);
            }
        }
        let provenance = file.provenance.try_into()?;
        Self::new(context, dirs, entries, provenance)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.to_file_repr())
            .map_err(|e| DsmError::Format(e.to_string()))?;
        w.write_all(b"\n")
            .map_err(|e| DsmError::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: FarFieldFile =
            serde_json::from_reader(r).map_err(|e| DsmError::Format(e.to_string()))?;
        Self::from_file_repr(file)
    }
}

/// On-disk layout of a far-field matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldFile {
    pub dimension: u8,
    pub k: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub directions: Vec<Vec<f64>>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    pub provenance: ProvenanceFile,
}

/// Flat provenance record; `delta` and `seed` are zero for clean data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceFile {
    pub kind: String,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
}

impl From<Provenance> for ProvenanceFile {
    fn from(p: Provenance) -> Self {
        match p {
            Provenance::Clean => ProvenanceFile {
                kind: "clean".into(),
                delta: 0.0,
                seed: 0,
            },
            Provenance::Noisy { delta, seed } => ProvenanceFile {
                kind: "noisy".into(),
                delta,
                seed,
            },
        }
    }
}

impl TryFrom<ProvenanceFile> for Provenance {
    type Error = DsmError;

    fn try_from(p: ProvenanceFile) -> Result<Self> {
        match p.kind.as_str() {
            "clean" => Ok(Provenance::Clean),
            "noisy" => Ok(Provenance::Noisy {
                delta: p.delta,
                seed: p.seed,
            }),
            other => Err(DsmError::Format(format!("unknown provenance kind '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_directions;

    #[test]
    fn json_layout() {
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let dirs = make_directions(Dimension::Two, 2).unwrap();
        let mut e = CMatrix::zeros(2, 2);
        e[(0, 1)] = Complex64::new(1.5, -2.0);
        let f = FarFieldMatrix::new(ctx, dirs, e, Provenance::Noisy { delta: 0.05, seed: 7 }).unwrap();
        let v = serde_json::to_value(f.to_file_repr()).unwrap();
        assert_eq!(v["dimension"], 2);
        assert_eq!(v["M"], 2);
        assert_eq!(v["re"][0][1], 1.5);
        assert_eq!(v["im"][0][1], -2.0);
        assert_eq!(v["directions"][1].as_array().unwrap().len(), 2);
        assert_eq!(v["provenance"]["kind"], "noisy");
        assert_eq!(v["provenance"]["seed"], 7);

        let mut buf = Vec::new();
        f.write_json(&mut buf).unwrap();
        let back = FarFieldMatrix::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let ctx = WaveContext::new(Dimension::Two, 10.0).unwrap();
        let dirs = make_directions(Dimension::Two, 7).unwrap();
        let e = CMatrix::from_fn(7, 7, |i, j| {
            Complex64::new((i as f64 * 1.37 + 0.1).sin() * 23.41, (j as f64 / 3.0).cos() / 7.0)
        });
        let f = FarFieldMatrix::new(ctx, dirs, e, Provenance::Clean).unwrap();
        let mut buf = Vec::new();
        f.write_json(&mut buf).unwrap();
        let back = FarFieldMatrix::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        let mut again = Vec::new();
        back.write_json(&mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn rejects_ragged_rows() {
        let text = r#"{"dimension":2,"k":1.0,"M":2,"directions":[[1,0],[-1,0]],
            "re":[[0,0],[0]],"im":[[0,0],[0,0]],"provenance":{"kind":"clean"}}"#;
        assert!(matches!(
            FarFieldMatrix::read_json(text.as_bytes()),
            Err(DsmError::Format(_))
        ));
    }
}
