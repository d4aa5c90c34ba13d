//! JSON formats for channels and open quantum random walks.
//!
//! Matrices are row-major nested arrays with complex entries written as
//! `[re, im]` pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::linalg::c;
use crate::numerics::Tolerances;
use crate::oqrw::OqrwSpec;
use crate::{C64, CMat};

pub const CHANNEL_FORMAT_VERSION: u32 = 1;
pub const OQRW_FORMAT_VERSION: u32 = 1;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn mat_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn mat_from_json(rows: &JsonMatrix) -> Result<CMat> {
    let r = rows.len();
    let cols = rows.first().map(|x| x.len()).unwrap_or(0);
    if rows.iter().any(|row| row.len() != cols) {
        return Err(Error::InvalidParameter("ragged matrix rows".into()));
    }
    let mut m = CMat::zeros(r, cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(Error::NonFinite { context: "matrix entry".into() });
            }
            m[(i, j)] = c(z[0], z[1]);
        }
    }
    Ok(m)
}

pub fn complex_to_json(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// `#[serde(with = "mat")]` adapter for a single matrix.
pub mod mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        mat_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = JsonMatrix::deserialize(d)?;
        mat_from_json(&rows).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "mat_list")]` adapter for a list of matrices.
pub mod mat_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(mat_to_json).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMat>, D::Error> {
        let raw = Vec::<JsonMatrix>::deserialize(d)?;
        raw.iter().map(|r| mat_from_json(r).map_err(serde::de::Error::custom)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    #[serde(default = "channel_version")]
    pub format_version: u32,
    pub dim: usize,
    pub kraus: Vec<JsonMatrix>,
    #[serde(default)]
    pub label: String,
}

fn channel_version() -> u32 {
    CHANNEL_FORMAT_VERSION
}

fn oqrw_version() -> u32 {
    OQRW_FORMAT_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub from: usize,
    pub to: usize,
    pub matrix: JsonMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OqrwFile {
    #[serde(default = "oqrw_version")]
    pub format_version: u32,
    pub vertices: Vec<serde_json::Value>,
    pub local_dims: Vec<usize>,
    pub transitions: Vec<TransitionEntry>,
    #[serde(default)]
    pub label: String,
}

pub fn channel_to_file(c: &ChannelSpec) -> ChannelFile {
    ChannelFile {
        format_version: CHANNEL_FORMAT_VERSION,
        dim: c.dim,
        kraus: c.kraus.iter().map(mat_to_json).collect(),
        label: c.label.clone(),
    }
}

/// Parses a channel file; unitality is enforced.
pub fn channel_from_file(f: &ChannelFile, tol: &Tolerances) -> Result<ChannelSpec> {
    if f.format_version != CHANNEL_FORMAT_VERSION {
        return Err(Error::InvalidParameter(format!(
            "unsupported channel format version {}",
            f.format_version
        )));
    }
    let kraus = f.kraus.iter().map(mat_from_json).collect::<Result<Vec<_>>>()?;
    if let Some(k) = kraus.iter().find(|k| k.nrows() != f.dim || k.ncols() != f.dim) {
        return Err(Error::DimensionMismatch { expected: f.dim, found: k.nrows().max(k.ncols()) });
    }
    Ok(ChannelSpec::from_kraus(kraus, tol)?.with_label(f.label.clone()))
}

pub fn oqrw_to_file(w: &OqrwSpec) -> OqrwFile {
    OqrwFile {
        format_version: OQRW_FORMAT_VERSION,
        vertices: w.vertices.iter().map(|v| serde_json::Value::String(v.clone())).collect(),
        local_dims: w.local_dims.clone(),
        transitions: w
            .transitions
            .iter()
            .map(|(&(to, from), m)| TransitionEntry { from, to, matrix: mat_to_json(m) })
            .collect(),
        label: w.label.clone(),
    }
}

pub fn oqrw_from_file(f: &OqrwFile, tol: &Tolerances) -> Result<OqrwSpec> {
    if f.format_version != OQRW_FORMAT_VERSION {
        return Err(Error::InvalidParameter(format!(
            "unsupported OQRW format version {}",
            f.format_version
        )));
    }
    let vertices = f
        .vertices
        .iter()
        .map(|v| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .collect();
    let mut transitions = Vec::with_capacity(f.transitions.len());
    for t in &f.transitions {
        transitions.push(((t.to, t.from), mat_from_json(&t.matrix)?));
    }
    let w = OqrwSpec::build(vertices, f.local_dims.clone(), transitions, tol)?;
    Ok(w.with_label(f.label.clone()))
}

/// Either input kind accepted by the command-line front end.
#[derive(Debug, Clone)]
pub enum Input {
    Channel(ChannelSpec),
    Oqrw(OqrwSpec),
}

/// Parses JSON text as a channel (has `kraus`) or an OQRW (has `transitions`).
pub fn parse_input(text: &str, tol: &Tolerances) -> Result<Input> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::InvalidParameter(format!("invalid JSON: {e}")))?;
    if value.get("kraus").is_some() {
        let f: ChannelFile = serde_json::from_value(value)
            .map_err(|e| Error::InvalidParameter(format!("invalid channel file: {e}")))?;
        Ok(Input::Channel(channel_from_file(&f, tol)?))
    } else if value.get("transitions").is_some() {
        let f: OqrwFile = serde_json::from_value(value)
            .map_err(|e| Error::InvalidParameter(format!("invalid OQRW file: {e}")))?;
        Ok(Input::Oqrw(oqrw_from_file(&f, tol)?))
    } else {
        Err(Error::InvalidParameter("input has neither `kraus` nor `transitions`".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;

    #[test]
    fn channel_round_trip() {
        let tol = Tolerances::default();
        let s = 0.5f64.sqrt();
        let x = CMat::from_row_slice(2, 2, &[c(0., 0.), c(s, 0.), c(s, 0.), c(0., 0.)]);
        let y = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -s), c(0., s), c(0., 0.)]);
        let ch = ChannelSpec::from_kraus(vec![x, y], &tol).unwrap().with_label("xy");
        let text = serde_json::to_string(&channel_to_file(&ch)).unwrap();
        match parse_input(&text, &tol).unwrap() {
            Input::Channel(back) => {
                assert_eq!(back.label, "xy");
                for (a, b) in back.kraus.iter().zip(&ch.kraus) {
                    assert_eq!(a, b);
                }
            }
            _ => panic!("expected a channel"),
        }
    }

    #[test]
    fn non_unital_file_rejected() {
        let tol = Tolerances::default();
        let text = r#"{"dim": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[0,0]]]]}"#;
        assert!(matches!(parse_input(text, &tol), Err(Error::NotUnital { .. })));
    }

    #[test]
    fn unknown_input_rejected() {
        let tol = Tolerances::default();
        assert!(parse_input("{\"foo\": 1}", &tol).is_err());
        assert!(parse_input("not json", &tol).is_err());
        let m = mat_from_json(&mat_to_json(&identity(3))).unwrap();
        assert_eq!(m, identity(3));
    }
}
