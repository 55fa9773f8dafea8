//! MetaImage (`.mhd` header + `.raw` payload) reader and writer.
//!
//! Only uncompressed 3-D volumes are handled. Unknown header keys are
//! ignored on read, which lets the writer append provenance keys.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{GridGeometry, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    Short,
    Float,
    Double,
}

impl ElementType {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "MET_SHORT" => Ok(Self::Short),
            "MET_FLOAT" => Ok(Self::Float),
            "MET_DOUBLE" => Ok(Self::Double),
            other => Err(Error::UnsupportedElementType(other.to_string())),
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Self::Short => "MET_SHORT",
            Self::Float => "MET_FLOAT",
            Self::Double => "MET_DOUBLE",
        }
    }

    fn size(self) -> usize {
        match self {
            Self::Short => 2,
            Self::Float => 4,
            Self::Double => 8,
        }
    }
}

fn parse_numbers<T: std::str::FromStr>(key: &str, value: &str, n: usize) -> Result<Vec<T>> {
    let parsed: Vec<T> = value
        .split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::Header(format!("{key}: cannot parse `{t}`")))
        })
        .collect::<Result<_>>()?;
    if parsed.len() != n {
        return Err(Error::Header(format!(
            "{key}: expected {n} values, found {}",
            parsed.len()
        )));
    }
    Ok(parsed)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::Header(format!(
            "{key}: expected True/False, found `{value}`"
        ))),
    }
}

struct Header {
    geometry: GridGeometry,
    element: ElementType,
    big_endian: bool,
    data_file: String,
}

fn parse_header(entries: &HashMap<String, String>) -> Result<Header> {
    let get = |k: &str| {
        entries
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Header(format!("missing required key {k}")))
    };
    let object = get("ObjectType")?;
    if object != "Image" {
        return Err(Error::Header(format!(
            "ObjectType must be Image, found {object}"
        )));
    }
    let ndims: usize = get("NDims")?
        .parse()
        .map_err(|_| Error::Header("NDims is not an integer".into()))?;
    if ndims != 3 {
        return Err(Error::Header(format!("NDims must be 3, found {ndims}")));
    }
    let dims: Vec<usize> = parse_numbers("DimSize", get("DimSize")?, 3)?;
    let spacing: Vec<f64> = match (entries.get("ElementSpacing"), entries.get("ElementSize")) {
        (Some(s), _) => parse_numbers("ElementSpacing", s, 3)?,
        (None, Some(s)) => parse_numbers("ElementSize", s, 3)?,
        (None, None) => return Err(Error::Header("missing required key ElementSpacing".into())),
    };

    let mut origin: Option<Vec<f64>> = None;
    for key in ["Offset", "Origin", "Position"] {
        if let Some(v) = entries.get(key) {
            let o: Vec<f64> = parse_numbers(key, v, 3)?;
            if let Some(prev) = &origin {
                if prev != &o {
                    return Err(Error::Header(format!(
                        "{key} contradicts earlier origin key"
                    )));
                }
            }
            origin = Some(o);
        }
    }
    let origin = origin.unwrap_or_else(|| vec![0.0; 3]);

    let mut big_endian: Option<bool> = None;
    for key in ["BinaryDataByteOrderMSB", "ElementByteOrderMSB"] {
        if let Some(v) = entries.get(key) {
            let b = parse_bool(key, v)?;
            if big_endian.is_some_and(|prev| prev != b) {
                return Err(Error::Header("byte order keys disagree".into()));
            }
            big_endian = Some(b);
        }
    }
    if let Some(v) = entries.get("CompressedData") {
        if parse_bool("CompressedData", v)? {
            return Err(Error::Header(
                "compressed payloads are not supported".into(),
            ));
        }
    }
    if let Some(v) = entries.get("ElementNumberOfChannels") {
        if v.trim() != "1" {
            return Err(Error::Header(
                "only single-channel images are supported".into(),
            ));
        }
    }

    let element = ElementType::parse(get("ElementType")?)?;
    let geometry = GridGeometry::new(
        [dims[0], dims[1], dims[2]],
        [spacing[0], spacing[1], spacing[2]],
        [origin[0], origin[1], origin[2]],
    )
    .map_err(|e| Error::Header(e.to_string()))?;

    Ok(Header {
        geometry,
        element,
        big_endian: big_endian.unwrap_or(false),
        data_file: get("ElementDataFile")?.to_string(),
    })
}

fn decode(bytes: &[u8], element: ElementType, big_endian: bool) -> Vec<f64> {
    macro_rules! conv {
        ($t:ty, $n:expr) => {
            bytes
                .chunks_exact($n)
                .map(|c| {
                    let arr: [u8; $n] = c.try_into().unwrap();
                    (if big_endian {
                        <$t>::from_be_bytes(arr)
                    } else {
                        <$t>::from_le_bytes(arr)
                    }) as f64
                })
                .collect()
        };
    }
    match element {
        ElementType::Short => conv!(i16, 2),
        ElementType::Float => conv!(f32, 4),
        ElementType::Double => conv!(f64, 8),
    }
}

/// Reads a `.mhd`/`.mha` volume. Samples are converted to `f64`.
pub fn read_metaimage(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;

    // Header lines run up to and including ElementDataFile.
    let mut entries = HashMap::new();
    let mut offset = 0usize;
    let mut saw_data_file = false;
    while offset < bytes.len() {
        let end = bytes[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |p| offset + p + 1);
        let line = std::str::from_utf8(&bytes[offset..end])
            .map_err(|_| Error::Header("header is not valid UTF-8".into()))?
            .trim();
        offset = end;
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Header(format!("malformed line `{line}`")))?;
        let key = key.trim().to_string();
        if entries
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::Header(format!("duplicate key {key}")));
        }
        if key == "ElementDataFile" {
            saw_data_file = true;
            break;
        }
    }
    if !saw_data_file {
        return Err(Error::Header("missing required key ElementDataFile".into()));
    }
    let header = parse_header(&entries)?;

    let payload = if header.data_file == "LOCAL" {
        bytes[offset..].to_vec()
    } else {
        let raw: PathBuf = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&header.data_file);
        fs::read(&raw).map_err(|e| Error::io(raw, e))?
    };
    let expected = header.geometry.len() * header.element.size();
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            found: payload.len(),
        });
    }
    let values = decode(&payload, header.element, header.big_endian);
    ScalarField::new(header.geometry, values)
}

/// Writes `field` as `MET_DOUBLE`, which round-trips bit-exactly.
pub fn write_metaimage(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    write_metaimage_with(field, path, ElementType::Double, &[])
}

/// Writes `path` (header) and a sibling `.raw` payload. `extra` key/value
/// pairs are emitted before `ElementDataFile`.
pub fn write_metaimage_with(
    field: &ScalarField,
    path: impl AsRef<Path>,
    element: ElementType,
    extra: &[(String, String)],
) -> Result<()> {
    let path = path.as_ref();
    let raw_path = path.with_extension("raw");
    let raw_name = raw_path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("bad output path {}", path.display())))?
        .to_string();

    let g = &field.geometry;
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut header = String::new();
    header.push_str("ObjectType = Image\nNDims = 3\n");
    header.push_str(&format!(
        "DimSize = {} {} {}\n",
        g.dims[0], g.dims[1], g.dims[2]
    ));
    header.push_str(&format!("ElementSpacing = {}\n", join(&g.spacing)));
    header.push_str(&format!("Offset = {}\n", join(&g.origin)));
    header.push_str("BinaryData = True\nBinaryDataByteOrderMSB = False\n");
    header.push_str(&format!("ElementType = {}\n", element.tag()));
    for (k, v) in extra {
        header.push_str(&format!("{k} = {v}\n"));
    }
    header.push_str(&format!("ElementDataFile = {raw_name}\n"));

    let mut payload = Vec::with_capacity(field.values.len() * element.size());
    for &v in &field.values {
        match element {
            ElementType::Short => {
                let s = v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
                payload.extend_from_slice(&s.to_le_bytes());
            }
            ElementType::Float => payload.extend_from_slice(&(v as f32).to_le_bytes()),
            ElementType::Double => payload.extend_from_slice(&v.to_le_bytes()),
        }
    }
    fs::write(path, header).map_err(|e| Error::io(path, e))?;
    fs::write(&raw_path, payload).map_err(|e| Error::io(raw_path, e))?;
    Ok(())
}
