//! PLY reader and writer for [`TriMesh`], ASCII or binary little endian.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::TriMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyFormat {
    Ascii,
    #[default]
    BinaryLittleEndian,
}

impl std::str::FromStr for PlyFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(Self::Ascii),
            "binary" | "binary_little_endian" => Ok(Self::BinaryLittleEndian),
            other => Err(Error::InvalidArgument(format!(
                "unknown PLY format `{other}`"
            ))),
        }
    }
}

pub fn write_ply(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    write_ply_with(mesh, path, PlyFormat::default(), &[])
}

/// Writes positions, faces and every channel as a `double` vertex
/// property. Each `comments` entry becomes one header comment line.
pub fn write_ply_with(
    mesh: &TriMesh,
    path: impl AsRef<Path>,
    format: PlyFormat,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    for (name, values) in &mesh.channels {
        if values.len() != mesh.vertices.len() {
            return Err(Error::InvalidArgument(format!(
                "channel `{name}` has {} values for {} vertices",
                values.len(),
                mesh.vertices.len()
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let mut header = String::from("ply\n");
    header.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    for c in comments {
        if c.contains('\n') {
            return Err(Error::InvalidArgument(
                "PLY comments must be single lines".into(),
            ));
        }
        header.push_str(&format!("comment {c}\n"));
    }
    header.push_str(&format!("element vertex {}\n", mesh.vertices.len()));
    for axis in ["x", "y", "z"] {
        header.push_str(&format!("property double {axis}\n"));
    }
    for name in mesh.channels.keys() {
        header.push_str(&format!("property double {name}\n"));
    }
    header.push_str(&format!("element face {}\n", mesh.triangles.len()));
    header.push_str("property list uchar int vertex_indices\nend_header\n");
    w.write_all(header.as_bytes()).map_err(io)?;

    let channels: Vec<&Vec<f64>> = mesh.channels.values().collect();
    for (i, v) in mesh.vertices.iter().enumerate() {
        let row = v.iter().copied().chain(channels.iter().map(|c| c[i]));
        match format {
            PlyFormat::Ascii => {
                let line: Vec<String> = row.map(|x| format!("{x:?}")).collect();
                writeln!(w, "{}", line.join(" ")).map_err(io)?;
            }
            PlyFormat::BinaryLittleEndian => {
                for x in row {
                    w.write_all(&x.to_le_bytes()).map_err(io)?;
                }
            }
        }
    }
    for t in &mesh.triangles {
        match format {
            PlyFormat::Ascii => writeln!(w, "3 {} {} {}", t[0], t[1], t[2]).map_err(io)?,
            PlyFormat::BinaryLittleEndian => {
                w.write_all(&[3u8]).map_err(io)?;
                for &i in t {
                    w.write_all(&(i as i32).to_le_bytes()).map_err(io)?;
                }
            }
        }
    }
    w.flush().map_err(io)
}

/// Reads meshes in the layout [`write_ply_with`] produces.
pub fn read_ply(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let bad = |m: &str| Error::Parse(format!("{}: {m}", path.display()));
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut line = String::new();
    let mut next_line = |r: &mut BufReader<File>| -> Result<String> {
        line.clear();
        if r.read_line(&mut line).map_err(io)? == 0 {
            return Err(bad("unexpected end of header"));
        }
        Ok(line.trim_end().to_string())
    };
    if next_line(&mut r)? != "ply" {
        return Err(bad("missing `ply` magic"));
    }
    let (mut format, mut nv, mut nf) = (None, None, None);
    let mut props: Vec<String> = Vec::new();
    loop {
        let l = next_line(&mut r)?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        match parts.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLittleEndian),
            ["format", ..] => return Err(bad("unsupported PLY format")),
            ["comment", ..] => {}
            ["element", "vertex", n] => {
                nv = Some(n.parse::<usize>().map_err(|_| bad("bad vertex count"))?)
            }
            ["element", "face", n] => {
                nf = Some(n.parse::<usize>().map_err(|_| bad("bad face count"))?)
            }
            ["property", "double", name] if nf.is_none() => props.push(name.to_string()),
            ["property", "list", "uchar", "int", "vertex_indices"] => {}
            _ => return Err(bad(&format!("unsupported header line `{l}`"))),
        }
    }
    let (format, nv, nf) = match (format, nv, nf) {
        (Some(f), Some(v), Some(n)) => (f, v, n),
        _ => return Err(bad("incomplete header")),
    };
    if props.len() < 3 || props[..3] != ["x", "y", "z"] {
        return Err(bad("vertex properties must start with x y z"));
    }
    let np = props.len();
    let mut vals: Vec<f64> = Vec::with_capacity(nv * np);
    let mut faces: Vec<[u32; 3]> = Vec::with_capacity(nf);
    match format {
        PlyFormat::Ascii => {
            let mut body = String::new();
            r.read_to_string(&mut body).map_err(io)?;
            let mut lines = body.lines();
            for _ in 0..nv {
                let l = lines.next().ok_or_else(|| bad("missing vertex rows"))?;
                let row: Vec<f64> = l
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad("bad vertex value")))
                    .collect::<Result<_>>()?;
                if row.len() != np {
                    return Err(bad("vertex row length"));
                }
                vals.extend(row);
            }
            for _ in 0..nf {
                let l = lines.next().ok_or_else(|| bad("missing face rows"))?;
                let row: Vec<u32> = l
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad("bad face index")))
                    .collect::<Result<_>>()?;
                if row.len() != 4 || row[0] != 3 {
                    return Err(bad("only triangles are supported"));
                }
                faces.push([row[1], row[2], row[3]]);
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let mut buf8 = [0u8; 8];
            for _ in 0..nv * np {
                r.read_exact(&mut buf8).map_err(io)?;
                vals.push(f64::from_le_bytes(buf8));
            }
            let mut buf13 = [0u8; 13];
            for _ in 0..nf {
                r.read_exact(&mut buf13).map_err(io)?;
                if buf13[0] != 3 {
                    return Err(bad("only triangles are supported"));
                }
                let idx = |o: usize| i32::from_le_bytes(buf13[o..o + 4].try_into().unwrap()) as u32;
                faces.push([idx(1), idx(5), idx(9)]);
            }
        }
    }
    if faces.iter().flatten().any(|&i| i as usize >= nv) {
        return Err(bad("face index out of range"));
    }
    let mut mesh = TriMesh {
        vertices: vals.chunks(np).map(|c| [c[0], c[1], c[2]]).collect(),
        triangles: faces,
        ..Default::default()
    };
    for (p, name) in props.iter().enumerate().skip(3) {
        mesh.channels
            .insert(name.clone(), vals.chunks(np).map(|c| c[p]).collect());
    }
    Ok(mesh)
}
