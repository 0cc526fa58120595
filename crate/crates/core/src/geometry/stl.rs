//! STL reading and writing.
//!
//! Binary files are recognised by their length: exactly `84 + 50 * facet_count`
//! bytes, where `facet_count` is the little-endian u32 at byte 80. Anything
//! else that starts with `solid` is parsed as ASCII.

use super::{GeometryError, TriangleMesh, Vec3};

const HEADER_LEN: usize = 80;
const FACET_LEN: usize = 50;

pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh, GeometryError> {
    if bytes.len() >= HEADER_LEN + 4 {
        let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if bytes.len() as u128 == (HEADER_LEN + 4) as u128 + (FACET_LEN as u128) * count as u128 {
            return parse_binary(bytes, count);
        }
    }
    if looks_ascii(bytes) {
        return parse_ascii(bytes);
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(GeometryError::Stl { offset: bytes.len(), message: "truncated header: expected 84 bytes".into() });
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = (HEADER_LEN + 4) as u128 + (FACET_LEN as u128) * count as u128;
    if (bytes.len() as u128) < expected {
        let complete = (bytes.len() - HEADER_LEN - 4) / FACET_LEN;
        return Err(GeometryError::Stl {
            offset: HEADER_LEN + 4 + complete * FACET_LEN,
            message: format!("truncated facet data: header declares {count} facets, file holds {complete}"),
        });
    }
    Err(GeometryError::Stl {
        offset: expected as usize,
        message: format!("{} trailing bytes after {count} facets", bytes.len() as u128 - expected),
    })
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let start = bytes.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(bytes.len());
    bytes[start..].starts_with(b"solid") && bytes.is_ascii()
}

fn parse_binary(bytes: &[u8], count: usize) -> Result<TriangleMesh, GeometryError> {
    if count == 0 {
        return Err(GeometryError::Stl { offset: 80, message: "zero facets".into() });
    }
    let mut vertices = Vec::with_capacity(count * 3);
    let mut triangles = Vec::with_capacity(count);
    for f in 0..count {
        let base = HEADER_LEN + 4 + f * FACET_LEN;
        // skip the 12-byte normal; the attribute u16 is ignored
        for v in 0..3 {
            let at = base + 12 + v * 12;
            let read = |o: usize| f32::from_le_bytes(bytes[at + o..at + o + 4].try_into().unwrap()) as f64;
            let p = Vec3::new(read(0), read(4), read(8));
            if !p.is_finite() {
                return Err(GeometryError::Stl { offset: at, message: "non-finite vertex coordinate".into() });
            }
            vertices.push(p);
        }
        let i = (f * 3) as u32;
        triangles.push([i, i + 1, i + 2]);
    }
    let name = String::from_utf8_lossy(&bytes[..HEADER_LEN]).trim_end_matches(['\0', ' ']).trim().to_string();
    let mut mesh = TriangleMesh { name, vertices, triangles };
    mesh.weld();
    Ok(mesh)
}

struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let rest = &self.text[self.pos..];
        let skip = rest.len() - rest.trim_start().len();
        let start = self.pos + skip;
        if start >= self.text.len() {
            self.pos = start;
            return None;
        }
        let len = self.text[start..].find(|c: char| c.is_ascii_whitespace()).unwrap_or(self.text.len() - start);
        self.pos = start + len;
        Some((start, &self.text[start..start + len]))
    }

    fn expect(&mut self, word: &str) -> Result<usize, GeometryError> {
        match self.next() {
            Some((at, w)) if w == word => Ok(at),
            Some((at, w)) => Err(GeometryError::Stl { offset: at, message: format!("expected '{word}', found '{w}'") }),
            None => Err(GeometryError::Stl { offset: self.text.len(), message: format!("unexpected end of file, expected '{word}'") }),
        }
    }

    fn float(&mut self) -> Result<f64, GeometryError> {
        match self.next() {
            Some((at, w)) => w
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| GeometryError::Stl { offset: at, message: format!("invalid number '{w}'") }),
            None => Err(GeometryError::Stl { offset: self.text.len(), message: "unexpected end of file in coordinates".into() }),
        }
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<TriangleMesh, GeometryError> {
    let text = std::str::from_utf8(bytes).map_err(|e| GeometryError::Stl { offset: e.valid_up_to(), message: "invalid UTF-8".into() })?;
    let mut tok = Tokens { text, pos: 0 };
    tok.expect("solid")?;
    // the solid name runs to the end of the line
    let line_end = text[tok.pos..].find('\n').map(|i| tok.pos + i).unwrap_or(text.len());
    let name = text[tok.pos..line_end].trim().to_string();
    tok.pos = line_end;

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    loop {
        match tok.next() {
            Some((_, "facet")) => {
                tok.expect("normal")?;
                for _ in 0..3 {
                    tok.float()?;
                }
                tok.expect("outer")?;
                tok.expect("loop")?;
                for _ in 0..3 {
                    tok.expect("vertex")?;
                    let (x, y, z) = (tok.float()?, tok.float()?, tok.float()?);
                    vertices.push(Vec3::new(x, y, z));
                }
                tok.expect("endloop")?;
                tok.expect("endfacet")?;
                let i = (triangles.len() * 3) as u32;
                triangles.push([i, i + 1, i + 2]);
            }
            Some((at, "endsolid")) => {
                if triangles.is_empty() {
                    return Err(GeometryError::Stl { offset: at, message: "zero facets".into() });
                }
                break;
            }
            Some((at, w)) => return Err(GeometryError::Stl { offset: at, message: format!("expected 'facet' or 'endsolid', found '{w}'") }),
            None => return Err(GeometryError::Stl { offset: text.len(), message: "missing 'endsolid'".into() }),
        }
    }
    let mut mesh = TriangleMesh { name, vertices, triangles };
    mesh.weld();
    Ok(mesh)
}

fn facet_normal(tri: [Vec3; 3]) -> Vec3 {
    (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized()
}

/// Little-endian binary STL. Coordinates are stored as f32.
pub fn write_binary_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + FACET_LEN * mesh.triangles.len());
    let mut header = [0u8; HEADER_LEN];
    let name = mesh.name.as_bytes();
    // a header starting with "solid" would confuse naive readers
    let name = if name.starts_with(b"solid") { &name[5..] } else { name };
    let n = name.len().min(HEADER_LEN);
    header[..n].copy_from_slice(&name[..n]);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for tri in mesh.triangles_iter() {
        let normal = facet_normal(tri);
        for v in std::iter::once(normal).chain(tri) {
            for c in v.to_array() {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

pub fn write_ascii_stl(mesh: &TriangleMesh) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "solid {}", mesh.name);
    for tri in mesh.triangles_iter() {
        let n = facet_normal(tri);
        let _ = writeln!(s, "  facet normal {:e} {:e} {:e}", n.x, n.y, n.z);
        let _ = writeln!(s, "    outer loop");
        for v in tri {
            let _ = writeln!(s, "      vertex {:e} {:e} {:e}", v.x, v.y, v.z);
        }
        let _ = writeln!(s, "    endloop");
        let _ = writeln!(s, "  endfacet");
    }
    let _ = writeln!(s, "endsolid {}", mesh.name);
    s
}
