//! Point-set, weight and report files.
//!
//! * XYZ: ASCII, `#` comment lines, then `x y z` (plus `nx ny nz` when
//!   normals are known) per line.
//! * PLY: binary little-endian, `double` properties `x y z nx ny nz`;
//!   missing normals are written as zeros.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::SurfaceSample;

pub fn write_xyz(out: &mut impl Write, samples: &[SurfaceSample], comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    for s in samples {
        let p = s.point;
        match s.normal {
            Some(n) => writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z)?,
            None => writeln!(out, "{} {} {}", p.x, p.y, p.z)?,
        }
    }
    Ok(())
}

pub fn write_ply(out: &mut impl Write, samples: &[SurfaceSample], comments: &[String]) -> std::io::Result<()> {
    writeln!(out, "ply")?;
    writeln!(out, "format binary_little_endian 1.0")?;
    for c in comments {
        writeln!(out, "comment {c}")?;
    }
    writeln!(out, "element vertex {}", samples.len())?;
    for name in ["x", "y", "z", "nx", "ny", "nz"] {
        writeln!(out, "property double {name}")?;
    }
    writeln!(out, "end_header")?;
    for s in samples {
        let n = s.normal.unwrap_or_default();
        for c in s.point.iter().chain(n.iter()) {
            out.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Write samples as PLY if the extension is `.ply`, XYZ otherwise.
pub fn save_points(path: impl AsRef<Path>, samples: &[SurfaceSample], comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let is_ply = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply { write_ply(&mut w, samples, comments) } else { write_xyz(&mut w, samples, comments) }
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn save_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Whitespace-separated numbers; `#` starts a comment line.
pub fn read_weights(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(|t| t.parse::<f64>().map_err(|e| Error::parse(path, format!("{t:?}: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn samples() -> Vec<SurfaceSample> {
        vec![
            SurfaceSample { point: Vec3::new(0.5, 0.0, -0.25), normal: Some(Vec3::x()), ray_id: 0, hit_index: 0, voxel_id: None },
            SurfaceSample { point: Vec3::new(0.1, 0.2, 0.3), normal: None, ray_id: 1, hit_index: 1, voxel_id: None },
        ]
    }

    #[test]
    fn xyz_lines() {
        let mut buf = Vec::new();
        write_xyz(&mut buf, &samples(), &["seed 3".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# seed 3\n0.5 0 -0.25 1 0 0\n0.1 0.2 0.3\n");
    }

    #[test]
    fn ply_layout() {
        let mut buf = Vec::new();
        write_ply(&mut buf, &samples(), &["config_hash abc".into()]).unwrap();
        let end = buf.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
        let header = std::str::from_utf8(&buf[..end]).unwrap();
        assert!(header.contains("element vertex 2\n") && header.contains("comment config_hash abc\n"));
        assert_eq!(buf.len() - end, 2 * 6 * 8);
        assert_eq!(f64::from_le_bytes(buf[end..end + 8].try_into().unwrap()), 0.5);
    }

    #[test]
    fn weights_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.txt");
        std::fs::write(&p, "# weights\n1 2.5\n3\n").unwrap();
        assert_eq!(read_weights(&p).unwrap(), vec![1.0, 2.5, 3.0]);
        std::fs::write(&p, "1 x\n").unwrap();
        assert!(matches!(read_weights(&p), Err(Error::Parse { .. })));
    }
}
