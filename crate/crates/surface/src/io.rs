//! ASCII OFF and legacy VTK export, with periodic pairs in a sidecar table.

use nalgebra::Vector3;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::SurfaceError;
use crate::mesh::SurfaceMesh;

pub fn to_off(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.vertices.len(), mesh.triangles.len());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Sidecar with the period, build radius, reference area and (left, right) pairs.
pub fn pairs_sidecar(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# period {:.17e}", mesh.period);
    let _ = writeln!(s, "# radius {:.17e}", mesh.radius);
    let _ = writeln!(s, "# reference_area {:.17e}", mesh.reference_area);
    let _ = writeln!(s, "# inward {}", mesh.inward);
    let _ = writeln!(s, "left,right");
    for &(l, r) in &mesh.periodic_pairs {
        let _ = writeln!(s, "{l},{r}");
    }
    s
}

/// Legacy VTK polydata with per-vertex scalar fields (already expanded to vertices).
pub fn to_vtk(mesh: &SurfaceMesh, fields: &[(&str, &[f64])]) -> Result<String, SurfaceError> {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\ntube\nASCII\nDATASET POLYDATA");
    let _ = writeln!(s, "POINTS {} double", mesh.vertices.len());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
    }
    let _ = writeln!(s, "POLYGONS {} {}", mesh.triangles.len(), 4 * mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.vertices.len());
        for (name, values) in fields {
            if values.len() != mesh.vertices.len() {
                return Err(SurfaceError::FieldLength { got: values.len(), expected: mesh.vertices.len() });
            }
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in *values {
                let _ = writeln!(s, "{v:.17e}");
            }
        }
    }
    Ok(s)
}

pub fn from_off(off: &str, sidecar: &str) -> Result<SurfaceMesh, SurfaceError> {
    let bad = |m: &str| SurfaceError::Parse(m.to_string());
    let mut tokens = off
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split_whitespace());
    if tokens.next() != Some("OFF") {
        return Err(bad("missing OFF header"));
    }
    let mut next_num = |what: &str| -> Result<f64, SurfaceError> {
        tokens
            .next()
            .ok_or_else(|| bad(what))?
            .parse::<f64>()
            .map_err(|_| bad(what))
    };
    let nv = next_num("vertex count")? as usize;
    let nt = next_num("face count")? as usize;
    next_num("edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(Vector3::new(next_num("x")?, next_num("y")?, next_num("z")?));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        if next_num("face size")? as usize != 3 {
            return Err(bad("only triangles are supported"));
        }
        triangles.push([next_num("a")? as usize, next_num("b")? as usize, next_num("c")? as usize]);
    }
    let mut mesh = SurfaceMesh {
        vertices,
        triangles,
        periodic_pairs: Vec::new(),
        inward: true,
        period: 0.0,
        radius: 1.0,
        reference_area: 0.0,
    };
    for line in sidecar.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            let (key, val) = (it.next().unwrap_or(""), it.next().unwrap_or(""));
            match key {
                "period" => mesh.period = val.parse().map_err(|_| bad("period"))?,
                "radius" => mesh.radius = val.parse().map_err(|_| bad("radius"))?,
                "reference_area" => mesh.reference_area = val.parse().map_err(|_| bad("reference_area"))?,
                "inward" => mesh.inward = val.parse().map_err(|_| bad("inward"))?,
                _ => {}
            }
        } else if let Some((l, r)) = line.split_once(',') {
            if l == "left" {
                continue;
            }
            mesh.periodic_pairs.push((
                l.trim().parse().map_err(|_| bad("pair"))?,
                r.trim().parse().map_err(|_| bad("pair"))?,
            ));
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

pub fn write_mesh(mesh: &SurfaceMesh, dir: &Path, stem: &str, fields: &[(&str, &[f64])]) -> Result<(), SurfaceError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{stem}.off")), to_off(mesh))?;
    std::fs::write(dir.join(format!("{stem}.pairs.csv")), pairs_sidecar(mesh))?;
    std::fs::write(dir.join(format!("{stem}.vtk")), to_vtk(mesh, fields)?)?;
    Ok(())
}
