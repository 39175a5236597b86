//! Legacy ASCII VTK output of displacement and deviatoric strain.

use std::fmt::Write as _;

use super::mesh::Mesh;

/// Unstructured grid on the corner nodes with point displacements
/// (zero z component) and the per-cell deviatoric strain norm.
pub fn write_vtk(mesh: &Mesh, displacement: &[[f64; 2]], dev_strain: &[f64], title: &str) -> String {
    let nc = mesh.n_corner;
    let ne = mesh.elements.len();
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "{}", title.lines().next().unwrap_or("")).unwrap();
    writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {nc} double").unwrap();
    for p in &mesh.nodes[..nc] {
        writeln!(s, "{:.16e} {:.16e} 0", p[0], p[1]).unwrap();
    }
    writeln!(s, "CELLS {ne} {}", 4 * ne).unwrap();
    for e in &mesh.elements {
        writeln!(s, "3 {} {} {}", e[0], e[1], e[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {ne}").unwrap();
    for _ in 0..ne {
        writeln!(s, "5").unwrap();
    }
    writeln!(s, "POINT_DATA {nc}\nVECTORS displacement double").unwrap();
    for d in &displacement[..nc] {
        writeln!(s, "{:.16e} {:.16e} 0", d[0], d[1]).unwrap();
    }
    writeln!(s, "CELL_DATA {ne}\nSCALARS deviatoric_strain double 1\nLOOKUP_TABLE default").unwrap();
    for v in dev_strain {
        writeln!(s, "{v:.16e}").unwrap();
    }
    s
}
