//! Legacy ASCII VTK writers.

use std::io::{self, Write};

use crate::grid::CoarseGrid;
use crate::mesh::TriMesh;

fn cell_data(w: &mut impl Write, n: usize, fields: &[(&str, &[f64])]) -> io::Result<()> {
    writeln!(w, "CELL_DATA {n}")?;
    for (name, values) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values.iter().take(n) {
            writeln!(w, "{v:.17e}")?;
        }
    }
    Ok(())
}

/// Triangles only; per-triangle fields must have at least one value per triangle.
pub fn write_trimesh(
    w: &mut impl Write,
    title: &str,
    mesh: &TriMesh,
    fields: &[(&str, &[f64])],
) -> io::Result<()> {
    writeln!(
        w,
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID"
    )?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for p in &mesh.vertices {
        writeln!(w, "{:.17e} {:.17e} 0", p.x, p.y)?;
    }
    let nt = mesh.triangles.len();
    writeln!(w, "CELLS {nt} {}", 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    cell_data(w, nt, fields)
}

/// Matrix cells of a coarse grid as quads.
pub fn write_coarse(
    w: &mut impl Write,
    title: &str,
    grid: &CoarseGrid,
    fields: &[(&str, &[f64])],
) -> io::Result<()> {
    writeln!(
        w,
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID"
    )?;
    let (nx, ny) = (grid.nx, grid.ny);
    writeln!(w, "POINTS {} double", (nx + 1) * (ny + 1))?;
    for j in 0..=ny {
        for i in 0..=nx {
            writeln!(w, "{:.17e} {:.17e} 0", grid.x_node(i), grid.y_node(j))?;
        }
    }
    let n = grid.n_cells();
    writeln!(w, "CELLS {n} {}", 5 * n)?;
    for j in 0..ny {
        for i in 0..nx {
            let v = j * (nx + 1) + i;
            writeln!(w, "4 {} {} {} {}", v, v + 1, v + nx + 2, v + nx + 1)?;
        }
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "9")?;
    }
    cell_data(w, n, fields)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_header() {
        let g = CoarseGrid::uniform(2, 1, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_coarse(&mut buf, "t", &g, &[("p", &[1.0, 2.0])]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("POINTS 6 double"));
        assert!(s.contains("CELLS 2 10"));
        assert!(s.contains("SCALARS p double 1"));
    }
}
