//! Generates the six-inclusion initial mesh, prints its quality and writes
//! it in the native and VTK formats.
//!
//! cargo run --release --example mesh_generation -- [resolution] [out-dir]

use std::path::PathBuf;

use stochastic_shape::cli::output::{vtk, PointData};
use stochastic_shape::cli::presets;
use stochastic_shape::mesh::{generate_mesh, triangle_quality, write_mesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let resolution: usize = args.next().map_or(Ok(39), |s| s.parse())?;
    let out = args.next().map(PathBuf::from);

    let mesh = generate_mesh(resolution, &presets::six_inclusion_initial())?;
    let q = triangle_quality(&mesh);
    println!("{} vertices, {} triangles", mesh.n_vertices(), mesh.n_triangles());
    println!("{} interface loops, {} interface edges", mesh.interface_loops().len(), mesh.interface_edges().len());
    println!("aspect ratio min {:.4} mean {:.4} max {:.4}", q.min, q.mean, q.max);
    for label in 0..=mesh.max_label() {
        let area: f64 = (0..mesh.n_triangles()).filter(|&t| mesh.triangles()[t].label == label).map(|t| mesh.signed_area(t)).sum();
        println!("  region {label}: area {area:.5}");
    }

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("initial.mesh"), write_mesh(&mesh))?;
        std::fs::write(dir.join("initial.vtk"), vtk(&mesh, "initial mesh", &PointData::default()))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
