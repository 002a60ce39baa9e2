//! Writes the KL surface around the QRE of the seven-agent network as CSV.

use smoothq::io::write_surface_csv;
use smoothq::experiments::make_match_mismatch;
use smoothq::surface::{linspace, lyapunov_surface, qre_direction, SurfaceBasis};

fn main() -> smoothq::Result<()> {
    let g = make_match_mismatch(7).with_temperatures(&[0.1; 9])?;
    let axis = linspace(-3.0, 3.0, 61);
    let u = qre_direction(&g)?;
    let basis = SurfaceBasis::Explicit { v: vec![0.5; u.len()], u };
    let grid = lyapunov_surface(&g, &axis, &axis, &basis)?;
    eprintln!("min {:.3e}", grid.min());
    write_surface_csv(&grid, std::io::stdout().lock())
}
