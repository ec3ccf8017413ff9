//! Regenerate the shipped reference field map.
//!
//! `cargo run -p phonoscope --example reference_field [out_dir]`

use phonoscope::fields::{reference, reference_field_dir, write_field_map, FieldProfile};

fn main() -> phonoscope::Result<()> {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(reference_field_dir);
    let grid = reference::grid();
    write_field_map(&dir, &grid)?;
    let i = FieldProfile::SampledGrid(grid).integrals();
    println!("wrote {}: x {:e}, y {:e}, z {:e} V^2", dir.display(), i.x, i.y, i.z);
    Ok(())
}
