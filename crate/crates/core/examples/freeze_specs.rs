//! Regenerates `specs/*.toml` from the seeded coefficient derivation.
//!
//! `cargo run -p dr-ate --example freeze_specs`

use std::path::Path;

use dr_ate::synthetic::{derive_default_spec, Family, SpecFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs");
    for family in Family::ALL.into_iter().filter(|f| *f != Family::Custom) {
        let spec = derive_default_spec(family)?;
        let path = dir.join(format!("{}.toml", family.code()));
        std::fs::write(&path, SpecFile::from_spec(&spec, None).to_toml())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
