//! Regenerates the checked-in fixture files.
//!
//! ```text
//! cargo run --example write_fixtures [DIR]
//! ```

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(dse::fixtures::fixture_dir);
    for path in dse::fixtures::write_all(&dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
