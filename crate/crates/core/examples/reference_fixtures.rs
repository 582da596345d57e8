//! Recomputes the reference saddle of every catalog instance and writes the
//! fixture files (default: the crate's `fixtures/` directory).

use std::path::PathBuf;

use ufcm::catalog::{bare, CATALOG_IDS};
use ufcm::oracle::Fixture;

fn main() -> ufcm::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&dir)?;
    for id in CATALOG_IDS {
        let r = bare(id)?.reference()?;
        println!(
            "{id:<22} {:<22} residual {:.1e}  p* {:.12}  ({})",
            r.method.to_string(),
            r.residual,
            r.saddle.p_star,
            r.runtime_note
        );
        Fixture::from_result(id, &r).save(&dir.join(format!("{id}.toml")))?;
    }
    Ok(())
}
