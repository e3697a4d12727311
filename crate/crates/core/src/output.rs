//! Scan tables as CSV.

use crate::error::Result;
use crate::trap::ScanTable;
use crate::units::hz_to_mk;
use std::io::Write;

pub const CSV_HEADER: &str = "coord,eigenvalue_index,manifold,energy_hz,energy_mk";

/// One row per (grid point, manifold, eigenvalue). The coordinate is the
/// distance from the surface (m) for radial scans, φ (rad) for azimuthal
/// scans and z (m) for axial scans.
pub fn write_scan_csv(table: &ScanTable, mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in &table.rows {
        for (manifold, levels) in table.manifolds.iter().zip(&row.levels) {
            for (i, e) in levels.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", row.coord, i, manifold, e, hz_to_mk(*e))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn scan_csv_string(table: &ScanTable) -> String {
    let mut buf = Vec::new();
    write_scan_csv(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}
