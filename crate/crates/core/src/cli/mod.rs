//! Config parsing, presets, audit and CSV emission behind the `ecdelay` binary.

pub mod audit;
pub mod config;
pub mod presets;

use anyhow::Result;

/// Fixed-point rendering used in every CSV cell, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.6}")
    }
}

/// Seed of one grid point, independent of evaluation order.
pub fn grid_seed(base: u64, coords: &[u64]) -> u64 {
    let mut h = splitmix(base);
    for &c in coords {
        h = splitmix(h ^ c.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    h
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn csv_string(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
