//! Heat-map renderings of access maps for 1- and 2-D tensors.
//!
//! Three deterministic output formats:
//! - `csv`: raw integer grid, rows newline-separated, no trailing newline;
//! - `pgm`: binary P5 image, values rescaled linearly to 0..255;
//! - `ansi`: 256-color terminal blocks on a grayscale ramp.
//!
//! Unaccessed elements (order value `-1`) render as 0 / black. Order maps
//! rescale as `(v + 1) / (max + 1)` so the first access is distinguishable
//! from unaccessed cells; count maps rescale as `v / max`.

use crate::tap::{AccessMap, MapKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("cannot render a rank-{0} map; only 1- and 2-D tensors are supported")]
    UnsupportedRank(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderFormat {
    Ansi,
    Csv,
    Pgm,
}

impl std::str::FromStr for RenderFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ansi" => Ok(Self::Ansi),
            "csv" => Ok(Self::Csv),
            "pgm" => Ok(Self::Pgm),
            other => Err(format!("unknown render format `{other}`")),
        }
    }
}

/// Renders a map to bytes in the requested format.
pub fn render_access_map(map: &AccessMap, format: RenderFormat) -> Result<Vec<u8>, RenderError> {
    let (height, width) = grid_shape(map)?;
    Ok(match format {
        RenderFormat::Csv => render_csv(map, height, width),
        RenderFormat::Pgm => render_pgm(map, height, width),
        RenderFormat::Ansi => render_ansi(map, height, width),
    })
}

fn grid_shape(map: &AccessMap) -> Result<(usize, usize), RenderError> {
    match map.tensor_dims() {
        [n] => Ok((1, *n)),
        [h, w] => Ok((*h, *w)),
        dims => Err(RenderError::UnsupportedRank(dims.len())),
    }
}

fn render_csv(map: &AccessMap, height: usize, width: usize) -> Vec<u8> {
    let mut out = String::new();
    for row in 0..height {
        if row > 0 {
            out.push('\n');
        }
        for col in 0..width {
            if col > 0 {
                out.push(',');
            }
            out.push_str(&map.values()[row * width + col].to_string());
        }
    }
    out.into_bytes()
}

/// Linear 0..255 rescale. Order maps shift by one so that iteration 0 is
/// visible against the unaccessed background.
fn pixel(map: &AccessMap, value: i64) -> u8 {
    if value < 0 {
        return 0;
    }
    match map.kind() {
        MapKind::Order => {
            let span = map.max() + 1;
            (((value + 1) * 255) / span.max(1)) as u8
        }
        MapKind::Count => {
            let span = map.max();
            ((value * 255) / span.max(1)) as u8
        }
    }
}

fn render_pgm(map: &AccessMap, height: usize, width: usize) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(map.values().iter().map(|&v| pixel(map, v)));
    out
}

fn render_ansi(map: &AccessMap, height: usize, width: usize) -> Vec<u8> {
    let mut out = String::new();
    for row in 0..height {
        for col in 0..width {
            let v = map.values()[row * width + col];
            // 256-color grayscale ramp is 232..=255; pure black for
            // unaccessed cells.
            let color = if v < 0 {
                16
            } else {
                232 + (pixel(map, v) as u16 * 23 / 255) as u8
            };
            out.push_str(&format!("\x1b[48;5;{color}m  \x1b[0m"));
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tap::TensorAccessPattern;

    #[test]
    fn csv_matches_count_grid() {
        let tap = TensorAccessPattern::new(&[6, 4], 0, &[1, 1, 3, 2], &[0, 0, 4, 1]).unwrap();
        let rendered = render_access_map(&tap.access_count(), RenderFormat::Csv).unwrap();
        assert_eq!(
            String::from_utf8(rendered).unwrap(),
            "1,1,0,0\n1,1,0,0\n1,1,0,0\n0,0,0,0\n0,0,0,0\n0,0,0,0"
        );
    }

    #[test]
    fn single_iteration_tap_has_one_nonzero_cell() {
        let tap = TensorAccessPattern::new(&[3, 4], 5, &[1], &[0]).unwrap();
        let count = tap.access_count();
        assert_eq!(count.values().iter().filter(|&&v| v != 0).count(), 1);
        assert_eq!(count.values()[5], 1);
        // Its order map renders the accessed cell brighter than the
        // untouched background.
        let pgm = render_access_map(&tap.access_order(), RenderFormat::Pgm).unwrap();
        let raster = &pgm[pgm.len() - 12..];
        assert!(raster[5] > 0);
        assert!(raster.iter().enumerate().all(|(i, &b)| i == 5 || b == 0));
    }

    #[test]
    fn pgm_header_and_size() {
        let tap = TensorAccessPattern::new(&[6, 4], 0, &[6, 4], &[4, 1]).unwrap();
        let pgm = render_access_map(&tap.access_order(), RenderFormat::Pgm).unwrap();
        assert!(pgm.starts_with(b"P5\n4 6\n255\n"));
        assert_eq!(pgm.len(), b"P5\n4 6\n255\n".len() + 24);
        // Last accessed element saturates at 255.
        assert_eq!(*pgm.last().unwrap(), 255);
    }

    #[test]
    fn one_dimensional_maps_render_as_a_row() {
        let tap = TensorAccessPattern::new(&[5], 0, &[5], &[1]).unwrap();
        let csv = render_access_map(&tap.access_order(), RenderFormat::Csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "0,1,2,3,4");
    }

    #[test]
    fn rank_three_maps_are_rejected() {
        let tap = TensorAccessPattern::new(&[2, 2, 2], 0, &[8], &[1]).unwrap();
        assert_eq!(
            render_access_map(&tap.access_count(), RenderFormat::Csv).unwrap_err(),
            RenderError::UnsupportedRank(3)
        );
    }

    #[test]
    fn ansi_is_deterministic_and_line_structured() {
        let tap = TensorAccessPattern::new(&[2, 3], 0, &[2, 3], &[3, 1]).unwrap();
        let a = render_access_map(&tap.access_order(), RenderFormat::Ansi).unwrap();
        let b = render_access_map(&tap.access_order(), RenderFormat::Ansi).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 2);
    }
}
