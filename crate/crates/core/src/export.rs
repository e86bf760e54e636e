//! CSV and 8-bit PGM renderings of intermediate matrices.

use std::fmt::Write as _;

use crate::beat::BeatTrack;

/// Binary PGM (P5) of a row-major `rows x cols` matrix, mapping `[lo, hi]`
/// linearly onto `[0, 255]` and clamping outside it.
pub fn pgm(rows: usize, cols: usize, values: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    assert_eq!(values.len(), rows * cols);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    out.extend(values.iter().map(|&v| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

/// PGM scaled by the matrix maximum (all-zero input renders black).
pub fn pgm_autoscale(rows: usize, cols: usize, values: &[f64]) -> Vec<u8> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    pgm(rows, cols, values, 0.0, max)
}

/// SSM image with distances in `[0, 2]`.
pub fn ssm_pgm(d: usize, pixels: &[f64]) -> Vec<u8> {
    pgm(d, d, pixels, 0.0, 2.0)
}

pub fn matrix_csv(rows: usize, cols: usize, values: &[f64]) -> String {
    assert_eq!(values.len(), rows * cols);
    let mut out = String::new();
    for r in values.chunks(cols.max(1)).take(rows) {
        let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn pca_csv(coords: &[[f64; 3]]) -> String {
    let mut out = String::from("time_index,x,y,z\n");
    for (i, [x, y, z]) in coords.iter().enumerate() {
        writeln!(out, "{i},{x},{y},{z}").unwrap();
    }
    out
}

/// One row per beat: `bias_bpm,beat_index,time`.
pub fn beats_csv(tracks: &[BeatTrack]) -> String {
    let mut out = String::from("bias_bpm,beat_index,time\n");
    for t in tracks {
        for (i, time) in t.beat_times.iter().enumerate() {
            writeln!(out, "{},{i},{time}", t.bias_bpm).unwrap();
        }
    }
    out
}

pub fn score_matrix_csv(scores: &[Vec<f64>]) -> String {
    let cols = scores.first().map(Vec::len).unwrap_or(0);
    matrix_csv(scores.len(), cols, &scores.concat())
}
