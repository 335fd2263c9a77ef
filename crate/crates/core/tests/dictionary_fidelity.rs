//! Sampled-code dictionaries against the ideal triangle correlation and
//! exact de-interleaving.

use gnss_lasso::dictionary::interleave;
use gnss_lasso::*;

fn triangle(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

#[test]
fn entries_track_the_triangle_within_seven_percent() {
    let config = CorrelatorConfig::nominal();
    for fp in [1, 5] {
        let dict: Dictionary64 = dictionary_for(&config, fp).unwrap();
        assert_eq!(dict.matrix.dim(), (11, 11 * fp));
        let step = config.spacing / fp as f64;
        let mut worst: f64 = 0.0;
        for i in 0..11 {
            let tap = -0.5 + i as f64 * config.spacing;
            for j in 0..11 * fp {
                let column = (j as f64 - (fp / 2) as f64) * step - 0.5;
                worst = worst.max((dict.matrix[(i, j)] - triangle(column - tap)).abs());
            }
        }
        assert!(worst <= 0.07, "Fp={fp}: {worst}");
    }
}

#[test]
fn coarse_sub_dictionary_is_the_fp1_dictionary() {
    let config = CorrelatorConfig::nominal();
    let coarse: Dictionary64 = dictionary_for(&config, 1).unwrap();
    let fine: Dictionary64 = dictionary_for(&config, 5).unwrap();
    let subs = decimate_dictionary(&fine).unwrap();
    assert_eq!(subs[2].matrix, coarse.matrix);
}

#[test]
fn decimation_round_trip_is_exact() {
    let config = CorrelatorConfig::nominal();
    for fp in [1, 2, 5] {
        let dict: Dictionary64 = dictionary_for(&config, fp).unwrap();
        let subs = decimate_dictionary(&dict).unwrap();
        assert_eq!(subs.len(), fp);
        for (k, sub) in subs.iter().enumerate() {
            assert_eq!(sub.k, k + 1);
            assert_eq!(sub.matrix.dim(), (11, 11));
            for c in 0..11 {
                assert_eq!(sub.matrix.column(c), dict.matrix.column(c * fp + k));
            }
        }
        assert_eq!(interleave(&subs).unwrap(), dict.matrix);
    }
}

#[test]
fn single_precision_dictionary_agrees_with_double() {
    let config = CorrelatorConfig::nominal();
    let d64: Dictionary64 = dictionary_for(&config, 5).unwrap();
    let d32: Dictionary32 = dictionary_for(&config, 5).unwrap();
    for (a, b) in d64.matrix.iter().zip(d32.matrix.iter()) {
        assert!((a - f64::from(*b)).abs() <= 1e-6, "{a} vs {b}");
    }
}

#[test]
fn csv_export_round_trips_bit_exactly() {
    let config = CorrelatorConfig::nominal();
    let dict: Dictionary64 = dictionary_for(&config, 5).unwrap();
    let mut buf = Vec::new();
    write_dictionary_csv(&dict, &mut buf).unwrap();
    let back: Dictionary64 = read_dictionary_csv(buf.as_slice()).unwrap();
    assert_eq!(back, dict);
}
