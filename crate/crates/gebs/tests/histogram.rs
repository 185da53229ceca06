use gebs::histogram::{density_histogram, density_histogram_trimmed};
use gebs_core::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;

fn standard_normals(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = stream(seed, 0);
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn standard_normal_has_one_mode_near_zero() {
    let z = standard_normals(11, 10_000);
    let h = density_histogram(&z, 40).unwrap();
    assert_eq!(h.modes.len(), 1, "modes {:?}", h.modes);
    assert!(h.modes[0].abs() < 0.3);
    let total: f64 = h.masses.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn symmetric_mixture_has_two_modes() {
    let z = standard_normals(12, 10_000);
    let x: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { v - 3.0 } else { v + 3.0 })
        .collect();
    let h = density_histogram(&x, 40).unwrap();
    assert_eq!(h.modes.len(), 2, "modes {:?}", h.modes);
    assert!((h.modes[0] + 3.0).abs() < 0.5 && (h.modes[1] - 3.0).abs() < 0.5);
}

#[test]
fn trimming_keeps_masses_normalized() {
    let x: Vec<f64> = (0..1000)
        .map(|k| if k == 0 { 1e9 } else { k as f64 })
        .collect();
    let h = density_histogram_trimmed(&x, 10, 0.01).unwrap();
    assert_eq!(h.trimmed, 20);
    assert!(h.hi < 1e9);
    assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let h = density_histogram_trimmed(&x, 10, 0.0).unwrap();
    assert_eq!(h.trimmed, 0);
}

#[test]
fn constant_draws() {
    let h = density_histogram(&[2.0; 60], 10).unwrap();
    assert_eq!(h.modes.len(), 1);
    assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn preconditions() {
    assert!(density_histogram(&[0.0; 49], 10).is_err());
    assert!(density_histogram(&[0.0; 50], 9).is_err());
    let mut x = vec![0.0; 60];
    x[3] = f64::NAN;
    assert!(density_histogram(&x, 10).is_err());
}
