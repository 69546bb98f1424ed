use lolrec::classifier::{predict_labels, ClassifierModel};
use lolrec::corruption::corrupt_random_pixels;
use lolrec::matrix_io::{
    column_normalize, encode_pgm, format_matrix_csv, parse_matrix_csv, parse_pgm, ImageGrid,
};
use lolrec::metrics::reconstruction_accuracy;
use lolrec::prox::{column_l21_shrink, svt, thin_svd, uniform_shrink, weighted_shrink};
use lolrec::weights::{hadamard, sclrr_weight};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0..10.0f64, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
    })
}

fn pair(max_rows: usize, max_cols: usize) -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        let v = || prop::collection::vec(-10.0..10.0f64, r * c);
        (v(), v()).prop_map(move |(a, b)| (DMatrix::from_vec(r, c, a), DMatrix::from_vec(r, c, b)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_roundtrip_is_exact(m in matrix(6, 6)) {
        let back = parse_matrix_csv(&format_matrix_csv(&m)).unwrap();
        prop_assert_eq!(back.as_matrix(), &m);
    }

    #[test]
    fn pgm_roundtrip_is_exact(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
        let pixels: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(31).wrapping_add(i as u64 * 97) % 256) as u8).collect();
        let g = ImageGrid::new(w, h, pixels).unwrap();
        prop_assert_eq!(parse_pgm(&encode_pgm(&g)).unwrap(), g);
    }

    #[test]
    fn normalization_is_idempotent(m in matrix(5, 5)) {
        let once = column_normalize(&m);
        let twice = column_normalize(&once);
        for (a, b) in once.iter().zip(twice.iter()) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
        for c in once.column_iter() {
            let n = c.norm();
            prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shrink_is_nonexpansive((a, b) in pair(5, 5), tau in 0.0..5.0f64) {
        let d = (uniform_shrink(&a, tau).unwrap() - uniform_shrink(&b, tau).unwrap()).norm();
        prop_assert!(d <= (&a - &b).norm() * (1.0 + 1e-12));
    }

    #[test]
    fn weighted_shrink_never_grows_entries(m in matrix(5, 5), t in 0.0..3.0f64) {
        let thresholds = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| t * ((i + j) % 3) as f64);
        let out = weighted_shrink(&m, &thresholds).unwrap();
        for (o, v) in out.iter().zip(m.iter()) {
            prop_assert!(o.abs() <= v.abs());
            prop_assert!(o * v >= 0.0);
        }
    }

    #[test]
    fn svt_is_nonexpansive((a, b) in pair(5, 5), tau in 0.0..5.0f64) {
        let d = (svt(&a, tau).unwrap() - svt(&b, tau).unwrap()).norm();
        prop_assert!(d <= (&a - &b).norm() * (1.0 + 1e-9) + 1e-9);
    }

    #[test]
    fn l21_shrink_is_nonexpansive((a, b) in pair(5, 5), tau in 0.0..5.0f64) {
        let d = (column_l21_shrink(&a, tau).unwrap() - column_l21_shrink(&b, tau).unwrap()).norm();
        prop_assert!(d <= (&a - &b).norm() * (1.0 + 1e-12));
    }

    #[test]
    fn thin_svd_reconstructs(m in matrix(6, 6)) {
        let svd = thin_svd(&m).unwrap();
        prop_assert!((svd.reconstruct() - &m).norm() <= 1e-10 * (1.0 + m.norm()));
        prop_assert!(svd.singular_values.iter().zip(svd.singular_values.iter().skip(1)).all(|(a, b)| a >= b));
    }

    #[test]
    fn thin_svd_reconstructs_rank_deficient_products(
        (a, b) in (1usize..7, 1usize..7, 1usize..4).prop_flat_map(|(r, c, k)| {
            (
                prop::collection::vec(-3.0..3.0f64, r * k).prop_map(move |v| DMatrix::from_vec(r, k, v)),
                prop::collection::vec(-3.0..3.0f64, k * c).prop_map(move |v| DMatrix::from_vec(k, c, v)),
            )
        })
    ) {
        let m = a * b;
        let svd = thin_svd(&m).unwrap();
        prop_assert!((svd.reconstruct() - &m).norm() <= 1e-10 * (1.0 + m.norm()));
    }

    #[test]
    fn hadamard_commutes((a, b) in pair(6, 6)) {
        prop_assert_eq!(hadamard(&a, &b).unwrap(), hadamard(&b, &a).unwrap());
    }

    #[test]
    fn angle_weight_ignores_column_scale(m in matrix(4, 5), c in 0.1..10.0f64) {
        prop_assume!(m.ncols() >= 2);
        let mut scaled = m.clone();
        scaled.column_mut(0).scale_mut(c);
        let w1 = sclrr_weight(&m).unwrap().w;
        let w2 = sclrr_weight(&scaled).unwrap().w;
        for (a, b) in w1.iter().zip(w2.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn corruption_touches_exactly_the_advertised_count(pct in 0.0..100.0f64, seed in any::<u64>()) {
        // entries far outside [0, 1) so every replacement is visible
        let x = DMatrix::from_element(8, 12, 5.0);
        let y = corrupt_random_pixels(&x, pct, seed).unwrap();
        let changed = x.iter().zip(y.iter()).filter(|(a, b)| a != b).count();
        prop_assert_eq!(changed, ((pct / 100.0) * 96.0).round() as usize);
        prop_assert_eq!(corrupt_random_pixels(&x, pct, seed).unwrap(), y);
    }

    #[test]
    fn zeta_is_monotone_in_distance(m in matrix(4, 4), s in 0.0..2.0f64, t in 0.0..2.0f64) {
        prop_assume!(m.norm() > 1e-6);
        let dir = DMatrix::from_element(m.nrows(), m.ncols(), 1.0);
        let (near, far) = if s <= t { (s, t) } else { (t, s) };
        let z_near = reconstruction_accuracy(&m, &(&m + &dir * near)).unwrap();
        let z_far = reconstruction_accuracy(&m, &(&m + &dir * far)).unwrap();
        prop_assert!(z_far <= z_near);
        prop_assert!((0.0..=1.0).contains(&z_near));
    }

    #[test]
    fn predicted_labels_ignore_positive_scaling(m in matrix(3, 6), c in 0.01..100.0f64) {
        prop_assume!(m.nrows() == 3);
        let model = ClassifierModel {
            c_star: DMatrix::from_fn(3, 3, |i, j| ((i * 3 + j) as f64).sin()),
            l_star: DMatrix::from_fn(3, 3, |i, j| ((i + 2 * j) as f64).cos()),
            training_error: DMatrix::zeros(1, 3),
            delta: 0.0,
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
        let (labels, soft) = predict_labels(&model, &m).unwrap();
        let (scaled_labels, scaled_soft) = predict_labels(&model, &(&m * c)).unwrap();
        prop_assert_eq!(labels, scaled_labels);
        for (a, b) in soft.iter().zip(scaled_soft.iter()) {
            prop_assert!((a * c - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}
