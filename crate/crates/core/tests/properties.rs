//! Invariants of the public API on randomly generated inputs.

use manicov::covariance::{frame_at, local_data_matrix};
use manicov::eig::{eig_distance, DeformedDataset, Deformation, EigParams};
use manicov::geodesic::{build_local_graph, corrected_distance, shortest_paths, EdgeEstimator};
use manicov::linalg::{regularized_inverse, truncated_inverse, SymMatrix};
use manicov::lle::{assemble_lle_matrix, lle_weights, NeighborScale, Regularization, WeightVariant};
use manicov::manifolds::{sample_circle_uniform, sample_sphere};
use manicov::pointcloud::{parse_csv, radius_neighbors, save_csv};
use manicov::PointCloud;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn points(n: std::ops::Range<usize>, p: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, p), n)
}

fn gram(rows: &[Vec<f64>]) -> SymMatrix {
    let b = DMatrix::from_fn(rows[0].len(), rows.len(), |i, j| rows[j][i]);
    SymMatrix::new(&b * b.transpose()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncated_inverse_is_symmetric_and_reproduces_its_range(rows in points(1..4, 4)) {
        let a = gram(&rows);
        let rank = rows.len();
        prop_assume!(DMatrix::from_fn(4, rank, |i, j| rows[j][i]).svd(false, false).singular_values.min() > 1e-2);
        let t = truncated_inverse(&a, rank).unwrap();
        let t = t.as_matrix();
        prop_assert!((t - t.transpose()).amax() <= 1e-12 * t.amax().max(1.0));
        let ata = a.as_matrix() * t * a.as_matrix();
        prop_assert!((ata - a.as_matrix()).amax() <= 1e-8 * a.as_matrix().amax().max(1.0));
    }

    #[test]
    fn regularized_inverse_shrinks_as_c_grows(rows in points(1..6, 3), c in 1e-3f64..1.0) {
        let a = gram(&rows);
        let small = regularized_inverse(&a, c).unwrap();
        let large = regularized_inverse(&a, 2.0 * c).unwrap();
        // I_c − I_2c is positive semidefinite.
        let diff = small.as_matrix() - large.as_matrix();
        let min_eig = diff.symmetric_eigen().eigenvalues.min();
        prop_assert!(min_eig >= -1e-9 * small.as_matrix().amax().max(1.0));
    }

    #[test]
    fn lle_weights_are_affine_and_translation_invariant(
        rows in points(3..10, 3),
        shift in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let a = PointCloud::from_points(&rows).unwrap();
        let b = PointCloud::from_points(&moved).unwrap();
        let nb = radius_neighbors(&a, 0, 100.0).unwrap();
        let ga = local_data_matrix(&a, &nb).unwrap();
        let gb = local_data_matrix(&b, &radius_neighbors(&b, 0, 100.0).unwrap()).unwrap();
        let c = Regularization::default().value_for(&ga);
        prop_assume!(c > 1e-9);
        let (wa, wb) = (lle_weights(&ga, c).unwrap(), lle_weights(&gb, c).unwrap());
        prop_assert!((wa.sum() - 1.0).abs() <= 1e-10);
        for (x, y) in wa.weights.iter().zip(&wb.weights) {
            prop_assert!((x - y).abs() <= 1e-8 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn csv_round_trip_is_exact(rows in points(1..20, 3)) {
        let cloud = PointCloud::from_points(&rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.csv");
        save_csv(&cloud, &path).unwrap();
        let back = parse_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
        prop_assert_eq!(back, cloud);
    }

    #[test]
    fn corrected_estimate_never_below_the_chord(seed in 0u64..1000, i in 0usize..200) {
        let m = sample_circle_uniform(200, seed).unwrap();
        let frame = frame_at(&m.cloud, i, 0.2, 1).unwrap();
        for j in radius_neighbors(&m.cloud, i, 0.2).unwrap().indices {
            let e = corrected_distance(&m.cloud, i, j, &frame).unwrap();
            prop_assert!(e.corrected >= e.euclidean);
        }
    }
}

#[test]
fn lle_rows_sum_to_one_on_a_sphere() {
    let m = sample_sphere(500, 2, 4).unwrap();
    for variant in [WeightVariant::Regularized(Regularization::default()), WeightVariant::Truncated(2)] {
        let w = assemble_lle_matrix(&m.cloud, NeighborScale::Knn(10), variant).unwrap();
        assert!(w.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-10));
    }
}

#[test]
fn graph_distances_obey_the_triangle_inequality() {
    let m = sample_circle_uniform(300, 11).unwrap();
    let g = build_local_graph(&m.cloud, 0.2, EdgeEstimator::Corrected, 1).unwrap();
    let from: Vec<Vec<f64>> = [0, 50, 150].iter().map(|&s| shortest_paths(&g, s).unwrap()).collect();
    assert!(from.iter().flatten().all(|d| d.is_finite()), "graph is disconnected");
    for v in 0..300 {
        // d(0, v) ≤ d(0, 50) + d(50, v), and symmetric distances agree.
        assert!(from[0][v] <= from[0][50] + from[1][v] + 1e-12);
        assert!(from[0][v] <= from[0][150] + from[2][v] + 1e-12);
    }
    assert!((from[0][50] - from[1][0]).abs() < 1e-12);
    // Graph paths never undercut the straight chord.
    for v in 1..300 {
        assert!(from[0][v] + 1e-12 >= m.cloud.distance(0, v));
    }
}

#[test]
fn eig_distance_is_symmetric_and_invariant_to_scaling() {
    let latent = sample_circle_uniform(800, 3).unwrap();
    let plain = DeformedDataset::new(latent.clone(), Deformation::Identity).unwrap();
    // A uniform rescaling changes every ellipsoid by the same factor, which
    // the normalized inverse cancels.
    let scaled = DeformedDataset::new(latent, Deformation::LinearScaling { diag: vec![4.0, 4.0] }).unwrap();
    let params = EigParams::new(1, 0.2).unwrap();
    for (i, j) in [(0, 1), (5, 17), (100, 3)] {
        let a = eig_distance(&plain, i, j, params).unwrap();
        let b = eig_distance(&plain, j, i, params).unwrap();
        let c = eig_distance(&scaled, i, j, params).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        assert!((a - c).abs() <= 1e-9 * a.max(1.0), "{a} vs {c}");
    }
}
