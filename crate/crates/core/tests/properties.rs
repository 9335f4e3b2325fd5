//! Property tests over the numeric core: algebraic identities of the
//! matrix layer, losslessness and projection structure of the transform,
//! and the invariants of clipping and the losses.

use proptest::prelude::*;

use trajgcn::dct::{build_basis, dct, idct, pad_replicate, Trajectory};
use trajgcn::matrix::Matrix;
use trajgcn::optim::{clip_gradients, loss_angle, ClipConfig};
use trajgcn::params::ParameterStore;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-10.0..10.0f64, rows * cols)
        .prop_map(move |data| Matrix::from_vec(rows, cols, data).unwrap())
}

fn trajectory(channels: usize, frames: usize) -> impl Strategy<Value = Trajectory> {
    matrix(channels, frames).prop_map(|m| Trajectory::new(m).unwrap())
}

proptest! {
    #[test]
    fn matmul_is_associative(a in matrix(3, 4), b in matrix(4, 2), c in matrix(2, 5)) {
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        let scale = left.max_abs().max(right.max_abs()).max(1.0);
        prop_assert!(left.max_abs_diff(&right).unwrap() / scale < 1e-9);
    }

    #[test]
    fn transpose_is_an_involution(m in matrix(4, 6)) {
        prop_assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn dct_round_trip_is_lossless_at_full_rank(traj in trajectory(2, 12)) {
        let basis = build_basis(12, 12).unwrap();
        let back = idct(&dct(&traj, &basis).unwrap(), &basis).unwrap();
        prop_assert!(back.values().max_abs_diff(traj.values()).unwrap() < 1e-10);
    }

    #[test]
    fn parseval_holds_at_full_rank(traj in trajectory(3, 9)) {
        let basis = build_basis(9, 9).unwrap();
        let coeffs = dct(&traj, &basis).unwrap();
        prop_assert!((coeffs.values().frobenius() - traj.values().frobenius()).abs() < 1e-10);
    }

    #[test]
    fn truncation_error_never_increases_with_more_coefficients(traj in trajectory(1, 10)) {
        let mut prev = f64::INFINITY;
        for l in 1..=10usize {
            let basis = build_basis(10, l).unwrap();
            let back = idct(&dct(&traj, &basis).unwrap(), &basis).unwrap();
            let err = back.values().sub(traj.values()).unwrap().frobenius();
            prop_assert!(err <= prev + 1e-10, "error grew at L={}: {} > {}", l, err, prev);
            prev = err;
        }
    }

    #[test]
    fn dct_of_padding_is_linear(
        x in trajectory(2, 6),
        y in trajectory(2, 6),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let basis = build_basis(9, 7).unwrap();
        let combo = Trajectory::new(
            x.values().scale(alpha).add(&y.values().scale(beta)).unwrap(),
        ).unwrap();
        let lhs = dct(&pad_replicate(&combo, 3), &basis).unwrap();
        let rhs = dct(&pad_replicate(&x, 3), &basis).unwrap().values().scale(alpha)
            .add(&dct(&pad_replicate(&y, 3), &basis).unwrap().values().scale(beta)).unwrap();
        prop_assert!(lhs.values().max_abs_diff(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn clipping_shrinks_uniformly(entries in proptest::collection::vec(-5.0..5.0f64, 1..20)) {
        let n = entries.len();
        let mut store = ParameterStore::new();
        let id = store.add("g", Matrix::zeros(1, n)).unwrap();
        store.accumulate_grad(id, &Matrix::from_vec(1, n, entries.clone()).unwrap()).unwrap();
        let pre = clip_gradients(&mut store, &ClipConfig::default());
        let post = store.global_grad_norm();
        prop_assert!(post <= pre.min(1.0) + 1e-12);
        // direction preserved: every entry scaled by one common factor
        let factor = if pre > 1.0 { 1.0 / pre } else { 1.0 };
        for (before, after) in entries.iter().zip(store.grad(id).data()) {
            prop_assert!((after - before * factor).abs() < 1e-12);
            prop_assert!(after.abs() <= before.abs() + 1e-15);
        }
    }

    #[test]
    fn angle_loss_is_a_symmetric_premetric(a in trajectory(2, 4), b in trajectory(2, 4)) {
        let ab = loss_angle(&a, &b).unwrap();
        let ba = loss_angle(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(loss_angle(&a, &a).unwrap(), 0.0);
    }
}
