use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use skelreg::builder::{assign_two_nn, build_edges, two_nearest};
use skelreg::harness::kfold_split;
use skelreg::metric::{knot_paths, project, skeleton_distance};
use skelreg::penalty::{gen_lasso_dual_path, gen_lasso_fixed_lambda, graph_operators, LassoOptions};
use skelreg::types::{ambient_location, PointCloud, RowMatrix, Skeleton, SkeletonPosition};
use skelreg::Execution;

fn points(dim: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), n)
}

fn chain(k: usize) -> Skeleton {
    let rows: Vec<Vec<f64>> = (0..k).map(|i| vec![i as f64, (i as f64).sin()]).collect();
    let pairs: Vec<(usize, usize)> = (1..k).map(|j| (j - 1, j)).collect();
    Skeleton::from_graph(RowMatrix::from_rows(&rows).unwrap(), &pairs).unwrap()
}

fn edges_for(pts: &[Vec<f64>], knots: &[Vec<f64>]) -> Vec<skelreg::types::EdgeRecord> {
    let pc = PointCloud::new(RowMatrix::from_rows(pts).unwrap(), None).unwrap();
    let km = RowMatrix::from_rows(knots).unwrap();
    build_edges(&assign_two_nn(&pc, &km, Execution::Sequential).unwrap(), &km, pts.len(), 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_counts_bounded_by_n(pts in points(3, 10..80), k in 2usize..8) {
        let knots = pts[..k].to_vec();
        let edges = edges_for(&pts, &knots);
        let total: usize = edges.iter().map(|e| e.count).sum();
        prop_assert!(total <= pts.len());
        for e in &edges {
            prop_assert!(e.i < e.j && e.count >= 1 && e.vd_weight > 0.0);
        }
    }

    #[test]
    fn density_weight_translation_and_scale(
        pts in points(2, 10..60),
        k in 2usize..6,
        shift in prop::collection::vec(-50.0..50.0f64, 2),
        c in 0.1..10.0f64,
    ) {
        let knots = pts[..k].to_vec();
        let base = edges_for(&pts, &knots);
        let moved = |f: &dyn Fn(&[f64]) -> Vec<f64>| -> Vec<skelreg::types::EdgeRecord> {
            let p: Vec<Vec<f64>> = pts.iter().map(|x| f(x)).collect();
            let kn: Vec<Vec<f64>> = knots.iter().map(|x| f(x)).collect();
            edges_for(&p, &kn)
        };
        let shifted = moved(&|x| x.iter().zip(&shift).map(|(a, b)| a + b).collect());
        let scaled = moved(&|x| x.iter().map(|a| a * c).collect());
        // near-ties in the 2-NN assignment can flip under rounding; compare
        // only when the edge sets agree
        if shifted.len() == base.len() && shifted.iter().zip(&base).all(|(a, b)| (a.i, a.j, a.count) == (b.i, b.j, b.count)) {
            for (a, b) in shifted.iter().zip(&base) {
                prop_assert!((a.vd_weight / b.vd_weight - 1.0).abs() < 1e-9);
            }
        }
        if scaled.len() == base.len() && scaled.iter().zip(&base).all(|(a, b)| (a.i, a.j, a.count) == (b.i, b.j, b.count)) {
            for (a, b) in scaled.iter().zip(&base) {
                prop_assert!((a.vd_weight * c / b.vd_weight - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn skeleton_distance_is_a_metric_on_a_chain(
        k in 2usize..10,
        a in (0usize..100, 0.0..1.0f64),
        b in (0usize..100, 0.0..1.0f64),
        c in (0usize..100, 0.0..1.0f64),
    ) {
        let sk = chain(k);
        let table = knot_paths(&sk);
        let pos = |(e, t): (usize, f64)| {
            let e = e % (k - 1);
            if t < 0.1 { SkeletonPosition::knot(e) } else { SkeletonPosition::EdgePoint { edge: e, t: t.min(0.999) } }
        };
        let (p, q, r) = (pos(a), pos(b), pos(c));
        let d = |x: &SkeletonPosition, y: &SkeletonPosition| skeleton_distance(x, y, &sk, &table);
        prop_assert_eq!(d(&p, &q).to_bits(), d(&q, &p).to_bits());
        prop_assert_eq!(d(&p, &p), 0.0);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
    }

    #[test]
    fn dual_path_satisfies_kkt(y in prop::collection::vec(-5.0..5.0f64, 3..10), order in 0usize..3) {
        let k = y.len();
        let d = graph_operators(&chain(k), order).delta;
        let path = gen_lasso_dual_path(&y, &d).unwrap();
        let yv = DVector::from_vec(y.clone());
        for w in path.lambdas().windows(2) {
            prop_assert!(w[0] > w[1]);
        }
        for knot in &path.knots {
            prop_assert!(knot.u.amax() <= knot.lambda + 1e-9);
            prop_assert!((&yv - &knot.beta - d.transpose() * &knot.u).amax() < 1e-9);
            let db = &d * &knot.beta;
            for i in 0..d.nrows() {
                if db[i].abs() > 1e-8 {
                    prop_assert!((knot.u[i] - knot.lambda * db[i].signum()).abs() < 1e-8);
                }
            }
        }
        prop_assert_eq!(&path.knots.last().unwrap().beta, &yv);
    }

    #[test]
    fn fixed_lambda_solver_matches_path(y in prop::collection::vec(-5.0..5.0f64, 3..8), frac in 0.05..0.95f64) {
        let k = y.len();
        let d = graph_operators(&chain(k), 0).delta;
        let path = gen_lasso_dual_path(&y, &d).unwrap();
        let lam = path.knots[0].lambda * frac;
        let z = DMatrix::identity(k, k);
        let beta = gen_lasso_fixed_lambda(&z, &y, &d, lam, &LassoOptions::default()).unwrap();
        prop_assert!((beta - path.solution_at(lam)).amax() < 1e-6);
    }

    #[test]
    fn projection_idempotent_when_pair_preserved(
        knots in points(2, 3..8),
        x in prop::collection::vec(-12.0..12.0f64, 2),
    ) {
        let k = knots.len();
        let pairs: Vec<(usize, usize)> = (1..k).map(|j| (j - 1, j)).chain(std::iter::once((0, k - 1))).collect();
        let pairs: Vec<(usize, usize)> = if k == 2 { vec![(0, 1)] } else { pairs };
        let Ok(sk) = Skeleton::from_graph(RowMatrix::from_rows(&knots).unwrap(), &pairs) else { return Ok(()) };
        let p = project(&x, &sk).unwrap();
        let a = ambient_location(&p, &sk);
        let (i1, i2) = two_nearest(&a, sk.knots());
        let preserved = match p {
            SkeletonPosition::EdgePoint { edge, .. } => {
                let e = sk.edge(edge);
                (i1.min(i2), i1.max(i2)) == (e.i, e.j)
            }
            SkeletonPosition::Knot { index } => i1 == index,
        };
        if preserved {
            let q = project(&a, &sk).unwrap();
            match (p, q) {
                (SkeletonPosition::EdgePoint { edge: e1, t: t1 }, SkeletonPosition::EdgePoint { edge: e2, t: t2 }) => {
                    prop_assert_eq!(e1, e2);
                    prop_assert!((t1 - t2).abs() < 1e-9);
                }
                (SkeletonPosition::Knot { index: a1 }, SkeletonPosition::Knot { index: a2 }) => prop_assert_eq!(a1, a2),
                (p, q) => {
                    // a near-endpoint edge point may land on the knot after
                    // rounding; distances must still agree
                    let table = knot_paths(&sk);
                    prop_assert!(skeleton_distance(&p, &q, &sk, &table) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn kfold_is_a_balanced_partition(n in 1usize..300, f in 1usize..12, seed in any::<u64>()) {
        prop_assume!(f <= n);
        let fold = kfold_split(n, f, seed).unwrap();
        prop_assert_eq!(&fold, &kfold_split(n, f, seed).unwrap());
        let mut sizes = vec![0usize; f];
        for &l in &fold {
            prop_assert!(l < f);
            sizes[l] += 1;
        }
        let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }
}

#[test]
fn projection_is_not_idempotent_in_general() {
    // the projected point's own two nearest knots can be a different pair
    let rows = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.2, 0.5]];
    let sk = Skeleton::from_graph(RowMatrix::from_rows(&rows).unwrap(), &[(0, 1), (0, 2), (1, 2)]).unwrap();
    let x = [0.9, -3.0];
    let p = project(&x, &sk).unwrap();
    let a = ambient_location(&p, &sk);
    let q = project(&a, &sk).unwrap();
    assert_ne!(p, q);
}

#[test]
fn kfold_rejects_too_many_folds() {
    assert!(kfold_split(3, 4, 0).is_err());
    assert!(kfold_split(3, 0, 0).is_err());
}
