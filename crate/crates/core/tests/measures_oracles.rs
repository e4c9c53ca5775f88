use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajeval_core::grid::CellId;
use trajeval_core::measures::{
    cosine_distance, discrete_frechet, dtw, hausdorff, kendall_tau_b, solve_transport,
    spatial_ground_cost, wasserstein1_ground_cost, wasserstein1_scalar, EmpiricalDistribution,
    GroundCostMatrix, RankVector,
};
use trajeval_testkit::oracles;

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.15) {
                0.0
            } else {
                rng.random_range(0.01..1.0)
            }
        })
        .collect();
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    w.iter().map(|x| x / s).collect()
}

#[test]
fn network_simplex_matches_lp_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let a = random_weights(&mut rng, n);
        let b = random_weights(&mut rng, m);
        let c: Vec<f64> = (0..n * m)
            .map(|_| {
                if rng.random_bool(0.2) {
                    1.0
                } else {
                    rng.random_range(0.0..1.0)
                }
            })
            .collect();
        let fast = solve_transport(&a, &b, &c).unwrap().cost;
        let slow = oracles::transport_lp_bruteforce(&a, &b, &c);
        assert!(
            (fast - slow).abs() <= 1e-9,
            "{fast} vs {slow} on a={a:?} b={b:?} c={c:?}"
        );
    }
}

#[test]
fn network_simplex_on_degenerate_integer_instances() {
    // equal marginals with many ties stress the anti-cycling rule
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(2..=4);
        let a = vec![1.0 / n as f64; n];
        let b = vec![1.0 / m as f64; m];
        let c: Vec<f64> = (0..n * m).map(|_| rng.random_range(0..3) as f64).collect();
        let fast = solve_transport(&a, &b, &c).unwrap().cost;
        let slow = oracles::transport_lp_bruteforce(&a, &b, &c);
        assert!((fast - slow).abs() <= 1e-9);
    }
}

#[test]
fn larger_instances_have_feasible_plans_and_match_one_dimensional_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let n = rng.random_range(20..60);
        let m = rng.random_range(20..60);
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.7).collect();
        let ys: Vec<f64> = (0..m).map(|j| j as f64 * 0.55 + 0.1).collect();
        let a = random_weights(&mut rng, n);
        let b = random_weights(&mut rng, m);
        let mu = EmpiricalDistribution::new(xs.clone(), a.clone()).unwrap();
        let nu = EmpiricalDistribution::new(ys.clone(), b.clone()).unwrap();
        let c = GroundCostMatrix::absolute_difference(&xs, &ys);
        let plan = solve_transport(mu.weights(), nu.weights(), c.as_slice()).unwrap();
        let mut rows = vec![0.0; n];
        for &(i, _, x) in &plan.flows {
            rows[i] += x;
        }
        for i in 0..n {
            assert!((rows[i] - mu.weights()[i]).abs() < 1e-9);
        }
        let scalar = wasserstein1_scalar(&mu, &nu).unwrap();
        assert!(
            (plan.cost - scalar).abs() < 1e-9,
            "{} vs {scalar}",
            plan.cost
        );
    }
}

#[test]
fn scalar_matches_cdf_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let n = rng.random_range(1..8);
        let m = rng.random_range(1..8);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut ys: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let wx = vec![1.0; xs.len()];
        let wy: Vec<f64> = (0..ys.len()).map(|_| rng.random_range(0.1..2.0)).collect();
        let mu = EmpiricalDistribution::new(xs.clone(), wx.clone()).unwrap();
        let nu = EmpiricalDistribution::new(ys.clone(), wy.clone()).unwrap();
        let fast = wasserstein1_scalar(&mu, &nu).unwrap();
        let slow = oracles::w1_scalar_by_cdf(&xs, &wx, &ys, &wy);
        assert!((fast - slow).abs() < 1e-9);
    }
}

#[test]
fn kendall_matches_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for _ in 0..500 {
        let universe = rng.random_range(2..15u32);
        let make = |rng: &mut ChaCha8Rng| -> BTreeMap<u32, u64> {
            let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
            for i in 0..universe {
                if rng.random_bool(0.7) {
                    counts.insert(i, rng.random_range(1..5));
                }
            }
            let rv = RankVector::from_frequencies(&counts);
            counts.keys().map(|k| (*k, rv.rank(k).unwrap())).collect()
        };
        let x = make(&mut rng);
        let y = make(&mut rng);
        let rx = RankVector::new(x.clone()).unwrap();
        let ry = RankVector::new(y.clone()).unwrap();
        match (
            kendall_tau_b(&rx, &ry),
            oracles::kendall_tau_b_pairwise(&x, &y),
        ) {
            (Ok(fast), Some(slow)) => {
                assert_eq!(fast, slow);
                checked += 1;
            }
            (Err(_), None) => {}
            (fast, slow) => panic!("disagreement: {fast:?} vs {slow:?}"),
        }
    }
    assert!(checked > 400);
}

#[test]
fn sequence_distances_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let la = rng.random_range(1..=6);
        let lb = rng.random_range(1..=6);
        let mut pts = |k: usize| -> Vec<[f64; 2]> {
            (0..k)
                .map(|_| [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)])
                .collect()
        };
        let a = pts(la);
        let b = pts(lb);
        assert!(
            (discrete_frechet(&a, &b).unwrap() - oracles::frechet_by_couplings(&a, &b)).abs()
                < 1e-12
        );
        assert!((dtw(&a, &b).unwrap() - oracles::dtw_by_paths(&a, &b)).abs() < 1e-9);
        assert!(
            (hausdorff(&a, &b).unwrap() - oracles::hausdorff_double_loop(&a, &b)).abs() < 1e-12
        );
    }
}

#[test]
fn two_by_one_polytope() {
    let mu = EmpiricalDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let nu = EmpiricalDistribution::point_mass(0.0);
    let c = GroundCostMatrix::absolute_difference(mu.support(), nu.support());
    let exact = oracles::transport_lp_bruteforce(mu.weights(), nu.weights(), c.as_slice());
    assert_eq!(exact, 0.5);
    assert_eq!(wasserstein1_ground_cost(&mu, &nu, &c).unwrap(), 0.5);
    assert_eq!(wasserstein1_scalar(&mu, &nu).unwrap(), 0.5);
}

fn cell_dist() -> impl Strategy<Value = Vec<(i64, i64, f64)>> {
    prop::collection::vec((-3i64..3, -3i64..3, 0.05f64..1.0), 1..5)
}

fn to_dist(v: &[(i64, i64, f64)]) -> Option<EmpiricalDistribution<CellId>> {
    let mut m: BTreeMap<CellId, f64> = BTreeMap::new();
    for &(c, r, w) in v {
        *m.entry(CellId::new(c, r)).or_default() += w;
    }
    EmpiricalDistribution::from_counts(&m).ok()
}

proptest! {
    #[test]
    fn w1_is_a_metric_on_cells(a in cell_dist(), b in cell_dist(), c in cell_dist()) {
        let (a, b, c) = (to_dist(&a).unwrap(), to_dist(&b).unwrap(), to_dist(&c).unwrap());
        let all: Vec<CellId> = a.support().iter().chain(b.support()).chain(c.support()).copied().collect();
        let cost = trajeval_core::measures::SpatialCost::new(&all, 100.0).unwrap();
        let w = |x: &EmpiricalDistribution<CellId>, y: &EmpiricalDistribution<CellId>| {
            wasserstein1_ground_cost(x, y, &cost.matrix(x.support(), y.support())).unwrap()
        };
        let (ab, ba, bc, ac) = (w(&a, &b), w(&b, &a), w(&b, &c), w(&a, &c));
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(w(&a, &a).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn kendall_is_symmetric(x in prop::collection::btree_map(0u8..12, 1u64..4, 2..10),
                            y in prop::collection::btree_map(0u8..12, 1u64..4, 2..10)) {
        let rx = RankVector::from_frequencies(&x);
        let ry = RankVector::from_frequencies(&y);
        let xy = kendall_tau_b(&rx, &ry);
        let yx = kendall_tau_b(&ry, &rx);
        match (xy, yx) {
            (Ok(p), Ok(q)) => prop_assert_eq!(p, q),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn frechet_dominates_hausdorff(pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..8),
                                   other in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..8)) {
        let a: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let b: Vec<[f64; 2]> = other.iter().map(|&(x, y)| [x, y]).collect();
        prop_assert!(discrete_frechet(&a, &b).unwrap() >= hausdorff(&a, &b).unwrap() - 1e-12);
        let mut rev = b.clone();
        rev.reverse();
        prop_assert!((hausdorff(&a, &b).unwrap() - hausdorff(&a, &rev).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cosine_stays_in_unit_interval(u in prop::collection::vec(0.0f64..5.0, 4), v in prop::collection::vec(0.0f64..5.0, 4)) {
        if let Ok(d) = cosine_distance(&u, &v) {
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}

#[test]
fn spatial_cost_is_translation_invariant() {
    let a = [CellId::new(0, 0), CellId::new(2, 1)];
    let b = [CellId::new(1, 3)];
    let shift = |c: &CellId| CellId::new(c.col + 17, c.row - 40);
    let a2: Vec<CellId> = a.iter().map(shift).collect();
    let b2: Vec<CellId> = b.iter().map(shift).collect();
    assert_eq!(
        spatial_ground_cost(&a, &b, 100.0).unwrap().as_slice(),
        spatial_ground_cost(&a2, &b2, 100.0).unwrap().as_slice()
    );
}
