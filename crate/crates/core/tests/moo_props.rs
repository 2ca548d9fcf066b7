use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uav_codesign::moo::{
    dominates, hypervolume, normalized_hypervolume, objective_bounds, optimize_discrete, pareto_filter,
    point_of, sample_distinct, space_size, BoSettings,
};

fn front3() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(0.0..1.0f64), 0..12)
}

fn front2() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec(prop::array::uniform2(0.0..1.0f64), 0..20)
}

// Two objectives, one distance-like parameter. Known convex front.
fn zdt1(p: &[usize], sizes: &[usize]) -> Vec<f64> {
    let x: Vec<f64> = p.iter().zip(sizes).map(|(&i, &s)| i as f64 / (s - 1) as f64).collect();
    let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (x.len() - 1) as f64;
    vec![x[0], g * (1.0 - (x[0] / g).sqrt())]
}

proptest! {
    #[test]
    fn hv_is_order_independent(mut pts in front3(), seed in any::<u64>()) {
        let r = [1.0; 3];
        let a = hypervolume(&pts, &r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::seq::SliceRandom;
        pts.shuffle(&mut rng);
        let b = hypervolume(&pts, &r).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn hv_ignores_duplicates_and_dominated(pts in front3()) {
        let r = [1.0; 3];
        let a = hypervolume(&pts, &r).unwrap();
        let mut doubled = pts.clone();
        doubled.extend(pts.iter().map(|p| [p[0], p[1], p[2]]));
        doubled.extend(pts.iter().map(|p| [(p[0] + 1.0) / 2.0, (p[1] + 1.0) / 2.0, (p[2] + 1.0) / 2.0]));
        prop_assert!((hypervolume(&doubled, &r).unwrap() - a).abs() <= 1e-12);
        let front: Vec<[f64; 3]> = pareto_filter(&pts).into_iter().map(|i| pts[i]).collect();
        prop_assert!((hypervolume(&front, &r).unwrap() - a).abs() <= 1e-12);
    }

    #[test]
    fn hv_is_monotone(pts in front3(), extra in prop::array::uniform3(0.0..1.0f64)) {
        let r = [1.0; 3];
        let a = hypervolume(&pts, &r).unwrap();
        let mut more = pts.clone();
        more.push(extra);
        prop_assert!(hypervolume(&more, &r).unwrap() >= a - 1e-12);
    }

    #[test]
    fn hv_scales_with_the_axes(pts in front2(), sx in 0.1..10.0f64, sy in 0.1..10.0f64) {
        let a = hypervolume(&pts, &[1.0, 1.0]).unwrap();
        let scaled: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] * sx, p[1] * sy]).collect();
        let b = hypervolume(&scaled, &[sx, sy]).unwrap();
        prop_assert!((b - a * sx * sy).abs() <= 1e-9 * (1.0 + b));
    }

    #[test]
    fn filter_output_is_the_nondominated_set(pts in prop::collection::vec(prop::collection::vec(0u8..5, 3), 0..60)) {
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect();
        let kept = pareto_filter(&pts);
        for (i, p) in pts.iter().enumerate() {
            let dominated = pts.iter().any(|q| dominates(q, p));
            prop_assert_eq!(kept.contains(&i), !dominated);
        }
        let again: Vec<Vec<f64>> = kept.iter().map(|&i| pts[i].clone()).collect();
        prop_assert_eq!(pareto_filter(&again).len(), again.len());
    }

    #[test]
    fn sampled_indices_are_distinct(size in 1u64..5000, k in 0usize..200, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_distinct(size as u128, k, &mut rng);
        prop_assert_eq!(s.len(), k.min(size as usize));
        let set: std::collections::HashSet<_> = s.iter().collect();
        prop_assert_eq!(set.len(), s.len());
        prop_assert!(s.iter().all(|&f| f < size as u128));
    }
}

#[test]
fn point_outside_reference_is_refused() {
    assert!(hypervolume(&[[1.5, 0.0]], &[1.0, 1.0]).is_err());
}

#[test]
fn bo_beats_random_on_a_synthetic_benchmark() {
    let sizes = [16usize, 12, 12];
    let total = space_size(&sizes) as usize;
    let all: Vec<Vec<f64>> =
        (0..total).map(|f| zdt1(&point_of(f as u128, &sizes), &sizes)).collect();
    let (lo, hi) = objective_bounds(&all);
    let (budget, init) = (50, 12);
    let mut wins = 0;
    for seed in 0..20 {
        let obs = optimize_discrete(&sizes, 2, budget, init, seed, &BoSettings::default(), |p, _| {
            Ok(((), zdt1(p, &sizes)))
        })
        .unwrap();
        let bo: Vec<Vec<f64>> = obs.iter().map(|o| o.y.clone()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs: Vec<Vec<f64>> =
            sample_distinct(total as u128, budget, &mut rng).into_iter().map(|f| all[f as usize].clone()).collect();
        if normalized_hypervolume(&bo, &lo, &hi) >= normalized_hypervolume(&rs, &lo, &hi) {
            wins += 1;
        }
    }
    assert!(wins >= 16, "BO matched random search in only {wins}/20 seeds");
}

#[test]
fn budget_equal_to_init_is_random_search() {
    let sizes = [10usize, 10, 10];
    for seed in 0..5 {
        let obs = optimize_discrete(&sizes, 2, 15, 15, seed, &BoSettings::default(), |p, _| Ok(((), zdt1(p, &sizes))))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs = sample_distinct(1000, 15, &mut rng);
        assert_eq!(obs.iter().map(|o| o.flat).collect::<Vec<_>>(), rs);
    }
}

#[test]
fn optimizer_is_deterministic_and_never_repeats() {
    let sizes = [8usize, 8, 8];
    let run = || {
        optimize_discrete(&sizes, 2, 40, 8, 3, &BoSettings::default(), |p, _| Ok(((), zdt1(p, &sizes))))
            .unwrap()
            .into_iter()
            .map(|o| o.flat)
            .collect::<Vec<_>>()
    };
    let a = run();
    assert_eq!(a, run());
    let set: std::collections::HashSet<_> = a.iter().collect();
    assert_eq!(set.len(), 40);
}
