use fods_core::separation::pairing_mismatch;
use fods_core::*;
use proptest::prelude::*;

fn mat(n: usize, m: usize, v: &[f64]) -> Matrix {
    Matrix::from_row_slice(n, m, &v[..n * m])
}

fn vecs(n: usize, k: usize, v: &[f64]) -> Vec<Vector> {
    (0..k).map(|i| Vector::from_column_slice(&v[i * n..(i + 1) * n])).collect()
}

fn entries(len: usize, a: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-a..a, len)
}

prop_compose! {
    fn small_model(n: usize, p: usize, q: usize)(
        a in entries(n * n, 0.3),
        b in entries(n * p, 1.0),
        c in entries(q * n, 1.0),
        alpha in prop::collection::vec(0.2f64..1.2, n),
    ) -> SystemModel {
        SystemModel::new(mat(n, n, &a), mat(n, p, &b), mat(q, n, &c), FractionalOrders::new(alpha).unwrap()).unwrap()
    }
}

prop_compose! {
    // Coupling and orders small enough that 50-step trajectories stay O(1..100).
    fn tame_model(n: usize)(
        a in entries(n * n, 0.1),
        b in entries(n, 1.0),
        c in entries(n, 1.0),
        alpha in prop::collection::vec(0.2f64..0.9, n),
    ) -> SystemModel {
        SystemModel::new(mat(n, n, &a), mat(n, 1, &b), mat(1, n, &c), FractionalOrders::new(alpha).unwrap()).unwrap()
    }
}

fn max_diff(a: &[Vector], b: &[Vector]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_sums_positive_and_decreasing(alpha in 0.01f64..0.99) {
        let mut s = 1.0;
        let mut prev = f64::INFINITY;
        for j in 1..=200 {
            s += gl_coefficient(alpha, j);
            prop_assert!(s > 0.0);
            prop_assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn superposition(
        model in small_model(3, 2, 1),
        xa in entries(3, 1.0), xb in entries(3, 1.0),
        ua in entries(2 * 30, 1.0), ub in entries(2 * 30, 1.0),
    ) {
        let (xa, xb) = (Vector::from_vec(xa), Vector::from_vec(xb));
        let (ua, ub) = (vecs(2, 30, &ua), vecs(2, 30, &ub));
        let sum_u: Vec<Vector> = ua.iter().zip(&ub).map(|(a, b)| a + b).collect();
        let ta = simulate(&model, &xa, &ua).unwrap();
        let tb = simulate(&model, &xb, &ub).unwrap();
        let ts = simulate(&model, &(&xa + &xb), &sum_u).unwrap();
        for k in 0..=30 {
            let lhs = &ts.states[k];
            let rhs = &ta.states[k] + &tb.states[k];
            prop_assert!((lhs - &rhs).amax() <= 1e-9 * (1.0 + rhs.amax()));
        }
    }

    #[test]
    fn memory_observer_with_one_gain_matches_single_gain_step(
        model in small_model(3, 1, 2),
        l in entries(3 * 2, 0.5),
        x0 in entries(3, 1.0), xhat0 in entries(3, 1.0),
        u in entries(20, 1.0),
    ) {
        let gains = ObserverGains::single(mat(3, 2, &l));
        let inputs = vecs(1, 20, &u);
        let traj = simulate(&model, &Vector::from_vec(x0), &inputs).unwrap();
        let outputs: Vec<Vector> = traj.states.iter().map(|x| model.output(x)).collect();
        let table = build_coefficient_table(&model, 20);
        let mut single = EstimateHistory::new(&model, Vector::from_vec(xhat0.clone())).unwrap();
        let mut memory = EstimateHistory::new(&model, Vector::from_vec(xhat0)).unwrap();
        for k in 0..20 {
            let a = observer_step(&model, &table, &gains, &single, &inputs[k], &outputs[k]).unwrap();
            let b = observer_step_memory(&model, &table, &gains, &memory, &inputs, &outputs).unwrap();
            prop_assert!((&a - &b).amax() <= 1e-14 * (1.0 + a.amax()));
            single.push(&model, a);
            memory.push(&model, b);
        }
    }

    #[test]
    fn exact_initialization_is_tracked_forever(
        model in small_model(3, 2, 1),
        l0 in entries(3, 2.0), l1 in entries(3, 2.0),
        x0 in entries(3, 1.0),
        u in entries(2 * 100, 1.0),
    ) {
        let gains = ObserverGains::new(vec![mat(3, 1, &l0), mat(3, 1, &l1)]).unwrap();
        let inputs = vecs(2, 100, &u);
        let x0 = Vector::from_vec(x0);
        let traj = simulate(&model, &x0, &inputs).unwrap();
        let outputs: Vec<Vector> = traj.states.iter().map(|x| model.output(x)).collect();
        let table = build_coefficient_table(&model, 100);
        let mut est = EstimateHistory::new(&model, x0).unwrap();
        for _ in 0..100 {
            let next = observer_step_memory(&model, &table, &gains, &est, &inputs, &outputs).unwrap();
            est.push(&model, next);
        }
        prop_assert!(max_diff(est.estimates(), &traj.states) <= 1e-12);
    }

    #[test]
    fn error_recursion_ignores_feedback(
        model in tame_model(3),
        f0 in entries(3, 0.1), f1 in entries(3, 0.1),
        l in entries(3, 0.1),
        x0 in entries(3, 1.0), xhat0 in entries(3, 1.0),
    ) {
        let fgains = FeedbackGains::new(vec![mat(1, 3, &f0), mat(1, 3, &f1)]).unwrap();
        let ogains = ObserverGains::single(mat(3, 1, &l));
        let (x0, xhat0) = (Vector::from_vec(x0), Vector::from_vec(xhat0));
        let trace = closed_loop_simulate(&model, &fgains, &ogains, &x0, &xhat0, 50).unwrap();
        let auto = error_trajectory(&model, &ogains, &(&x0 - &xhat0), 50).unwrap();
        prop_assert!(max_diff(&trace.errors, &auto.errors) <= 1e-10);
    }

    #[test]
    fn condensation_is_exact(
        model in small_model(3, 2, 1),
        hist in entries(3 * 5, 1.0),
        moves in entries(2 * 3, 1.0),
    ) {
        let config = MpcConfig { prediction_horizon: 6, control_horizon: 3, mvar_order: 4, ..MpcConfig::default() };
        let table = build_coefficient_table(&model, 8);
        let mvar = mvar_truncate(&table, model.b(), 4).unwrap();
        let history = StateHistory::new(vecs(3, 5, &hist)).unwrap();
        let cond = condense(&mvar, &history, &config).unwrap();
        let stacked = cond.free.clone() + &cond.forced * Vector::from_column_slice(&moves);
        let held: Vec<Vector> = (0..6).map(|t| Vector::from_column_slice(&moves[t.min(2) * 2..t.min(2) * 2 + 2])).collect();
        let direct = predict(&mvar, &history, &held).unwrap();
        for (t, x) in direct.iter().enumerate() {
            prop_assert!((stacked.rows(t * 3, 3) - x).amax() <= 1e-12 * (1.0 + x.amax()));
        }
    }

    #[test]
    fn assembled_spectrum_is_the_union(
        model in small_model(2, 1, 1),
        f0 in entries(2, 1.0), f1 in entries(2, 0.5),
        l0 in entries(2, 1.0), l1 in entries(2, 0.5),
        order in 2usize..6,
        memory_gains in any::<bool>(),
    ) {
        let fgains = FeedbackGains::new(vec![mat(1, 2, &f0), mat(1, 2, &f1)]).unwrap();
        let ogains = if memory_gains {
            ObserverGains::new(vec![mat(2, 1, &l0), mat(2, 1, &l1)]).unwrap()
        } else {
            ObserverGains::single(mat(2, 1, &l0))
        };
        let table = build_coefficient_table(&model, order);
        let blocks = toeplitz_truncation(&table, model.b(), model.c(), &fgains, &ogains, order, memory_gains).unwrap();
        let full = spectrum(&blocks.assembled).unwrap();
        let union = [spectrum(&blocks.j1).unwrap(), spectrum(&blocks.j3).unwrap()].concat();
        prop_assert_eq!(full.len(), 2 * 2 * order);
        prop_assert!(pairing_mismatch(&full, &union) <= 1e-8);
    }

    #[test]
    fn designed_observer_meets_its_radius(
        model in small_model(3, 1, 1),
        target in 0.05f64..0.9,
    ) {
        let table = build_coefficient_table(&model, 1);
        if let Ok(l) = design_observer_gain(&table, model.c(), target) {
            let a0 = &table.memory_matrices()[0];
            let rho = linalg::spectral_radius(&(a0 - &l * model.c())).unwrap();
            prop_assert!(rho <= target + 1e-9, "rho = {}", rho);
        }
    }

    #[test]
    fn mpc_solves_are_certified(
        model in small_model(3, 2, 1),
        hist in entries(3 * 4, 1.0),
        reference in entries(3 * 5, 1.0),
    ) {
        let config = MpcConfig { prediction_horizon: 5, control_horizon: 2, mvar_order: 4, ..MpcConfig::default() };
        let table = build_coefficient_table(&model, 6);
        let mvar = mvar_truncate(&table, model.b(), 4).unwrap();
        let history = StateHistory::new(vecs(3, 4, &hist)).unwrap();
        let sol = solve_mpc_step(&mvar, &history, &vecs(3, 5, &reference), &config).unwrap();
        prop_assert!(sol.is_certified(), "{:?}", sol);
    }
}
