use lightcone_shading::allocation::{allocate_bounds, cost_for_bias_target_bounds, probability_from_rate, residual};
use lightcone_shading::circuit::{Gate, NoiseModel};
use lightcone_shading::lightcone::conventional_lightcone;
use lightcone_shading::oracle::{expectation_with, DenseOp};
use lightcone_shading::pauli::i_pow;
use lightcone_shading::random::{random_circuit, random_coupling, random_noise, random_observable};
use lightcone_shading::shading::{shade, total_bias_bound, ShadeConfig};
use lightcone_shading::{Direction, Pauli, PauliString, PauliSum};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(0usize..4, n).prop_map(|codes| {
        let letters: Vec<(usize, Pauli)> = codes.into_iter().enumerate().map(|(q, c)| (q, Pauli::from_index(c))).collect();
        PauliString::from_letters(&letters)
    })
}

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    (0..n, 1..n, 0usize..3, 0usize..3, -3.2f64..3.2, 0u8..4).prop_map(move |(a, off, la, lb, theta, kind)| {
        let b = (a + off) % n;
        let letters = [Pauli::NON_IDENTITY[la], Pauli::NON_IDENTITY[lb]];
        match kind {
            0 => Gate::rotation(&letters[..1], &[a], theta),
            1 => Gate::rotation(&letters, &[a, b], theta),
            2 => Gate::cx(a, b),
            _ => Gate::clifford(lightcone_shading::Clifford::H, &[a]),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_phase_matches_dense(a in pauli_string(3), b in pauli_string(3)) {
        let (k, out) = a.mul(&b);
        let da = DenseOp::from_pauli_sum(&PauliSum::from_real(3, [(a, 1.0)])).to_matrix();
        let db = DenseOp::from_pauli_sum(&PauliSum::from_real(3, [(b, 1.0)])).to_matrix();
        let dout = DenseOp::from_pauli_sum(&PauliSum::from_real(3, [(out, 1.0)])).to_matrix();
        prop_assert!((da * db - dout * i_pow(k)).norm() < 1e-12);
        prop_assert_eq!(a.commutes(&b), b.commutes(&a));
        prop_assert_eq!(a.mul(&b).1, b.mul(&a).1);
    }

    #[test]
    fn conjugation_round_trips(p in pauli_string(4), g in gate(4)) {
        let start = PauliSum::from_real(4, [(p, 1.0)]);
        let mut op = start.clone();
        g.conjugate(&mut op, Direction::Forward);
        prop_assert!((op.coeff_norm_sqr() - 1.0).abs() < 1e-12);
        g.conjugate(&mut op, Direction::Backward);
        op.prune(1e-12);
        prop_assert_eq!(op.len(), 1);
        prop_assert!((op.coeff(&p) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn commutator_is_antisymmetric(a in pauli_string(3), b in pauli_string(3), x in -2.0f64..2.0) {
        let sa = PauliSum::from_real(3, [(a, x), (b, 1.0)]);
        let sb = PauliSum::from_real(3, [(b, 0.5)]);
        let ab = sa.commutator(&sb).unwrap();
        let ba = sb.commutator(&sa).unwrap();
        let mut total = ab.add(&ba).unwrap();
        total.prune(1e-14);
        prop_assert!(total.is_empty());
    }

    #[test]
    fn probabilities_stay_below_half(lambda in 0.0f64..50.0) {
        let p = probability_from_rate(lambda).unwrap();
        prop_assert!((0.0..=0.5).contains(&p));
    }

    #[test]
    fn allocation_invariants(
        c in prop::collection::vec(0.0f64..2.0, 1..10),
        seed in 0u64..1000,
        frac in 0.0f64..1.2,
    ) {
        let m = c.len();
        let rates: Vec<f64> = (0..m).map(|k| 0.005 + 0.045 * (((seed + k as u64) * 7919 % 1000) as f64 / 1000.0)).collect();
        let layers: Vec<usize> = (0..m).map(|k| k % 3).collect();
        let total: f64 = rates.iter().sum();
        let budget = frac * total;
        let r = allocate_bounds(&c, &rates, &layers, budget).unwrap();
        prop_assert!(r.partial_channels(&rates).len() <= 1);
        prop_assert!(r.budget_used <= budget + 1e-12);
        prop_assert!(r.lambda_star.iter().zip(&rates).all(|(s, l)| *s >= 0.0 && s <= l));
        let more = allocate_bounds(&c, &rates, &layers, budget + 0.01).unwrap();
        prop_assert!(more.residual_bias_bound <= r.residual_bias_bound + 1e-15);
        let eps = frac.min(1.0) * residual(&c, &rates, &vec![0.0; m]);
        let t = cost_for_bias_target_bounds(&c, &rates, &layers, eps).unwrap();
        prop_assert!(t.residual_bias_bound <= eps + 1e-12);
        prop_assert!(t.partial_channels(&rates).len() <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn outside_channels_do_not_move_the_expectation(seed in 0u64..10_000) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let coupling = random_coupling(&mut r, 5, 0.1);
        let circuit = random_circuit(&mut r, 5, 5, &coupling, 0.4);
        let noise = random_noise(&mut r, &circuit, 10, 0.05);
        let obs = random_observable(&mut r, 5);
        let inside = conventional_lightcone(&circuit, &obs, noise.channels());
        let none = vec![false; noise.len()];
        let base = expectation_with(&circuit, &noise, &none, &obs).unwrap();
        let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
        let with = expectation_with(&circuit, &noise, &outside, &obs).unwrap();
        prop_assert!((with - base).abs() < 1e-12);
    }

    #[test]
    fn bounds_lie_in_range(seed in 0u64..10_000) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let coupling = random_coupling(&mut r, 6, 0.1);
        let circuit = random_circuit(&mut r, 6, 6, &coupling, 0.3);
        let noise = random_noise(&mut r, &circuit, 12, 0.05);
        let obs = random_observable(&mut r, 6);
        let lc = shade(&circuit, &obs, &noise, &ShadeConfig::default()).unwrap();
        let inside = conventional_lightcone(&circuit, &obs, noise.channels());
        for (ch, &ins) in lc.channels.iter().zip(&inside) {
            prop_assert!(ch.c >= 0.0 && ch.c <= 2.0 * obs.norm_bound() + 1e-12);
            if !ins {
                prop_assert_eq!(ch.c, 0.0);
            }
        }
        prop_assert_eq!(total_bias_bound(&lc, &vec![0.0; noise.len()]), 0.0);
        prop_assert_eq!(NoiseModel::empty().len(), 0);
    }
}
