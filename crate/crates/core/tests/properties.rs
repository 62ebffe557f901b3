use frenetfold::dynamics::{debye_waller, fit_scaling, glauber_probability, Schedule};
use frenetfold::energy::{energy_gradient, total_energy, EnergyParams};
use frenetfold::geometry::*;
use frenetfold::io::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn params() -> impl Strategy<Value = EnergyParams> {
    (0.1..3.0f64, 0.3..2.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.5..2.0f64, 0.0..1.0f64)
        .prop_map(|(l, m, a, b, c, d)| EnergyParams::new(l, m, a, b, c, d).unwrap())
}

/// Bond angles away from 0 and π keep every frame well defined.
fn profile(max_sites: usize) -> impl Strategy<Value = AngleProfile> {
    (1..max_sites).prop_flat_map(|n| {
        (
            prop::collection::vec((0.15..2.9f64, any::<bool>()), n),
            prop::collection::vec(-PI..PI, n - 1),
            prop::collection::vec(3.0..4.5f64, n + 1),
        )
            .prop_map(|(k, tau, bonds)| {
                let kappa = k.into_iter().map(|(x, neg)| if neg { -x } else { x }).collect();
                AngleProfile::new(kappa, tau, bonds).unwrap()
            })
    })
}

fn chain_points(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-50.0..50.0f64), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn angles_then_reconstruct_is_identity_up_to_motion(p in profile(60)) {
        let chain = reconstruct(&p).unwrap();
        let back = compute_angles(&chain).unwrap();
        for (a, b) in p.kappa.iter().zip(&back.kappa) {
            prop_assert!((a.abs() - b).abs() < 1e-9);
        }
        let again = reconstruct(&back).unwrap();
        prop_assert!(rmsd(&chain, &again).unwrap() < 1e-8);
    }

    #[test]
    fn gauge_moves_leave_geometry_alone(p in profile(40), seed in prop::collection::vec(-PI..PI, 41), site in 0usize..40) {
        let base = reconstruct(&p).unwrap();
        let deltas = &seed[..=p.len()];
        let so2 = reconstruct(&so2_gauge(&p, deltas).unwrap()).unwrap();
        prop_assert!(rmsd(&base, &so2).unwrap() < 1e-8);
        let z2 = reconstruct(&z2_gauge(&p, site % p.len()).unwrap()).unwrap();
        prop_assert!(rmsd(&base, &z2).unwrap() < 1e-8);
        let (unfolded, _) = unfold_gauge(&p);
        prop_assert!(rmsd(&base, &reconstruct(&unfolded).unwrap()).unwrap() < 1e-8);
        prop_assert!(total_variation(&unfolded) <= total_variation(&p) + 1e-12);
    }

    #[test]
    fn z2_twice_is_the_identity_on_geometry(p in profile(30), site in 0usize..30) {
        let s = site % p.len();
        let twice = z2_gauge(&z2_gauge(&p, s).unwrap(), s).unwrap();
        for (a, b) in p.kappa.iter().zip(&twice.kappa) {
            prop_assert_eq!(a, b);
        }
        for (a, b) in p.tau.iter().zip(&twice.tau) {
            prop_assert!(wrap_angle(a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transfer_matrices_are_rotations(k in -10.0..10.0f64, t in -10.0..10.0f64) {
        let r = transfer_matrix(k, t);
        prop_assert!((r * r.transpose() - nalgebra::Matrix3::identity()).abs().max() < 1e-14);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_central_differences(p in profile(20), e in params()) {
        let g = energy_gradient(&p, &e);
        let h = 1e-5;
        let fd = |which: usize, i: usize| {
            let shifted = |dx: f64| {
                let mut q = p.clone();
                if which == 0 { q.kappa[i] += dx } else { q.tau[i] += dx }
                total_energy(&q, &e)
            };
            (shifted(h) - shifted(-h)) / (2.0 * h)
        };
        for i in 0..p.kappa.len() {
            let n = fd(0, i);
            prop_assert!((g.kappa[i] - n).abs() <= 1e-6 * (1.0 + n.abs()), "kappa {i}: {} vs {n}", g.kappa[i]);
        }
        for i in 0..p.tau.len() {
            let n = fd(1, i);
            prop_assert!((g.tau[i] - n).abs() <= 1e-6 * (1.0 + n.abs()), "tau {i}: {} vs {n}", g.tau[i]);
        }
    }

    #[test]
    fn rmsd_is_invariant_under_rigid_motion(pts in chain_points(40), axis in prop::array::uniform3(-1.0..1.0f64), angle in -PI..PI, shift in prop::array::uniform3(-20.0..20.0f64)) {
        let chain = CalphaChain::from_points(&pts);
        let axis = Vec3::from(axis);
        prop_assume!(axis.norm() > 1e-3);
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        let moved = CalphaChain::new(chain.vertices.iter().map(|v| rot * v + Vec3::from(shift)).collect());
        prop_assert!(rmsd(&chain, &moved).unwrap() < 1e-9);
        prop_assert!((radius_of_gyration(&chain) - radius_of_gyration(&moved)).abs() < 1e-9);
    }

    #[test]
    fn pdb_text_round_trips(pts in chain_points(50), b in prop::collection::vec(0.0..99.0f64, 50)) {
        let mut chain = CalphaChain::from_points(&pts);
        chain.b_factors = Some(b[..chain.len()].to_vec());
        let parsed = parse_calpha(&write_chain(&chain), None, 0).unwrap();
        let back: Vec<Vec3> = parsed.fragments.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        prop_assert_eq!(back.len(), chain.len());
        for (a, b) in chain.vertices.iter().zip(&back) {
            prop_assert!((a - b).abs().max() <= 5e-4 + 1e-9);
        }
    }

    #[test]
    fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..600)) {
        let _ = parse_calpha_bytes(&bytes, &ParseOptions::default());
    }

    #[test]
    fn parser_survives_corrupted_records(pos in 0usize..80, byte in any::<u8>(), cut in 0usize..81) {
        let line = b"ATOM      2  CA  MET A   1      26.266  25.413   2.842  1.00 10.38           C";
        let mut l = line.to_vec();
        let len = l.len();
        l[pos % len] = byte;
        l.truncate(cut);
        let text = [l.as_slice(), b"\n", line.as_slice()].concat();
        let _ = parse_calpha_bytes(&text, &ParseOptions::default());
    }

    #[test]
    fn profiles_round_trip_through_csv_and_json(p in profile(30)) {
        prop_assert_eq!(profile_from_json(&profile_to_json(&p)).unwrap(), p.clone());
        let csv = profile_from_csv(&profile_to_csv(&p, &[])).unwrap();
        for (a, b) in p.kappa.iter().chain(&p.tau).chain(&p.bond_lengths).zip(csv.kappa.iter().chain(&csv.tau).chain(&csv.bond_lengths)) {
            prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn glauber_detailed_balance(de in -50.0..50.0f64, kt in 0.01..10.0f64) {
        let p = glauber_probability(de, kt);
        let q = glauber_probability(-de, kt);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + q - 1.0).abs() < 1e-15);
        if (de / kt).abs() < 30.0 {
            prop_assert!((p / q / (-de / kt).exp() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn schedules_round_trip_as_text(stages in prop::collection::vec((1usize..100_000, 1e-6..100.0f64), 1..6)) {
        let s = Schedule { stages: stages.iter().map(|&(steps, kt)| frenetfold::dynamics::Stage { steps, kt }).collect() };
        let back: Schedule = s.to_string().parse().unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn scaling_fit_recovers_exact_power_laws(nu in 0.2..0.9f64, r0 in 0.5..5.0f64) {
        let lengths = [16, 24, 32, 48, 64];
        let rg: Vec<f64> = lengths.iter().map(|&n| r0 * (n as f64).powf(nu)).collect();
        let fit = fit_scaling(&lengths, &rg).unwrap();
        prop_assert!((fit.nu - nu).abs() < 1e-10);
        prop_assert!((fit.r0 - r0).abs() < 1e-9 * r0);
    }

    #[test]
    fn debye_waller_is_monotone(b1 in 0.0..200.0f64, b2 in 0.0..200.0f64) {
        let (w1, w2) = (debye_waller(b1).unwrap(), debye_waller(b2).unwrap());
        prop_assert_eq!(b1 <= b2, w1 <= w2);
        prop_assert!((w1 * w1 * 8.0 * PI * PI - b1).abs() < 1e-9 * (1.0 + b1));
    }
}
