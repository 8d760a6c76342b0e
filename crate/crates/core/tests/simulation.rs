use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use locreq::commands::cmd_simulate;
use locreq::config::parse_config;
use locreq::fixtures::pallet_spec;
use locreq::report::{render_report, Format};
use locreq::simulate::{random_motion_trajectory, run_simulation, worst_case_trajectory, NoiseModel, SimConfig};
use locreq::spatial::{contains, transform_pose, DofMask, PerAxis};
use locreq::uncertainty::UpdateModel;

const FIXTURE: &str = include_str!("../../../fixtures/pallet_booking.json");

#[test]
fn identical_configs_render_identical_bytes() {
    let cfg = parse_config(FIXTURE.as_bytes()).unwrap();
    let a = cmd_simulate(&cfg).unwrap();
    let b = cmd_simulate(&cfg).unwrap();
    for format in [Format::Json, Format::Csv, Format::Markdown] {
        assert_eq!(render_report(&a.report, format), render_report(&b.report, format));
    }
}

#[test]
fn different_seeds_change_counts() {
    let spec = pallet_spec();
    let update = UpdateModel::periodic(2.0).unwrap();
    let noise = NoiseModel::calibrated(&PerAxis::filled(&DofMask::xyz(), 0.1), 0.99).unwrap();
    let trajectory = worst_case_trajectory(&spec, &update, 0.0, 50).unwrap();
    let run = |seed| {
        run_simulation(&SimConfig {
            function: spec.clone(),
            noise,
            update,
            latency_s: 0.0,
            trajectory: trajectory.clone(),
            trials: 200,
            seed,
        })
        .unwrap()
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1).false_outside_count, run(2).false_outside_count);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_trajectories_stay_in_motion_space(seed: u64, n in 2usize..30) {
        let spec = pallet_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = random_motion_trajectory(&spec, n, 0.2, &mut rng).unwrap();
        tr.check_speed(&spec.max_velocity, &spec.transform_l_to_i).unwrap();
        for (_, p) in tr.waypoints() {
            let at_interest = transform_pose(&spec.transform_l_to_i, p);
            prop_assert!(contains(&spec.motion_space, &at_interest, &spec.dof).unwrap());
        }
    }

    #[test]
    fn perfect_system_has_no_false_events(seed: u64, rate in 0.5..20.0f64) {
        let spec = pallet_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trajectory = random_motion_trajectory(&spec, 10, 0.5, &mut rng).unwrap();
        let rep = run_simulation(&SimConfig {
            function: spec.clone(),
            noise: NoiseModel::new(PerAxis::filled(&spec.dof, 0.0)).unwrap(),
            update: UpdateModel::periodic(rate).unwrap(),
            latency_s: 0.0,
            trajectory,
            trials: 2,
            seed,
        })
        .unwrap();
        prop_assert_eq!(rep.false_outside_joint, 0.0);
        prop_assert!(rep.pass);
    }
}
