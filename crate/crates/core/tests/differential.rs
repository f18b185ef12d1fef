mod common;

use common::{compare, reference_run, small_case};
use proptest::prelude::*;
use shortlist_secretary::{run_with_layout, Execution};

fn check(seed: u64, capture_all: bool, exec: Execution) -> Result<(), String> {
    let case = small_case(seed, capture_all);
    let run = run_with_layout(&case.oracle, &case.arrival, &case.layout, case.params, exec)
        .map_err(|e| e.to_string())?;
    let reference = reference_run(
        &case.oracle,
        case.arrival.items(),
        &case.layout.slot_sizes,
        &case.params,
    );
    compare(&run, &reference).map_err(|e| format!("seed {seed}: {e}"))
}

#[test]
fn matches_reference_on_small_instances() {
    for seed in 0..150 {
        check(seed, false, Execution::Parallel).unwrap();
    }
}

#[test]
fn matches_reference_in_capture_all_mode() {
    for seed in 1000..1060 {
        check(seed, true, Execution::Sequential).unwrap();
    }
}

#[test]
fn fixed_coverage_case() {
    use rand::SeedableRng;
    use shortlist_secretary::{
        gen_instance, sample_arrival, sample_layout, InstanceSpec, RunParams,
    };

    let spec = InstanceSpec::Coverage {
        n: 40,
        universe: 30,
        density: 0.15,
        weight_min: 1.0,
        weight_max: 1.0,
    };
    let f = gen_instance(&spec, 11).unwrap();
    let arrival = sample_arrival(40, 11).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let layout = sample_layout(40, 2, 1, 2, &mut rng).unwrap();
    let params = RunParams::new(2, 1, 2, 0.5);
    let run = run_with_layout(&f, &arrival, &layout, params, Execution::Parallel).unwrap();
    let reference = reference_run(&f, arrival.items(), &layout.slot_sizes, &params);
    compare(&run, &reference).unwrap();
    assert!(!run.final_set.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reference_agreement(seed in any::<u64>(), capture_all in any::<bool>()) {
        prop_assert!(check(seed, capture_all, Execution::Sequential).is_ok());
    }
}
