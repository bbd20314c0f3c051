use ristap_core::driver::{run_scheme, DriverOptions, Instance, RunStatus, Scheme};
use ristap_core::filter::update_filter;
use ristap_core::linalg::CVec;
use ristap_core::scenario::{build_scenario, sample_channels, ScenarioConfig};

fn instance(seed: u64) -> Instance {
    let cfg = ScenarioConfig::desk_default();
    let scenario = build_scenario(&cfg).unwrap();
    Instance::new(&cfg, sample_channels(&scenario, seed), seed).unwrap()
}

fn opts() -> DriverOptions {
    DriverOptions { max_outer: 15, ..DriverOptions::default() }
}

#[test]
fn repeated_runs_are_identical() {
    let inst = instance(1);
    let a = run_scheme(&inst, Scheme::Proposed, &opts(), None).unwrap();
    let b = run_scheme(&instance(1), Scheme::Proposed, &opts(), None).unwrap();
    assert_eq!(a.scnr_trace, b.scnr_trace);
    assert_eq!(a.design.x, b.design.x);
    assert_eq!(a.design.phi, b.design.phi);
}

#[test]
fn traces_are_monotone_and_iterates_feasible() {
    for seed in 0..3 {
        let inst = instance(seed);
        for scheme in [Scheme::Proposed, Scheme::RandomRis, Scheme::NoRis] {
            let r = run_scheme(&inst, scheme, &opts(), None).unwrap();
            assert_ne!(r.status, RunStatus::Infeasible, "seed {seed} {scheme:?}");
            for w in r.scnr_trace.windows(2) {
                assert!(w[1] >= w[0] * (1.0 - 1e-12), "seed {seed} {scheme:?}");
            }
            assert!(r.ci_min_margin >= -1e-5);
            assert!(r.modulus_deviation <= 1e-9 * inst.modulus);
            assert!(r.phi_max <= inst.a_max + 1e-9);
        }
    }
}

#[test]
fn no_ris_equals_switched_off_reflections() {
    let inst = instance(2);
    let bare = inst.without_ris().unwrap();
    assert_eq!(bare.channels.dims.n_ris, 0);
    let x = run_scheme(&inst, Scheme::NoRis, &opts(), None).unwrap().design.x;
    let off = update_filter(&inst.model, &x, &CVec::zeros(inst.channels.dims.rnr()), inst.sigma_r2).unwrap();
    let none = update_filter(&bare.model, &x, &CVec::zeros(0), inst.sigma_r2).unwrap();
    assert!((off.eta - none.eta).abs() <= 1e-9 * none.eta);
    let off_ci = inst.ci.margins_x(&inst.channels, &x, &CVec::zeros(inst.channels.dims.rnr()));
    let none_ci = bare.ci.margins_x(&bare.channels, &x, &CVec::zeros(0));
    assert!((&off_ci - &none_ci).amax() <= 1e-12 * off_ci.amax());
}

#[test]
fn radar_only_from_isac_point_is_no_worse() {
    let inst = instance(0);
    let isac = run_scheme(&inst, Scheme::Proposed, &opts(), None).unwrap();
    let radar = run_scheme(&inst, Scheme::RadarOnly, &opts(), Some(&isac.design)).unwrap();
    assert!(radar.final_scnr() >= isac.final_scnr() * (1.0 - 1e-9));
}

#[test]
fn scheme_names_round_trip() {
    for s in [Scheme::Proposed, Scheme::RandomRis, Scheme::NoRis, Scheme::RadarOnly] {
        assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
    }
    assert!("foo".parse::<Scheme>().is_err());
}
