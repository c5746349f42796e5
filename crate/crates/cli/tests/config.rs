use proptest::prelude::*;
use rotor_cli::config::*;
use rotor_cli::error::CliError;

fn base() -> serde_json::Value {
    serde_json::json!({
        "system": { "atom_number": 100, "kappa_hz": 1.0e6 },
        "targets": { "omega_tight_hz": 43000.0, "omega_wide_hz": 7000.0 },
        "grid": { "n_points": 256 },
        "protocol": { "squeeze": { "n_cycles": 2 } }
    })
}

fn parse(v: &serde_json::Value) -> Result<RunConfig, CliError> {
    RunConfig::from_json(&v.to_string())
}

proptest! {
    #[test]
    fn arbitrary_floats_survive_a_round_trip(
        c2 in 1e-3f64..1e9,
        q in -1e6f64..1e6,
        u0 in 1e-3f64..1e9,
        eta in 0.0f64..1e9,
        delta in -1e9f64..1e9,
        dt in 1e-12f64..1e-2,
        seed in any::<u64>(),
    ) {
        let mut v = base();
        v["system"]["c2_hz"] = c2.into();
        v["system"]["q_hz"] = q.into();
        v["system"]["u0_hz"] = u0.into();
        v["drives"] = serde_json::json!({
            "tight": { "eta_hz": eta, "delta_hz": delta },
            "wide": { "eta_hz": eta, "delta_hz": delta * 0.5 }
        });
        v["grid"]["dt_rotor"] = dt.into();
        v["seed"] = seed.into();
        let cfg = parse(&v).unwrap();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(&cfg, &back);
        prop_assert_eq!(back.system.c2_hz.unwrap().to_bits(), c2.to_bits());
        prop_assert_eq!(back.drives.unwrap().tight.delta_hz.to_bits(), delta.to_bits());
    }
}

#[test]
fn defaults_are_filled_in() {
    let cfg = parse(&base()).unwrap();
    assert_eq!(cfg.noise.n_trajectories, 1);
    assert!(!cfg.noise.is_ensemble());
    assert_eq!(cfg.grid.period, PeriodConfig::Pi);
    assert_eq!(cfg.targets.unwrap().depth, 20.0);
    assert_eq!(cfg.observers.moments_stride, 0);
    assert_eq!(cfg.seed, 0);
}

#[test]
fn inconsistent_sections_are_rejected() {
    type Edit = Box<dyn Fn(&mut serde_json::Value)>;
    let cases: Vec<(&str, Edit)> = vec![
        (
            "partial system",
            Box::new(|v| v["system"]["c2_hz"] = 1.0.into()),
        ),
        (
            "no targets",
            Box::new(|v| {
                v.as_object_mut()
                    .unwrap()
                    .remove("targets")
                    .map(|_| ())
                    .unwrap()
            }),
        ),
        (
            "inverted targets",
            Box::new(|v| v["targets"]["omega_wide_hz"] = 5e4.into()),
        ),
        (
            "zero cycles",
            Box::new(|v| v["protocol"]["squeeze"]["n_cycles"] = 0.into()),
        ),
        (
            "negative dt",
            Box::new(|v| v["grid"]["dt_rotor"] = (-1.0).into()),
        ),
        (
            "huge atom noise",
            Box::new(|v| v["noise"] = serde_json::json!({ "atom_number_sigma_rel": 0.7 })),
        ),
        (
            "unknown protocol",
            Box::new(|v| v["protocol"] = serde_json::json!({ "chirp": {} })),
        ),
        (
            "ramp without end",
            Box::new(
                |v| v["protocol"] = serde_json::json!({ "segments": [{ "duration_us": 1.0, "shape": "linear", "from": "tight" }] }),
            ),
        ),
    ];
    for (name, edit) in cases {
        let mut v = base();
        edit(&mut v);
        match parse(&v) {
            Err(e) => assert_eq!(e.exit_code(), 2, "{name}: {e}"),
            Ok(_) => panic!("{name} accepted"),
        }
    }
}

#[test]
fn segment_protocols_resolve_named_and_explicit_drives() {
    let mut v = base();
    v["protocol"] = serde_json::json!({ "segments": [
        { "duration_us": 5.0, "shape": "hold", "from": "tight" },
        { "duration_us": 1.0, "shape": "smoothstep", "from": "tight", "to": { "eta_hz": 0.0, "delta_hz": 0.0 } },
        { "duration_us": 2.0, "shape": "hold", "from": "off" }
    ]});
    let cfg = parse(&v).unwrap();
    let r = Resolved::new(&cfg).unwrap();
    assert!((r.schedule.total_duration() - 8e-6).abs() < 1e-18);
    assert_eq!(r.schedule.initial_drive(), r.calibration.drive_tight);
    assert_eq!(r.schedule.final_drive().eta, 0.0);
    assert!(r.squeeze.is_none());
}

#[test]
fn wigner_times_must_fall_inside_the_schedule() {
    let mut v = base();
    v["observers"] = serde_json::json!({ "wigner_times_us": [1e6] });
    let cfg = parse(&v).unwrap();
    assert_eq!(Resolved::new(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn derived_config_is_explicit_and_equivalent() {
    let cfg = parse(&base()).unwrap();
    let cal = cfg.calibration().unwrap();
    let derived = cfg.with_calibration(&cal);
    let again = RunConfig::from_json(&derived.to_json())
        .unwrap()
        .calibration()
        .unwrap();
    // Hz ↔ rad/s conversion costs at most an ulp or two
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * a.abs().max(b.abs());
    for (a, b) in [
        (again.drive_tight, cal.drive_tight),
        (again.drive_wide, cal.drive_wide),
    ] {
        assert!(
            close(a.eta, b.eta) && close(a.delta, b.delta),
            "{a:?} vs {b:?}"
        );
    }
    assert!((again.params.c2 / cal.params.c2 - 1.0).abs() < 1e-14);
    assert!((again.achieved_wide / cal.achieved_wide - 1.0).abs() < 1e-12);
}
