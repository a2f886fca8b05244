use marray_core::campaign::{aggregate, parse_config, run_campaign, run_realization, ArrayScheme};
use marray_core::rates::RateScheme;

const SMALL: &str = r#"
[rates]
users = [3]
schemes = ["ul-sic", "ul-lin", "dl-lin", "dl-dpc"]
optimize_for = ["ul-sic"]

[pso]
particles = 12
iterations = 8

[campaign]
realizations = 3
seed = 7
"#;

#[test]
fn end_to_end_orderings_hold_per_realization() {
    let spec = parse_config(SMALL).unwrap();
    let result = run_campaign(&spec).unwrap();
    assert_eq!(result.realizations.len(), 3);
    for real in &result.realizations {
        let p = &real.points[0];
        let get = |a, o, s| p.get(a, o, s).unwrap().sum_rate;
        let ma = get(ArrayScheme::Movable, Some(RateScheme::UlSic), RateScheme::UlSic);
        let zi = get(ArrayScheme::ZeroInterference, None, RateScheme::UlSic);
        let staggered = get(ArrayScheme::StaggeredUra, None, RateScheme::UlSic);
        // The swarm is seeded with the staggered layout, so it can only improve on it.
        assert!(ma >= staggered - 1e-9, "MA {ma} < staggered {staggered}");
        for a in ArrayScheme::ALL.iter().filter(|a| a.is_fixed()) {
            let sic = get(*a, None, RateScheme::UlSic);
            let lin = get(*a, None, RateScheme::UlLin);
            let dpc = get(*a, None, RateScheme::DlDpc);
            let dl = get(*a, None, RateScheme::DlLin);
            assert!(sic >= lin - 1e-10 && dpc >= dl - 1e-10);
            assert!(zi >= lin - 1e-9, "ZI {zi} below UL-lin {lin} of {a}");
        }
        let trace = &p.pso[0].trace;
        assert!(trace.best_values.windows(2).all(|w| w[1] >= w[0]));
        assert!(trace.feasible);
    }
    let summary = aggregate(&result).unwrap();
    let s = summary.find(0, ArrayScheme::CompactUpa, None, RateScheme::UlSic).unwrap();
    assert_eq!(s.realizations, 3);
    assert_eq!(s.sum_rate_cdf.len(), 3);
}

#[test]
fn campaign_matches_serial_realizations() {
    let spec = parse_config(SMALL).unwrap();
    let parallel = run_campaign(&spec).unwrap();
    let serial: Vec<_> = (0..3).map(|i| run_realization(&spec, i).unwrap()).collect();
    assert_eq!(parallel.realizations, serial);
}

#[test]
fn user_sweep_is_nested() {
    let spec = parse_config(&SMALL.replace("users = [3]", "users = [2, 4]")).unwrap();
    let a = spec.draw_paths(1, 2).unwrap();
    let b = spec.draw_paths(1, 4).unwrap();
    assert_eq!(b.truncated(2), a);
}
