use mixkin::config::parse_config;
use mixkin::limit_study::run_limit_study;

fn small(extra_kernel: &str, initial: &str, indicator: &str) -> String {
    format!(
        r#"
mode = "limit-study"
eps_list = [0.1, 0.01]
deterministic = true

[grid]
dim = 2
nodes_per_axis = 8
v_max = 5.0

[species]
masses = [1.0, 2.0]

[kernel]
family = "pseudo-maxwellian"
{extra_kernel}

[kinetic]
t_final = 0.05
n_cells = 8

[initial]
layout = "segregated"
{initial}

[limit]
n_volumes = 4
indicator = "{indicator}"
"#
    )
}

const SEGREGATED: &str = r#"density = [1.0, 0.55]
velocity = [0.2, -0.2]
temperature = [1.0, 2.2]
background = 0.05"#;

#[test]
fn rows_follow_eps_list() {
    let cfg = parse_config(&small("", SEGREGATED, "threshold")).unwrap();
    let (report, series) = run_limit_study(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(series.len(), 2);
    assert_eq!(report.rows[0].eps, 0.1);
    assert_eq!(report.rows[1].eps, 0.01);
    assert_eq!(report.equilibration_ratios.len(), 1);
    assert_eq!(report.discrepancy_ratios.len(), 1);
    assert!(report.equilibration_ratios.iter().chain(&report.discrepancy_ratios).all(|r| r.is_finite() && *r > 0.0));
    for r in &report.rows {
        assert!(r.xi > 0.0 && r.tau > 0.0 && r.eta_1 > 0.0 && r.eta_2 > 0.0, "{r:?}");
        assert!(r.l1_discrepancy.is_finite() && r.l1_other_indicator.is_finite());
        // total mass is about 0.8; clipping must stay below 1e-8 of it
        assert!(r.clipped_mass < 8e-9, "{r:?}");
    }
    // stiffer intra-species collisions keep each species closer to its Maxwellian
    assert!(report.rows[1].equilibration_distance < report.rows[0].equilibration_distance);
}

#[test]
fn no_cross_collisions_means_no_friction() {
    let cfg = parse_config(&small("inter_species = false", SEGREGATED, "threshold")).unwrap();
    let (report, _) = run_limit_study(&cfg).unwrap();
    for r in &report.rows {
        assert_eq!(r.xi, 0.0);
        // w is constant up to positivity clipping in the tails, so its fitted
        // decay rate is negligible next to the O(1) rate with cross collisions
        assert!(r.friction_rate.abs() < 1e-5, "{r:?}");
    }
}

#[test]
fn identical_species_have_nothing_to_relax() {
    let same = r#"density = [1.0, 1.0]
velocity = [0.0, 0.0]
temperature = [1.0, 1.0]
background = 1.0"#;
    let text = small("", same, "fraction").replace("masses = [1.0, 2.0]", "masses = [1.0, 1.0]");
    let cfg = parse_config(&text).unwrap();
    let (report, _) = run_limit_study(&cfg).unwrap();
    for r in &report.rows {
        assert!(r.l1_discrepancy < 1e-12, "{r:?}");
        assert!(r.l1_other_indicator < 1e-12, "{r:?}");
        assert!(r.friction_rate.abs() < 1e-9, "{r:?}");
    }
}
