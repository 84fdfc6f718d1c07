//! Stored configurations exhibiting specific behaviours.

use chemdist_core::cluster::{project_star, project_star_index};
use chemdist_core::distance::bfs_from;
use chemdist_core::{star_distance, BoxSpec, ClusterLabels, EdgeConfiguration};

const OPEN: [usize; 24] = [1, 2, 8, 10, 11, 13, 15, 16, 17, 18, 22, 23, 24, 25, 26, 27, 31, 32, 33, 36, 37, 41, 45, 47];

fn stored() -> EdgeConfiguration {
    let spec = BoxSpec::new(2, 2, 0).unwrap();
    EdgeConfiguration::from_fn(&spec, 0.6, 0, |s| OPEN.contains(&s))
}

#[test]
fn stored_configuration_matches_sampler() {
    let spec = BoxSpec::new(2, 2, 0).unwrap();
    let sampled = EdgeConfiguration::sample(&spec, 0.6, 0).unwrap();
    let cfg = stored();
    for s in spec.edges() {
        assert_eq!(cfg.is_open_slot(s), sampled.is_open_slot(s));
    }
}

#[test]
fn opening_one_edge_can_increase_regularized_distance() {
    let cfg = stored();
    let (x, y) = ([-2, -2], [-2, 0]);
    let before_labels = ClusterLabels::label(&cfg);
    let before = star_distance(&cfg, &before_labels, &x, &y).unwrap();
    let opened = cfg.with_edge(3, true);
    let after_labels = ClusterLabels::label(&opened);
    let after = star_distance(&opened, &after_labels, &x, &y).unwrap();
    assert_eq!((before, after), (1, 2));
    // the chemical distance itself does not increase anywhere
    let spec = cfg.spec();
    for v in 0..spec.vertex_count() {
        let (a, b) = (bfs_from(&cfg, v), bfs_from(&opened, v));
        for w in 0..spec.vertex_count() {
            if let Some(d) = a.get(w) {
                assert!(b.get(w).unwrap() <= d);
            }
        }
    }
}

#[test]
fn projection_ties_follow_displacement_order() {
    let spec = BoxSpec::new(2, 2, 0).unwrap();
    // giant: the four neighbours of the origin joined around it, origin isolated
    let ring = [[-1, -1], [-1, 0], [-1, 1], [0, 1], [1, 1], [1, 0], [1, -1], [0, -1], [-1, -1]];
    let mut cfg = EdgeConfiguration::closed(&spec);
    for w in ring.windows(2) {
        let (a, b) = (spec.index(&w[0]).unwrap(), spec.index(&w[1]).unwrap());
        cfg = cfg.with_edge(cfg.slot_between(a, b).unwrap(), true);
    }
    let labels = ClusterLabels::label(&cfg);
    assert!(!labels.in_giant(spec.index(&[0, 0]).unwrap()));
    assert_eq!(project_star(&labels, &[0, 0]).unwrap(), vec![-1, 0]);
    assert_eq!(project_star(&labels, &[2, 0]).unwrap(), vec![1, 0]);
    assert_eq!(project_star(&labels, &[2, 2]).unwrap(), vec![1, 1]);
    let far = spec.index(&[-2, 2]).unwrap();
    assert_eq!(spec.coords(project_star_index(&labels, far).unwrap()), vec![-1, 1]);
}
