use std::collections::BTreeMap;

use degswitch::exact::{
    configuration_distribution, enumerate_configurations, path_family_weight, path_family_weight_by_lifts,
    switched_distribution_by_configurations, switched_distribution_exact, switched_distribution_from, tv_distance,
    uniform_simple_distribution, ExactDistribution,
};
use degswitch::{BadEdgeRule, Configuration, DegreeSequence, Multigraph, SwitchVariant};
use num_rational::BigRational;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn two_twos_four_ones() -> DegreeSequence {
    DegreeSequence::new(vec![2, 2, 1, 1, 1, 1])
}

fn marginals(d: &ExactDistribution) -> BTreeMap<String, BigRational> {
    d.type_marginals()
}

#[test]
fn configuration_census() {
    let configs = enumerate_configurations(&two_twos_four_ones()).unwrap();
    assert_eq!(configs.len(), 105);
    let mut census: BTreeMap<String, u32> = BTreeMap::new();
    for c in &configs {
        *census.entry(c.project().isomorphism_type()).or_default() += 1;
    }
    let mut counts: Vec<u32> = census.values().copied().collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    assert_eq!(counts, vec![48, 24, 24, 6, 3], "{census:?}");
    assert_eq!(configuration_distribution(&two_twos_four_ones()).unwrap().total(), q(1, 1));
}

#[test]
fn uniform_and_switched_laws() {
    let u = marginals(&uniform_simple_distribution(&two_twos_four_ones()).unwrap());
    let mut vals: Vec<_> = u.values().cloned().collect();
    vals.sort();
    assert_eq!(vals, vec![q(1, 3), q(2, 3)], "{u:?}");

    let s = switched_distribution_exact(&two_twos_four_ones(), BadEdgeRule::Lex, SwitchVariant::AnyEdge).unwrap();
    let mut vals: Vec<_> = marginals(&s).values().cloned().collect();
    vals.sort();
    assert_eq!(vals, vec![q(11, 35), q(24, 35)]);

    let d = switched_distribution_exact(&two_twos_four_ones(), BadEdgeRule::Lex, SwitchVariant::Disjoint).unwrap();
    let mut vals: Vec<_> = marginals(&d).values().cloned().collect();
    vals.sort();
    assert_eq!(vals, vec![q(14, 45), q(31, 45)]);
}

#[test]
fn switched_type_distance() {
    let u = uniform_simple_distribution(&two_twos_four_ones()).unwrap();
    let s = switched_distribution_exact(&two_twos_four_ones(), BadEdgeRule::Lex, SwitchVariant::AnyEdge).unwrap();
    let mu: ExactDistribution = u;
    let tv = tv_distance(&mu, &s).unwrap();
    assert!(tv > q(0, 1));
    println!("labeled dTV = {tv}");
}

fn triangle_start() -> Configuration {
    Configuration::from_vertex_edges(7, &[(0, 0), (1, 2), (1, 2), (3, 4), (5, 6)]).unwrap()
}

fn p_triangle(rule: BadEdgeRule, variant: SwitchVariant) -> BigRational {
    let d = switched_distribution_from(&triangle_start(), rule, variant).unwrap();
    d.mass_where(|g: &Multigraph| g.has_edge(0, 1) && g.has_edge(1, 2) && g.has_edge(0, 2))
}

#[test]
fn rules_disagree_on_triangle() {
    assert_eq!(p_triangle(BadEdgeRule::Lex, SwitchVariant::AnyEdge), q(1, 2));
    assert_eq!(p_triangle(BadEdgeRule::MultiFirst, SwitchVariant::AnyEdge), q(4, 13));
    assert_eq!(p_triangle(BadEdgeRule::Lex, SwitchVariant::Disjoint), q(1, 2));
    assert_eq!(p_triangle(BadEdgeRule::MultiFirst, SwitchVariant::Disjoint), q(1, 3));
}

#[test]
fn shared_middle_weights() {
    for k in 2..=4u32 {
        // k-1 P3's a_i - 0 - 1 - b_i sharing the middle edge 0-1
        let mut edges = vec![(0, 1)];
        let mut family = Vec::new();
        for i in 0..k - 1 {
            let (a, b) = (2 + 2 * i, 3 + 2 * i);
            edges.push((a, 0));
            edges.push((1, b));
            family.push(vec![a, 0, 1, b]);
        }
        let g = Multigraph::from_edges(2 * k as usize, edges).unwrap();
        assert_eq!(path_family_weight(&g, &family).unwrap(), q(1, k as i64), "k={k}");
        assert_eq!(path_family_weight_by_lifts(&g, &family).unwrap(), q(1, k as i64));
    }
}

#[test]
fn golden_runs_follow_reweighted_uniform() {
    use degswitch::exact::{golden_reweighted_uniform, silver_history_law};
    let law = silver_history_law(&two_twos_four_ones(), BadEdgeRule::Lex, SwitchVariant::AnyEdge).unwrap();
    let mut checked = 0;
    for (&s, joint) in &law.golden {
        if joint.is_empty() {
            continue;
        }
        let cond = law.golden_conditional(s).unwrap();
        let target = golden_reweighted_uniform(&two_twos_four_ones(), s as usize).unwrap();
        println!("s={s} P={} tv={}", joint.total(), tv_distance(&cond, &target).unwrap());
        assert_eq!(cond, target, "s={s}");
        checked += 1;
    }
    assert!(checked >= 2);
}

#[test]
fn lumped_chain_matches_configuration_chain() {
    let seqs = [vec![2, 2, 1, 1, 1, 1], vec![3, 2, 2, 1], vec![2, 2, 2, 2], vec![3, 3, 1, 1, 1, 1]];
    for degrees in seqs {
        let s = DegreeSequence::new(degrees.clone());
        for rule in [BadEdgeRule::Lex, BadEdgeRule::MultiFirst, BadEdgeRule::Random] {
            for variant in [SwitchVariant::AnyEdge, SwitchVariant::Disjoint] {
                let fast = switched_distribution_exact(&s, rule, variant);
                let slow = switched_distribution_by_configurations(&s, rule, variant);
                match (fast, slow) {
                    (Ok(a), Ok(b)) => assert_eq!(a, b, "{degrees:?} {rule:?} {variant:?}"),
                    (a, b) => assert_eq!(a.err(), b.err(), "{degrees:?} {rule:?} {variant:?}"),
                }
            }
        }
    }
}

#[test]
fn edge_order_rule_runs_on_configurations() {
    let d = switched_distribution_exact(&two_twos_four_ones(), BadEdgeRule::EdgeOrder, SwitchVariant::AnyEdge).unwrap();
    assert_eq!(d.total(), q(1, 1));
    assert!(d.iter().all(|(k, _)| k.to_multigraph().is_simple()));
}
