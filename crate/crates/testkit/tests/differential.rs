//! The lazy engine against the reference interpreter on random graphs.

use breakcheck_query::run_query;
use breakcheck_testkit::{graph_schema, random_query, reference_run, row_multiset, seeded_rng, GraphAdapter};
use rand::Rng;

#[test]
fn random_queries_agree_with_the_reference() {
    let schema = graph_schema();
    let mut rng = seeded_rng(7);
    let mut rows_seen = 0;
    for case in 0..200 {
        let n = rng.gen_range(1..=200);
        let graph = GraphAdapter::random(&mut rng, n);
        let q = random_query(&mut rng, 2);
        let fast = run_query(&q.text, &schema, &graph, &q.arguments)
            .unwrap_or_else(|e| panic!("case {case}: {e}\n{}", q.text));
        let slow = reference_run(&q.text, &schema, &graph, &q.arguments).unwrap();
        assert_eq!(row_multiset(&fast), row_multiset(&slow), "case {case}\n{}", q.text);
        rows_seen += fast.len();
    }
    assert!(rows_seen > 0);
}
