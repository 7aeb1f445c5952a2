mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{fixture, iso_eq};
use termgraph::{parse, parse_graph, serialize, serialize_graph, to_dot};
use termgraph_core::{random, Signature};

#[test]
fn random_graphs_round_trip() {
    let sig = Signature::new([("add", 2), ("neg", 1), ("const_0", 0), ("f3", 3)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..100 {
        let t = random::any_term_graph(&mut rng, &sig, 3, 10);
        let text = serialize_graph("G", &t);
        let back = parse_graph(&sig, &text).unwrap_or_else(|e| panic!("graph {k}: {e}\n{text}"));
        assert!(iso_eq(&back, &t), "graph {k}:\n{text}");
        assert_eq!(serialize_graph("G", &back), text, "graph {k}: canonical text is stable");
    }
}

#[test]
fn documents_round_trip() {
    for f in ["fig1.tg", "fig3.tg", "fig4.tg"] {
        let doc = fixture(f);
        let text = serialize(&doc);
        let again = parse(&text).unwrap_or_else(|e| panic!("{f}: {e}\n{text}"));
        assert_eq!(serialize(&again), text, "{f}");
        assert_eq!(again.graphs.len(), doc.graphs.len());
        assert_eq!(again.rules.len(), doc.rules.len());
        assert_eq!(again.matches.len(), doc.matches.len());
        for ((_, a), (_, b)) in doc.graphs.iter().zip(&again.graphs) {
            assert!(iso_eq(a, b), "{f}");
        }
    }
}

#[test]
fn fig1_dot_shapes() {
    let doc = fixture("fig1.tg");
    let d = to_dot("A", doc.graph("A").unwrap());
    assert_eq!(d.matches("shape=point").count(), 8);
    assert_eq!(d.matches("shape=record").count(), 4);
    assert_eq!(d.matches("shape=triangle").count(), 4);
    assert_eq!(d.matches("shape=invtriangle").count(), 1);
    assert_eq!(d.matches("|sub}").count(), 1);
}
