#![no_main]

use libfuzzer_sys::fuzz_target;
use ortho_transfer::BiadjacencyMatrix;

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fuzz_target!(|data: &[u8]| {
    let (targets, sources) = (ids("t", 20), ids("s", 30));
    if let Ok(graph) = BiadjacencyMatrix::read_tsv(data, targets.clone(), sources.clone()) {
        let mut out = Vec::new();
        graph.write_tsv(&mut out).unwrap();
        let again = BiadjacencyMatrix::read_tsv(&out[..], targets, sources).unwrap();
        assert_eq!(again, graph);
    }
});
