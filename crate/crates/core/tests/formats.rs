//! save -> load -> save must reproduce every file byte for byte.

mod common;

use common::*;
use ortho_transfer::graph::{read_score_table, write_score_table};
use ortho_transfer::interpret::OrthologyWeightTable;
use ortho_transfer::tsv::{read_gene_list, write_gene_list};
use ortho_transfer::{
    Activation, BiadjacencyMatrix, DenseLayer, ExpressionDataset, FeedforwardNetwork, Labels,
    LossKind, MaskedLinearLayer, Model, PhenotypeTable,
};
use proptest::prelude::*;
use rand::Rng;

/// Doubles across many magnitudes, including subnormals and signed zero.
fn wild_f64(r: &mut impl Rng) -> f64 {
    match r.gen_range(0..5) {
        0 => r.gen_range(-1.0..1.0),
        1 => f64::from_bits(r.gen::<u64>() & !(0x7ff << 52)) * if r.gen() { 1.0 } else { -1.0 },
        2 => r.gen_range(-1e300..1e300),
        3 => -0.0,
        _ => (r.gen_range(-1000i32..1000) as f64) / 8.0,
    }
}

fn finite_wild(r: &mut impl Rng) -> f64 {
    loop {
        let v = wild_f64(r);
        if v.is_finite() {
            return v;
        }
    }
}

fn bytes(f: impl FnOnce(&mut Vec<u8>)) -> Vec<u8> {
    let mut out = Vec::new();
    f(&mut out);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expression_round_trip(seed in any::<u64>(), n in 0usize..50, g in 0usize..40) {
        let mut r = rng(seed);
        let values = (0..n * g).map(|_| finite_wild(&mut r)).collect();
        let d = ExpressionDataset::new("x", ids("g", g), ids("sample", n), values).unwrap();
        let first = bytes(|w| d.write_tsv(w).unwrap());
        let back = ExpressionDataset::read_tsv(&first[..], "x").unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(bytes(|w| back.write_tsv(w).unwrap()), first);
    }

    #[test]
    fn phenotype_round_trip(seed in any::<u64>(), n in 0usize..60, classes in any::<bool>()) {
        let mut r = rng(seed);
        let (labels, kind) = if classes {
            (Labels::Classes((0..n).map(|_| r.gen_range(0..1000)).collect()), LossKind::CrossEntropy)
        } else {
            (Labels::Regression((0..n).map(|_| finite_wild(&mut r)).collect()), LossKind::Mse)
        };
        let t = PhenotypeTable { sample_ids: ids("s", n), labels };
        let first = bytes(|w| t.write_tsv(w).unwrap());
        let back = PhenotypeTable::read_tsv(&first[..], kind).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(bytes(|w| back.write_tsv(w).unwrap()), first);
    }

    #[test]
    fn graph_round_trip(seed in any::<u64>(), n_t in 1usize..20, n_s in 1usize..20, density in 0.0f64..1.0) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n_t, n_s, density);
        let first = bytes(|w| g.write_tsv(w).unwrap());
        let targets = bytes(|w| write_gene_list(g.target_gene_ids(), w).unwrap());
        let sources = bytes(|w| write_gene_list(g.source_gene_ids(), w).unwrap());
        let back = BiadjacencyMatrix::read_tsv(
            &first[..],
            read_gene_list(&targets[..]).unwrap(),
            read_gene_list(&sources[..]).unwrap(),
        )
        .unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(bytes(|w| back.write_tsv(w).unwrap()), first);
    }

    #[test]
    fn weight_table_round_trip(seed in any::<u64>(), soft in any::<bool>()) {
        let mut r = rng(seed);
        let n_t = r.gen_range(1..12);
        let mask = random_graph(&mut r, n_t, 9, 0.3);
        let layer = if soft {
            let n = mask.n_targets() * mask.n_sources();
            MaskedLinearLayer::soft(mask, (0..n).map(|_| finite_wild(&mut r)).collect()).unwrap()
        } else {
            let n = mask.edge_count();
            MaskedLinearLayer::hard(mask, (0..n).map(|_| finite_wild(&mut r)).collect()).unwrap()
        };
        let table = OrthologyWeightTable::from_layer(&layer);
        let first = bytes(|w| table.write_tsv(w).unwrap());
        let back = OrthologyWeightTable::read_tsv(&first[..]).unwrap();
        prop_assert_eq!(&back, &table);
        prop_assert_eq!(bytes(|w| back.write_tsv(w).unwrap()), first);
    }

    #[test]
    fn model_round_trip(seed in any::<u64>(), soft in any::<bool>(), with_conversion in any::<bool>()) {
        let mut r = rng(seed);
        let (n_t, h) = (r.gen_range(1..8), r.gen_range(1..5));
        let mut param = |n: usize| (0..n).map(|_| finite_wild(&mut r)).collect::<Vec<_>>();
        let net = FeedforwardNetwork::new(vec![
            DenseLayer::new(h, n_t, param(h * n_t), param(h), Activation::Sigmoid).unwrap(),
            DenseLayer::new(1, h, param(h), param(1), Activation::Identity).unwrap(),
        ])
        .unwrap();
        let mut model = Model::new(net, LossKind::Mse);
        if with_conversion {
            let mut r2 = rng(seed ^ 1);
            let mask = random_graph(&mut r2, n_t, 6, 0.4);
            let layer = if soft {
                MaskedLinearLayer::soft(mask, (0..n_t * 6).map(|_| finite_wild(&mut r2)).collect())
            } else {
                let n = mask.edge_count();
                MaskedLinearLayer::hard(mask, (0..n).map(|_| finite_wild(&mut r2)).collect())
            };
            model.input_gene_ids = Some(ids("t", n_t));
            model.conversion = Some(layer.unwrap());
        }
        let first = model.to_json().unwrap();
        let back = Model::from_json(&first).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.to_json().unwrap(), first);
    }

    #[test]
    fn score_table_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_scores(&mut r, &ids("a", 6), &ids("b", 7), 0.5);
        let first = bytes(|w| write_score_table(&t, w).unwrap());
        let back = read_score_table(&first[..], "q", "s").unwrap();
        prop_assert_eq!(&back, &t);
    }
}
