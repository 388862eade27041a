#![no_main]

use libfuzzer_sys::fuzz_target;
use ortho_transfer::{LossKind, PhenotypeTable};

fuzz_target!(|data: &[u8]| {
    for kind in [LossKind::Mse, LossKind::CrossEntropy] {
        if let Ok(table) = PhenotypeTable::read_tsv(data, kind) {
            let mut out = Vec::new();
            table.write_tsv(&mut out).unwrap();
            assert_eq!(PhenotypeTable::read_tsv(&out[..], kind).unwrap(), table);
        }
    }
});
