#![no_main]

use libfuzzer_sys::fuzz_target;
use ortho_transfer::ExpressionDataset;

fuzz_target!(|data: &[u8]| {
    if let Ok(expr) = ExpressionDataset::read_tsv(data, "x") {
        let mut out = Vec::new();
        expr.write_tsv(&mut out).unwrap();
        assert_eq!(ExpressionDataset::read_tsv(&out[..], "x").unwrap(), expr);
    }
});
