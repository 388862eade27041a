#![no_main]

use libfuzzer_sys::fuzz_target;
use ortho_transfer::graph::{read_score_table, write_score_table};

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = read_score_table(data, "q", "s") {
        let mut out = Vec::new();
        write_score_table(&table, &mut out).unwrap();
        assert_eq!(read_score_table(&out[..], "q", "s").unwrap(), table);
    }
});
