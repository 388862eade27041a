#![no_main]

use libfuzzer_sys::fuzz_target;
use ortho_transfer::interpret::OrthologyWeightTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = OrthologyWeightTable::read_tsv(data) {
        let mut out = Vec::new();
        table.write_tsv(&mut out).unwrap();
        assert_eq!(OrthologyWeightTable::read_tsv(&out[..]).unwrap(), table);
    }
});
