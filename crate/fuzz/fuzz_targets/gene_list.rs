#![no_main]

use libfuzzer_sys::fuzz_target;
use ortho_transfer::tsv::{read_gene_list, write_gene_list};

fuzz_target!(|data: &[u8]| {
    if let Ok(ids) = read_gene_list(data) {
        let mut out = Vec::new();
        write_gene_list(&ids, &mut out).unwrap();
        assert_eq!(read_gene_list(&out[..]).unwrap(), ids);
    }
});
