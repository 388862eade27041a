#![no_main]

use libfuzzer_sys::fuzz_target;
use ortho_transfer::Model;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = Model::from_json(text) {
        let json = model.to_json().unwrap();
        let again = Model::from_json(&json).unwrap();
        assert_eq!(again, model);
        assert_eq!(again.to_json().unwrap(), json);
    }
});
