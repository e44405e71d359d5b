#![no_main]

use libfuzzer_sys::fuzz_target;
use nudge_lab::analysis::ErrorSeries;

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = ErrorSeries::read_csv(data) {
        let mut out = Vec::new();
        series.write_csv(&mut out).expect("writing to memory");
        let again = ErrorSeries::read_csv(out.as_slice()).expect("written CSV parses");
        assert_eq!(again, series);
    }
});
