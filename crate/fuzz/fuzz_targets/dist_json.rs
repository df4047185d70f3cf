#![no_main]

use libfuzzer_sys::fuzz_target;
use prophet_core::simkit::DistributionModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = DistributionModel::parse(data) {
        let _ = d.quantile_upper(0.5);
        let _ = d.mean();
    }
});
