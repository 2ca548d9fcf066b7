//! Frozen objective vector for one documented design of `configs/nano.toml`.
//!
//! Point: 5 conv layers, 32 filters, 16x16 array, 64 KiB ifmap, 16 KiB filter,
//! 64 KiB ofmap buffers, 16 B/cycle DRAM, weight-stationary, 100 MHz, 28 nm.
//! Any change here means the cost model changed; update deliberately.

use std::path::Path;

use uav_codesign::moo::evaluate;
use uav_codesign::uavspec::load_problem;

const X: [usize; 9] = [1, 1, 2, 2, 1, 0, 0, 1, 1];

const SUCCESS: f64 = 0.831_701_674_615_877;
// 623_576 cycles.
const LATENCY_S: f64 = 6.23576e-3;
const SOC_POWER_W: f64 = 0.221_515_416_873_003_47;

#[test]
fn documented_point_matches_frozen_objectives() {
    let p = load_problem(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/nano.toml")).unwrap();
    let d = evaluate(&X, &p).unwrap();
    assert_eq!((d.model.conv_layers, d.model.filters), (5, 32));
    assert_eq!((d.accel.array_rows, d.accel.array_cols), (16, 16));
    assert_eq!((d.accel.sram_ifmap, d.accel.sram_filter, d.accel.sram_ofmap), (65536, 16384, 65536));
    assert_eq!(d.accel.dram_bandwidth, 16.0);
    assert_eq!(d.accel.dataflow.short(), "ws");
    let o = d.objectives;
    assert!((o.success_rate - SUCCESS).abs() <= 1e-12);
    assert!((o.latency / LATENCY_S - 1.0).abs() <= 1e-12);
    assert!((o.soc_power / SOC_POWER_W - 1.0).abs() <= 1e-12);
}
