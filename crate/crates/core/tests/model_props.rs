use proptest::prelude::*;
use uav_codesign::perfmodel::{layer_cycles, model_latency, AccelConfig, Dataflow, GemmShape};
use uav_codesign::policy::{param_count, ModelTemplate, SurrogateCalibration};
use uav_codesign::powerweight::{accel_power, compute_mass, tech_scale, EnergyTable, MassModel};

fn accel() -> impl Strategy<Value = AccelConfig> {
    (
        1u32..64,
        1u32..64,
        prop::sample::select(vec![1024u64, 16384, 65536, 1 << 20]),
        prop::sample::select(vec![1024u64, 16384, 65536, 1 << 20]),
        prop::sample::select(vec![1024u64, 16384, 65536, 1 << 20]),
        prop_oneof![Just(Dataflow::OutputStationary), Just(Dataflow::WeightStationary)],
        prop::sample::select(vec![1.0, 4.0, 16.0, 64.0]),
    )
        .prop_map(|(r, c, i, f, o, df, bw)| AccelConfig {
            array_rows: r,
            array_cols: c,
            sram_ifmap: i,
            sram_filter: f,
            sram_ofmap: o,
            dataflow: df,
            dram_bandwidth: bw,
            frequency: 1e8,
            tech_node: 28.0,
            bytes_per_element: 1,
        })
}

fn gemm() -> impl Strategy<Value = GemmShape> {
    (1u64..2000, 1u64..300, 1u64..2000).prop_map(|(m, n, k)| GemmShape::new(m, n, k))
}

proptest! {
    #[test]
    fn cycles_respect_basic_bounds(g in gemm(), cfg in accel()) {
        let p = layer_cycles(&g, &cfg);
        let pe = (cfg.array_rows * cfg.array_cols) as u64;
        prop_assert_eq!(p.macs, g.m * g.n * g.k);
        prop_assert!(p.compute_cycles >= p.macs.div_ceil(pe));
        prop_assert_eq!(p.total_cycles, p.compute_cycles.max(p.memory_cycles));
        prop_assert!(p.dram_traffic >= g.m * g.k + g.k * g.n + g.m * g.n);
    }

    #[test]
    fn cycles_grow_with_the_problem(g in gemm(), cfg in accel(), dm in 0u64..500, dn in 0u64..100, dk in 0u64..500) {
        let big = GemmShape::new(g.m + dm, g.n + dn, g.k + dk);
        prop_assert!(layer_cycles(&big, &cfg).total_cycles >= layer_cycles(&g, &cfg).total_cycles);
    }

    #[test]
    fn more_sram_or_bandwidth_never_hurts(g in gemm(), cfg in accel()) {
        let base = layer_cycles(&g, &cfg);
        let mut roomy = cfg.clone();
        roomy.sram_ifmap *= 4;
        roomy.sram_filter *= 4;
        roomy.sram_ofmap *= 4;
        roomy.dram_bandwidth *= 2.0;
        let r = layer_cycles(&g, &roomy);
        prop_assert!(r.dram_traffic <= base.dram_traffic);
        prop_assert!(r.total_cycles <= base.total_cycles);
        prop_assert_eq!(r.compute_cycles, base.compute_cycles);
    }

    #[test]
    fn latency_scales_with_clock(layers in 1u32..=7, filters in 4u32..64, cfg in accel()) {
        let m = ModelTemplate::default().instantiate(layers, filters);
        let a = model_latency(&m, &cfg).unwrap();
        let mut fast = cfg.clone();
        fast.frequency *= 2.0;
        let b = model_latency(&m, &fast).unwrap();
        prop_assert_eq!(a.total_cycles, b.total_cycles);
        prop_assert!((a.latency / b.latency - 2.0).abs() < 1e-12);
    }

    #[test]
    fn params_grow_with_depth_and_width(layers in 1u32..7, filters in 4u32..64) {
        let t = ModelTemplate::default();
        let p = param_count(&t.instantiate(layers, filters)).unwrap();
        prop_assert!(param_count(&t.instantiate(layers, filters + 1)).unwrap() > p);
        prop_assert!(param_count(&t.instantiate(layers + 1, filters)).unwrap() > p);
    }

    #[test]
    fn surrogate_is_bounded_and_monotone(p in 1.0..1e8f64, q in 1.0..1e8f64, d in 0.0..1.0f64, e in 0.0..1.0f64) {
        let c = SurrogateCalibration::default();
        let s = c.success_for_params(p, d);
        prop_assert!(s >= c.floor && s <= c.s_max(d));
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(c.success_for_params(hi, d) >= c.success_for_params(lo, d));
        let (easy, hard) = if d <= e { (d, e) } else { (e, d) };
        prop_assert!(c.success_for_params(p, hard) <= c.success_for_params(p, easy));
    }

    #[test]
    fn smaller_nodes_use_less_energy(node in 5.0..28.0f64) {
        let t = EnergyTable::default();
        let s = tech_scale(&t, node).unwrap();
        prop_assert!(s.pe_pj_per_mac <= t.pe_pj_per_mac);
        prop_assert!(s.dram_pj_per_byte <= t.dram_pj_per_byte + 1e-12);
        prop_assert!(s.leakage_uw_per_pe <= t.leakage_uw_per_pe);
    }

    #[test]
    fn heavier_heatsink_for_hotter_chips(w in 0.0..20.0f64, dw in 0.0..5.0f64) {
        let m = MassModel::default();
        prop_assert!(compute_mass(w + dw, &m).unwrap().total >= compute_mass(w, &m).unwrap().total);
    }
}

#[test]
fn power_is_positive_for_real_models() {
    let m = ModelTemplate::default().instantiate(5, 32);
    let cfg = AccelConfig {
        array_rows: 16,
        array_cols: 16,
        sram_ifmap: 65536,
        sram_filter: 65536,
        sram_ofmap: 65536,
        dataflow: Dataflow::WeightStationary,
        dram_bandwidth: 16.0,
        frequency: 1e8,
        tech_node: 28.0,
        bytes_per_element: 1,
    };
    let prof = model_latency(&m, &cfg).unwrap();
    let w = accel_power(&prof, &cfg, &EnergyTable::default()).unwrap();
    assert!(w > 0.0 && w.is_finite());
}

#[test]
fn negative_tdp_is_rejected() {
    assert!(compute_mass(-1.0, &MassModel::default()).is_err());
}
