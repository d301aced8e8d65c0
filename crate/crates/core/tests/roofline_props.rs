use perf_charter_core::model::{KernelRecord, TransactionBytes};
use perf_charter_core::roofline::{
    attainable, classify, intensity, workload_point, Boundedness, MachineModel, Precision,
    RooflinePoint,
};
use proptest::prelude::*;

fn machine(peak: f64, bw: f64) -> MachineModel {
    MachineModel {
        name: "m".into(),
        peaks: [(Precision::Single, peak)].into_iter().collect(),
        mem_bandwidth_gbps: bw,
        extra_ceilings: Vec::new(),
    }
}

fn record() -> impl Strategy<Value = KernelRecord> {
    (1e-3f64..1e6, 0u64..1u64 << 40, 1u64..1u64 << 36).prop_map(|(time_ms, flops, transactions)| {
        KernelRecord {
            class_name: "k".into(),
            time_ms,
            calls: 1,
            unique_kernels: 1,
            flops,
            transactions,
        }
    })
}

proptest! {
    #[test]
    fn attainable_monotone_and_capped(
        peak in 1.0f64..1e5,
        bw in 1.0f64..1e4,
        mut a in 0.0f64..1e4,
        mut b in 0.0f64..1e4,
    ) {
        if a > b {
            core::mem::swap(&mut a, &mut b);
        }
        let m = machine(peak, bw);
        let (pa, pb) = (
            attainable(&m, Precision::Single, a).unwrap(),
            attainable(&m, Precision::Single, b).unwrap(),
        );
        prop_assert!(pa <= pb);
        prop_assert!(pb <= peak);
        prop_assert_eq!(attainable(&m, Precision::Single, f64::INFINITY).unwrap(), peak);
    }

    #[test]
    fn doubling_transaction_bytes_halves_intensity(
        flops in 0u64..1u64 << 50,
        transactions in 1u64..1u64 << 40,
        bytes in 1u32..1 << 16,
    ) {
        let one = intensity(flops, transactions, TransactionBytes::new(bytes).unwrap());
        let two = intensity(flops, transactions, TransactionBytes::new(2 * bytes).unwrap());
        prop_assert_eq!(two, one / 2.0);
    }

    #[test]
    fn aggregate_intensity_between_extremes(records in prop::collection::vec(record(), 1..20)) {
        let bytes = TransactionBytes::DEFAULT;
        let agg = workload_point("w", &records, bytes, Precision::Single).unwrap();
        let each: Vec<f64> = records
            .iter()
            .map(|r| intensity(r.flops, r.transactions, bytes))
            .collect();
        let lo = each.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = each.iter().copied().fold(0.0, f64::max);
        prop_assert!(agg.intensity >= lo * (1.0 - 1e-12));
        prop_assert!(agg.intensity <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn classification_follows_ridge(peak in 1.0f64..1e5, bw in 1.0f64..1e4, x in 0.0f64..1e3) {
        let m = machine(peak, bw);
        let point = RooflinePoint {
            name: "p".into(),
            intensity: x,
            throughput: 0.0,
            precision: Precision::Single,
        };
        let ridge = peak / bw;
        let class = classify(&m, Precision::Single, &point).unwrap();
        match class {
            Boundedness::MemoryBound => prop_assert!(x < ridge),
            Boundedness::ComputeBound => prop_assert!(x > ridge),
            Boundedness::AtRidge => prop_assert!((x - ridge).abs() <= 1e-9 * ridge),
        }
    }
}

#[test]
fn relu_row() {
    let relu = KernelRecord {
        class_name: "relu".into(),
        time_ms: 18482.42,
        calls: 62426,
        unique_kernels: 22,
        flops: 8_063_786_730_942,
        transactions: 198_032_803_079,
    };
    let p = workload_point(
        "relu",
        &[relu],
        TransactionBytes::DEFAULT,
        Precision::Single,
    )
    .unwrap();
    // 8063786730942 / (198032803079 × 32) and 8063.786730942 GFLOP / 18.48242 s
    assert!((p.intensity - 1.2725).abs() < 1e-3);
    assert!((p.throughput - 436.29).abs() < 0.01);
}
