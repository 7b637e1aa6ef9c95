use emt_cli::io;
use emt_core::cycle::{CycleRecord, DriveCycle};
use emt_core::interp::{Axis, Curve, Table2};
use emt_core::patterns::classify_speed;
use emt_core::trajectory::{StageRecord, Trajectory};
use proptest::prelude::*;

fn increasing(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..100.0, len).prop_map(|steps| {
        let mut x = -50.0;
        steps
            .into_iter()
            .map(|s| {
                x += s;
                x
            })
            .collect()
    })
}

fn cycle() -> impl Strategy<Value = DriveCycle> {
    prop::collection::vec((0.0f64..120.0, 0.0f64..0.2, 0.0f64..200.0), 1..60).prop_map(|rows| {
        let records = rows
            .into_iter()
            .enumerate()
            .map(|(i, (v, f, pc))| CycleRecord { t: i as f64, v, f, pc })
            .collect();
        DriveCycle::new(records, true).unwrap()
    })
}

fn record(soc: f64, v: f64, x: [f64; 8], saturated: bool) -> StageRecord {
    StageRecord {
        t: 0.0,
        v,
        pattern: classify_speed(v).unwrap(),
        dt: 1.0,
        soc,
        soc_next: soc + x[0] * 1e-4,
        ne: 600.0 + x[1].abs() * 10.0,
        te: x[2].abs() * 20.0,
        ta: x[3] * 5.0,
        tb: x[4] * 5.0,
        ps: x[5],
        pa: -x[5] * 0.7,
        pb: x[6],
        pe: x[7].abs(),
        pd: x[7] - 3.0,
        pc: x[1].abs(),
        fuel: x[2].abs() / 7.0,
        j1_bar: x[0] / 100.0,
        j2_bar: -x[3].abs() / 100.0,
        j3_bar: -x[4].abs() / 100.0,
        cost: x[6] / 100.0,
        saturated,
    }
}

proptest! {
    #[test]
    fn cycle_round_trip(c in cycle()) {
        let text = io::write_cycle(&c);
        let back = io::parse_cycle(&text, true).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(io::write_cycle(&back), text);
    }

    #[test]
    fn map_round_trip(xs in increasing(2..8), ys in increasing(2..8), seed in 0.0f64..10.0) {
        let t = Table2::from_fn(Axis::new(xs).unwrap(), Axis::new(ys).unwrap(), |x, y| (x * 0.37 + y * seed).sin() + 2.0);
        let text = io::write_map(&t);
        let back = io::parse_map(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(io::write_map(&back), text);
    }

    #[test]
    fn curve_round_trip(xs in increasing(2..12), k in -5.0f64..5.0) {
        let ys: Vec<f64> = xs.iter().map(|x| k * x + 1.0 / 3.0).collect();
        let c = Curve::new(xs, ys).unwrap();
        let text = io::write_curve(&c, "x", "y");
        let back = io::parse_curve(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(io::write_curve(&back, "x", "y"), text);
    }

    #[test]
    fn trajectory_round_trip(
        rows in prop::collection::vec((0.3f64..0.8, 0.0f64..100.0, prop::array::uniform8(-100.0f64..100.0), any::<bool>()), 1..40)
    ) {
        let mut recs: Vec<StageRecord> = rows.into_iter().map(|(s, v, x, b)| record(s, v, x, b)).collect();
        for (i, r) in recs.iter_mut().enumerate() {
            r.t = i as f64;
        }
        let t = Trajectory::new("dp", recs[0].soc, recs);
        let text = io::write_trajectory(&t);
        let back = io::parse_trajectory(&text, "dp").unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(io::write_trajectory(&back), text);
    }
}

#[test]
fn trajectory_header_is_checked() {
    let e = io::parse_trajectory("t_s,v_kmh\n0,1\n", "x").unwrap_err();
    assert_eq!(e.line, 1);
}

#[test]
fn matrix_errors_point_at_the_entry() {
    let e = io::parse_matrix("1,2\n0.5\n").unwrap_err();
    assert_eq!(e.line, 2);
    let e = io::parse_matrix("1,2,x\n1/2,1,1\n1,1,1\n").unwrap_err();
    assert_eq!((e.line, e.column.as_deref()), (1, Some("3")));
    let e = io::parse_matrix("2,2\n1/2,1\n").unwrap_err();
    assert_eq!((e.line, e.column.as_deref()), (1, Some("1")));
}

#[test]
fn policy_file_rejects_garbage() {
    assert!(io::read_policy_bin(b"hello").is_err());
    let mut bytes = io::POLICY_MAGIC.to_vec();
    bytes.extend_from_slice(&2u32.to_le_bytes());
    bytes.extend_from_slice(&2u32.to_le_bytes());
    bytes.extend_from_slice(&[0; 12]);
    assert!(io::read_policy_bin(&bytes).is_err());
    bytes.extend_from_slice(&u32::MAX.to_le_bytes());
    let (s, n, e) = io::read_policy_bin(&bytes).unwrap();
    assert_eq!((s, n), (2, 2));
    assert_eq!(e, vec![Some(0), Some(0), Some(0), None]);
}

#[test]
fn map_rejects_repeated_speed() {
    let e = io::parse_map(",0,100\n1000,1,2\n1000,3,4\n").unwrap_err();
    assert!(e.message.contains("increasing"), "{e}");
    assert!(io::parse_map(",0,100\n1000,1,2\n2000,3,4\n").is_ok());
}

#[test]
fn cycle_rejects_negative_speed_on_its_line() {
    let e = io::parse_cycle("t_s,v_kmh,f,pc_kw\n0,1,0.05,0\n1,-1,0.05,0\n", true).unwrap_err();
    assert_eq!(e.line, 3);
}

#[test]
fn empty_trajectory_is_header_only() {
    let text = io::write_trajectory(&Trajectory::new("dp", 0.5, vec![]));
    assert_eq!(text, format!("{}\n", io::TRAJECTORY_HEADER.join(",")));
}
