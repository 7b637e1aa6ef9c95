//! Text formats: drive cycles, component maps and curves, judgment
//! matrices, trajectories, summaries and policies.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! emit → parse → emit cycle reproduces the same bytes.

use std::fmt::Write as _;

use emt_core::ahp::JudgmentMatrix;
use emt_core::cycle::{CycleRecord, DriveCycle};
use emt_core::dp::Policy;
use emt_core::emt::{ActionGrid, EmtAction};
use emt_core::interp::{Axis, Curve, Table2};
use emt_core::patterns::DrivingPattern;
use emt_core::trajectory::{StageRecord, Trajectory};

use crate::error::FormatError;

pub const CYCLE_HEADER: [&str; 4] = ["t_s", "v_kmh", "f", "pc_kw"];

pub const TRAJECTORY_HEADER: [&str; 22] = [
    "t_s", "v_kmh", "pattern", "dt_s", "soc", "soc_next", "ne_rpm", "te_nm", "ta_nm", "tb_nm", "ps_kw", "pa_kw",
    "pb_kw", "pe_kw", "pd_kw", "pc_kw", "fuel_gps", "j1_bar", "j2_bar", "j3_bar", "cost", "saturated",
];

type Rows = Vec<(usize, Vec<String>)>;

/// Non-empty CSV records with their 1-based line numbers.
fn read_rows(text: &str) -> Result<Rows, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            FormatError::new(line, None, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        out.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn number(field: &str, line: usize, column: &str) -> Result<f64, FormatError> {
    let x: f64 = field
        .parse()
        .map_err(|_| FormatError::new(line, Some(column), format!("not a number: {field:?}")))?;
    if !x.is_finite() {
        return Err(FormatError::new(line, Some(column), format!("not finite: {field:?}")));
    }
    Ok(x)
}

fn check_header(row: &(usize, Vec<String>), expected: &[&str]) -> Result<(), FormatError> {
    for (i, name) in expected.iter().enumerate() {
        match row.1.get(i) {
            Some(h) if h == name => {}
            Some(h) => {
                return Err(FormatError::new(row.0, Some(name), format!("expected column {name:?}, found {h:?}")))
            }
            None => return Err(FormatError::new(row.0, Some(name), format!("missing column {name:?}"))),
        }
    }
    if row.1.len() > expected.len() {
        return Err(FormatError::new(row.0, None, format!("unexpected column {:?}", row.1[expected.len()])));
    }
    Ok(())
}

fn width(row: &(usize, Vec<String>), n: usize) -> Result<(), FormatError> {
    if row.1.len() != n {
        return Err(FormatError::new(row.0, None, format!("expected {n} fields, found {}", row.1.len())));
    }
    Ok(())
}

pub fn parse_cycle(text: &str, uniform: bool) -> Result<DriveCycle, FormatError> {
    let rows = read_rows(text)?;
    let header = rows.first().ok_or_else(|| FormatError::new(1, None, "empty cycle file"))?;
    check_header(header, &CYCLE_HEADER)?;
    let mut records = Vec::with_capacity(rows.len() - 1);
    let mut lines = Vec::with_capacity(rows.len() - 1);
    for row in &rows[1..] {
        width(row, 4)?;
        let f = |i: usize| number(&row.1[i], row.0, CYCLE_HEADER[i]);
        records.push(CycleRecord {
            t: f(0)?,
            v: f(1)?,
            f: f(2)?,
            pc: f(3)?,
        });
        lines.push(row.0);
    }
    DriveCycle::new(records, uniform).map_err(|e| {
        let line = lines.get(e.index).copied().unwrap_or(0);
        FormatError::new(line, None, e.reason)
    })
}

pub fn write_cycle(cycle: &DriveCycle) -> String {
    let mut s = CYCLE_HEADER.join(",");
    s.push('\n');
    for r in cycle.records() {
        let _ = writeln!(s, "{},{},{},{}", r.t, r.v, r.f, r.pc);
    }
    s
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Map table: blank corner cell, speeds across the first row, torques down
/// the first column.
pub fn parse_map(text: &str) -> Result<Table2, FormatError> {
    let rows = read_rows(text)?;
    let head = rows.first().ok_or_else(|| FormatError::new(1, None, "empty map file"))?;
    if !head.1[0].is_empty() {
        return Err(FormatError::new(head.0, Some("1"), "corner cell must be blank"));
    }
    let speeds = head.1[1..]
        .iter()
        .enumerate()
        .map(|(j, f)| number(f, head.0, &(j + 2).to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let n = speeds.len();
    let x = Axis::new(speeds).map_err(|e| FormatError::new(head.0, None, format!("speed grid: {e}")))?;
    let mut torques = Vec::new();
    let mut body = Vec::new();
    for row in &rows[1..] {
        width(row, n + 1)?;
        let vals = row
            .1
            .iter()
            .enumerate()
            .map(|(j, f)| number(f, row.0, &(j + 1).to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        torques.push(vals[0]);
        body.push(vals[1..].to_vec());
    }
    let y = Axis::new(torques).map_err(|e| FormatError::new(head.0 + 1, Some("1"), format!("torque grid: {e}")))?;
    Table2::from_rows(x, y, body).map_err(|e| FormatError::new(head.0, None, e.to_string()))
}

pub fn write_map(t: &Table2) -> String {
    let mut s = format!(",{}\n", join(t.x().points()));
    for (j, &ty) in t.y().points().iter().enumerate() {
        let row: Vec<f64> = (0..t.x().len()).map(|i| t.node(i, j)).collect();
        let _ = writeln!(s, "{ty},{}", join(&row));
    }
    s
}

/// Two-column curve; a non-numeric first row is taken as a header.
pub fn parse_curve(text: &str) -> Result<Curve, FormatError> {
    let rows = read_rows(text)?;
    let skip = usize::from(rows.first().is_some_and(|r| r.1[0].parse::<f64>().is_err()));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &rows[skip..] {
        width(row, 2)?;
        xs.push(number(&row.1[0], row.0, "1")?);
        ys.push(number(&row.1[1], row.0, "2")?);
    }
    Curve::new(xs, ys).map_err(|e| FormatError::new(rows.first().map_or(1, |r| r.0), None, e.to_string()))
}

pub fn write_curve(c: &Curve, x_name: &str, y_name: &str) -> String {
    let mut s = format!("{x_name},{y_name}\n");
    for (x, y) in c.xs().iter().zip(c.ys()) {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

fn ratio(field: &str, line: usize, column: &str) -> Result<f64, FormatError> {
    match field.split_once('/') {
        Some((a, b)) => Ok(number(a.trim(), line, column)? / number(b.trim(), line, column)?),
        None => number(field, line, column),
    }
}

/// Square judgment matrix; entries may be written as fractions (`1/3`).
pub fn parse_matrix(text: &str) -> Result<JudgmentMatrix, FormatError> {
    let rows = read_rows(text)?;
    let n = rows.len();
    if n == 0 {
        return Err(FormatError::new(1, None, "empty matrix file"));
    }
    let mut m = Vec::with_capacity(n);
    for row in &rows {
        width(row, n)?;
        m.push(
            row.1
                .iter()
                .enumerate()
                .map(|(j, f)| ratio(f, row.0, &(j + 1).to_string()))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    JudgmentMatrix::from_rows(&m).map_err(|e| match e {
        emt_core::Error::Judgment { row, col, reason } => {
            FormatError::new(rows[row].0, Some(&(col + 1).to_string()), reason)
        }
        other => FormatError::new(rows[0].0, None, other.to_string()),
    })
}

pub fn write_trajectory(traj: &Trajectory) -> String {
    let mut s = TRAJECTORY_HEADER.join(",");
    s.push('\n');
    for r in &traj.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.v,
            r.pattern.name(),
            r.dt,
            r.soc,
            r.soc_next,
            r.ne,
            r.te,
            r.ta,
            r.tb,
            r.ps,
            r.pa,
            r.pb,
            r.pe,
            r.pd,
            r.pc,
            r.fuel,
            r.j1_bar,
            r.j2_bar,
            r.j3_bar,
            r.cost,
            u8::from(r.saturated)
        );
    }
    s
}

/// Inverse of [`write_trajectory`]. The initial SOC is taken from the first
/// record.
pub fn parse_trajectory(text: &str, strategy: &str) -> Result<Trajectory, FormatError> {
    let rows = read_rows(text)?;
    let header = rows.first().ok_or_else(|| FormatError::new(1, None, "empty trajectory file"))?;
    check_header(header, &TRAJECTORY_HEADER)?;
    let mut records = Vec::with_capacity(rows.len() - 1);
    for row in &rows[1..] {
        width(row, TRAJECTORY_HEADER.len())?;
        let f = |i: usize| number(&row.1[i], row.0, TRAJECTORY_HEADER[i]);
        let pattern = DrivingPattern::parse(&row.1[2])
            .ok_or_else(|| FormatError::new(row.0, Some("pattern"), format!("unknown pattern {:?}", row.1[2])))?;
        let saturated = match row.1[21].as_str() {
            "0" => false,
            "1" => true,
            other => return Err(FormatError::new(row.0, Some("saturated"), format!("expected 0 or 1, found {other:?}"))),
        };
        records.push(StageRecord {
            t: f(0)?,
            v: f(1)?,
            pattern,
            dt: f(3)?,
            soc: f(4)?,
            soc_next: f(5)?,
            ne: f(6)?,
            te: f(7)?,
            ta: f(8)?,
            tb: f(9)?,
            ps: f(10)?,
            pa: f(11)?,
            pb: f(12)?,
            pe: f(13)?,
            pd: f(14)?,
            pc: f(15)?,
            fuel: f(16)?,
            j1_bar: f(17)?,
            j2_bar: f(18)?,
            j3_bar: f(19)?,
            cost: f(20)?,
            saturated,
        });
    }
    let soc0 = records.first().map_or(f64::NAN, |r| r.soc);
    Ok(Trajectory::new(strategy, soc0, records))
}

/// `speed_rpm,torque_nm,count` rows of an operating-point histogram.
pub fn write_histogram(h: &emt_core::trajectory::Histogram) -> String {
    let mut s = String::from("speed_rpm,torque_nm,count\n");
    for (sp, tq, c) in h.rows() {
        let _ = writeln!(s, "{sp},{tq},{c}");
    }
    s
}

pub fn write_policy_csv(policy: &Policy<EmtAction>, grid: &ActionGrid, soc_nodes: &[f64]) -> String {
    let mut s = String::from("stage,node,soc,action,ne_rpm,ta_nm,ps_kw\n");
    for k in 0..policy.stages() {
        for (node, soc) in soc_nodes.iter().enumerate() {
            match policy.action(k, node) {
                Some(a) => {
                    let (ne, ta, ps) = grid.values(a);
                    let _ = writeln!(s, "{k},{node},{soc},{},{ne},{ta},{ps}", grid.flat_index(a));
                }
                None => {
                    let _ = writeln!(s, "{k},{node},{soc},,,,");
                }
            }
        }
    }
    s
}

pub const POLICY_MAGIC: &[u8; 8] = b"EMTPOL1\0";

/// Binary policy: magic, stage count and node count (u32 LE), then one u32
/// LE flat action index per (stage, node), `u32::MAX` where infeasible.
pub fn write_policy_bin(policy: &Policy<EmtAction>, grid: &ActionGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * policy.stages() * policy.nodes());
    out.extend_from_slice(POLICY_MAGIC);
    out.extend_from_slice(&(policy.stages() as u32).to_le_bytes());
    out.extend_from_slice(&(policy.nodes() as u32).to_le_bytes());
    for k in 0..policy.stages() {
        for node in 0..policy.nodes() {
            let v = policy.action(k, node).map_or(u32::MAX, |a| grid.flat_index(a) as u32);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Flat action indices from [`write_policy_bin`] as `(stages, nodes, entries)`.
pub fn read_policy_bin(bytes: &[u8]) -> Result<(usize, usize, Vec<Option<u32>>), FormatError> {
    if bytes.len() < 16 || &bytes[..8] != POLICY_MAGIC {
        return Err(FormatError::new(1, None, "not a policy file"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let (stages, nodes) = (word(8) as usize, word(12) as usize);
    if bytes.len() != 16 + 4 * stages * nodes {
        return Err(FormatError::new(1, None, "policy file length does not match its header"));
    }
    let entries = (0..stages * nodes)
        .map(|i| {
            let v = word(16 + 4 * i);
            (v != u32::MAX).then_some(v)
        })
        .collect();
    Ok((stages, nodes, entries))
}
