//! Trajectory and summary serialization.
//!
//! CSV rows carry the fixed header
//! `t,body,qw,qx,qy,qz,dx,dy,dz,vx,vy,vz,wx,wy,wz,e_kin,e_pot`; JSONL
//! emits one object per body sample with the same keys. Labels are
//! restricted to `[A-Za-z0-9_-]` at config time, so no quoting is needed.

use super::integrate::{SimOutput, TrajectoryRecord};
use std::fmt::Write as _;

pub const CSV_HEADER: &str = "t,body,qw,qx,qy,qz,dx,dy,dz,vx,vy,vz,wx,wy,wz,e_kin,e_pot";

fn push_fields(line: &mut String, rec: &TrajectoryRecord, body: usize) {
    let b = &rec.bodies[body];
    let vals = [
        rec.time,
        b.quat[0],
        b.quat[1],
        b.quat[2],
        b.quat[3],
        b.displacement.x,
        b.displacement.y,
        b.displacement.z,
        b.linear.x,
        b.linear.y,
        b.linear.z,
        b.angular.x,
        b.angular.y,
        b.angular.z,
        b.e_kin,
        b.e_pot,
    ];
    write!(line, "{}", vals[0]).unwrap();
    write!(line, ",{}", b.label).unwrap();
    for v in &vals[1..] {
        write!(line, ",{v}").unwrap();
    }
}

pub fn to_csv(out: &SimOutput) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for rec in &out.records {
        for body in 0..rec.bodies.len() {
            let mut line = String::new();
            push_fields(&mut line, rec, body);
            s.push_str(&line);
            s.push('\n');
        }
    }
    s
}

pub fn to_jsonl(out: &SimOutput) -> String {
    let mut s = String::new();
    for rec in &out.records {
        for b in &rec.bodies {
            let obj = serde_json::json!({
                "t": rec.time,
                "body": b.label,
                "qw": b.quat[0], "qx": b.quat[1], "qy": b.quat[2], "qz": b.quat[3],
                "dx": b.displacement.x, "dy": b.displacement.y, "dz": b.displacement.z,
                "vx": b.linear.x, "vy": b.linear.y, "vz": b.linear.z,
                "wx": b.angular.x, "wy": b.angular.y, "wz": b.angular.z,
                "e_kin": b.e_kin, "e_pot": b.e_pot,
            });
            s.push_str(&obj.to_string());
            s.push('\n');
        }
    }
    s
}

/// Machine-parseable `key=value` summary lines.
pub fn summary_lines(name: &str, out: &SimOutput) -> String {
    format!(
        "scenario={}\nrecords={}\nfinal_time={}\nenergy_drift={:e}\nmax_constraint_residual={:e}\n",
        name,
        out.summary.records,
        out.summary.final_time,
        out.summary.energy_drift,
        out.summary.max_constraint_residual
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::integrate::integrate;
    use crate::sim::scenario::ScenarioFile;

    fn tiny() -> SimOutput {
        let cfg = r#"{
            "schema": 1,
            "system": {
                "type": "mass_points",
                "points": [{"mass": 2.0, "position": [1.0, 0.0, 0.0],
                            "velocity": [0.0, 0.5, 0.0], "label": "p"}]
            },
            "forces": {"uniform_gravity": [0.0, 0.0, -1.0]},
            "step": 0.5,
            "duration": 1.0
        }"#;
        match ScenarioFile::parse(cfg).unwrap() {
            ScenarioFile::Single(s) => integrate(&s).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn csv_has_contract_header_and_rows() {
        let out = tiny();
        let csv = to_csv(&out);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,p,1,0,0,0,1,0,0,0,0.5,0"));
        assert_eq!(csv.lines().count(), 1 + out.records.len());
    }

    #[test]
    fn jsonl_rows_parse_with_matching_keys() {
        let out = tiny();
        let jsonl = to_jsonl(&out);
        for line in jsonl.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            for key in CSV_HEADER.split(',') {
                let k = if key == "t" { "t" } else { key };
                assert!(v.get(k).is_some(), "missing key {k}");
            }
        }
    }

    #[test]
    fn summary_is_key_value() {
        let out = tiny();
        for line in summary_lines("tiny", &out).lines() {
            assert!(line.contains('='), "not key=value: {line}");
            assert_eq!(line.split('=').count(), 2);
        }
    }
}
