//! CSV writers for plot data. `.` decimal separator, LF line endings, floats
//! in shortest round-trip form.

use std::io::{self, Write};

use crate::sim::{MonteCarloMean, SignalTrace};
use crate::synthesis::RegionSample;
use crate::trajectory::{platoon_length, Trajectory};

/// `t,x_0,v_0,a_0,…,x_N,v_N,a_N,delta_1,…,delta_N,length`
pub fn write_trajectory_csv<W: Write>(mut out: W, traj: &Trajectory) -> io::Result<()> {
    let n = traj.followers();
    let mut header = vec!["t".to_string()];
    for i in 0..=n {
        header.extend([format!("x_{i}"), format!("v_{i}"), format!("a_{i}")]);
    }
    header.extend((1..=n).map(|i| format!("delta_{i}")));
    header.push("length".into());
    writeln!(out, "{}", header.join(","))?;

    let length = platoon_length(traj).unwrap_or_default();
    for (k, t) in traj.times().iter().enumerate() {
        write!(out, "{t}")?;
        for vehicle in traj.states() {
            let s = vehicle[k];
            write!(out, ",{},{},{}", s.x, s.v, s.a)?;
        }
        for d in traj.deltas() {
            write!(out, ",{}", d[k])?;
        }
        writeln!(out, ",{}", length[k])?;
    }
    Ok(())
}

/// `kp,kv,in_S1,in_S2,in_S` with membership as `1`/`0`. An empty region is
/// flagged by a leading `#empty` row.
pub fn write_region_csv<W: Write>(
    mut out: W,
    samples: &[RegionSample],
    empty: bool,
) -> io::Result<()> {
    writeln!(out, "kp,kv,in_S1,in_S2,in_S")?;
    if empty {
        writeln!(out, "#empty")?;
    }
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.kp,
            s.kv,
            s.in_s1 as u8,
            s.in_s2 as u8,
            s.in_s() as u8
        )?;
    }
    Ok(())
}

/// `omega,magnitude`
pub fn write_frequency_response_csv<W: Write>(mut out: W, points: &[(f64, f64)]) -> io::Result<()> {
    writeln!(out, "omega,magnitude")?;
    for (w, m) in points {
        writeln!(out, "{w},{m}")?;
    }
    Ok(())
}

/// `t,factor,actual,communicated,noise`
pub fn write_signal_trace_csv<W: Write>(mut out: W, trace: &SignalTrace) -> io::Result<()> {
    writeln!(out, "t,factor,actual,communicated,noise")?;
    for k in 0..trace.times.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            trace.times[k], trace.factor[k], trace.actual[k], trace.communicated[k], trace.noise[k]
        )?;
    }
    Ok(())
}

/// `t,mean_delta_1,…,mean_delta_N,half_width_1,…,half_width_N[,ref_delta_1,…]`
pub fn write_monte_carlo_csv<W: Write>(
    mut out: W,
    mc: &MonteCarloMean,
    reference: Option<&Trajectory>,
) -> io::Result<()> {
    let n = mc.delta_mean.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("mean_delta_{i}")));
    header.extend((1..=n).map(|i| format!("half_width_{i}")));
    if reference.is_some() {
        header.extend((1..=n).map(|i| format!("ref_delta_{i}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for (k, t) in mc.mean.times().iter().enumerate() {
        write!(out, "{t}")?;
        for d in &mc.delta_mean {
            write!(out, ",{}", d[k])?;
        }
        for i in 0..n {
            let h = mc.delta_half_width.as_ref().map_or(0.0, |hw| hw[i][k]);
            write!(out, ",{h}")?;
        }
        if let Some(r) = reference {
            for i in 1..=n {
                write!(out, ",{}", r.delta(i)[k])?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platoon::VehicleState;

    #[test]
    fn trajectory_header_and_row() {
        let traj = Trajectory::new(
            vec![0.0, 0.5],
            vec![
                vec![VehicleState::new(0.0, 1.0, 0.0); 2],
                vec![VehicleState::new(-6.0, 1.0, 0.0); 2],
            ],
            5.0,
            1.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x_0,v_0,a_0,x_1,v_1,a_1,delta_1,length"
        );
        assert_eq!(lines.next().unwrap(), "0,0,1,0,-6,1,0,0,6");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn region_marker() {
        let s = RegionSample {
            kp: 0.1,
            kv: 0.2,
            in_s1: true,
            in_s2: false,
        };
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &[s], true).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "kp,kv,in_S1,in_S2,in_S\n#empty\n0.1,0.2,1,0,0\n"
        );
    }
}
