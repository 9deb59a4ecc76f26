//! CSV output. Floats are written with 17 significant digits so files
//! round-trip exactly.

use std::io::{self, Write};

use crate::compare::{DivergenceCurve, RateReport};
use crate::spectral::Field;
use crate::stepper::{EnergyTrace, Trajectory};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows<W: Write>(
    mut w: W,
    header: &str,
    rows: impl Iterator<Item = Vec<f64>>,
) -> io::Result<()> {
    writeln!(w, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(num).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

/// `x,u`
pub fn write_field<W: Write>(w: W, f: &Field) -> io::Result<()> {
    let g = *f.grid();
    write_rows(
        w,
        "x,u",
        f.values()
            .iter()
            .enumerate()
            .map(move |(j, &u)| vec![g.x(j), u]),
    )
}

/// `t,mass,h_s_norm,max_abs,alias_frac,boundary_mag`
pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> io::Result<()> {
    write_rows(
        w,
        "t,mass,h_s_norm,max_abs,alias_frac,boundary_mag",
        traj.times.iter().zip(&traj.diagnostics).map(|(&t, d)| {
            vec![
                t,
                d.mass,
                d.hs_norm,
                d.max_abs,
                d.alias_frac,
                d.boundary_mag,
            ]
        }),
    )
}

/// `t,d`
pub fn write_divergence<W: Write>(w: W, curve: &DivergenceCurve) -> io::Result<()> {
    write_rows(
        w,
        "t,d",
        curve.times.iter().zip(&curve.d).map(|(&t, &d)| vec![t, d]),
    )
}

/// `delta,d_T,predicted_rate,slope,residual,linearity`
pub fn write_rate<W: Write>(w: W, report: &RateReport) -> io::Result<()> {
    let rate = report.predicted_rate();
    write_rows(
        w,
        "delta,d_T,predicted_rate,slope,residual,linearity",
        report
            .deltas
            .iter()
            .zip(&report.d_t)
            .zip(&report.linearity)
            .map(|((&delta, &d), &lin)| {
                vec![delta, d, rate, report.fit.slope, report.fit.residual, lin]
            }),
    )
}

/// `t,e_s,h_s_norm,c1,c2`
pub fn write_energy<W: Write>(w: W, trace: &EnergyTrace) -> io::Result<()> {
    write_rows(
        w,
        "t,e_s,h_s_norm,c1,c2",
        (0..trace.times.len()).map(|i| {
            vec![
                trace.times[i],
                trace.energy[i],
                trace.norm[i],
                trace.c1_at[i],
                trace.c2_at[i],
            ]
        }),
    )
}

/// Parses a numeric CSV produced by the writers above.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or("empty csv")?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("line {}: {e}", i + 2))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("line {}: expected {} columns", i + 2, header.len()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
