use super::{Density, Measure, ParticleMeasure, RadialMeasure};
use crate::error::{Error, Result};
use crate::real::Real;
use std::io::{Read, Write};

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub(crate) fn fmt<T: Real>(x: T) -> String {
    let v = x.to_f64_lossy();
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// One row per atom (`x1,..,xN,weight`) or shell (`radius,mass`).
pub fn write_measure_csv<T: Real, W: Write>(mu: &Measure<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match mu {
        Measure::Particle(p) => {
            let mut header: Vec<String> = (1..=p.dim()).map(|k| format!("x{k}")).collect();
            header.push("weight".into());
            w.write_record(&header)?;
            for (x, &m) in p.positions().iter().zip(p.weights()) {
                let mut row: Vec<String> = x.iter().map(|&v| fmt(v)).collect();
                row.push(fmt(m));
                w.write_record(&row)?;
            }
        }
        Measure::Radial(r) => {
            w.write_record(["radius", "mass"])?;
            for (&x, &m) in r.radii().iter().zip(r.masses()) {
                w.write_record([fmt(x), fmt(m)])?;
            }
        }
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// One row per cell with positive density (`x1,..,xN,density` at cell
/// centers, or `radius,density`).
pub fn write_density_csv<T: Real, W: Write>(d: &Density<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match d {
        Density::Grid(g) => {
            let mut header: Vec<String> = (1..=g.dim).map(|k| format!("x{k}")).collect();
            header.push("density".into());
            w.write_record(&header)?;
            for (i, &v) in g.cells.iter().enumerate() {
                if v > T::zero() {
                    let mut row: Vec<String> = g.cell_center(i).into_iter().map(fmt).collect();
                    row.push(fmt(v));
                    w.write_record(&row)?;
                }
            }
        }
        Density::Radial(r) => {
            w.write_record(["radius", "density"])?;
            for (i, &v) in r.density.iter().enumerate() {
                w.write_record([fmt(r.cell_center(i)), fmt(v)])?;
            }
        }
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

fn rows<T: Real, R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<T>>)> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Csv(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<T>>>()?;
        out.push(row);
    }
    Ok((header, out))
}

/// Inverse of [`write_measure_csv`] for particle measures.
pub fn read_particle_csv<T: Real, R: Read>(input: R) -> Result<ParticleMeasure<T>> {
    let (header, rows) = rows::<T, R>(input)?;
    if header.len() < 2 || header.last().map(String::as_str) != Some("weight") {
        return Err(Error::Csv("expected columns x1,..,xN,weight".into()));
    }
    let dim = header.len() - 1;
    let (pos, w) = rows
        .into_iter()
        .map(|mut r| {
            let wt = r.pop().unwrap_or_else(T::zero);
            (r, wt)
        })
        .unzip();
    ParticleMeasure::new(dim, pos, w)
}

/// Inverse of [`write_measure_csv`] for radial measures.
pub fn read_radial_csv<T: Real, R: Read>(input: R, dim: usize) -> Result<RadialMeasure<T>> {
    let (header, rows) = rows::<T, R>(input)?;
    if header != ["radius", "mass"] {
        return Err(Error::Csv("expected columns radius,mass".into()));
    }
    let (r, m) = rows.into_iter().map(|row| (row[0], row[1])).unzip();
    RadialMeasure::new(dim, r, m)
}
