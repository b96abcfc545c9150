//! CSV and JSON readers and writers.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which reads back to the identical `f64`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::covariates::{CovariateGrid, CovariateSample};
use crate::error::{invalid, Error, Result};
use crate::geometry::{table_builder, LinearNetwork, MarkValues, PointPattern, SpatialWindow, TimeInterval};
use crate::summaries::{ListaSet, SummarySurface};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn reader(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn parse_num(s: &str, row: usize, col: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| invalid(format!("row {row}, column `{col}`: `{s}` is not a number")))
}

/// Writes `x,y,t[,marks...]`.
pub fn write_pattern_csv<W: Write>(p: &PointPattern, w: W) -> Result<()> {
    let mut wr = writer(w);
    let mut header = vec!["x".to_string(), "y".to_string(), "t".to_string()];
    header.extend(p.marks().iter().map(|m| m.name.clone()));
    wr.write_record(&header)?;
    for (i, e) in p.events().iter().enumerate() {
        let mut rec = vec![fmt_f64(e.x), fmt_f64(e.y), fmt_f64(e.t)];
        for m in p.marks() {
            rec.push(match &m.values {
                MarkValues::Continuous(v) => fmt_f64(v[i]),
                MarkValues::Categorical { levels, codes } => levels[codes[i]].clone(),
            });
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a pattern CSV. The domain defaults to the enclosing ranges of the
/// data; with a network every event is snapped onto it.
pub fn read_pattern_csv<R: Read>(
    r: R,
    network: Option<Arc<LinearNetwork>>,
    window: Option<SpatialWindow>,
    interval: Option<TimeInterval>,
) -> Result<PointPattern> {
    let mut rd = reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.len() < 3 || header[0] != "x" || header[1] != "y" || header[2] != "t" {
        return Err(invalid("pattern CSV must start with columns x,y,t"));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        rows.push(rec?.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let mut b = table_builder(&rows, Some(&header[3..]))?;
    if let Some(net) = network {
        b = b.network(net);
    }
    if let Some(w) = window {
        b = b.window(w);
    }
    if let Some(iv) = interval {
        b = b.interval(iv);
    }
    b.build()
}

pub fn read_pattern_file(
    path: &Path,
    network: Option<Arc<LinearNetwork>>,
    window: Option<SpatialWindow>,
    interval: Option<TimeInterval>,
) -> Result<PointPattern> {
    read_pattern_csv(BufReader::new(File::open(path)?), network, window, interval)
}

pub fn read_network_file(path: &Path) -> Result<LinearNetwork> {
    LinearNetwork::from_json(&std::fs::read_to_string(path)?)
}

/// One number per row; a non-numeric first row is taken as a header.
pub fn read_values<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("");
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(invalid(format!("row {i}: `{field}` is not a number"))),
        }
    }
    Ok(out)
}

pub fn read_values_file(path: &Path) -> Result<Vec<f64>> {
    read_values(BufReader::new(File::open(path)?))
}

pub fn write_values<W: Write>(name: &str, values: &[f64], w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record([name])?;
    for v in values {
        wr.write_record([fmt_f64(*v)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Long format `r,h,estimate,theoretical`, r outer, h inner.
pub fn write_surface_csv<W: Write>(s: &SummarySurface, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["r", "h", "estimate", "theoretical"])?;
    write_surface_rows(&mut wr, s, None)?;
    wr.flush()?;
    Ok(())
}

fn write_surface_rows<W: Write>(wr: &mut csv::Writer<W>, s: &SummarySurface, id: Option<usize>) -> Result<()> {
    for (ir, &r) in s.r.iter().enumerate() {
        for (ih, &h) in s.h.iter().enumerate() {
            let mut rec = Vec::with_capacity(5);
            if let Some(id) = id {
                rec.push(id.to_string());
            }
            rec.extend([fmt_f64(r), fmt_f64(h), fmt_f64(s.get(ir, ih)), fmt_f64(s.theoretical_at(ir, ih))]);
            wr.write_record(&rec)?;
        }
    }
    Ok(())
}

/// `id,r,h,estimate,theoretical`.
pub fn write_lista_csv<W: Write>(set: &ListaSet, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["id", "r", "h", "estimate", "theoretical"])?;
    for (id, s) in set.ids.iter().zip(&set.surfaces) {
        write_surface_rows(&mut wr, s, Some(*id))?;
    }
    wr.flush()?;
    Ok(())
}

fn surface_from_rows(rows: &[[f64; 4]]) -> Result<SummarySurface> {
    let mut r: Vec<f64> = Vec::new();
    let mut h: Vec<f64> = Vec::new();
    for row in rows {
        if r.last() != Some(&row[0]) {
            r.push(row[0]);
        }
        if !h.contains(&row[1]) {
            h.push(row[1]);
        }
    }
    if r.len() * h.len() != rows.len() {
        return Err(invalid("surface rows do not form a complete r × h grid"));
    }
    for (k, row) in rows.iter().enumerate() {
        if row[0] != r[k / h.len()] || row[1] != h[k % h.len()] {
            return Err(invalid("surface rows are not in r-major order"));
        }
    }
    Ok(SummarySurface {
        r,
        h,
        estimate: rows.iter().map(|x| x[2]).collect(),
        theoretical: rows.iter().map(|x| x[3]).collect(),
        skipped_pairs: 0,
    })
}

pub fn read_surface_csv<R: Read>(r: R) -> Result<SummarySurface> {
    let mut rd = reader(r);
    let names = ["r", "h", "estimate", "theoretical"];
    if rd.headers()?.iter().collect::<Vec<_>>() != names {
        return Err(invalid("surface CSV must have columns r,h,estimate,theoretical"));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let mut row = [0.0; 4];
        for (k, name) in names.iter().enumerate() {
            row[k] = parse_num(rec.get(k).unwrap_or(""), i, name)?;
        }
        rows.push(row);
    }
    surface_from_rows(&rows)
}

pub fn read_lista_csv<R: Read>(r: R) -> Result<ListaSet> {
    let mut rd = reader(r);
    let names = ["id", "r", "h", "estimate", "theoretical"];
    if rd.headers()?.iter().collect::<Vec<_>>() != names {
        return Err(invalid("LISTA CSV must have columns id,r,h,estimate,theoretical"));
    }
    let mut ids: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<[f64; 4]>> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let id: usize = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|_| invalid(format!("row {i}: bad id")))?;
        let mut row = [0.0; 4];
        for k in 0..4 {
            row[k] = parse_num(rec.get(k + 1).unwrap_or(""), i, names[k + 1])?;
        }
        if ids.last() != Some(&id) {
            ids.push(id);
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(row);
    }
    let surfaces = groups.iter().map(|g| surface_from_rows(g)).collect::<Result<Vec<_>>>()?;
    Ok(ListaSet { ids, surfaces })
}

/// `x,y,t,value` samples.
pub fn read_covariate_samples<R: Read>(r: R) -> Result<Vec<CovariateSample>> {
    let mut rd = reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != ["x", "y", "t", "value"] {
        return Err(invalid("covariate CSV must have columns x,y,t,value"));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let f = |k: usize| parse_num(rec.get(k).unwrap_or(""), i, &header[k]);
        out.push(CovariateSample { x: f(0)?, y: f(1)?, t: f(2)?, value: f(3)? });
    }
    if out.is_empty() {
        return Err(Error::Empty("covariate CSV has no rows".into()));
    }
    Ok(out)
}

/// Grid nodes as `x,y,t,value`, x fastest.
pub fn write_covariate_grid<W: Write>(g: &CovariateGrid, w: W) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["x", "y", "t", "value"])?;
    for k in 0..g.dims[2] {
        for j in 0..g.dims[1] {
            for i in 0..g.dims[0] {
                let [x, y, t] = g.node(i, j, k);
                wr.write_record([fmt_f64(x), fmt_f64(y), fmt_f64(t), fmt_f64(g.value(i, j, k))])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// Reads a grid written by [`write_covariate_grid`]. Dimensions and spacing
/// are recovered from the distinct node coordinates.
pub fn read_covariate_grid<R: Read>(r: R, name: &str) -> Result<CovariateGrid> {
    let samples = read_covariate_samples(r)?;
    let mut dims = [0usize; 3];
    let mut origin = [0.0; 3];
    let mut step = [1.0; 3];
    for a in 0..3 {
        let mut c: Vec<f64> = samples.iter().map(|s| [s.x, s.y, s.t][a]).collect();
        c.sort_by(f64::total_cmp);
        c.dedup();
        dims[a] = c.len();
        origin[a] = c[0];
        if c.len() > 1 {
            step[a] = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
        }
    }
    if dims[0] * dims[1] * dims[2] != samples.len() {
        return Err(invalid("covariate grid CSV is not a complete lattice"));
    }
    let mut values = vec![f64::NAN; samples.len()];
    for s in &samples {
        let idx: Vec<usize> = [s.x, s.y, s.t]
            .iter()
            .enumerate()
            .map(|(a, v)| ((v - origin[a]) / step[a]).round() as usize)
            .collect();
        let flat = idx[0] + dims[0] * (idx[1] + dims[1] * idx[2]);
        if flat >= values.len() || !values[flat].is_nan() {
            return Err(invalid("covariate grid CSV has irregular node spacing"));
        }
        values[flat] = s.value;
    }
    CovariateGrid::new(name, dims, origin, step, values)
}

pub fn read_covariate_grid_file(path: &Path, name: &str) -> Result<CovariateGrid> {
    read_covariate_grid(BufReader::new(File::open(path)?), name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Event, PatternBuilder};

    #[test]
    fn pattern_round_trip_is_exact() {
        let events = vec![
            Event { x: 0.1, y: 1.0 / 3.0, t: 0.7 },
            Event { x: std::f64::consts::PI / 4.0, y: 0.2, t: 1e-17 + 0.1 },
            Event { x: 0.5, y: 0.9, t: 0.3 },
        ];
        let p = PatternBuilder::new(events)
            .mark("type", MarkValues::categorical(&["a", "b", "a"]))
            .mark("size", MarkValues::Continuous(vec![1.5, 2.0 / 3.0, -4.0]))
            .build()
            .unwrap();
        let mut buf = Vec::new();
        write_pattern_csv(&p, &mut buf).unwrap();
        let q = read_pattern_csv(buf.as_slice(), None, None, None).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn surface_round_trip() {
        let s = SummarySurface {
            r: vec![0.1, 0.2],
            h: vec![0.5, 1.0, 1.5],
            estimate: vec![1.0 / 3.0, 2.0, 3.0, 4.0, 5.0, 6.0 / 7.0],
            theoretical: vec![0.0; 6],
            skipped_pairs: 0,
        };
        let mut buf = Vec::new();
        write_surface_csv(&s, &mut buf).unwrap();
        assert_eq!(read_surface_csv(buf.as_slice()).unwrap(), s);
        let set = ListaSet { ids: vec![2, 5], surfaces: vec![s.clone(), s] };
        let mut buf = Vec::new();
        write_lista_csv(&set, &mut buf).unwrap();
        assert_eq!(read_lista_csv(buf.as_slice()).unwrap(), set);
    }

    #[test]
    fn values_with_and_without_header() {
        assert_eq!(read_values("lambda\n1.5\n2\n".as_bytes()).unwrap(), vec![1.5, 2.0]);
        assert_eq!(read_values("1.5\n2\n".as_bytes()).unwrap(), vec![1.5, 2.0]);
        assert!(read_values("1.5\nx\n".as_bytes()).is_err());
    }

    #[test]
    fn covariate_grid_round_trip() {
        let g = CovariateGrid::new("c", [3, 2, 2], [0.0, 0.0, 0.0], [0.5, 1.0, 1.0], (0..12).map(f64::from).collect())
            .unwrap();
        let mut buf = Vec::new();
        write_covariate_grid(&g, &mut buf).unwrap();
        assert_eq!(read_covariate_grid(buf.as_slice(), "c").unwrap(), g);
    }
}
