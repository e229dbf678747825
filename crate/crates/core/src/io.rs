//! CSV input and output.
//!
//! Input tables need a header. A column named `y` holds responses and a
//! column named `component` is ignored; every other column is a covariate.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::datagen::SimData;
use crate::error::{Result, SkelError};
use crate::types::{PointCloud, RowMatrix, SkeletonPosition};

pub fn read_points_csv(path: &Path) -> Result<PointCloud> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let y_col = header.iter().position(|h| h.trim() == "y");
    let x_cols: Vec<usize> = (0..header.len())
        .filter(|&c| Some(c) != y_col && header[c].trim() != "component")
        .collect();
    if x_cols.is_empty() {
        return Err(SkelError::Shape(format!("{}: no covariate columns", path.display())));
    }
    let mut data = Vec::new();
    let mut ys = Vec::new();
    let mut n = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| -> Result<f64> {
            rec.get(c).unwrap_or("").trim().parse::<f64>().map_err(|_| {
                SkelError::Io(format!("{}: row {}: bad number in column '{}'", path.display(), line + 1, &header[c]))
            })
        };
        for &c in &x_cols {
            data.push(field(c)?);
        }
        if let Some(c) = y_col {
            ys.push(field(c)?);
        }
        n += 1;
    }
    PointCloud::new(RowMatrix::new(n, x_cols.len(), data)?, y_col.map(|_| ys))
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

pub fn write_sim_csv(path: &Path, sim: &SimData) -> Result<()> {
    let mut w = create(path)?;
    let d = sim.cloud.dim();
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    header.push("component".into());
    w.write_record(&header)?;
    for i in 0..sim.cloud.n() {
        let mut row: Vec<String> = sim.cloud.point(i).iter().map(f64::to_string).collect();
        row.push(sim.responses()[i].to_string());
        row.push(sim.component[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `row_id,kind,knot_or_edge_index,t`; `t` is empty for knots.
pub fn write_positions_csv(path: &Path, positions: &[SkeletonPosition]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["row_id", "kind", "knot_or_edge_index", "t"])?;
    for (r, p) in positions.iter().enumerate() {
        let row = match p {
            SkeletonPosition::Knot { index } => [r.to_string(), "knot".into(), index.to_string(), String::new()],
            SkeletonPosition::EdgePoint { edge, t } => {
                [r.to_string(), "edge_point".into(), edge.to_string(), t.to_string()]
            }
        };
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_predictions_csv(path: &Path, preds: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["row_id", "prediction"])?;
    for (r, v) in preds.iter().enumerate() {
        w.write_record([r.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
