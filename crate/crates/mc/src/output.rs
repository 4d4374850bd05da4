//! Table writers. The wide CSV has one line per table row; the long CSV has
//! one line per cell for plotting.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::runner::ResultTable;

/// Rows `(b, q rule, T)`, one column per `d1`/`c`/case holding the rate.
pub fn write_wide_csv<W: Write>(table: &ResultTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let labels = table.spec.column_labels();
    let mut header = vec!["b".to_owned(), "q_rule".to_owned(), "T".to_owned()];
    header.extend(labels.iter().map(|l| format!("{}={l}", table.spec.column_variable())));
    w.write_record(&header)?;
    for row in &table.spec.rows {
        let mut rec = vec![format!("{}", row.b), row.q_rule.label(), row.t.to_string()];
        for label in &labels {
            let cell = table.cell(row, label);
            rec.push(match cell {
                Some(c) if c.rate.is_finite() => format!("{:.3}", c.rate),
                _ => String::new(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One line per cell with every field; suitable for plotting tools.
pub fn write_long_csv<W: Write>(table: &ResultTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "table",
        "b",
        "q_rule",
        "T",
        "column",
        "x",
        "rate",
        "se",
        "n",
        "n_reps",
        "failures",
        "invalid",
        "wall_time_s",
    ])?;
    for c in &table.cells {
        w.write_record([
            table.spec.table_id.clone(),
            format!("{}", c.row.b),
            c.q_rule.clone(),
            c.row.t.to_string(),
            c.column.clone(),
            c.x.map(|x| format!("{x}")).unwrap_or_default(),
            format!("{}", c.rate),
            format!("{}", c.se),
            c.n.to_string(),
            c.n_reps.to_string(),
            c.failures.to_string(),
            c.invalid.to_string(),
            format!("{:.3}", c.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(table: &ResultTable, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, table)?;
    Ok(())
}

/// Writes `<id>.csv`, `<id>.json` and, if requested, `<id>-plot.csv`
/// into `dir`; returns the paths written.
pub fn save_all(table: &ResultTable, dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let id = &table.spec.table_id;
    let mut paths = vec![dir.join(format!("{id}.csv")), dir.join(format!("{id}.json"))];
    write_wide_csv(table, std::fs::File::create(&paths[0])?)?;
    write_json(table, std::fs::File::create(&paths[1])?)?;
    if plot {
        let p = dir.join(format!("{id}-plot.csv"));
        write_long_csv(table, std::fs::File::create(&p)?)?;
        paths.push(p);
    }
    Ok(paths)
}
