//! CSV panels: one row per time period, one column per grid point.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{FunctionalPanel, Grid};
use crate::transform::{transforms, Transform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub path: PathBuf,
    /// Registered transform name.
    pub transform: String,
    /// Subtract the first row from every row.
    pub initialize: bool,
    pub has_header: bool,
    pub delimiter: u8,
}

impl IngestConfig {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), transform: "identity".into(), initialize: false, has_header: false, delimiter: b',' }
    }
}

/// Parsed table plus the header, if one was read.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub panel: FunctionalPanel,
    pub header: Option<Vec<String>>,
    pub transform: String,
}

pub fn ingest(cfg: &IngestConfig) -> Result<Ingested> {
    let file = std::fs::File::open(&cfg.path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", cfg.path.display()))))?;
    ingest_reader(file, cfg)
}

pub fn ingest_reader<R: Read>(reader: R, cfg: &IngestConfig) -> Result<Ingested> {
    let reg = transforms();
    let tf: &dyn Transform = reg.get(&cfg.transform).ok_or_else(|| {
        Error::Config(format!("unknown transform '{}' (known: {})", cfg.transform, reg.names().join(", ")))
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(cfg.has_header)
        .delimiter(cfg.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = if cfg.has_header { Some(rdr.headers()?.iter().map(str::to_owned).collect::<Vec<_>>()) } else { None };

    let mut data = Vec::new();
    let mut width: Option<usize> = header.as_ref().map(Vec::len);
    let mut n_rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Data {
                    row,
                    col: rec.len().min(w) + 1,
                    msg: format!("expected {w} columns, found {}", rec.len()),
                });
            }
            _ => {}
        }
        for (j, cell) in rec.iter().enumerate() {
            let col = j + 1;
            let x: f64 =
                cell.parse().map_err(|_| Error::Data { row, col, msg: format!("'{cell}' is not a number") })?;
            let y = tf.forward(x).ok_or_else(|| Error::Data {
                row,
                col,
                msg: format!("{x} outside the {} transform's domain ({})", tf.name(), tf.domain()),
            })?;
            data.push(y);
        }
        n_rows += 1;
    }
    let g = width.unwrap_or(0);
    if n_rows == 0 || g == 0 {
        return Err(Error::EmptyPanel("no data rows".into()));
    }
    if cfg.initialize {
        let first = data[..g].to_vec();
        for row in data.chunks_exact_mut(g) {
            for (x, f) in row.iter_mut().zip(&first) {
                *x -= f;
            }
        }
    }
    let grid = if g == 1 { Grid::scalar() } else { Grid::unit(g)? };
    let panel = FunctionalPanel::new(grid, data, n_rows, 1)?;
    Ok(Ingested { panel, header, transform: tf.name().to_owned() })
}

/// Writes every row of `panel` (pre-sample rows included).
pub fn write_panel_csv<W: Write>(panel: &FunctionalPanel, writer: W, header: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let g = panel.grid().len();
    if header {
        let pts = panel.grid().points();
        w.write_record(pts.iter().map(|u| format!("u={u}")))?;
    }
    for row in panel.data().chunks_exact(g) {
        // `{}` on f64 is the shortest representation that round-trips.
        w.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_panel_csv(panel: &FunctionalPanel, path: &Path, header: bool) -> Result<()> {
    write_panel_csv(panel, std::fs::File::create(path)?, header)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, cfg: &IngestConfig) -> Result<Ingested> {
        ingest_reader(text.as_bytes(), cfg)
    }

    fn cfg() -> IngestConfig {
        IngestConfig::new("-")
    }

    #[test]
    fn logit_of_halves_is_zero() {
        let c = IngestConfig { transform: "logit".into(), ..cfg() };
        let got = read("0.5,0.5\n0.5,0.5\n0.5,0.5\n", &c).unwrap();
        assert_eq!(got.panel.n_rows(), 3);
        assert!(got.panel.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn initialization_subtracts_first_row() {
        let c = IngestConfig { initialize: true, ..cfg() };
        let got = read("1,2\n4,6\n10,20\n", &c).unwrap();
        assert_eq!(got.panel.data(), &[0.0, 0.0, 3.0, 4.0, 9.0, 18.0]);
    }

    #[test]
    fn errors_carry_positions() {
        match read("1,2\n3\n", &cfg()) {
            Err(Error::Data { row: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match read("1,2\n3,x\n", &cfg()) {
            Err(Error::Data { row: 2, col: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        let c = IngestConfig { transform: "log".into(), ..cfg() };
        match read("1,2\n3,-1\n", &c) {
            Err(Error::Data { row: 2, col: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(read("", &cfg()), Err(Error::EmptyPanel(_))));
        let c = IngestConfig { transform: "boxcox".into(), ..cfg() };
        assert!(matches!(read("1,2\n", &c), Err(Error::Config(_))));
    }

    #[test]
    fn header_and_delimiter() {
        let c = IngestConfig { has_header: true, delimiter: b';', ..cfg() };
        let got = read("a;b;c\n1;2;3\n4;5;6\n", &c).unwrap();
        assert_eq!(got.header.unwrap(), vec!["a", "b", "c"]);
        assert_eq!(got.panel.grid().len(), 3);
    }

    #[test]
    fn single_column_is_scalar() {
        let got = read("1\n2\n3\n", &cfg()).unwrap();
        assert!(got.panel.grid().is_scalar());
    }

    #[test]
    fn write_then_read_roundtrips_bits() {
        let p =
            FunctionalPanel::new(Grid::unit(3).unwrap(), vec![0.1, -2.0 / 3.0, 1e-300, 5.0, 7.25, -0.0], 2, 1).unwrap();
        let mut buf = Vec::new();
        write_panel_csv(&p, &mut buf, true).unwrap();
        let c = IngestConfig { has_header: true, ..cfg() };
        let back = ingest_reader(buf.as_slice(), &c).unwrap();
        assert_eq!(back.panel.data(), p.data());
    }
}
