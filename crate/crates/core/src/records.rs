//! Click records and their comma-separated file format.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::optics::{ArrivalClass, DetectionPort};
use crate::protocol::PrepSign;

pub const COLUMNS: [&str; 7] = ["cycle_id", "port", "arrival_class", "t_ns", "phase_rad", "prep_sign", "readout_click"];

/// One ZPL detector click together with the spin readout of its cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickRecord {
    pub cycle_id: u64,
    pub port: DetectionPort,
    pub arrival_class: ArrivalClass,
    pub t_ns: f64,
    /// interferometer phase readout at detection
    pub phase_rad: f64,
    pub prep_sign: PrepSign,
    /// PSB click during the spin readout of this cycle
    pub readout_click: bool,
}

pub fn write_records<W: Write>(out: W, records: &[ClickRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(COLUMNS).map_err(csv_io)?;
    for r in records {
        w.write_record([
            r.cycle_id.to_string(),
            r.port.to_string(),
            r.arrival_class.to_string(),
            format!("{:.3}", r.t_ns),
            format!("{:.6}", r.phase_rad),
            r.prep_sign.to_string(),
            u8::from(r.readout_click).to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Record { line: 0, reason: format!("{other:?}") },
    }
}

/// Parses a record file. Columns are located by header name, so extra columns
/// and a different column order are accepted; a missing column is an error.
pub fn read_records<R: Read>(input: R) -> Result<Vec<ClickRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| Error::Record { line: 1, reason: e.to_string() })?.clone();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Record { line: 1, reason: format!("missing column `{name}`") })?;
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Record { line, reason: e.to_string() })?;
        let field = |k: usize| -> Result<&str> {
            row.get(idx[k]).ok_or_else(|| Error::Record { line, reason: format!("missing field `{}`", COLUMNS[k]) })
        };
        let bad = |k: usize, why: String| Error::Record { line, reason: format!("column `{}`: {why}", COLUMNS[k]) };
        let readout_click = match field(6)? {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(bad(6, format!("`{other}` is not 0/1"))),
        };
        let t_ns: f64 = field(3)?.parse().map_err(|e| bad(3, format!("{e}")))?;
        let phase_rad: f64 = field(4)?.parse().map_err(|e| bad(4, format!("{e}")))?;
        if !t_ns.is_finite() || !phase_rad.is_finite() {
            return Err(Error::Record { line, reason: "non-finite time or phase".into() });
        }
        out.push(ClickRecord {
            cycle_id: field(0)?.parse().map_err(|e| bad(0, format!("{e}")))?,
            port: field(1)?.parse().map_err(|e| bad(1, e))?,
            arrival_class: field(2)?.parse().map_err(|e| bad(2, e))?,
            t_ns,
            phase_rad,
            prep_sign: field(5)?.parse().map_err(|e| bad(5, e))?,
            readout_click,
        });
    }
    Ok(out)
}

/// One ZPL click of a cycle paired with that cycle's spin readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Coincidence {
    pub zpl: ClickRecord,
    pub readout: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pairing {
    pub pairs: Vec<Coincidence>,
    /// cycles dropped because they held more than one ZPL click
    pub rejected_cycles: usize,
}

impl Pairing {
    /// Pairs whose spin readout clicked.
    pub fn coincidences(&self) -> usize {
        self.pairs.iter().filter(|p| p.readout).count()
    }
}

/// Groups records by cycle; cycles with exactly one ZPL click become a pair.
pub fn pair_coincidences(records: &[ClickRecord]) -> Result<Pairing> {
    if records.windows(2).any(|w| w[1].cycle_id < w[0].cycle_id) {
        return Err(Error::InvalidState("records must be sorted by cycle_id".into()));
    }
    let mut out = Pairing::default();
    for group in records.chunk_by(|a, b| a.cycle_id == b.cycle_id) {
        if group.len() == 1 {
            out.pairs.push(Coincidence { zpl: group[0].clone(), readout: group[0].readout_click });
        } else {
            out.rejected_cycles += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(cycle: u64, click: bool) -> ClickRecord {
        ClickRecord {
            cycle_id: cycle,
            port: DetectionPort::R,
            arrival_class: ArrivalClass::Erased,
            t_ns: cycle as f64 * 1000.0 + 12.5,
            phase_rad: 1.25,
            prep_sign: PrepSign::Plus,
            readout_click: click,
        }
    }

    #[test]
    fn round_trip() {
        let recs = vec![rec(0, true), rec(3, false)];
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cycle_id,port,arrival_class,t_ns,phase_rad,prep_sign,readout_click\n"));
        assert_eq!(text.lines().nth(1).unwrap(), "0,R,Erased,12.500,1.250000,plus,1");
        assert_eq!(read_records(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn missing_column_is_named() {
        let text = "cycle_id,port,arrival_class,t_ns,prep_sign,readout_click\n";
        let err = read_records(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("phase_rad"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "cycle_id,port,arrival_class,t_ns,phase_rad,prep_sign,readout_click\n\
                    0,D,Erased,1.0,0.5,minus,1\n\
                    1,Q,Erased,1.0,0.5,minus,1\n";
        match read_records(text.as_bytes()) {
            Err(Error::Record { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("port"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pairing_rules() {
        let recs = vec![rec(0, true), rec(1, false), rec(2, true), rec(2, true)];
        let p = pair_coincidences(&recs).unwrap();
        assert_eq!(p.pairs.len(), 2);
        assert_eq!(p.coincidences(), 1);
        assert_eq!(p.rejected_cycles, 1);
        assert!(pair_coincidences(&[rec(2, true), rec(1, true)]).is_err());
    }
}
