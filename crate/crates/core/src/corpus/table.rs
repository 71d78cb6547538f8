use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::causal::SpectraGrid;
use crate::error::{Error, Result};
use crate::observables::ObservableRecord;
use crate::signal::Spectrum;

pub const OBSERVABLE_COLUMNS: [&str; 9] = [
    "unit_id",
    "bit",
    "dose",
    "n_clicks",
    "mean_ici",
    "std_ici",
    "spectral_mean_hz",
    "spectral_mean_std_hz",
    "coda_spectral_mean_hz",
];

pub const SPECTRA_COLUMNS: [&str; 6] = ["bit", "dose", "unit_id", "bin_index", "power", "freq_hz"];

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Sort order of every emitted table.
pub fn sort_records(records: &mut [ObservableRecord]) {
    records.sort_by(|a, b| {
        a.bit
            .cmp(&b.bit)
            .then(a.dose.total_cmp(&b.dose))
            .then(a.unit_id.cmp(&b.unit_id))
    });
}

/// Writes the observables table in the given record order.
pub fn write_observables<W: Write>(records: &[ObservableRecord], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(OBSERVABLE_COLUMNS)?;
    for r in records {
        out.write_record([
            r.unit_id.to_string(),
            r.bit.to_string(),
            r.dose.to_string(),
            r.n_clicks.to_string(),
            opt(r.mean_ici),
            opt(r.std_ici),
            opt(r.spectral_mean_hz),
            opt(r.spectral_mean_std_hz),
            opt(r.coda_spectral_mean_hz),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn column_indices(headers: &csv::StringRecord, wanted: &[&str]) -> Result<Vec<usize>> {
    let missing: Vec<&str> = wanted
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h.trim() == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::config(format!("missing columns: {}", missing.join(", "))));
    }
    Ok(wanted
        .iter()
        .map(|c| headers.iter().position(|h| h.trim() == *c).unwrap())
        .collect())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| Error::data(format!("line {line}: invalid {name} {raw:?}")))
}

fn opt_field(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<Option<f64>> {
    let raw = rec.get(idx).unwrap_or("").trim();
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = field(rec, idx, name, line)?;
    if !v.is_finite() {
        return Err(Error::data(format!("line {line}: non-finite {name}")));
    }
    Ok(Some(v))
}

/// Reads an observables table. Missing columns are a config error naming
/// them; extra columns are ignored.
pub fn read_observables<R: Read>(r: R) -> Result<Vec<ObservableRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let headers = rdr.headers()?.clone();
    let idx = column_indices(&headers, &OBSERVABLE_COLUMNS)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let dose: f64 = field(&rec, idx[2], "dose", line)?;
        if !dose.is_finite() {
            return Err(Error::data(format!("line {line}: non-finite dose")));
        }
        out.push(ObservableRecord {
            unit_id: field(&rec, idx[0], "unit_id", line)?,
            bit: field(&rec, idx[1], "bit", line)?,
            dose,
            n_clicks: field(&rec, idx[3], "n_clicks", line)?,
            mean_ici: opt_field(&rec, idx[4], "mean_ici", line)?,
            std_ici: opt_field(&rec, idx[5], "std_ici", line)?,
            spectral_mean_hz: opt_field(&rec, idx[6], "spectral_mean_hz", line)?,
            spectral_mean_std_hz: opt_field(&rec, idx[7], "spectral_mean_std_hz", line)?,
            coda_spectral_mean_hz: opt_field(&rec, idx[8], "coda_spectral_mean_hz", line)?,
            coda_spectrum: None,
        });
    }
    Ok(out)
}

/// Writes the coda spectra of `records` in long form, one row per bin.
pub fn write_spectra<W: Write>(records: &[ObservableRecord], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(SPECTRA_COLUMNS)?;
    for r in records {
        let Some(s) = &r.coda_spectrum else { continue };
        let (bit, dose, unit) = (r.bit.to_string(), r.dose.to_string(), r.unit_id.to_string());
        for (j, (p, f)) in s.power.iter().zip(&s.bin_freqs).enumerate() {
            out.write_record([
                bit.as_str(),
                dose.as_str(),
                unit.as_str(),
                &j.to_string(),
                &p.to_string(),
                &f.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One stored coda spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub bit: u32,
    pub dose: f64,
    pub unit_id: u32,
    pub spectrum: Spectrum,
}

/// Reads a long-form spectra table. Rows of one spectrum must be
/// contiguous with `bin_index` counting up from 0.
pub fn read_spectra<R: Read>(r: R) -> Result<Vec<SpectrumEntry>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let headers = rdr.headers()?.clone();
    let idx = column_indices(&headers, &SPECTRA_COLUMNS)?;
    let mut out: Vec<SpectrumEntry> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bit: u32 = field(&rec, idx[0], "bit", line)?;
        let dose: f64 = field(&rec, idx[1], "dose", line)?;
        let unit_id: u32 = field(&rec, idx[2], "unit_id", line)?;
        let bin: usize = field(&rec, idx[3], "bin_index", line)?;
        let power: f64 = field(&rec, idx[4], "power", line)?;
        let freq: f64 = field(&rec, idx[5], "freq_hz", line)?;
        if bin == 0 {
            out.push(SpectrumEntry {
                bit,
                dose,
                unit_id,
                spectrum: Spectrum {
                    bin_freqs: Vec::new(),
                    power: Vec::new(),
                },
            });
        }
        let cur = out
            .last_mut()
            .filter(|e| e.bit == bit && e.dose == dose && e.unit_id == unit_id && e.spectrum.len() == bin)
            .ok_or_else(|| Error::data(format!("line {line}: spectrum rows out of order")))?;
        cur.spectrum.bin_freqs.push(freq);
        cur.spectrum.power.push(power);
    }
    Ok(out)
}

/// Groups spectra into one grid per bit, doses ascending, units ascending.
pub fn spectra_grids(entries: impl IntoIterator<Item = SpectrumEntry>) -> Vec<SpectraGrid> {
    let mut by_bit: BTreeMap<u32, Vec<SpectrumEntry>> = BTreeMap::new();
    for e in entries {
        by_bit.entry(e.bit).or_default().push(e);
    }
    by_bit
        .into_iter()
        .map(|(bit, mut list)| {
            list.sort_by(|a, b| a.dose.total_cmp(&b.dose).then(a.unit_id.cmp(&b.unit_id)));
            let mut doses: Vec<f64> = Vec::new();
            let mut spectra: Vec<Vec<(u32, Spectrum)>> = Vec::new();
            for e in list {
                if doses.last().is_none_or(|d| (e.dose - d).abs() > 1e-9) {
                    doses.push(e.dose);
                    spectra.push(Vec::new());
                }
                spectra.last_mut().unwrap().push((e.unit_id, e.spectrum));
            }
            SpectraGrid { bit, doses, spectra }
        })
        .collect()
}

/// Spectra carried by in-memory records.
pub fn record_spectra(records: &[ObservableRecord]) -> Vec<SpectrumEntry> {
    records
        .iter()
        .filter_map(|r| {
            r.coda_spectrum.as_ref().map(|s| SpectrumEntry {
                bit: r.bit,
                dose: r.dose,
                unit_id: r.unit_id,
                spectrum: s.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(unit: u32, bit: u32, dose: f64) -> ObservableRecord {
        ObservableRecord {
            unit_id: unit,
            bit,
            dose,
            n_clicks: 3,
            mean_ici: Some(0.2),
            std_ici: Some(0.01),
            spectral_mean_hz: Some(6012.25),
            spectral_mean_std_hz: None,
            coda_spectral_mean_hz: Some(1.0 / 3.0),
            coda_spectrum: Some(Spectrum {
                bin_freqs: vec![31.25, 93.75],
                power: vec![0.25, 0.75],
            }),
        }
    }

    #[test]
    fn observables_round_trip() {
        let mut recs = vec![rec(2, 1, 0.5), rec(1, 0, 12.5), rec(0, 1, -1.0)];
        sort_records(&mut recs);
        assert_eq!((recs[0].bit, recs[1].dose), (0, -1.0));
        let mut buf = Vec::new();
        write_observables(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.starts_with("unit_id,bit,dose,n_clicks,mean_ici,std_ici,"));
        assert!(text.contains(",6012.25,,"));
        let back = read_observables(buf.as_slice()).unwrap();
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(b, &ObservableRecord { coda_spectrum: None, ..a.clone() });
        }
    }

    #[test]
    fn missing_columns_named() {
        let err = read_observables("unit_id,bit,dose\n1,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("n_clicks"));
        assert!(err.to_string().contains("coda_spectral_mean_hz"));
    }

    #[test]
    fn bad_value_is_data_error() {
        let mut text = OBSERVABLE_COLUMNS.join(",");
        text.push_str("\n1,0,zero,3,,,,,\n");
        assert!(matches!(read_observables(text.as_bytes()), Err(Error::Data(_))));
    }

    #[test]
    fn spectra_round_trip_and_grids() {
        let recs = vec![rec(1, 0, 0.0), rec(0, 0, 0.0), rec(0, 0, 1.0), rec(0, 2, 1.0)];
        let mut buf = Vec::new();
        write_spectra(&recs, &mut buf).unwrap();
        let entries = read_spectra(buf.as_slice()).unwrap();
        assert_eq!(entries.len(), 4);
        assert_eq!(entries, record_spectra(&recs));
        let grids = spectra_grids(entries);
        assert_eq!(grids.len(), 2);
        assert_eq!(grids[0].doses, vec![0.0, 1.0]);
        assert_eq!(grids[0].spectra[0].iter().map(|e| e.0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn out_of_order_spectra_rejected() {
        let text = "bit,dose,unit_id,bin_index,power,freq_hz\n0,0,0,1,0.5,10\n";
        assert!(matches!(read_spectra(text.as_bytes()), Err(Error::Data(_))));
    }
}
