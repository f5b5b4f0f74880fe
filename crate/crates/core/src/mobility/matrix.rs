use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{age_bin_label, LocationKind, N_AGE_BINS};

/// Location grouping shared by contact matrices and behavior levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactCategory {
    Household = 0,
    Workplace = 1,
    School = 2,
    Other = 3,
}

impl ContactCategory {
    pub const COUNT: usize = 4;
    pub const ALL: [ContactCategory; 4] = [
        ContactCategory::Household,
        ContactCategory::Workplace,
        ContactCategory::School,
        ContactCategory::Other,
    ];

    pub fn of(kind: LocationKind) -> Self {
        match kind {
            LocationKind::Household | LocationKind::SeniorResidence => ContactCategory::Household,
            LocationKind::Workplace | LocationKind::Hospital => ContactCategory::Workplace,
            LocationKind::School => ContactCategory::School,
            LocationKind::CommonRoom
            | LocationKind::Store
            | LocationKind::Park
            | LocationKind::Restaurant => ContactCategory::Other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContactCategory::Household => "household",
            ContactCategory::Workplace => "workplace",
            ContactCategory::School => "school",
            ContactCategory::Other => "other",
        }
    }

    /// Hours of presence the matrix row is assumed to describe.
    pub fn typical_hours(self) -> f64 {
        match self {
            ContactCategory::Household => 14.0,
            ContactCategory::Workplace => 8.0,
            ContactCategory::School => 8.0,
            ContactCategory::Other => 1.5,
        }
    }
}

pub type Matrix = [[f64; N_AGE_BINS]; N_AGE_BINS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMatrix {
    pub category: ContactCategory,
    /// `m[a][b]`: mean daily contacts of a bin-`a` person with bin-`b` people.
    pub m: Matrix,
    /// Mean encounter duration in minutes (exponential, capped by co-presence).
    pub mean_duration_min: f64,
}

impl ContactMatrix {
    pub fn row_sum(&self, bin: usize) -> f64 {
        self.m[bin].iter().sum()
    }

    pub fn from_csv(category: ContactCategory, mean_duration_min: f64, reader: impl Read) -> Result<Self> {
        let what = format!("{} contact matrix", category.name());
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::parse(&what, e))?.clone();
        if headers.len() != N_AGE_BINS + 1 {
            return Err(Error::parse(&what, format!("expected {} columns", N_AGE_BINS + 1)));
        }
        let mut m = [[0.0; N_AGE_BINS]; N_AGE_BINS];
        let mut rows = 0;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(&what, e))?;
            if i >= N_AGE_BINS || rec.len() != N_AGE_BINS + 1 {
                return Err(Error::parse(&what, format!("row {} has the wrong shape", i + 1)));
            }
            for j in 0..N_AGE_BINS {
                let v: f64 = rec[j + 1]
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse(&what, format!("row {}, column {}: {e}", i + 1, j + 1)))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::parse(&what, "entries must be non-negative"));
                }
                m[i][j] = v;
            }
            rows += 1;
        }
        if rows != N_AGE_BINS {
            return Err(Error::parse(&what, format!("expected {N_AGE_BINS} rows, got {rows}")));
        }
        Ok(Self {
            category,
            m,
            mean_duration_min,
        })
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::parse("contact matrix output", e);
        let mut header = vec!["bin".to_string()];
        header.extend((0..N_AGE_BINS).map(age_bin_label));
        w.write_record(&header).map_err(io)?;
        for (i, row) in self.m.iter().enumerate() {
            let mut rec = vec![age_bin_label(i)];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::parse("contact matrix output", e))?;
        Ok(())
    }
}

/// One matrix per [`ContactCategory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMatrices(pub [ContactMatrix; ContactCategory::COUNT]);

impl ContactMatrices {
    pub fn get(&self, cat: ContactCategory) -> &ContactMatrix {
        &self.0[cat as usize]
    }
}

impl Default for ContactMatrices {
    fn default() -> Self {
        let load = |cat, dur, src: &str| ContactMatrix::from_csv(cat, dur, src.as_bytes()).expect("bundled matrix");
        ContactMatrices([
            load(ContactCategory::Household, 60.0, include_str!("../../data/contacts_household.csv")),
            load(ContactCategory::Workplace, 30.0, include_str!("../../data/contacts_workplace.csv")),
            load(ContactCategory::School, 30.0, include_str!("../../data/contacts_school.csv")),
            load(ContactCategory::Other, 20.0, include_str!("../../data/contacts_other.csv")),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_matrices_load() {
        let ms = ContactMatrices::default();
        for cat in ContactCategory::ALL {
            assert_eq!(ms.get(cat).category, cat);
        }
        assert_eq!(ms.get(ContactCategory::Workplace).row_sum(0), 0.0);
        assert!(ms.get(ContactCategory::School).row_sum(1) > 5.0);
    }

    #[test]
    fn csv_write_then_read() {
        let m = ContactMatrices::default().get(ContactCategory::Other).clone();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = ContactMatrix::from_csv(m.category, m.mean_duration_min, buf.as_slice()).unwrap();
        for i in 0..N_AGE_BINS {
            for j in 0..N_AGE_BINS {
                assert!((back.m[i][j] - m.m[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let bad = "bin,a,b\n0-9,1,2\n";
        assert!(ContactMatrix::from_csv(ContactCategory::Other, 20.0, bad.as_bytes()).is_err());
    }
}
