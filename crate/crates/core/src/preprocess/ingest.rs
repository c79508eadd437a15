use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pollutant columns of the CPCB `city_day` extract that are kept as model
/// inputs. Xylene is present in the extract but dropped.
pub const CPCB_FEATURES: [&str; 11] = [
    "PM2.5", "PM10", "NO", "NO2", "NOx", "NH3", "CO", "SO2", "O3", "Benzene", "Toluene",
];

/// Column layout of an input CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    pub date_column: String,
    pub features: Vec<String>,
    pub aqi_column: String,
    /// Columns that are recognised and deliberately ignored.
    pub dropped: Vec<String>,
    pub city_column: String,
    /// Keep only rows whose city column equals this value.
    pub city: Option<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            date_column: "Date".into(),
            features: CPCB_FEATURES.iter().map(|s| s.to_string()).collect(),
            aqi_column: "AQI".into(),
            dropped: vec!["Xylene".into()],
            city_column: "City".into(),
            city: None,
        }
    }
}

/// Daily pollutant table as read from disk. Absent cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub dates: Vec<NaiveDate>,
    pub features: Vec<String>,
    /// One column per feature, aligned with `dates`.
    pub values: Vec<Vec<Option<f64>>>,
    /// `None` when the file has no AQI column.
    pub aqi: Option<Vec<Option<f64>>>,
    /// Header columns that matched `Schema::dropped`.
    pub dropped_columns: Vec<String>,
}

impl RawSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.features
            .iter()
            .position(|f| f == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn missing_count(&self, name: &str) -> Option<usize> {
        self.column(name).map(|c| c.iter().filter(|v| v.is_none()).count())
    }
}

fn parse_cell(raw: &str, line: usize, column: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| Error::Ingestion {
        row: line,
        column: column.to_string(),
        message: format!("cannot parse '{s}' as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Ingestion {
            row: line,
            column: column.to_string(),
            message: format!("non-finite value '{s}'"),
        });
    }
    Ok(Some(v))
}

/// Reads a header-first CSV. Row numbers in errors are 1-based file lines.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Ingestion {
            row: 1,
            column: String::new(),
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let missing = |name: &str| Error::Ingestion {
        row: 1,
        column: name.to_string(),
        message: "required column is missing from the header".into(),
    };

    let date_idx = find(&schema.date_column).ok_or_else(|| missing(&schema.date_column))?;
    let feature_idx: Vec<usize> = schema
        .features
        .iter()
        .map(|f| find(f).ok_or_else(|| missing(f)))
        .collect::<Result<_>>()?;
    let aqi_idx = find(&schema.aqi_column);
    let city_idx = match &schema.city {
        Some(_) => Some(find(&schema.city_column).ok_or_else(|| missing(&schema.city_column))?),
        None => None,
    };
    let dropped_columns = schema.dropped.iter().filter(|d| find(d).is_some()).cloned().collect();

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values = vec![Vec::new(); schema.features.len()];
    let mut aqi = aqi_idx.map(|_| Vec::new());

    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Ingestion {
            row: line,
            column: String::new(),
            message: e.to_string(),
        })?;
        if let (Some(ci), Some(city)) = (city_idx, &schema.city) {
            if rec.get(ci).map(str::trim) != Some(city.as_str()) {
                continue;
            }
        }
        let raw_date = rec.get(date_idx).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| Error::Ingestion {
            row: line,
            column: schema.date_column.clone(),
            message: format!("cannot parse '{raw_date}' as an ISO-8601 date"),
        })?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(Error::Ingestion {
                    row: line,
                    column: schema.date_column.clone(),
                    message: format!("date {date} does not follow {prev}"),
                });
            }
        }
        dates.push(date);
        for ((col, &idx), name) in values.iter_mut().zip(&feature_idx).zip(&schema.features) {
            col.push(parse_cell(rec.get(idx).unwrap_or(""), line, name)?);
        }
        if let (Some(col), Some(idx)) = (aqi.as_mut(), aqi_idx) {
            col.push(parse_cell(rec.get(idx).unwrap_or(""), line, &schema.aqi_column)?);
        }
    }

    Ok(RawSeries {
        dates,
        features: schema.features.clone(),
        values,
        aqi,
        dropped_columns,
    })
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<RawSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}
