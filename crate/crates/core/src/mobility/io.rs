//! CSV ingestion and serialisation.
//!
//! Accepted header: `user_id,traj_id,timestamp,lat,lon[,category]` for geographic
//! input, or `user_id,traj_id,timestamp,x,y[,category]` for coordinates already in
//! a metric CRS. Timestamps are integer/decimal seconds or ISO-8601 strings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use super::projection::{AzimuthalEquidistant, Crs};
use super::{CategoryVocabulary, Dataset, DatasetMeta, GeoPoint, TrajPoint, Trajectory};
use crate::error::{Error, Result};

/// Column names used to locate each field.
#[derive(Clone, Debug)]
pub struct CsvSchema {
    pub user_id: String,
    pub traj_id: String,
    pub timestamp: String,
    pub lat: String,
    pub lon: String,
    pub x: String,
    pub y: String,
    pub category: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            user_id: "user_id".into(),
            traj_id: "traj_id".into(),
            timestamp: "timestamp".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            x: "x".into(),
            y: "y".into(),
            category: "category".into(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    /// Projection for geographic input. `None` centres an azimuthal-equidistant
    /// projection on the bounding-box midpoint of the data.
    pub crs: Option<Crs>,
    /// Known category labels.
    pub vocabulary: Option<CategoryVocabulary>,
    /// Reject labels that are not in `vocabulary` instead of appending them.
    pub strict_vocabulary: bool,
    /// Drop trajectories shorter than this many points.
    pub min_length: Option<usize>,
    pub name: Option<String>,
}

struct Row {
    line: u64,
    user: String,
    traj: String,
    t: f64,
    a: f64,
    b: f64,
    category: Option<String>,
}

pub fn ingest_csv(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
    opts: &IngestOptions,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| Error::MissingColumn(name.to_string()));

    let user_c = need(&schema.user_id)?;
    let traj_c = need(&schema.traj_id)?;
    let time_c = need(&schema.timestamp)?;
    let (geographic, a_c, b_c) = match (col(&schema.lat), col(&schema.lon)) {
        (Some(la), Some(lo)) => (true, la, lo),
        _ => match (col(&schema.x), col(&schema.y)) {
            (Some(x), Some(y)) => (false, x, y),
            _ => {
                let missing = if col(&schema.lat).is_none() {
                    &schema.lat
                } else {
                    &schema.lon
                };
                return Err(Error::MissingColumn(missing.clone()));
            }
        },
    };
    let cat_c = col(&schema.category);

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let parse_f = |i: usize, what: &str| -> Result<f64> {
            let raw = field(i);
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse {what} `{raw}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite {what}"),
                });
            }
            Ok(v)
        };
        let t = parse_timestamp(field(time_c)).ok_or_else(|| Error::Parse {
            line,
            message: format!("cannot parse timestamp `{}`", field(time_c)),
        })?;
        let a = parse_f(a_c, if geographic { "latitude" } else { "x" })?;
        let b = parse_f(b_c, if geographic { "longitude" } else { "y" })?;
        if geographic && (a.abs() > 90.0 || b.abs() > 180.0) {
            return Err(Error::Parse {
                line,
                message: format!("coordinate ({a}, {b}) out of range"),
            });
        }
        let category = cat_c
            .map(|c| field(c).to_string())
            .filter(|s| !s.is_empty());
        let user = field(user_c).to_string();
        let traj = field(traj_c).to_string();
        if user.is_empty() || traj.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty user_id or traj_id".into(),
            });
        }
        rows.push(Row {
            line,
            user,
            traj,
            t,
            a,
            b,
            category,
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty(format!("{} has no data rows", path.display())));
    }

    let crs = if geographic {
        match opts.crs {
            Some(c @ Crs::AzimuthalEquidistant(_)) => c,
            _ => {
                let (mut lat_lo, mut lat_hi) = (f64::INFINITY, f64::NEG_INFINITY);
                let (mut lon_lo, mut lon_hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for r in &rows {
                    lat_lo = lat_lo.min(r.a);
                    lat_hi = lat_hi.max(r.a);
                    lon_lo = lon_lo.min(r.b);
                    lon_hi = lon_hi.max(r.b);
                }
                Crs::AzimuthalEquidistant(AzimuthalEquidistant::new(
                    (lat_lo + lat_hi) / 2.0,
                    (lon_lo + lon_hi) / 2.0,
                ))
            }
        }
    } else {
        Crs::Projected
    };

    let mut vocabulary = opts.vocabulary.clone().unwrap_or_default();
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, (String, Vec<TrajPoint>)> = HashMap::new();
    for r in rows {
        let category = match &r.category {
            None => None,
            Some(label) => match vocabulary.id(label) {
                Some(id) => Some(id),
                None if opts.strict_vocabulary => {
                    return Err(Error::UnknownCategory {
                        line: r.line,
                        label: label.clone(),
                    })
                }
                None => Some(vocabulary.push(label)),
            },
        };
        let point = match crs.projection() {
            Some(p) => {
                let (x, y) = p.forward(r.a, r.b);
                GeoPoint {
                    x,
                    y,
                    lat_lon: Some((r.a, r.b)),
                }
            }
            None => GeoPoint::new(r.a, r.b),
        };
        let entry = groups.entry(r.traj.clone()).or_insert_with(|| {
            order.push(r.traj.clone());
            (r.user.clone(), Vec::new())
        });
        if entry.0 != r.user {
            return Err(Error::Parse {
                line: r.line,
                message: format!(
                    "trajectory `{}` belongs to both `{}` and `{}`",
                    r.traj, entry.0, r.user
                ),
            });
        }
        entry.1.push(TrajPoint {
            point,
            timestamp: r.t,
            category,
        });
    }

    let mut trajectories = Vec::with_capacity(order.len());
    for id in order {
        let (user, mut points) = groups.remove(&id).expect("grouped above");
        points.sort_by(|p, q| p.timestamp.total_cmp(&q.timestamp));
        if opts.min_length.is_some_and(|m| points.len() < m) {
            continue;
        }
        trajectories.push(Trajectory {
            traj_id: id,
            user_id: user,
            points,
        });
    }
    let name = opts.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Dataset::new(
        trajectories,
        DatasetMeta {
            name,
            crs,
            vocabulary,
        },
    )
}

fn parse_timestamp(raw: &str) -> Option<f64> {
    if let Ok(v) = raw.parse::<i64>() {
        return Some(v as f64);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp() as f64 + dt.timestamp_subsec_nanos() as f64 * 1e-9);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            let utc = dt.and_utc();
            return Some(utc.timestamp() as f64 + utc.timestamp_subsec_nanos() as f64 * 1e-9);
        }
    }
    None
}

fn format_timestamp(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 9.0e15 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

/// Writes the dataset in the CSV layout accepted by [`ingest_csv`].
///
/// Geographic datasets are written as `lat,lon`; points without remembered source
/// coordinates are inverse-projected.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let projection = d.meta().crs.projection().copied();
    let with_category = d.has_categories();
    let mut header = vec!["user_id", "traj_id", "timestamp"];
    header.extend(if projection.is_some() {
        ["lat", "lon"]
    } else {
        ["x", "y"]
    });
    if with_category {
        header.push("category");
    }
    w.write_record(&header)?;
    for t in d.trajectories() {
        for p in &t.points {
            let (a, b) = match projection {
                Some(proj) => p
                    .point
                    .lat_lon
                    .unwrap_or_else(|| proj.inverse(p.point.x, p.point.y)),
                None => (p.point.x, p.point.y),
            };
            let mut rec = vec![
                t.user_id.clone(),
                t.traj_id.clone(),
                format_timestamp(p.timestamp),
                format!("{a}"),
                format!("{b}"),
            ];
            if with_category {
                rec.push(
                    p.category
                        .and_then(|c| d.vocabulary().label(c))
                        .unwrap_or("")
                        .to_string(),
                );
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes the JSON metadata sidecar (name, CRS, vocabulary).
pub fn write_metadata(meta: &DatasetMeta, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), meta)?;
    Ok(())
}

pub fn read_metadata(path: impl AsRef<Path>) -> Result<DatasetMeta> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_rows_one_trajectory() {
        let f = write_tmp(
            "user_id,traj_id,timestamp,lat,lon\n\
             u1,t1,120,40.70,-74.00\n\
             u1,t1,0,40.71,-74.01\n\
             u1,t1,60,40.72,-74.02\n",
        );
        let d = ingest_csv(f.path(), &CsvSchema::default(), &IngestOptions::default()).unwrap();
        assert_eq!(d.len(), 1);
        let t = &d.trajectories()[0];
        assert_eq!(t.len(), 3);
        let times: Vec<f64> = t.points.iter().map(|p| p.timestamp).collect();
        assert_eq!(times, vec![0.0, 60.0, 120.0]);
        assert!(matches!(d.meta().crs, Crs::AzimuthalEquidistant(_)));
    }

    #[test]
    fn two_users_two_trajectories() {
        let f = write_tmp(
            "user_id,traj_id,timestamp,x,y\n\
             a,t1,0,0,0\na,t2,0,1,1\nb,t3,0,2,2\nb,t4,0,3,3\n",
        );
        let d = ingest_csv(f.path(), &CsvSchema::default(), &IngestOptions::default()).unwrap();
        assert_eq!(d.users().len(), 2);
        assert_eq!(d.len(), 4);
        assert_eq!(d.meta().crs, Crs::Projected);
    }

    #[test]
    fn unknown_category_with_strict_vocabulary_names_the_label() {
        let f = write_tmp(
            "user_id,traj_id,timestamp,x,y,category\n\
             a,t1,0,0,0,leisure\na,t1,5,0,0,spaceport\n",
        );
        let opts = IngestOptions {
            vocabulary: Some(CategoryVocabulary::osm_activity()),
            strict_vocabulary: true,
            ..Default::default()
        };
        let err = ingest_csv(f.path(), &CsvSchema::default(), &opts).unwrap_err();
        match err {
            Error::UnknownCategory { label, line } => {
                assert_eq!(label, "spaceport");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_column_and_bad_row_are_reported() {
        let f = write_tmp("user_id,timestamp,x,y\na,0,0,0\n");
        assert!(matches!(
            ingest_csv(f.path(), &CsvSchema::default(), &IngestOptions::default()),
            Err(Error::MissingColumn(c)) if c == "traj_id"
        ));
        let f = write_tmp("user_id,traj_id,timestamp,x,y\na,t,0,0,0\na,t,zz,1,1\n");
        assert!(matches!(
            ingest_csv(f.path(), &CsvSchema::default(), &IngestOptions::default()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn iso_timestamps_are_detected() {
        assert_eq!(parse_timestamp("1970-01-01T00:01:00Z"), Some(60.0));
        assert_eq!(parse_timestamp("1970-01-01 00:02:00"), Some(120.0));
        assert_eq!(parse_timestamp("42"), Some(42.0));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn min_length_filter_drops_short_trajectories() {
        let f = write_tmp("user_id,traj_id,timestamp,x,y\na,t1,0,0,0\na,t2,0,0,0\na,t2,1,1,1\n");
        let opts = IngestOptions {
            min_length: Some(2),
            ..Default::default()
        };
        let d = ingest_csv(f.path(), &CsvSchema::default(), &opts).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.trajectories()[0].traj_id, "t2");
    }
}
